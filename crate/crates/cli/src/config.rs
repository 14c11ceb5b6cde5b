use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use hpfold::benchmark;
use hpfold::dqn::TrainerConfig;
use hpfold::lattice::HpSequence;
use hpfold::nn::Architecture;
use serde::{Deserialize, Serialize};

use crate::Usage;

/// Everything needed to rerun a training command. Trainer fields sit at the
/// top level next to the sequence selection.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub benchmark_id: Option<String>,
    pub sequence: Option<String>,
    pub out: Option<PathBuf>,
    pub seeds: Vec<u64>,
    #[serde(flatten)]
    pub trainer: TrainerConfig,
}

pub struct Loaded {
    pub run: RunConfig,
    /// Whether the file set `episodes` itself.
    pub has_episodes: bool,
}

pub fn load(path: Option<&Path>) -> anyhow::Result<Loaded> {
    let Some(path) = path else {
        return Ok(Loaded {
            run: RunConfig::default(),
            has_episodes: false,
        });
    };
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| Usage(format!("{}: {e}", path.display())))?;
    let has_episodes = value.get("episodes").is_some();
    let run = serde_json::from_value(value).map_err(|e| Usage(format!("{}: {e}", path.display())))?;
    Ok(Loaded { run, has_episodes })
}

pub struct Target {
    /// Benchmark id, or the sequence itself for ad-hoc input.
    pub id: String,
    pub sequence: HpSequence,
    pub default_episodes: Option<usize>,
}

pub fn resolve_target(benchmark_id: Option<&str>, sequence: Option<&str>) -> anyhow::Result<Target> {
    match (benchmark_id, sequence) {
        (Some(_), Some(_)) => Err(Usage("give either a benchmark id or a sequence, not both".into()).into()),
        (Some(id), None) => {
            let e = benchmark::entry(id)?;
            Ok(Target {
                id: e.id,
                sequence: e.sequence,
                default_episodes: Some(e.episodes_default),
            })
        }
        (None, Some(s)) => {
            let sequence: HpSequence = s.parse()?;
            Ok(Target {
                id: hpfold::confdb::sequence_id_for(&sequence),
                sequence,
                default_episodes: None,
            })
        }
        (None, None) => Err(Usage("no sequence given (use --seq or --benchmark-id)".into()).into()),
    }
}

/// `lstm2x256`, `lstm3x512`, `lstm<L>x<H>`, `fcn<L>x<H>`, or `fcn` for the
/// fully connected net sized like the default LSTM for `rows` monomers.
pub fn parse_arch(s: &str, rows: usize) -> anyhow::Result<Architecture> {
    let bad = || {
        Usage(format!(
            "unknown architecture {s:?} (try lstm2x256, lstm3x512, fcn, lstm<L>x<H>)"
        ))
    };
    let lower = s.to_ascii_lowercase();
    if lower == "fcn" {
        return Ok(Architecture::fcn_matching(Architecture::default_for_len(rows), rows));
    }
    let (lstm, dims) = if let Some(d) = lower.strip_prefix("lstm") {
        (true, d)
    } else if let Some(d) = lower.strip_prefix("fcn") {
        (false, d)
    } else {
        return Err(bad().into());
    };
    let (l, h) = dims.split_once('x').ok_or_else(bad)?;
    let layers: usize = l.parse().map_err(|_| bad())?;
    let hidden: usize = h.parse().map_err(|_| bad())?;
    if layers == 0 || hidden == 0 {
        return Err(bad().into());
    }
    Ok(if lstm {
        Architecture::Lstm { layers, hidden }
    } else {
        Architecture::Fcn { layers, hidden, rows }
    })
}
