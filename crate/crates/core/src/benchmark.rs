//! The benchmark sequences, multi-seed trial orchestration and curve
//! post-processing (moving minimum, seed bands).

use std::collections::{HashSet, VecDeque};
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dqn::{CurveRow, Mode, Trainer, TrainerConfig, TrainingResult};
use crate::error::{Error, Result};
use crate::lattice::HpSequence;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BenchmarkEntry {
    pub id: String,
    pub sequence: HpSequence,
    pub best_known_energy: i32,
    pub episodes_default: usize,
}

const TABLE: [(&str, &str, i32, usize); 7] = [
    ("20mer-A", "HPHPPHHPHPPHPHHPPHPH", -9, 100_000),
    ("20mer-B", "HHHPPHPHPHPPHPHPHPPH", -10, 100_000),
    ("24mer", "HHPPHPPHPPHPPHPPHPPHPPHH", -9, 500_000),
    ("25mer", "PPHPPHHPPPPHHPPPPHHPPPPHH", -8, 500_000),
    ("36mer", "PPPHHPPHHPPPPPHHHHHHHPPHHPPPPHHPPHPP", -14, 500_000),
    (
        "48mer",
        "PPHPPHHPPHHPPPPPHHHHHHHHHHPPPPPPHHPPHHPPHPPHHHHH",
        -23,
        600_000,
    ),
    (
        "50mer",
        "HHPHPHPHPHHHHPHPPPHPPPHPPPPHPPPHPPPHPHHHHPHPHPHPHH",
        -21,
        600_000,
    ),
];

pub fn entries() -> Vec<BenchmarkEntry> {
    TABLE
        .iter()
        .map(|&(id, seq, e, episodes)| BenchmarkEntry {
            id: id.to_string(),
            sequence: seq.parse().expect("benchmark sequences are valid"),
            best_known_energy: e,
            episodes_default: episodes,
        })
        .collect()
}

pub fn entry(id: &str) -> Result<BenchmarkEntry> {
    entries()
        .into_iter()
        .find(|e| e.id.eq_ignore_ascii_case(id))
        .ok_or_else(|| Error::UnknownBenchmark(id.to_string()))
}

/// Lowest energies published by other methods, for display next to results.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ReferenceRow {
    pub id: &'static str,
    pub ant_colony_q: Option<i32>,
    pub folding_zero: Option<i32>,
    pub tabular_q: Option<i32>,
    pub deep_rl: Option<i32>,
    pub zero_pretrained: Option<i32>,
    pub random: i32,
    pub dqn_lstm: i32,
    pub best_known: i32,
}

pub const REFERENCE: [ReferenceRow; 7] = [
    ReferenceRow {
        id: "20mer-A",
        ant_colony_q: None,
        folding_zero: Some(-9),
        tabular_q: Some(-9),
        deep_rl: Some(-6),
        zero_pretrained: Some(-8),
        random: -9,
        dqn_lstm: -9,
        best_known: -9,
    },
    ReferenceRow {
        id: "20mer-B",
        ant_colony_q: None,
        folding_zero: None,
        tabular_q: Some(-10),
        deep_rl: Some(-8),
        zero_pretrained: Some(-9),
        random: -9,
        dqn_lstm: -10,
        best_known: -10,
    },
    ReferenceRow {
        id: "24mer",
        ant_colony_q: Some(-9),
        folding_zero: Some(-8),
        tabular_q: None,
        deep_rl: Some(-6),
        zero_pretrained: Some(-8),
        random: -9,
        dqn_lstm: -9,
        best_known: -9,
    },
    ReferenceRow {
        id: "25mer",
        ant_colony_q: None,
        folding_zero: Some(-7),
        tabular_q: None,
        deep_rl: None,
        zero_pretrained: Some(-7),
        random: -7,
        dqn_lstm: -8,
        best_known: -8,
    },
    ReferenceRow {
        id: "36mer",
        ant_colony_q: Some(-13),
        folding_zero: Some(-13),
        tabular_q: None,
        deep_rl: None,
        zero_pretrained: Some(-13),
        random: -12,
        dqn_lstm: -14,
        best_known: -14,
    },
    ReferenceRow {
        id: "48mer",
        ant_colony_q: Some(-19),
        folding_zero: Some(-18),
        tabular_q: None,
        deep_rl: None,
        zero_pretrained: None,
        random: -17,
        dqn_lstm: -23,
        best_known: -23,
    },
    ReferenceRow {
        id: "50mer",
        ant_colony_q: None,
        folding_zero: Some(-18),
        tabular_q: None,
        deep_rl: None,
        zero_pretrained: None,
        random: -15,
        dqn_lstm: -21,
        best_known: -21,
    },
];

pub fn reference(id: &str) -> Option<&'static ReferenceRow> {
    REFERENCE.iter().find(|r| r.id.eq_ignore_ascii_case(id))
}

/// Directory name of one trial.
pub fn trial_label(id: &str, mode: Mode, seed: u64) -> String {
    format!("{id}_{}_seed{seed}", mode.as_str())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialSummary {
    pub entry: String,
    pub seed: u64,
    pub mode: Mode,
    pub episodes: usize,
    pub architecture: String,
    pub best_known_energy: i32,
    pub lowest_energy: Option<i32>,
    pub first_episode: Option<usize>,
    pub best_known_distinct: usize,
    pub next_best_distinct: usize,
    pub complete_ratio: f64,
    /// Lower than the published best: kept and flagged, never rejected.
    pub below_best_known: bool,
    pub best_actions: Option<String>,
}

impl TrialSummary {
    pub fn from_result(entry: &BenchmarkEntry, config: &TrainerConfig, result: &TrainingResult) -> Self {
        let distinct = |e: i32| {
            result
                .best_log
                .iter()
                .filter(|b| b.energy == e)
                .map(|b| b.actions.as_str())
                .collect::<HashSet<_>>()
                .len()
        };
        Self {
            entry: entry.id.clone(),
            seed: config.seed,
            mode: config.mode,
            episodes: config.episodes,
            architecture: config.architecture_for(entry.sequence.len()).tag(),
            best_known_energy: entry.best_known_energy,
            lowest_energy: result.best_energy,
            first_episode: result.best_episode,
            best_known_distinct: distinct(entry.best_known_energy),
            next_best_distinct: distinct(entry.best_known_energy + 1),
            complete_ratio: result.complete_ratio,
            below_best_known: result.best_energy.is_some_and(|e| e < entry.best_known_energy),
            best_actions: result.best_actions.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub entry: String,
    pub mode: Mode,
    pub seed: u64,
    pub label: String,
    pub summary: Option<TrialSummary>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteConfig {
    pub entries: Vec<String>,
    pub modes: Vec<Mode>,
    pub seeds: Vec<u64>,
    pub episodes_override: Option<usize>,
    /// Template for every trial; episodes, seed and mode are set per trial.
    pub base: TrainerConfig,
    pub workers: usize,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            entries: entries().into_iter().map(|e| e.id).collect(),
            modes: vec![Mode::Rand, Mode::Drl],
            seeds: vec![0, 1, 2, 3],
            episodes_override: None,
            base: TrainerConfig::default(),
            workers: 1,
        }
    }
}

struct Trial {
    entry: BenchmarkEntry,
    config: TrainerConfig,
    label: String,
}

fn run_trial(trial: &Trial, out_root: Option<&Path>) -> Result<(TrainingResult, TrialSummary)> {
    let dir = out_root.map(|r| r.join(&trial.label));
    let mut trainer = Trainer::new(&trial.entry.sequence, &trial.config)?.with_label(&trial.label);
    let result = trainer.run(dir.as_deref())?;
    let summary = TrialSummary::from_result(&trial.entry, &trial.config, &result);
    Ok((result, summary))
}

fn panic_message(p: Box<dyn std::any::Any + Send>) -> String {
    p.downcast_ref::<&str>()
        .map(|s| s.to_string())
        .or_else(|| p.downcast_ref::<String>().cloned())
        .unwrap_or_else(|| "trial panicked".into())
}

/// Runs every (entry, mode, seed) trial on a pool of `workers` threads. A
/// failing or panicking trial is reported in its outcome and never stops
/// the others. With `out_root`, each trial writes into its own directory
/// and the suite writes `summary.csv` and `summary.json`.
pub fn run_suite(config: &SuiteConfig, out_root: Option<&Path>) -> Result<Vec<TrialOutcome>> {
    let chosen: Vec<BenchmarkEntry> = config.entries.iter().map(|id| entry(id)).collect::<Result<_>>()?;
    let mut trials = Vec::new();
    for e in &chosen {
        for &mode in &config.modes {
            for &seed in &config.seeds {
                let config = TrainerConfig {
                    episodes: config.episodes_override.unwrap_or(e.episodes_default),
                    seed,
                    mode,
                    ..config.base.clone()
                };
                trials.push(Trial {
                    entry: e.clone(),
                    label: trial_label(&e.id, mode, seed),
                    config,
                });
            }
        }
    }
    if let Some(root) = out_root {
        fs::create_dir_all(root).map_err(|e| Error::io(root, e))?;
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers.max(1))
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    let outcomes: Vec<TrialOutcome> = pool.install(|| {
        trials
            .par_iter()
            .with_max_len(1)
            .map(|t| {
                let run = catch_unwind(AssertUnwindSafe(|| run_trial(t, out_root)));
                let (summary, error) = match run {
                    Ok(Ok((_, s))) => (Some(s), None),
                    Ok(Err(e)) => (None, Some(e.to_string())),
                    Err(p) => (None, Some(panic_message(p))),
                };
                TrialOutcome {
                    entry: t.entry.id.clone(),
                    mode: t.config.mode,
                    seed: t.config.seed,
                    label: t.label.clone(),
                    summary,
                    error,
                }
            })
            .collect()
    });
    if let Some(root) = out_root {
        write_summary(root, &outcomes)?;
    }
    Ok(outcomes)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct SummaryRow {
    entry: String,
    mode: Mode,
    seed: u64,
    status: String,
    episodes: Option<usize>,
    architecture: Option<String>,
    lowest_energy: Option<i32>,
    best_known_energy: Option<i32>,
    first_episode: Option<usize>,
    best_known_distinct: Option<usize>,
    next_best_distinct: Option<usize>,
    complete_ratio: Option<f64>,
    below_best_known: Option<bool>,
}

/// Lowest energy per entry and mode across seeds, next to the published
/// columns.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub entry: String,
    pub best_known: Option<i32>,
    pub rand: Option<i32>,
    pub drl: Option<i32>,
    pub reference: Option<ReferenceRow>,
}

pub fn comparison(outcomes: &[TrialOutcome]) -> Vec<ComparisonRow> {
    let mut ids: Vec<&str> = Vec::new();
    for o in outcomes {
        if !ids.contains(&o.entry.as_str()) {
            ids.push(&o.entry);
        }
    }
    ids.into_iter()
        .map(|id| {
            let lowest = |mode: Mode| {
                outcomes
                    .iter()
                    .filter(|o| o.entry == id && o.mode == mode)
                    .filter_map(|o| o.summary.as_ref()?.lowest_energy)
                    .min()
            };
            ComparisonRow {
                entry: id.to_string(),
                best_known: entry(id).ok().map(|e| e.best_known_energy),
                rand: lowest(Mode::Rand),
                drl: lowest(Mode::Drl),
                reference: reference(id).copied(),
            }
        })
        .collect()
}

pub fn write_summary(root: &Path, outcomes: &[TrialOutcome]) -> Result<()> {
    let csv_path = root.join("summary.csv");
    let mut w = csv::Writer::from_path(&csv_path)?;
    for o in outcomes {
        let s = o.summary.as_ref();
        w.serialize(SummaryRow {
            entry: o.entry.clone(),
            mode: o.mode,
            seed: o.seed,
            status: match &o.error {
                None => "ok".into(),
                Some(e) => format!("failed: {e}"),
            },
            episodes: s.map(|s| s.episodes),
            architecture: s.map(|s| s.architecture.clone()),
            lowest_energy: s.and_then(|s| s.lowest_energy),
            best_known_energy: s.map(|s| s.best_known_energy),
            first_episode: s.and_then(|s| s.first_episode),
            best_known_distinct: s.map(|s| s.best_known_distinct),
            next_best_distinct: s.map(|s| s.next_best_distinct),
            complete_ratio: s.map(|s| s.complete_ratio),
            below_best_known: s.map(|s| s.below_best_known),
        })?;
    }
    w.flush().map_err(|e| Error::io(&csv_path, e))?;
    let json_path = root.join("summary.json");
    let doc = serde_json::json!({
        "trials": outcomes,
        "comparison": comparison(outcomes),
    });
    fs::write(&json_path, serde_json::to_string_pretty(&doc)? + "\n").map_err(|e| Error::io(&json_path, e))
}

/// `out[i] = min(values[max(0, i - window + 1) ..= i])`.
pub fn moving_minimum(values: &[i32], window: usize) -> Result<Vec<i32>> {
    if window == 0 {
        return Err(Error::Config("moving-minimum window must be at least 1".into()));
    }
    let mut out = Vec::with_capacity(values.len());
    // Indices with strictly increasing values: the front is the window min.
    let mut q: VecDeque<usize> = VecDeque::new();
    for (i, &v) in values.iter().enumerate() {
        while q.back().is_some_and(|&j| values[j] >= v) {
            q.pop_back();
        }
        q.push_back(i);
        if q[0] + window <= i {
            q.pop_front();
        }
        out.push(values[q[0]]);
    }
    Ok(out)
}

/// Energies for plotting: incomplete episodes count as 0.
pub fn plot_energies(curve: &[CurveRow]) -> Vec<i32> {
    curve.iter().map(CurveRow::plot_energy).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub mean: Vec<f64>,
    /// Population standard deviation across seeds.
    pub std: Vec<f64>,
}

impl Band {
    pub fn len(&self) -> usize {
        self.mean.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mean.is_empty()
    }

    /// Whether the whole band (mean + std) lies strictly below `other`'s
    /// lower edge (mean - std) at index `i`.
    pub fn strictly_below_at(&self, other: &Band, i: usize) -> bool {
        self.mean[i] + self.std[i] < other.mean[i] - other.std[i]
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["episode", "mean", "std", "lower", "upper"])?;
        for (i, (m, s)) in self.mean.iter().zip(&self.std).enumerate() {
            w.write_record(&[
                i.to_string(),
                m.to_string(),
                s.to_string(),
                (m - s).to_string(),
                (m + s).to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

pub fn aggregate_seeds(curves: &[Vec<f64>]) -> Result<Band> {
    let Some(first) = curves.first() else {
        return Err(Error::LengthMismatch("no curves to aggregate".into()));
    };
    let len = first.len();
    if let Some(bad) = curves.iter().find(|c| c.len() != len) {
        return Err(Error::LengthMismatch(format!(
            "curves of length {len} and {}",
            bad.len()
        )));
    }
    let k = curves.len() as f64;
    let mut mean = vec![0.0; len];
    let mut std = vec![0.0; len];
    for i in 0..len {
        let m = curves.iter().map(|c| c[i]).sum::<f64>() / k;
        let var = curves.iter().map(|c| (c[i] - m).powi(2)).sum::<f64>() / k;
        mean[i] = m;
        std[i] = var.sqrt();
    }
    Ok(Band { mean, std })
}

/// Moving-minimum band over several seeds' curves.
pub fn seed_band(curves: &[Vec<CurveRow>], window: usize) -> Result<Band> {
    let mins: Vec<Vec<f64>> = curves
        .iter()
        .map(|c| {
            Ok(moving_minimum(&plot_energies(c), window)?
                .into_iter()
                .map(f64::from)
                .collect())
        })
        .collect::<Result<_>>()?;
    aggregate_seeds(&mins)
}

/// Curve files under `dir`: `dir/curve.csv` itself, or one per trial
/// subdirectory, sorted by path.
pub fn find_curves(dir: &Path) -> Result<Vec<PathBuf>> {
    let own = dir.join(crate::dqn::CURVE_FILE);
    if own.is_file() {
        return Ok(vec![own]);
    }
    let mut found = Vec::new();
    for e in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let p = e.map_err(|e| Error::io(dir, e))?.path().join(crate::dqn::CURVE_FILE);
        if p.is_file() {
            found.push(p);
        }
    }
    found.sort();
    Ok(found)
}
