use std::collections::HashSet;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::heuristics::{prune, PruneDecision};
use super::{epsilon_at, fit_batch, Experience, Mode, ReplayMemory, StepSettings, TargetSync, TrainerConfig};
use crate::checkpoint::{self, Checkpoint, CheckpointHeader};
use crate::encoding::encode;
use crate::error::{Error, Result};
use crate::lattice::{
    actions_to_string, reset, step_in_place, valid_actions, Action, ActionMask, EnvConfig, EpisodeStatus, HpSequence,
};
use crate::nn::{AdamState, Architecture, QNetwork};
use crate::rng::RngStreams;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const CURVE_FILE: &str = "curve.csv";
pub const BEST_FILE: &str = "best.jsonl";
pub const FINAL_CHECKPOINT: &str = "checkpoint.bin";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub episode: usize,
    /// Energy of the chain when the episode ended (partial if trapped).
    pub energy: i32,
    pub complete: bool,
    /// Monomers placed at the end, prefix included.
    pub length: usize,
    pub transitions: usize,
    pub epsilon: f64,
    pub pruned: bool,
    pub actions: Vec<Action>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub episode: usize,
    pub energy: i32,
    pub complete: bool,
    pub epsilon: f64,
}

impl CurveRow {
    /// Value used for plotting: incomplete walks count as energy 0.
    pub fn plot_energy(&self) -> i32 {
        if self.complete {
            self.energy
        } else {
            0
        }
    }
}

/// A complete conformation that was at most one contact short of the best
/// energy known when it first appeared.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BestRecord {
    pub episode: usize,
    pub energy: i32,
    pub actions: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainerProgress {
    pub best_energy: Option<i32>,
    pub best_episode: Option<usize>,
    pub best_actions: Option<String>,
    pub complete_episodes: usize,
    /// Keys already written to the best log, restricted to the tracked band.
    pub logged: Vec<(i32, String)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingResult {
    pub curve: Vec<CurveRow>,
    pub best_energy: Option<i32>,
    pub best_episode: Option<usize>,
    pub best_actions: Option<String>,
    pub best_log: Vec<BestRecord>,
    pub checkpoints: Vec<PathBuf>,
    pub updates: u64,
    pub syncs: usize,
    pub complete_ratio: f64,
}

/// Owns one trial: networks, optimizer, replay memory and RNG streams.
pub struct Trainer {
    seq: HpSequence,
    config: TrainerConfig,
    label: Option<String>,
    env: EnvConfig,
    policy: QNetwork<f32>,
    target: QNetwork<f32>,
    adam: AdamState<f32>,
    memory: ReplayMemory,
    sync: TargetSync,
    rngs: RngStreams,
    episode: usize,
    updates: u64,
    best_energy: Option<i32>,
    best_episode: Option<usize>,
    best_actions: Option<String>,
    complete_episodes: usize,
    logged: HashSet<(i32, String)>,
}

impl Trainer {
    pub fn new(seq: &HpSequence, config: &TrainerConfig) -> Result<Self> {
        config.validate()?;
        let arch = config.architecture_for(seq.len());
        if let Architecture::Fcn { rows, .. } = arch {
            if rows != seq.len() {
                return Err(Error::Config(format!(
                    "fully connected network built for {rows} rows, sequence has {}",
                    seq.len()
                )));
            }
        }
        let mut rngs = RngStreams::new(config.seed);
        let policy = QNetwork::<f32>::init(arch, &mut rngs.init);
        let target = policy.clone();
        let adam = AdamState::new(&policy, config.adam);
        Ok(Self {
            seq: seq.clone(),
            config: config.clone(),
            label: None,
            env: EnvConfig {
                reward_trapped_partial: config.reward_trapped_partial,
            },
            policy,
            target,
            adam,
            memory: ReplayMemory::new(config.capacity()),
            sync: TargetSync::new(config.target_sync),
            rngs,
            episode: 0,
            updates: 0,
            best_energy: None,
            best_episode: None,
            best_actions: None,
            complete_episodes: 0,
            logged: HashSet::new(),
        })
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn from_checkpoint(ckpt: Checkpoint) -> Result<Self> {
        let h = ckpt.header;
        Ok(Self {
            env: EnvConfig {
                reward_trapped_partial: h.config.reward_trapped_partial,
            },
            seq: h.sequence,
            config: h.config,
            label: h.label,
            policy: ckpt.policy,
            target: ckpt.target,
            adam: ckpt.adam,
            memory: ckpt.memory,
            sync: h.sync,
            rngs: RngStreams::restore(&h.rng),
            episode: h.episode,
            updates: h.updates,
            best_energy: h.progress.best_energy,
            best_episode: h.progress.best_episode,
            best_actions: h.progress.best_actions,
            complete_episodes: h.progress.complete_episodes,
            logged: h.progress.logged.into_iter().collect(),
        })
    }

    pub fn checkpoint(&self) -> Checkpoint {
        let mut logged: Vec<(i32, String)> = self.logged.iter().cloned().collect();
        logged.sort();
        Checkpoint {
            header: CheckpointHeader {
                sequence: self.seq.clone(),
                label: self.label.clone(),
                config: self.config.clone(),
                architecture: self.policy.architecture(),
                episode: self.episode,
                updates: self.updates,
                sync: self.sync,
                rng: self.rngs.snapshot(),
                adam_step: self.adam.step,
                progress: TrainerProgress {
                    best_energy: self.best_energy,
                    best_episode: self.best_episode,
                    best_actions: self.best_actions.clone(),
                    complete_episodes: self.complete_episodes,
                    logged,
                },
                shapes: self.policy.architecture().shapes(),
                memory_len: self.memory.len(),
                memory_capacity: self.memory.capacity(),
            },
            policy: self.policy.clone(),
            target: self.target.clone(),
            adam: self.adam.clone(),
            memory: self.memory.clone(),
        }
    }

    pub fn sequence(&self) -> &HpSequence {
        &self.seq
    }

    pub fn config(&self) -> &TrainerConfig {
        &self.config
    }

    pub fn policy(&self) -> &QNetwork<f32> {
        &self.policy
    }

    pub fn target(&self) -> &QNetwork<f32> {
        &self.target
    }

    pub fn memory(&self) -> &ReplayMemory {
        &self.memory
    }

    pub fn episodes_done(&self) -> usize {
        self.episode
    }

    pub fn updates(&self) -> u64 {
        self.updates
    }

    pub fn syncs(&self) -> usize {
        self.sync.syncs
    }

    pub fn best_energy(&self) -> Option<i32> {
        self.best_energy
    }

    pub fn epsilon(&self, episode: usize) -> f64 {
        match self.config.mode {
            Mode::Rand => 1.0,
            Mode::Drl => epsilon_at(&self.config.schedule(), episode),
        }
    }

    fn choose(&mut self, mask: ActionMask, eps: f64, s: &crate::encoding::EncodedState) -> Result<Action> {
        let valid: Vec<Action> = mask.valid().collect();
        if valid.is_empty() {
            return Err(Error::EmptyActionMask);
        }
        // Same draw order as `select_action`, but the forward pass only runs
        // when the greedy branch is taken.
        if self.rngs.explore.gen::<f64>() < eps {
            return Ok(valid[self.rngs.explore.gen_range(0..valid.len())]);
        }
        let q = self.policy.q_values(s)?;
        let best = valid.iter().map(|a| q[a.index()]).fold(f32::NEG_INFINITY, f32::max);
        let tied: Vec<Action> = valid.into_iter().filter(|a| q[a.index()] == best).collect();
        Ok(if tied.len() == 1 {
            tied[0]
        } else {
            tied[self.rngs.tie.gen_range(0..tied.len())]
        })
    }

    fn heuristics_on(&self) -> bool {
        self.config.prune_forward_runs || self.config.prune_futile
    }

    fn best_contacts(&self) -> u32 {
        self.best_energy.map_or(0, |e| e.unsigned_abs())
    }

    /// Plays one episode with the current exploration rate, storing every
    /// transition and taking one gradient step per transition once the
    /// memory holds a full batch.
    pub fn run_episode(&mut self) -> Result<EpisodeRecord> {
        let index = self.episode;
        let eps = self.epsilon(index);
        let settings = StepSettings::from(&self.config);
        let learn = self.config.mode == Mode::Drl;

        let mut state = reset(&self.seq);
        let mut s = encode(&state, &self.seq);
        let mut mask = valid_actions(&state);
        let mut transitions = 0;
        let mut pruned = false;
        if self.heuristics_on() {
            if let PruneDecision::Continue(m) = prune(&state, &self.seq, &self.config, self.best_contacts()) {
                mask = m;
            }
        }
        let (status, energy) = loop {
            let a = self.choose(mask, eps, &s)?;
            let (mut status, mut reward, mut next_mask, energy) = step_in_place(&mut state, &self.seq, a, &self.env)?;
            if status == EpisodeStatus::InProgress && self.heuristics_on() {
                match prune(&state, &self.seq, &self.config, self.best_contacts()) {
                    PruneDecision::Continue(m) => next_mask = m,
                    PruneDecision::Stop => {
                        pruned = true;
                        status = EpisodeStatus::TrappedTerminal;
                        reward = 0.0;
                    }
                }
            }
            let s_next = encode(&state, &self.seq);
            let terminal = status.is_terminal();
            self.memory.push(Experience {
                s,
                a,
                r: reward,
                s_next: s_next.clone(),
                terminal,
                next_valid_mask: if terminal { ActionMask::NONE } else { next_mask },
            });
            transitions += 1;
            if learn && self.memory.len() >= settings.batch_size {
                let batch = self
                    .memory
                    .sample(settings.batch_size, &mut self.rngs.batch)
                    .expect("memory holds a full batch");
                fit_batch(&mut self.policy, &self.target, &batch, &mut self.adam, &settings)?;
                self.updates += 1;
                self.sync.after_update(&self.policy, &mut self.target);
            }
            if terminal {
                let e = energy.unwrap_or_else(|| crate::lattice::energy(state.placed(), &self.seq));
                break (status, e);
            }
            s = s_next;
            mask = next_mask;
        };

        self.episode += 1;
        Ok(EpisodeRecord {
            episode: index,
            energy,
            complete: status == EpisodeStatus::CompleteTerminal,
            length: state.step_index(),
            transitions,
            epsilon: eps,
            pruned,
            actions: state.actions().to_vec(),
        })
    }

    /// Updates best-so-far bookkeeping; returns the log entry if the episode
    /// produced a not-yet-logged complete conformation within one contact of
    /// the best.
    fn track(&mut self, rec: &EpisodeRecord) -> Option<BestRecord> {
        if !rec.complete {
            return None;
        }
        self.complete_episodes += 1;
        if self.best_energy.is_none_or(|b| rec.energy < b) {
            self.best_energy = Some(rec.energy);
            self.best_episode = Some(rec.episode);
            self.best_actions = Some(actions_to_string(&rec.actions));
            let band = rec.energy + 1;
            self.logged.retain(|(e, _)| *e <= band);
        }
        let best = self.best_energy.expect("set above");
        if rec.energy > best + 1 {
            return None;
        }
        let key = (rec.energy, actions_to_string(&rec.actions));
        if !self.logged.insert(key.clone()) {
            return None;
        }
        Some(BestRecord {
            episode: rec.episode,
            energy: rec.energy,
            actions: key.1,
        })
    }

    /// Runs the remaining episodes. With `out_dir` set, writes the manifest
    /// before starting, streams `curve.csv` and `best.jsonl`, and writes
    /// periodic and final checkpoints.
    pub fn run(&mut self, out_dir: Option<&Path>) -> Result<TrainingResult> {
        self.run_until(out_dir, self.config.episodes)
    }

    /// [`Trainer::run`] that stops after episode `stop - 1` (capped at the
    /// budget). The exploration schedule still follows the full budget, and
    /// the final checkpoint allows continuing later.
    pub fn run_until(&mut self, out_dir: Option<&Path>, stop: usize) -> Result<TrainingResult> {
        let stop = stop.min(self.config.episodes);
        let mut sink = match out_dir {
            Some(dir) => Some(Sink::open(dir, self)?),
            None => None,
        };
        let mut curve = Vec::with_capacity(stop.saturating_sub(self.episode));
        let mut best_log = Vec::new();
        let mut checkpoints = Vec::new();
        while self.episode < stop {
            let rec = self.run_episode()?;
            let row = CurveRow {
                episode: rec.episode,
                energy: rec.energy,
                complete: rec.complete,
                epsilon: rec.epsilon,
            };
            let logged = self.track(&rec);
            if let Some(sink) = sink.as_mut() {
                sink.row(&row)?;
                if let Some(b) = &logged {
                    sink.best(b)?;
                }
            }
            curve.push(row);
            best_log.extend(logged);
            let periodic = self
                .config
                .checkpoint_every
                .is_some_and(|k| k > 0 && self.episode.is_multiple_of(k));
            if let (Some(sink), true) = (sink.as_mut(), periodic && self.episode < stop) {
                sink.flush()?;
                let path = sink.dir.join(format!("checkpoint_{:08}.bin", self.episode));
                checkpoint::save(&path, &self.checkpoint())?;
                checkpoints.push(path);
            }
        }
        if let Some(sink) = sink.as_mut() {
            sink.flush()?;
            let path = sink.dir.join(FINAL_CHECKPOINT);
            checkpoint::save(&path, &self.checkpoint())?;
            checkpoints.push(path);
        }
        Ok(TrainingResult {
            complete_ratio: if curve.is_empty() {
                0.0
            } else {
                curve.iter().filter(|r| r.complete).count() as f64 / curve.len() as f64
            },
            curve,
            best_energy: self.best_energy,
            best_episode: self.best_episode,
            best_actions: self.best_actions.clone(),
            best_log,
            checkpoints,
            updates: self.updates,
            syncs: self.sync.syncs,
        })
    }

    pub fn manifest(&self) -> serde_json::Value {
        let arch = self.policy.architecture();
        serde_json::json!({
            "program": env!("CARGO_PKG_NAME"),
            "version": env!("CARGO_PKG_VERSION"),
            "label": self.label,
            "sequence": self.seq.to_string(),
            "length": self.seq.len(),
            "seed": self.config.seed,
            "mode": self.config.mode,
            "architecture": arch,
            "architecture_tag": arch.tag(),
            "parameters": arch.param_count(),
            "replay_capacity": self.memory.capacity(),
            "resumed_at_episode": self.episode,
            "config": self.config,
        })
    }
}

struct Sink {
    dir: PathBuf,
    curve: csv::Writer<fs::File>,
    best: BufWriter<fs::File>,
}

impl Sink {
    fn open(dir: &Path, trainer: &Trainer) -> Result<Self> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let manifest = dir.join(MANIFEST_FILE);
        let text = serde_json::to_string_pretty(&trainer.manifest())?;
        fs::write(&manifest, text + "\n").map_err(|e| Error::io(&manifest, e))?;

        let resuming = trainer.episode > 0;
        let open = |name: &str| -> Result<fs::File> {
            let p = dir.join(name);
            fs::OpenOptions::new()
                .create(true)
                .write(true)
                .append(resuming)
                .truncate(!resuming)
                .open(&p)
                .map_err(|e| Error::io(&p, e))
        };
        let curve_path = dir.join(CURVE_FILE);
        let has_header = resuming && fs::metadata(&curve_path).is_ok_and(|m| m.len() > 0);
        let curve = csv::WriterBuilder::new()
            .has_headers(!has_header)
            .from_writer(open(CURVE_FILE)?);
        Ok(Self {
            dir: dir.to_path_buf(),
            curve,
            best: BufWriter::new(open(BEST_FILE)?),
        })
    }

    fn row(&mut self, row: &CurveRow) -> Result<()> {
        Ok(self.curve.serialize(row)?)
    }

    fn best(&mut self, rec: &BestRecord) -> Result<()> {
        serde_json::to_writer(&mut self.best, rec)?;
        self.best
            .write_all(b"\n")
            .map_err(|e| Error::io(self.dir.join(BEST_FILE), e))
    }

    fn flush(&mut self) -> Result<()> {
        self.curve
            .flush()
            .map_err(|e| Error::io(self.dir.join(CURVE_FILE), e))?;
        self.best.flush().map_err(|e| Error::io(self.dir.join(BEST_FILE), e))
    }
}

/// Trains a fresh agent on `seq` for `config.episodes` episodes.
pub fn train(seq: &HpSequence, config: &TrainerConfig, out_dir: Option<&Path>) -> Result<TrainingResult> {
    Trainer::new(seq, config)?.run(out_dir)
}

pub fn read_curve(path: &Path) -> Result<Vec<CurveRow>> {
    let mut rdr = csv::Reader::from_path(path)?;
    rdr.deserialize().map(|r| r.map_err(Error::from)).collect()
}

pub fn read_best_log(path: &Path) -> Result<Vec<BestRecord>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(Error::from))
        .collect()
}
