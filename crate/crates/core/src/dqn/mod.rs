//! Deep Q-learning over the lattice environment: epsilon-greedy acting,
//! FIFO replay, policy/target networks and mini-batch Huber regression.

mod heuristics;
mod trainer;

use std::collections::VecDeque;

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::encoding::EncodedState;
use crate::error::{Error, Result};
use crate::lattice::{Action, ActionMask};
use crate::nn::{huber, huber_grad, AdamConfig, AdamState, Architecture, QNetwork};

pub use heuristics::{futile_bound, prune, PruneDecision};
pub use trainer::{
    read_best_log, read_curve, train, BestRecord, CurveRow, EpisodeRecord, Trainer, TrainerProgress, TrainingResult,
    BEST_FILE, CURVE_FILE, FINAL_CHECKPOINT, MANIFEST_FILE,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Epsilon-greedy on the learned Q-network.
    Drl,
    /// Uniform random valid moves throughout (epsilon pinned at 1).
    Rand,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Drl => "drl",
            Mode::Rand => "rand",
        }
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "drl" => Ok(Mode::Drl),
            "rand" => Ok(Mode::Rand),
            other => Err(Error::Config(format!("unknown mode {other:?} (expected drl or rand)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainerConfig {
    pub episodes: usize,
    pub seed: u64,
    pub mode: Mode,
    /// `None` picks the default LSTM for the sequence length.
    pub architecture: Option<Architecture>,
    pub gamma: f64,
    /// Gradient updates between target-network syncs.
    pub target_sync: usize,
    pub batch_size: usize,
    pub adam: AdamConfig,
    pub eps_min: f64,
    pub eps_max: f64,
    pub eps_decay: f64,
    /// `None` applies `min(50000, episodes / 10)`.
    pub replay_capacity: Option<usize>,
    pub prune_forward_runs: bool,
    pub prune_futile: bool,
    pub reward_trapped_partial: bool,
    pub grad_clip: Option<f64>,
    /// Write a checkpoint every this many episodes (a final one is always written).
    pub checkpoint_every: Option<usize>,
}

impl Default for TrainerConfig {
    fn default() -> Self {
        Self {
            episodes: 100_000,
            seed: 0,
            mode: Mode::Drl,
            architecture: None,
            gamma: 0.98,
            target_sync: 100,
            batch_size: 32,
            adam: AdamConfig::default(),
            eps_min: 0.01,
            eps_max: 1.0,
            eps_decay: 5.0,
            replay_capacity: None,
            prune_forward_runs: false,
            prune_futile: false,
            reward_trapped_partial: false,
            grad_clip: None,
            checkpoint_every: None,
        }
    }
}

impl TrainerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::Config(format!("gamma {} outside [0, 1]", self.gamma)));
        }
        if self.batch_size == 0 || self.target_sync == 0 {
            return Err(Error::Config("batch_size and target_sync must be positive".into()));
        }
        if !(0.0..=self.eps_max).contains(&self.eps_min) || self.eps_max > 1.0 {
            return Err(Error::Config("need 0 <= eps_min <= eps_max <= 1".into()));
        }
        if self.batch_size > self.capacity() {
            return Err(Error::Config(format!(
                "batch size {} exceeds replay capacity {}",
                self.batch_size,
                self.capacity()
            )));
        }
        Ok(())
    }

    pub fn architecture_for(&self, n: usize) -> Architecture {
        self.architecture.unwrap_or_else(|| Architecture::default_for_len(n))
    }

    /// Replay capacity: explicit override, else the episode-count law floored
    /// at one batch so that short runs still train.
    pub fn capacity(&self) -> usize {
        self.replay_capacity
            .unwrap_or_else(|| replay_capacity(self.episodes).max(self.batch_size))
    }

    pub fn schedule(&self) -> EpsilonSchedule {
        EpsilonSchedule {
            eps_min: self.eps_min,
            eps_max: self.eps_max,
            lambda: self.eps_decay,
            episodes: self.episodes,
        }
    }
}

/// `min(50000, episodes / 10)` transitions.
pub fn replay_capacity(episodes: usize) -> usize {
    (episodes / 10).min(50_000)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpsilonSchedule {
    pub eps_min: f64,
    pub eps_max: f64,
    pub lambda: f64,
    pub episodes: usize,
}

impl Default for EpsilonSchedule {
    fn default() -> Self {
        TrainerConfig::default().schedule()
    }
}

pub fn epsilon_at(schedule: &EpsilonSchedule, episode: usize) -> f64 {
    let s = schedule;
    let psi = s.episodes.max(1) as f64;
    s.eps_min + (s.eps_max - s.eps_min) * (-(episode as f64) * s.lambda / psi).exp()
}

/// One transition. Rewards are sparse: non-terminal transitions carry 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Experience {
    pub s: EncodedState,
    pub a: Action,
    pub r: f64,
    pub s_next: EncodedState,
    pub terminal: bool,
    pub next_valid_mask: ActionMask,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplayMemory {
    buffer: VecDeque<Experience>,
    capacity: usize,
}

impl ReplayMemory {
    pub fn new(capacity: usize) -> Self {
        Self {
            buffer: VecDeque::with_capacity(capacity.min(1 << 16)),
            capacity,
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.buffer.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buffer.is_empty()
    }

    pub fn push(&mut self, e: Experience) {
        if self.capacity == 0 {
            return;
        }
        if self.buffer.len() == self.capacity {
            self.buffer.pop_front();
        }
        self.buffer.push_back(e);
    }

    pub fn iter(&self) -> impl Iterator<Item = &Experience> {
        self.buffer.iter()
    }

    /// `n` distinct entries drawn uniformly, or `None` if fewer are stored.
    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Option<Vec<&Experience>> {
        if n == 0 || self.buffer.len() < n {
            return None;
        }
        Some(
            index::sample(rng, self.buffer.len(), n)
                .iter()
                .map(|i| &self.buffer[i])
                .collect(),
        )
    }
}

/// Epsilon-greedy choice among valid moves. With probability `eps` (or when
/// no Q-values are given) the move is uniform over the valid set, drawn from
/// `explore`; otherwise it is the masked argmax, ties split uniformly with
/// `tie`.
pub fn select_action<R1: Rng + ?Sized, R2: Rng + ?Sized>(
    q: Option<&[f32; 3]>,
    mask: ActionMask,
    eps: f64,
    explore: &mut R1,
    tie: &mut R2,
) -> Result<Action> {
    let valid: Vec<Action> = mask.valid().collect();
    if valid.is_empty() {
        return Err(Error::EmptyActionMask);
    }
    let explore_now = explore.gen::<f64>() < eps;
    match q {
        Some(q) if !explore_now => {
            let best = valid.iter().map(|a| q[a.index()]).fold(f32::NEG_INFINITY, f32::max);
            let tied: Vec<Action> = valid.into_iter().filter(|a| q[a.index()] == best).collect();
            Ok(if tied.len() == 1 {
                tied[0]
            } else {
                tied[tie.gen_range(0..tied.len())]
            })
        }
        _ => Ok(valid[explore.gen_range(0..valid.len())]),
    }
}

/// `r` at terminal transitions (or when nothing is valid next), otherwise
/// `r + gamma * max` of `q_next` over the valid next moves.
pub fn bootstrap_target(r: f64, terminal: bool, next_mask: ActionMask, q_next: &[f32; 3], gamma: f64) -> f64 {
    if terminal || !next_mask.any() {
        return r;
    }
    let best = next_mask
        .valid()
        .map(|a| q_next[a.index()] as f64)
        .fold(f64::NEG_INFINITY, f64::max);
    r + gamma * best
}

pub fn td_target(exp: &Experience, target: &QNetwork<f32>, gamma: f64) -> Result<f64> {
    if exp.terminal || !exp.next_valid_mask.any() {
        return Ok(exp.r);
    }
    let q = target.q_values(&exp.s_next)?;
    Ok(bootstrap_target(exp.r, false, exp.next_valid_mask, &q, gamma))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepSettings {
    pub gamma: f64,
    pub batch_size: usize,
    pub grad_clip: Option<f64>,
}

impl From<&TrainerConfig> for StepSettings {
    fn from(c: &TrainerConfig) -> Self {
        Self {
            gamma: c.gamma,
            batch_size: c.batch_size,
            grad_clip: c.grad_clip,
        }
    }
}

/// Mean Huber TD loss over the given batch and its gradient step on `policy`.
pub fn fit_batch(
    policy: &mut QNetwork<f32>,
    target: &QNetwork<f32>,
    batch: &[&Experience],
    adam: &mut AdamState<f32>,
    settings: &StepSettings,
) -> Result<f64> {
    let bootstrap: Vec<usize> = (0..batch.len())
        .filter(|&i| !batch[i].terminal && batch[i].next_valid_mask.any())
        .collect();
    let mut targets: Vec<f64> = batch.iter().map(|e| e.r).collect();
    if !bootstrap.is_empty() {
        let next: Vec<&EncodedState> = bootstrap.iter().map(|&i| &batch[i].s_next).collect();
        let q_next = target.forward(&next)?;
        for (&i, q) in bootstrap.iter().zip(&q_next) {
            targets[i] = bootstrap_target(batch[i].r, false, batch[i].next_valid_mask, q, settings.gamma);
        }
    }

    let states: Vec<&EncodedState> = batch.iter().map(|e| &e.s).collect();
    let cache = policy.forward_cached(&states)?;
    let scale = 1.0 / batch.len() as f64;
    let mut loss = 0.0;
    let mut upstream = vec![[0.0f32; 3]; batch.len()];
    for (b, e) in batch.iter().enumerate() {
        let delta = targets[b] - cache.q()[b][e.a.index()] as f64;
        loss += huber(delta);
        // d(loss)/dQ(s,a) = -huber'(delta) / |B|
        upstream[b][e.a.index()] = (-huber_grad(delta) * scale) as f32;
    }
    let mut grads = policy.backward(&cache, &upstream);
    if let Some(max_norm) = settings.grad_clip {
        grads.clip_global_norm(max_norm);
    }
    adam.apply(policy, &grads);
    Ok(loss * scale)
}

/// Samples a mini-batch and takes one optimizer step. `Ok(None)` when the
/// memory holds fewer than `batch_size` transitions.
pub fn train_step<R: Rng + ?Sized>(
    policy: &mut QNetwork<f32>,
    target: &QNetwork<f32>,
    memory: &ReplayMemory,
    adam: &mut AdamState<f32>,
    settings: &StepSettings,
    rng: &mut R,
) -> Result<Option<f64>> {
    let Some(batch) = memory.sample(settings.batch_size, rng) else {
        return Ok(None);
    };
    fit_batch(policy, target, &batch, adam, settings).map(Some)
}

/// Counts gradient updates and copies the policy into the target every
/// `interval` of them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TargetSync {
    pub interval: usize,
    pub since_sync: usize,
    pub syncs: usize,
}

impl TargetSync {
    pub fn new(interval: usize) -> Self {
        Self {
            interval,
            since_sync: 0,
            syncs: 0,
        }
    }

    /// Records one update; returns true if the target was refreshed.
    pub fn after_update(&mut self, policy: &QNetwork<f32>, target: &mut QNetwork<f32>) -> bool {
        self.since_sync += 1;
        if self.since_sync >= self.interval {
            sync_target(policy, target);
            self.since_sync = 0;
            self.syncs += 1;
            true
        } else {
            false
        }
    }
}

pub fn sync_target(policy: &QNetwork<f32>, target: &mut QNetwork<f32>) {
    target.copy_from(policy);
}
