//! HP-model environment on the 2D square lattice.
//!
//! A conformation is grown monomer by monomer as a self-avoiding walk. The
//! first two monomers are pinned at `(0,0)` and `(0,1)` and the first
//! non-forward move must be a left turn, which quotients out rotations and
//! reflections of the lattice. Moves are relative to the current heading:
//! `F` keeps it, `L` rotates it counter-clockwise and `R` clockwise.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Residue {
    H,
    P,
}

impl Residue {
    pub fn is_h(self) -> bool {
        self == Residue::H
    }

    pub fn as_char(self) -> char {
        match self {
            Residue::H => 'H',
            Residue::P => 'P',
        }
    }
}

/// An HP sequence with at least three monomers.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct HpSequence {
    residues: Vec<Residue>,
}

impl HpSequence {
    pub fn new(residues: Vec<Residue>) -> Result<Self> {
        if residues.len() < 3 {
            return Err(Error::SequenceTooShort(residues.len()));
        }
        Ok(Self { residues })
    }

    pub fn len(&self) -> usize {
        self.residues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.residues.is_empty()
    }

    pub fn residues(&self) -> &[Residue] {
        &self.residues
    }

    pub fn get(&self, i: usize) -> Residue {
        self.residues[i]
    }

    pub fn is_h(&self, i: usize) -> bool {
        self.residues[i].is_h()
    }

    pub fn h_count(&self) -> usize {
        self.residues.iter().filter(|r| r.is_h()).count()
    }
}

impl FromStr for HpSequence {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let residues = s
            .chars()
            .enumerate()
            .map(|(pos, ch)| match ch {
                'H' => Ok(Residue::H),
                'P' => Ok(Residue::P),
                _ => Err(Error::InvalidResidue { ch, pos }),
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(residues)
    }
}

impl fmt::Display for HpSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in &self.residues {
            write!(f, "{}", r.as_char())?;
        }
        Ok(())
    }
}

impl Serialize for HpSequence {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for HpSequence {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Coord {
    pub x: i32,
    pub y: i32,
}

impl Coord {
    pub const fn new(x: i32, y: i32) -> Self {
        Self { x, y }
    }

    pub fn manhattan(self, other: Coord) -> i32 {
        (self.x - other.x).abs() + (self.y - other.y).abs()
    }

    pub fn neighbors(self) -> [Coord; 4] {
        Heading::ALL.map(|h| self.moved(h))
    }

    pub fn moved(self, heading: Heading) -> Coord {
        let (dx, dy) = heading.delta();
        Coord::new(self.x + dx, self.y + dy)
    }
}

/// Relative move. The discriminant is the column/output index used by the
/// Q-network (order L, F, R).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Action {
    L = 0,
    F = 1,
    R = 2,
}

impl Action {
    pub const ALL: [Action; 3] = [Action::L, Action::F, Action::R];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Action> {
        Self::ALL.get(i).copied()
    }

    pub fn as_char(self) -> char {
        match self {
            Action::L => 'L',
            Action::F => 'F',
            Action::R => 'R',
        }
    }

    pub fn from_char(ch: char) -> Result<Action> {
        match ch {
            'L' => Ok(Action::L),
            'F' => Ok(Action::F),
            'R' => Ok(Action::R),
            _ => Err(Error::InvalidActionChar(ch)),
        }
    }
}

pub fn parse_actions(s: &str) -> Result<Vec<Action>> {
    s.chars().map(Action::from_char).collect()
}

pub fn actions_to_string(actions: &[Action]) -> String {
    actions.iter().map(|a| a.as_char()).collect()
}

/// Absolute heading, listed counter-clockwise starting from `Up`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Heading {
    Up = 0,
    Left = 1,
    Down = 2,
    Right = 3,
}

impl Heading {
    pub const ALL: [Heading; 4] = [Heading::Up, Heading::Left, Heading::Down, Heading::Right];

    pub fn delta(self) -> (i32, i32) {
        match self {
            Heading::Up => (0, 1),
            Heading::Left => (-1, 0),
            Heading::Down => (0, -1),
            Heading::Right => (1, 0),
        }
    }

    pub fn turn(self, action: Action) -> Heading {
        let i = self as usize;
        let j = match action {
            Action::F => i,
            Action::L => (i + 1) % 4,
            Action::R => (i + 3) % 4,
        };
        Heading::ALL[j]
    }
}

/// Per-action validity, indexed by [`Action::index`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct ActionMask(pub [bool; 3]);

impl ActionMask {
    pub const NONE: ActionMask = ActionMask([false; 3]);
    pub const ALL: ActionMask = ActionMask([true; 3]);

    pub fn allows(&self, a: Action) -> bool {
        self.0[a.index()]
    }

    pub fn count(&self) -> usize {
        self.0.iter().filter(|&&b| b).count()
    }

    pub fn any(&self) -> bool {
        self.0.iter().any(|&b| b)
    }

    pub fn valid(&self) -> impl Iterator<Item = Action> + '_ {
        Action::ALL.into_iter().filter(|a| self.allows(*a))
    }

    pub fn set(&mut self, a: Action, valid: bool) {
        self.0[a.index()] = valid;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EpisodeStatus {
    InProgress,
    CompleteTerminal,
    TrappedTerminal,
}

impl EpisodeStatus {
    pub fn is_terminal(self) -> bool {
        self != EpisodeStatus::InProgress
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnvConfig {
    /// Pay `|E|` of the partial chain when the walk traps itself.
    pub reward_trapped_partial: bool,
}

/// A partial self-avoiding walk for a sequence of length `target_len`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WalkState {
    placed: Vec<Coord>,
    occupancy: HashSet<Coord>,
    actions: Vec<Action>,
    heading: Heading,
    first_turn_taken: bool,
    target_len: usize,
}

impl WalkState {
    pub fn placed(&self) -> &[Coord] {
        &self.placed
    }

    pub fn actions(&self) -> &[Action] {
        &self.actions
    }

    pub fn heading(&self) -> Heading {
        self.heading
    }

    pub fn first_turn_taken(&self) -> bool {
        self.first_turn_taken
    }

    pub fn step_index(&self) -> usize {
        self.placed.len()
    }

    pub fn target_len(&self) -> usize {
        self.target_len
    }

    pub fn is_occupied(&self, c: Coord) -> bool {
        self.occupancy.contains(&c)
    }

    pub fn head(&self) -> Coord {
        *self.placed.last().expect("walk always holds the fixed prefix")
    }

    pub fn is_complete(&self) -> bool {
        self.placed.len() == self.target_len
    }

    pub fn status(&self) -> EpisodeStatus {
        if self.is_complete() {
            EpisodeStatus::CompleteTerminal
        } else if !valid_actions(self).any() {
            EpisodeStatus::TrappedTerminal
        } else {
            EpisodeStatus::InProgress
        }
    }

    /// Length of the run of `F` moves ending at the head.
    pub fn trailing_forward_run(&self) -> usize {
        self.actions.iter().rev().take_while(|&&a| a == Action::F).count()
    }

    fn target_of(&self, action: Action) -> (Heading, Coord) {
        let heading = self.heading.turn(action);
        (heading, self.head().moved(heading))
    }

    fn apply(&mut self, action: Action) {
        let (heading, next) = self.target_of(action);
        self.heading = heading;
        if action != Action::F {
            self.first_turn_taken = true;
        }
        self.placed.push(next);
        self.occupancy.insert(next);
        self.actions.push(action);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    pub state: WalkState,
    pub reward: f64,
    pub status: EpisodeStatus,
    pub valid_mask: ActionMask,
    /// Energy of the final chain, set only on terminal steps.
    pub energy_if_terminal: Option<i32>,
}

pub fn reset(seq: &HpSequence) -> WalkState {
    let placed = vec![Coord::new(0, 0), Coord::new(0, 1)];
    WalkState {
        occupancy: placed.iter().copied().collect(),
        placed,
        actions: Vec::with_capacity(seq.len() - 2),
        heading: Heading::Up,
        first_turn_taken: false,
        target_len: seq.len(),
    }
}

pub fn valid_actions(state: &WalkState) -> ActionMask {
    if state.is_complete() {
        return ActionMask::NONE;
    }
    let mut mask = ActionMask::NONE;
    for a in Action::ALL {
        if a == Action::R && !state.first_turn_taken {
            continue;
        }
        let (_, target) = state.target_of(a);
        mask.set(a, !state.is_occupied(target));
    }
    mask
}

pub fn one_step_probability(state: &WalkState) -> f64 {
    match valid_actions(state).count() {
        0 => 0.0,
        k => 1.0 / k as f64,
    }
}

/// Advances the walk by one monomer. Invalid actions are errors, never no-ops.
pub fn step(state: &WalkState, seq: &HpSequence, action: Action, config: &EnvConfig) -> Result<StepResult> {
    let mut next = state.clone();
    let (status, reward, valid_mask, energy) = step_in_place(&mut next, seq, action, config)?;
    Ok(StepResult {
        state: next,
        reward,
        status,
        valid_mask,
        energy_if_terminal: energy,
    })
}

/// In-place variant of [`step`]; returns `(status, reward, mask, terminal energy)`.
pub fn step_in_place(
    state: &mut WalkState,
    seq: &HpSequence,
    action: Action,
    config: &EnvConfig,
) -> Result<(EpisodeStatus, f64, ActionMask, Option<i32>)> {
    if seq.len() != state.target_len {
        return Err(Error::LengthMismatch(format!(
            "state built for N = {}, sequence has N = {}",
            state.target_len,
            seq.len()
        )));
    }
    if state.is_complete() {
        return Err(Error::EpisodeFinished(state.step_index()));
    }
    if !valid_actions(state).allows(action) {
        return Err(Error::InvalidAction {
            action: action.as_char(),
            step_index: state.step_index(),
        });
    }
    state.apply(action);
    let mask = valid_actions(state);
    let status = if state.is_complete() {
        EpisodeStatus::CompleteTerminal
    } else if !mask.any() {
        EpisodeStatus::TrappedTerminal
    } else {
        EpisodeStatus::InProgress
    };
    let energy = status.is_terminal().then(|| energy(&state.placed, seq));
    let reward = reward_of(status, energy.unwrap_or(0), config);
    Ok((status, reward, mask, energy))
}

/// Number of non-bonded H-H pairs on adjacent lattice sites. Works for
/// partial chains: only the first `placed.len()` monomers are considered.
pub fn count_hh_contacts(placed: &[Coord], seq: &HpSequence) -> u32 {
    let index: HashMap<Coord, usize> = placed.iter().enumerate().map(|(i, &c)| (c, i)).collect();
    let mut contacts = 0;
    for (i, &c) in placed.iter().enumerate() {
        if !seq.is_h(i) {
            continue;
        }
        for nb in c.neighbors() {
            if let Some(&j) = index.get(&nb) {
                if j > i + 1 && seq.is_h(j) {
                    contacts += 1;
                }
            }
        }
    }
    contacts
}

pub fn energy(placed: &[Coord], seq: &HpSequence) -> i32 {
    -(count_hh_contacts(placed, seq) as i32)
}

pub fn reward_of(status: EpisodeStatus, energy: i32, config: &EnvConfig) -> f64 {
    match status {
        EpisodeStatus::InProgress => 0.0,
        EpisodeStatus::CompleteTerminal => energy.unsigned_abs() as f64,
        EpisodeStatus::TrappedTerminal if config.reward_trapped_partial => energy.unsigned_abs() as f64,
        EpisodeStatus::TrappedTerminal => 0.0,
    }
}

/// Replays an action string from the reset state.
pub fn replay(seq: &HpSequence, actions: &[Action]) -> Result<WalkState> {
    let mut state = reset(seq);
    let config = EnvConfig::default();
    for &a in actions {
        step_in_place(&mut state, seq, a, &config)?;
    }
    Ok(state)
}

/// Replays a full action string and returns the energy of the resulting
/// complete walk; errors if the string is invalid or leaves the walk short.
pub fn complete_energy(seq: &HpSequence, actions: &[Action]) -> Result<i32> {
    if actions.len() + 2 != seq.len() {
        return Err(Error::LengthMismatch(format!(
            "action string of length {} for N = {} (expected {})",
            actions.len(),
            seq.len(),
            seq.len() - 2
        )));
    }
    let state = replay(seq, actions)?;
    Ok(energy(state.placed(), seq))
}
