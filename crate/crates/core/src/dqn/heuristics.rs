//! Optional search-space pruning used by the ablation runs.

use crate::lattice::{count_hh_contacts, valid_actions, Action, ActionMask, HpSequence, WalkState};

use super::TrainerConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PruneDecision {
    Continue(ActionMask),
    /// The walk cannot beat the best contact count seen so far.
    Stop,
}

/// Longest allowed run of consecutive `F` moves is one below `ceil((N-2)/2)`.
pub fn forward_run_limit(n: usize) -> usize {
    n.saturating_sub(2).div_ceil(2)
}

/// Upper bound on contacts the unplaced remainder of the chain can still add.
/// Every new contact needs at least one unplaced H endpoint, and an unplaced
/// H has at most three free lattice neighbours besides its backbone bond.
pub fn futile_bound(state: &WalkState, seq: &HpSequence) -> u32 {
    let unplaced_h = (state.step_index()..seq.len()).filter(|&i| seq.is_h(i)).count() as u32;
    3 * unplaced_h
}

/// Applies the enabled heuristics to a non-terminal state. `best_contacts` is
/// the largest contact count over complete walks found so far.
pub fn prune(state: &WalkState, seq: &HpSequence, config: &TrainerConfig, best_contacts: u32) -> PruneDecision {
    let mut mask = valid_actions(state);
    if config.prune_futile && !state.is_complete() {
        let contacts = count_hh_contacts(state.placed(), seq);
        if contacts + futile_bound(state, seq) <= best_contacts {
            return PruneDecision::Stop;
        }
    }
    if config.prune_forward_runs && mask.allows(Action::F) {
        let run = state.trailing_forward_run() + 1;
        if run >= forward_run_limit(seq.len()) {
            let mut pruned = mask;
            pruned.set(Action::F, false);
            // Never prune a walk into a dead end the environment would not.
            if pruned.any() {
                mask = pruned;
            }
        }
    }
    PruneDecision::Continue(mask)
}
