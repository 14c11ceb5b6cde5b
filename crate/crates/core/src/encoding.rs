//! One-hot state encoding consumed by the Q-network.
//!
//! Row `i` describes monomer `i`. Columns 0..4 one-hot the movement that
//! placed it (`-`, `L`, `F`, `R`), columns 4..6 one-hot the residue (`H`,
//! `P`). The fixed prefix and not-yet-placed monomers both use `-`.
//! Serialized form is the row-major `N x 6` matrix of 0/1 bytes.

use serde::{Deserialize, Serialize};

use crate::lattice::{Action, HpSequence, Residue, WalkState};

pub const FEATURES: usize = 6;
pub const COL_NONE: usize = 0;
pub const COL_H: usize = 4;
pub const COL_P: usize = 5;

fn action_col(a: Action) -> usize {
    1 + a.index()
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EncodedState {
    rows: usize,
    data: Vec<u8>,
}

impl EncodedState {
    pub fn from_flat(rows: usize, data: Vec<u8>) -> Option<Self> {
        (data.len() == rows * FEATURES && data.iter().all(|&v| v <= 1)).then_some(Self { rows, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn as_flat(&self) -> &[u8] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[u8] {
        &self.data[i * FEATURES..(i + 1) * FEATURES]
    }

    /// Movement code of row `i`: `None` for `-`.
    pub fn movement(&self, i: usize) -> Option<Action> {
        let row = self.row(i);
        (1..4).find(|&c| row[c] == 1).and_then(|c| Action::from_index(c - 1))
    }

    pub fn residue(&self, i: usize) -> Residue {
        if self.row(i)[COL_H] == 1 {
            Residue::H
        } else {
            Residue::P
        }
    }

    /// Writes the matrix as 0.0/1.0 values into `out` (row-major).
    pub fn write_into<S: num_traits::Float>(&self, out: &mut [S]) {
        debug_assert_eq!(out.len(), self.data.len());
        for (o, &v) in out.iter_mut().zip(&self.data) {
            *o = if v == 1 { S::one() } else { S::zero() };
        }
    }
}

pub fn encode(state: &WalkState, seq: &HpSequence) -> EncodedState {
    let n = seq.len();
    let mut data = vec![0u8; n * FEATURES];
    let actions = state.actions();
    for (i, row) in data.chunks_exact_mut(FEATURES).enumerate() {
        let col = match i.checked_sub(2).and_then(|k| actions.get(k)) {
            Some(&a) => action_col(a),
            None => COL_NONE,
        };
        row[col] = 1;
        row[if seq.is_h(i) { COL_H } else { COL_P }] = 1;
    }
    EncodedState { rows: n, data }
}
