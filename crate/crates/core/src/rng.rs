//! Named deterministic random streams derived from one trial seed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Stream {
    WeightInit = 0,
    Exploration = 1,
    BatchSampling = 2,
    TieBreaking = 3,
}

/// Position of one stream, enough to restore it bit-exactly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StreamState {
    pub seed: u64,
    pub stream: u64,
    pub word_pos: u128,
}

impl StreamState {
    pub fn restore(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng.set_word_pos(self.word_pos);
        rng
    }
}

/// The four independent streams of a trial: every stream shares the seed's
/// key and differs in the ChaCha stream id.
#[derive(Debug, Clone)]
pub struct RngStreams {
    seed: u64,
    pub init: ChaCha8Rng,
    pub explore: ChaCha8Rng,
    pub batch: ChaCha8Rng,
    pub tie: ChaCha8Rng,
}

impl RngStreams {
    pub fn new(seed: u64) -> Self {
        let make = |s: Stream| {
            StreamState {
                seed,
                stream: s as u64,
                word_pos: 0,
            }
            .restore()
        };
        Self {
            seed,
            init: make(Stream::WeightInit),
            explore: make(Stream::Exploration),
            batch: make(Stream::BatchSampling),
            tie: make(Stream::TieBreaking),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn snapshot(&self) -> [StreamState; 4] {
        [&self.init, &self.explore, &self.batch, &self.tie].map(|r| StreamState {
            seed: self.seed,
            stream: r.get_stream(),
            word_pos: r.get_word_pos(),
        })
    }

    pub fn restore(states: &[StreamState; 4]) -> Self {
        Self {
            seed: states[0].seed,
            init: states[0].restore(),
            explore: states[1].restore(),
            batch: states[2].restore(),
            tie: states[3].restore(),
        }
    }
}
