//! Independent, seed-derived random streams.
//!
//! Every consumer of randomness inside a run draws from its own ChaCha stream
//! keyed by `(seed, stream)`, so changing e.g. the number of evaluation
//! episodes never shifts the training trajectory.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Network weight initialisation.
pub const NET_INIT: u64 = 1;
/// Exploration noise and minibatch sampling of the learner.
pub const TRAIN_POLICY: u64 = 2;
/// Initial conditions of training episodes.
pub const TRAIN_INIT: u64 = 3;
/// Initial conditions of the final evaluation.
pub const FINAL_EVAL: u64 = 4;
/// Initial conditions of interim evaluations. Every epoch replays the same
/// stream so successive evaluations see identical starts.
pub const INTERIM_EVAL: u64 = 5;

pub fn stream(seed: u64, stream: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
