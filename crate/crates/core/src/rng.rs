//! Deterministic random substreams.
//!
//! Every simulation chunk owns independent ChaCha8 streams keyed by
//! `(seed, chunk, purpose)`. ChaCha is counter based, so a stream id selects a
//! disjoint keystream and results do not depend on which thread runs a chunk.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const DEFAULT_SEED: u64 = 12_345;

/// What a substream is used for. Separate streams keep the Gaussian drivers
/// identical across configurations that differ only in their jump law.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Purpose {
    /// Normals driving `W` (and the fractional process built from it).
    Volatility = 0,
    /// Normals driving the independent Brownian motion `B`.
    Orthogonal = 1,
    Jumps = 2,
}

pub fn substream(seed: u64, chunk: u64, purpose: Purpose) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chunk * 4 + purpose as u64);
    rng
}
