//! Named random streams derived from one master seed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Purpose {
    Training,
    Validation,
}

/// Independent generators for demand, bid noise and sharing flags.
#[derive(Debug, Clone)]
pub struct Streams {
    pub arrivals: ChaCha8Rng,
    pub bids: ChaCha8Rng,
    pub sharing: ChaCha8Rng,
}

impl Streams {
    pub fn new(master_seed: u64, purpose: Purpose) -> Self {
        let base = match purpose {
            Purpose::Training => 0,
            Purpose::Validation => 3,
        };
        let stream = |k: u64| {
            let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
            rng.set_stream(base + k);
            rng
        };
        Self { arrivals: stream(0), bids: stream(1), sharing: stream(2) }
    }
}
