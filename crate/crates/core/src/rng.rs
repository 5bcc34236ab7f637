//! Seeded, stream-separated RNG construction.
//!
//! Every stochastic choice in the engine draws from a ChaCha8 stream keyed
//! by (seed, purpose), so runs are bit-reproducible and consuming one
//! stream never perturbs another.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    ParamInit = 0,
    Shuffle = 1,
    Noise = 2,
    Subsample = 3,
    LanguageAlternation = 4,
    Groups = 5,
    Split = 6,
    Synth = 7,
}

pub fn seeded(seed: u64, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn streams_are_independent_and_reproducible() {
        let a: f64 = seeded(9, Stream::Shuffle).random();
        let b: f64 = seeded(9, Stream::Shuffle).random();
        let c: f64 = seeded(9, Stream::Noise).random();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }
}
