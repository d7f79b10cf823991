//! Random streams.
//!
//! Samplers in this crate consume uniforms through [`UniformSource`], which
//! every `rand` generator implements. [`RunStream`] is the counter-keyed
//! stream used by the simulation harness: the pair `(seed, index)` fully
//! determines the sequence, so work can be split across threads in any way
//! without changing a single draw.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A source of uniform variates on `[0, 1)`.
pub trait UniformSource {
    fn next_uniform(&mut self) -> f64;
}

impl<R: RngCore + ?Sized> UniformSource for R {
    fn next_uniform(&mut self) -> f64 {
        self.random::<f64>()
    }
}

/// Replays a fixed uniform forever. Test hook for forcing a known draw,
/// e.g. `FixedUniform(0.5)` yields zero Laplace noise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedUniform(pub f64);

impl UniformSource for FixedUniform {
    fn next_uniform(&mut self) -> f64 {
        self.0
    }
}

/// Deterministic stream keyed by `(seed, index)`.
///
/// Backed by ChaCha8 with the index selecting one of its 2^64 independent
/// streams.
#[derive(Debug, Clone)]
pub struct RunStream(ChaCha8Rng);

impl RunStream {
    pub fn new(seed: u64, index: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index);
        Self(rng)
    }
}

impl RngCore for RunStream {
    fn next_u32(&mut self) -> u32 {
        self.0.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.0.fill_bytes(dst)
    }
}
