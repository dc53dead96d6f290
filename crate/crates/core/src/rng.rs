//! Deterministic random streams.
//!
//! Every random draw in a run comes from a [`RngStream`] keyed by
//! `(master_seed, iteration, stream)`. Keys are hashed with a splitmix64
//! finalizer into a ChaCha8 seed, so the draws for one iteration never depend
//! on how many draws an earlier iteration consumed.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// The four independent sources of randomness used by one iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StreamId {
    Gradient,
    Hessian,
    ValueAtIterate,
    ValueAtTrial,
    /// Anything outside the solver loop (calibration, test sampling).
    Auxiliary(u64),
}

impl StreamId {
    fn tag(self) -> u64 {
        match self {
            StreamId::Gradient => 1,
            StreamId::Hessian => 2,
            StreamId::ValueAtIterate => 3,
            StreamId::ValueAtTrial => 4,
            StreamId::Auxiliary(label) => 0x1000_0000_0000_0000 ^ label,
        }
    }
}

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// A seeded, reproducible random stream.
#[derive(Debug, Clone)]
pub struct RngStream {
    inner: ChaCha8Rng,
}

impl RngStream {
    /// Stream for `(master_seed, iteration, stream)`.
    pub fn derive(master_seed: u64, iteration: u64, stream: StreamId) -> Self {
        let mut state = splitmix64(master_seed);
        state = splitmix64(state ^ iteration.wrapping_mul(0xD134_2543_DE82_EF95));
        state = splitmix64(state ^ stream.tag());
        let mut seed = [0u8; 32];
        for chunk in seed.chunks_exact_mut(8) {
            state = splitmix64(state);
            chunk.copy_from_slice(&state.to_le_bytes());
        }
        Self {
            inner: ChaCha8Rng::from_seed(seed),
        }
    }

    /// Stream seeded from a single integer, for tests and calibration.
    pub fn from_seed(seed: u64) -> Self {
        Self::derive(seed, u64::MAX, StreamId::Auxiliary(0))
    }

    /// Uniform draw in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.inner.random::<f64>()
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}
