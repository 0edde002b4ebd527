//! Deterministic keyed random substreams.
//!
//! Every consumer derives its own ChaCha12 stream from a master seed plus a
//! small label path (e.g. `(round, slot, purpose)`), so the order in which
//! streams are drawn (or whether they run in parallel) cannot change any
//! sampled value.

#[cfg(not(feature = "std"))]
use crate::math::F64Ext;
pub use rand_chacha::ChaCha12Rng;
pub use rand_core::RngCore;
use rand_core::SeedableRng;

/// SplitMix64 finalizer; mixes one 64-bit word into the running state.
fn splitmix64(state: u64) -> u64 {
    let mut z = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive a ChaCha12 stream from `seed` and a label path.
///
/// Distinct label paths yield independent streams; the same path always
/// yields the same stream.
pub fn substream(seed: u64, labels: &[u64]) -> ChaCha12Rng {
    let mut state = splitmix64(seed);
    for &label in labels {
        state = splitmix64(state ^ label);
    }
    let mut key = [0u8; 32];
    let mut word = state;
    for chunk in key.chunks_exact_mut(8) {
        word = splitmix64(word);
        chunk.copy_from_slice(&word.to_le_bytes());
    }
    ChaCha12Rng::from_seed(key)
}

/// Uniform draw in the half-open interval (0, 1].
///
/// The lower bound is excluded so the value is always a valid `ln` input.
fn uniform_unit(rng: &mut ChaCha12Rng) -> f64 {
    (((rng.next_u64() >> 11) + 1) as f64) * (1.0 / 9_007_199_254_740_992.0)
}

/// Standard normal sampler (Box–Muller), one value per call.
pub struct Gaussian {
    rng: ChaCha12Rng,
    spare: Option<f64>,
}

impl Gaussian {
    pub fn new(rng: ChaCha12Rng) -> Self {
        Self { rng, spare: None }
    }

    /// Next N(0, 1) sample.
    pub fn sample(&mut self) -> f64 {
        if let Some(v) = self.spare.take() {
            return v;
        }
        let u1 = uniform_unit(&mut self.rng);
        let u2 = uniform_unit(&mut self.rng);
        let radius = (-2.0 * u1.ln()).sqrt();
        let angle = 2.0 * core::f64::consts::PI * u2;
        self.spare = Some(radius * angle.sin());
        radius * angle.cos()
    }

    /// Fill `out` with i.i.d. N(0, sigma^2) samples.
    pub fn fill_scaled(&mut self, out: &mut [f64], sigma: f64) {
        for v in out.iter_mut() {
            *v = sigma * self.sample();
        }
    }
}
