//! Multiple-access AWGN channel.
//!
//! All devices are assumed perfectly time- and phase-aligned, so the channel
//! output is the sample-wise sum of the transmitted waveforms plus white
//! Gaussian noise with variance `n0 / 2` per real dimension (circularly
//! symmetric in complex mode). Noise is drawn from a substream keyed by
//! `(round, slot, purpose)`, so results do not depend on evaluation order.

#[cfg(not(feature = "std"))]
use crate::math::F64Ext;
use crate::rng::{substream, Gaussian};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use num_complex::Complex64;

#[derive(Debug, Clone, PartialEq)]
pub enum ChannelError {
    /// Noise level must be finite and >= 0.
    InvalidNoiseLevel { n0: f64 },
    /// At least one transmitting device is required.
    NoSignals,
    /// All superposed waveforms must share one length.
    LengthMismatch { expected: usize, got: usize },
    /// Transmit power must be positive and finite.
    InvalidPower { power: f64 },
}

impl fmt::Display for ChannelError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::InvalidNoiseLevel { n0 } => {
                write!(f, "noise level must be finite and nonnegative, got {n0}")
            }
            Self::NoSignals => write!(f, "superposition needs at least one signal"),
            Self::LengthMismatch { expected, got } => {
                write!(f, "waveform of length {got}, expected {expected}")
            }
            Self::InvalidPower { power } => {
                write!(f, "transmit power must be positive, got {power}")
            }
        }
    }
}

impl core::error::Error for ChannelError {}

/// Identifies one independent noise draw within a simulation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NoiseKey {
    pub round: u64,
    pub slot: u64,
    pub purpose: u64,
}

impl NoiseKey {
    pub fn new(round: u64, slot: u64, purpose: u64) -> Self {
        Self { round, slot, purpose }
    }
}

/// AWGN multiple-access channel with a seeded noise source.
#[derive(Debug, Clone)]
pub struct Channel {
    n0: f64,
    seed: u64,
}

impl Channel {
    /// `n0` is the noise spectral level; per-sample real-dimension variance
    /// is `n0 / 2`. `n0 = 0` gives the exact noiseless superposition.
    pub fn new(n0: f64, seed: u64) -> Result<Self, ChannelError> {
        if !(n0.is_finite() && n0 >= 0.0) {
            return Err(ChannelError::InvalidNoiseLevel { n0 });
        }
        Ok(Self { n0, seed })
    }

    #[inline]
    pub fn noise_level(&self) -> f64 {
        self.n0
    }

    fn gaussian(&self, key: NoiseKey) -> Gaussian {
        Gaussian::new(substream(
            self.seed,
            &[key.round, key.slot, key.purpose],
        ))
    }

    /// Sum real waveforms sample-wise and add N(0, n0/2) noise.
    pub fn superpose(&self, signals: &[&[f64]], key: NoiseKey) -> Result<Vec<f64>, ChannelError> {
        let len = Self::common_len(signals.iter().map(|s| s.len()))?;
        let mut out = vec![0.0; len];
        for s in signals {
            for (o, &v) in out.iter_mut().zip(s.iter()) {
                *o += v;
            }
        }
        if self.n0 > 0.0 {
            let sigma = (self.n0 / 2.0).sqrt();
            let mut g = self.gaussian(key);
            for o in out.iter_mut() {
                *o += sigma * g.sample();
            }
        }
        Ok(out)
    }

    /// Sum complex waveforms and add circularly symmetric noise with
    /// variance n0/2 per real dimension.
    pub fn superpose_complex(
        &self,
        signals: &[&[Complex64]],
        key: NoiseKey,
    ) -> Result<Vec<Complex64>, ChannelError> {
        let len = Self::common_len(signals.iter().map(|s| s.len()))?;
        let mut out = vec![Complex64::new(0.0, 0.0); len];
        for s in signals {
            for (o, &v) in out.iter_mut().zip(s.iter()) {
                *o += v;
            }
        }
        if self.n0 > 0.0 {
            let sigma = (self.n0 / 2.0).sqrt();
            let mut g = self.gaussian(key);
            for o in out.iter_mut() {
                *o += Complex64::new(sigma * g.sample(), sigma * g.sample());
            }
        }
        Ok(out)
    }

    fn common_len(mut lens: impl Iterator<Item = usize>) -> Result<usize, ChannelError> {
        let first = lens.next().ok_or(ChannelError::NoSignals)?;
        for len in lens {
            if len != first {
                return Err(ChannelError::LengthMismatch {
                    expected: first,
                    got: len,
                });
            }
        }
        Ok(first)
    }
}

/// Carrier amplitude giving average transmit power `power` for a
/// unit-energy tone: `sqrt(power)`, independent of the data.
pub fn amplitude_for_power(power: f64) -> Result<f64, ChannelError> {
    if !(power.is_finite() && power > 0.0) {
        return Err(ChannelError::InvalidPower { power });
    }
    Ok(power.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn key() -> NoiseKey {
        NoiseKey::new(0, 0, 0)
    }

    #[test]
    fn noiseless_superposition_is_exact_sum() {
        let ch = Channel::new(0.0, 99).unwrap();
        let z = [1.0, -2.0, 3.0, 0.5];
        let signals: Vec<&[f64]> = vec![&z, &z, &z];
        let y = ch.superpose(&signals, key()).unwrap();
        for (a, b) in y.iter().zip(&z) {
            assert_eq!(*a, 3.0 * b);
        }
    }

    #[test]
    fn opposite_waveforms_cancel() {
        let ch = Channel::new(0.0, 99).unwrap();
        let z = [0.3, -0.7, 1.1];
        let neg: Vec<f64> = z.iter().map(|v| -v).collect();
        let y = ch.superpose(&[&z, &neg], key()).unwrap();
        assert!(y.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn noise_variance_matches_level() {
        // n0/2 = 1 over 1e6 samples: sample variance within 1%.
        let ch = Channel::new(2.0, 7).unwrap();
        let zeros = vec![0.0; 1_000_000];
        let y = ch.superpose(&[&zeros], key()).unwrap();
        let mean: f64 = y.iter().sum::<f64>() / y.len() as f64;
        let var: f64 = y.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / y.len() as f64;
        assert!((var - 1.0).abs() < 0.01, "var = {var}");
    }

    #[test]
    fn complex_noise_is_circular() {
        let ch = Channel::new(2.0, 8).unwrap();
        let zeros = vec![Complex64::new(0.0, 0.0); 200_000];
        let y = ch.superpose_complex(&[&zeros], key()).unwrap();
        let n = y.len() as f64;
        let var_re: f64 = y.iter().map(|v| v.re * v.re).sum::<f64>() / n;
        let var_im: f64 = y.iter().map(|v| v.im * v.im).sum::<f64>() / n;
        let cross: f64 = y.iter().map(|v| v.re * v.im).sum::<f64>() / n;
        assert!((var_re - 1.0).abs() < 0.02, "re var {var_re}");
        assert!((var_im - 1.0).abs() < 0.02, "im var {var_im}");
        assert!(cross.abs() < 0.01, "cross {cross}");
    }

    #[test]
    fn keyed_draws_are_reproducible_and_independent() {
        let ch = Channel::new(1.0, 42).unwrap();
        let zeros = vec![0.0; 64];
        let a = ch.superpose(&[&zeros], NoiseKey::new(3, 5, 0)).unwrap();
        let b = ch.superpose(&[&zeros], NoiseKey::new(3, 5, 0)).unwrap();
        assert_eq!(a, b);
        let c = ch.superpose(&[&zeros], NoiseKey::new(3, 6, 0)).unwrap();
        assert_ne!(a, c);
        let ch2 = Channel::new(1.0, 42).unwrap();
        let d = ch2.superpose(&[&zeros], NoiseKey::new(3, 5, 0)).unwrap();
        assert_eq!(a, d);
    }

    #[test]
    fn errors_on_bad_input() {
        assert!(Channel::new(-1.0, 0).is_err());
        assert!(Channel::new(f64::NAN, 0).is_err());
        let ch = Channel::new(0.0, 0).unwrap();
        let empty: Vec<&[f64]> = Vec::new();
        assert!(matches!(
            ch.superpose(&empty, key()),
            Err(ChannelError::NoSignals)
        ));
        let a = [0.0; 4];
        let b = [0.0; 5];
        assert!(ch.superpose(&[&a, &b], key()).is_err());
    }

    #[test]
    fn amplitude_from_power() {
        assert_eq!(amplitude_for_power(1.0).unwrap(), 1.0);
        assert_eq!(amplitude_for_power(4.0).unwrap(), 2.0);
        assert!((amplitude_for_power(0.5).unwrap() - core::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
        assert!(amplitude_for_power(0.0).is_err());
        assert!(amplitude_for_power(-2.0).is_err());
    }
}
