//! DCT-based MFSK modulation and the histogram-recovery receiver.
//!
//! Symbol `m` selects one of `n` orthonormal cosine tones,
//!
//! ```text
//! z_m[k] = amplitude * s_k * sqrt(2/n) * cos(pi * (2m + 1) * k / (2n))
//! ```
//!
//! with `s_0 = 1/sqrt(2)` and `s_k = 1` otherwise. The first-sample factor
//! makes the tone family an exactly orthogonal matrix (the transpose kernel
//! of the standard DCT pair), so the matched-filter bank recovers a clean
//! one-hot response per transmitted symbol. When `devices` transmit
//! simultaneously, the superposed waveform demodulates to the empirical
//! measure of their symbol indices: bin `m` holds the fraction of devices
//! that sent `m`, plus per-bin Gaussian noise of variance
//! `n0 / (2 * amplitude^2 * devices^2)`.
//!
//! The analysis transform is a direct matrix multiply against the
//! precomputed basis; at the simulator's tone counts this is cheap and keeps
//! the reference path trivially auditable.

#[cfg(not(feature = "std"))]
use crate::math::F64Ext;
use crate::quantizer::{Quantizer, SymbolIndex};
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum ModemError {
    /// Tone count must be an even integer >= 2.
    InvalidToneCount { tones: usize },
    /// Carrier amplitude must be positive and finite.
    InvalidAmplitude { amplitude: f64 },
    /// Symbol index outside the tone bank.
    SymbolOutOfRange { index: usize, tones: usize },
    /// Waveform length does not match the tone count.
    LengthMismatch { expected: usize, got: usize },
    /// Device count must be >= 1.
    NoDevices,
    /// Measure length does not match the quantizer grid.
    MeasureMismatch { bins: usize, levels: usize },
    /// PAPR input was empty.
    EmptyPowerSequence,
    /// PAPR input contained a nonpositive or non-finite power.
    InvalidPower { position: usize, power: f64 },
    /// No positive mass to take a quantile over.
    DegenerateMeasure,
    /// Trim fraction must lie in [0, 0.5).
    InvalidTrim { alpha: f64 },
}

impl fmt::Display for ModemError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::InvalidToneCount { tones } => {
                write!(f, "tone count must be even and >= 2, got {tones}")
            }
            Self::InvalidAmplitude { amplitude } => {
                write!(f, "carrier amplitude must be positive, got {amplitude}")
            }
            Self::SymbolOutOfRange { index, tones } => {
                write!(f, "symbol {index} outside tone bank of size {tones}")
            }
            Self::LengthMismatch { expected, got } => {
                write!(f, "waveform length {got}, expected {expected}")
            }
            Self::NoDevices => write!(f, "device count must be at least 1"),
            Self::MeasureMismatch { bins, levels } => {
                write!(f, "measure has {bins} bins but quantizer has {levels} levels")
            }
            Self::EmptyPowerSequence => write!(f, "empty power sequence"),
            Self::InvalidPower { position, power } => {
                write!(f, "nonpositive power {power} at index {position}")
            }
            Self::DegenerateMeasure => write!(f, "measure has no positive mass"),
            Self::InvalidTrim { alpha } => {
                write!(f, "trim fraction must be in [0, 0.5), got {alpha}")
            }
        }
    }
}

impl core::error::Error for ModemError {}

/// Noisy histogram of transmitted symbol indices, one bin per tone.
///
/// In the noiseless case bins are nonnegative multiples of `1/devices`
/// summing to one; with channel noise individual bins may go negative.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalMeasure {
    bins: Vec<f64>,
}

impl EmpiricalMeasure {
    pub fn from_bins(bins: Vec<f64>) -> Self {
        Self { bins }
    }

    /// Exact measure of a set of transmitted indices (bin counts / devices).
    pub fn from_indices(indices: &[SymbolIndex], tones: usize) -> Self {
        let mut bins = vec![0.0; tones];
        for m in indices {
            bins[m.value()] += 1.0;
        }
        let k = indices.len() as f64;
        for b in bins.iter_mut() {
            *b /= k;
        }
        Self { bins }
    }

    #[inline]
    pub fn bins(&self) -> &[f64] {
        &self.bins
    }

    pub fn sum(&self) -> f64 {
        self.bins.iter().sum()
    }

    /// Project onto the probability simplex: clamp negative bins to zero and
    /// renormalize to unit mass. Falls back to the uniform measure if no
    /// positive mass survives.
    pub fn denoised(&self) -> Self {
        let mut bins: Vec<f64> = self.bins.iter().map(|&b| b.max(0.0)).collect();
        let total: f64 = bins.iter().sum();
        if total > 0.0 {
            for b in bins.iter_mut() {
                *b /= total;
            }
        } else {
            let uniform = 1.0 / bins.len() as f64;
            bins.fill(uniform);
        }
        Self { bins }
    }

    /// Mean squared deviation from another measure of the same length.
    pub fn mse(&self, other: &Self) -> f64 {
        let n = self.bins.len() as f64;
        self.bins
            .iter()
            .zip(&other.bins)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            / n
    }
}

/// Reduction applied to an empirical measure to produce one global value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Aggregation {
    /// Histogram mean mapped back through the quantizer grid.
    Mean,
    /// Lower weighted median of the positive part.
    Median,
    /// Mean after removing `alpha` mass from each tail of the positive part.
    TrimmedMean { alpha: f64 },
    /// Reconstruction level of the heaviest bin.
    MajorityVote,
}

/// Aggregated value plus a flag for argmax ties (resolved to the lowest
/// index).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aggregate {
    pub value: f64,
    pub tie: bool,
}

/// An MFSK tone bank: `tones` orthonormal cosine waveforms of `tones`
/// samples, scaled by a common carrier amplitude.
#[derive(Debug, Clone)]
pub struct MfskModem {
    tones: usize,
    amplitude: f64,
    /// Column-major orthonormal basis; column m is tone m.
    basis: Vec<f64>,
}

impl MfskModem {
    pub fn new(tones: usize, amplitude: f64) -> Result<Self, ModemError> {
        if tones < 2 || !tones.is_multiple_of(2) {
            return Err(ModemError::InvalidToneCount { tones });
        }
        if !(amplitude.is_finite() && amplitude > 0.0) {
            return Err(ModemError::InvalidAmplitude { amplitude });
        }
        let n = tones;
        let mut basis = vec![0.0; n * n];
        let norm = (2.0 / n as f64).sqrt();
        for m in 0..n {
            let col = &mut basis[m * n..(m + 1) * n];
            for (k, v) in col.iter_mut().enumerate() {
                let scale = if k == 0 { norm / 2.0f64.sqrt() } else { norm };
                *v = scale * (PI * (2 * m + 1) as f64 * k as f64 / (2.0 * n as f64)).cos();
            }
        }
        Ok(Self {
            tones,
            amplitude,
            basis,
        })
    }

    #[inline]
    pub fn tones(&self) -> usize {
        self.tones
    }

    #[inline]
    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    /// Waveform for symbol `m`: the m-th orthonormal tone times the carrier
    /// amplitude.
    pub fn modulate(&self, m: SymbolIndex) -> Result<Vec<f64>, ModemError> {
        let col = self.tone(m)?;
        Ok(col.iter().map(|&v| self.amplitude * v).collect())
    }

    /// Accumulate the waveform for `m` into `out` (avoids a temporary when
    /// superposing many devices).
    pub fn modulate_into(&self, m: SymbolIndex, out: &mut [f64]) -> Result<(), ModemError> {
        if out.len() != self.tones {
            return Err(ModemError::LengthMismatch {
                expected: self.tones,
                got: out.len(),
            });
        }
        let col = self.tone(m)?;
        for (o, &v) in out.iter_mut().zip(col) {
            *o += self.amplitude * v;
        }
        Ok(())
    }

    fn tone(&self, m: SymbolIndex) -> Result<&[f64], ModemError> {
        let i = m.value();
        if i >= self.tones {
            return Err(ModemError::SymbolOutOfRange {
                index: i,
                tones: self.tones,
            });
        }
        Ok(&self.basis[i * self.tones..(i + 1) * self.tones])
    }

    /// Matched-filter bank: analysis transform of `received` normalized by
    /// `1 / (amplitude * devices)`.
    ///
    /// For a noiseless superposition of per-device tones, bin m holds the
    /// exact fraction of devices that transmitted symbol m.
    pub fn matched_filter(
        &self,
        received: &[f64],
        devices: usize,
    ) -> Result<EmpiricalMeasure, ModemError> {
        if received.len() != self.tones {
            return Err(ModemError::LengthMismatch {
                expected: self.tones,
                got: received.len(),
            });
        }
        if devices == 0 {
            return Err(ModemError::NoDevices);
        }
        let n = self.tones;
        let norm = 1.0 / (self.amplitude * devices as f64);
        let mut bins = vec![0.0; n];
        for (m, bin) in bins.iter_mut().enumerate() {
            let col = &self.basis[m * n..(m + 1) * n];
            let mut acc = 0.0;
            for (x, b) in received.iter().zip(col) {
                acc += x * b;
            }
            *bin = acc * norm;
        }
        Ok(EmpiricalMeasure { bins })
    }
}

/// Reduce a measure to one parameter value on the quantizer's grid.
pub fn aggregate(
    measure: &EmpiricalMeasure,
    how: Aggregation,
    quantizer: &Quantizer,
) -> Result<Aggregate, ModemError> {
    let bins = measure.bins();
    if bins.len() != quantizer.levels() {
        return Err(ModemError::MeasureMismatch {
            bins: bins.len(),
            levels: quantizer.levels(),
        });
    }
    match how {
        Aggregation::Mean => {
            let pos: f64 = bins
                .iter()
                .enumerate()
                .map(|(n, &mass)| n as f64 * mass)
                .sum();
            Ok(Aggregate {
                value: quantizer.dequantize(pos),
                tie: false,
            })
        }
        Aggregation::MajorityVote => {
            let mut best = 0usize;
            let mut tie = false;
            for (n, &mass) in bins.iter().enumerate().skip(1) {
                if mass > bins[best] {
                    best = n;
                    tie = false;
                } else if mass == bins[best] {
                    tie = true;
                }
            }
            Ok(Aggregate {
                value: quantizer.dequantize(best as f64),
                tie,
            })
        }
        Aggregation::Median => {
            let (positive, total) = positive_part(bins)?;
            let mut acc = 0.0;
            let mut idx = positive.len() - 1;
            for (n, &mass) in positive.iter().enumerate() {
                acc += mass;
                if acc >= total / 2.0 {
                    idx = n;
                    break;
                }
            }
            Ok(Aggregate {
                value: quantizer.dequantize(idx as f64),
                tie: false,
            })
        }
        Aggregation::TrimmedMean { alpha } => {
            if !(0.0..0.5).contains(&alpha) {
                return Err(ModemError::InvalidTrim { alpha });
            }
            let (positive, total) = positive_part(bins)?;
            let lo = alpha * total;
            let hi = (1.0 - alpha) * total;
            let mut acc = 0.0;
            let mut kept_mass = 0.0;
            let mut kept_pos = 0.0;
            for (n, &mass) in positive.iter().enumerate() {
                let start = acc;
                acc += mass;
                let kept = (acc.min(hi) - start.max(lo)).max(0.0);
                kept_mass += kept;
                kept_pos += n as f64 * kept;
            }
            if kept_mass <= 0.0 {
                return Err(ModemError::DegenerateMeasure);
            }
            Ok(Aggregate {
                value: quantizer.dequantize(kept_pos / kept_mass),
                tie: false,
            })
        }
    }
}

fn positive_part(bins: &[f64]) -> Result<(Vec<f64>, f64), ModemError> {
    let positive: Vec<f64> = bins.iter().map(|&b| b.max(0.0)).collect();
    let total: f64 = positive.iter().sum();
    if total <= 0.0 {
        return Err(ModemError::DegenerateMeasure);
    }
    Ok((positive, total))
}

/// Peak-to-average ratio of per-parameter transmit powers, in dB.
///
/// `10 * log10(max / mean)`; exactly 0 dB for a constant sequence.
pub fn papr_db(powers: &[f64]) -> Result<f64, ModemError> {
    if powers.is_empty() {
        return Err(ModemError::EmptyPowerSequence);
    }
    let mut peak = 0.0f64;
    let mut sum = 0.0f64;
    for (i, &p) in powers.iter().enumerate() {
        if !(p.is_finite() && p > 0.0) {
            return Err(ModemError::InvalidPower {
                position: i,
                power: p,
            });
        }
        peak = peak.max(p);
        sum += p;
    }
    let mean = sum / powers.len() as f64;
    Ok(10.0 * (peak / mean).log10())
}
