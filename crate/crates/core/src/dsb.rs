//! Linear-analog DSB baseline (broadband analog aggregation).
//!
//! Each parameter value rides the amplitude of a unit-energy cosine carrier
//! `sqrt(2/n) * cos(2 pi f k / n)`; the superposed waveforms are recovered
//! coherently by correlating with the carrier and dividing by
//! `amplitude * devices`, which yields the exact arithmetic mean in the
//! noiseless case. The per-slot amplitude normalizes the *total* transmit
//! power across devices to a target, which requires genie knowledge of
//! everyone's data; the simulator grants the baseline this deliberately.
//! Sub-threshold parameters are zeroed before transmission to avoid
//! spending power on values the digital scheme cannot even resolve.

#[cfg(not(feature = "std"))]
use crate::math::F64Ext;
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum DsbError {
    /// Carrier frequency must satisfy 1 <= cycles < samples / 2.
    InvalidCarrier { cycles: usize, samples: usize },
    /// Waveform length must equal the configured sample count.
    LengthMismatch { expected: usize, got: usize },
    /// Modulated value must be finite.
    NonFinite { value: f64 },
    /// Power target must be positive and finite.
    InvalidPower { power: f64 },
    /// Amplitude undefined: every device would transmit zero.
    AllZeroSlot,
    /// Correlator needs a positive amplitude and device count.
    InvalidReceiver,
}

impl fmt::Display for DsbError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::InvalidCarrier { cycles, samples } => {
                write!(f, "carrier of {cycles} cycles invalid for {samples} samples")
            }
            Self::LengthMismatch { expected, got } => {
                write!(f, "waveform length {got}, expected {expected}")
            }
            Self::NonFinite { value } => write!(f, "non-finite value {value}"),
            Self::InvalidPower { power } => write!(f, "invalid power target {power}"),
            Self::AllZeroSlot => write!(f, "all-zero slot: amplitude undefined"),
            Self::InvalidReceiver => write!(f, "receiver needs amplitude > 0 and devices >= 1"),
        }
    }
}

impl core::error::Error for DsbError {}

/// Amplitude-modulation baseline over a fixed discrete carrier.
#[derive(Debug, Clone)]
pub struct DsbModem {
    samples: usize,
    cycles: usize,
    /// Unit-energy carrier, precomputed.
    carrier: Vec<f64>,
}

impl DsbModem {
    /// `cycles` is the integer carrier frequency per frame; it must satisfy
    /// `1 <= cycles < samples / 2` so the sampled carrier has exactly unit
    /// energy.
    pub fn new(samples: usize, cycles: usize) -> Result<Self, DsbError> {
        if samples < 4 || cycles == 0 || 2 * cycles >= samples {
            return Err(DsbError::InvalidCarrier { cycles, samples });
        }
        let norm = (2.0 / samples as f64).sqrt();
        let carrier = (0..samples)
            .map(|k| norm * (2.0 * PI * cycles as f64 * k as f64 / samples as f64).cos())
            .collect();
        Ok(Self {
            samples,
            cycles,
            carrier,
        })
    }

    #[inline]
    pub fn samples(&self) -> usize {
        self.samples
    }

    #[inline]
    pub fn cycles(&self) -> usize {
        self.cycles
    }

    /// Waveform `amplitude * value * carrier`; energy is
    /// `(amplitude * value)^2`.
    pub fn modulate(&self, value: f64, amplitude: f64) -> Result<Vec<f64>, DsbError> {
        if !value.is_finite() {
            return Err(DsbError::NonFinite { value });
        }
        let gain = amplitude * value;
        Ok(self.carrier.iter().map(|&c| gain * c).collect())
    }

    /// Accumulate the waveform for `value` into `out`.
    pub fn modulate_into(
        &self,
        value: f64,
        amplitude: f64,
        out: &mut [f64],
    ) -> Result<(), DsbError> {
        if !value.is_finite() {
            return Err(DsbError::NonFinite { value });
        }
        if out.len() != self.samples {
            return Err(DsbError::LengthMismatch {
                expected: self.samples,
                got: out.len(),
            });
        }
        let gain = amplitude * value;
        for (o, &c) in out.iter_mut().zip(&self.carrier) {
            *o += gain * c;
        }
        Ok(())
    }

    /// Coherent receiver: correlate with the unit-energy carrier and divide
    /// by `amplitude * devices`. Noiseless output is the exact mean of the
    /// transmitted values.
    pub fn aggregate(
        &self,
        received: &[f64],
        devices: usize,
        amplitude: f64,
    ) -> Result<f64, DsbError> {
        if received.len() != self.samples {
            return Err(DsbError::LengthMismatch {
                expected: self.samples,
                got: received.len(),
            });
        }
        if devices == 0 || !(amplitude.is_finite() && amplitude > 0.0) {
            return Err(DsbError::InvalidReceiver);
        }
        let corr: f64 = received.iter().zip(&self.carrier).map(|(y, c)| y * c).sum();
        Ok(corr / (amplitude * devices as f64))
    }
}

/// Per-slot amplitude normalizing the devices' total transmit power to
/// `total_power`: `sqrt(total_power / sum_k values[k]^2)`.
pub fn slot_amplitude(values: &[f64], total_power: f64) -> Result<f64, DsbError> {
    if !(total_power.is_finite() && total_power > 0.0) {
        return Err(DsbError::InvalidPower { power: total_power });
    }
    let sum_sq: f64 = values.iter().map(|v| v * v).sum();
    if sum_sq == 0.0 {
        return Err(DsbError::AllZeroSlot);
    }
    Ok((total_power / sum_sq).sqrt())
}

/// Zero every entry with magnitude strictly below `threshold`.
pub fn sparsify(values: &[f64], threshold: f64) -> Vec<f64> {
    debug_assert!(threshold >= 0.0);
    values
        .iter()
        .map(|&v| if v.abs() < threshold { 0.0 } else { v })
        .collect()
}
