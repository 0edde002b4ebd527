//! Uniform quantizer and linear index mapping.
//!
//! Parameters are clipped to `[-clip, +clip]` and snapped to a uniform grid
//! of `levels` reconstruction points with the endpoints exactly at the clip
//! boundaries: level i sits at `-clip + i * step` with
//! `step = 2 * clip / (levels - 1)`. The resulting index in
//! `[0, levels - 1]` selects the transmit waveform; the inverse map is
//! linear, so it also applies to fractional positions such as the mean of a
//! received histogram.

use crate::math::round_ties_even;
use alloc::vec::Vec;
use core::fmt;

/// A quantized parameter: the index of its reconstruction level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SymbolIndex(pub usize);

impl SymbolIndex {
    #[inline]
    pub fn value(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum QuantizerError {
    /// `levels` must be at least 2.
    TooFewLevels { levels: usize },
    /// `clip` must be a positive finite real.
    InvalidClip { clip: f64 },
    /// Input parameter was NaN or infinite; carries the offending position
    /// when quantizing a vector.
    NonFinite { position: Option<usize> },
    /// Index outside `[0, levels - 1]`.
    IndexOutOfRange { index: usize, levels: usize },
}

impl fmt::Display for QuantizerError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::TooFewLevels { levels } => {
                write!(f, "quantizer needs at least 2 levels, got {levels}")
            }
            Self::InvalidClip { clip } => {
                write!(f, "clip must be positive and finite, got {clip}")
            }
            Self::NonFinite { position: Some(q) } => {
                write!(f, "non-finite parameter at index {q}")
            }
            Self::NonFinite { position: None } => write!(f, "non-finite parameter"),
            Self::IndexOutOfRange { index, levels } => {
                write!(f, "symbol index {index} outside [0, {}]", levels - 1)
            }
        }
    }
}

impl core::error::Error for QuantizerError {}

/// Uniform mid-boundary quantizer over `[-clip, +clip]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Quantizer {
    levels: usize,
    clip: f64,
}

impl Quantizer {
    /// Build a quantizer with `levels` reconstruction points and clipping
    /// half-range `clip`.
    ///
    /// Any `levels >= 2` is accepted; transports that pair the quantizer
    /// with an MFSK tone bank additionally require an even count.
    pub fn new(levels: usize, clip: f64) -> Result<Self, QuantizerError> {
        if levels < 2 {
            return Err(QuantizerError::TooFewLevels { levels });
        }
        if !(clip.is_finite() && clip > 0.0) {
            return Err(QuantizerError::InvalidClip { clip });
        }
        Ok(Self { levels, clip })
    }

    #[inline]
    pub fn levels(&self) -> usize {
        self.levels
    }

    #[inline]
    pub fn clip(&self) -> f64 {
        self.clip
    }

    /// Grid spacing `2 * clip / (levels - 1)`.
    #[inline]
    pub fn step(&self) -> f64 {
        2.0 * self.clip / (self.levels - 1) as f64
    }

    /// Clip `w` and return the index of the nearest level, ties to even.
    pub fn quantize(&self, w: f64) -> Result<SymbolIndex, QuantizerError> {
        if !w.is_finite() {
            return Err(QuantizerError::NonFinite { position: None });
        }
        let clipped = w.clamp(-self.clip, self.clip);
        // Grid position in [0, levels - 1]; keep the (levels - 1) / (2 clip)
        // factor in one expression so boundary values land exactly.
        let pos = (clipped + self.clip) * (self.levels - 1) as f64 / (2.0 * self.clip);
        let idx = round_ties_even(pos) as usize;
        Ok(SymbolIndex(idx.min(self.levels - 1)))
    }

    /// Elementwise [`Self::quantize`]; the error names the offending index.
    pub fn quantize_slice(&self, w: &[f64]) -> Result<Vec<SymbolIndex>, QuantizerError> {
        w.iter()
            .enumerate()
            .map(|(q, &v)| {
                self.quantize(v)
                    .map_err(|_| QuantizerError::NonFinite { position: Some(q) })
            })
            .collect()
    }

    /// Linear inverse map `-clip + pos * step`.
    ///
    /// Accepts fractional positions (e.g. the mean of a noisy histogram),
    /// so no range check is applied.
    #[inline]
    pub fn dequantize(&self, pos: f64) -> f64 {
        -self.clip + pos * (2.0 * self.clip) / (self.levels - 1) as f64
    }

    /// Reconstruction value of a discrete index, checked against the range.
    pub fn level_of(&self, m: SymbolIndex) -> Result<f64, QuantizerError> {
        if m.0 >= self.levels {
            return Err(QuantizerError::IndexOutOfRange {
                index: m.0,
                levels: self.levels,
            });
        }
        Ok(self.dequantize(m.0 as f64))
    }
}
