//! Orthogonal chirp multiplexing via the discrete Fresnel transform.
//!
//! The DFnT matrix
//!
//! ```text
//! Phi(n, q) = (1/sqrt(N)) * e^{-j pi/4} * e^{-j pi (n - q)^2 / N}
//! ```
//!
//! is unitary for even `N`; its columns are the orthogonal discrete chirps
//! `psi_q[n] = e^{-j pi (n - q)^2 / N}` up to the global scale. Branch `p`
//! of a slot rides chirp offset `p`.
//!
//! To carry `branches` tone waveforms of `tones` samples each in a single
//! slot, the slot is widened to `tones * branches` samples (the chirped
//! signal occupies proportionally more bandwidth in the same slot time):
//! each branch repeats its waveform across the slot at `1/sqrt(branches)`
//! amplitude and is multiplied by its chirp. Dechirping a branch turns every
//! other branch into a pure inter-branch tone that cancels exactly when the
//! slot is folded back onto one waveform period. The receiver (dechirp,
//! fold, rescale) is therefore the exact matched-filter bank for the
//! transmitted chirped tones and the round trip is lossless. With one branch the slot
//! reduces to the plain chirped waveform `z[n] * e^{-j pi n^2 / N}`.
//!
//! Per-branch transmit energy equals the underlying tone energy, so
//! enabling multiplexing changes neither the per-parameter power accounting
//! nor the post-filter noise statistics.

use crate::math::unit_phasor;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_4, PI};
use core::fmt;
use num_complex::Complex64;

#[cfg(not(feature = "std"))]
use crate::math::F64Ext;

#[derive(Debug, Clone, PartialEq)]
pub enum OcdmError {
    /// The transform is defined for even sizes only.
    OddSize { size: usize },
    /// Size must be at least 2.
    InvalidSize { size: usize },
    /// More branches requested than orthogonal chirps available.
    TooManyBranches { branches: usize, tones: usize },
    /// Branch count must be >= 1.
    NoBranches,
    /// A branch waveform has the wrong length.
    BranchLength { branch: usize, expected: usize, got: usize },
    /// Slot signal has the wrong length.
    SlotLength { expected: usize, got: usize },
    /// Zero parameter or branch count in slot accounting.
    ZeroCount,
}

impl fmt::Display for OcdmError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::OddSize { size } => write!(f, "transform size must be even, got {size}"),
            Self::InvalidSize { size } => write!(f, "transform size must be >= 2, got {size}"),
            Self::TooManyBranches { branches, tones } => {
                write!(f, "{branches} branches exceed the {tones} available chirps")
            }
            Self::NoBranches => write!(f, "at least one branch is required"),
            Self::BranchLength { branch, expected, got } => {
                write!(f, "branch {branch} has length {got}, expected {expected}")
            }
            Self::SlotLength { expected, got } => {
                write!(f, "slot has length {got}, expected {expected}")
            }
            Self::ZeroCount => write!(f, "counts must be positive"),
        }
    }
}

impl core::error::Error for OcdmError {}

/// Dense discrete Fresnel transform matrix.
#[derive(Debug, Clone)]
pub struct ChirpMatrix {
    size: usize,
    /// Row-major entries.
    entries: Vec<Complex64>,
}

impl ChirpMatrix {
    #[inline]
    pub fn size(&self) -> usize {
        self.size
    }

    #[inline]
    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        self.entries[row * self.size + col]
    }

    /// Synthesis product `Phi x`.
    pub fn apply(&self, x: &[Complex64]) -> Result<Vec<Complex64>, OcdmError> {
        self.product(x, false)
    }

    /// Analysis product `Phi^H x`.
    pub fn apply_adjoint(&self, x: &[Complex64]) -> Result<Vec<Complex64>, OcdmError> {
        self.product(x, true)
    }

    fn product(&self, x: &[Complex64], adjoint: bool) -> Result<Vec<Complex64>, OcdmError> {
        if x.len() != self.size {
            return Err(OcdmError::SlotLength {
                expected: self.size,
                got: x.len(),
            });
        }
        let n = self.size;
        let mut out = vec![Complex64::new(0.0, 0.0); n];
        for (r, o) in out.iter_mut().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            for (c, &v) in x.iter().enumerate() {
                let e = if adjoint {
                    self.entry(c, r).conj()
                } else {
                    self.entry(r, c)
                };
                acc += e * v;
            }
            *o = acc;
        }
        Ok(out)
    }
}

/// Build the exact `size x size` DFnT matrix; `size` must be even.
pub fn dfnt_matrix(size: usize) -> Result<ChirpMatrix, OcdmError> {
    if size < 2 {
        return Err(OcdmError::InvalidSize { size });
    }
    if !size.is_multiple_of(2) {
        return Err(OcdmError::OddSize { size });
    }
    let norm = 1.0 / (size as f64).sqrt();
    let global = norm * unit_phasor(-FRAC_PI_4);
    let mut entries = vec![Complex64::new(0.0, 0.0); size * size];
    for row in 0..size {
        for col in 0..size {
            let d = row as f64 - col as f64;
            entries[row * size + col] = global * unit_phasor(-PI * d * d / size as f64);
        }
    }
    Ok(ChirpMatrix { size, entries })
}

/// Time slots needed to carry `parameters` values at `branches` per slot:
/// ceil(parameters / branches).
pub fn num_slots(parameters: usize, branches: usize) -> Result<usize, OcdmError> {
    if parameters == 0 || branches == 0 {
        return Err(OcdmError::ZeroCount);
    }
    Ok(parameters.div_ceil(branches))
}

/// Multiplexes up to `branches` real tone waveforms onto orthogonal chirps
/// within one slot of `tones * branches` complex samples.
#[derive(Debug, Clone)]
pub struct ChirpMultiplexer {
    tones: usize,
    branches: usize,
    /// chirps[p][n] = e^{-j pi (n - p)^2 / slot_len}, n = 0..slot_len.
    chirps: Vec<Vec<Complex64>>,
}

impl ChirpMultiplexer {
    pub fn new(tones: usize, branches: usize) -> Result<Self, OcdmError> {
        if tones < 2 {
            return Err(OcdmError::InvalidSize { size: tones });
        }
        if !tones.is_multiple_of(2) {
            return Err(OcdmError::OddSize { size: tones });
        }
        if branches == 0 {
            return Err(OcdmError::NoBranches);
        }
        if branches > tones {
            return Err(OcdmError::TooManyBranches { branches, tones });
        }
        let slot_len = tones * branches;
        let chirps = (0..branches)
            .map(|p| {
                (0..slot_len)
                    .map(|n| {
                        let d = n as f64 - p as f64;
                        unit_phasor(-PI * d * d / slot_len as f64)
                    })
                    .collect()
            })
            .collect();
        Ok(Self {
            tones,
            branches,
            chirps,
        })
    }

    #[inline]
    pub fn tones(&self) -> usize {
        self.tones
    }

    #[inline]
    pub fn branches(&self) -> usize {
        self.branches
    }

    /// Complex samples per slot.
    #[inline]
    pub fn slot_len(&self) -> usize {
        self.tones * self.branches
    }

    /// Spread each branch onto its chirp and sum. Fewer than `branches`
    /// waveforms may be supplied (a partial last slot); missing branches
    /// contribute nothing.
    pub fn multiplex(&self, waveforms: &[Vec<f64>]) -> Result<Vec<Complex64>, OcdmError> {
        if waveforms.is_empty() {
            return Err(OcdmError::NoBranches);
        }
        if waveforms.len() > self.branches {
            return Err(OcdmError::TooManyBranches {
                branches: waveforms.len(),
                tones: self.tones,
            });
        }
        for (p, w) in waveforms.iter().enumerate() {
            if w.len() != self.tones {
                return Err(OcdmError::BranchLength {
                    branch: p,
                    expected: self.tones,
                    got: w.len(),
                });
            }
        }
        let slot_len = self.slot_len();
        let scale = 1.0 / (self.branches as f64).sqrt();
        let mut slot = vec![Complex64::new(0.0, 0.0); slot_len];
        for (p, w) in waveforms.iter().enumerate() {
            let chirp = &self.chirps[p];
            for (n, s) in slot.iter_mut().enumerate() {
                *s += chirp[n] * (scale * w[n % self.tones]);
            }
        }
        Ok(slot)
    }

    /// Recover `count` branch waveforms: dechirp, fold the repetitions back
    /// onto one period, rescale, and take the real part (the transmitted
    /// tones are real).
    pub fn demultiplex(
        &self,
        slot: &[Complex64],
        count: usize,
    ) -> Result<Vec<Vec<f64>>, OcdmError> {
        if slot.len() != self.slot_len() {
            return Err(OcdmError::SlotLength {
                expected: self.slot_len(),
                got: slot.len(),
            });
        }
        if count == 0 {
            return Err(OcdmError::NoBranches);
        }
        if count > self.branches {
            return Err(OcdmError::TooManyBranches {
                branches: count,
                tones: self.tones,
            });
        }
        // fold mean x sqrt(branches) inverts the 1/sqrt(branches) spread.
        let scale = (self.branches as f64).sqrt() / self.branches as f64;
        let mut out = Vec::with_capacity(count);
        for chirp in self.chirps.iter().take(count) {
            let mut branch = vec![0.0; self.tones];
            for (n, &s) in slot.iter().enumerate() {
                branch[n % self.tones] += (s * chirp[n].conj()).re;
            }
            for v in branch.iter_mut() {
                *v *= scale;
            }
            out.push(branch);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;
    use rand_core::RngCore;

    fn random_wave(n: usize, rng: &mut rand_chacha::ChaCha12Rng) -> Vec<f64> {
        (0..n)
            .map(|_| (rng.next_u64() >> 11) as f64 * (2.0 / 9_007_199_254_740_992.0) - 1.0)
            .collect()
    }

    #[test]
    fn matrix_entry_formula() {
        let m = dfnt_matrix(2).unwrap();
        let expected = Complex64::new(0.5, -0.5); // (1/sqrt 2) e^{-j pi/4}
        assert!((m.entry(0, 0) - expected).norm_sqr() < 1e-24);
    }

    #[test]
    fn unitary_for_even_sizes() {
        for n in [8usize, 32, 64] {
            let m = dfnt_matrix(n).unwrap();
            // Oracle: direct products in both orders.
            for r in 0..n {
                for c in 0..n {
                    let mut left = Complex64::new(0.0, 0.0);
                    let mut right = Complex64::new(0.0, 0.0);
                    for k in 0..n {
                        left += m.entry(k, r).conj() * m.entry(k, c);
                        right += m.entry(r, k) * m.entry(c, k).conj();
                    }
                    let expected = if r == c { 1.0 } else { 0.0 };
                    assert!(
                        (left - expected).norm_sqr().sqrt() < 1e-10,
                        "adjoint-first n = {n}, ({r}, {c}): {left}"
                    );
                    assert!(
                        (right - expected).norm_sqr().sqrt() < 1e-10,
                        "adjoint-last n = {n}, ({r}, {c}): {right}"
                    );
                }
            }
        }
    }

    #[test]
    fn rejects_odd_or_tiny_sizes() {
        assert!(matches!(dfnt_matrix(3), Err(OcdmError::OddSize { size: 3 })));
        assert!(dfnt_matrix(0).is_err());
        assert!(dfnt_matrix(1).is_err());
        assert!(ChirpMultiplexer::new(6, 0).is_err());
        assert!(ChirpMultiplexer::new(6, 7).is_err());
        assert!(ChirpMultiplexer::new(5, 2).is_err());
    }

    #[test]
    fn transform_round_trip_is_identity() {
        let n = 16;
        let m = dfnt_matrix(n).unwrap();
        let mut rng = substream(3, &[0]);
        let x: Vec<Complex64> = (0..n)
            .map(|_| {
                Complex64::new(
                    (rng.next_u64() >> 40) as f64 / 1e6,
                    (rng.next_u64() >> 40) as f64 / 1e6,
                )
            })
            .collect();
        let back = m.apply_adjoint(&m.apply(&x).unwrap()).unwrap();
        for (a, b) in back.iter().zip(&x) {
            assert!((a - b).norm_sqr().sqrt() < 1e-10);
        }
    }

    #[test]
    fn chirps_are_dfnt_columns() {
        // psi_p = sqrt(L) e^{+j pi/4} Phi[:, p] ties the slot chirps to the
        // matrix form of the transform.
        let mux = ChirpMultiplexer::new(4, 4).unwrap();
        let l = mux.slot_len();
        let m = dfnt_matrix(l).unwrap();
        let scale = (l as f64).sqrt() * unit_phasor(FRAC_PI_4);
        for p in 0..4 {
            for n in 0..l {
                let from_matrix = scale * m.entry(n, p);
                assert!(
                    (mux.chirps[p][n] - from_matrix).norm_sqr().sqrt() < 1e-12,
                    "p = {p}, n = {n}"
                );
            }
        }
    }

    #[test]
    fn single_branch_slot_is_the_chirped_waveform() {
        let mux = ChirpMultiplexer::new(4, 1).unwrap();
        let ones = vec![1.0; 4];
        let slot = mux.multiplex(&[ones]).unwrap();
        for (n, &s) in slot.iter().enumerate() {
            let expected = unit_phasor(-PI * (n * n) as f64 / 4.0);
            assert!((s - expected).norm_sqr().sqrt() < 1e-12, "n = {n}");
        }
    }

    #[test]
    fn round_trip_recovers_every_branch() {
        let mut rng = substream(5, &[1]);
        for (tones, branches) in [(32, 1), (32, 8), (32, 32), (8, 8)] {
            let mux = ChirpMultiplexer::new(tones, branches).unwrap();
            let waves: Vec<Vec<f64>> = (0..branches)
                .map(|_| random_wave(tones, &mut rng))
                .collect();
            let slot = mux.multiplex(&waves).unwrap();
            let back = mux.demultiplex(&slot, branches).unwrap();
            for (p, (rec, orig)) in back.iter().zip(&waves).enumerate() {
                for (a, b) in rec.iter().zip(orig) {
                    assert!(
                        (a - b).abs() < 1e-10,
                        "tones = {tones}, branches = {branches}, branch {p}"
                    );
                }
            }
        }
    }

    #[test]
    fn partial_last_slot_is_allowed() {
        let mux = ChirpMultiplexer::new(8, 4).unwrap();
        let mut rng = substream(6, &[2]);
        let waves: Vec<Vec<f64>> = (0..2).map(|_| random_wave(8, &mut rng)).collect();
        let slot = mux.multiplex(&waves).unwrap();
        let back = mux.demultiplex(&slot, 2).unwrap();
        for (rec, orig) in back.iter().zip(&waves) {
            for (a, b) in rec.iter().zip(orig) {
                assert!((a - b).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn cross_branch_leakage_is_numerically_zero() {
        let tones = 32;
        let branches = 8;
        let mux = ChirpMultiplexer::new(tones, branches).unwrap();
        let mut rng = substream(7, &[3]);
        let mut waves = vec![vec![0.0; tones]; branches];
        waves[3] = random_wave(tones, &mut rng);
        let signal_energy: f64 = waves[3].iter().map(|v| v * v).sum();
        let slot = mux.multiplex(&waves).unwrap();
        let back = mux.demultiplex(&slot, branches).unwrap();
        for (p, rec) in back.iter().enumerate() {
            if p == 3 {
                continue;
            }
            let leak: f64 = rec.iter().map(|v| v * v).sum();
            assert!(
                leak / signal_energy < 1e-20,
                "branch {p} leakage {leak:e}"
            );
        }
    }

    #[test]
    fn zero_slot_demultiplexes_to_zero() {
        let mux = ChirpMultiplexer::new(8, 4).unwrap();
        let slot = vec![Complex64::new(0.0, 0.0); mux.slot_len()];
        let back = mux.demultiplex(&slot, 4).unwrap();
        assert!(back.iter().all(|w| w.iter().all(|&v| v == 0.0)));
    }

    #[test]
    fn multiplex_commutes_with_device_superposition() {
        let tones = 16;
        let branches = 4;
        let mux = ChirpMultiplexer::new(tones, branches).unwrap();
        let mut rng = substream(8, &[4]);
        let dev_a: Vec<Vec<f64>> = (0..branches).map(|_| random_wave(tones, &mut rng)).collect();
        let dev_b: Vec<Vec<f64>> = (0..branches).map(|_| random_wave(tones, &mut rng)).collect();
        let sum_then_mux = {
            let combined: Vec<Vec<f64>> = dev_a
                .iter()
                .zip(&dev_b)
                .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x + y).collect())
                .collect();
            mux.multiplex(&combined).unwrap()
        };
        let mux_then_sum: Vec<Complex64> = {
            let sa = mux.multiplex(&dev_a).unwrap();
            let sb = mux.multiplex(&dev_b).unwrap();
            sa.iter().zip(&sb).map(|(a, b)| a + b).collect()
        };
        for (a, b) in sum_then_mux.iter().zip(&mux_then_sum) {
            assert!((a - b).norm_sqr().sqrt() < 1e-12);
        }
    }

    #[test]
    fn slot_accounting() {
        assert_eq!(num_slots(10, 5).unwrap(), 2);
        assert_eq!(num_slots(5, 2).unwrap(), 3);
        assert_eq!(num_slots(1_000_000, 256).unwrap(), 3907);
        assert!(num_slots(0, 4).is_err());
        assert!(num_slots(4, 0).is_err());
    }
}
