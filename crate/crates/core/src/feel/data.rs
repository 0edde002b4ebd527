//! Datasets and the synthetic classification task.
//!
//! A [`Dataset`] is a flat row-major feature buffer plus labels. The
//! built-in task draws Gaussian blobs: class `c` has a fixed mean vector
//! and unit-by-default within-class spread, which keeps the desk-scale
//! classifier fast while still exercising every transport the same way a
//! larger model would.

#[cfg(not(feature = "std"))]
use crate::math::F64Ext;
use crate::feel::FeelError;
use crate::rng::Gaussian;
use alloc::vec::Vec;

/// Feature rows with class labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    dim: usize,
    features: Vec<f64>,
    labels: Vec<usize>,
}

impl Dataset {
    pub fn from_parts(dim: usize, features: Vec<f64>, labels: Vec<usize>) -> Result<Self, FeelError> {
        if dim == 0 || features.len() != labels.len() * dim {
            return Err(FeelError::MalformedDataset {
                dim,
                feature_len: features.len(),
                labels: labels.len(),
            });
        }
        Ok(Self {
            dim,
            features,
            labels,
        })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn get(&self, index: usize) -> Option<(&[f64], usize)> {
        if index >= self.len() {
            return None;
        }
        Some((
            &self.features[index * self.dim..(index + 1) * self.dim],
            self.labels[index],
        ))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[f64], usize)> {
        self.features
            .chunks_exact(self.dim)
            .zip(self.labels.iter().copied())
    }

    /// Split into `devices` equally sized shards, in row order.
    pub fn partition_equal(&self, devices: usize) -> Result<Vec<Dataset>, FeelError> {
        if devices == 0 || !self.len().is_multiple_of(devices) {
            return Err(FeelError::UnevenPartition {
                samples: self.len(),
                devices,
            });
        }
        let per = self.len() / devices;
        let mut shards = Vec::with_capacity(devices);
        for k in 0..devices {
            let features = self.features[k * per * self.dim..(k + 1) * per * self.dim].to_vec();
            let labels = self.labels[k * per..(k + 1) * per].to_vec();
            shards.push(Dataset {
                dim: self.dim,
                features,
                labels,
            });
        }
        Ok(shards)
    }
}

/// How class means are placed in feature space.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeanLayout {
    /// Mean of class c is `separation` on coordinate `c % dim`: every pair
    /// of classes sits `separation * sqrt(2)` apart (for classes <= dim).
    Axis,
    /// Gaussian means, N(0, separation^2 / 2) per coordinate.
    Random,
}

/// Synthetic Gaussian-blob task description.
#[derive(Debug, Clone, PartialEq)]
pub struct BlobSpec {
    pub dim: usize,
    pub classes: usize,
    pub separation: f64,
    pub within_std: f64,
    pub layout: MeanLayout,
}

impl BlobSpec {
    /// Class means, one row of `dim` per class.
    pub fn class_means(&self, gaussian: &mut Gaussian) -> Vec<f64> {
        let mut means = alloc::vec![0.0; self.classes * self.dim];
        match self.layout {
            MeanLayout::Axis => {
                for c in 0..self.classes {
                    means[c * self.dim + c % self.dim] = self.separation;
                }
            }
            MeanLayout::Random => {
                let scale = self.separation / 2.0f64.sqrt();
                for m in means.iter_mut() {
                    *m = scale * gaussian.sample();
                }
            }
        }
        means
    }

    /// Draw `count` labeled samples around the given means.
    pub fn sample(
        &self,
        means: &[f64],
        count: usize,
        gaussian: &mut Gaussian,
        label_stream: &mut impl FnMut() -> usize,
    ) -> Dataset {
        let mut features = Vec::with_capacity(count * self.dim);
        let mut labels = Vec::with_capacity(count);
        for _ in 0..count {
            let y = label_stream() % self.classes;
            let mean = &means[y * self.dim..(y + 1) * self.dim];
            for &mu in mean {
                features.push(mu + self.within_std * gaussian.sample());
            }
            labels.push(y);
        }
        Dataset {
            dim: self.dim,
            features,
            labels,
        }
    }
}
