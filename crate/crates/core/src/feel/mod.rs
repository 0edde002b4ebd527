//! Federated edge learning harness.
//!
//! A server coordinates `devices` edge nodes across communication rounds:
//! each round the global model is broadcast, every device takes local
//! gradient steps on its own shard, and the local models return through a
//! configurable uplink: an ideal (exact averaging) transport, the
//! MFSK/histogram transport, or the linear-analog DSB baseline.

pub mod data;
pub mod model;
pub mod round;

pub use data::{BlobSpec, Dataset, MeanLayout};
pub use model::{
    evaluate, global_average, global_loss, local_loss, logits, loss_and_gradient, sgd_step,
    Activation, ModelSpec,
};
pub use round::{
    DsbTransport, FeelConfig, FeelSession, MfskTransport, Optimizer, RoundMetrics, TransportSpec,
};

use crate::channel::ChannelError;
use crate::dsb::DsbError;
use crate::modem::ModemError;
use crate::ocdm::OcdmError;
use crate::quantizer::QuantizerError;
use core::fmt;

/// Failure inside a transport pipeline.
#[derive(Debug, Clone, PartialEq)]
pub enum TransportFault {
    Quantizer(QuantizerError),
    Modem(ModemError),
    Channel(ChannelError),
    Ocdm(OcdmError),
    Dsb(DsbError),
}

impl fmt::Display for TransportFault {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Quantizer(e) => write!(f, "quantizer: {e}"),
            Self::Modem(e) => write!(f, "modem: {e}"),
            Self::Channel(e) => write!(f, "channel: {e}"),
            Self::Ocdm(e) => write!(f, "chirp multiplexer: {e}"),
            Self::Dsb(e) => write!(f, "dsb baseline: {e}"),
        }
    }
}

macro_rules! fault_from {
    ($variant:ident, $err:ty) => {
        impl From<$err> for TransportFault {
            fn from(e: $err) -> Self {
                Self::$variant(e)
            }
        }
    };
}

fault_from!(Quantizer, QuantizerError);
fault_from!(Modem, ModemError);
fault_from!(Channel, ChannelError);
fault_from!(Ocdm, OcdmError);
fault_from!(Dsb, DsbError);

#[derive(Debug, Clone, PartialEq)]
pub enum FeelError {
    /// Parameter vector length does not match the model spec.
    ParamLength { expected: usize, got: usize },
    /// Feature vector length does not match the model input.
    FeatureLength { expected: usize, got: usize },
    /// Operation needs a nonempty dataset.
    EmptyDataset,
    /// Sample index outside the dataset.
    SampleOutOfRange { index: usize, len: usize },
    /// Inconsistent feature/label buffer sizes.
    MalformedDataset {
        dim: usize,
        feature_len: usize,
        labels: usize,
    },
    /// Dataset cannot be split into equal shards.
    UnevenPartition { samples: usize, devices: usize },
    /// A gradient went non-finite in the given layer.
    NonFiniteGradient { layer: usize },
    /// Session construction arguments disagree.
    BadSession { reason: &'static str },
    /// A transport failed; carries the round and slot where it happened.
    Transport {
        round: u64,
        slot: u64,
        fault: TransportFault,
    },
}

impl fmt::Display for FeelError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::ParamLength { expected, got } => {
                write!(f, "parameter vector of length {got}, expected {expected}")
            }
            Self::FeatureLength { expected, got } => {
                write!(f, "feature vector of length {got}, expected {expected}")
            }
            Self::EmptyDataset => write!(f, "empty dataset"),
            Self::SampleOutOfRange { index, len } => {
                write!(f, "sample {index} outside dataset of {len}")
            }
            Self::MalformedDataset {
                dim,
                feature_len,
                labels,
            } => write!(
                f,
                "dataset with dim {dim}, {feature_len} feature values, {labels} labels"
            ),
            Self::UnevenPartition { samples, devices } => {
                write!(f, "{samples} samples do not split evenly over {devices} devices")
            }
            Self::NonFiniteGradient { layer } => {
                write!(f, "non-finite gradient in layer {layer}")
            }
            Self::BadSession { reason } => write!(f, "invalid session: {reason}"),
            Self::Transport { round, slot, fault } => {
                write!(f, "transport failure at round {round}, slot {slot}: {fault}")
            }
        }
    }
}

impl core::error::Error for FeelError {}
