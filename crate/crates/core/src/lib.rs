//! Simulation core for frequency-modulation aggregation in federated edge
//! learning.
//!
//! Edge devices quantize model parameters, transmit them as DCT-based MFSK
//! waveforms (optionally multiplexed onto orthogonal chirps), the channel
//! superposes them with AWGN, and the server recovers a per-parameter
//! histogram from which any aggregation function computes the global model.
//! A linear-analog DSB baseline is included for comparison.
//!
//! The crate is `no_std`-compatible (with `alloc`); disable the default
//! `std` feature for embedded use. All randomness is drawn from seeded,
//! keyed substreams so that every simulation is bit-reproducible.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod channel;
pub mod dsb;
pub mod feel;
pub(crate) mod math;
pub mod modem;
pub mod ocdm;
pub mod quantizer;
pub mod rng;

pub use channel::{Channel, ChannelError, NoiseKey};
pub use num_complex::Complex64;
pub use modem::{aggregate, papr_db, Aggregate, Aggregation, EmpiricalMeasure, MfskModem, ModemError};
pub use ocdm::{dfnt_matrix, num_slots, ChirpMatrix, ChirpMultiplexer, OcdmError};
pub use quantizer::{Quantizer, QuantizerError, SymbolIndex};
