//! Experiment orchestration for the frequency-modulation aggregation
//! simulator: config parsing, sweeps, PAPR reports and the invariant
//! self-test. The `fmagg` binary is a thin wrapper over this library.

pub mod config;
pub mod dataset_file;
pub mod papr;
pub mod selftest;
pub mod sweep;
