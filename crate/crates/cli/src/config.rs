//! Sweep configuration file: a single TOML document describing the task,
//! the quantizer grid, the transports and the channel operating points.

use anyhow::{bail, Context, Result};
use fmagg_core::feel::{Activation, MeanLayout, Optimizer};
use fmagg_core::modem::Aggregation;
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub feel: FeelSection,
    pub model: ModelSection,
    pub data: DataSection,
    pub quantizer: QuantizerSection,
    pub transports: TransportsSection,
    pub channel: ChannelSection,
    pub sweep: SweepSection,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeelSection {
    pub devices: usize,
    pub rounds: usize,
    pub learning_rate: f64,
    pub local_steps: usize,
    /// Full batch when absent.
    pub batch_size: Option<usize>,
    /// "sgd" or "adam".
    pub optimizer: String,
    pub init_scale: f64,
}

impl Default for FeelSection {
    fn default() -> Self {
        Self {
            devices: 50,
            rounds: 10,
            learning_rate: 2.0,
            local_steps: 1,
            batch_size: None,
            optimizer: "sgd".into(),
            init_scale: 0.05,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    pub input_dim: usize,
    pub hidden: Vec<usize>,
    pub classes: usize,
    /// "relu" or "tanh".
    pub activation: String,
}

impl Default for ModelSection {
    fn default() -> Self {
        Self {
            input_dim: 64,
            hidden: Vec::new(),
            classes: 16,
            activation: "relu".into(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataSection {
    /// "blobs" (synthetic) or "file" (fixture files).
    pub source: String,
    pub samples_per_device: usize,
    pub test_samples: usize,
    pub separation: f64,
    pub within_std: f64,
    /// "axis" or "random".
    pub layout: String,
    /// Fixture paths, used when source = "file".
    pub train: Option<String>,
    pub test: Option<String>,
}

impl Default for DataSection {
    fn default() -> Self {
        Self {
            source: "blobs".into(),
            samples_per_device: 40,
            test_samples: 800,
            separation: 10.0,
            within_std: 1.0,
            layout: "axis".into(),
            train: None,
            test: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuantizerSection {
    pub clip: f64,
    /// Tone counts to sweep; each must be even.
    pub levels: Vec<usize>,
}

impl Default for QuantizerSection {
    fn default() -> Self {
        Self {
            clip: 0.5,
            levels: vec![32, 256],
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TransportsSection {
    /// Any of "ideal", "mfsk", "dsb".
    pub kinds: Vec<String>,
    /// Histogram simplex projection before aggregating (MFSK).
    pub denoise: bool,
    /// Chirp-multiplexed parameters per slot; 0 disables.
    pub ocdm_branches: usize,
    /// "mean", "median", "majority" or "trimmed:<alpha>".
    pub aggregation: String,
    pub dsb: DsbSection,
}

impl Default for TransportsSection {
    fn default() -> Self {
        Self {
            kinds: vec!["ideal".into(), "mfsk".into(), "dsb".into()],
            denoise: true,
            ocdm_branches: 0,
            aggregation: "mean".into(),
            dsb: DsbSection::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DsbSection {
    pub samples: usize,
    pub carrier_cycles: usize,
    pub sparsify_threshold: f64,
}

impl Default for DsbSection {
    fn default() -> Self {
        Self {
            samples: 32,
            carrier_cycles: 8,
            sparsify_threshold: 4.0e-3,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelSection {
    /// Operating points; `inf` is the noiseless reference. Average SNR
    /// convention: per-device per-parameter transmit power over a 0 dB
    /// noise floor (n0/2 = 1), so power = 10^(snr/10).
    pub snr_db: Vec<f64>,
}

impl Default for ChannelSection {
    fn default() -> Self {
        Self {
            snr_db: vec![f64::INFINITY, 0.0, -5.0, -10.0, -15.0, -20.0],
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub seeds: Vec<u64>,
    pub output: String,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            seeds: vec![1, 2, 3, 4, 5],
            output: "sweep.csv".into(),
        }
    }
}

/// Transport families the sweep can exercise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum TransportKind {
    Ideal,
    Mfsk,
    Dsb,
}

impl TransportKind {
    pub fn label(self) -> &'static str {
        match self {
            Self::Ideal => "ideal",
            Self::Mfsk => "mfsk",
            Self::Dsb => "dsb",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "ideal" => Ok(Self::Ideal),
            "mfsk" => Ok(Self::Mfsk),
            "dsb" => Ok(Self::Dsb),
            other => bail!("unknown transport kind {other:?} (expected ideal, mfsk or dsb)"),
        }
    }
}

impl Config {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let cfg: Config = toml::from_str(&text)
            .with_context(|| format!("parsing config {}", path.display()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.feel.devices == 0 || self.feel.rounds == 0 || self.feel.local_steps == 0 {
            bail!("feel.devices, feel.rounds and feel.local_steps must be positive");
        }
        if !(self.feel.learning_rate.is_finite() && self.feel.learning_rate >= 0.0) {
            bail!("feel.learning_rate must be a finite nonnegative number");
        }
        self.optimizer()?;
        self.activation()?;
        self.layout()?;
        self.aggregation()?;
        if self.model.input_dim == 0 || self.model.classes < 2 {
            bail!("model needs input_dim >= 1 and classes >= 2");
        }
        if self.quantizer.levels.is_empty() {
            bail!("quantizer.levels must list at least one tone count");
        }
        for &n in &self.quantizer.levels {
            if n < 2 || n % 2 != 0 {
                bail!("quantizer.levels entries must be even and >= 2, got {n}");
            }
        }
        if !(self.quantizer.clip.is_finite() && self.quantizer.clip > 0.0) {
            bail!("quantizer.clip must be positive");
        }
        if self.channel.snr_db.is_empty() {
            bail!("channel.snr_db must list at least one operating point");
        }
        for &snr in &self.channel.snr_db {
            if snr.is_nan() || snr == f64::NEG_INFINITY {
                bail!("channel.snr_db entries must be finite or +inf, got {snr}");
            }
        }
        if self.sweep.seeds.is_empty() {
            bail!("sweep.seeds must list at least one seed");
        }
        if self.transports.kinds.is_empty() {
            bail!("transports.kinds must list at least one transport");
        }
        for kind in &self.transports.kinds {
            TransportKind::parse(kind)?;
        }
        if self.transports.ocdm_branches > 0 {
            for &n in &self.quantizer.levels {
                if self.transports.ocdm_branches > n {
                    bail!(
                        "transports.ocdm_branches = {} exceeds quantizer level count {n}",
                        self.transports.ocdm_branches
                    );
                }
            }
        }
        match self.data.source.as_str() {
            "blobs" => {
                if self.data.samples_per_device == 0 || self.data.test_samples == 0 {
                    bail!("data.samples_per_device and data.test_samples must be positive");
                }
            }
            "file" => {
                if self.data.train.is_none() || self.data.test.is_none() {
                    bail!("data.source = \"file\" requires data.train and data.test paths");
                }
            }
            other => bail!("unknown data.source {other:?} (expected blobs or file)"),
        }
        Ok(())
    }

    pub fn transport_kinds(&self) -> Vec<TransportKind> {
        self.transports
            .kinds
            .iter()
            .map(|k| TransportKind::parse(k).expect("validated"))
            .collect()
    }

    pub fn optimizer(&self) -> Result<Optimizer> {
        match self.feel.optimizer.as_str() {
            "sgd" => Ok(Optimizer::Sgd),
            "adam" => Ok(Optimizer::adam_default()),
            other => bail!("unknown optimizer {other:?} (expected sgd or adam)"),
        }
    }

    pub fn activation(&self) -> Result<Activation> {
        match self.model.activation.as_str() {
            "relu" => Ok(Activation::Relu),
            "tanh" => Ok(Activation::Tanh),
            other => bail!("unknown activation {other:?} (expected relu or tanh)"),
        }
    }

    pub fn layout(&self) -> Result<MeanLayout> {
        match self.data.layout.as_str() {
            "axis" => Ok(MeanLayout::Axis),
            "random" => Ok(MeanLayout::Random),
            other => bail!("unknown mean layout {other:?} (expected axis or random)"),
        }
    }

    pub fn aggregation(&self) -> Result<Aggregation> {
        let s = self.transports.aggregation.as_str();
        match s {
            "mean" => Ok(Aggregation::Mean),
            "median" => Ok(Aggregation::Median),
            "majority" => Ok(Aggregation::MajorityVote),
            _ => {
                if let Some(alpha) = s.strip_prefix("trimmed:") {
                    let alpha: f64 = alpha
                        .parse()
                        .with_context(|| format!("parsing trim fraction in {s:?}"))?;
                    if !(0.0..0.5).contains(&alpha) {
                        bail!("trim fraction must be in [0, 0.5), got {alpha}");
                    }
                    Ok(Aggregation::TrimmedMean { alpha })
                } else {
                    bail!("unknown aggregation {s:?} (mean, median, majority or trimmed:<alpha>)")
                }
            }
        }
    }

    /// (transmit power, noise level) for one SNR point. `inf` means a
    /// noiseless channel at unit power.
    pub fn operating_point(snr_db: f64) -> (f64, f64) {
        if snr_db == f64::INFINITY {
            (1.0, 0.0)
        } else {
            (10.0f64.powf(snr_db / 10.0), 2.0)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_validates() {
        Config::default().validate().unwrap();
    }

    #[test]
    fn toml_round_trip_preserves_infinity() {
        let cfg = Config::default();
        let text = toml::to_string_pretty(&cfg).unwrap();
        let back: Config = toml::from_str(&text).unwrap();
        assert_eq!(back.channel.snr_db[0], f64::INFINITY);
        back.validate().unwrap();
    }

    #[test]
    fn rejects_odd_levels_and_unknown_kinds() {
        let mut cfg = Config::default();
        cfg.quantizer.levels = vec![33];
        assert!(cfg.validate().is_err());
        let mut cfg = Config::default();
        cfg.transports.kinds = vec!["carrier-pigeon".into()];
        assert!(cfg.validate().is_err());
        let mut cfg = Config::default();
        cfg.transports.aggregation = "trimmed:0.7".into();
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn operating_points_follow_the_snr_convention() {
        let (p, n0) = Config::operating_point(f64::INFINITY);
        assert_eq!(n0, 0.0);
        assert_eq!(p, 1.0);
        let (p, n0) = Config::operating_point(0.0);
        assert_eq!(p, 1.0);
        assert_eq!(n0, 2.0);
        let (p, _) = Config::operating_point(-10.0);
        assert!((p - 0.1).abs() < 1e-15);
    }
}
