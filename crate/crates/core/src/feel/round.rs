//! Communication rounds: local updates, transport uplink, metrics.

#[cfg(not(feature = "std"))]
use crate::math::F64Ext;
use crate::channel::{amplitude_for_power, Channel, NoiseKey};
use crate::dsb::{slot_amplitude, DsbModem};
use crate::feel::data::Dataset;
use crate::feel::model::{self, ModelSpec};
use crate::feel::{FeelError, TransportFault};
use crate::modem::{aggregate, papr_db, Aggregation, EmpiricalMeasure, MfskModem};
use crate::ocdm::ChirpMultiplexer;
use crate::quantizer::{Quantizer, SymbolIndex};
use crate::rng::substream;
use alloc::vec;
use alloc::vec::Vec;
use num_complex::Complex64;
use rand_core::RngCore;

const PURPOSE_MFSK: u64 = 1;
const PURPOSE_DSB: u64 = 2;

/// Local optimizer applied on each device.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Optimizer {
    Sgd,
    Adam {
        beta1: f64,
        beta2: f64,
        epsilon: f64,
    },
}

impl Optimizer {
    pub fn adam_default() -> Self {
        Self::Adam {
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// Training-side configuration of a federated session.
#[derive(Debug, Clone, PartialEq)]
pub struct FeelConfig {
    pub devices: usize,
    pub learning_rate: f64,
    /// Local optimization steps per communication round.
    pub local_steps: usize,
    /// Minibatch size per step; `None` runs full-batch gradients.
    pub batch_size: Option<usize>,
    pub optimizer: Optimizer,
}

impl Default for FeelConfig {
    fn default() -> Self {
        Self {
            devices: 50,
            learning_rate: 1.0,
            local_steps: 1,
            batch_size: None,
            optimizer: Optimizer::Sgd,
        }
    }
}

/// MFSK/histogram uplink parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct MfskTransport {
    /// Quantizer levels = tone count (even).
    pub levels: usize,
    /// Clipping half-range at the transport boundary.
    pub clip: f64,
    /// Per-device per-parameter transmit power (carrier amplitude squared).
    pub power: f64,
    /// Parameters multiplexed per slot via orthogonal chirps; 0 disables.
    pub ocdm_branches: usize,
    /// Project each received histogram onto the probability simplex before
    /// aggregating. Keeps the mean estimator stable at low SNR.
    pub denoise: bool,
    pub aggregation: Aggregation,
}

impl MfskTransport {
    pub fn new(levels: usize, clip: f64, power: f64) -> Self {
        Self {
            levels,
            clip,
            power,
            ocdm_branches: 0,
            denoise: true,
            aggregation: Aggregation::Mean,
        }
    }
}

/// Linear-analog DSB uplink parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct DsbTransport {
    pub samples: usize,
    pub carrier_cycles: usize,
    /// Total network transmit power target per slot.
    pub total_power: f64,
    pub clip: f64,
    /// Values below this magnitude are not transmitted.
    pub sparsify_threshold: f64,
}

impl DsbTransport {
    pub fn new(total_power: f64) -> Self {
        Self {
            samples: 32,
            carrier_cycles: 8,
            total_power,
            clip: 0.5,
            sparsify_threshold: 4.0e-3,
        }
    }
}

/// Uplink used to merge local models into the next global model.
#[derive(Debug, Clone, PartialEq)]
pub enum TransportSpec {
    /// Exact coordinate-wise averaging (no channel).
    Ideal,
    Mfsk(MfskTransport),
    Dsb(DsbTransport),
}

/// Per-round observables.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoundMetrics {
    pub round: u64,
    /// Test accuracy of the updated global model on the pooled IID test
    /// set (devices share the model, so per-device averaging is identical).
    pub accuracy: f64,
    /// Global training loss of the updated global model.
    pub loss: f64,
    /// Mean over devices of the per-parameter transmit-power PAPR.
    pub papr_db: f64,
    /// Mean squared error between received and exact histograms (MFSK only).
    pub hist_mse: f64,
    /// Channel slots consumed by the uplink.
    pub slots: u64,
}

struct UplinkOutcome {
    global: Vec<f64>,
    papr_db: f64,
    hist_mse: f64,
    slots: u64,
}

#[derive(Clone)]
struct AdamState {
    m: Vec<f64>,
    v: Vec<f64>,
    /// Running beta1^t and beta2^t for bias correction.
    beta1_pow: f64,
    beta2_pow: f64,
}

/// One federated training run: model, device shards, global state.
pub struct FeelSession {
    spec: ModelSpec,
    cfg: FeelConfig,
    shards: Vec<Dataset>,
    test: Dataset,
    global: Vec<f64>,
    round: u64,
    seed: u64,
    adam: Vec<AdamState>,
}

impl FeelSession {
    /// `seed` drives minibatch selection only; initial parameters and shards
    /// are supplied by the caller.
    pub fn new(
        spec: ModelSpec,
        cfg: FeelConfig,
        shards: Vec<Dataset>,
        test: Dataset,
        initial: Vec<f64>,
        seed: u64,
    ) -> Result<Self, FeelError> {
        if shards.len() != cfg.devices {
            return Err(FeelError::BadSession {
                reason: "shard count must equal device count",
            });
        }
        if cfg.devices == 0 || cfg.local_steps == 0 {
            return Err(FeelError::BadSession {
                reason: "devices and local_steps must be positive",
            });
        }
        if initial.len() != spec.param_count() {
            return Err(FeelError::ParamLength {
                expected: spec.param_count(),
                got: initial.len(),
            });
        }
        if shards.iter().any(Dataset::is_empty) || test.is_empty() {
            return Err(FeelError::EmptyDataset);
        }
        let len = shards[0].len();
        if shards.iter().any(|s| s.len() != len) {
            return Err(FeelError::BadSession {
                reason: "device shards must be equally sized",
            });
        }
        let adam = match cfg.optimizer {
            Optimizer::Sgd => Vec::new(),
            Optimizer::Adam { .. } => vec![
                AdamState {
                    m: vec![0.0; initial.len()],
                    v: vec![0.0; initial.len()],
                    beta1_pow: 1.0,
                    beta2_pow: 1.0,
                };
                cfg.devices
            ],
        };
        Ok(Self {
            spec,
            cfg,
            shards,
            test,
            global: initial,
            round: 0,
            seed,
            adam,
        })
    }

    #[inline]
    pub fn global_model(&self) -> &[f64] {
        &self.global
    }

    #[inline]
    pub fn round(&self) -> u64 {
        self.round
    }

    #[inline]
    pub fn model_spec(&self) -> &ModelSpec {
        &self.spec
    }

    /// Broadcast, local steps, uplink, metrics. Advances the round counter.
    pub fn run_round(
        &mut self,
        transport: &TransportSpec,
        channel: &Channel,
    ) -> Result<RoundMetrics, FeelError> {
        let mut locals = Vec::with_capacity(self.cfg.devices);
        for dev in 0..self.cfg.devices {
            locals.push(self.local_update(dev)?);
        }
        let outcome = match transport {
            TransportSpec::Ideal => UplinkOutcome {
                global: model::global_average(&locals)?,
                papr_db: 0.0,
                hist_mse: 0.0,
                slots: 0,
            },
            TransportSpec::Mfsk(t) => self.uplink_mfsk(t, &locals, channel)?,
            TransportSpec::Dsb(t) => self.uplink_dsb(t, &locals, channel)?,
        };
        self.global = outcome.global;
        let accuracy = model::evaluate(&self.spec, &self.global, &self.test)?;
        let loss = model::global_loss(&self.spec, &self.global, &self.shards)?;
        let metrics = RoundMetrics {
            round: self.round,
            accuracy,
            loss,
            papr_db: outcome.papr_db,
            hist_mse: outcome.hist_mse,
            slots: outcome.slots,
        };
        self.round += 1;
        Ok(metrics)
    }

    /// Run `rounds` communication rounds and collect the per-round metrics.
    pub fn run(
        &mut self,
        rounds: usize,
        transport: &TransportSpec,
        channel: &Channel,
    ) -> Result<Vec<RoundMetrics>, FeelError> {
        let mut out = Vec::with_capacity(rounds);
        for _ in 0..rounds {
            out.push(self.run_round(transport, channel)?);
        }
        Ok(out)
    }

    fn local_update(&mut self, device: usize) -> Result<Vec<f64>, FeelError> {
        let mut params = self.global.clone();
        let data = &self.shards[device];
        for step in 0..self.cfg.local_steps {
            let owned_batch = self.cfg.batch_size.map(|size| {
                let mut rng = substream(
                    self.seed,
                    &[self.round, device as u64, step as u64, 0xb47c],
                );
                (0..size.min(data.len()))
                    .map(|_| (rng.next_u64() % data.len() as u64) as usize)
                    .collect::<Vec<usize>>()
            });
            let (_, grad) =
                model::loss_and_gradient(&self.spec, &params, data, owned_batch.as_deref())?;
            match self.cfg.optimizer {
                Optimizer::Sgd => {
                    for (w, g) in params.iter_mut().zip(&grad) {
                        *w -= self.cfg.learning_rate * g;
                    }
                }
                Optimizer::Adam {
                    beta1,
                    beta2,
                    epsilon,
                } => {
                    let state = &mut self.adam[device];
                    state.beta1_pow *= beta1;
                    state.beta2_pow *= beta2;
                    let bias1 = 1.0 - state.beta1_pow;
                    let bias2 = 1.0 - state.beta2_pow;
                    for (((w, g), m), v) in params
                        .iter_mut()
                        .zip(&grad)
                        .zip(state.m.iter_mut())
                        .zip(state.v.iter_mut())
                    {
                        *m = beta1 * *m + (1.0 - beta1) * g;
                        *v = beta2 * *v + (1.0 - beta2) * g * g;
                        let m_hat = *m / bias1;
                        let v_hat = *v / bias2;
                        *w -= self.cfg.learning_rate * m_hat / (v_hat.sqrt() + epsilon);
                    }
                }
            }
        }
        Ok(params)
    }

    fn uplink_mfsk(
        &self,
        t: &MfskTransport,
        locals: &[Vec<f64>],
        channel: &Channel,
    ) -> Result<UplinkOutcome, FeelError> {
        let round = self.round;
        let fault = |slot: u64| {
            move |f: TransportFault| FeelError::Transport {
                round,
                slot,
                fault: f,
            }
        };
        let devices = locals.len();
        let params = locals[0].len();
        let quantizer = Quantizer::new(t.levels, t.clip).map_err(|e| fault(0)(e.into()))?;
        let amplitude = amplitude_for_power(t.power).map_err(|e| fault(0)(e.into()))?;
        let modem = MfskModem::new(t.levels, amplitude).map_err(|e| fault(0)(e.into()))?;

        let mut indices: Vec<Vec<SymbolIndex>> = Vec::with_capacity(devices);
        for w in locals {
            indices.push(quantizer.quantize_slice(w).map_err(|e| fault(0)(e.into()))?);
        }

        let mut global = vec![0.0; params];
        let mut mse_sum = 0.0;
        let mut slot_indices = Vec::with_capacity(devices);
        let slots;

        if t.ocdm_branches == 0 {
            slots = params as u64;
            let mut superposed = vec![0.0; t.levels];
            for q in 0..params {
                superposed.fill(0.0);
                for dev in indices.iter() {
                    modem
                        .modulate_into(dev[q], &mut superposed)
                        .map_err(|e| fault(q as u64)(e.into()))?;
                }
                let received = channel
                    .superpose(&[&superposed], NoiseKey::new(round, q as u64, PURPOSE_MFSK))
                    .map_err(|e| fault(q as u64)(e.into()))?;
                let measure = modem
                    .matched_filter(&received, devices)
                    .map_err(|e| fault(q as u64)(e.into()))?;
                slot_indices.clear();
                slot_indices.extend(indices.iter().map(|dev| dev[q]));
                global[q] = self
                    .finish_measure(t, &quantizer, &measure, &slot_indices, &mut mse_sum)
                    .map_err(fault(q as u64))?;
            }
        } else {
            let branches = t.ocdm_branches;
            let mux =
                ChirpMultiplexer::new(t.levels, branches).map_err(|e| fault(0)(e.into()))?;
            let slot_count = params.div_ceil(branches);
            slots = slot_count as u64;
            for slot in 0..slot_count {
                let first = slot * branches;
                let count = branches.min(params - first);
                // Same chirp set across devices: sum each branch first, then
                // spread once (multiplexing commutes with superposition).
                let mut branch_sums = vec![vec![0.0; t.levels]; count];
                for dev in indices.iter() {
                    for (b, sum) in branch_sums.iter_mut().enumerate() {
                        modem
                            .modulate_into(dev[first + b], sum)
                            .map_err(|e| fault(slot as u64)(e.into()))?;
                    }
                }
                let slot_signal = mux
                    .multiplex(&branch_sums)
                    .map_err(|e| fault(slot as u64)(e.into()))?;
                let received: Vec<Complex64> = channel
                    .superpose_complex(
                        &[&slot_signal],
                        NoiseKey::new(round, slot as u64, PURPOSE_MFSK),
                    )
                    .map_err(|e| fault(slot as u64)(e.into()))?;
                let recovered = mux
                    .demultiplex(&received, count)
                    .map_err(|e| fault(slot as u64)(e.into()))?;
                for (b, wave) in recovered.iter().enumerate() {
                    let q = first + b;
                    let measure = modem
                        .matched_filter(wave, devices)
                        .map_err(|e| fault(slot as u64)(e.into()))?;
                    slot_indices.clear();
                    slot_indices.extend(indices.iter().map(|dev| dev[q]));
                    global[q] = self
                        .finish_measure(t, &quantizer, &measure, &slot_indices, &mut mse_sum)
                        .map_err(fault(slot as u64))?;
                }
            }
        }

        // Constant-envelope tones: every device spends `power` on every
        // parameter, so the per-device PAPR is identically 0 dB.
        let per_device = vec![t.power; params];
        let papr = papr_db(&per_device).map_err(|e| fault(0)(e.into()))?;

        Ok(UplinkOutcome {
            global,
            papr_db: papr,
            hist_mse: mse_sum / params as f64,
            slots,
        })
    }

    fn finish_measure(
        &self,
        t: &MfskTransport,
        quantizer: &Quantizer,
        measure: &EmpiricalMeasure,
        transmitted: &[SymbolIndex],
        mse_sum: &mut f64,
    ) -> Result<f64, TransportFault> {
        let exact = EmpiricalMeasure::from_indices(transmitted, t.levels);
        *mse_sum += measure.mse(&exact);
        let cleaned;
        let used = if t.denoise {
            cleaned = measure.denoised();
            &cleaned
        } else {
            measure
        };
        let agg = aggregate(used, t.aggregation, quantizer)?;
        Ok(agg.value)
    }

    fn uplink_dsb(
        &self,
        t: &DsbTransport,
        locals: &[Vec<f64>],
        channel: &Channel,
    ) -> Result<UplinkOutcome, FeelError> {
        let round = self.round;
        let fault = |slot: u64| {
            move |f: TransportFault| FeelError::Transport {
                round,
                slot,
                fault: f,
            }
        };
        let devices = locals.len();
        let params = locals[0].len();
        let modem =
            DsbModem::new(t.samples, t.carrier_cycles).map_err(|e| fault(0)(e.into()))?;
        let mut global = vec![0.0; params];
        let mut powers: Vec<Vec<f64>> = vec![Vec::with_capacity(params); devices];
        let mut values = vec![0.0; devices];
        let mut superposed = vec![0.0; t.samples];
        for q in 0..params {
            for (dev, w) in locals.iter().enumerate() {
                let v = w[q].clamp(-t.clip, t.clip);
                values[dev] = if v.abs() < t.sparsify_threshold { 0.0 } else { v };
            }
            if values.iter().all(|&v| v == 0.0) {
                // Nobody transmits: the slot is skipped and the aggregate
                // defaults to zero.
                global[q] = 0.0;
                continue;
            }
            let amplitude =
                slot_amplitude(&values, t.total_power).map_err(|e| fault(q as u64)(e.into()))?;
            superposed.fill(0.0);
            for (dev, &v) in values.iter().enumerate() {
                modem
                    .modulate_into(v, amplitude, &mut superposed)
                    .map_err(|e| fault(q as u64)(e.into()))?;
                if v != 0.0 {
                    powers[dev].push((amplitude * v) * (amplitude * v));
                }
            }
            let received = channel
                .superpose(&[&superposed], NoiseKey::new(round, q as u64, PURPOSE_DSB))
                .map_err(|e| fault(q as u64)(e.into()))?;
            global[q] = modem
                .aggregate(&received, devices, amplitude)
                .map_err(|e| fault(q as u64)(e.into()))?;
        }

        // PAPR over the slots each device actually transmitted.
        let mut papr_sum = 0.0;
        let mut papr_count = 0usize;
        for dev in &powers {
            if !dev.is_empty() {
                papr_sum += papr_db(dev).map_err(|e| fault(0)(e.into()))?;
                papr_count += 1;
            }
        }
        Ok(UplinkOutcome {
            global,
            papr_db: if papr_count > 0 {
                papr_sum / papr_count as f64
            } else {
                0.0
            },
            hist_mse: 0.0,
            slots: params as u64,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::feel::data::{BlobSpec, MeanLayout};
    use crate::feel::model::Activation;
    use crate::rng::{substream, Gaussian};

    fn tiny_session(devices: usize, seed: u64) -> FeelSession {
        let spec = ModelSpec::new(4, Vec::new(), 3, Activation::Relu);
        let blob = BlobSpec {
            dim: 4,
            classes: 3,
            separation: 5.0,
            within_std: 1.0,
            layout: MeanLayout::Axis,
        };
        let mut g = Gaussian::new(substream(seed, &[10]));
        let means = blob.class_means(&mut g);
        let mut label_rng = substream(seed, &[11]);
        let mut next_label = || label_rng.next_u64() as usize;
        let train = blob.sample(&means, devices * 12, &mut g, &mut next_label);
        let test = blob.sample(&means, 60, &mut g, &mut next_label);
        let shards = train.partition_equal(devices).unwrap();
        let mut init_g = Gaussian::new(substream(seed, &[12]));
        let initial = spec.init_params(0.05, &mut init_g);
        FeelSession::new(spec, FeelConfig {
            devices,
            learning_rate: 1.0,
            ..FeelConfig::default()
        }, shards, test, initial, seed)
        .unwrap()
    }

    #[test]
    fn single_device_ideal_reduces_to_plain_sgd() {
        let mut session = tiny_session(1, 3);
        let channel = Channel::new(0.0, 0).unwrap();
        let spec = session.spec.clone();
        let shard = session.shards[0].clone();
        let mut manual = session.global.clone();
        for _ in 0..3 {
            manual = model::sgd_step(&spec, &manual, &shard, 1.0, None).unwrap();
        }
        session.run(3, &TransportSpec::Ideal, &channel).unwrap();
        for (a, b) in session.global_model().iter().zip(&manual) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn noiseless_mfsk_tracks_ideal_within_half_step() {
        let seed = 5;
        let channel = Channel::new(0.0, 7).unwrap();
        let mut ideal = tiny_session(4, seed);
        let mut mfsk = tiny_session(4, seed);
        // Slow learning keeps every weight inside the clip range, where the
        // per-coordinate bound is exact.
        ideal.cfg.learning_rate = 0.2;
        mfsk.cfg.learning_rate = 0.2;
        let transport = TransportSpec::Mfsk(MfskTransport::new(64, 0.5, 1.0));
        let quant = Quantizer::new(64, 0.5).unwrap();
        let half_step = quant.step() / 2.0;
        for _ in 0..3 {
            ideal.run_round(&TransportSpec::Ideal, &channel).unwrap();
            mfsk.run_round(&transport, &channel).unwrap();
            // All weights stay inside the clip range in this fixture, so the
            // only divergence allowed is per-coordinate quantization error.
            for (a, b) in mfsk.global_model().iter().zip(ideal.global_model()) {
                assert!(b.abs() <= 0.5, "fixture left the clip range: {b}");
                assert!((a - b).abs() <= half_step + 1e-12, "{a} vs {b}");
            }
            // Keep the two sessions aligned so the bound stays per-round.
            let snapshot = ideal.global_model().to_vec();
            mfsk.global = snapshot;
        }
    }

    #[test]
    fn mfsk_metrics_shapes() {
        let mut session = tiny_session(4, 9);
        let channel = Channel::new(0.0, 1).unwrap();
        let mut t = MfskTransport::new(32, 0.5, 1.0);
        t.ocdm_branches = 4;
        let m = session.run_round(&TransportSpec::Mfsk(t), &channel).unwrap();
        assert_eq!(m.round, 0);
        assert_eq!(m.papr_db, 0.0);
        assert!(m.hist_mse < 1e-20);
        // Q = 15 parameters at 4 per slot.
        assert_eq!(m.slots, 4);
        assert!(m.accuracy >= 0.0 && m.accuracy <= 1.0);
        assert!(m.loss.is_finite());
    }

    #[test]
    fn determinism_across_identical_sessions() {
        let channel = Channel::new(2.0, 77).unwrap();
        let transport = TransportSpec::Mfsk(MfskTransport::new(32, 0.5, 0.1));
        let run = |seed| {
            let mut s = tiny_session(4, seed);
            s.run(4, &transport, &channel).unwrap()
        };
        let a = run(21);
        let b = run(21);
        assert_eq!(a, b);
        let c = run(22);
        assert_ne!(a, c);
    }

    #[test]
    fn dsb_papr_is_zero_for_constant_weights() {
        // Every device holds the same constant parameter vector, so each
        // slot carries the same per-device power and the PAPR degenerates
        // to 0 dB.
        let spec = ModelSpec::new(2, Vec::new(), 2, Activation::Relu);
        let data = Dataset::from_parts(
            2,
            alloc::vec![1.0, 0.0, 0.0, 1.0],
            alloc::vec![0, 1],
        )
        .unwrap();
        let shards = alloc::vec![data.clone(), data.clone(), data.clone()];
        let cfg = FeelConfig {
            devices: 3,
            learning_rate: 0.0,
            ..FeelConfig::default()
        };
        let initial = vec![0.3; spec.param_count()];
        let mut session = FeelSession::new(spec, cfg, shards, data, initial, 2).unwrap();
        let channel = Channel::new(0.0, 6).unwrap();
        let m = session
            .run_round(&TransportSpec::Dsb(DsbTransport::new(1.0)), &channel)
            .unwrap();
        assert_eq!(m.papr_db, 0.0);
    }

    #[test]
    fn dsb_skips_all_zero_slots() {
        let spec = ModelSpec::new(2, Vec::new(), 2, Activation::Relu);
        let data = Dataset::from_parts(
            2,
            alloc::vec![1.0, 0.0, 0.0, 1.0],
            alloc::vec![0, 1],
        )
        .unwrap();
        let shards = alloc::vec![data.clone(), data.clone()];
        // Zero initial model with zero learning rate: every local model is
        // all-zero, so every DSB slot is skipped and the globals stay zero.
        let session_cfg = FeelConfig {
            devices: 2,
            learning_rate: 0.0,
            ..FeelConfig::default()
        };
        let initial = vec![0.0; spec.param_count()];
        let mut session =
            FeelSession::new(spec, session_cfg, shards, data, initial, 1).unwrap();
        let channel = Channel::new(1.0, 5).unwrap();
        let m = session
            .run_round(&TransportSpec::Dsb(DsbTransport::new(1.0)), &channel)
            .unwrap();
        assert!(session.global_model().iter().all(|&w| w == 0.0));
        assert_eq!(m.papr_db, 0.0);
    }
}
