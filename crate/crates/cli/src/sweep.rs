//! Full-factorial sweep over (transport, tone count, SNR, seed), one metrics
//! row per communication round.

use crate::config::{Config, TransportKind};
use crate::dataset_file;
use anyhow::{anyhow, Context, Result};
use fmagg_core::channel::Channel;
use fmagg_core::feel::{
    BlobSpec, Dataset, DsbTransport, FeelConfig, FeelSession, MfskTransport, ModelSpec,
    RoundMetrics, TransportSpec,
};
use fmagg_core::rng::{substream, Gaussian, RngCore};
use std::fmt::Write as _;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

pub const CSV_HEADER: &str = "round,transport,snr_db,n_levels,seed,accuracy,loss,papr_db,hist_mse";

/// One sweep cell: a full training run at a fixed operating point.
#[derive(Debug, Clone, PartialEq)]
pub struct CellKey {
    pub transport: TransportKind,
    pub levels: usize,
    pub snr_db: f64,
    pub seed: u64,
}

/// One CSV row.
#[derive(Debug, Clone)]
pub struct MetricsRow {
    pub key: CellKey,
    pub metrics: RoundMetrics,
}

impl MetricsRow {
    fn write_csv(&self, out: &mut String) {
        let k = &self.key;
        let m = &self.metrics;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            m.round,
            k.transport.label(),
            fmt_snr(k.snr_db),
            k.levels,
            k.seed,
            m.accuracy,
            m.loss,
            m.papr_db,
            m.hist_mse
        );
    }
}

fn fmt_snr(snr: f64) -> String {
    if snr == f64::INFINITY {
        "inf".to_string()
    } else {
        format!("{snr}")
    }
}

/// Deterministic total order on cells; the output is sorted by it.
fn cell_order(a: &CellKey, b: &CellKey) -> std::cmp::Ordering {
    (a.transport, a.levels, a.seed)
        .cmp(&(b.transport, b.levels, b.seed))
        .then(a.snr_db.total_cmp(&b.snr_db))
}

/// Expand the config's full factorial into cell keys.
pub fn cells(cfg: &Config) -> Vec<CellKey> {
    let mut keys = Vec::new();
    for transport in cfg.transport_kinds() {
        for &levels in &cfg.quantizer.levels {
            for &snr_db in &cfg.channel.snr_db {
                for &seed in &cfg.sweep.seeds {
                    keys.push(CellKey {
                        transport,
                        levels,
                        snr_db,
                        seed,
                    });
                }
            }
        }
    }
    keys.sort_by(cell_order);
    keys
}

/// Deterministic task material for one seed: shards, test set, initial model.
pub struct TaskFixture {
    pub spec: ModelSpec,
    pub shards: Vec<Dataset>,
    pub test: Dataset,
    pub initial: Vec<f64>,
}

/// Build the per-seed task. Streams are keyed off the seed only, so every
/// transport and SNR cell of one seed trains on identical data from an
/// identical initialization.
pub fn build_task(cfg: &Config, seed: u64) -> Result<TaskFixture> {
    let spec = ModelSpec::new(
        cfg.model.input_dim,
        cfg.model.hidden.clone(),
        cfg.model.classes,
        cfg.activation()?,
    );
    let (train, test) = match cfg.data.source.as_str() {
        "blobs" => {
            let blob = BlobSpec {
                dim: cfg.model.input_dim,
                classes: cfg.model.classes,
                separation: cfg.data.separation,
                within_std: cfg.data.within_std,
                layout: cfg.layout()?,
            };
            let mut mean_g = Gaussian::new(substream(seed, &[0x4d45414e]));
            let means = blob.class_means(&mut mean_g);
            let mut train_g = Gaussian::new(substream(seed, &[0x545241494e]));
            let mut train_labels = substream(seed, &[0x4c41424c]);
            let mut next_train = || train_labels.next_u64() as usize;
            let train = blob.sample(
                &means,
                cfg.feel.devices * cfg.data.samples_per_device,
                &mut train_g,
                &mut next_train,
            );
            let mut test_g = Gaussian::new(substream(seed, &[0x54455354]));
            let mut test_labels = substream(seed, &[0x544c424c]);
            let mut next_test = || test_labels.next_u64() as usize;
            let test = blob.sample(&means, cfg.data.test_samples, &mut test_g, &mut next_test);
            (train, test)
        }
        "file" => {
            let train_path = cfg.data.train.as_ref().expect("validated");
            let test_path = cfg.data.test.as_ref().expect("validated");
            let train = dataset_file::load(Path::new(train_path), cfg.model.input_dim)
                .with_context(|| format!("loading train fixture {train_path}"))?;
            let test = dataset_file::load(Path::new(test_path), cfg.model.input_dim)
                .with_context(|| format!("loading test fixture {test_path}"))?;
            (
                dataset_file::trim_for_devices(train, cfg.feel.devices)?,
                test,
            )
        }
        other => return Err(anyhow!("unknown data source {other:?}")),
    };
    let shards = train
        .partition_equal(cfg.feel.devices)
        .map_err(|e| anyhow!("partitioning: {e}"))?;
    let mut init_g = Gaussian::new(substream(seed, &[0x494e4954]));
    let initial = spec.init_params(cfg.feel.init_scale, &mut init_g);
    Ok(TaskFixture {
        spec,
        shards,
        test,
        initial,
    })
}

/// Run one cell: build the task for its seed and train for the configured
/// number of rounds through the cell's transport.
pub fn run_cell(cfg: &Config, key: &CellKey) -> Result<Vec<MetricsRow>> {
    let fixture = build_task(cfg, key.seed)?;
    let (power, n0) = Config::operating_point(key.snr_db);
    let channel_seed = substream(
        key.seed,
        &[
            0xC4A2,
            key.transport as u64,
            key.levels as u64,
            key.snr_db.to_bits(),
        ],
    )
    .next_u64();
    let channel = Channel::new(n0, channel_seed).map_err(|e| anyhow!("channel: {e}"))?;
    let transport = match key.transport {
        TransportKind::Ideal => TransportSpec::Ideal,
        TransportKind::Mfsk => TransportSpec::Mfsk(MfskTransport {
            levels: key.levels,
            clip: cfg.quantizer.clip,
            power,
            ocdm_branches: cfg.transports.ocdm_branches,
            denoise: cfg.transports.denoise,
            aggregation: cfg.aggregation()?,
        }),
        TransportKind::Dsb => TransportSpec::Dsb(DsbTransport {
            samples: cfg.transports.dsb.samples,
            carrier_cycles: cfg.transports.dsb.carrier_cycles,
            total_power: power,
            clip: cfg.quantizer.clip,
            sparsify_threshold: cfg.transports.dsb.sparsify_threshold,
        }),
    };
    let feel_cfg = FeelConfig {
        devices: cfg.feel.devices,
        learning_rate: cfg.feel.learning_rate,
        local_steps: cfg.feel.local_steps,
        batch_size: cfg.feel.batch_size,
        optimizer: cfg.optimizer()?,
    };
    let mut session = FeelSession::new(
        fixture.spec,
        feel_cfg,
        fixture.shards,
        fixture.test,
        fixture.initial,
        key.seed,
    )
    .map_err(|e| anyhow!("session: {e}"))?;
    let metrics = session
        .run(cfg.feel.rounds, &transport, &channel)
        .map_err(|e| anyhow!("cell {key:?}: {e}"))?;
    Ok(metrics
        .into_iter()
        .map(|m| MetricsRow {
            key: key.clone(),
            metrics: m,
        })
        .collect())
}

/// Run the whole sweep on `threads` workers; rows come back in cell order
/// regardless of scheduling.
pub fn run_sweep(cfg: &Config, threads: usize) -> Result<Vec<MetricsRow>> {
    let keys = cells(cfg);
    if cfg.transport_kinds().contains(&TransportKind::Dsb) && cfg.quantizer.levels.len() > 1 {
        eprintln!(
            "note: dsb accuracy is independent of n_levels; duplicate cells run \
             for factorial completeness"
        );
    }
    let workers = threads.max(1).min(keys.len().max(1));
    let results: Vec<Option<Result<Vec<MetricsRow>>>> = {
        let slots: Mutex<Vec<Option<Result<Vec<MetricsRow>>>>> =
            Mutex::new((0..keys.len()).map(|_| None).collect());
        let next = AtomicUsize::new(0);
        std::thread::scope(|scope| {
            for _ in 0..workers {
                scope.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::Relaxed);
                    if i >= keys.len() {
                        break;
                    }
                    let outcome = run_cell(cfg, &keys[i]);
                    slots.lock().unwrap()[i] = Some(outcome);
                });
            }
        });
        slots.into_inner().unwrap()
    };
    let mut rows = Vec::new();
    for (i, slot) in results.into_iter().enumerate() {
        let cell_rows = slot
            .ok_or_else(|| anyhow!("cell {i} never ran"))?
            .with_context(|| format!("cell {:?}", keys[i]))?;
        rows.extend(cell_rows);
    }
    Ok(rows)
}

/// Render rows to the CSV document (header + one line per round).
pub fn to_csv(rows: &[MetricsRow]) -> String {
    let mut out = String::with_capacity(rows.len() * 64 + CSV_HEADER.len() + 1);
    out.push_str(CSV_HEADER);
    out.push('\n');
    for row in rows {
        row.write_csv(&mut out);
    }
    out
}

/// Write the CSV and the config echo (`<output>.config.toml`).
pub fn write_outputs(cfg: &Config, rows: &[MetricsRow], output: &Path) -> Result<()> {
    if let Some(parent) = output.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)
                .with_context(|| format!("creating {}", parent.display()))?;
        }
    }
    std::fs::write(output, to_csv(rows))
        .with_context(|| format!("writing {}", output.display()))?;
    let echo_path = {
        let mut s = output.as_os_str().to_owned();
        s.push(".config.toml");
        std::path::PathBuf::from(s)
    };
    let echo = toml::to_string_pretty(cfg).context("serializing config echo")?;
    std::fs::write(&echo_path, echo)
        .with_context(|| format!("writing {}", echo_path.display()))?;
    Ok(())
}
