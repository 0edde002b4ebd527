//! Binary-level checks: CSV schema, determinism, factorial completeness,
//! exit codes, fixture loading.

use std::collections::HashSet;
use std::path::Path;
use std::process::Command;

fn fmagg() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fmagg"))
}

fn write_config(dir: &Path, body: &str) -> std::path::PathBuf {
    let path = dir.join("config.toml");
    std::fs::write(&path, body).unwrap();
    path
}

const SMALL_CONFIG: &str = r#"
[feel]
devices = 6
rounds = 3
learning_rate = 1.0

[model]
input_dim = 8
classes = 4

[data]
samples_per_device = 8
test_samples = 60
separation = 5.0

[quantizer]
levels = [32]

[transports]
kinds = ["mfsk"]

[channel]
snr_db = [0.0]

[sweep]
seeds = [7]
"#;

#[test]
fn single_cell_emits_one_row_per_round() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), SMALL_CONFIG);
    let out = dir.path().join("rows.csv");
    let status = fmagg()
        .args(["sweep", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let text = std::fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "round,transport,snr_db,n_levels,seed,accuracy,loss,papr_db,hist_mse"
    );
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 3, "1 transport x 1 SNR x 1 seed x 3 rounds");
    for (i, row) in rows.iter().enumerate() {
        assert!(row.starts_with(&format!("{i},mfsk,0,32,7,")), "row {row:?}");
    }
    // Config echo written next to the CSV.
    let echo = std::fs::read_to_string(dir.path().join("rows.csv.config.toml")).unwrap();
    assert!(echo.contains("devices = 6"));
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), SMALL_CONFIG);
    let out_a = dir.path().join("a.csv");
    let out_b = dir.path().join("b.csv");
    for (out, threads) in [(&out_a, "1"), (&out_b, "4")] {
        let status = fmagg()
            .args(["sweep", "--config"])
            .arg(&config)
            .arg("--out")
            .arg(out)
            .args(["--threads", threads])
            .status()
            .unwrap();
        assert!(status.success());
    }
    let a = std::fs::read(&out_a).unwrap();
    let b = std::fs::read(&out_b).unwrap();
    assert_eq!(a, b, "rerun (even multithreaded) must be byte-identical");
}

#[test]
fn factorial_is_complete_and_unique() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        r#"
[feel]
devices = 4
rounds = 2
learning_rate = 1.0

[model]
input_dim = 6
classes = 3

[data]
samples_per_device = 6
test_samples = 30
separation = 5.0

[quantizer]
levels = [8, 32]

[transports]
kinds = ["ideal", "mfsk", "dsb"]

[channel]
snr_db = [inf, -10.0]

[sweep]
seeds = [1, 2]
"#,
    );
    let out = dir.path().join("grid.csv");
    let output = fmagg()
        .args(["sweep", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(&out)
        .args(["--threads", "3"])
        .output()
        .unwrap();
    assert!(output.status.success());
    // The DSB/levels redundancy warning lands on stderr.
    assert!(String::from_utf8_lossy(&output.stderr).contains("independent of n_levels"));
    let text = std::fs::read_to_string(&out).unwrap();
    let mut cells = HashSet::new();
    let mut rows = 0usize;
    for line in text.lines().skip(1) {
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(fields.len(), 9);
        // (round, transport, snr, levels, seed) is unique.
        assert!(cells.insert((
            fields[0].to_string(),
            fields[1].to_string(),
            fields[2].to_string(),
            fields[3].to_string(),
            fields[4].to_string()
        )));
        let accuracy: f64 = fields[5].parse().unwrap();
        assert!((0.0..=1.0).contains(&accuracy));
        let loss: f64 = fields[6].parse().unwrap();
        assert!(loss.is_finite());
        rows += 1;
    }
    // 3 transports x 2 levels x 2 SNR x 2 seeds x 2 rounds.
    assert_eq!(rows, 48);
}

#[test]
fn sweep_rows_match_a_direct_session() {
    use fmagg_cli::config::{Config, TransportKind};
    use fmagg_cli::sweep::{build_task, run_cell, CellKey};
    use fmagg_core::channel::Channel;
    use fmagg_core::feel::{FeelConfig, FeelSession, TransportSpec};

    let mut cfg = Config::default();
    cfg.feel.devices = 5;
    cfg.feel.rounds = 4;
    cfg.feel.learning_rate = 1.0;
    cfg.model.input_dim = 8;
    cfg.model.classes = 4;
    cfg.data.samples_per_device = 8;
    cfg.data.test_samples = 40;
    cfg.data.separation = 5.0;
    cfg.sweep.seeds = vec![3];

    let key = CellKey {
        transport: TransportKind::Ideal,
        levels: 32,
        snr_db: f64::INFINITY,
        seed: 3,
    };
    let rows = run_cell(&cfg, &key).unwrap();

    let fixture = build_task(&cfg, 3).unwrap();
    let mut session = FeelSession::new(
        fixture.spec,
        FeelConfig {
            devices: 5,
            learning_rate: 1.0,
            ..FeelConfig::default()
        },
        fixture.shards,
        fixture.test,
        fixture.initial,
        3,
    )
    .unwrap();
    let channel = Channel::new(0.0, 0).unwrap();
    let direct = session
        .run(4, &TransportSpec::Ideal, &channel)
        .unwrap();
    assert_eq!(rows.len(), direct.len());
    for (row, metrics) in rows.iter().zip(&direct) {
        assert_eq!(row.metrics.accuracy, metrics.accuracy);
        assert_eq!(row.metrics.loss, metrics.loss);
    }
}

#[test]
fn selftest_exits_zero() {
    let output = fmagg().arg("selftest").output().unwrap();
    assert!(output.status.success());
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("all selftest checks passed"));
    assert!(!stdout.contains("FAIL"));
}

#[test]
fn missing_config_is_a_clean_error() {
    let output = fmagg()
        .args(["sweep", "--config", "/nonexistent/nope.toml"])
        .output()
        .unwrap();
    assert!(!output.status.success());
    assert!(String::from_utf8_lossy(&output.stderr).contains("nope.toml"));
}

#[test]
fn invalid_config_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "[quantizer]\nlevels = [33]\n",
    );
    let output = fmagg()
        .args(["sweep", "--config"])
        .arg(&config)
        .output()
        .unwrap();
    assert!(!output.status.success());
    assert!(String::from_utf8_lossy(&output.stderr).contains("even"));
}

#[test]
fn papr_reports_both_transports() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        r#"
[feel]
devices = 6
rounds = 2
learning_rate = 1.0

[model]
input_dim = 8
classes = 4

[data]
samples_per_device = 8
test_samples = 40
separation = 5.0

[quantizer]
levels = [32]

[channel]
snr_db = [0.0]

[sweep]
seeds = [1]
"#,
    );
    let output = fmagg().args(["papr", "--config"]).arg(&config).output().unwrap();
    assert!(output.status.success());
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("mfsk,0,0"));
    assert!(stdout.contains("# mfsk: papr_db min 0.000 mean 0.000 max 0.000"));
    assert!(stdout.contains("# dsb: papr_db"));
}

#[test]
fn file_datasets_feed_the_sweep() {
    let dir = tempfile::tempdir().unwrap();
    // Two interleaved classes on one feature; 8 train rows, 4 test rows.
    let train = dir.path().join("train.txt");
    let test = dir.path().join("test.txt");
    let mut rows = String::from("# toy fixture\n");
    for i in 0..8 {
        let label = i % 2;
        let x = if label == 0 { -2.0 } else { 2.0 };
        rows.push_str(&format!("{} {label}\n", x + 0.1 * i as f64));
    }
    std::fs::write(&train, &rows).unwrap();
    std::fs::write(&test, "-2.0 0\n2.0 1\n-1.9 0\n2.2 1\n").unwrap();
    let config = write_config(
        dir.path(),
        &format!(
            r#"
[feel]
devices = 4
rounds = 2
learning_rate = 1.0

[model]
input_dim = 1
classes = 2

[data]
source = "file"
train = {train:?}
test = {test:?}

[quantizer]
levels = [8]

[transports]
kinds = ["ideal"]

[channel]
snr_db = [inf]

[sweep]
seeds = [1]
"#
        ),
    );
    let out = dir.path().join("file_sweep.csv");
    let status = fmagg()
        .args(["sweep", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let text = std::fs::read_to_string(&out).unwrap();
    let last = text.lines().last().unwrap();
    let accuracy: f64 = last.split(',').nth(5).unwrap().parse().unwrap();
    assert_eq!(accuracy, 1.0, "separable fixture should be learned exactly");
}
