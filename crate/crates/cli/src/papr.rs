//! Per-transport PAPR summary.
//!
//! Runs one representative cell per physical transport (first tone count,
//! first finite SNR, first seed) and reports the per-round PAPR of the
//! per-parameter transmit powers, mean over devices. MFSK tones have a
//! constant envelope, so their figure is identically 0 dB; the DSB figure
//! tracks the trained weight distribution.

use crate::config::{Config, TransportKind};
use crate::sweep;
use anyhow::{bail, Result};
use std::fmt::Write as _;

pub struct TransportPapr {
    pub transport: TransportKind,
    pub per_round_db: Vec<f64>,
}

pub fn report(cfg: &Config) -> Result<Vec<TransportPapr>> {
    let levels = *cfg.quantizer.levels.first().expect("validated");
    let snr_db = cfg
        .channel
        .snr_db
        .iter()
        .copied()
        .find(|s| s.is_finite())
        .unwrap_or(f64::INFINITY);
    let seed = *cfg.sweep.seeds.first().expect("validated");
    let mut out = Vec::new();
    for transport in cfg.transport_kinds() {
        if transport == TransportKind::Ideal {
            continue; // no transmissions, nothing to report
        }
        let rows = sweep::run_cell(
            cfg,
            &sweep::CellKey {
                transport,
                levels,
                snr_db,
                seed,
            },
        )?;
        if rows.is_empty() {
            bail!("no completed rounds for {}", transport.label());
        }
        out.push(TransportPapr {
            transport,
            per_round_db: rows.iter().map(|r| r.metrics.papr_db).collect(),
        });
    }
    if out.is_empty() {
        bail!("no transmitting transports configured (only ideal)");
    }
    Ok(out)
}

pub fn render(reports: &[TransportPapr]) -> String {
    let mut text = String::new();
    let _ = writeln!(text, "transport,round,papr_db");
    for report in reports {
        for (round, papr) in report.per_round_db.iter().enumerate() {
            let _ = writeln!(text, "{},{round},{papr}", report.transport.label());
        }
    }
    let _ = writeln!(text);
    for report in reports {
        let n = report.per_round_db.len() as f64;
        let mean = report.per_round_db.iter().sum::<f64>() / n;
        let max = report
            .per_round_db
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max);
        let min = report
            .per_round_db
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min);
        let _ = writeln!(
            text,
            "# {}: papr_db min {min:.3} mean {mean:.3} max {max:.3}",
            report.transport.label()
        );
    }
    text
}
