//! Fast invariant suite behind `fmagg selftest`: one line per check,
//! nonzero exit on any violation.

use fmagg_core::channel::{amplitude_for_power, Channel, NoiseKey};
use fmagg_core::dsb::{slot_amplitude, DsbModem};
use fmagg_core::feel::{local_loss, loss_and_gradient, Activation, Dataset, ModelSpec};
use fmagg_core::modem::{aggregate, papr_db, Aggregation, EmpiricalMeasure, MfskModem};
use fmagg_core::ocdm::{dfnt_matrix, num_slots, ChirpMultiplexer};
use fmagg_core::quantizer::{Quantizer, SymbolIndex};
use fmagg_core::rng::{substream, Gaussian, RngCore};
use fmagg_core::Complex64;

type Check = (&'static str, fn() -> Result<(), String>);

fn ensure(cond: bool, message: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(message.into())
    }
}

fn quantizer_round_trip() -> Result<(), String> {
    let quant = Quantizer::new(256, 0.5).map_err(|e| e.to_string())?;
    let half = quant.step() / 2.0;
    let mut rng = substream(101, &[0]);
    for _ in 0..10_000 {
        let w = ((rng.next_u64() >> 11) as f64 * (2.0 / 9_007_199_254_740_992.0) - 1.0) * 0.8;
        let m = quant.quantize(w).map_err(|e| e.to_string())?;
        let back = quant.dequantize(m.value() as f64);
        let clipped = w.clamp(-0.5, 0.5);
        ensure(
            (back - clipped).abs() <= half + 1e-15,
            format!("round trip error beyond step/2 at w = {w}"),
        )?;
    }
    ensure(
        quant.quantize(0.0).map_err(|e| e.to_string())?.value() == 128,
        "tie at zero did not round to the even index",
    )
}

fn tone_bank_orthonormal() -> Result<(), String> {
    for n in [8usize, 32] {
        let modem = MfskModem::new(n, 1.0).map_err(|e| e.to_string())?;
        for a in 0..n {
            let za = modem.modulate(SymbolIndex(a)).map_err(|e| e.to_string())?;
            for b in a..n {
                let zb = modem.modulate(SymbolIndex(b)).map_err(|e| e.to_string())?;
                let dot: f64 = za.iter().zip(&zb).map(|(x, y)| x * y).sum();
                let expected = if a == b { 1.0 } else { 0.0 };
                ensure(
                    (dot - expected).abs() < 1e-10,
                    format!("tones {a},{b} of {n}: inner product {dot}"),
                )?;
            }
        }
    }
    Ok(())
}

fn histogram_reconstruction() -> Result<(), String> {
    let n = 32;
    let modem = MfskModem::new(n, 1.5).map_err(|e| e.to_string())?;
    let mut rng = substream(102, &[0]);
    let indices: Vec<SymbolIndex> = (0..50)
        .map(|_| SymbolIndex((rng.next_u64() % n as u64) as usize))
        .collect();
    let mut y = vec![0.0; n];
    for &m in &indices {
        modem.modulate_into(m, &mut y).map_err(|e| e.to_string())?;
    }
    let measure = modem.matched_filter(&y, 50).map_err(|e| e.to_string())?;
    let exact = EmpiricalMeasure::from_indices(&indices, n);
    for (bin, (a, b)) in measure.bins().iter().zip(exact.bins()).enumerate() {
        ensure(
            (a - b).abs() < 1e-10,
            format!("histogram bin {bin}: {a} vs {b}"),
        )?;
    }
    let quant = Quantizer::new(n, 0.5).map_err(|e| e.to_string())?;
    let agg = aggregate(&measure, Aggregation::Mean, &quant).map_err(|e| e.to_string())?;
    let direct: f64 = indices
        .iter()
        .map(|&m| quant.level_of(m).unwrap())
        .sum::<f64>()
        / 50.0;
    ensure(
        (agg.value - direct).abs() < 1e-10,
        "mean aggregate differs from dequantized average",
    )
}

fn dfnt_unitary() -> Result<(), String> {
    for n in [8usize, 32] {
        let m = dfnt_matrix(n).map_err(|e| e.to_string())?;
        for r in 0..n {
            for c in 0..n {
                let mut acc = Complex64::new(0.0, 0.0);
                for k in 0..n {
                    acc += m.entry(k, r).conj() * m.entry(k, c);
                }
                let expected = if r == c { 1.0 } else { 0.0 };
                ensure(
                    (acc - expected).norm_sqr().sqrt() < 1e-10,
                    format!("dfnt({n}) not unitary at ({r}, {c})"),
                )?;
            }
        }
    }
    Ok(())
}

fn chirp_round_trip() -> Result<(), String> {
    let mut rng = substream(103, &[0]);
    for branches in [1usize, 8] {
        let mux = ChirpMultiplexer::new(32, branches).map_err(|e| e.to_string())?;
        let waves: Vec<Vec<f64>> = (0..branches)
            .map(|_| {
                (0..32)
                    .map(|_| (rng.next_u64() >> 11) as f64 * (2.0 / 9_007_199_254_740_992.0) - 1.0)
                    .collect()
            })
            .collect();
        let slot = mux.multiplex(&waves).map_err(|e| e.to_string())?;
        let back = mux.demultiplex(&slot, branches).map_err(|e| e.to_string())?;
        for (p, (rec, orig)) in back.iter().zip(&waves).enumerate() {
            for (a, b) in rec.iter().zip(orig) {
                ensure(
                    (a - b).abs() < 1e-10,
                    format!("chirp round trip error on branch {p} of {branches}"),
                )?;
            }
        }
    }
    ensure(num_slots(10, 5).unwrap() == 2, "slot accounting 10/5")?;
    ensure(num_slots(5, 2).unwrap() == 3, "slot accounting 5/2")?;
    ensure(
        num_slots(1_000_000, 256).unwrap() == 3907,
        "slot accounting 1e6/256",
    )
}

fn channel_behavior() -> Result<(), String> {
    let silent = Channel::new(0.0, 11).map_err(|e| e.to_string())?;
    let z = [0.5, -1.0, 2.0, 0.25];
    let y = silent
        .superpose(&[&z, &z], NoiseKey::new(0, 0, 0))
        .map_err(|e| e.to_string())?;
    for (a, b) in y.iter().zip(&z) {
        ensure(*a == 2.0 * b, "zero-noise channel is not an exact sum")?;
    }
    let noisy = Channel::new(2.0, 11).map_err(|e| e.to_string())?;
    let zeros = vec![0.0; 20_000];
    let a = noisy
        .superpose(&[&zeros], NoiseKey::new(1, 2, 3))
        .map_err(|e| e.to_string())?;
    let b = noisy
        .superpose(&[&zeros], NoiseKey::new(1, 2, 3))
        .map_err(|e| e.to_string())?;
    ensure(a == b, "keyed noise draw is not reproducible")?;
    let var = a.iter().map(|v| v * v).sum::<f64>() / a.len() as f64;
    ensure(
        (var - 1.0).abs() < 0.1,
        format!("noise variance {var} departs from n0/2 = 1"),
    )?;
    ensure(
        (amplitude_for_power(4.0).unwrap() - 2.0).abs() < 1e-15,
        "amplitude for power 4 is not 2",
    )
}

fn dsb_behavior() -> Result<(), String> {
    let modem = DsbModem::new(32, 8).map_err(|e| e.to_string())?;
    let values = [0.2, -0.1, 0.4];
    let amp = slot_amplitude(&values, 1.0).map_err(|e| e.to_string())?;
    let total: f64 = values.iter().map(|v| (amp * v) * (amp * v)).sum();
    ensure(
        (total - 1.0).abs() < 1e-12,
        "slot power does not normalize to the target",
    )?;
    let mut y = vec![0.0; 32];
    for &v in &values {
        modem.modulate_into(v, amp, &mut y).map_err(|e| e.to_string())?;
    }
    let mean = modem.aggregate(&y, 3, amp).map_err(|e| e.to_string())?;
    let expected = values.iter().sum::<f64>() / 3.0;
    ensure(
        (mean - expected).abs() < 1e-10,
        format!("dsb mean {mean} vs {expected}"),
    )
}

fn gradient_finite_difference() -> Result<(), String> {
    let spec = ModelSpec::new(4, vec![], 2, Activation::Relu);
    let mut g = Gaussian::new(substream(104, &[0]));
    let params = spec.init_params(0.5, &mut g);
    let mut features = Vec::new();
    let mut labels = Vec::new();
    for i in 0..12 {
        for _ in 0..4 {
            features.push(g.sample());
        }
        labels.push(i % 2);
    }
    let data = Dataset::from_parts(4, features, labels).map_err(|e| e.to_string())?;
    let (_, grad) = loss_and_gradient(&spec, &params, &data, None).map_err(|e| e.to_string())?;
    let h = 1e-5;
    for q in 0..params.len() {
        let mut plus = params.clone();
        plus[q] += h;
        let mut minus = params.clone();
        minus[q] -= h;
        let numeric = (local_loss(&spec, &plus, &data).unwrap()
            - local_loss(&spec, &minus, &data).unwrap())
            / (2.0 * h);
        let denom = grad[q].abs().max(numeric.abs()).max(1e-8);
        ensure(
            (grad[q] - numeric).abs() / denom < 1e-4,
            format!("gradient coordinate {q} off by more than 1e-4 relative"),
        )?;
    }
    Ok(())
}

fn papr_values() -> Result<(), String> {
    ensure(
        papr_db(&[3.0, 3.0, 3.0]).unwrap() == 0.0,
        "constant powers must give exactly 0 dB",
    )?;
    let v = papr_db(&[1.0, 1.0, 1.0, 1.0, 10.0]).unwrap();
    ensure(
        (v - 5.528_419_686_577_808).abs() < 1e-9,
        format!("papr spot value {v}"),
    )
}

/// Run every check; returns the failed check names.
pub fn run() -> Vec<String> {
    let checks: Vec<Check> = vec![
        ("quantizer round trip and tie rule", quantizer_round_trip),
        ("mfsk tone bank orthonormality", tone_bank_orthonormal),
        ("tbma histogram reconstruction", histogram_reconstruction),
        ("dfnt unitarity", dfnt_unitary),
        ("chirp multiplex round trip and slot accounting", chirp_round_trip),
        ("awgn channel exactness and reproducibility", channel_behavior),
        ("dsb power normalization and mean recovery", dsb_behavior),
        ("gradient vs finite differences", gradient_finite_difference),
        ("papr spot values", papr_values),
    ];
    let mut failures = Vec::new();
    for (name, check) in checks {
        match check() {
            Ok(()) => println!("ok   {name}"),
            Err(why) => {
                println!("FAIL {name}: {why}");
                failures.push(name.to_string());
            }
        }
    }
    failures
}
