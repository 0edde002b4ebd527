//! Plain-text dataset fixtures.
//!
//! One sample per line: `input_dim` whitespace-separated feature values
//! followed by an integer class label. Blank lines and lines starting with
//! `#` are ignored.
//!
//! ```text
//! # x0 x1 x2 label
//! 0.12 -1.5 3.0 2
//! ```

use anyhow::{bail, Context, Result};
use fmagg_core::feel::Dataset;
use std::path::Path;

pub fn load(path: &Path, input_dim: usize) -> Result<Dataset> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading dataset {}", path.display()))?;
    parse(&text, input_dim).with_context(|| format!("parsing dataset {}", path.display()))
}

pub fn parse(text: &str, input_dim: usize) -> Result<Dataset> {
    let mut features = Vec::new();
    let mut labels = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != input_dim + 1 {
            bail!(
                "line {}: expected {} feature values + 1 label, found {} fields",
                lineno + 1,
                input_dim,
                fields.len()
            );
        }
        for value in &fields[..input_dim] {
            let v: f64 = value
                .parse()
                .with_context(|| format!("line {}: bad feature {value:?}", lineno + 1))?;
            if !v.is_finite() {
                bail!("line {}: non-finite feature {v}", lineno + 1);
            }
            features.push(v);
        }
        let label: usize = fields[input_dim]
            .parse()
            .with_context(|| format!("line {}: bad label {:?}", lineno + 1, fields[input_dim]))?;
        labels.push(label);
    }
    Dataset::from_parts(input_dim, features, labels)
        .map_err(|e| anyhow::anyhow!("assembling dataset: {e}"))
}

/// Truncate to a multiple of `devices` rows so the shards are equal-sized;
/// warns when rows are dropped.
pub fn trim_for_devices(data: Dataset, devices: usize) -> Result<Dataset> {
    if devices == 0 {
        bail!("device count must be positive");
    }
    let keep = (data.len() / devices) * devices;
    if keep == 0 {
        bail!("dataset has {} rows, fewer than {devices} devices", data.len());
    }
    if keep == data.len() {
        return Ok(data);
    }
    eprintln!(
        "note: dropping {} trailing rows so {} rows split evenly over {devices} devices",
        data.len() - keep,
        data.len()
    );
    let mut features = Vec::with_capacity(keep * data.dim());
    let mut labels = Vec::with_capacity(keep);
    for i in 0..keep {
        let (x, y) = data.get(i).expect("in range");
        features.extend_from_slice(x);
        labels.push(y);
    }
    Dataset::from_parts(data.dim(), features, labels).map_err(|e| anyhow::anyhow!("{e}"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_rows_with_comments() {
        let text = "# toy fixture\n0.5 -1.0 2\n\n1.5 0.25 0\n";
        let data = parse(text, 2).unwrap();
        assert_eq!(data.len(), 2);
        assert_eq!(data.get(0).unwrap(), (&[0.5, -1.0][..], 2));
        assert_eq!(data.get(1).unwrap(), (&[1.5, 0.25][..], 0));
    }

    #[test]
    fn rejects_malformed_rows() {
        assert!(parse("0.5 1\n0.25 0\n", 1).is_ok());
        assert!(parse("0.5\n", 1).is_err()); // missing label
        assert!(parse("a b 1\n", 2).is_err());
        assert!(parse("0.5 0.5 1.5\n", 2).is_err()); // non-integer label
        assert!(parse("inf 0.5 1\n", 2).is_err());
    }

    #[test]
    fn trims_to_device_multiple() {
        let data = parse("1 0\n2 1\n3 0\n4 1\n5 0\n", 1).unwrap();
        let trimmed = trim_for_devices(data, 2).unwrap();
        assert_eq!(trimmed.len(), 4);
    }
}
