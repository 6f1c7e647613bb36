use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use super::sweep::Curve;
use crate::corpus::Label;
use crate::error::{Error, Result};

pub const CURVE_HEADER: [&str; 4] = ["point", "mean_accuracy", "std", "seeds"];

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

/// Curve rows; skipped points leave the accuracy columns empty.
pub fn write_curve_csv(path: &Path, curve: &Curve) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(CURVE_HEADER)?;
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for p in &curve.points {
        w.write_record([
            p.point.to_string(),
            opt(p.mean_accuracy),
            opt(p.std),
            p.seeds.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// One `{"chunk_id": ..., "label": ...}` object per line.
pub fn write_labels_jsonl(path: &Path, labels: &BTreeMap<String, Label>) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    for (id, label) in labels {
        let line = serde_json::json!({ "chunk_id": id, "label": label });
        writeln!(out, "{line}").map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::sweep::{CurvePoint, SweepAxis};

    #[test]
    fn json_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.json");
        let values = vec![0.1 + 0.2, 1.0 / 3.0, 1e-300, 123456.789012345];
        write_json(&path, &values).unwrap();
        let back: Vec<f64> = read_json(&path).unwrap();
        assert_eq!(back, values);
    }

    #[test]
    fn curve_csv_schema() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.csv");
        let curve = Curve {
            axis: SweepAxis::NChunks,
            config_hash: "h".into(),
            points: vec![
                CurvePoint {
                    point: 300,
                    mean_accuracy: Some(0.9),
                    std: Some(0.01),
                    seeds: 5,
                    warning: None,
                },
                CurvePoint {
                    point: 900,
                    mean_accuracy: None,
                    std: None,
                    seeds: 0,
                    warning: Some("too few".into()),
                },
            ],
        };
        write_curve_csv(&path, &curve).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines, ["point,mean_accuracy,std,seeds", "300,0.9,0.01,5", "900,,,0"]);
    }

    #[test]
    fn unwritable_path_is_an_io_error() {
        let err = write_json(Path::new("/nonexistent-dir/x/y.json"), &1).unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
    }
}
