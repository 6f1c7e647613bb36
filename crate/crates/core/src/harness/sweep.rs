use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::RunConfig;
use super::pipeline::run_pipeline;
use crate::corpus::{balance, make_chunks_by_group, sample_per_class, ChunkSet, Document, Label};
use crate::error::{Error, Result};
use crate::features::Resources;
use crate::label::MarkerSets;
use crate::seed;

/// Repetitions per sweep point.
pub const SWEEP_SEEDS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepAxis {
    NChunks,
    ChunkSize,
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SweepAxis::NChunks => "n-chunks",
            SweepAxis::ChunkSize => "chunk-size",
        })
    }
}

impl FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "n-chunks" => Ok(SweepAxis::NChunks),
            "chunk-size" => Ok(SweepAxis::ChunkSize),
            _ => Err(Error::Config(format!("unknown sweep axis `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub point: usize,
    pub mean_accuracy: Option<f64>,
    /// Sample standard deviation over seeds.
    pub std: Option<f64>,
    pub seeds: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

impl CurvePoint {
    fn skipped(point: usize, warning: String) -> Self {
        log::warn!("sweep point {point} skipped: {warning}");
        CurvePoint {
            point,
            mean_accuracy: None,
            std: None,
            seeds: 0,
            warning: Some(warning),
        }
    }

    fn from_runs(point: usize, accuracies: &[f64]) -> Self {
        let n = accuracies.len() as f64;
        let mean = accuracies.iter().sum::<f64>() / n;
        let std = if accuracies.len() > 1 {
            (accuracies.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        CurvePoint {
            point,
            mean_accuracy: Some(mean),
            std: Some(std),
            seeds: accuracies.len(),
            warning: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Curve {
    pub axis: SweepAxis,
    pub config_hash: String,
    pub points: Vec<CurvePoint>,
}

/// What a sweep varies.
pub enum SweepInput<'a> {
    /// Down-sampled to each point (total chunks, half per class).
    Chunks(&'a ChunkSet),
    /// Re-chunked at each point (target tokens).
    Documents(&'a [Document]),
}

fn class_counts(set: &ChunkSet) -> (usize, usize) {
    let o = set.chunks.iter().filter(|c| c.label == Some(Label::O)).count();
    let t = set.chunks.iter().filter(|c| c.label == Some(Label::T)).count();
    (o, t)
}

/// Accuracy curve over `points`. Each point is repeated with
/// [`SWEEP_SEEDS`] derived seeds that drive both sampling and clustering.
pub fn sensitivity_sweep(
    cfg: &RunConfig,
    input: SweepInput<'_>,
    markers: &MarkerSets,
    resources: &Resources,
    points: &[usize],
) -> Result<Curve> {
    if points.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::Config("sweep points must be sorted ascending".into()));
    }
    let axis = match input {
        SweepInput::Chunks(_) => SweepAxis::NChunks,
        SweepInput::Documents(_) => SweepAxis::ChunkSize,
    };
    let run_point = |point: usize| -> Result<CurvePoint> {
        let base = match input {
            SweepInput::Chunks(set) => set.clone(),
            SweepInput::Documents(docs) => {
                if point < 1 {
                    return Ok(CurvePoint::skipped(point, "chunk size must be positive".into()));
                }
                make_chunks_by_group(docs, point)?
            }
        };
        let (o, t) = class_counts(&base);
        if o + t != base.len() {
            return Err(Error::Config("sweeps need gold labels on every chunk".into()));
        }
        let per_class = point / 2;
        match axis {
            SweepAxis::NChunks if per_class < 2 || per_class > o.min(t) => {
                return Ok(CurvePoint::skipped(
                    point,
                    format!("needs {per_class} chunks per class, have {o} O and {t} T"),
                ));
            }
            SweepAxis::ChunkSize if o.min(t) < 2 => {
                return Ok(CurvePoint::skipped(
                    point,
                    format!("only {o} O and {t} T chunks at this size"),
                ));
            }
            _ => {}
        }
        let accuracies = (0..SWEEP_SEEDS as u64)
            .into_par_iter()
            .map(|s| {
                let run_seed = seed::derive_seed(cfg.seed, s);
                let sample = match axis {
                    SweepAxis::NChunks => sample_per_class(&base, per_class, run_seed)?,
                    SweepAxis::ChunkSize => balance(&base, cfg.ratio_o_to_t, run_seed)?,
                };
                let run_cfg = RunConfig {
                    seed: run_seed,
                    ..cfg.clone()
                };
                let report = run_pipeline(&run_cfg, &sample, markers, resources)?;
                report
                    .headline_accuracy()
                    .ok_or_else(|| Error::Evaluation("sweep run produced no accuracy".into()))
            })
            .collect::<Result<Vec<f64>>>()?;
        Ok(CurvePoint::from_runs(point, &accuracies))
    };
    let points = points.par_iter().map(|&p| run_point(p)).collect::<Result<Vec<_>>>()?;
    Ok(Curve {
        axis,
        config_hash: cfg.hash(),
        points,
    })
}
