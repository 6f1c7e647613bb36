use ndarray::{ArrayView2, Axis};
use rayon::prelude::*;

use super::kmeans::{best_of_restarts, lloyd, ClusteringRun, RestartConfig};
use crate::error::{Error, Result};
use crate::seed;

/// Bayesian Information Criterion of a hard-assigned spherical Gaussian
/// mixture with one shared MLE variance `sse / (R·d)` and `k·(d+1)` free
/// parameters. Larger is better.
///
/// Returns `+inf` when the variance is zero and `R > 0`.
pub fn spherical_bic(sizes: &[usize], sse: f64, dim: usize) -> f64 {
    let r: usize = sizes.iter().sum();
    let rf = r as f64;
    let d = dim as f64;
    let variance = sse / (rf * d);
    if variance <= 0.0 {
        return f64::INFINITY;
    }
    let mixing: f64 = sizes
        .iter()
        .filter(|&&n| n > 0)
        .map(|&n| n as f64 * (n as f64 / rf).ln())
        .sum();
    let log_likelihood = mixing - 0.5 * rf * d * (2.0 * std::f64::consts::PI * variance).ln() - 0.5 * rf * d;
    let params = (sizes.len() * (dim + 1)) as f64;
    log_likelihood - 0.5 * params * rf.ln()
}

struct Split {
    cluster: usize,
    gain: f64,
    children: Vec<Vec<f64>>,
}

/// XMeans: starts from `k_min` clusters and keeps bisecting clusters whose
/// two-child model has a higher BIC than the parent, re-running Lloyd on the
/// whole data set after every round, until no split is accepted or `k_max`
/// is reached.
pub fn xmeans(data: ArrayView2<'_, f64>, k_min: usize, k_max: usize, cfg: &RestartConfig) -> Result<ClusteringRun> {
    let n = data.nrows();
    if !(1 <= k_min && k_min <= k_max && k_max <= n) {
        return Err(Error::Config(format!(
            "xmeans needs 1 <= k_min <= k_max <= rows, got {k_min}, {k_max}, {n}"
        )));
    }
    let dim = data.ncols();
    let mut run = best_of_restarts(data, k_min, cfg)?;
    let mut round = 0u64;
    while run.k < k_max {
        let members = run.members();
        let mut splits: Vec<Split> = members
            .par_iter()
            .enumerate()
            .filter(|(c, m)| m.len() >= 2 && run.sse_per_cluster[*c] > 0.0)
            .map(|(c, m)| {
                let points = data.select(Axis(0), m);
                let parent = spherical_bic(&[m.len()], run.sse_per_cluster[c], dim);
                let sub = cfg.with_seed(seed::derive_seed(cfg.seed, (round << 32) | c as u64 | 1 << 63));
                let child = best_of_restarts(points.view(), 2, &sub)?;
                let bic = spherical_bic(&child.cluster_sizes(), child.total_sse, dim);
                Ok((bic > parent).then_some(Split {
                    cluster: c,
                    gain: bic - parent,
                    children: child.centroids,
                }))
            })
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .flatten()
            .collect();
        if splits.is_empty() {
            break;
        }
        splits.sort_by(|a, b| b.gain.total_cmp(&a.gain).then(a.cluster.cmp(&b.cluster)));
        splits.truncate(k_max - run.k);
        let mut centroids = Vec::with_capacity(run.k + splits.len());
        for (c, centroid) in run.centroids.iter().enumerate() {
            match splits.iter().find(|s| s.cluster == c) {
                Some(s) => centroids.extend(s.children.iter().cloned()),
                None => centroids.push(centroid.clone()),
            }
        }
        let previous_seed = run.seed;
        run = lloyd(data, &centroids, cfg.max_iterations)?;
        run.seed = previous_seed;
        round += 1;
    }
    Ok(run)
}
