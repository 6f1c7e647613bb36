use std::collections::BTreeMap;

use ndarray::{Array2, ArrayView1, ArrayView2};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;

/// Outcome of one KMeans run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusteringRun {
    pub k: usize,
    /// Cluster index of every row, in row order.
    pub assignments: Vec<usize>,
    pub centroids: Vec<Vec<f64>>,
    pub sse_per_cluster: Vec<f64>,
    pub total_sse: f64,
    pub seed: u64,
    pub iterations_used: usize,
    /// Total SSE after every centroid update.
    #[serde(skip)]
    pub sse_trace: Vec<f64>,
}

impl ClusteringRun {
    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &a in &self.assignments {
            sizes[a] += 1;
        }
        sizes
    }

    /// Row indices of every cluster.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut m = vec![Vec::new(); self.k];
        for (i, &a) in self.assignments.iter().enumerate() {
            m[a].push(i);
        }
        m
    }

    pub fn report(&self, ids: &[String]) -> ClusteringReport {
        ClusteringReport {
            k: self.k,
            assignments: ids.iter().cloned().zip(self.assignments.iter().copied()).collect(),
            total_sse: self.total_sse,
            sse_per_cluster: self.sse_per_cluster.clone(),
            seed: self.seed,
            iterations_used: self.iterations_used,
        }
    }
}

/// Serialized form of a [`ClusteringRun`] keyed by chunk id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusteringReport {
    pub k: usize,
    pub assignments: BTreeMap<String, usize>,
    pub total_sse: f64,
    pub sse_per_cluster: Vec<f64>,
    pub seed: u64,
    pub iterations_used: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RestartConfig {
    pub n_restarts: usize,
    pub max_iterations: usize,
    pub seed: u64,
}

impl RestartConfig {
    pub const DEFAULT_RESTARTS: usize = 5;
    pub const DEFAULT_MAX_ITERATIONS: usize = 100;

    pub fn new(seed: u64) -> Self {
        RestartConfig {
            n_restarts: Self::DEFAULT_RESTARTS,
            max_iterations: Self::DEFAULT_MAX_ITERATIONS,
            seed,
        }
    }

    pub fn with_seed(self, seed: u64) -> Self {
        RestartConfig { seed, ..self }
    }
}

pub(crate) fn sq_dist(a: ArrayView1<'_, f64>, b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn check_k(data: ArrayView2<'_, f64>, k: usize) -> Result<()> {
    if k < 1 {
        return Err(Error::Config("k must be at least 1".into()));
    }
    if data.nrows() < k {
        return Err(Error::InsufficientData(format!(
            "{} rows cannot form {k} clusters",
            data.nrows()
        )));
    }
    Ok(())
}

/// KMeans++ seeding: the first centroid is a uniform row, each further one is
/// drawn with probability proportional to its squared distance to the nearest
/// centroid chosen so far.
pub fn kmeanspp_init(data: ArrayView2<'_, f64>, k: usize, seed_value: u64) -> Result<Vec<Vec<f64>>> {
    check_k(data, k)?;
    let n = data.nrows();
    let mut rng = seed::rng(seed_value);
    let first = rng.random_range(0..n);
    let mut centroids = vec![data.row(first).to_vec()];
    let mut d2: Vec<f64> = data.rows().into_iter().map(|r| sq_dist(r, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut chosen = None;
            for (i, &w) in d2.iter().enumerate() {
                acc += w;
                if w > 0.0 && acc > target {
                    chosen = Some(i);
                    break;
                }
            }
            // round-off can leave the scan short; take the last positive weight
            chosen.unwrap_or_else(|| d2.iter().rposition(|&w| w > 0.0).expect("total > 0"))
        } else {
            rng.random_range(0..n)
        };
        let c = data.row(pick).to_vec();
        for (i, r) in data.rows().into_iter().enumerate() {
            d2[i] = d2[i].min(sq_dist(r, &c));
        }
        centroids.push(c);
    }
    Ok(centroids)
}

/// Nearest centroid per row; ties go to the lowest index.
fn assign(data: ArrayView2<'_, f64>, centroids: &[Vec<f64>]) -> Vec<usize> {
    data.rows()
        .into_iter()
        .map(|r| {
            let mut best = 0;
            let mut best_d = f64::INFINITY;
            for (c, centroid) in centroids.iter().enumerate() {
                let d = sq_dist(r, centroid);
                if d < best_d {
                    best_d = d;
                    best = c;
                }
            }
            best
        })
        .collect()
}

fn means(data: ArrayView2<'_, f64>, assignments: &[usize], k: usize) -> (Vec<Vec<f64>>, Vec<usize>) {
    let dim = data.ncols();
    let mut sums = vec![vec![0.0; dim]; k];
    let mut sizes = vec![0usize; k];
    for (r, &a) in data.rows().into_iter().zip(assignments) {
        sizes[a] += 1;
        for (s, x) in sums[a].iter_mut().zip(r) {
            *s += x;
        }
    }
    for (s, &n) in sums.iter_mut().zip(&sizes) {
        if n > 0 {
            s.iter_mut().for_each(|v| *v /= n as f64);
        }
    }
    (sums, sizes)
}

/// Cluster means, reseeding every empty cluster with the point farthest from
/// its own centroid (taken from clusters that keep at least one member).
fn update(data: ArrayView2<'_, f64>, assignments: &mut [usize], k: usize) -> Vec<Vec<f64>> {
    loop {
        let (centroids, sizes) = means(data, assignments, k);
        let Some(empty) = sizes.iter().position(|&s| s == 0) else {
            return centroids;
        };
        let mut far = None;
        let mut far_d = -1.0;
        for (i, r) in data.rows().into_iter().enumerate() {
            let a = assignments[i];
            if sizes[a] < 2 {
                continue;
            }
            let d = sq_dist(r, &centroids[a]);
            if d > far_d {
                far_d = d;
                far = Some(i);
            }
        }
        let i = far.expect("k <= rows guarantees a donor cluster");
        assignments[i] = empty;
    }
}

fn sse(data: ArrayView2<'_, f64>, assignments: &[usize], centroids: &[Vec<f64>]) -> Vec<f64> {
    let mut per = vec![0.0; centroids.len()];
    for (r, &a) in data.rows().into_iter().zip(assignments) {
        per[a] += sq_dist(r, &centroids[a]);
    }
    per
}

/// Lloyd iterations from `init` until assignments stop changing or
/// `max_iterations` centroid updates have run.
pub fn lloyd(data: ArrayView2<'_, f64>, init: &[Vec<f64>], max_iterations: usize) -> Result<ClusteringRun> {
    let k = init.len();
    check_k(data, k)?;
    if max_iterations < 1 {
        return Err(Error::Config("max_iterations must be at least 1".into()));
    }
    if let Some(c) = init.iter().find(|c| c.len() != data.ncols()) {
        return Err(Error::DimensionMismatch {
            expected: data.ncols(),
            actual: c.len(),
        });
    }
    let mut assignments = assign(data, init);
    let mut trace = Vec::new();
    let mut iterations = 0;
    let centroids = loop {
        iterations += 1;
        let centroids = update(data, &mut assignments, k);
        trace.push(sse(data, &assignments, &centroids).iter().sum::<f64>());
        debug_assert!(
            trace.len() < 2 || trace[trace.len() - 1] <= trace[trace.len() - 2] * (1.0 + 1e-12),
            "SSE increased: {trace:?}"
        );
        if iterations >= max_iterations {
            break centroids;
        }
        let next = assign(data, &centroids);
        if next == assignments {
            break centroids;
        }
        assignments = next;
    };
    let sse_per_cluster = sse(data, &assignments, &centroids);
    Ok(ClusteringRun {
        k,
        total_sse: sse_per_cluster.iter().sum(),
        assignments,
        centroids,
        sse_per_cluster,
        seed: 0,
        iterations_used: iterations,
        sse_trace: trace,
    })
}

/// Seed of restart `index` under master seed `master`.
pub fn restart_seed(master: u64, index: usize) -> u64 {
    seed::derive_seed(master, index as u64)
}

/// All `n_restarts` KMeans++ + Lloyd runs, in restart order.
pub fn all_restarts(data: ArrayView2<'_, f64>, k: usize, cfg: &RestartConfig) -> Result<Vec<ClusteringRun>> {
    if cfg.n_restarts < 1 {
        return Err(Error::Config("n_restarts must be at least 1".into()));
    }
    check_k(data, k)?;
    (0..cfg.n_restarts)
        .into_par_iter()
        .map(|j| {
            let s = restart_seed(cfg.seed, j);
            let init = kmeanspp_init(data, k, s)?;
            let mut run = lloyd(data, &init, cfg.max_iterations)?;
            run.seed = s;
            Ok(run)
        })
        .collect()
}

/// The restart with minimal total SSE; ties go to the earliest restart.
pub fn best_of_restarts(data: ArrayView2<'_, f64>, k: usize, cfg: &RestartConfig) -> Result<ClusteringRun> {
    let runs = all_restarts(data, k, cfg)?;
    let mut best = 0;
    for (j, r) in runs.iter().enumerate() {
        if r.total_sse < runs[best].total_sse {
            best = j;
        }
    }
    Ok(runs.into_iter().nth(best).expect("n_restarts >= 1"))
}

/// Dense matrix from centroid rows.
pub fn centroid_matrix(run: &ClusteringRun) -> Array2<f64> {
    let dim = run.centroids.first().map_or(0, Vec::len);
    Array2::from_shape_fn((run.k, dim), |(i, j)| run.centroids[i][j])
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use proptest::prelude::*;
    use rand::Rng;

    fn col(values: &[f64]) -> Array2<f64> {
        Array2::from_shape_fn((values.len(), 1), |(i, _)| values[i])
    }

    #[test]
    fn lloyd_examples() {
        let d = col(&[0.0, 10.0]);
        let r = lloyd(d.view(), &[vec![0.0], vec![10.0]], 100).unwrap();
        assert_eq!(r.assignments, [0, 1]);
        assert_eq!(r.total_sse, 0.0);

        let d = col(&[1.0, 3.0]);
        let r = lloyd(d.view(), &[vec![0.0]], 100).unwrap();
        assert_eq!(r.centroids, [vec![2.0]]);
        assert_eq!(r.total_sse, 2.0);

        let d = col(&[0.0, 1.0, 9.0, 10.0]);
        let r = lloyd(d.view(), &[vec![0.0], vec![9.0]], 100).unwrap();
        assert_eq!(r.centroids, [vec![0.5], vec![9.5]]);
        assert_eq!(r.total_sse, 1.0);
    }

    #[test]
    fn lloyd_reseeds_empty_clusters() {
        let d = col(&[0.0, 1.0, 2.0, 20.0]);
        // the second centroid attracts nothing
        let r = lloyd(d.view(), &[vec![0.0], vec![1000.0]], 100).unwrap();
        assert!(r.cluster_sizes().iter().all(|&s| s > 0));
        assert_eq!(r.assignments, [0, 0, 0, 1]);
        assert!((r.total_sse - 2.0).abs() < 1e-12);
    }

    #[test]
    fn ties_go_to_lowest_index() {
        let d = col(&[5.0]);
        let r = lloyd(d.view(), &[vec![5.0]], 10).unwrap();
        assert_eq!(r.assignments, [0]);
        let d = col(&[0.0, 5.0, 10.0]);
        let a = assign(d.view(), &[vec![0.0], vec![10.0]]);
        assert_eq!(a, [0, 0, 1]);
    }

    #[test]
    fn kmeanspp_examples() {
        let d = col(&[0.0, 0.0, 100.0]);
        for s in 0..50 {
            let c = kmeanspp_init(d.view(), 2, s).unwrap();
            let mut vals: Vec<f64> = c.iter().map(|v| v[0]).collect();
            vals.sort_by(f64::total_cmp);
            assert_eq!(vals, [0.0, 100.0]);
        }
        let d = array![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]];
        let mut c = kmeanspp_init(d.view(), 4, 3).unwrap();
        c.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(c, [vec![0.0, 0.0], vec![0.0, 1.0], vec![1.0, 0.0], vec![1.0, 1.0]]);
        assert_eq!(
            kmeanspp_init(d.view(), 3, 9).unwrap(),
            kmeanspp_init(d.view(), 3, 9).unwrap()
        );
        assert!(matches!(kmeanspp_init(d.view(), 5, 1), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn single_restart_matches_manual_run() {
        let d = col(&[0.0, 1.0, 2.0, 7.0, 8.0, 30.0]);
        let cfg = RestartConfig {
            n_restarts: 1,
            ..RestartConfig::new(11)
        };
        let best = best_of_restarts(d.view(), 2, &cfg).unwrap();
        let s = restart_seed(11, 0);
        let manual = lloyd(d.view(), &kmeanspp_init(d.view(), 2, s).unwrap(), 100).unwrap();
        assert_eq!(best.assignments, manual.assignments);
        assert_eq!(best.total_sse, manual.total_sse);
        assert_eq!(best.seed, s);
    }

    #[test]
    fn best_is_minimum_over_restarts() {
        let mut rng = seed::rng(5);
        let d = Array2::from_shape_fn((60, 3), |_| rng.random::<f64>());
        let cfg = RestartConfig {
            n_restarts: 12,
            ..RestartConfig::new(1)
        };
        let all = all_restarts(d.view(), 4, &cfg).unwrap();
        let best = best_of_restarts(d.view(), 4, &cfg).unwrap();
        assert!(all.iter().all(|r| best.total_sse <= r.total_sse));
    }

    #[test]
    fn restarts_are_thread_count_independent() {
        let mut rng = seed::rng(8);
        let d = Array2::from_shape_fn((80, 4), |_| rng.random::<f64>());
        let cfg = RestartConfig {
            n_restarts: 8,
            ..RestartConfig::new(3)
        };
        let run_with = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| best_of_restarts(d.view(), 3, &cfg).unwrap())
        };
        assert_eq!(run_with(1), run_with(4));
    }

    /// Minimum total SSE over every split of the rows into two non-empty groups.
    fn brute_force_two(d: &Array2<f64>) -> f64 {
        let n = d.nrows();
        let group_sse = |rows: &[usize]| {
            let mean: Vec<f64> = (0..d.ncols())
                .map(|j| rows.iter().map(|&i| d[[i, j]]).sum::<f64>() / rows.len() as f64)
                .collect();
            rows.iter()
                .map(|&i| (0..d.ncols()).map(|j| (d[[i, j]] - mean[j]).powi(2)).sum::<f64>())
                .sum::<f64>()
        };
        (1..(1u32 << (n - 1)))
            .map(|mask| {
                let (a, b): (Vec<usize>, Vec<usize>) = (0..n).partition(|&i| mask >> i & 1 == 1);
                group_sse(&a) + group_sse(&b)
            })
            .fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn separated_groups_reach_global_minimum() {
        let d = col(&[0.0, 0.5, 1.1, 1.7, 40.0, 40.4, 41.3, 42.0]);
        let cfg = RestartConfig {
            n_restarts: 20,
            ..RestartConfig::new(2)
        };
        let best = best_of_restarts(d.view(), 2, &cfg).unwrap();
        assert!((best.total_sse - brute_force_two(&d)).abs() < 1e-9);
    }

    #[test]
    fn restarts_match_partition_oracle() {
        let mut hits = 0;
        for trial in 0..100u64 {
            let mut rng = seed::rng(1000 + trial);
            let n = rng.random_range(4..=12);
            let d = Array2::from_shape_fn((n, 2), |_| rng.random_range(-10.0..10.0));
            let cfg = RestartConfig {
                n_restarts: 50,
                ..RestartConfig::new(trial)
            };
            let best = best_of_restarts(d.view(), 2, &cfg).unwrap().total_sse;
            let oracle = brute_force_two(&d);
            assert!(oracle <= best + 1e-9);
            if (best - oracle).abs() <= 1e-9 * oracle.max(1.0) {
                hits += 1;
            }
        }
        assert!(hits >= 90, "{hits}/100");
    }

    proptest! {
        #[test]
        fn lloyd_invariants(values in prop::collection::vec(-50.0f64..50.0, 4..40), k in 1usize..4, s in any::<u64>()) {
            let n = values.len();
            let d = Array2::from_shape_fn((n / 2, 2), |(i, j)| values[2 * i + j]);
            prop_assume!(d.nrows() >= k);
            let init = kmeanspp_init(d.view(), k, s).unwrap();
            let r = lloyd(d.view(), &init, 100).unwrap();
            for w in r.sse_trace.windows(2) {
                prop_assert!(w[1] <= w[0] * (1.0 + 1e-12));
            }
            prop_assert!((r.total_sse - r.sse_per_cluster.iter().sum::<f64>()).abs() < 1e-9);
            prop_assert!(r.cluster_sizes().iter().all(|&c| c > 0));
            if r.iterations_used < 100 {
                prop_assert_eq!(&assign(d.view(), &r.centroids), &r.assignments);
                let (m, _) = means(d.view(), &r.assignments, k);
                for (a, b) in m.iter().flatten().zip(r.centroids.iter().flatten()) {
                    prop_assert!((a - b).abs() < 1e-9);
                }
            }
        }
    }
}
