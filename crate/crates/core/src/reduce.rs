//! Standardized (correlation-matrix) PCA with a variance-coverage rule.

use nalgebra::{DMatrix, SymmetricEigen};
use ndarray::{Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default fraction of variance the retained components must cover.
pub const DEFAULT_VARIANCE_COVERED: f64 = 0.1;

/// Eigenvalues below this fraction of the trace are treated as zero.
const EIGEN_TOLERANCE: f64 = 1e-12;

/// A fitted PCA model.
///
/// `means` and `scales` cover every input dimension; dimensions with zero
/// variance carry a scale of 0, are ignored by the decomposition and get zero
/// loadings in every component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaModel {
    pub means: Vec<f64>,
    pub scales: Vec<f64>,
    /// Retained components, one row per component.
    pub components: Vec<Vec<f64>>,
    /// All eigenvalues of the correlation matrix, non-increasing.
    pub eigenvalues: Vec<f64>,
    pub variance_covered: f64,
}

impl PcaModel {
    pub fn n_components(&self) -> usize {
        self.components.len()
    }

    pub fn input_dim(&self) -> usize {
        self.means.len()
    }

    /// Fraction of total variance covered by the first `k` eigenvalues.
    pub fn coverage(&self, k: usize) -> f64 {
        let total: f64 = self.eigenvalues.iter().sum();
        self.eigenvalues[..k].iter().sum::<f64>() / total
    }
}

/// Smallest `k` whose leading eigenvalues cover `variance_covered` of the total.
fn retained_count(eigenvalues: &[f64], variance_covered: f64) -> usize {
    let total: f64 = eigenvalues.iter().sum();
    let mut cumulative = 0.0;
    for (k, &l) in eigenvalues.iter().enumerate() {
        cumulative += l;
        if cumulative / total >= variance_covered - 1e-12 {
            return k + 1;
        }
    }
    eigenvalues.iter().filter(|&&l| l > 0.0).count().max(1)
}

/// Fits standardized PCA on the rows of `data`.
pub fn pca_fit(data: ArrayView2<'_, f64>, variance_covered: f64) -> Result<PcaModel> {
    let (n, p) = data.dim();
    if n < 2 {
        return Err(Error::PcaFit(format!("need at least 2 rows, got {n}")));
    }
    if !(variance_covered > 0.0 && variance_covered <= 1.0) {
        return Err(Error::Config(format!(
            "variance_covered must lie in (0, 1], got {variance_covered}"
        )));
    }
    let means = data.mean_axis(Axis(0)).expect("n >= 2").to_vec();
    let scales: Vec<f64> = data
        .columns()
        .into_iter()
        .zip(&means)
        .map(|(col, &m)| {
            let var = col.iter().map(|&v| (v - m) * (v - m)).sum::<f64>() / (n - 1) as f64;
            let sd = var.sqrt();
            // tolerate round-off on constant columns
            if sd <= 1e-12 * (1.0 + m.abs()) {
                0.0
            } else {
                sd
            }
        })
        .collect();
    let live: Vec<usize> = (0..p).filter(|&j| scales[j] > 0.0).collect();
    if live.is_empty() {
        return Err(Error::DegenerateData);
    }

    let z = standardize(data, &means, &scales, &live);
    let q = live.len();
    let denom = (n - 1) as f64;

    // Decompose whichever of Z'Z (q×q) and ZZ' (n×n) is smaller.
    let (mut pairs, dual) = if q <= n {
        let c = z.t().dot(&z) / denom;
        (eigen(&c), false)
    } else {
        let g = z.dot(&z.t()) / denom;
        (eigen(&g), true)
    };
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
    let trace = q as f64;
    let eigenvalues: Vec<f64> = pairs
        .iter()
        .map(|(l, _)| if *l < EIGEN_TOLERANCE * trace { 0.0 } else { *l })
        .collect();

    let k = retained_count(&eigenvalues, variance_covered);
    let components = pairs[..k]
        .iter()
        .zip(&eigenvalues)
        .map(|((_, v), &l)| {
            let reduced: Vec<f64> = if dual {
                // v is an eigenvector of ZZ'; map it back through Z'
                let scale = (denom * l).sqrt();
                (0..q)
                    .map(|j| z.column(j).iter().zip(v).map(|(a, b)| a * b).sum::<f64>() / scale)
                    .collect()
            } else {
                v.clone()
            };
            let mut full = vec![0.0; p];
            for (&j, x) in live.iter().zip(reduced) {
                full[j] = x;
            }
            orient(&mut full);
            full
        })
        .collect();

    Ok(PcaModel {
        means,
        scales,
        components,
        eigenvalues,
        variance_covered,
    })
}

/// Standardized columns `live` of `data`.
fn standardize(data: ArrayView2<'_, f64>, means: &[f64], scales: &[f64], live: &[usize]) -> Array2<f64> {
    let mut z = Array2::zeros((data.nrows(), live.len()));
    for (out, &j) in live.iter().enumerate() {
        let (m, s) = (means[j], scales[j]);
        for (dst, &src) in z.column_mut(out).iter_mut().zip(data.column(j)) {
            *dst = (src - m) / s;
        }
    }
    z
}

fn eigen(a: &Array2<f64>) -> Vec<(f64, Vec<f64>)> {
    let n = a.nrows();
    let m = DMatrix::from_fn(n, n, |i, j| 0.5 * (a[[i, j]] + a[[j, i]]));
    let e = SymmetricEigen::new(m);
    (0..n)
        .map(|i| (e.eigenvalues[i], e.eigenvectors.column(i).iter().copied().collect()))
        .collect()
}

/// Flips the sign so the largest-magnitude loading is positive.
fn orient(v: &mut [f64]) {
    let pivot = v
        .iter()
        .copied()
        .fold(0.0f64, |best, x| if x.abs() > best.abs() { x } else { best });
    if pivot < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

/// Projects standardized rows onto the retained components.
pub fn pca_transform(model: &PcaModel, data: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
    if data.ncols() != model.input_dim() {
        return Err(Error::DimensionMismatch {
            expected: model.input_dim(),
            actual: data.ncols(),
        });
    }
    let k = model.n_components();
    let mut out = Array2::zeros((data.nrows(), k));
    let mut z = vec![0.0; model.input_dim()];
    for (i, row) in data.rows().into_iter().enumerate() {
        for (j, &x) in row.iter().enumerate() {
            z[j] = if model.scales[j] > 0.0 {
                (x - model.means[j]) / model.scales[j]
            } else {
                0.0
            };
        }
        for (c, comp) in model.components.iter().enumerate() {
            out[[i, c]] = comp.iter().zip(&z).map(|(a, b)| a * b).sum();
        }
    }
    Ok(out)
}

/// Fits on `data` and returns its projection.
pub fn fit_transform(data: ArrayView2<'_, f64>, variance_covered: f64) -> Result<(PcaModel, Array2<f64>)> {
    let model = pca_fit(data, variance_covered)?;
    let projected = pca_transform(&model, data)?;
    Ok((model, projected))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use proptest::prelude::*;
    use rand::Rng;

    fn random_data(n: usize, p: usize, seed: u64) -> Array2<f64> {
        let mut rng = crate::seed::rng(seed);
        let mut d = Array2::from_shape_fn((n, p), |_| rng.random::<f64>());
        // correlate a couple of columns
        for i in 0..n {
            d[[i, 1]] += 2.0 * d[[i, 0]];
            if p > 3 {
                d[[i, 3]] -= d[[i, 2]];
            }
        }
        d
    }

    fn sample_variance(col: ndarray::ArrayView1<'_, f64>) -> f64 {
        let n = col.len() as f64;
        let m = col.sum() / n;
        col.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0)
    }

    #[test]
    fn collinear_points_keep_one_component() {
        let d = array![[0.0, 0.0], [1.0, 1.0], [2.0, 2.0]];
        for vc in [0.1, 0.5, 1.0] {
            let m = pca_fit(d.view(), vc).unwrap();
            assert_eq!(m.n_components(), 1);
            assert!((m.eigenvalues[0] - 2.0).abs() < 1e-12);
            assert_eq!(m.eigenvalues[1], 0.0);
        }
    }

    #[test]
    fn equal_eigenvalues_keep_minimal_prefix() {
        // four orthogonal ±1 patterns: standardized, uncorrelated, equal variance
        let d = array![
            [1.0, 1.0, 1.0, 1.0],
            [1.0, -1.0, 1.0, -1.0],
            [1.0, 1.0, -1.0, -1.0],
            [1.0, -1.0, -1.0, 1.0],
            [-1.0, -1.0, -1.0, -1.0],
            [-1.0, 1.0, -1.0, 1.0],
            [-1.0, -1.0, 1.0, 1.0],
            [-1.0, 1.0, 1.0, -1.0],
        ];
        let m = pca_fit(d.view(), 0.1).unwrap();
        for l in &m.eigenvalues {
            assert!((l - 1.0).abs() < 1e-9);
        }
        assert_eq!(m.n_components(), 1);
        assert_eq!(pca_fit(d.view(), 0.3).unwrap().n_components(), 2);
    }

    #[test]
    fn full_coverage_keeps_everything() {
        let d = random_data(30, 5, 3);
        assert_eq!(pca_fit(d.view(), 1.0).unwrap().n_components(), 5);
    }

    #[test]
    fn fit_errors() {
        let one = array![[1.0, 2.0]];
        assert!(matches!(pca_fit(one.view(), 0.5), Err(Error::PcaFit(_))));
        let flat = array![[1.0, 2.0], [1.0, 2.0]];
        assert!(matches!(pca_fit(flat.view(), 0.5), Err(Error::DegenerateData)));
        let d = random_data(5, 3, 1);
        assert!(matches!(pca_fit(d.view(), 0.0), Err(Error::Config(_))));
        let m = pca_fit(d.view(), 0.5).unwrap();
        let wrong = Array2::<f64>::zeros((2, 4));
        assert!(matches!(
            pca_transform(&m, wrong.view()),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn transform_properties() {
        let d = random_data(40, 6, 9);
        let (m, proj) = fit_transform(d.view(), 1.0).unwrap();
        let mean_row = d.mean_axis(Axis(0)).unwrap().insert_axis(Axis(0));
        let z = pca_transform(&m, mean_row.view()).unwrap();
        assert!(z.iter().all(|v| v.abs() < 1e-12));
        for c in 0..m.n_components() {
            assert!((sample_variance(proj.column(c)) - m.eigenvalues[c]).abs() < 1e-6);
        }
        // row independence
        let rev: Vec<usize> = (0..40).rev().collect();
        let permuted = pca_transform(&m, d.select(Axis(0), &rev).view()).unwrap();
        assert_eq!(permuted, proj.select(Axis(0), &rev));
    }

    #[test]
    fn zero_variance_columns_are_dropped() {
        let mut d = random_data(10, 4, 5);
        d.column_mut(2).fill(7.0);
        let m = pca_fit(d.view(), 1.0).unwrap();
        assert_eq!(m.scales[2], 0.0);
        assert_eq!(m.eigenvalues.len(), 3);
        assert!(m.components.iter().all(|c| c[2] == 0.0));
    }

    fn check_model(d: &Array2<f64>, vc: f64) -> std::result::Result<(), TestCaseError> {
        let (m, proj) = fit_transform(d.view(), vc).unwrap();
        for w in m.eigenvalues.windows(2) {
            prop_assert!(w[0] >= w[1]);
        }
        for (a, ca) in m.components.iter().enumerate() {
            for (b, cb) in m.components.iter().enumerate() {
                let dot: f64 = ca.iter().zip(cb).map(|(x, y)| x * y).sum();
                let expect = if a == b { 1.0 } else { 0.0 };
                prop_assert!((dot - expect).abs() < 1e-9, "dot {a},{b} = {dot}");
            }
        }
        let k = m.n_components();
        prop_assert!(m.coverage(k) >= vc - 1e-12);
        if k > 1 {
            prop_assert!(m.coverage(k - 1) < vc);
        }
        // projected components are uncorrelated
        let n = proj.nrows() as f64;
        let centered = &proj - &proj.mean_axis(Axis(0)).unwrap();
        let cov = centered.t().dot(&centered) / (n - 1.0);
        for a in 0..k {
            for b in 0..k {
                if a != b {
                    prop_assert!(cov[[a, b]].abs() < 1e-6 * m.eigenvalues[0]);
                }
            }
        }
        Ok(())
    }

    proptest! {
        #[test]
        fn primal_route_invariants(seed in any::<u64>(), vc in 0.05f64..=1.0) {
            check_model(&random_data(25, 6, seed), vc)?;
        }

        #[test]
        fn dual_route_invariants(seed in any::<u64>(), vc in 0.05f64..=1.0) {
            // more columns than rows exercises the Gram-matrix route
            check_model(&random_data(8, 20, seed), vc)?;
        }
    }

    #[test]
    fn primal_and_dual_routes_agree() {
        let d = random_data(12, 12, 77);
        let wide = ndarray::concatenate(Axis(1), &[d.view(), d.view()]).unwrap();
        // duplicating every column doubles each eigenvalue and forces the dual route
        let narrow = pca_fit(d.view(), 1.0).unwrap();
        let dual = pca_fit(wide.view(), 1.0).unwrap();
        for (a, b) in narrow.eigenvalues.iter().zip(&dual.eigenvalues) {
            assert!((2.0 * a - b).abs() < 1e-8, "{a} vs {b}");
        }
    }
}
