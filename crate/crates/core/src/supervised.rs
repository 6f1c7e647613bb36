//! Linear max-margin baseline trained by primal subgradient descent.
//!
//! Columns are min-max scaled to [0, 1] on the training rows and a constant
//! feature stands in for the bias; the learned hyperplane is mapped back to
//! the unscaled feature space before it is returned.

use ndarray::{Array2, ArrayView2};
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{ChunkSet, Label};
use crate::error::{Error, Result};
use crate::features::{aggregate, build_vocabulary, extract_all, tf_matrix, Counts, FeatureScheme, Idf, Weighting};
use crate::seed;

pub const DEFAULT_LAMBDA: f64 = 1e-4;
pub const DEFAULT_EPOCHS: usize = 50;
pub const DEFAULT_FOLDS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub lambda: f64,
    pub epochs: usize,
    pub seed: u64,
}

impl TrainConfig {
    pub fn new(seed: u64) -> Self {
        TrainConfig {
            lambda: DEFAULT_LAMBDA,
            epochs: DEFAULT_EPOCHS,
            seed,
        }
    }
}

/// A hyperplane `w·x + b` over unscaled features; positive side is O.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub lambda: f64,
    pub epochs: usize,
    pub seed: u64,
    /// Content hash of the vocabulary the weights are indexed by.
    pub vocabulary_ref: String,
    /// Regularized hinge objective of the averaged iterate after each epoch,
    /// on the scaled training data.
    #[serde(skip)]
    pub objective_trace: Vec<f64>,
}

fn sign(label: Label) -> f64 {
    match label {
        Label::O => 1.0,
        Label::T => -1.0,
    }
}

/// Min-max scaled rows with a trailing constant 1.
fn scaled_rows(x: ArrayView2<'_, f64>, lo: &[f64], range: &[f64]) -> Array2<f64> {
    let d = x.ncols();
    let mut out = Array2::zeros((x.nrows(), d + 1));
    for (i, row) in x.rows().into_iter().enumerate() {
        for j in 0..d {
            if range[j] > 0.0 {
                out[[i, j]] = (row[j] - lo[j]) / range[j];
            }
        }
        out[[i, d]] = 1.0;
    }
    out
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `λ/2·‖w‖² + mean hinge` over scaled rows (bias included in `w`).
fn objective(w: &[f64], z: &Array2<f64>, y: &[f64], lambda: f64) -> f64 {
    let hinge: f64 = z
        .rows()
        .into_iter()
        .zip(y)
        .map(|(row, &yi)| (1.0 - yi * dot(w, row.as_slice().expect("standard layout"))).max(0.0))
        .sum();
    0.5 * lambda * dot(w, w) + hinge / y.len() as f64
}

/// Trains on `x` (rows × features) with gold labels. O is the positive class.
pub fn train(x: ArrayView2<'_, f64>, gold: &[Label], cfg: &TrainConfig) -> Result<LinearModel> {
    let n = x.nrows();
    if gold.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: gold.len(),
        });
    }
    if !gold.contains(&Label::O) || !gold.contains(&Label::T) {
        return Err(Error::Training("training data needs both classes".into()));
    }
    if !(cfg.lambda > 0.0 && cfg.lambda.is_finite()) || cfg.epochs == 0 {
        return Err(Error::Config("lambda must be positive and epochs at least 1".into()));
    }
    let d = x.ncols();
    let mut lo = vec![f64::INFINITY; d];
    let mut hi = vec![f64::NEG_INFINITY; d];
    for row in x.rows() {
        for j in 0..d {
            lo[j] = lo[j].min(row[j]);
            hi[j] = hi[j].max(row[j]);
        }
    }
    let range: Vec<f64> = lo.iter().zip(&hi).map(|(a, b)| b - a).collect();
    let z = scaled_rows(x, &lo, &range);
    let y: Vec<f64> = gold.iter().map(|&l| sign(l)).collect();

    let mut rng = seed::rng(cfg.seed);
    let mut order: Vec<usize> = (0..n).collect();
    let mut w = vec![0.0; d + 1];
    let mut avg = vec![0.0; d + 1];
    let mut t = 0usize;
    let mut trace = Vec::with_capacity(cfg.epochs);
    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            t += 1;
            let eta = 1.0 / (cfg.lambda * t as f64);
            let row = z.row(i);
            let row = row.as_slice().expect("standard layout");
            let violated = y[i] * dot(&w, row) < 1.0;
            let shrink = 1.0 - eta * cfg.lambda;
            for (wj, &xj) in w.iter_mut().zip(row) {
                *wj *= shrink;
                if violated {
                    *wj += eta * y[i] * xj;
                }
            }
            let step = 1.0 / t as f64;
            for (a, &wj) in avg.iter_mut().zip(&w) {
                *a += (wj - *a) * step;
            }
        }
        trace.push(objective(&avg, &z, &y, cfg.lambda));
    }

    let mut weights = vec![0.0; d];
    let mut bias = avg[d];
    for j in 0..d {
        if range[j] > 0.0 {
            weights[j] = avg[j] / range[j];
            bias -= avg[j] * lo[j] / range[j];
        }
    }
    Ok(LinearModel {
        weights,
        bias,
        lambda: cfg.lambda,
        epochs: cfg.epochs,
        seed: cfg.seed,
        vocabulary_ref: String::new(),
        objective_trace: trace,
    })
}

/// O when `w·x + b ≥ 0`, T otherwise.
pub fn predict(model: &LinearModel, x: ArrayView2<'_, f64>) -> Result<Vec<Label>> {
    if x.ncols() != model.weights.len() {
        return Err(Error::DimensionMismatch {
            expected: model.weights.len(),
            actual: x.ncols(),
        });
    }
    Ok(x.rows()
        .into_iter()
        .map(|row| {
            let score = row.iter().zip(&model.weights).map(|(a, b)| a * b).sum::<f64>() + model.bias;
            if score >= 0.0 {
                Label::O
            } else {
                Label::T
            }
        })
        .collect())
}

fn accuracy(predicted: &[Label], gold: &[Label]) -> f64 {
    predicted.iter().zip(gold).filter(|(a, b)| a == b).count() as f64 / gold.len() as f64
}

/// Fold index of every row. Rows of each class are shuffled and dealt round
/// robin, continuing across classes, so fold sizes and per-class counts each
/// differ by at most one.
pub fn stratified_folds(gold: &[Label], folds: usize, seed_value: u64) -> Vec<usize> {
    let mut rng = seed::rng(seed_value);
    let mut out = vec![0; gold.len()];
    let mut next = 0;
    for class in [Label::O, Label::T] {
        let mut rows: Vec<usize> = (0..gold.len()).filter(|&i| gold[i] == class).collect();
        rows.shuffle(&mut rng);
        for r in rows {
            out[r] = next % folds;
            next += 1;
        }
    }
    out
}

/// Supervised feature extraction settings.
#[derive(Debug, Clone)]
pub struct SupervisedSetup {
    pub scheme: FeatureScheme,
    pub cap: usize,
    pub weighting: Weighting,
    pub train: TrainConfig,
}

fn gold_of(chunks: &ChunkSet) -> Result<Vec<Label>> {
    chunks
        .chunks
        .iter()
        .map(|c| {
            c.label
                .ok_or_else(|| Error::Training(format!("chunk `{}` has no gold label", c.id)))
        })
        .collect()
}

/// Fits vocabulary and idf on the training rows, trains, and scores the test rows.
fn fit_and_score(
    train_set: &ChunkSet,
    train_counts: &[Counts],
    test_set: &ChunkSet,
    test_counts: &[Counts],
    setup: &SupervisedSetup,
) -> Result<f64> {
    let vocab = build_vocabulary(&aggregate(train_counts), &setup.scheme, setup.cap)?;
    let mut train_m = tf_matrix(train_set, train_counts, &vocab);
    let mut test_m = tf_matrix(test_set, test_counts, &vocab);
    if setup.weighting == Weighting::TFIDF {
        let idf = Idf::fit(&train_m)?;
        train_m = idf.apply(&train_m)?;
        test_m = idf.apply(&test_m)?;
    }
    let mut model = train(train_m.values.view(), &gold_of(train_set)?, &setup.train)?;
    model.vocabulary_ref = seed::content_hash(vocab.terms.join("\n").as_bytes());
    let predicted = predict(&model, test_m.values.view())?;
    Ok(accuracy(&predicted, &gold_of(test_set)?))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvOutcome {
    pub mean_accuracy: f64,
    pub fold_accuracies: Vec<f64>,
}

/// Stratified ten-fold cross-validation.
pub fn ten_fold_cv(chunks: &ChunkSet, setup: &SupervisedSetup, seed_value: u64) -> Result<CvOutcome> {
    k_fold_cv(chunks, setup, DEFAULT_FOLDS, seed_value)
}

pub fn k_fold_cv(chunks: &ChunkSet, setup: &SupervisedSetup, folds: usize, seed_value: u64) -> Result<CvOutcome> {
    let gold = gold_of(chunks)?;
    for class in [Label::O, Label::T] {
        let n = gold.iter().filter(|&&g| g == class).count();
        if n < folds {
            return Err(Error::InsufficientData(format!(
                "{folds}-fold cross-validation needs {folds} chunks of class {class}, got {n}"
            )));
        }
    }
    let counts = extract_all(chunks, &setup.scheme)?;
    let assignment = stratified_folds(&gold, folds, seed_value);
    let fold_accuracies = (0..folds)
        .into_par_iter()
        .map(|f| {
            let (test, train): (Vec<usize>, Vec<usize>) = (0..gold.len()).partition(|&i| assignment[i] == f);
            let pick = |rows: &[usize]| rows.iter().map(|&i| counts[i].clone()).collect::<Vec<_>>();
            fit_and_score(
                &chunks.subset(&train),
                &pick(&train),
                &chunks.subset(&test),
                &pick(&test),
                setup,
            )
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(CvOutcome {
        mean_accuracy: fold_accuracies.iter().sum::<f64>() / folds as f64,
        fold_accuracies,
    })
}

/// Trains on every chunk of `train_set` and reports accuracy on `test_set`.
/// Test terms outside the training vocabulary are dropped.
pub fn cross_domain_eval(train_set: &ChunkSet, test_set: &ChunkSet, setup: &SupervisedSetup) -> Result<f64> {
    let train_counts = extract_all(train_set, &setup.scheme)?;
    let test_counts = extract_all(test_set, &setup.scheme)?;
    fit_and_score(train_set, &train_counts, test_set, &test_counts, setup)
}
