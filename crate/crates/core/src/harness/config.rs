use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::cluster::RestartConfig;
use crate::corpus::Proportion;
use crate::error::{Error, Result};
use crate::features::{SchemeKind, Weighting, DEFAULT_CAP};
use crate::label::{Prototype, DEFAULT_ALPHA, DEFAULT_DELTA, DEFAULT_EPSILON};
use crate::mixed::{PipelineConfig, Strategy};
use crate::reduce::DEFAULT_VARIANCE_COVERED;
use crate::seed;
use crate::supervised::{TrainConfig, DEFAULT_EPOCHS, DEFAULT_LAMBDA};

/// Everything a run depends on besides its input files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub chunk_target: usize,
    pub schemes: Vec<SchemeKind>,
    /// Overrides of the default weighting (tf-idf for FW, tf otherwise).
    pub weighting: BTreeMap<SchemeKind, Weighting>,
    pub vocabulary_cap: usize,
    pub variance_covered: f64,
    pub n_restarts: usize,
    pub max_iterations: usize,
    pub delta: f64,
    pub epsilon: f64,
    pub alpha: f64,
    pub prototype: Prototype,
    pub k_domains: Option<usize>,
    pub strategy: Option<Strategy>,
    pub ratio_o_to_t: Proportion,
    pub lambda: f64,
    pub epochs: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            chunk_target: 2000,
            schemes: vec![SchemeKind::FW],
            weighting: BTreeMap::new(),
            vocabulary_cap: DEFAULT_CAP,
            variance_covered: DEFAULT_VARIANCE_COVERED,
            n_restarts: 5,
            max_iterations: 100,
            delta: DEFAULT_DELTA,
            epsilon: DEFAULT_EPSILON,
            alpha: DEFAULT_ALPHA,
            prototype: Prototype::Uniform,
            k_domains: None,
            strategy: None,
            ratio_o_to_t: Proportion::BALANCED,
            lambda: DEFAULT_LAMBDA,
            epochs: DEFAULT_EPOCHS,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg: RunConfig = serde_json::from_str(&text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::Config(m.to_string()));
        if self.chunk_target < 1 {
            return fail("chunk_target must be at least 1");
        }
        if self.schemes.is_empty() {
            return fail("at least one feature scheme is required");
        }
        if !(self.variance_covered > 0.0 && self.variance_covered <= 1.0) {
            return fail("variance_covered must lie in (0, 1]");
        }
        if self.n_restarts < 1 || self.max_iterations < 1 {
            return fail("n_restarts and max_iterations must be at least 1");
        }
        if !(self.delta > 0.0 && self.epsilon > 0.0 && self.alpha > 0.0) {
            return fail("delta, epsilon and alpha must be positive");
        }
        if self.k_domains == Some(0) {
            return fail("k_domains must be at least 1");
        }
        if self.lambda.is_nan() || self.lambda <= 0.0 || self.epochs < 1 {
            return fail("lambda must be positive and epochs at least 1");
        }
        Ok(())
    }

    pub fn weighting_for(&self, kind: SchemeKind) -> Weighting {
        self.weighting.get(&kind).copied().unwrap_or(match kind {
            SchemeKind::FW => Weighting::TFIDF,
            _ => Weighting::TF,
        })
    }

    /// Hex digest of the canonical JSON form.
    pub fn hash(&self) -> String {
        seed::content_hash(&serde_json::to_vec(self).expect("config serializes"))
    }

    /// Master seed of the judge for `kind`, independent of panel composition.
    pub fn judge_seed(&self, kind: SchemeKind) -> u64 {
        seed::derive_seed(self.seed, kind as u64)
    }

    pub fn pipeline_config(&self, kind: SchemeKind) -> PipelineConfig {
        PipelineConfig {
            restart: RestartConfig {
                n_restarts: self.n_restarts,
                max_iterations: self.max_iterations,
                seed: self.judge_seed(kind),
            },
            variance_covered: self.variance_covered,
            weighting: self.weighting_for(kind),
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            lambda: self.lambda,
            epochs: self.epochs,
            seed: self.seed,
        }
    }
}
