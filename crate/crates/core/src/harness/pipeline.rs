use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::RunConfig;
use crate::cluster::evaluate_majority;
use crate::corpus::{ChunkSet, Label};
use crate::ensemble::{vote, JudgeVerdict};
use crate::error::{Error, Result};
use crate::features::{
    aggregate, build_vocabulary, extract_all, tf_matrix, FeatureMatrix, FeatureScheme, Resources, SchemeKind, Weighting,
};
use crate::label::{label_accuracy, reference_frequencies, select_markers, LabelDecision, Labeler, MarkerSets};
use crate::mixed::{cluster_and_label, mixed_pipeline, MixedReport, Strategy};
use crate::supervised::{cross_domain_eval, ten_fold_cv, SupervisedSetup};

/// A step of a run that read gold labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelUse {
    pub step: String,
    pub source: String,
}

/// Marker sets chosen from a labeled reference sample.
pub fn markers_from_reference(
    reference: &ChunkSet,
    cfg: &RunConfig,
    resources: &Resources,
    source: &str,
) -> Result<MarkerSets> {
    let freq = reference_frequencies(reference, &resources.function_words, source)?;
    select_markers(&freq.o, &freq.t, cfg.delta, &freq.source)
}

pub fn labeler(markers: &MarkerSets, cfg: &RunConfig) -> Result<Labeler> {
    Labeler::new(markers.clone(), cfg.alpha, cfg.epsilon, cfg.prototype)
}

/// Unweighted term-frequency matrix of `chunks` under `kind`.
pub fn tf_features(
    chunks: &ChunkSet,
    kind: SchemeKind,
    cfg: &RunConfig,
    resources: &Resources,
) -> Result<FeatureMatrix> {
    let scheme = FeatureScheme::new(kind, resources);
    let counts = extract_all(chunks, &scheme)?;
    let vocab = build_vocabulary(&aggregate(&counts), &scheme, cfg.vocabulary_cap)?;
    Ok(tf_matrix(chunks, &counts, &vocab))
}

fn all_gold(chunks: &ChunkSet) -> Option<Vec<Option<Label>>> {
    let gold = chunks.gold();
    gold.iter().all(Option::is_some).then_some(gold)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JudgeReport {
    pub scheme: SchemeKind,
    pub weighting: Weighting,
    pub vocabulary_size: usize,
    pub pca_components: usize,
    /// Seed of the selected restart.
    pub seed: u64,
    pub total_sse: f64,
    pub sse_per_cluster: Vec<f64>,
    pub cluster_sizes: Vec<usize>,
    pub iterations_used: usize,
    pub decision: LabelDecision,
    /// Cluster purity under majority gold labels.
    pub majority_accuracy: Option<f64>,
    /// Accuracy of the unsupervised cluster labels.
    pub label_accuracy: Option<f64>,
    #[serde(skip)]
    pub assignments: Vec<usize>,
    #[serde(skip)]
    pub labels: Vec<Label>,
}

fn run_judge(
    kind: SchemeKind,
    chunks: &ChunkSet,
    labeler: &Labeler,
    cfg: &RunConfig,
    resources: &Resources,
) -> Result<JudgeReport> {
    let tf = tf_features(chunks, kind, cfg, resources)?;
    let pcfg = cfg.pipeline_config(kind);
    let out = cluster_and_label(chunks, &tf, labeler, &pcfg)?;
    let gold = all_gold(chunks);
    let majority_accuracy = gold.as_ref().map(|g| evaluate_majority(&out.run, g)).transpose()?;
    let label_accuracy = gold
        .as_ref()
        .map(|g| label_accuracy(&out.labeling.labels, g))
        .transpose()?;
    Ok(JudgeReport {
        scheme: kind,
        weighting: pcfg.weighting,
        vocabulary_size: tf.vocabulary.len(),
        pca_components: out.pca_components,
        seed: out.run.seed,
        total_sse: out.run.total_sse,
        sse_per_cluster: out.run.sse_per_cluster.clone(),
        cluster_sizes: out.run.cluster_sizes(),
        iterations_used: out.run.iterations_used,
        decision: out.labeling.decision,
        majority_accuracy,
        label_accuracy,
        assignments: out.run.assignments,
        labels: out.labeling.labels,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineReport {
    pub config_hash: String,
    pub config: RunConfig,
    pub input_hash: String,
    pub n_chunks: usize,
    pub markers: MarkerSets,
    pub judges: Vec<JudgeReport>,
    pub labels: BTreeMap<String, Label>,
    /// Accuracy of the final (voted, when several judges) labels.
    pub accuracy: Option<f64>,
    /// Majority-label clustering accuracy; set for single-judge runs.
    pub clustering_accuracy: Option<f64>,
    pub label_audit: Vec<LabelUse>,
}

impl PipelineReport {
    /// Majority clustering accuracy for single-judge runs, voted label
    /// accuracy otherwise.
    pub fn headline_accuracy(&self) -> Option<f64> {
        self.clustering_accuracy.or(self.accuracy)
    }

    pub fn verdicts(&self, chunk_ids: &[String]) -> Vec<JudgeVerdict> {
        self.judges
            .iter()
            .map(|j| JudgeVerdict {
                scheme: j.scheme,
                chunk_ids: chunk_ids.to_vec(),
                labels: j.labels.clone(),
            })
            .collect()
    }
}

fn audit(markers: &MarkerSets, evaluated: bool) -> Vec<LabelUse> {
    let mut uses = vec![LabelUse {
        step: "marker-selection".into(),
        source: markers.reference.clone(),
    }];
    if evaluated {
        uses.push(LabelUse {
            step: "evaluation".into(),
            source: "input chunks".into(),
        });
    }
    uses
}

/// Features, weighting, PCA, clustering and labeling for every configured
/// scheme, followed by a vote when there is more than one.
pub fn run_pipeline(
    cfg: &RunConfig,
    chunks: &ChunkSet,
    markers: &MarkerSets,
    resources: &Resources,
) -> Result<PipelineReport> {
    cfg.validate()?;
    let mut schemes = cfg.schemes.clone();
    let mut seen = std::collections::BTreeSet::new();
    schemes.retain(|s| seen.insert(*s));
    if schemes.len().is_multiple_of(2) {
        return Err(Error::Config(format!(
            "a panel of {} judges cannot vote",
            schemes.len()
        )));
    }
    let labeler = labeler(markers, cfg)?;
    let judges: Vec<JudgeReport> = schemes
        .par_iter()
        .map(|&kind| run_judge(kind, chunks, &labeler, cfg, resources))
        .collect::<Result<_>>()?;
    let ids = chunks.ids();
    let final_labels = if judges.len() == 1 {
        judges[0].labels.clone()
    } else {
        let verdicts: Vec<JudgeVerdict> = judges
            .iter()
            .map(|j| JudgeVerdict {
                scheme: j.scheme,
                chunk_ids: ids.clone(),
                labels: j.labels.clone(),
            })
            .collect();
        vote(&verdicts)?
    };
    let gold = all_gold(chunks);
    let accuracy = gold.as_ref().map(|g| label_accuracy(&final_labels, g)).transpose()?;
    let clustering_accuracy = if judges.len() == 1 {
        judges[0].majority_accuracy
    } else {
        None
    };
    Ok(PipelineReport {
        config_hash: cfg.hash(),
        config: cfg.clone(),
        input_hash: chunks.provenance.config_hash.clone(),
        n_chunks: chunks.len(),
        markers: markers.clone(),
        labels: ids.into_iter().zip(final_labels).collect(),
        judges,
        accuracy,
        clustering_accuracy,
        label_audit: audit(markers, gold.is_some()),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixedRunReport {
    pub config_hash: String,
    pub config: RunConfig,
    pub input_hash: String,
    pub scheme: SchemeKind,
    pub result: MixedReport,
    pub label_audit: Vec<LabelUse>,
}

/// Mixed-domain run with the first configured scheme.
pub fn run_mixed(
    cfg: &RunConfig,
    chunks: &ChunkSet,
    markers: &MarkerSets,
    resources: &Resources,
) -> Result<MixedRunReport> {
    cfg.validate()?;
    let k = cfg
        .k_domains
        .ok_or_else(|| Error::Config("mixed runs need k_domains".into()))?;
    let strategy = cfg.strategy.unwrap_or(Strategy::TwoPhase);
    let kind = cfg.schemes[0];
    let tf = tf_features(chunks, kind, cfg, resources)?;
    let result = mixed_pipeline(
        strategy,
        chunks,
        &tf,
        k,
        &labeler(markers, cfg)?,
        &cfg.pipeline_config(kind),
    )?;
    Ok(MixedRunReport {
        config_hash: cfg.hash(),
        config: cfg.clone(),
        input_hash: chunks.provenance.config_hash.clone(),
        scheme: kind,
        label_audit: audit(
            markers,
            result.ot_accuracy.is_some() || result.domain_accuracy.is_some(),
        ),
        result: result.report(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupervisedReport {
    pub config_hash: String,
    pub config: RunConfig,
    pub scheme: SchemeKind,
    pub mode: String,
    pub accuracy: f64,
    pub fold_accuracies: Vec<f64>,
    pub train_hash: String,
    pub test_hash: Option<String>,
}

/// Ten-fold cross-validation on `train`, or train/test evaluation when
/// `test` is given, with the first configured scheme.
pub fn run_supervised(
    cfg: &RunConfig,
    train: &ChunkSet,
    test: Option<&ChunkSet>,
    resources: &Resources,
) -> Result<SupervisedReport> {
    cfg.validate()?;
    let kind = cfg.schemes[0];
    let setup = SupervisedSetup {
        scheme: FeatureScheme::new(kind, resources),
        cap: cfg.vocabulary_cap,
        weighting: cfg.weighting_for(kind),
        train: cfg.train_config(),
    };
    let (mode, accuracy, fold_accuracies) = match test {
        Some(test) => ("cross-domain", cross_domain_eval(train, test, &setup)?, vec![]),
        None => {
            let cv = ten_fold_cv(train, &setup, cfg.seed)?;
            ("ten-fold", cv.mean_accuracy, cv.fold_accuracies)
        }
    };
    Ok(SupervisedReport {
        config_hash: cfg.hash(),
        config: cfg.clone(),
        scheme: kind,
        mode: mode.into(),
        accuracy,
        fold_accuracies,
        train_hash: train.provenance.config_hash.clone(),
        test_hash: test.map(|t| t.provenance.config_hash.clone()),
    })
}
