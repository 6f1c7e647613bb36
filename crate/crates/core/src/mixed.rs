//! O/T classification of chunk mixtures drawn from several domains.
//!
//! The flat strategy clusters everything into `2k` groups and pairs the
//! groups by centroid proximity before labeling each pair. The two-phase
//! strategy first clusters into `k` domains and then splits and labels each
//! domain on its own, refitting weighting and PCA at every level.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cluster::{best_of_restarts, ClusteringRun, RestartConfig};
use crate::corpus::{ChunkSet, Label};
use crate::error::{Error, Result};
use crate::features::{apply_tfidf, FeatureMatrix, Weighting};
use crate::label::{label_accuracy, ClusterLabeling, LabelDecision, Labeler};
use crate::reduce::{fit_transform, PcaModel};
use crate::seed;

/// Clustering parameters shared by every level of a pipeline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipelineConfig {
    pub restart: RestartConfig,
    pub variance_covered: f64,
    pub weighting: Weighting,
}

/// Applies `weighting` to a TF matrix, fitting idf on its own rows.
pub fn weigh(tf: &FeatureMatrix, weighting: Weighting) -> Result<FeatureMatrix> {
    match weighting {
        Weighting::TF => Ok(tf.clone()),
        Weighting::TFIDF => apply_tfidf(tf),
    }
}

/// Weighting, PCA and clustering of `tf` into `k` groups.
pub fn reduce_and_cluster(tf: &FeatureMatrix, k: usize, cfg: &PipelineConfig) -> Result<(ClusteringRun, PcaModel)> {
    let weighted = weigh(tf, cfg.weighting)?;
    let (model, projected) = fit_transform(weighted.values.view(), cfg.variance_covered)?;
    let run = best_of_restarts(projected.view(), k, &cfg.restart)?;
    Ok((run, model))
}

/// Outcome of the single-domain pipeline.
#[derive(Debug, Clone, PartialEq)]
pub struct SingleDomainOutcome {
    pub run: ClusteringRun,
    pub labeling: ClusterLabeling,
    pub pca_components: usize,
}

/// Single-domain pipeline: two clusters, labeled with prototype models.
pub fn cluster_and_label(
    chunks: &ChunkSet,
    tf: &FeatureMatrix,
    labeler: &Labeler,
    cfg: &PipelineConfig,
) -> Result<SingleDomainOutcome> {
    check_rows(chunks, tf)?;
    let (run, pca) = reduce_and_cluster(tf, 2, cfg)?;
    let labeling = labeler.label_run(&run, chunks)?;
    Ok(SingleDomainOutcome {
        run,
        labeling,
        pca_components: pca.n_components(),
    })
}

fn check_rows(chunks: &ChunkSet, tf: &FeatureMatrix) -> Result<()> {
    if tf.rows() != chunks.len() {
        return Err(Error::DimensionMismatch {
            expected: chunks.len(),
            actual: tf.rows(),
        });
    }
    if tf.weighting != Weighting::TF {
        return Err(Error::Config("mixed-domain pipelines take a TF matrix".into()));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    Flat,
    TwoPhase,
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::Flat => "flat",
            Strategy::TwoPhase => "two-phase",
        })
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "flat" => Ok(Strategy::Flat),
            "two-phase" | "twophase" => Ok(Strategy::TwoPhase),
            _ => Err(Error::Config(format!("unknown strategy `{s}`"))),
        }
    }
}

/// Domain grouping and O/T labels of a mixed-domain run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixedResult {
    pub strategy: Strategy,
    pub k_domains: usize,
    pub chunk_ids: Vec<String>,
    /// Domain group of every chunk, in row order.
    pub domain_assignments: Vec<usize>,
    /// Sub-cluster of every chunk (0..2k), in row order.
    pub sub_clusters: Vec<usize>,
    pub ot_labels: Vec<Label>,
    /// One labeling decision per domain group that was split in two.
    pub decisions: BTreeMap<usize, LabelDecision>,
    /// Domain groups too small to split, labeled by nearest prototype.
    pub fallback_domains: Vec<usize>,
    pub domain_accuracy: Option<f64>,
    pub ot_accuracy: Option<f64>,
}

impl MixedResult {
    fn score(&mut self, chunks: &ChunkSet) -> Result<()> {
        let gold = chunks.gold();
        if gold.iter().all(Option::is_some) {
            self.ot_accuracy = Some(ot_accuracy(&self.ot_labels, &gold)?);
        }
        let domains: Option<Vec<&str>> = chunks.chunks.iter().map(|c| c.domain.as_deref()).collect();
        if let Some(domains) = domains {
            let distinct: BTreeSet<&str> = domains.iter().copied().collect();
            if distinct.len() == self.k_domains {
                self.domain_accuracy = Some(domain_accuracy(&self.domain_assignments, &domains)?);
            }
        }
        Ok(())
    }

    /// Serializable view keyed by chunk id.
    pub fn report(&self) -> MixedReport {
        MixedReport {
            strategy: self.strategy,
            k: self.k_domains,
            assignments: self
                .chunk_ids
                .iter()
                .cloned()
                .zip(self.domain_assignments.iter().copied())
                .collect(),
            labels: self
                .chunk_ids
                .iter()
                .cloned()
                .zip(self.ot_labels.iter().copied())
                .collect(),
            fallback_domains: self.fallback_domains.clone(),
            domain_accuracy: self.domain_accuracy,
            ot_accuracy: self.ot_accuracy,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixedReport {
    pub strategy: Strategy,
    pub k: usize,
    pub assignments: BTreeMap<String, usize>,
    pub labels: BTreeMap<String, Label>,
    pub fallback_domains: Vec<usize>,
    pub domain_accuracy: Option<f64>,
    pub ot_accuracy: Option<f64>,
}

fn single_domain_result(
    strategy: Strategy,
    chunks: &ChunkSet,
    tf: &FeatureMatrix,
    labeler: &Labeler,
    cfg: &PipelineConfig,
) -> Result<MixedResult> {
    let out = cluster_and_label(chunks, tf, labeler, cfg)?;
    let mut result = MixedResult {
        strategy,
        k_domains: 1,
        chunk_ids: chunks.ids(),
        domain_assignments: vec![0; chunks.len()],
        sub_clusters: out.run.assignments.clone(),
        ot_labels: out.labeling.labels,
        decisions: BTreeMap::from([(0, out.labeling.decision)]),
        fallback_domains: vec![],
        domain_accuracy: None,
        ot_accuracy: None,
    };
    result.score(chunks)?;
    Ok(result)
}

fn check_k(chunks: &ChunkSet, k_domains: usize, clusters: usize) -> Result<()> {
    if k_domains < 1 {
        return Err(Error::Config("k_domains must be at least 1".into()));
    }
    if chunks.len() < clusters {
        return Err(Error::InsufficientData(format!(
            "{} chunks cannot form {clusters} clusters",
            chunks.len()
        )));
    }
    Ok(())
}

/// Greedy pairing: repeatedly joins the two closest unpaired centroids.
pub fn pair_by_centroids(centroids: &[Vec<f64>]) -> Vec<(usize, usize)> {
    let mut candidates: Vec<(f64, usize, usize)> = Vec::new();
    for a in 0..centroids.len() {
        for b in a + 1..centroids.len() {
            let d: f64 = centroids[a]
                .iter()
                .zip(&centroids[b])
                .map(|(x, y)| (x - y).powi(2))
                .sum();
            candidates.push((d, a, b));
        }
    }
    candidates.sort_by(|x, y| x.0.total_cmp(&y.0).then((x.1, x.2).cmp(&(y.1, y.2))));
    let mut used = vec![false; centroids.len()];
    let mut pairs = Vec::new();
    for (_, a, b) in candidates {
        if !used[a] && !used[b] {
            used[a] = true;
            used[b] = true;
            pairs.push((a, b));
        }
    }
    pairs
}

/// Flat strategy: `2k` clusters paired by centroid proximity; each pair is
/// one domain group whose two clusters receive complementary labels.
pub fn flat_pipeline(
    chunks: &ChunkSet,
    tf: &FeatureMatrix,
    k_domains: usize,
    labeler: &Labeler,
    cfg: &PipelineConfig,
) -> Result<MixedResult> {
    check_rows(chunks, tf)?;
    check_k(chunks, k_domains, 2 * k_domains)?;
    if k_domains == 1 {
        return single_domain_result(Strategy::Flat, chunks, tf, labeler, cfg);
    }
    let (run, _) = reduce_and_cluster(tf, 2 * k_domains, cfg)?;
    let members = run.members();
    let pairs = pair_by_centroids(&run.centroids);
    let mut group_of = vec![0; run.k];
    let mut cluster_label = vec![Label::T; run.k];
    let mut decisions = BTreeMap::new();
    for (g, &(a, b)) in pairs.iter().enumerate() {
        let pick = |c: usize| members[c].iter().map(|&i| &chunks.chunks[i]);
        let decision = labeler.decide(pick(a), pick(b))?;
        group_of[a] = g;
        group_of[b] = g;
        cluster_label[a] = decision.labels.0;
        cluster_label[b] = decision.labels.1;
        decisions.insert(g, decision);
    }
    let mut result = MixedResult {
        strategy: Strategy::Flat,
        k_domains,
        chunk_ids: chunks.ids(),
        domain_assignments: run.assignments.iter().map(|&c| group_of[c]).collect(),
        sub_clusters: run.assignments.clone(),
        ot_labels: run.assignments.iter().map(|&c| cluster_label[c]).collect(),
        decisions,
        fallback_domains: vec![],
        domain_accuracy: None,
        ot_accuracy: None,
    };
    result.score(chunks)?;
    Ok(result)
}

enum PhaseTwo {
    Split(Box<SingleDomainOutcome>),
    Fallback(Label),
}

/// Two-phase strategy: `k` domain clusters, then an independent two-way
/// split and labeling inside each domain cluster.
pub fn two_phase_pipeline(
    chunks: &ChunkSet,
    tf: &FeatureMatrix,
    k_domains: usize,
    labeler: &Labeler,
    cfg: &PipelineConfig,
) -> Result<MixedResult> {
    check_rows(chunks, tf)?;
    check_k(chunks, k_domains, k_domains)?;
    if k_domains == 1 {
        return single_domain_result(Strategy::TwoPhase, chunks, tf, labeler, cfg);
    }
    let (phase_one, _) = reduce_and_cluster(tf, k_domains, cfg)?;
    let members = phase_one.members();
    let outcomes: Vec<PhaseTwo> = members
        .par_iter()
        .enumerate()
        .map(|(d, rows)| {
            let sub_chunks = chunks.subset(rows);
            if rows.len() >= 2 {
                let sub_cfg = PipelineConfig {
                    restart: cfg.restart.with_seed(seed::derive_seed(cfg.restart.seed, 1 + d as u64)),
                    ..*cfg
                };
                match cluster_and_label(&sub_chunks, &tf.select_rows(rows), labeler, &sub_cfg) {
                    Ok(out) => return Ok(PhaseTwo::Split(Box::new(out))),
                    // identical rows leave nothing to split
                    Err(Error::DegenerateData) => {}
                    Err(e) => return Err(e),
                }
            }
            labeler.nearest_prototype(&sub_chunks.chunks).map(PhaseTwo::Fallback)
        })
        .collect::<Result<_>>()?;

    let n = chunks.len();
    let mut sub_clusters = vec![0; n];
    let mut ot_labels = vec![Label::T; n];
    let mut decisions = BTreeMap::new();
    let mut fallback_domains = Vec::new();
    for (d, (rows, outcome)) in members.iter().zip(outcomes).enumerate() {
        match outcome {
            PhaseTwo::Split(out) => {
                for (j, &row) in rows.iter().enumerate() {
                    sub_clusters[row] = 2 * d + out.run.assignments[j];
                    ot_labels[row] = out.labeling.labels[j];
                }
                decisions.insert(d, out.labeling.decision);
            }
            PhaseTwo::Fallback(label) => {
                for &row in rows {
                    sub_clusters[row] = 2 * d;
                    ot_labels[row] = label;
                }
                fallback_domains.push(d);
            }
        }
    }
    let mut result = MixedResult {
        strategy: Strategy::TwoPhase,
        k_domains,
        chunk_ids: chunks.ids(),
        domain_assignments: phase_one.assignments,
        sub_clusters,
        ot_labels,
        decisions,
        fallback_domains,
        domain_accuracy: None,
        ot_accuracy: None,
    };
    result.score(chunks)?;
    Ok(result)
}

/// Runs `strategy`.
pub fn mixed_pipeline(
    strategy: Strategy,
    chunks: &ChunkSet,
    tf: &FeatureMatrix,
    k_domains: usize,
    labeler: &Labeler,
    cfg: &PipelineConfig,
) -> Result<MixedResult> {
    match strategy {
        Strategy::Flat => flat_pipeline(chunks, tf, k_domains, labeler, cfg),
        Strategy::TwoPhase => two_phase_pipeline(chunks, tf, k_domains, labeler, cfg),
    }
}

/// Accuracy under the best one-to-one matching of clusters to gold domains.
pub fn domain_accuracy<S: AsRef<str>>(assignments: &[usize], gold: &[S]) -> Result<f64> {
    if assignments.len() != gold.len() || gold.is_empty() {
        return Err(Error::Evaluation(format!(
            "{} assignments for {} gold domains",
            assignments.len(),
            gold.len()
        )));
    }
    let domains: Vec<&str> = gold
        .iter()
        .map(AsRef::as_ref)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let clusters: Vec<usize> = assignments
        .iter()
        .copied()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let k = domains.len();
    if clusters.len() != k {
        return Err(Error::Evaluation(format!(
            "{} clusters cannot be matched to {k} domains",
            clusters.len()
        )));
    }
    if k > 20 {
        return Err(Error::Evaluation(format!("too many domains to match ({k})")));
    }
    let mut overlap = vec![vec![0usize; k]; k];
    for (a, g) in assignments.iter().zip(gold) {
        let c = clusters.binary_search(a).expect("collected above");
        let d = domains.binary_search(&g.as_ref()).expect("collected above");
        overlap[c][d] += 1;
    }
    // best[mask]: most matched chunks when the first popcount(mask) clusters
    // take the domains in `mask`
    let mut best = vec![usize::MIN; 1 << k];
    let mut reachable = vec![false; 1 << k];
    reachable[0] = true;
    for mask in 0usize..1 << k {
        if !reachable[mask] {
            continue;
        }
        let c = mask.count_ones() as usize;
        if c == k {
            continue;
        }
        for (d, &gain) in overlap[c].iter().enumerate() {
            if mask & (1 << d) == 0 {
                let next = mask | (1 << d);
                let value = best[mask] + gain;
                if !reachable[next] || value > best[next] {
                    best[next] = value;
                    reachable[next] = true;
                }
            }
        }
    }
    Ok(best[(1 << k) - 1] as f64 / gold.len() as f64)
}

/// Fraction of chunks whose predicted O/T label matches gold.
pub fn ot_accuracy(labels: &[Label], gold: &[Option<Label>]) -> Result<f64> {
    label_accuracy(labels, gold)
}
