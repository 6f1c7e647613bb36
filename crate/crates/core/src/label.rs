//! Unsupervised O/T labeling of a two-way clustering.
//!
//! Marker words are function words whose relative frequency differs between a
//! labeled reference sample of originals and translations. Each cluster's
//! ε-smoothed unigram model over the markers is compared, by Jensen-Shannon
//! distance, with prototype models built from the two marker sets.

use std::collections::{BTreeMap, HashMap};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::cluster::ClusteringRun;
use crate::corpus::{Chunk, ChunkSet, Label};
use crate::error::{Error, Result};
use crate::features::WordList;

pub const DEFAULT_DELTA: f64 = 0.05;
pub const DEFAULT_EPSILON: f64 = 0.001;
pub const DEFAULT_ALPHA: f64 = 1.0;

/// Per-class relative frequencies of function words in a labeled sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceFrequencies {
    pub o: BTreeMap<String, f64>,
    pub t: BTreeMap<String, f64>,
    /// Free-form description of where the sample came from.
    pub source: String,
}

/// Relative frequency of every function word within the O and T chunks of
/// `reference`, normalised by the token count of each class.
pub fn reference_frequencies(reference: &ChunkSet, fw: &WordList, source: &str) -> Result<ReferenceFrequencies> {
    let mut counts = [vec![0usize; fw.len()], vec![0usize; fw.len()]];
    let mut totals = [0usize; 2];
    for c in &reference.chunks {
        let side = match c.label {
            Some(Label::O) => 0,
            Some(Label::T) => 1,
            None => {
                return Err(Error::Evaluation(format!(
                    "reference chunk `{}` has no gold label",
                    c.id
                )))
            }
        };
        totals[side] += c.tokens.len();
        for t in &c.tokens {
            if let Some(i) = fw.position(t) {
                counts[side][i] += 1;
            }
        }
    }
    if totals.contains(&0) {
        return Err(Error::InsufficientData(
            "reference sample needs tokens of both classes".into(),
        ));
    }
    let table = |side: usize| -> BTreeMap<String, f64> {
        fw.entries()
            .iter()
            .zip(&counts[side])
            .map(|(w, &n)| (w.clone(), n as f64 / totals[side] as f64))
            .collect()
    };
    Ok(ReferenceFrequencies {
        o: table(0),
        t: table(1),
        source: source.to_string(),
    })
}

/// O- and T-marker vocabularies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarkerSets {
    pub o_markers: Vec<String>,
    pub t_markers: Vec<String>,
    pub delta: f64,
    pub reference: String,
    /// Reference frequency of each marker in its own class, used by the
    /// frequency-weighted prototype.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub weights: BTreeMap<String, f64>,
}

impl MarkerSets {
    /// `V = O_m ∪ T_m`, sorted.
    pub fn vocabulary(&self) -> Vec<String> {
        let mut v: Vec<String> = self.o_markers.iter().chain(&self.t_markers).cloned().collect();
        v.sort();
        v
    }

    /// Checks disjointness and, when given, membership in the function-word list.
    pub fn validate(&self, fw: Option<&WordList>) -> Result<()> {
        if self.o_markers.is_empty() && self.t_markers.is_empty() {
            return Err(Error::EmptyMarkers);
        }
        if let Some(w) = self.o_markers.iter().find(|w| self.t_markers.contains(w)) {
            return Err(Error::Config(format!("`{w}` is both an O and a T marker")));
        }
        if let Some(fw) = fw {
            if let Some(w) = self.vocabulary().iter().find(|w| !fw.contains(w)) {
                return Err(Error::Config(format!("marker `{w}` is not a function word")));
            }
        }
        Ok(())
    }
}

/// Splits terms into O and T markers by their O/T frequency ratio.
pub fn select_markers(
    freq_o: &BTreeMap<String, f64>,
    freq_t: &BTreeMap<String, f64>,
    delta: f64,
    reference: &str,
) -> Result<MarkerSets> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::Config(format!("delta must be positive, got {delta}")));
    }
    let mut terms: Vec<&String> = freq_o.keys().chain(freq_t.keys()).collect();
    terms.sort();
    terms.dedup();
    let mut o_markers = Vec::new();
    let mut t_markers = Vec::new();
    let mut weights = BTreeMap::new();
    for term in terms {
        let fo = freq_o.get(term).copied().unwrap_or(0.0);
        let ft = freq_t.get(term).copied().unwrap_or(0.0);
        if fo <= 0.0 && ft <= 0.0 {
            continue;
        }
        let ratio = if ft > 0.0 { fo / ft } else { f64::INFINITY };
        if ratio > 1.0 + delta {
            o_markers.push(term.clone());
            weights.insert(term.clone(), fo);
        } else if ratio < 1.0 - delta {
            t_markers.push(term.clone());
            weights.insert(term.clone(), ft);
        }
    }
    if o_markers.is_empty() && t_markers.is_empty() {
        return Err(Error::EmptyMarkers);
    }
    Ok(MarkerSets {
        o_markers,
        t_markers,
        delta,
        reference: reference.to_string(),
        weights,
    })
}

/// ε-smoothed unigram distribution over a fixed vocabulary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnigramLM {
    pub vocabulary: Vec<String>,
    pub probabilities: Vec<f64>,
    pub epsilon: f64,
}

impl UnigramLM {
    pub fn probability(&self, term: &str) -> Option<f64> {
        self.vocabulary
            .iter()
            .position(|v| v == term)
            .map(|i| self.probabilities[i])
    }
}

/// `p(w) = (tf(w) + ε) / (Σ_V tf + ε·|V|)`. Counts of terms outside the
/// vocabulary are ignored.
pub fn unigram_lm(counts: &HashMap<String, f64>, vocabulary: &[String], epsilon: f64) -> Result<UnigramLM> {
    if vocabulary.is_empty() {
        return Err(Error::LanguageModel("empty vocabulary".into()));
    }
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::LanguageModel(format!("epsilon must be positive, got {epsilon}")));
    }
    let tf: Vec<f64> = vocabulary
        .iter()
        .map(|w| counts.get(w).copied().unwrap_or(0.0))
        .collect();
    if tf.iter().any(|&c| c < 0.0 || !c.is_finite()) {
        return Err(Error::LanguageModel("counts must be finite and non-negative".into()));
    }
    let denominator = tf.iter().sum::<f64>() + epsilon * vocabulary.len() as f64;
    Ok(UnigramLM {
        vocabulary: vocabulary.to_vec(),
        probabilities: tf.iter().map(|c| (c + epsilon) / denominator).collect(),
        epsilon,
    })
}

/// Counts of vocabulary terms over all tokens of `chunks` (case-insensitive).
pub fn term_counts<'a>(chunks: impl IntoIterator<Item = &'a Chunk>, vocabulary: &[String]) -> HashMap<String, f64> {
    let index: HashMap<&str, usize> = vocabulary.iter().enumerate().map(|(i, w)| (w.as_str(), i)).collect();
    let mut tf = vec![0.0; vocabulary.len()];
    for c in chunks {
        for t in &c.tokens {
            let hit = match index.get(t.as_str()) {
                Some(&i) => Some(i),
                None if t.chars().any(char::is_uppercase) => index.get(t.to_lowercase().as_str()).copied(),
                None => None,
            };
            if let Some(i) = hit {
                tf[i] += 1.0;
            }
        }
    }
    vocabulary.iter().cloned().zip(tf).collect()
}

fn check_same_vocabulary(p: &UnigramLM, q: &UnigramLM) -> Result<()> {
    if p.vocabulary != q.vocabulary {
        return Err(Error::LanguageModel(
            "language models have different vocabularies".into(),
        ));
    }
    Ok(())
}

/// Jensen-Shannon divergence in bits.
pub fn js_divergence(p: &UnigramLM, q: &UnigramLM) -> Result<f64> {
    check_same_vocabulary(p, q)?;
    Ok(jsd(&p.probabilities, &q.probabilities))
}

pub(crate) fn jsd(p: &[f64], q: &[f64]) -> f64 {
    let half_kl = |a: f64, m: f64| if a > 0.0 { 0.5 * a * (a / m).log2() } else { 0.0 };
    let d: f64 = p
        .iter()
        .zip(q)
        .map(|(&a, &b)| {
            let m = 0.5 * (a + b);
            half_kl(a, m) + half_kl(b, m)
        })
        .sum();
    d.clamp(0.0, 1.0)
}

/// Square root of the Jensen-Shannon divergence; a metric with values in [0, 1].
pub fn js_distance(p: &UnigramLM, q: &UnigramLM) -> Result<f64> {
    js_divergence(p, q).map(f64::sqrt)
}

/// The four distances behind a labeling and its outcome.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabelDecision {
    pub d_o_c1: f64,
    pub d_t_c1: f64,
    pub d_o_c2: f64,
    pub d_t_c2: f64,
    pub alpha: f64,
    pub labels: (Label, Label),
}

/// Labels C1 as O iff `D(O,C1)·D(T,C2) < α·D(O,C2)·D(T,C1)`; C2 gets the
/// complement. Equality labels C1 as T.
pub fn assign_labels(
    c1: &UnigramLM,
    c2: &UnigramLM,
    p_o: &UnigramLM,
    p_t: &UnigramLM,
    alpha: f64,
) -> Result<LabelDecision> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::Config(format!("alpha must be positive, got {alpha}")));
    }
    let d_o_c1 = js_distance(p_o, c1)?;
    let d_t_c1 = js_distance(p_t, c1)?;
    let d_o_c2 = js_distance(p_o, c2)?;
    let d_t_c2 = js_distance(p_t, c2)?;
    let first = if d_o_c1 * d_t_c2 < alpha * d_o_c2 * d_t_c1 {
        Label::O
    } else {
        Label::T
    };
    Ok(LabelDecision {
        d_o_c1,
        d_t_c1,
        d_o_c2,
        d_t_c2,
        alpha,
        labels: (first, first.complement()),
    })
}

/// How prototype texts realise the marker sets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Prototype {
    /// Every marker occurs exactly once.
    #[default]
    Uniform,
    /// Markers occur in proportion to their reference frequency, with the
    /// same total mass as the uniform prototype.
    FrequencyWeighted,
}

impl FromStr for Prototype {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(Prototype::Uniform),
            "frequency-weighted" => Ok(Prototype::FrequencyWeighted),
            _ => Err(Error::Config(format!("unknown prototype mode `{s}`"))),
        }
    }
}

/// Marker sets plus the labeling parameters.
#[derive(Debug, Clone)]
pub struct Labeler {
    pub markers: MarkerSets,
    pub alpha: f64,
    pub epsilon: f64,
    pub prototype: Prototype,
    vocabulary: Vec<String>,
    p_o: UnigramLM,
    p_t: UnigramLM,
}

impl Labeler {
    pub fn new(markers: MarkerSets, alpha: f64, epsilon: f64, prototype: Prototype) -> Result<Labeler> {
        markers.validate(None)?;
        let vocabulary = markers.vocabulary();
        let proto = |side: &[String]| -> Result<UnigramLM> {
            let counts: HashMap<String, f64> = match prototype {
                Prototype::Uniform => side.iter().map(|w| (w.clone(), 1.0)).collect(),
                Prototype::FrequencyWeighted => {
                    let w: Vec<f64> = side
                        .iter()
                        .map(|m| markers.weights.get(m).copied().unwrap_or(0.0))
                        .collect();
                    let total: f64 = w.iter().sum();
                    if total <= 0.0 {
                        return Err(Error::LanguageModel(
                            "frequency-weighted prototype needs marker weights".into(),
                        ));
                    }
                    let scale = side.len() as f64 / total;
                    side.iter().cloned().zip(w.into_iter().map(|x| x * scale)).collect()
                }
            };
            unigram_lm(&counts, &vocabulary, epsilon)
        };
        let p_o = proto(&markers.o_markers)?;
        let p_t = proto(&markers.t_markers)?;
        Ok(Labeler {
            markers,
            alpha,
            epsilon,
            prototype,
            vocabulary,
            p_o,
            p_t,
        })
    }

    /// Default α, ε and uniform prototypes.
    pub fn with_defaults(markers: MarkerSets) -> Result<Labeler> {
        Labeler::new(markers, DEFAULT_ALPHA, DEFAULT_EPSILON, Prototype::Uniform)
    }

    pub fn prototypes(&self) -> (&UnigramLM, &UnigramLM) {
        (&self.p_o, &self.p_t)
    }

    pub fn cluster_lm<'a>(&self, chunks: impl IntoIterator<Item = &'a Chunk>) -> Result<UnigramLM> {
        unigram_lm(&term_counts(chunks, &self.vocabulary), &self.vocabulary, self.epsilon)
    }

    /// Labels two groups of chunks.
    pub fn decide<'a>(
        &self,
        c1: impl IntoIterator<Item = &'a Chunk>,
        c2: impl IntoIterator<Item = &'a Chunk>,
    ) -> Result<LabelDecision> {
        let c1 = self.cluster_lm(c1)?;
        let c2 = self.cluster_lm(c2)?;
        assign_labels(&c1, &c2, &self.p_o, &self.p_t, self.alpha)
    }

    /// Label of the prototype closer to the group's model; ties go to T.
    pub fn nearest_prototype<'a>(&self, chunks: impl IntoIterator<Item = &'a Chunk>) -> Result<Label> {
        let lm = self.cluster_lm(chunks)?;
        let d_o = js_distance(&self.p_o, &lm)?;
        let d_t = js_distance(&self.p_t, &lm)?;
        Ok(if d_o < d_t { Label::O } else { Label::T })
    }

    /// Labels every row of a two-cluster run.
    pub fn label_run(&self, run: &ClusteringRun, chunks: &ChunkSet) -> Result<ClusterLabeling> {
        if run.k != 2 {
            return Err(Error::Arity(run.k));
        }
        if run.assignments.len() != chunks.len() {
            return Err(Error::DimensionMismatch {
                expected: chunks.len(),
                actual: run.assignments.len(),
            });
        }
        let members = run.members();
        let pick = |c: usize| members[c].iter().map(|&i| &chunks.chunks[i]);
        let decision = self.decide(pick(0), pick(1))?;
        let cluster_labels = [decision.labels.0, decision.labels.1];
        Ok(ClusterLabeling {
            decision,
            labels: run.assignments.iter().map(|&c| cluster_labels[c]).collect(),
        })
    }
}

/// Outcome of labeling a two-cluster run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterLabeling {
    pub decision: LabelDecision,
    /// Label of every chunk, in row order.
    pub labels: Vec<Label>,
}

/// Labels every chunk of a two-cluster run with default ε and uniform prototypes.
pub fn label_clusters(
    run: &ClusteringRun,
    chunks: &ChunkSet,
    markers: &MarkerSets,
    alpha: f64,
) -> Result<ClusterLabeling> {
    Labeler::new(markers.clone(), alpha, DEFAULT_EPSILON, Prototype::Uniform)?.label_run(run, chunks)
}

/// Fraction of rows whose predicted label equals the gold label.
pub fn label_accuracy(predicted: &[Label], gold: &[Option<Label>]) -> Result<f64> {
    if predicted.len() != gold.len() || predicted.is_empty() {
        return Err(Error::Evaluation(format!(
            "{} predictions for {} gold labels",
            predicted.len(),
            gold.len()
        )));
    }
    let mut correct = 0usize;
    for (row, (p, g)) in predicted.iter().zip(gold).enumerate() {
        match g {
            Some(g) => correct += usize::from(p == g),
            None => return Err(Error::Evaluation(format!("row {row} has no gold label"))),
        }
    }
    Ok(correct as f64 / predicted.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Provenance;
    use crate::seed;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::Rng;

    fn lm(p: &[f64]) -> UnigramLM {
        UnigramLM {
            vocabulary: (0..p.len()).map(|i| format!("w{i}")).collect(),
            probabilities: p.to_vec(),
            epsilon: DEFAULT_EPSILON,
        }
    }

    fn table(entries: &[(&str, f64)]) -> BTreeMap<String, f64> {
        entries.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    fn strings(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn marker_examples() {
        let o = table(&[
            ("the", 0.06),
            ("of", 0.05),
            ("and", 0.045),
            ("zero", 0.0),
            ("only_o", 0.01),
        ]);
        let t = table(&[
            ("the", 0.05),
            ("of", 0.05),
            ("and", 0.05),
            ("zero", 0.0),
            ("only_t", 0.02),
        ]);
        let m = select_markers(&o, &t, 0.05, "fixture").unwrap();
        assert_eq!(m.o_markers, ["only_o", "the"]);
        assert_eq!(m.t_markers, ["and", "only_t"]);
        assert_eq!(m.vocabulary(), ["and", "only_o", "only_t", "the"]);
        let flat = table(&[("of", 0.05)]);
        assert!(matches!(
            select_markers(&flat, &flat, 0.05, ""),
            Err(Error::EmptyMarkers)
        ));
        assert!(select_markers(&o, &t, 0.0, "").is_err());
    }

    #[test]
    fn prototype_example() {
        let m = MarkerSets {
            o_markers: strings(&["a", "b"]),
            t_markers: strings(&["c"]),
            delta: 0.05,
            reference: String::new(),
            weights: BTreeMap::new(),
        };
        let l = Labeler::with_defaults(m).unwrap();
        let (p_o, p_t) = l.prototypes();
        assert_abs_diff_eq!(p_o.probability("a").unwrap(), 1.001 / 2.003, epsilon = 1e-15);
        assert_abs_diff_eq!(p_o.probability("a").unwrap(), 0.499750, epsilon = 5e-7);
        assert_abs_diff_eq!(p_o.probability("c").unwrap(), 0.000499, epsilon = 5e-7);
        assert_abs_diff_eq!(p_t.probability("c").unwrap(), 1.001 / 1.003, epsilon = 1e-15);
    }

    #[test]
    fn lm_properties() {
        let v = strings(&["x", "y", "z"]);
        let zero = unigram_lm(&HashMap::new(), &v, 0.001).unwrap();
        assert!(zero.probabilities.iter().all(|&p| (p - 1.0 / 3.0).abs() < 1e-15));
        let counts: HashMap<String, f64> =
            [("x".to_string(), 3.0), ("y".to_string(), 1.0), ("q".to_string(), 9.0)].into();
        let p = unigram_lm(&counts, &v, 0.001).unwrap();
        assert_abs_diff_eq!(p.probabilities.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p.probabilities[0], 3.001 / 4.003, epsilon = 1e-15);
        // doubling counts is not scale invariant with ε > 0
        let doubled: HashMap<String, f64> = counts.iter().map(|(k, v)| (k.clone(), 2.0 * v)).collect();
        let q = unigram_lm(&doubled, &v, 0.001).unwrap();
        assert_ne!(p.probabilities, q.probabilities);
        assert!(unigram_lm(&counts, &[], 0.001).is_err());
        assert!(unigram_lm(&counts, &v, 0.0).is_err());
    }

    #[test]
    fn js_examples() {
        let a = lm(&[0.5, 0.5]);
        assert_eq!(js_distance(&a, &a).unwrap(), 0.0);
        assert_abs_diff_eq!(
            js_distance(&lm(&[1.0, 0.0]), &lm(&[0.0, 1.0])).unwrap(),
            1.0,
            epsilon = 1e-15
        );
        // independent evaluation: m = (0.75, 0.25)
        let kl_p = 0.5 * (0.5f64 / 0.75).log2() + 0.5 * (0.5f64 / 0.25).log2();
        let kl_q = (1.0f64 / 0.75).log2();
        let expected = 0.5 * kl_p + 0.5 * kl_q;
        let got = js_divergence(&a, &lm(&[1.0, 0.0])).unwrap();
        assert_abs_diff_eq!(got, expected, epsilon = 1e-15);
        assert_abs_diff_eq!(got, 0.311278, epsilon = 5e-7);
        assert_abs_diff_eq!(got.sqrt(), 0.557923, epsilon = 5e-7);
        let mut other = lm(&[0.5, 0.5]);
        other.vocabulary[1] = "zz".into();
        assert!(js_distance(&a, &other).is_err());
    }

    fn random_lm(rng: &mut impl Rng, n: usize) -> UnigramLM {
        let raw: Vec<f64> = (0..n).map(|_| rng.random::<f64>().powi(3)).collect();
        let s: f64 = raw.iter().sum();
        lm(&raw.iter().map(|x| x / s).collect::<Vec<_>>())
    }

    #[test]
    fn js_distance_is_a_metric_on_random_triples() {
        let mut rng = seed::rng(17);
        for _ in 0..100 {
            let n = rng.random_range(2..12);
            let (p, q, r) = (random_lm(&mut rng, n), random_lm(&mut rng, n), random_lm(&mut rng, n));
            let pq = js_distance(&p, &q).unwrap();
            assert_eq!(pq, js_distance(&q, &p).unwrap());
            assert!((0.0..=1.0).contains(&pq));
            assert!(pq <= js_distance(&p, &r).unwrap() + js_distance(&r, &q).unwrap() + 1e-12);
        }
    }

    #[test]
    fn assign_examples() {
        let p_o = lm(&[0.7, 0.2, 0.1]);
        let p_t = lm(&[0.1, 0.3, 0.6]);
        let d = assign_labels(&p_o, &p_t, &p_o, &p_t, 1.0).unwrap();
        assert_eq!(d.labels, (Label::O, Label::T));
        assert_eq!(d.d_o_c1, 0.0);
        let d = assign_labels(&p_t, &p_o, &p_o, &p_t, 1.0).unwrap();
        assert_eq!(d.labels, (Label::T, Label::O));
        let mid = lm(&[0.4, 0.25, 0.35]);
        let d = assign_labels(&mid, &mid, &p_o, &p_t, 1.0).unwrap();
        assert_eq!(d.labels, (Label::T, Label::O));
        assert!(assign_labels(&mid, &mid, &p_o, &p_t, 0.0).is_err());
    }

    proptest! {
        #[test]
        fn assign_is_swap_invariant(s in any::<u64>()) {
            let mut rng = seed::rng(s);
            let lms: Vec<UnigramLM> = (0..4).map(|_| random_lm(&mut rng, 5)).collect();
            let a = assign_labels(&lms[0], &lms[1], &lms[2], &lms[3], 1.0).unwrap();
            let b = assign_labels(&lms[1], &lms[0], &lms[2], &lms[3], 1.0).unwrap();
            prop_assert_eq!(a.labels.0, a.labels.1.complement());
            let lhs = a.d_o_c1 * a.d_t_c2;
            let rhs = a.d_o_c2 * a.d_t_c1;
            // exact ties resolve to T for whichever cluster comes first
            if lhs != rhs {
                prop_assert_eq!(a.labels, (b.labels.1, b.labels.0));
            }
        }

        #[test]
        fn larger_delta_gives_subsets(
            pairs in prop::collection::vec((0.0f64..0.1, 0.0f64..0.1), 1..40),
            d1 in 0.01f64..0.5,
            extra in 0.0f64..0.5,
        ) {
            let o: BTreeMap<String, f64> = pairs.iter().enumerate().map(|(i, p)| (format!("w{i}"), p.0)).collect();
            let t: BTreeMap<String, f64> = pairs.iter().enumerate().map(|(i, p)| (format!("w{i}"), p.1)).collect();
            let small = select_markers(&o, &t, d1, "");
            let large = select_markers(&o, &t, d1 + extra, "");
            if let Ok(large) = large {
                let small = small.unwrap();
                prop_assert!(large.o_markers.iter().all(|w| small.o_markers.contains(w)));
                prop_assert!(large.t_markers.iter().all(|w| small.t_markers.contains(w)));
                prop_assert!(large.o_markers.iter().all(|w| !large.t_markers.contains(w)));
            }
        }
    }

    fn chunk(id: usize, tokens: Vec<String>, label: Label) -> Chunk {
        Chunk {
            id: format!("c{id}"),
            source_doc_ids: vec![],
            token_count: tokens.len(),
            tokens,
            pos: None,
            label: Some(label),
            domain: None,
        }
    }

    fn set(chunks: Vec<Chunk>) -> ChunkSet {
        ChunkSet {
            chunks,
            target_size: 2000,
            provenance: Provenance::default(),
        }
    }

    fn run(assignments: Vec<usize>) -> ClusteringRun {
        ClusteringRun {
            k: 2,
            assignments,
            centroids: vec![vec![], vec![]],
            sse_per_cluster: vec![0.0; 2],
            total_sse: 0.0,
            seed: 0,
            iterations_used: 1,
            sse_trace: vec![],
        }
    }

    #[test]
    fn pure_marker_clusters() {
        let m = MarkerSets {
            o_markers: strings(&["a", "b"]),
            t_markers: strings(&["c", "d"]),
            delta: 0.05,
            reference: String::new(),
            weights: BTreeMap::new(),
        };
        let cs = set(vec![
            chunk(0, strings(&["a", "b", "a"]), Label::O),
            chunk(1, strings(&["c", "d", "D"]), Label::T),
            chunk(2, strings(&["B", "a"]), Label::O),
        ]);
        let out = label_clusters(&run(vec![0, 1, 0]), &cs, &m, 1.0).unwrap();
        assert_eq!(out.labels, [Label::O, Label::T, Label::O]);
        let swapped = label_clusters(&run(vec![1, 0, 1]), &cs, &m, 1.0).unwrap();
        assert_eq!(swapped.labels, out.labels);
        assert_eq!(swapped.decision.labels, (Label::T, Label::O));
        let three = ClusteringRun {
            k: 3,
            ..run(vec![0, 1, 2])
        };
        assert!(matches!(label_clusters(&three, &cs, &m, 1.0), Err(Error::Arity(3))));
        let l = Labeler::with_defaults(m).unwrap();
        assert_eq!(l.nearest_prototype([&cs.chunks[1]]).unwrap(), Label::T);
        assert_eq!(l.nearest_prototype([&cs.chunks[0]]).unwrap(), Label::O);
    }

    /// Samples `n` tokens from 40 words where words 0..6 are 1.3 times more
    /// likely under O and words 6..12 are 1.3 times more likely under T.
    fn sample(rng: &mut impl Rng, label: Label, n: usize) -> Vec<String> {
        let weights: Vec<f64> = (0..40)
            .map(|i| {
                let base = 1.0 / (i as f64 + 1.0);
                match (i, label) {
                    (0..6, Label::O) | (6..12, Label::T) => base * 1.3,
                    _ => base,
                }
            })
            .collect();
        let total: f64 = weights.iter().sum();
        (0..n)
            .map(|_| {
                let mut u = rng.random::<f64>() * total;
                let mut pick = weights.len() - 1;
                for (i, w) in weights.iter().enumerate() {
                    if u < *w {
                        pick = i;
                        break;
                    }
                    u -= w;
                }
                format!("w{pick}")
            })
            .collect()
    }

    #[test]
    fn oversampled_markers_recover_gold() {
        let fw = WordList::new((0..40).map(|i| format!("w{i}")));
        for s in 0..20u64 {
            let mut rng = seed::rng(seed::derive_seed(99, s));
            let reference = set((0..20)
                .map(|i| {
                    let label = if i % 2 == 0 { Label::O } else { Label::T };
                    chunk(i, sample(&mut rng, label, 2000), label)
                })
                .collect());
            let freq = reference_frequencies(&reference, &fw, "held-out").unwrap();
            let markers = select_markers(&freq.o, &freq.t, DEFAULT_DELTA, &freq.source).unwrap();
            markers.validate(Some(&fw)).unwrap();
            let data = set((0..20)
                .map(|i| {
                    let label = if i < 10 { Label::O } else { Label::T };
                    chunk(i, sample(&mut rng, label, 2000), label)
                })
                .collect());
            // cluster index opposite to gold order, so the labeler must not rely on it
            let r = run((0..20).map(|i| usize::from(i < 10)).collect());
            let out = label_clusters(&r, &data, &markers, 1.0).unwrap();
            assert_eq!(label_accuracy(&out.labels, &data.gold()).unwrap(), 1.0, "seed {s}");
        }
    }

    #[test]
    fn frequency_weighted_prototype_keeps_mass() {
        let o = table(&[("a", 0.03), ("b", 0.01), ("c", 0.01)]);
        let t = table(&[("a", 0.01), ("b", 0.005), ("c", 0.02)]);
        let m = select_markers(&o, &t, 0.05, "").unwrap();
        let l = Labeler::new(m, 1.0, 0.001, Prototype::FrequencyWeighted).unwrap();
        let (p_o, _) = l.prototypes();
        // weights 0.03 and 0.01 rescaled to total 2
        assert_abs_diff_eq!(p_o.probability("a").unwrap(), 1.501 / 2.003, epsilon = 1e-12);
        assert_eq!(
            "frequency-weighted".parse::<Prototype>().unwrap(),
            Prototype::FrequencyWeighted
        );
    }
}
