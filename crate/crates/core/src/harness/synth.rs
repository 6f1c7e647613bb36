//! Synthetic labeled corpora with controllable O/T and domain signal.
//!
//! Tokens are drawn from three pools: function words (shared by all domains),
//! generic content words, and per-domain topic words. Originals over-use a
//! fixed subset of function words by `shift_ratio` relative to translations;
//! all other function words are scaled down to keep the function-word mass
//! constant. Each domain reweights the function-word distribution with its
//! own log-normal factors.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{make_chunks_by_group, ChunkSet, Document, Label, Provenance};
use crate::error::{Error, Result};
use crate::features::WordList;
use crate::seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSpec {
    pub name: String,
    pub topic_vocab_size: usize,
    /// Share of tokens drawn from the domain's topic vocabulary.
    pub topic_mass: f64,
    /// Standard deviation of the log-normal factors that reshape the
    /// function-word distribution of this domain.
    #[serde(default = "default_fw_skew")]
    pub fw_skew: f64,
    /// Factor on the base frequency of the shifted function words in both
    /// classes of this domain. Values away from 1 make the domain's style
    /// resemble one class.
    #[serde(default = "default_marker_bias")]
    pub marker_bias: f64,
}

fn default_fw_skew() -> f64 {
    0.5
}

fn default_marker_bias() -> f64 {
    1.0
}

impl DomainSpec {
    pub fn new(name: &str, topic_vocab_size: usize, topic_mass: f64) -> Self {
        DomainSpec {
            name: name.to_string(),
            topic_vocab_size,
            topic_mass,
            fw_skew: default_fw_skew(),
            marker_bias: default_marker_bias(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticSpec {
    /// Chunks of each class in each domain.
    pub n_chunks_per_class: usize,
    pub chunk_size: usize,
    pub fw_vocab_size: usize,
    pub shifted_fw_count: usize,
    pub shift_ratio: f64,
    pub domains: Vec<DomainSpec>,
    pub seed: u64,
    /// Share of non-topic tokens that are function words.
    pub fw_share: f64,
    pub content_vocab_size: usize,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            n_chunks_per_class: 200,
            chunk_size: 2000,
            fw_vocab_size: 300,
            shifted_fw_count: 30,
            shift_ratio: 1.3,
            domains: vec![DomainSpec::new("general", 200, 0.1)],
            seed: 0,
            fw_share: 0.6,
            content_vocab_size: 3000,
        }
    }
}

const FW_TAGS: [&str; 10] = ["DT", "IN", "PRP", "CC", "MD", "TO", "WDT", "EX", "RP", "PDT"];
const SYLLABLES: [&str; 16] = [
    "ka", "lo", "mi", "ne", "ru", "ta", "vo", "pe", "si", "du", "ga", "ri", "zo", "be", "fa", "hu",
];
/// Sampling stream of the held-out reference sample.
const REFERENCE_STREAM: u64 = 0x5245_4645_5245_4e43;

/// Pseudo-word for `index`: base-16 digits spelled as syllables, at least three.
fn pseudo_word(index: usize) -> String {
    let mut n = index + 256;
    let mut parts = Vec::new();
    while n > 0 {
        parts.push(SYLLABLES[n % 16]);
        n /= 16;
    }
    parts.reverse();
    parts.concat()
}

fn content_tag(index: usize) -> &'static str {
    match index % 20 {
        0..9 => "NN",
        9..14 => "VB",
        14..18 => "JJ",
        _ => "RB",
    }
}

fn zipf(n: usize) -> Vec<f64> {
    let raw: Vec<f64> = (1..=n).map(|r| 1.0 / r as f64).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / total).collect()
}

/// Standard normal sample (Box-Muller).
fn normal(rng: &mut impl Rng) -> f64 {
    let u: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
    let v: f64 = rng.random();
    (-2.0 * u.ln()).sqrt() * (std::f64::consts::TAU * v).cos()
}

/// Seed-dependent structure shared by every sample drawn from one spec.
#[derive(Debug, Clone)]
pub struct SyntheticModel {
    pub spec: SyntheticSpec,
    pub function_words: Vec<String>,
    /// Indices into `function_words` whose O frequency is shifted.
    pub shifted: Vec<usize>,
    /// Per domain, per class (O then T), function-word distribution.
    pub fw_distributions: Vec<[Vec<f64>; 2]>,
    content_words: Vec<String>,
    topic_words: Vec<Vec<String>>,
}

impl SyntheticModel {
    pub fn new(spec: &SyntheticSpec, fw: &WordList) -> Result<SyntheticModel> {
        let fail = |m: String| Err(Error::Synthetic(m));
        if spec.n_chunks_per_class < 1 || spec.chunk_size < 1 {
            return fail("n_chunks_per_class and chunk_size must be at least 1".into());
        }
        if !(spec.shift_ratio >= 1.0 && spec.shift_ratio.is_finite()) {
            return fail(format!("shift_ratio must be at least 1, got {}", spec.shift_ratio));
        }
        if !(spec.fw_share > 0.0 && spec.fw_share < 1.0) {
            return fail(format!("fw_share must lie in (0, 1), got {}", spec.fw_share));
        }
        if spec.domains.is_empty() {
            return fail("at least one domain is required".into());
        }
        let single: Vec<String> = fw.entries().iter().filter(|e| !e.contains(' ')).cloned().collect();
        if spec.fw_vocab_size < 1 || spec.fw_vocab_size > single.len() {
            return fail(format!(
                "fw_vocab_size must lie in 1..={} (single-word function words available)",
                single.len()
            ));
        }
        if spec.shifted_fw_count > spec.fw_vocab_size {
            return fail("shifted_fw_count exceeds fw_vocab_size".into());
        }
        let mut names: Vec<&str> = spec.domains.iter().map(|d| d.name.as_str()).collect();
        names.sort();
        names.dedup();
        if names.len() != spec.domains.len() {
            return fail("domain names must be distinct".into());
        }
        for d in &spec.domains {
            if !(0.0..1.0).contains(&d.topic_mass) || d.fw_skew.is_nan() || d.fw_skew < 0.0 {
                return fail(format!(
                    "domain {}: topic_mass must lie in [0, 1) and fw_skew be non-negative",
                    d.name
                ));
            }
            if !(d.marker_bias > 0.0 && d.marker_bias.is_finite()) {
                return fail(format!("domain {}: marker_bias must be positive", d.name));
            }
            if d.topic_mass > 0.0 && d.topic_vocab_size == 0 {
                return fail(format!("domain {}: topic_mass needs a topic vocabulary", d.name));
            }
        }

        let mut rng = seed::rng(seed::derive_seed(spec.seed, u64::MAX));
        let function_words: Vec<String> = single[..spec.fw_vocab_size].to_vec();
        let v = spec.fw_vocab_size;
        // rank of each word in the base Zipf distribution
        let mut rank: Vec<usize> = (0..v).collect();
        rank.shuffle(&mut rng);
        let by_rank = {
            let mut inv = vec![0; v];
            for (word, &r) in rank.iter().enumerate() {
                inv[r] = word;
            }
            inv
        };
        let shifted: Vec<usize> = (0..spec.shifted_fw_count)
            .map(|i| by_rank[i * v / spec.shifted_fw_count.max(1)])
            .collect();
        let z = zipf(v);
        let base: Vec<f64> = (0..v).map(|w| z[rank[w]]).collect();

        let mut is_shifted = vec![false; v];
        shifted.iter().for_each(|&w| is_shifted[w] = true);
        let mut fw_distributions = Vec::new();
        for d in &spec.domains {
            // the skew reshapes the unshifted words only; the shifted ones
            // move together by marker_bias
            let mut q: Vec<f64> = base.iter().map(|&p| p * (d.fw_skew * normal(&mut rng)).exp()).collect();
            for (w, p) in q.iter_mut().enumerate() {
                if is_shifted[w] {
                    *p = base[w] * d.marker_bias;
                }
            }
            let total: f64 = q.iter().sum();
            q.iter_mut().for_each(|p| *p /= total);
            let s_mass: f64 = shifted.iter().map(|&w| q[w]).sum();
            if spec.shift_ratio * s_mass >= 1.0 {
                return fail(format!(
                    "domain {}: shifted words hold {:.3} of the mass, too much for ratio {}",
                    d.name, s_mass, spec.shift_ratio
                ));
            }
            let rest = (1.0 - spec.shift_ratio * s_mass) / (1.0 - s_mass);
            let mut o: Vec<f64> = q.iter().map(|p| p * rest).collect();
            for &w in &shifted {
                o[w] = q[w] * spec.shift_ratio;
            }
            fw_distributions.push([o, q]);
        }

        let avoid = |w: String| if fw.contains(&w) { format!("{w}n") } else { w };
        let content_words = (0..spec.content_vocab_size).map(|i| avoid(pseudo_word(i))).collect();
        let mut offset = spec.content_vocab_size;
        let topic_words = spec
            .domains
            .iter()
            .map(|d| {
                let words = (offset..offset + d.topic_vocab_size)
                    .map(|i| avoid(pseudo_word(i)))
                    .collect();
                offset += d.topic_vocab_size;
                words
            })
            .collect();
        Ok(SyntheticModel {
            spec: spec.clone(),
            function_words,
            shifted,
            fw_distributions,
            content_words,
            topic_words,
        })
    }

    /// One document per (domain, class) with enough tokens for
    /// `n_chunks_per_class` chunks, sampled from stream `sample_seed`.
    pub fn documents(&self, sample_seed: u64) -> Result<Vec<Document>> {
        let spec = &self.spec;
        let groups: Vec<(usize, Label)> = (0..spec.domains.len())
            .flat_map(|d| [(d, Label::O), (d, Label::T)])
            .collect();
        let target = (spec.n_chunks_per_class + 2) * spec.chunk_size;
        let content_dist =
            WeightedIndex::new(zipf(self.content_words.len().max(1))).map_err(|e| Error::Synthetic(e.to_string()))?;
        groups
            .par_iter()
            .enumerate()
            .map(|(g, &(d, label))| {
                let domain = &spec.domains[d];
                let mut rng = seed::rng(seed::derive_seed(sample_seed, g as u64));
                let fw_dist = WeightedIndex::new(&self.fw_distributions[d][usize::from(label == Label::T)])
                    .map_err(|e| Error::Synthetic(e.to_string()))?;
                let topic_dist = (domain.topic_vocab_size > 0)
                    .then(|| WeightedIndex::new(zipf(domain.topic_vocab_size)))
                    .transpose()
                    .map_err(|e| Error::Synthetic(e.to_string()))?;
                let mut tokens = Vec::with_capacity(target + 32);
                let mut pos = Vec::with_capacity(target + 32);
                while tokens.len() < target {
                    let len = rng.random_range(8..=30);
                    for i in 0..len - 1 {
                        let (mut word, tag) = match (&topic_dist, rng.random::<f64>()) {
                            (Some(td), u) if u < domain.topic_mass => {
                                (self.topic_words[d][td.sample(&mut rng)].clone(), "NN")
                            }
                            _ if rng.random::<f64>() < spec.fw_share || self.content_words.is_empty() => {
                                let w = fw_dist.sample(&mut rng);
                                (self.function_words[w].clone(), FW_TAGS[w % FW_TAGS.len()])
                            }
                            _ => {
                                let w = content_dist.sample(&mut rng);
                                (self.content_words[w].clone(), content_tag(w))
                            }
                        };
                        if i == 0 {
                            word = capitalize(&word);
                        }
                        tokens.push(word);
                        pos.push(tag.to_string());
                    }
                    tokens.push(".".to_string());
                    pos.push(".".to_string());
                }
                Ok(Document {
                    id: format!("{}-{}", domain.name, label),
                    text: None,
                    tokens: Some(tokens),
                    pos: Some(pos),
                    label: Some(label),
                    domain: Some(domain.name.clone()),
                })
            })
            .collect()
    }

    /// Chunks `docs` at the spec's chunk size, keeping the first
    /// `n_chunks_per_class` chunks of every (domain, class) group.
    pub fn chunk(&self, docs: &[Document], sample_seed: u64) -> Result<ChunkSet> {
        let all = make_chunks_by_group(docs, self.spec.chunk_size)?;
        let mut kept = Vec::new();
        let mut taken = std::collections::HashMap::new();
        for c in all.chunks {
            let n = taken.entry((c.label, c.domain.clone())).or_insert(0usize);
            if *n < self.spec.n_chunks_per_class {
                *n += 1;
                kept.push(c);
            }
        }
        if taken.len() != docs.len() || taken.values().any(|&n| n < self.spec.n_chunks_per_class) {
            return Err(Error::Synthetic("generated documents are too short".into()));
        }
        for (i, c) in kept.iter_mut().enumerate() {
            c.id = format!("chunk-{i:06}");
        }
        Ok(ChunkSet {
            chunks: kept,
            target_size: self.spec.chunk_size,
            provenance: Provenance {
                seed: Some(sample_seed),
                config_hash: spec_hash(&self.spec),
            },
        })
    }

    /// Chunk set drawn from the spec's own seed.
    pub fn sample(&self) -> Result<ChunkSet> {
        let docs = self.documents(self.spec.seed)?;
        self.chunk(&docs, self.spec.seed)
    }

    /// Held-out sample with the same structure and fresh sampling noise.
    pub fn reference_sample(&self) -> Result<ChunkSet> {
        let s = seed::derive_seed(self.spec.seed, REFERENCE_STREAM);
        let docs = self.documents(s)?;
        self.chunk(&docs, s)
    }
}

fn capitalize(word: &str) -> String {
    let mut chars = word.chars();
    match chars.next() {
        Some(first) => first.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

pub fn spec_hash(spec: &SyntheticSpec) -> String {
    seed::content_hash(&serde_json::to_vec(spec).expect("spec serializes"))
}

/// Documents of a spec, one per (domain, class) group.
pub fn gen_synthetic_documents(spec: &SyntheticSpec, fw: &WordList) -> Result<Vec<Document>> {
    SyntheticModel::new(spec, fw)?.documents(spec.seed)
}

/// Gold-labeled, domain-tagged chunk set of a spec.
pub fn gen_synthetic(spec: &SyntheticSpec, fw: &WordList) -> Result<ChunkSet> {
    SyntheticModel::new(spec, fw)?.sample()
}
