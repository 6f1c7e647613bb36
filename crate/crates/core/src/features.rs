//! Feature extraction for the five feature families, vocabulary building and
//! tf / tf-idf matrices.
//!
//! * `FW`: counts of listed function words.
//! * `CHAR3`: character trigrams of the space-joined token stream.
//! * `POS3`: part-of-speech trigrams.
//! * `CFW`: token trigrams where non-function words are replaced by their POS
//!   tag, kept only when at least two elements are function words.
//! * `COH`: cohesive markers, possibly multi-word.

use std::borrow::Cow;
use std::collections::HashMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{Chunk, ChunkSet};
use crate::error::{Error, Result};

/// Environment variable naming a directory with `function_words.txt` and
/// `cohesive_markers.txt` overriding the bundled lists.
pub const RESOURCE_DIR_ENV: &str = "TRANSLATIONESE_RESOURCES";

/// Default cap on n-gram vocabularies.
pub const DEFAULT_CAP: usize = 1000;

const DEFAULT_FUNCTION_WORDS: &str = include_str!("../resources/function_words.txt");
const DEFAULT_COHESIVE_MARKERS: &str = include_str!("../resources/cohesive_markers.txt");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SchemeKind {
    FW,
    CHAR3,
    POS3,
    CFW,
    COH,
}

impl SchemeKind {
    pub const ALL: [SchemeKind; 5] = [
        SchemeKind::FW,
        SchemeKind::CHAR3,
        SchemeKind::POS3,
        SchemeKind::CFW,
        SchemeKind::COH,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SchemeKind::FW => "FW",
            SchemeKind::CHAR3 => "CHAR3",
            SchemeKind::POS3 => "POS3",
            SchemeKind::CFW => "CFW",
            SchemeKind::COH => "COH",
        }
    }

    pub fn needs_pos(self) -> bool {
        matches!(self, SchemeKind::POS3 | SchemeKind::CFW)
    }

    /// List-based schemes use the resource list verbatim as vocabulary.
    pub fn is_list_based(self) -> bool {
        matches!(self, SchemeKind::FW | SchemeKind::COH)
    }
}

impl fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SchemeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SchemeKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Config(format!("unknown feature scheme `{s}`")))
    }
}

/// A lowercase word or phrase list loaded from a resource file.
#[derive(Debug, Clone, PartialEq)]
pub struct WordList {
    entries: Vec<String>,
    index: HashMap<String, usize>,
    /// entry indices keyed by first word, longest phrase first
    by_first: HashMap<String, Vec<usize>>,
    words: Vec<Vec<String>>,
}

impl WordList {
    pub fn new<I, S>(entries: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut list = Vec::new();
        let mut index = HashMap::new();
        for e in entries {
            let e = e
                .as_ref()
                .split_whitespace()
                .collect::<Vec<_>>()
                .join(" ")
                .to_lowercase();
            if e.is_empty() || index.contains_key(&e) {
                continue;
            }
            index.insert(e.clone(), list.len());
            list.push(e);
        }
        let words: Vec<Vec<String>> = list
            .iter()
            .map(|e| e.split(' ').map(str::to_string).collect())
            .collect();
        let mut by_first: HashMap<String, Vec<usize>> = HashMap::new();
        for (i, w) in words.iter().enumerate() {
            by_first.entry(w[0].clone()).or_default().push(i);
        }
        for v in by_first.values_mut() {
            v.sort_by(|&a, &b| words[b].len().cmp(&words[a].len()).then(a.cmp(&b)));
        }
        WordList {
            entries: list,
            index,
            by_first,
            words,
        }
    }

    /// Parses resource text: one entry per line, `#` starts a comment line.
    pub fn parse(text: &str) -> Self {
        WordList::new(
            text.lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#')),
        )
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(WordList::parse(&text))
    }

    pub fn entries(&self) -> &[String] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, word: &str) -> bool {
        self.index.contains_key(lower(word).as_ref())
    }

    pub fn position(&self, word: &str) -> Option<usize> {
        self.index.get(lower(word).as_ref()).copied()
    }
}

/// The function-word and cohesive-marker lists.
#[derive(Debug, Clone)]
pub struct Resources {
    pub function_words: Arc<WordList>,
    pub cohesive_markers: Arc<WordList>,
}

impl Resources {
    pub fn bundled() -> Self {
        Resources {
            function_words: Arc::new(WordList::parse(DEFAULT_FUNCTION_WORDS)),
            cohesive_markers: Arc::new(WordList::parse(DEFAULT_COHESIVE_MARKERS)),
        }
    }

    /// Loads `function_words.txt` / `cohesive_markers.txt` from `dir`, falling
    /// back to the bundled list for any file that is absent.
    pub fn from_dir(dir: &Path) -> Result<Self> {
        let mut r = Resources::bundled();
        let fw = dir.join("function_words.txt");
        if fw.exists() {
            r.function_words = Arc::new(WordList::load(&fw)?);
        }
        let coh = dir.join("cohesive_markers.txt");
        if coh.exists() {
            r.cohesive_markers = Arc::new(WordList::load(&coh)?);
        }
        Ok(r)
    }

    /// Resources from [`RESOURCE_DIR_ENV`] when set, bundled lists otherwise.
    pub fn from_env() -> Result<Self> {
        match std::env::var_os(RESOURCE_DIR_ENV) {
            Some(dir) => Resources::from_dir(Path::new(&dir)),
            None => Ok(Resources::bundled()),
        }
    }
}

/// A feature family together with the resource lists it needs.
#[derive(Debug, Clone)]
pub struct FeatureScheme {
    pub kind: SchemeKind,
    pub function_words: Option<Arc<WordList>>,
    pub cohesive_markers: Option<Arc<WordList>>,
}

impl FeatureScheme {
    pub fn new(kind: SchemeKind, resources: &Resources) -> Self {
        FeatureScheme {
            kind,
            function_words: matches!(kind, SchemeKind::FW | SchemeKind::CFW).then(|| resources.function_words.clone()),
            cohesive_markers: (kind == SchemeKind::COH).then(|| resources.cohesive_markers.clone()),
        }
    }

    fn function_words(&self) -> Result<&WordList> {
        self.function_words
            .as_deref()
            .ok_or(Error::MissingResource(self.kind.name()))
    }

    fn cohesive_markers(&self) -> Result<&WordList> {
        self.cohesive_markers
            .as_deref()
            .ok_or(Error::MissingResource(self.kind.name()))
    }

    /// Checks that the scheme's resources are present and that `chunk` has the
    /// annotations the scheme needs.
    pub fn check(&self, chunk: &Chunk) -> Result<()> {
        match self.kind {
            SchemeKind::FW | SchemeKind::CFW => {
                self.function_words()?;
            }
            SchemeKind::COH => {
                self.cohesive_markers()?;
            }
            _ => {}
        }
        if self.kind.needs_pos() && chunk.pos.is_none() {
            return Err(Error::MissingAnnotation(chunk.id.clone()));
        }
        Ok(())
    }
}

/// Term counts of one chunk.
pub type Counts = HashMap<String, usize>;

fn lower(s: &str) -> Cow<'_, str> {
    if s.chars().any(char::is_uppercase) {
        Cow::Owned(s.to_lowercase())
    } else {
        Cow::Borrowed(s)
    }
}

/// Extracts the raw feature counts of `chunk` under `scheme`.
pub fn extract(chunk: &Chunk, scheme: &FeatureScheme) -> Result<Counts> {
    scheme.check(chunk)?;
    let mut counts = Counts::new();
    match scheme.kind {
        SchemeKind::FW => {
            let fw = scheme.function_words()?;
            for t in &chunk.tokens {
                if let Some(i) = fw.position(t) {
                    *counts.entry(fw.entries[i].clone()).or_default() += 1;
                }
            }
        }
        SchemeKind::CHAR3 => {
            let joined = chunk.tokens.join(" ");
            let bounds: Vec<usize> = joined
                .char_indices()
                .map(|(i, _)| i)
                .chain(std::iter::once(joined.len()))
                .collect();
            let mut borrowed: HashMap<&str, usize> = HashMap::new();
            for w in bounds.windows(4) {
                *borrowed.entry(&joined[w[0]..w[3]]).or_default() += 1;
            }
            counts.extend(borrowed.into_iter().map(|(k, v)| (k.to_string(), v)));
        }
        SchemeKind::POS3 => {
            let pos = chunk.pos.as_ref().expect("checked");
            for w in pos.windows(3) {
                *counts.entry(w.join(" ")).or_default() += 1;
            }
        }
        SchemeKind::CFW => {
            let fw = scheme.function_words()?;
            let pos = chunk.pos.as_ref().expect("checked");
            let elements: Vec<(bool, Cow<'_, str>)> = chunk
                .tokens
                .iter()
                .zip(pos)
                .map(|(tok, tag)| match fw.position(tok) {
                    Some(i) => (true, Cow::Borrowed(fw.entries[i].as_str())),
                    None => (false, Cow::Borrowed(tag.as_str())),
                })
                .collect();
            for w in elements.windows(3) {
                if w.iter().filter(|(is_fw, _)| *is_fw).count() >= 2 {
                    let key = format!("{} {} {}", w[0].1, w[1].1, w[2].1);
                    *counts.entry(key).or_default() += 1;
                }
            }
        }
        SchemeKind::COH => {
            let markers = scheme.cohesive_markers()?;
            let lowered: Vec<Cow<'_, str>> = chunk.tokens.iter().map(|t| lower(t)).collect();
            let mut i = 0;
            while i < lowered.len() {
                let hit = markers.by_first.get(lowered[i].as_ref()).and_then(|cands| {
                    cands.iter().copied().find(|&m| {
                        let words = &markers.words[m];
                        i + words.len() <= lowered.len()
                            && words.iter().zip(&lowered[i..]).all(|(w, t)| w == t.as_ref())
                    })
                });
                match hit {
                    Some(m) => {
                        *counts.entry(markers.entries[m].clone()).or_default() += 1;
                        i += markers.words[m].len();
                    }
                    None => i += 1,
                }
            }
        }
    }
    Ok(counts)
}

/// Ordered feature vocabulary.
#[derive(Debug, Clone)]
pub struct Vocabulary {
    pub scheme: FeatureScheme,
    pub terms: Vec<String>,
    pub cap: usize,
}

impl Vocabulary {
    pub fn index(&self) -> HashMap<&str, usize> {
        self.terms.iter().enumerate().map(|(i, t)| (t.as_str(), i)).collect()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }
}

/// Builds the vocabulary for `scheme` from corpus-wide aggregated counts.
///
/// List-based schemes return their resource list verbatim. N-gram schemes keep
/// the `cap` most frequent terms, ordered by count descending then
/// lexicographically.
pub fn build_vocabulary(corpus_counts: &Counts, scheme: &FeatureScheme, cap: usize) -> Result<Vocabulary> {
    if cap < 1 {
        return Err(Error::Config("vocabulary cap must be at least 1".into()));
    }
    let terms = match scheme.kind {
        SchemeKind::FW => scheme.function_words()?.entries.clone(),
        SchemeKind::COH => scheme.cohesive_markers()?.entries.clone(),
        _ => {
            if corpus_counts.is_empty() {
                return Err(Error::EmptyVocabulary(scheme.kind.name()));
            }
            let mut ranked: Vec<(&String, &usize)> = corpus_counts.iter().collect();
            ranked.sort_by(|a, b| b.1.cmp(a.1).then_with(|| a.0.cmp(b.0)));
            ranked.into_iter().take(cap).map(|(t, _)| t.clone()).collect()
        }
    };
    Ok(Vocabulary {
        scheme: scheme.clone(),
        terms,
        cap,
    })
}

/// Sums per-chunk counts.
pub fn aggregate<'a>(per_chunk: impl IntoIterator<Item = &'a Counts>) -> Counts {
    let mut total = Counts::new();
    for counts in per_chunk {
        for (t, c) in counts {
            *total.entry(t.clone()).or_default() += c;
        }
    }
    total
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Weighting {
    TF,
    TFIDF,
}

impl FromStr for Weighting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().replace('-', "").as_str() {
            "TF" => Ok(Weighting::TF),
            "TFIDF" => Ok(Weighting::TFIDF),
            _ => Err(Error::Config(format!("unknown weighting `{s}`"))),
        }
    }
}

/// Chunks × vocabulary matrix.
#[derive(Debug, Clone)]
pub struct FeatureMatrix {
    pub chunk_ids: Vec<String>,
    pub vocabulary: Vocabulary,
    pub values: Array2<f64>,
    pub weighting: Weighting,
}

impl FeatureMatrix {
    pub fn rows(&self) -> usize {
        self.values.nrows()
    }

    pub fn select_rows(&self, rows: &[usize]) -> FeatureMatrix {
        FeatureMatrix {
            chunk_ids: rows.iter().map(|&r| self.chunk_ids[r].clone()).collect(),
            vocabulary: self.vocabulary.clone(),
            values: self.values.select(ndarray::Axis(0), rows),
            weighting: self.weighting,
        }
    }

    /// Writes a CSV with a `chunk_id` column followed by one column per term.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        let mut header = vec!["chunk_id".to_string()];
        header.extend(self.vocabulary.terms.iter().cloned());
        w.write_record(&header)?;
        for (id, row) in self.chunk_ids.iter().zip(self.values.rows()) {
            let mut record = vec![id.clone()];
            record.extend(row.iter().map(|v| v.to_string()));
            w.write_record(&record)?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

/// Length-normalized term frequencies from precomputed counts.
pub fn tf_matrix(chunks: &ChunkSet, counts: &[Counts], vocab: &Vocabulary) -> FeatureMatrix {
    let index = vocab.index();
    let mut values = Array2::zeros((chunks.len(), vocab.len()));
    for (i, (chunk, c)) in chunks.chunks.iter().zip(counts).enumerate() {
        let n = chunk.token_count as f64;
        for (term, &count) in c {
            if let Some(&j) = index.get(term.as_str()) {
                values[[i, j]] = count as f64 / n;
            }
        }
    }
    FeatureMatrix {
        chunk_ids: chunks.ids(),
        vocabulary: vocab.clone(),
        values,
        weighting: Weighting::TF,
    }
}

/// Per-chunk counts, extracted in parallel.
pub fn extract_all(chunks: &ChunkSet, scheme: &FeatureScheme) -> Result<Vec<Counts>> {
    chunks.chunks.par_iter().map(|c| extract(c, scheme)).collect()
}

/// Term-frequency matrix of `chunks` over `vocab`.
pub fn vectorize(chunks: &ChunkSet, vocab: &Vocabulary) -> Result<FeatureMatrix> {
    let counts = extract_all(chunks, &vocab.scheme)?;
    Ok(tf_matrix(chunks, &counts, vocab))
}

/// Inverse document frequency factors `ln(1 + N / df)` fitted on one matrix
/// and applicable to another over the same vocabulary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Idf {
    pub factors: Vec<f64>,
}

impl Idf {
    pub fn fit(m: &FeatureMatrix) -> Result<Idf> {
        if m.weighting != Weighting::TF {
            return Err(Error::Config("idf must be fitted on a TF matrix".into()));
        }
        if m.rows() == 0 {
            return Err(Error::InsufficientData("tf-idf needs at least one row".into()));
        }
        let n = m.rows() as f64;
        let factors = m
            .values
            .columns()
            .into_iter()
            .map(|col| {
                let df = col.iter().filter(|&&v| v > 0.0).count();
                if df == 0 {
                    0.0
                } else {
                    (1.0 + n / df as f64).ln()
                }
            })
            .collect();
        Ok(Idf { factors })
    }

    pub fn apply(&self, m: &FeatureMatrix) -> Result<FeatureMatrix> {
        if m.weighting != Weighting::TF {
            return Err(Error::Config("tf-idf applies to TF matrices only".into()));
        }
        if m.values.ncols() != self.factors.len() {
            return Err(Error::DimensionMismatch {
                expected: self.factors.len(),
                actual: m.values.ncols(),
            });
        }
        let mut out = m.clone();
        for (mut col, &f) in out.values.columns_mut().into_iter().zip(&self.factors) {
            col.mapv_inplace(|v| v * f);
        }
        out.weighting = Weighting::TFIDF;
        Ok(out)
    }
}

/// Scales a TF matrix by `ln(1 + N/df)` computed on the matrix itself.
pub fn apply_tfidf(m: &FeatureMatrix) -> Result<FeatureMatrix> {
    Idf::fit(m)?.apply(m)
}

/// Extracts, builds the vocabulary, vectorizes and optionally applies tf-idf.
pub fn featurize(chunks: &ChunkSet, scheme: &FeatureScheme, cap: usize, weighting: Weighting) -> Result<FeatureMatrix> {
    let counts = extract_all(chunks, scheme)?;
    let vocab = build_vocabulary(&aggregate(&counts), scheme, cap)?;
    let tf = tf_matrix(chunks, &counts, &vocab);
    match weighting {
        Weighting::TF => Ok(tf),
        Weighting::TFIDF => apply_tfidf(&tf),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Provenance;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn chunk(tokens: &[&str], pos: Option<&[&str]>) -> Chunk {
        Chunk {
            id: "c".into(),
            source_doc_ids: vec![],
            tokens: tokens.iter().map(|s| s.to_string()).collect(),
            pos: pos.map(|p| p.iter().map(|s| s.to_string()).collect()),
            token_count: tokens.len(),
            label: None,
            domain: None,
        }
    }

    fn resources(fw: &[&str], coh: &[&str]) -> Resources {
        Resources {
            function_words: Arc::new(WordList::new(fw)),
            cohesive_markers: Arc::new(WordList::new(coh)),
        }
    }

    fn map(pairs: &[(&str, usize)]) -> Counts {
        pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    fn set(chunks: Vec<Chunk>) -> ChunkSet {
        let chunks = chunks
            .into_iter()
            .enumerate()
            .map(|(i, mut c)| {
                c.id = format!("c{i}");
                c
            })
            .collect();
        ChunkSet {
            chunks,
            target_size: 0,
            provenance: Provenance {
                seed: None,
                config_hash: String::new(),
            },
        }
    }

    #[test]
    fn extract_examples() {
        let r = resources(&["the", "of"], &["moreover", "in addition"]);
        let fw = FeatureScheme::new(SchemeKind::FW, &r);
        let c = chunk(&["the", "cat", "saw", "The", "dog"], None);
        assert_eq!(extract(&c, &fw).unwrap(), map(&[("the", 2)]));

        let c3 = FeatureScheme::new(SchemeKind::CHAR3, &r);
        assert_eq!(
            extract(&chunk(&["ab", "cd"], None), &c3).unwrap(),
            map(&[("ab ", 1), ("b c", 1), (" cd", 1)])
        );

        let r2 = resources(&["the", "of", "it"], &[]);
        let cfw = FeatureScheme::new(SchemeKind::CFW, &r2);
        let c = chunk(&["the", "cat", "of", "it"], Some(&["DT", "NN", "IN", "PRP"]));
        assert_eq!(extract(&c, &cfw).unwrap(), map(&[("the NN of", 1), ("NN of it", 1)]));

        let coh = FeatureScheme::new(SchemeKind::COH, &r);
        let c = chunk(&["moreover", ",", "in", "addition", ","], None);
        assert_eq!(extract(&c, &coh).unwrap(), map(&[("moreover", 1), ("in addition", 1)]));

        let pos3 = FeatureScheme::new(SchemeKind::POS3, &r);
        let c = chunk(&["a", "b", "c", "d"], Some(&["DT", "NN", "VB", "NN"]));
        assert_eq!(extract(&c, &pos3).unwrap(), map(&[("DT NN VB", 1), ("NN VB NN", 1)]));
    }

    #[test]
    fn coh_prefers_longest_marker() {
        let r = resources(&[], &["in", "in addition", "addition"]);
        let coh = FeatureScheme::new(SchemeKind::COH, &r);
        let c = chunk(&["In", "addition", "in", "fact"], None);
        assert_eq!(extract(&c, &coh).unwrap(), map(&[("in addition", 1), ("in", 1)]));
    }

    #[test]
    fn pos_schemes_require_annotation() {
        let r = Resources::bundled();
        for kind in [SchemeKind::POS3, SchemeKind::CFW] {
            let s = FeatureScheme::new(kind, &r);
            assert!(matches!(
                extract(&chunk(&["a"], None), &s),
                Err(Error::MissingAnnotation(_))
            ));
        }
    }

    #[test]
    fn vocabulary_examples() {
        let r = resources(&["the", "of"], &[]);
        let c3 = FeatureScheme::new(SchemeKind::CHAR3, &r);
        let counts = map(&[("aa", 5), ("bb", 5), ("cc", 1)]);
        assert_eq!(build_vocabulary(&counts, &c3, 2).unwrap().terms, ["aa", "bb"]);
        assert_eq!(build_vocabulary(&counts, &c3, 1000).unwrap().terms, ["aa", "bb", "cc"]);
        let fw = FeatureScheme::new(SchemeKind::FW, &r);
        assert_eq!(build_vocabulary(&counts, &fw, 1).unwrap().terms, ["the", "of"]);
        assert!(matches!(
            build_vocabulary(&Counts::new(), &c3, 10),
            Err(Error::EmptyVocabulary(_))
        ));
        assert!(matches!(build_vocabulary(&counts, &c3, 0), Err(Error::Config(_))));
    }

    #[test]
    fn vectorize_examples() {
        let r = resources(&["the", "of"], &[]);
        let fw = FeatureScheme::new(SchemeKind::FW, &r);
        let vocab = build_vocabulary(&Counts::new(), &fw, 1).unwrap();

        let mut long = vec!["x"; 2000];
        long[..10].fill("the");
        let mut short = vec!["x"; 1000];
        short[..5].fill("the");
        let m = vectorize(
            &set(vec![chunk(&long, None), chunk(&short, None), chunk(&["y"], None)]),
            &vocab,
        )
        .unwrap();
        assert_eq!(m.values.row(0).to_vec(), [0.005, 0.0]);
        assert_eq!(m.values.row(0), m.values.row(1));
        assert_eq!(m.values.row(2).to_vec(), [0.0, 0.0]);
        assert_eq!(m.weighting, Weighting::TF);
    }

    #[test]
    fn tfidf_examples() {
        let r = resources(&["a", "b", "c"], &[]);
        let fw = FeatureScheme::new(SchemeKind::FW, &r);
        let vocab = build_vocabulary(&Counts::new(), &fw, 1).unwrap();
        let mut values = Array2::zeros((10, 3));
        values.column_mut(0).fill(0.5);
        values[[3, 1]] = 0.25;
        let m = FeatureMatrix {
            chunk_ids: (0..10).map(|i| i.to_string()).collect(),
            vocabulary: vocab,
            values,
            weighting: Weighting::TF,
        };
        let t = apply_tfidf(&m).unwrap();
        // ln 2 and ln 11 written out by hand
        #[allow(clippy::approx_constant)]
        let ln2 = 0.693147;
        assert_abs_diff_eq!(t.values[[0, 0]], 0.5 * ln2, epsilon = 1e-6);
        assert_abs_diff_eq!(t.values[[3, 1]], 0.25 * 2.397895, epsilon = 1e-6);
        assert_eq!(t.values[[0, 1]], 0.0);
        assert!(t.values.column(2).iter().all(|&v| v == 0.0));
        assert!(matches!(apply_tfidf(&t), Err(Error::Config(_))));
    }

    #[test]
    fn bundled_lists_load() {
        let r = Resources::bundled();
        assert!(r.function_words.len() > 300);
        assert_eq!(r.cohesive_markers.len(), 40);
        assert!(r.function_words.contains("The"));
        assert!(r.cohesive_markers.entries().iter().any(|m| m == "on the other hand"));
    }

    #[test]
    fn csv_export_has_header() {
        let r = resources(&["a,b", "c"], &[]);
        let fw = FeatureScheme::new(SchemeKind::FW, &r);
        let m = featurize(&set(vec![chunk(&["c", "x"], None)]), &fw, 1, Weighting::TF).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.csv");
        m.write_csv(&path).unwrap();
        let text = std::fs::read_to_string(path).unwrap();
        assert_eq!(text, "chunk_id,\"a,b\",c\nc0,0,0.5\n");
    }

    fn words() -> impl Strategy<Value = Vec<String>> {
        prop::collection::vec(prop::sample::select(vec!["the", "of", "a", "cat", "dog", "ran"]), 1..60)
            .prop_map(|v| v.into_iter().map(String::from).collect())
    }

    proptest! {
        #[test]
        fn fw_rows_sum_to_at_most_one(docs in prop::collection::vec(words(), 1..8)) {
            let r = resources(&["the", "of", "a"], &[]);
            let fw = FeatureScheme::new(SchemeKind::FW, &r);
            let chunks: Vec<Chunk> = docs.iter().map(|d| {
                let refs: Vec<&str> = d.iter().map(String::as_str).collect();
                chunk(&refs, None)
            }).collect();
            let m = featurize(&set(chunks), &fw, 1, Weighting::TF).unwrap();
            for row in m.values.rows() {
                prop_assert!(row.sum() <= 1.0 + 1e-12);
            }
            let t = apply_tfidf(&m).unwrap();
            prop_assert!(t.values.iter().all(|&v| v >= 0.0));
            for (a, b) in m.values.iter().zip(t.values.iter()) {
                prop_assert_eq!(*a == 0.0, *b == 0.0);
            }
        }

        #[test]
        fn fw_counts_ignore_order(mut tokens in words(), seed in any::<u64>()) {
            use rand::seq::SliceRandom;
            let r = resources(&["the", "of", "a"], &[]);
            let fw = FeatureScheme::new(SchemeKind::FW, &r);
            let refs: Vec<&str> = tokens.iter().map(String::as_str).collect();
            let before = extract(&chunk(&refs, None), &fw).unwrap();
            tokens.shuffle(&mut crate::seed::rng(seed));
            let refs: Vec<&str> = tokens.iter().map(String::as_str).collect();
            prop_assert_eq!(before, extract(&chunk(&refs, None), &fw).unwrap());
        }

        #[test]
        fn single_row_idf_is_ln2(tokens in words()) {
            let r = resources(&["the", "of", "a"], &[]);
            let fw = FeatureScheme::new(SchemeKind::FW, &r);
            let refs: Vec<&str> = tokens.iter().map(String::as_str).collect();
            let m = featurize(&set(vec![chunk(&refs, None)]), &fw, 1, Weighting::TF).unwrap();
            let idf = Idf::fit(&m).unwrap();
            for (f, col) in idf.factors.iter().zip(m.values.columns()) {
                if col[0] > 0.0 {
                    prop_assert!((f - 2f64.ln()).abs() < 1e-15);
                }
            }
        }

        #[test]
        fn vocabulary_is_deterministic(counts in prop::collection::hash_map("[a-c]{1,3}", 1usize..20, 1..30), cap in 1usize..10) {
            let r = Resources::bundled();
            let s = FeatureScheme::new(SchemeKind::CHAR3, &r);
            let a = build_vocabulary(&counts, &s, cap).unwrap().terms;
            let rebuilt: Counts = counts.iter().map(|(k, v)| (k.clone(), *v)).collect();
            prop_assert_eq!(&a, &build_vocabulary(&rebuilt, &s, cap).unwrap().terms);
            prop_assert!(a.len() <= cap);
            for w in a.windows(2) {
                let (x, y) = (counts[&w[0]], counts[&w[1]]);
                prop_assert!(x > y || (x == y && w[0] < w[1]));
            }
        }
    }
}
