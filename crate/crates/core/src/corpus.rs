//! Document ingestion, tokenization, sentence splitting, chunking and
//! class balancing.

use std::collections::HashSet;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::ops::Range;
use std::path::Path;
use std::str::FromStr;

use rand::seq::index::sample;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;

/// Translation status of a text: original or translated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Label {
    O,
    T,
}

impl Label {
    pub fn complement(self) -> Label {
        match self {
            Label::O => Label::T,
            Label::T => Label::O,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Label::O => "O",
            Label::T => "T",
        })
    }
}

impl FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "O" => Ok(Label::O),
            "T" => Ok(Label::T),
            other => Err(Error::Config(format!("unknown label `{other}`"))),
        }
    }
}

/// An input document, either raw text or pre-tokenized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tokens: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pos: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<Label>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<String>,
}

impl Document {
    pub fn validate(&self) -> Result<()> {
        let invalid = |reason: &str| Error::InvalidDocument {
            id: self.id.clone(),
            reason: reason.to_string(),
        };
        match (&self.text, &self.tokens) {
            (Some(_), Some(_)) => return Err(invalid("both `text` and `tokens` are present")),
            (None, None) => return Err(invalid("neither `text` nor `tokens` is present")),
            _ => {}
        }
        if let Some(pos) = &self.pos {
            match &self.tokens {
                Some(tokens) if tokens.len() == pos.len() => {}
                Some(_) => return Err(invalid("`pos` is not parallel to `tokens`")),
                None => return Err(invalid("`pos` requires pre-tokenized `tokens`")),
            }
        }
        Ok(())
    }

    /// Tokens of the document, running the rule tokenizer on raw text.
    pub fn resolved_tokens(&self) -> Vec<String> {
        match (&self.tokens, &self.text) {
            (Some(tokens), _) => tokens.clone(),
            (None, Some(text)) => tokenize(text),
            (None, None) => Vec::new(),
        }
    }
}

/// A sentence-aligned unit of roughly `target_size` tokens.
#[derive(Debug, Clone, PartialEq)]
pub struct Chunk {
    pub id: String,
    pub source_doc_ids: Vec<String>,
    pub tokens: Vec<String>,
    pub pos: Option<Vec<String>>,
    pub token_count: usize,
    pub label: Option<Label>,
    pub domain: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub seed: Option<u64>,
    pub config_hash: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChunkSet {
    pub chunks: Vec<Chunk>,
    pub target_size: usize,
    pub provenance: Provenance,
}

impl ChunkSet {
    pub fn len(&self) -> usize {
        self.chunks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chunks.is_empty()
    }

    pub fn ids(&self) -> Vec<String> {
        self.chunks.iter().map(|c| c.id.clone()).collect()
    }

    pub fn gold(&self) -> Vec<Option<Label>> {
        self.chunks.iter().map(|c| c.label).collect()
    }

    pub fn has_pos(&self) -> bool {
        self.chunks.first().is_some_and(|c| c.pos.is_some())
    }

    /// Chunks at `indices`, in the given order.
    pub fn subset(&self, indices: &[usize]) -> ChunkSet {
        ChunkSet {
            chunks: indices.iter().map(|&i| self.chunks[i].clone()).collect(),
            target_size: self.target_size,
            provenance: self.provenance.clone(),
        }
    }

    /// Checks id uniqueness and uniform POS presence.
    pub fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for c in &self.chunks {
            if !seen.insert(c.id.as_str()) {
                return Err(Error::Config(format!("duplicate chunk id `{}`", c.id)));
            }
        }
        let with_pos = self.chunks.iter().filter(|c| c.pos.is_some()).count();
        if with_pos != 0 && with_pos != self.chunks.len() {
            return Err(Error::Config("chunks disagree on presence of POS annotations".into()));
        }
        Ok(())
    }
}

/// Requested O:T proportion, written `o:t` (e.g. `2:1`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Proportion {
    pub o: u32,
    pub t: u32,
}

impl Proportion {
    pub const BALANCED: Proportion = Proportion { o: 1, t: 1 };

    pub fn new(o: u32, t: u32) -> Result<Self> {
        if o == 0 || t == 0 {
            return Err(Error::Config(format!("ratio {o}:{t} must be positive")));
        }
        let g = gcd(o, t);
        Ok(Proportion { o: o / g, t: t / g })
    }
}

fn gcd(a: u32, b: u32) -> u32 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

impl Default for Proportion {
    fn default() -> Self {
        Proportion::BALANCED
    }
}

impl fmt::Display for Proportion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.o, self.t)
    }
}

impl FromStr for Proportion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("invalid ratio `{s}`, expected `o:t`"));
        let (o, t) = s.split_once(':').ok_or_else(bad)?;
        let o = o.trim().parse().map_err(|_| bad())?;
        let t = t.trim().parse().map_err(|_| bad())?;
        Proportion::new(o, t)
    }
}

impl Serialize for Proportion {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Proportion {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

fn is_punct(c: char) -> bool {
    !c.is_alphanumeric()
}

/// Rule tokenizer.
///
/// Splits on whitespace, then peels leading and trailing punctuation off each
/// word as single-character tokens. Internal punctuation stays inside the
/// word. A trailing period is kept when the next word begins with a lowercase
/// letter or a digit (abbreviations such as `e.g.`).
pub fn tokenize(text: &str) -> Vec<String> {
    let words: Vec<&str> = text.split_whitespace().collect();
    let mut out = Vec::with_capacity(words.len() + words.len() / 4);
    for (i, word) in words.iter().enumerate() {
        let chars: Vec<char> = word.chars().collect();
        let mut start = 0;
        while start < chars.len() && is_punct(chars[start]) {
            out.push(chars[start].to_string());
            start += 1;
        }
        if start == chars.len() {
            continue;
        }
        let mut end = chars.len();
        while end > start && is_punct(chars[end - 1]) {
            end -= 1;
        }
        if end < chars.len() && chars[end] == '.' {
            let next_starts_lower = words
                .get(i + 1)
                .and_then(|w| w.chars().next())
                .is_some_and(|c| c.is_lowercase() || c.is_ascii_digit());
            if next_starts_lower {
                end += 1;
            }
        }
        out.push(chars[start..end].iter().collect());
        out.extend(chars[end..].iter().map(|c| c.to_string()));
    }
    out
}

fn ends_sentence(token: &str) -> bool {
    token.ends_with(['.', '!', '?'])
}

fn opens_sentence(token: &str) -> bool {
    token
        .chars()
        .next()
        .is_some_and(|c| c.is_uppercase() || c.is_ascii_digit())
}

/// Sentence spans over `tokens`. The spans partition the token list.
pub fn split_sentences<S: AsRef<str>>(tokens: &[S]) -> Vec<Range<usize>> {
    let mut spans = Vec::new();
    let mut start = 0;
    for i in 0..tokens.len() {
        let boundary =
            ends_sentence(tokens[i].as_ref()) && tokens.get(i + 1).is_none_or(|next| opens_sentence(next.as_ref()));
        if boundary {
            spans.push(start..i + 1);
            start = i + 1;
        }
    }
    if start < tokens.len() {
        spans.push(start..tokens.len());
    }
    spans
}

/// Output of the chunker: kept chunks plus the token spans it discarded.
#[derive(Debug, Clone)]
pub struct Chunking {
    pub set: ChunkSet,
    /// Token counts of discarded pieces, in stream order.
    pub discarded: Vec<usize>,
}

struct Sentence {
    doc: usize,
    span: Range<usize>,
}

struct Resolved {
    tokens: Vec<String>,
    pos: Option<Vec<String>>,
}

fn resolve(docs: &[Document]) -> Result<Vec<Resolved>> {
    for d in docs {
        d.validate()?;
    }
    let with_pos = docs.iter().filter(|d| d.pos.is_some()).count();
    if with_pos != 0 && with_pos != docs.len() {
        return Err(Error::Config(
            "documents disagree on presence of POS annotations".into(),
        ));
    }
    Ok(docs
        .par_iter()
        .map(|d| Resolved {
            tokens: d.resolved_tokens(),
            pos: d.pos.clone(),
        })
        .collect())
}

/// Partitions documents into sentence-aligned chunks of about `target_size`
/// tokens.
///
/// A chunk closes at the sentence boundary whose cumulative size is closest
/// to the target: the next sentence is added only when it brings the count
/// strictly closer. Any piece shorter than half the target is discarded.
pub fn make_chunks(docs: &[Document], target_size: usize) -> Result<ChunkSet> {
    make_chunks_detailed(docs, target_size).map(|c| c.set)
}

/// [`make_chunks`] that also reports the sizes of discarded pieces.
pub fn make_chunks_detailed(docs: &[Document], target_size: usize) -> Result<Chunking> {
    if target_size < 1 {
        return Err(Error::Config("target_size must be at least 1".into()));
    }
    let resolved = resolve(docs)?;
    let sentences: Vec<Sentence> = resolved
        .iter()
        .enumerate()
        .flat_map(|(doc, r)| {
            split_sentences(&r.tokens)
                .into_iter()
                .map(move |span| Sentence { doc, span })
        })
        .collect();

    let target = target_size as i64;
    let mut groups: Vec<Range<usize>> = Vec::new();
    let mut start = 0;
    let mut count: i64 = 0;
    for (i, s) in sentences.iter().enumerate() {
        let len = s.span.len() as i64;
        if count > 0 && (count + len - target).abs() >= (count - target).abs() {
            groups.push(start..i);
            start = i;
            count = 0;
        }
        count += len;
    }
    if start < sentences.len() {
        groups.push(start..sentences.len());
    }

    let mut chunks = Vec::new();
    let mut discarded = Vec::new();
    for g in groups {
        let size: usize = sentences[g.clone()].iter().map(|s| s.span.len()).sum();
        if 2 * size < target_size {
            discarded.push(size);
            continue;
        }
        chunks.push(assemble(
            format!("chunk-{:06}", chunks.len()),
            &sentences[g],
            docs,
            &resolved,
        ));
    }

    let hash_input = format!(
        "make_chunks;target={target_size};docs={}",
        docs.iter().map(|d| d.id.as_str()).collect::<Vec<_>>().join("\u{1f}")
    );
    Ok(Chunking {
        set: ChunkSet {
            chunks,
            target_size,
            provenance: Provenance {
                seed: None,
                config_hash: seed::content_hash(hash_input.as_bytes()),
            },
        },
        discarded,
    })
}

fn assemble(id: String, sentences: &[Sentence], docs: &[Document], resolved: &[Resolved]) -> Chunk {
    let mut tokens = Vec::new();
    let mut pos = resolved[sentences[0].doc].pos.as_ref().map(|_| Vec::new());
    let mut doc_indices: Vec<usize> = Vec::new();
    for s in sentences {
        let r = &resolved[s.doc];
        tokens.extend_from_slice(&r.tokens[s.span.clone()]);
        if let (Some(out), Some(p)) = (pos.as_mut(), r.pos.as_ref()) {
            out.extend_from_slice(&p[s.span.clone()]);
        }
        if doc_indices.last() != Some(&s.doc) {
            doc_indices.push(s.doc);
        }
    }
    let agreed = |f: &dyn Fn(&Document) -> Option<String>| -> Option<String> {
        let first = f(&docs[doc_indices[0]])?;
        doc_indices
            .iter()
            .all(|&d| f(&docs[d]).as_deref() == Some(first.as_str()))
            .then_some(first)
    };
    let label = agreed(&|d| d.label.map(|l| l.to_string())).map(|l| l.parse().expect("label"));
    let domain = agreed(&|d| d.domain.clone());
    Chunk {
        id,
        source_doc_ids: doc_indices.iter().map(|&d| docs[d].id.clone()).collect(),
        token_count: tokens.len(),
        tokens,
        pos,
        label,
        domain,
    }
}

/// Chunks each maximal run of consecutive documents sharing (label, domain)
/// separately, so no chunk straddles a class or domain change.
pub fn make_chunks_by_group(docs: &[Document], target_size: usize) -> Result<ChunkSet> {
    let mut chunks = Vec::new();
    let mut start = 0;
    while start < docs.len() {
        let key = (docs[start].label, docs[start].domain.as_deref());
        let mut end = start + 1;
        while end < docs.len() && (docs[end].label, docs[end].domain.as_deref()) == key {
            end += 1;
        }
        chunks.extend(make_chunks(&docs[start..end], target_size)?.chunks);
        start = end;
    }
    for (i, c) in chunks.iter_mut().enumerate() {
        c.id = format!("chunk-{i:06}");
    }
    let hash_input = format!(
        "make_chunks_by_group;target={target_size};docs={}",
        docs.iter().map(|d| d.id.as_str()).collect::<Vec<_>>().join("\u{1f}")
    );
    Ok(ChunkSet {
        chunks,
        target_size,
        provenance: Provenance {
            seed: None,
            config_hash: seed::content_hash(hash_input.as_bytes()),
        },
    })
}

fn indices_by_label(set: &ChunkSet) -> Result<(Vec<usize>, Vec<usize>)> {
    let mut o = Vec::new();
    let mut t = Vec::new();
    for (i, c) in set.chunks.iter().enumerate() {
        match c.label {
            Some(Label::O) => o.push(i),
            Some(Label::T) => t.push(i),
            None => return Err(Error::Balance(format!("chunk `{}` has no gold label", c.id))),
        }
    }
    if o.is_empty() || t.is_empty() {
        return Err(Error::Balance("one class is empty".into()));
    }
    Ok((o, t))
}

fn draw(pool: &[usize], amount: usize, rng: &mut impl rand::Rng) -> Vec<usize> {
    sample(rng, pool.len(), amount).into_iter().map(|i| pool[i]).collect()
}

fn keep(set: &ChunkSet, mut picked: Vec<usize>, seed_value: u64, tag: &str) -> ChunkSet {
    picked.sort_unstable();
    let mut out = set.subset(&picked);
    out.provenance = Provenance {
        seed: Some(seed_value),
        config_hash: seed::content_hash(format!("{};{tag};seed={seed_value}", set.provenance.config_hash).as_bytes()),
    };
    out
}

/// Down-samples to the largest subset whose O:T counts equal `ratio` exactly.
///
/// Sampling is uniform without replacement; kept chunks stay in input order.
pub fn balance(set: &ChunkSet, ratio: Proportion, seed_value: u64) -> Result<ChunkSet> {
    let ratio = Proportion::new(ratio.o, ratio.t)?;
    let (o, t) = indices_by_label(set)?;
    let m = (o.len() / ratio.o as usize).min(t.len() / ratio.t as usize);
    if m == 0 {
        return Err(Error::Balance(format!(
            "{} O and {} T chunks cannot realize ratio {ratio}",
            o.len(),
            t.len()
        )));
    }
    let mut rng = seed::rng(seed_value);
    let mut picked = draw(&o, m * ratio.o as usize, &mut rng);
    picked.extend(draw(&t, m * ratio.t as usize, &mut rng));
    Ok(keep(set, picked, seed_value, &format!("balance={ratio}")))
}

/// Uniformly samples `per_class` chunks of each class.
pub fn sample_per_class(set: &ChunkSet, per_class: usize, seed_value: u64) -> Result<ChunkSet> {
    let (o, t) = indices_by_label(set)?;
    if per_class > o.len() || per_class > t.len() {
        return Err(Error::InsufficientData(format!(
            "asked for {per_class} chunks per class, have {} O and {} T",
            o.len(),
            t.len()
        )));
    }
    let mut rng = seed::rng(seed_value);
    let mut picked = draw(&o, per_class, &mut rng);
    picked.extend(draw(&t, per_class, &mut rng));
    Ok(keep(set, picked, seed_value, &format!("per_class={per_class}")))
}

#[derive(Serialize, Deserialize)]
struct ChunkRecord {
    id: String,
    token_count: usize,
    label: Option<Label>,
    domain: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    tokens: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pos: Option<Vec<String>>,
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|e| Error::io(path, e))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

fn read_jsonl<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let mut out = Vec::new();
    for (n, line) in open(path)?.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: n + 1,
            message: e.to_string(),
        })?);
    }
    Ok(out)
}

/// Reads a JSON-lines corpus, one [`Document`] per line.
pub fn read_documents(path: &Path) -> Result<Vec<Document>> {
    let docs: Vec<Document> = read_jsonl(path)?;
    for d in &docs {
        d.validate()?;
    }
    Ok(docs)
}

pub fn write_documents(path: &Path, docs: &[Document]) -> Result<()> {
    let mut w = create(path)?;
    for d in docs {
        serde_json::to_writer(&mut w, d)?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Writes one chunk per line. Tokens (and POS tags when present) are emitted
/// only with `emit_tokens`.
pub fn write_chunks(path: &Path, set: &ChunkSet, emit_tokens: bool) -> Result<()> {
    let mut w = create(path)?;
    for c in &set.chunks {
        let record = ChunkRecord {
            id: c.id.clone(),
            token_count: c.token_count,
            label: c.label,
            domain: c.domain.clone(),
            tokens: emit_tokens.then(|| c.tokens.clone()),
            pos: if emit_tokens { c.pos.clone() } else { None },
        };
        serde_json::to_writer(&mut w, &record)?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Reads chunks written with tokens by [`write_chunks`].
pub fn read_chunks(path: &Path) -> Result<ChunkSet> {
    let records: Vec<ChunkRecord> = read_jsonl(path)?;
    let mut chunks = Vec::with_capacity(records.len());
    for (n, r) in records.into_iter().enumerate() {
        let tokens = r.tokens.ok_or_else(|| Error::Parse {
            path: path.to_path_buf(),
            line: n + 1,
            message: format!("chunk `{}` has no tokens", r.id),
        })?;
        if tokens.len() != r.token_count || tokens.is_empty() {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: n + 1,
                message: format!("chunk `{}` token_count does not match tokens", r.id),
            });
        }
        if r.pos.as_ref().is_some_and(|p| p.len() != tokens.len()) {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: n + 1,
                message: format!("chunk `{}` pos is not parallel to tokens", r.id),
            });
        }
        chunks.push(Chunk {
            id: r.id,
            source_doc_ids: Vec::new(),
            token_count: r.token_count,
            tokens,
            pos: r.pos,
            label: r.label,
            domain: r.domain,
        });
    }
    let target_size = chunks.first().map_or(0, |c| c.token_count);
    let set = ChunkSet {
        chunks,
        target_size,
        provenance: Provenance {
            seed: None,
            config_hash: seed::content_hash(path.to_string_lossy().as_bytes()),
        },
    };
    set.validate()?;
    Ok(set)
}
