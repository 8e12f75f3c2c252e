//! Monolingual semantic spaces, IDF weights and sentence lookup.
//!
//! A [`SemanticSpace`] is a vocabulary with one `d`-dimensional row per word.
//! Vectors are read from the common word-vector text format: a header line
//! `<count> <dim>` followed by one `word v1 ... vdim` line per entry.

use std::collections::{HashMap, HashSet};
use std::io::BufRead;

use log::warn;
use nalgebra::DMatrix;

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("line 1: malformed header {0:?}, expected \"<count> <dim>\"")]
    MalformedHeader(String),
    #[error("line {line}: {reason}")]
    MalformedLine { line: usize, reason: String },
    #[error("line {line}: non-finite value in column {column}")]
    NonFinite { line: usize, column: usize },
    #[error("duplicate word {0:?}")]
    DuplicateWord(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("space is already preprocessed")]
    AlreadyPreprocessed,
    #[error("corpus contains no non-empty document")]
    EmptyCorpus,
    #[error("sentence has no tokens")]
    EmptySentence,
    #[error("invalid IDF weight {weight} for {word:?}")]
    InvalidWeight { word: String, weight: f64 },
}

/// A vocabulary plus one row vector per word.
#[derive(Debug, Clone, PartialEq)]
pub struct SemanticSpace {
    vocab: Vec<String>,
    index: HashMap<String, usize>,
    // row-major, vocab.len() × dim
    data: Vec<f64>,
    dim: usize,
    preprocessed: bool,
}

/// Bookkeeping from [`load_vectors`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct LoadStats {
    pub declared: usize,
    pub loaded: usize,
    pub duplicates: usize,
}

impl SemanticSpace {
    /// Builds a space from explicit rows. Words are lowercased; a word that
    /// collides with an earlier one (after lowercasing) is an error.
    pub fn from_rows<S: AsRef<str>>(
        words: &[S],
        rows: &[Vec<f64>],
    ) -> Result<Self, StoreError> {
        let dim = rows.first().map_or(0, Vec::len);
        if words.len() != rows.len() {
            return Err(StoreError::DimensionMismatch {
                expected: words.len(),
                found: rows.len(),
            });
        }
        let mut space = SemanticSpace::empty(dim);
        for (line, (word, row)) in words.iter().zip(rows).enumerate() {
            if row.len() != dim {
                return Err(StoreError::DimensionMismatch {
                    expected: dim,
                    found: row.len(),
                });
            }
            if let Some(column) = row.iter().position(|v| !v.is_finite()) {
                return Err(StoreError::NonFinite {
                    line: line + 1,
                    column: column + 1,
                });
            }
            let word = word.as_ref().to_lowercase();
            if !space.push(word.clone(), row) {
                return Err(StoreError::DuplicateWord(word));
            }
        }
        Ok(space)
    }

    fn empty(dim: usize) -> Self {
        SemanticSpace {
            vocab: Vec::new(),
            index: HashMap::new(),
            data: Vec::new(),
            dim,
            preprocessed: false,
        }
    }

    /// Appends a row unless the word is already present.
    fn push(&mut self, word: String, row: &[f64]) -> bool {
        if self.index.contains_key(&word) {
            return false;
        }
        self.index.insert(word.clone(), self.vocab.len());
        self.vocab.push(word);
        self.data.extend_from_slice(row);
        true
    }

    pub fn len(&self) -> usize {
        self.vocab.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vocab.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_preprocessed(&self) -> bool {
        self.preprocessed
    }

    pub fn words(&self) -> &[String] {
        &self.vocab
    }

    pub fn word(&self, idx: usize) -> &str {
        &self.vocab[idx]
    }

    pub fn index_of(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }

    pub fn vector(&self, idx: usize) -> &[f64] {
        &self.data[idx * self.dim..(idx + 1) * self.dim]
    }

    pub fn get(&self, word: &str) -> Option<&[f64]> {
        self.index_of(word).map(|i| self.vector(i))
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.dim.max(1)).take(self.len())
    }

    /// The space as a `|V| × d` matrix.
    pub fn to_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.len(), self.dim, &self.data)
    }

    /// Returns a copy whose rows are replaced by `f(row)`. The preprocessing
    /// flag is carried over, so `f` should preserve row norms when it is set.
    pub fn map_rows<F>(&self, mut f: F) -> Result<SemanticSpace, StoreError>
    where
        F: FnMut(&[f64]) -> Vec<f64>,
    {
        let mut data = Vec::with_capacity(self.data.len());
        for row in self.rows() {
            let mapped = f(row);
            if mapped.len() != self.dim {
                return Err(StoreError::DimensionMismatch {
                    expected: self.dim,
                    found: mapped.len(),
                });
            }
            data.extend(mapped);
        }
        Ok(SemanticSpace {
            vocab: self.vocab.clone(),
            index: self.index.clone(),
            data,
            dim: self.dim,
            preprocessed: self.preprocessed,
        })
    }

    /// Centers every column and rescales each row to unit length.
    pub fn preprocess(self) -> Result<SemanticSpace, StoreError> {
        preprocess_space(self)
    }
}

/// Reads the word-vector text format.
///
/// At most `min(count, max_vocab)` distinct words are kept; later duplicates
/// are dropped and counted. Any malformed or non-finite entry rejects the
/// whole load with its 1-based line number.
pub fn load_vectors<R: BufRead>(
    reader: R,
    max_vocab: Option<usize>,
) -> Result<(SemanticSpace, LoadStats), StoreError> {
    let mut lines = reader.lines();
    let header = match lines.next() {
        Some(line) => line?,
        None => return Err(StoreError::MalformedHeader(String::new())),
    };
    let (count, dim) = parse_header(&header)?;
    let cap = max_vocab.map_or(count, |m| m.min(count));

    let mut space = SemanticSpace::empty(dim);
    let mut stats = LoadStats {
        declared: count,
        ..LoadStats::default()
    };
    let mut entries = 0;
    let mut row = Vec::with_capacity(dim);
    for (offset, line) in lines.enumerate() {
        if entries >= count || space.len() >= cap {
            break;
        }
        let line_no = offset + 2;
        let line = line?;
        let mut fields = line.split_whitespace();
        let word = match fields.next() {
            Some(w) => w,
            None => continue,
        };
        row.clear();
        for (column, field) in fields.enumerate() {
            let value: f64 = field.parse().map_err(|_| StoreError::MalformedLine {
                line: line_no,
                reason: format!("cannot parse {field:?} as a number"),
            })?;
            if !value.is_finite() {
                return Err(StoreError::NonFinite {
                    line: line_no,
                    column: column + 1,
                });
            }
            row.push(value);
        }
        if row.len() != dim {
            return Err(StoreError::MalformedLine {
                line: line_no,
                reason: format!("expected {dim} values, found {}", row.len()),
            });
        }
        entries += 1;
        if !space.push(word.to_lowercase(), &row) {
            stats.duplicates += 1;
        }
    }
    if stats.duplicates > 0 {
        warn!("dropped {} duplicate word(s) while loading vectors", stats.duplicates);
    }
    stats.loaded = space.len();
    Ok((space, stats))
}

fn parse_header(header: &str) -> Result<(usize, usize), StoreError> {
    let bad = || StoreError::MalformedHeader(header.to_string());
    let mut fields = header.split_whitespace();
    let count = fields.next().and_then(|f| f.parse().ok()).ok_or_else(bad)?;
    let dim: usize = fields.next().and_then(|f| f.parse().ok()).ok_or_else(bad)?;
    if fields.next().is_some() || dim == 0 {
        return Err(bad());
    }
    Ok((count, dim))
}

/// Column-wise mean centering followed by unit-length rows. Rows that are
/// exactly zero after centering stay zero.
pub fn preprocess_space(mut space: SemanticSpace) -> Result<SemanticSpace, StoreError> {
    if space.preprocessed {
        return Err(StoreError::AlreadyPreprocessed);
    }
    center_columns(&mut space.data, space.dim);
    normalize_rows(&mut space.data, space.dim);
    space.preprocessed = true;
    Ok(space)
}

fn center_columns(data: &mut [f64], dim: usize) {
    if dim == 0 || data.is_empty() {
        return;
    }
    let n = (data.len() / dim) as f64;
    let mut means = vec![0.0; dim];
    for row in data.chunks_exact(dim) {
        for (m, v) in means.iter_mut().zip(row) {
            *m += v;
        }
    }
    means.iter_mut().for_each(|m| *m /= n);
    for row in data.chunks_exact_mut(dim) {
        for (v, m) in row.iter_mut().zip(&means) {
            *v -= m;
        }
    }
}

fn normalize_rows(data: &mut [f64], dim: usize) {
    if dim == 0 {
        return;
    }
    for row in data.chunks_exact_mut(dim) {
        let norm = crate::vector::norm(row);
        if norm > 0.0 {
            row.iter_mut().for_each(|v| *v /= norm);
        }
    }
}

/// Per-word importance weights.
#[derive(Debug, Clone, PartialEq)]
pub struct IdfWeights {
    weights: HashMap<String, f64>,
    default_weight: f64,
    doc_count: usize,
}

impl IdfWeights {
    /// Every word weighs 1.
    pub fn uniform() -> Self {
        IdfWeights {
            weights: HashMap::new(),
            default_weight: 1.0,
            doc_count: 1,
        }
    }

    pub fn from_map(
        weights: HashMap<String, f64>,
        default_weight: f64,
        doc_count: usize,
    ) -> Result<Self, StoreError> {
        let invalid = |w: f64| !(w.is_finite() && w >= 0.0);
        if let Some((word, &weight)) = weights.iter().find(|(_, &w)| invalid(w)) {
            return Err(StoreError::InvalidWeight {
                word: word.clone(),
                weight,
            });
        }
        if invalid(default_weight) {
            return Err(StoreError::InvalidWeight {
                word: String::new(),
                weight: default_weight,
            });
        }
        Ok(IdfWeights {
            weights,
            default_weight,
            doc_count: doc_count.max(1),
        })
    }

    pub fn weight(&self, word: &str) -> f64 {
        self.weights.get(word).copied().unwrap_or(self.default_weight)
    }

    pub fn default_weight(&self) -> f64 {
        self.default_weight
    }

    pub fn doc_count(&self) -> usize {
        self.doc_count
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// Estimates `idf(w) = ln(N / df(w))` from a corpus with one document per
/// line. Lines without tokens are not counted as documents. Unseen words get
/// `ln(N)`.
pub fn compute_idf<R: BufRead>(corpus: R) -> Result<IdfWeights, StoreError> {
    let mut df: HashMap<String, usize> = HashMap::new();
    let mut docs = 0usize;
    let mut seen = HashSet::new();
    for line in corpus.lines() {
        let line = line?;
        seen.clear();
        seen.extend(tokenize(&line));
        if seen.is_empty() {
            continue;
        }
        docs += 1;
        for token in seen.drain() {
            *df.entry(token).or_insert(0) += 1;
        }
    }
    if docs == 0 {
        return Err(StoreError::EmptyCorpus);
    }
    let n = docs as f64;
    let weights = df
        .into_iter()
        .map(|(word, count)| (word, (n / count as f64).ln()))
        .collect();
    Ok(IdfWeights {
        weights,
        default_weight: n.ln(),
        doc_count: docs,
    })
}

/// Lowercases, splits on whitespace and strips non-alphanumeric characters
/// from both ends of every token. Tokens that end up empty are dropped.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split_whitespace()
        .map(|t| t.trim_matches(|c: char| !c.is_alphanumeric()).to_lowercase())
        .filter(|t| !t.is_empty())
        .collect()
}

/// A bag of words; repetitions are kept.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sentence {
    tokens: Vec<String>,
}

impl Sentence {
    pub fn new(tokens: Vec<String>) -> Result<Self, StoreError> {
        if tokens.is_empty() {
            return Err(StoreError::EmptySentence);
        }
        Ok(Sentence { tokens })
    }

    /// Tokenizes raw text with [`tokenize`].
    pub fn parse(text: &str) -> Result<Self, StoreError> {
        Sentence::new(tokenize(text))
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }
}

/// Word vectors of a sentence paired with their weights.
///
/// An empty bag (every token out of vocabulary) is a valid value; the
/// scorers map it to a score of 0 flagged as undefined.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct WeightedBag {
    pub words: Vec<String>,
    pub vectors: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    /// Sum of the retained word weights.
    pub total_weight: f64,
    /// Number of tokens skipped as out of vocabulary.
    pub oov: usize,
}

impl WeightedBag {
    /// Builds a bag directly from vectors and weights.
    pub fn from_parts(vectors: Vec<Vec<f64>>, weights: Vec<f64>) -> Self {
        assert_eq!(vectors.len(), weights.len(), "one weight per vector");
        let total_weight = weights.iter().sum();
        let words = (0..vectors.len()).map(|i| format!("#{i}")).collect();
        WeightedBag {
            words,
            vectors,
            weights,
            total_weight,
            oov: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn dim(&self) -> Option<usize> {
        self.vectors.first().map(Vec::len)
    }

    /// Replaces every vector by `f(vector)`, keeping words and weights.
    pub fn map_vectors<F, E>(self, mut f: F) -> Result<WeightedBag, E>
    where
        F: FnMut(&[f64]) -> Result<Vec<f64>, E>,
    {
        let vectors = self
            .vectors
            .iter()
            .map(|v| f(v))
            .collect::<Result<Vec<_>, E>>()?;
        Ok(WeightedBag { vectors, ..self })
    }

    /// Same bag with every weight replaced by 1.
    pub fn with_uniform_weights(&self) -> WeightedBag {
        WeightedBag {
            weights: vec![1.0; self.len()],
            total_weight: self.len() as f64,
            ..self.clone()
        }
    }
}

/// Resolves a sentence against a space, skipping out-of-vocabulary tokens.
pub fn sentence_lookup(
    sentence: &Sentence,
    space: &SemanticSpace,
    idf: &IdfWeights,
) -> WeightedBag {
    let mut bag = WeightedBag::default();
    for token in sentence.tokens() {
        match space.get(token) {
            Some(v) => {
                let w = idf.weight(token);
                bag.words.push(token.clone());
                bag.vectors.push(v.to_vec());
                bag.weights.push(w);
                bag.total_weight += w;
            }
            None => bag.oov += 1,
        }
    }
    bag
}
