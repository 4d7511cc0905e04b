//! Vocabularies, embedding matrices, frequency tables, and sentence-pair
//! datasets, together with the text-format readers and writers.
//!
//! All structures are immutable after construction and cheap to share
//! across threads. Loading is order-stable: the same file bytes always
//! produce identical structures.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Maximum deviation of a probability vector's sum from 1.
pub const PROB_SUM_TOLERANCE: f64 = 1e-9;

/// An ordered set of unique word types with stable integer ids.
#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary {
    words: Vec<String>,
    index: HashMap<String, usize>,
}

impl Vocabulary {
    /// Builds a vocabulary from an ordered list of unique words.
    pub fn new<I, S>(words: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let words: Vec<String> = words.into_iter().map(Into::into).collect();
        if words.is_empty() {
            return Err(Error::EmptyInput("vocabulary".into()));
        }
        let mut index = HashMap::with_capacity(words.len());
        for (i, word) in words.iter().enumerate() {
            if index.insert(word.clone(), i).is_some() {
                return Err(Error::InvalidArgument(format!(
                    "duplicate word in vocabulary: {word:?}"
                )));
            }
        }
        Ok(Self { words, index })
    }

    /// Id of `word`, if present.
    pub fn id(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }

    /// Word with id `i`.
    pub fn word(&self, i: usize) -> &str {
        &self.words[i]
    }

    /// Words in id order.
    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

/// A vocabulary-aligned dense matrix of word vectors (row i = word i).
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSet {
    vocab: Arc<Vocabulary>,
    matrix: DMatrix<f64>,
}

impl EmbeddingSet {
    /// Wraps a `|vocab| x d` matrix. All entries must be finite and `d >= 1`.
    pub fn new(vocab: Arc<Vocabulary>, matrix: DMatrix<f64>) -> Result<Self> {
        if matrix.nrows() != vocab.len() {
            return Err(Error::DimensionMismatch {
                expected: vocab.len(),
                found: matrix.nrows(),
            });
        }
        if matrix.ncols() == 0 {
            return Err(Error::InvalidArgument(
                "embedding dimension must be at least 1".into(),
            ));
        }
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(
                "embedding matrix contains a non-finite entry".into(),
            ));
        }
        Ok(Self { vocab, matrix })
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn vocab_arc(&self) -> Arc<Vocabulary> {
        Arc::clone(&self.vocab)
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// Number of words.
    pub fn len(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Embedding dimension.
    pub fn dim(&self) -> usize {
        self.matrix.ncols()
    }

    /// Vector of the word with id `i`, as an owned column vector.
    pub fn vector(&self, i: usize) -> DVector<f64> {
        self.matrix.row(i).transpose()
    }

    /// Vector of `word`, if in vocabulary.
    pub fn vector_of(&self, word: &str) -> Option<DVector<f64>> {
        self.vocab.id(word).map(|i| self.vector(i))
    }
}

/// A normalized probability distribution over a vocabulary.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyTable {
    vocab: Arc<Vocabulary>,
    probs: DVector<f64>,
}

impl FrequencyTable {
    /// Wraps a probability vector aligned with `vocab`. Probabilities must be
    /// nonnegative, finite, not all zero, and sum to 1 within
    /// [`PROB_SUM_TOLERANCE`].
    pub fn new(vocab: Arc<Vocabulary>, probs: DVector<f64>) -> Result<Self> {
        if probs.len() != vocab.len() {
            return Err(Error::DimensionMismatch {
                expected: vocab.len(),
                found: probs.len(),
            });
        }
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::InvalidArgument(
                "probabilities must be finite and nonnegative".into(),
            ));
        }
        let sum: f64 = probs.iter().sum();
        if sum <= 0.0 {
            return Err(Error::Degenerate("all probabilities are zero".into()));
        }
        if (sum - 1.0).abs() > PROB_SUM_TOLERANCE {
            return Err(Error::InvalidArgument(format!(
                "probabilities sum to {sum}, expected 1"
            )));
        }
        Ok(Self { vocab, probs })
    }

    /// Normalizes raw nonnegative weights (counts or probabilities) to sum 1.
    pub fn from_weights(vocab: Arc<Vocabulary>, weights: DVector<f64>) -> Result<Self> {
        if weights.len() != vocab.len() {
            return Err(Error::DimensionMismatch {
                expected: vocab.len(),
                found: weights.len(),
            });
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidArgument(
                "weights must be finite and nonnegative".into(),
            ));
        }
        let sum: f64 = weights.iter().sum();
        if sum <= 0.0 {
            return Err(Error::Degenerate("all weights are zero".into()));
        }
        Ok(Self {
            vocab,
            probs: weights / sum,
        })
    }

    /// The uniform distribution 1/|V| over `vocab`.
    pub fn uniform(vocab: Arc<Vocabulary>) -> Self {
        let n = vocab.len();
        Self {
            vocab,
            probs: DVector::repeat(n, 1.0 / n as f64),
        }
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn vocab_arc(&self) -> Arc<Vocabulary> {
        Arc::clone(&self.vocab)
    }

    pub fn probs(&self) -> &DVector<f64> {
        &self.probs
    }

    /// Probability of word `i`.
    pub fn prob(&self, i: usize) -> f64 {
        self.probs[i]
    }

    /// Probability of `word`; 0 when out of vocabulary.
    pub fn prob_of(&self, word: &str) -> f64 {
        self.vocab.id(word).map_or(0.0, |i| self.probs[i])
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }
}

/// Which base measure an expectation is taken under.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PriorKind {
    Uniform,
    Zipfian,
}

impl std::fmt::Display for PriorKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PriorKind::Uniform => write!(f, "uniform"),
            PriorKind::Zipfian => write!(f, "zipfian"),
        }
    }
}

/// The word-frequency prior used when computing expectations: either the
/// uniform distribution 1/|V| or an empirical (Zipfian) frequency table.
#[derive(Debug, Clone, Copy)]
pub enum Prior<'a> {
    Uniform,
    Zipfian(&'a FrequencyTable),
}

impl<'a> Prior<'a> {
    pub fn kind(&self) -> PriorKind {
        match self {
            Prior::Uniform => PriorKind::Uniform,
            Prior::Zipfian(_) => PriorKind::Zipfian,
        }
    }

    /// Materializes the per-word weight vector for `emb`, checking that a
    /// Zipfian table is defined over the same vocabulary.
    pub fn weights(&self, emb: &EmbeddingSet) -> Result<DVector<f64>> {
        match self {
            Prior::Uniform => {
                let n = emb.len();
                Ok(DVector::repeat(n, 1.0 / n as f64))
            }
            Prior::Zipfian(freq) => {
                let same = Arc::ptr_eq(&emb.vocab, &freq.vocab) || emb.vocab == freq.vocab;
                if !same {
                    return Err(Error::VocabularyMismatch);
                }
                Ok(freq.probs.clone())
            }
        }
    }
}

/// One sentence pair with its human similarity judgement.
#[derive(Debug, Clone, PartialEq)]
pub struct StsPair {
    pub sentence1: String,
    pub sentence2: String,
    pub gold: f64,
}

/// A sentence-similarity dataset: (sentence1, sentence2, gold score) triples.
#[derive(Debug, Clone, PartialEq)]
pub struct StsDataset {
    pub pairs: Vec<StsPair>,
    pub name: String,
}

impl StsDataset {
    pub fn new(pairs: Vec<StsPair>, name: impl Into<String>) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::EmptyInput("sts dataset".into()));
        }
        if pairs.iter().any(|p| !p.gold.is_finite()) {
            return Err(Error::InvalidArgument("non-finite gold score".into()));
        }
        Ok(Self {
            pairs,
            name: name.into(),
        })
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

/// Header handling for the embedding text format.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum HeaderMode {
    /// Treat the first line as a header iff it has exactly two
    /// integer-parseable tokens.
    #[default]
    Auto,
    /// The first line is a `count dim` header.
    Yes,
    /// There is no header.
    No,
}

fn is_header_line(line: &str) -> bool {
    let tokens: Vec<&str> = line.split_whitespace().collect();
    tokens.len() == 2 && tokens.iter().all(|t| t.parse::<u64>().is_ok())
}

/// Loads word embeddings in the GloVe/word2vec text format: an optional
/// `count dim` header line followed by `word v1 ... vd` lines.
///
/// Rows keep file order. Duplicate words keep the first occurrence; the
/// number of dropped duplicate rows is returned alongside the embeddings.
pub fn load_embeddings_text(
    path: impl AsRef<Path>,
    header: HeaderMode,
) -> Result<(EmbeddingSet, usize)> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = BufReader::new(file);
    load_embeddings_from(&mut reader, header)
        .map_err(|e| annotate_io(e, path))
}

/// Same as [`load_embeddings_text`], reading from any buffered source.
pub fn load_embeddings_from<R: BufRead>(
    reader: &mut R,
    header: HeaderMode,
) -> Result<(EmbeddingSet, usize)> {
    let mut words: Vec<String> = Vec::new();
    let mut seen: HashMap<String, ()> = HashMap::new();
    let mut data: Vec<f64> = Vec::new();
    let mut dim: Option<usize> = None;
    let mut duplicates = 0usize;

    let mut line = String::new();
    let mut lineno = 0usize;
    loop {
        line.clear();
        let read = reader
            .read_line(&mut line)
            .map_err(|e| Error::io("<embeddings>", e))?;
        if read == 0 {
            break;
        }
        lineno += 1;
        let trimmed = line.trim_end_matches(['\r', '\n']);
        if trimmed.is_empty() {
            continue;
        }
        if lineno == 1 {
            let is_header = match header {
                HeaderMode::Auto => is_header_line(trimmed),
                HeaderMode::Yes => {
                    if !is_header_line(trimmed) {
                        return Err(Error::parse(1, "expected a `count dim` header line"));
                    }
                    true
                }
                HeaderMode::No => false,
            };
            if is_header {
                continue;
            }
        }

        let mut tokens = trimmed.split_whitespace();
        let word = tokens
            .next()
            .ok_or_else(|| Error::parse(lineno, "missing word"))?;
        let values: Vec<&str> = tokens.collect();
        if values.is_empty() {
            return Err(Error::parse(lineno, "missing vector components"));
        }
        match dim {
            None => dim = Some(values.len()),
            Some(d) if d != values.len() => {
                return Err(Error::parse(
                    lineno,
                    format!("expected {d} components, found {}", values.len()),
                ));
            }
            _ => {}
        }
        if seen.insert(word.to_string(), ()).is_some() {
            duplicates += 1;
            continue;
        }
        for v in &values {
            let x: f64 = v
                .parse()
                .map_err(|_| Error::parse(lineno, format!("invalid float {v:?}")))?;
            if !x.is_finite() {
                return Err(Error::parse(lineno, format!("non-finite value {v:?}")));
            }
            data.push(x);
        }
        words.push(word.to_string());
    }

    let dim = dim.ok_or_else(|| Error::EmptyInput("embedding file".into()))?;
    let n = words.len();
    let matrix = DMatrix::from_row_iterator(n, dim, data);
    let vocab = Arc::new(Vocabulary::new(words)?);
    Ok((EmbeddingSet::new(vocab, matrix)?, duplicates))
}

/// Loads a frequency list of `word count` lines into raw (unnormalized)
/// counts. Duplicate words are summed; counts may be probabilities.
pub fn load_frequency_list(path: impl AsRef<Path>) -> Result<HashMap<String, f64>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    load_frequency_from(&mut BufReader::new(file)).map_err(|e| annotate_io(e, path))
}

/// Same as [`load_frequency_list`], reading from any buffered source.
pub fn load_frequency_from<R: BufRead>(reader: &mut R) -> Result<HashMap<String, f64>> {
    let mut counts: HashMap<String, f64> = HashMap::new();
    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| Error::io("<frequency>", e))?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let tokens: Vec<&str> = trimmed.split_whitespace().collect();
        if tokens.len() != 2 {
            return Err(Error::parse(
                lineno,
                format!("expected `word count`, found {} tokens", tokens.len()),
            ));
        }
        let count: f64 = tokens[1]
            .parse()
            .map_err(|_| Error::parse(lineno, format!("invalid count {:?}", tokens[1])))?;
        if !count.is_finite() || count < 0.0 {
            return Err(Error::parse(
                lineno,
                format!("count must be finite and nonnegative, found {count}"),
            ));
        }
        *counts.entry(tokens[0].to_string()).or_insert(0.0) += count;
    }
    if counts.is_empty() {
        return Err(Error::EmptyInput("frequency file".into()));
    }
    Ok(counts)
}

/// Restricts `emb` to the words that also appear in `counts`, preserving the
/// embedding-file order, and renormalizes the restricted counts to a
/// probability table over the shared vocabulary.
pub fn intersect_and_normalize(
    emb: &EmbeddingSet,
    counts: &HashMap<String, f64>,
) -> Result<(EmbeddingSet, FrequencyTable)> {
    let kept: Vec<usize> = (0..emb.len())
        .filter(|&i| counts.contains_key(emb.vocab().word(i)))
        .collect();
    if kept.is_empty() {
        return Err(Error::EmptyIntersection);
    }
    let words: Vec<String> = kept
        .iter()
        .map(|&i| emb.vocab().word(i).to_string())
        .collect();
    let weights = DVector::from_iterator(
        kept.len(),
        words.iter().map(|w| counts[w]),
    );
    let matrix = DMatrix::from_fn(kept.len(), emb.dim(), |r, c| emb.matrix()[(kept[r], c)]);
    let vocab = Arc::new(Vocabulary::new(words)?);
    let emb = EmbeddingSet::new(Arc::clone(&vocab), matrix)?;
    let freq = FrequencyTable::from_weights(vocab, weights)?;
    Ok((emb, freq))
}

/// Loads a 3-column TSV of `sentence1 TAB sentence2 TAB score` lines.
/// The dataset name is taken from the file stem.
pub fn load_sts_tsv(path: impl AsRef<Path>) -> Result<StsDataset> {
    let path = path.as_ref();
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "sts".to_string());
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    load_sts_from(&mut BufReader::new(file), name).map_err(|e| annotate_io(e, path))
}

/// Same as [`load_sts_tsv`], reading from any buffered source.
pub fn load_sts_from<R: BufRead>(reader: &mut R, name: impl Into<String>) -> Result<StsDataset> {
    let mut pairs = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| Error::io("<sts>", e))?;
        let trimmed = line.trim_end_matches(['\r', '\n']);
        if trimmed.is_empty() {
            continue;
        }
        let columns: Vec<&str> = trimmed.split('\t').collect();
        if columns.len() != 3 {
            return Err(Error::parse(
                lineno,
                format!("expected 3 tab-separated columns, found {}", columns.len()),
            ));
        }
        let gold: f64 = columns[2]
            .trim()
            .parse()
            .map_err(|_| Error::parse(lineno, format!("invalid score {:?}", columns[2])))?;
        if !gold.is_finite() {
            return Err(Error::parse(lineno, "non-finite score"));
        }
        pairs.push(StsPair {
            sentence1: columns[0].to_string(),
            sentence2: columns[1].to_string(),
            gold,
        });
    }
    StsDataset::new(pairs, name)
}

/// Writes embeddings in the text format with `precision` decimal digits per
/// component (no header line). A reload reproduces every entry within
/// `0.5 * 10^-precision`, well inside the documented `10^(1-precision)`
/// round-trip bound.
pub fn save_embeddings_text(
    emb: &EmbeddingSet,
    path: impl AsRef<Path>,
    precision: usize,
) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut writer = BufWriter::new(file);
    save_embeddings_to(emb, &mut writer, precision).map_err(|e| annotate_io(e, path))?;
    writer.flush().map_err(|e| Error::io(path, e))
}

/// Same as [`save_embeddings_text`], writing to any sink.
pub fn save_embeddings_to<W: Write>(
    emb: &EmbeddingSet,
    writer: &mut W,
    precision: usize,
) -> Result<()> {
    let io_err = |e| Error::io("<embeddings>", e);
    for i in 0..emb.len() {
        write!(writer, "{}", emb.vocab().word(i)).map_err(io_err)?;
        for j in 0..emb.dim() {
            write!(writer, " {:.*}", precision, emb.matrix()[(i, j)]).map_err(io_err)?;
        }
        writeln!(writer).map_err(io_err)?;
    }
    Ok(())
}

/// Default number of decimal digits written by the embedding writer.
pub const DEFAULT_SAVE_PRECISION: usize = 6;

fn annotate_io(err: Error, path: &Path) -> Error {
    match err {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::io::Cursor;

    fn load_str(text: &str, header: HeaderMode) -> Result<(EmbeddingSet, usize)> {
        load_embeddings_from(&mut Cursor::new(text), header)
    }

    #[test]
    fn loads_identity_embeddings() {
        let (emb, dups) = load_str("a 1.0 0.0\nb 0.0 1.0", HeaderMode::Auto).unwrap();
        assert_eq!(dups, 0);
        assert_eq!(emb.vocab().words(), &["a".to_string(), "b".to_string()]);
        assert_eq!(emb.dim(), 2);
        assert_eq!(emb.matrix()[(0, 0)], 1.0);
        assert_eq!(emb.matrix()[(0, 1)], 0.0);
        assert_eq!(emb.matrix()[(1, 1)], 1.0);
    }

    #[test]
    fn auto_header_is_consumed() {
        let with_header = load_str("2 2\na 1.0 0.0\nb 0.0 1.0", HeaderMode::Auto).unwrap();
        let without = load_str("a 1.0 0.0\nb 0.0 1.0", HeaderMode::Auto).unwrap();
        assert_eq!(with_header.0, without.0);
    }

    #[test]
    fn header_mode_no_reads_two_token_first_line_as_data() {
        // "3 4" forced as data must fail: the word would be "3" with one component,
        // mismatching later 2-component rows.
        let r = load_str("3 4\na 1.0 2.0\n", HeaderMode::No);
        assert!(matches!(r, Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn header_mode_yes_requires_header() {
        let r = load_str("a 1.0 0.0\nb 0.0 1.0", HeaderMode::Yes);
        assert!(matches!(r, Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn dimension_mismatch_reports_line() {
        let r = load_str("a 1.0\nb 2.0 3.0", HeaderMode::Auto);
        match r {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn non_finite_value_rejected() {
        let r = load_str("a 1.0 nan\n", HeaderMode::Auto);
        assert!(matches!(r, Err(Error::Parse { line: 1, .. })));
        let r = load_str("a 1.0 inf\n", HeaderMode::Auto);
        assert!(matches!(r, Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn empty_file_rejected() {
        assert!(matches!(
            load_str("", HeaderMode::Auto),
            Err(Error::EmptyInput(_))
        ));
    }

    #[test]
    fn duplicates_keep_first_and_are_counted() {
        let (emb, dups) = load_str("a 1.0 0.0\na 9.0 9.0\nb 0.0 1.0", HeaderMode::Auto).unwrap();
        assert_eq!(dups, 1);
        assert_eq!(emb.len(), 2);
        assert_eq!(emb.matrix()[(0, 0)], 1.0);
    }

    #[test]
    fn crlf_lines_accepted() {
        let (emb, _) = load_str("a 1.0 0.0\r\nb 0.0 1.0\r\n", HeaderMode::Auto).unwrap();
        assert_eq!(emb.len(), 2);
    }

    #[test]
    fn frequency_list_sums_duplicates() {
        let counts = load_frequency_from(&mut Cursor::new("the 6\nof 3\nthe 1")).unwrap();
        assert_eq!(counts["the"], 7.0);
        assert_eq!(counts["of"], 3.0);
    }

    #[test]
    fn frequency_single_entry() {
        let counts = load_frequency_from(&mut Cursor::new("the 6")).unwrap();
        assert_eq!(counts.len(), 1);
        assert_eq!(counts["the"], 6.0);
    }

    #[test]
    fn negative_count_rejected() {
        let r = load_frequency_from(&mut Cursor::new("the -1"));
        assert!(matches!(r, Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn malformed_frequency_line_reports_line() {
        let r = load_frequency_from(&mut Cursor::new("the 6\nof"));
        assert!(matches!(r, Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn intersect_preserves_embedding_order_and_normalizes() {
        let (emb, _) =
            load_str("a 1.0 0.0\nb 0.0 1.0\nc 1.0 1.0", HeaderMode::Auto).unwrap();
        let counts =
            HashMap::from([("b".into(), 1.0), ("c".into(), 3.0), ("d".into(), 4.0)]);
        let (emb2, freq) = intersect_and_normalize(&emb, &counts).unwrap();
        assert_eq!(emb2.vocab().words(), &["b".to_string(), "c".to_string()]);
        assert_relative_eq!(freq.prob(0), 0.25);
        assert_relative_eq!(freq.prob(1), 0.75);
        assert_eq!(emb2.matrix()[(0, 1)], 1.0);
        assert_eq!(emb2.matrix()[(1, 0)], 1.0);
    }

    #[test]
    fn intersect_single_word() {
        let (emb, _) = load_str("a 1.0 2.0", HeaderMode::Auto).unwrap();
        let counts = HashMap::from([("a".into(), 5.0)]);
        let (_, freq) = intersect_and_normalize(&emb, &counts).unwrap();
        assert_eq!(freq.prob(0), 1.0);
    }

    #[test]
    fn empty_intersection_rejected() {
        let (emb, _) = load_str("a 1.0 2.0", HeaderMode::Auto).unwrap();
        let counts = HashMap::from([("b".into(), 5.0)]);
        assert!(matches!(
            intersect_and_normalize(&emb, &counts),
            Err(Error::EmptyIntersection)
        ));
    }

    #[test]
    fn probs_sum_to_one_from_any_scale() {
        let (emb, _) = load_str("a 1.0\nb 2.0\nc 3.0", HeaderMode::Auto).unwrap();
        for scale in [1.0, 1e-7, 1e9] {
            let counts = HashMap::from([
                ("a".into(), 2.0 * scale),
                ("b".into(), 3.0 * scale),
                ("c".into(), 5.0 * scale),
            ]);
            let (_, freq) = intersect_and_normalize(&emb, &counts).unwrap();
            let sum: f64 = freq.probs().iter().sum();
            assert!((sum - 1.0).abs() <= PROB_SUM_TOLERANCE);
        }
    }

    #[test]
    fn sts_parses_pairs_in_order() {
        let ds = load_sts_from(&mut Cursor::new("a man\ta person\t4.5"), "t").unwrap();
        assert_eq!(ds.len(), 1);
        assert_eq!(ds.pairs[0].sentence1, "a man");
        assert_eq!(ds.pairs[0].sentence2, "a person");
        assert_eq!(ds.pairs[0].gold, 4.5);
    }

    #[test]
    fn sts_empty_file_rejected() {
        assert!(matches!(
            load_sts_from(&mut Cursor::new(""), "t"),
            Err(Error::EmptyInput(_))
        ));
    }

    #[test]
    fn sts_wrong_column_count_reports_line() {
        let r = load_sts_from(&mut Cursor::new("a\tb\t1.0\nc\td"), "t");
        assert!(matches!(r, Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn sts_bad_score_reports_line() {
        let r = load_sts_from(&mut Cursor::new("a\tb\tx"), "t");
        assert!(matches!(r, Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn save_load_identity_is_exact() {
        let (emb, _) = load_str("a 1.0 0.0\nb 0.0 1.0", HeaderMode::Auto).unwrap();
        let mut buf = Vec::new();
        save_embeddings_to(&emb, &mut buf, DEFAULT_SAVE_PRECISION).unwrap();
        let (back, _) =
            load_embeddings_from(&mut Cursor::new(buf), HeaderMode::Auto).unwrap();
        assert_eq!(back, emb);
    }

    #[test]
    fn save_load_pi_within_precision_bound() {
        let vocab = Arc::new(Vocabulary::new(["pi"]).unwrap());
        let m = DMatrix::from_row_slice(1, 1, &[std::f64::consts::PI]);
        let emb = EmbeddingSet::new(vocab, m).unwrap();
        let mut buf = Vec::new();
        save_embeddings_to(&emb, &mut buf, 6).unwrap();
        let (back, _) =
            load_embeddings_from(&mut Cursor::new(buf), HeaderMode::Auto).unwrap();
        let err = (back.matrix()[(0, 0)] - std::f64::consts::PI).abs();
        assert!(err <= 1e-5, "round-trip error {err}");
    }

    #[test]
    fn save_to_unwritable_path_fails() {
        let (emb, _) = load_str("a 1.0", HeaderMode::Auto).unwrap();
        let r = save_embeddings_text(&emb, "/nonexistent-dir/x/emb.txt", 6);
        assert!(matches!(r, Err(Error::Io { .. })));
    }

    #[test]
    fn vocabulary_rejects_duplicates_and_empty() {
        assert!(Vocabulary::new(["a", "a"]).is_err());
        assert!(Vocabulary::new(Vec::<String>::new()).is_err());
    }

    #[test]
    fn vocabulary_index_is_consistent() {
        let v = Vocabulary::new(["x", "y", "z"]).unwrap();
        for i in 0..v.len() {
            assert_eq!(v.id(v.word(i)), Some(i));
        }
    }

    #[test]
    fn frequency_table_validates_sum() {
        let vocab = Arc::new(Vocabulary::new(["a", "b"]).unwrap());
        let bad = DVector::from_vec(vec![0.5, 0.6]);
        assert!(FrequencyTable::new(Arc::clone(&vocab), bad).is_err());
        let good = DVector::from_vec(vec![0.5, 0.5]);
        assert!(FrequencyTable::new(vocab, good).is_ok());
    }

    #[test]
    fn uniform_prior_weights_are_one_over_n() {
        let (emb, _) = load_str("a 1.0\nb 2.0\nc 3.0\nd 4.0", HeaderMode::Auto).unwrap();
        let w = Prior::Uniform.weights(&emb).unwrap();
        assert!(w.iter().all(|&x| x == 0.25));
    }

    #[test]
    fn zipfian_prior_rejects_vocab_mismatch() {
        let (emb, _) = load_str("a 1.0\nb 2.0", HeaderMode::Auto).unwrap();
        let other = Arc::new(Vocabulary::new(["b", "a"]).unwrap());
        let freq = FrequencyTable::uniform(other);
        assert!(matches!(
            Prior::Zipfian(&freq).weights(&emb),
            Err(Error::VocabularyMismatch)
        ));
    }
}
