//! The sentence-similarity evaluation harness: tokenize, compose sentence
//! vectors, score pairs by cosine, and correlate with gold scores by
//! Spearman rank correlation. Also estimates word frequencies from the
//! evaluation dataset itself.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::corpus::{EmbeddingSet, FrequencyTable, StsDataset, Vocabulary};
use crate::error::{Error, Result};
use crate::transforms::top_singular_directions;

/// Clitic suffixes split off as separate tokens, longest first.
const CLITICS: &[&str] = &["n't", "'re", "'ve", "'ll", "'s", "'d", "'m"];

/// How token vectors are combined into one sentence vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CompositionKind {
    /// Unweighted average of in-vocabulary token vectors.
    Mean,
    /// Unweighted sum.
    Sum,
    /// Average weighted by `a / (a + p(w))`.
    SifWeightedMean { a: f64 },
}

/// Where common component removal is applied, if anywhere.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CcrMode {
    None,
    /// Fit on the composed sentence vectors of the evaluated set, then
    /// remove from each sentence vector (the original construction).
    SentenceLevel(usize),
    /// Estimate directions on the (SIF-weighted, when applicable) word
    /// vectors and remove them from the word vectors before composition.
    WordLevel(usize),
}

/// A sentence composition scheme for the harness.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompositionScheme {
    pub kind: CompositionKind,
    pub ccr: CcrMode,
}

impl Default for CompositionScheme {
    fn default() -> Self {
        Self {
            kind: CompositionKind::Mean,
            ccr: CcrMode::None,
        }
    }
}

impl CompositionScheme {
    fn validate(&self) -> Result<()> {
        if let CompositionKind::SifWeightedMean { a } = self.kind {
            if !(a > 0.0) || !a.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "sif parameter a must be positive, found {a}"
                )));
            }
        }
        match self.ccr {
            CcrMode::SentenceLevel(0) | CcrMode::WordLevel(0) => Err(Error::InvalidArgument(
                "ccr component count must be at least 1".into(),
            )),
            _ => Ok(()),
        }
    }
}

/// Outcome of one dataset evaluation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalResult {
    /// Spearman rank correlation between cosine predictions and gold
    /// scores, times 100.
    pub spearman_x100: f64,
    pub pairs_total: usize,
    /// Pairs where at least one side had no in-vocabulary token; these
    /// contribute prediction 0 instead of being dropped.
    pub pairs_skipped: usize,
    pub dataset_name: String,
}

impl EvalResult {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }
}

/// Deterministic rule-based tokenizer: lowercase, split on Unicode
/// whitespace, strip leading/trailing ASCII punctuation from each token,
/// then split one trailing clitic (`n't`, `'re`, `'ve`, `'ll`, `'s`, `'d`,
/// `'m`) into its own token. Empty tokens are dropped.
pub fn tokenize(sentence: &str) -> Vec<String> {
    let mut out = Vec::new();
    for raw in sentence.to_lowercase().split_whitespace() {
        let stripped = raw.trim_matches(|c: char| c.is_ascii_punctuation());
        if stripped.is_empty() {
            continue;
        }
        let mut pushed = false;
        for clitic in CLITICS {
            if let Some(stem) = stripped.strip_suffix(clitic) {
                if !stem.is_empty() {
                    out.push(stem.to_string());
                    out.push((*clitic).to_string());
                    pushed = true;
                }
                break;
            }
        }
        if !pushed {
            out.push(stripped.to_string());
        }
    }
    out
}

/// Composes a sentence vector from the in-vocabulary tokens of `sentence`.
/// Returns `None` when no token is in vocabulary.
pub fn compose(
    sentence: &str,
    emb: &EmbeddingSet,
    scheme: &CompositionScheme,
    freq: &FrequencyTable,
) -> Option<DVector<f64>> {
    let mut acc = DVector::zeros(emb.dim());
    let mut hits = 0usize;
    for token in tokenize(sentence) {
        let Some(id) = emb.vocab().id(&token) else {
            continue;
        };
        hits += 1;
        let row = emb.matrix().row(id);
        match scheme.kind {
            CompositionKind::Mean | CompositionKind::Sum => {
                acc += row.transpose();
            }
            CompositionKind::SifWeightedMean { a } => {
                let w = a / (a + freq.prob_of(&token));
                acc += w * row.transpose();
            }
        }
    }
    if hits == 0 {
        return None;
    }
    match scheme.kind {
        CompositionKind::Sum => Some(acc),
        CompositionKind::Mean | CompositionKind::SifWeightedMean { .. } => {
            Some(acc / hits as f64)
        }
    }
}

/// Cosine similarity; 0 when either vector has zero norm.
pub fn cosine(u: &DVector<f64>, v: &DVector<f64>) -> f64 {
    let nu = u.norm();
    let nv = v.norm();
    if nu == 0.0 || nv == 0.0 {
        return 0.0;
    }
    u.dot(v) / (nu * nv)
}

/// Average ranks (1-based) with ties assigned the mean of their positions.
fn average_ranks(xs: &[f64]) -> Vec<f64> {
    let n = xs.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && xs[order[j + 1]] == xs[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = rank;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman rank correlation with average-rank tie handling: the Pearson
/// correlation of the two rank vectors.
pub fn spearman(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::DimensionMismatch {
            expected: xs.len(),
            found: ys.len(),
        });
    }
    if xs.len() < 2 {
        return Err(Error::InvalidArgument(
            "spearman requires at least 2 observations".into(),
        ));
    }
    let rx = average_ranks(xs);
    let ry = average_ranks(ys);
    let n = xs.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for i in 0..xs.len() {
        let dx = rx[i] - mx;
        let dy = ry[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::Undefined(
            "spearman is undefined for constant input".into(),
        ));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Estimates word frequencies from the evaluation dataset itself: counts
/// tokens over both sides of every pair, restricted to `vocab`, normalized.
/// Vocabulary words absent from the dataset get probability 0.
pub fn estimate_testset_frequency(
    dataset: &StsDataset,
    vocab: Arc<Vocabulary>,
) -> Result<FrequencyTable> {
    let mut counts = DVector::zeros(vocab.len());
    for pair in &dataset.pairs {
        for sentence in [&pair.sentence1, &pair.sentence2] {
            for token in tokenize(sentence) {
                if let Some(id) = vocab.id(&token) {
                    counts[id] += 1.0;
                }
            }
        }
    }
    if counts.iter().all(|&c| c == 0.0) {
        return Err(Error::EmptyInput(
            "no in-vocabulary token in the dataset".into(),
        ));
    }
    FrequencyTable::from_weights(vocab, counts)
}

/// Runs the full evaluation: compose both sides of every pair, optionally
/// remove common components, score by cosine, and return Spearman x 100.
///
/// Pairs with an empty-composition side contribute prediction 0 and are
/// counted in `pairs_skipped`, keeping prediction and gold lengths equal.
pub fn eval_sts(
    dataset: &StsDataset,
    emb: &EmbeddingSet,
    scheme: &CompositionScheme,
    freq: &FrequencyTable,
) -> Result<EvalResult> {
    scheme.validate()?;

    // Word-level CCR rewrites the word vectors before composition.
    let corrected;
    let emb = match scheme.ccr {
        CcrMode::WordLevel(k) => {
            corrected = remove_word_components(emb, scheme, freq, k)?;
            &corrected
        }
        _ => emb,
    };

    let composed: Vec<(Option<DVector<f64>>, Option<DVector<f64>>)> = dataset
        .pairs
        .par_iter()
        .map(|pair| {
            (
                compose(&pair.sentence1, emb, scheme, freq),
                compose(&pair.sentence2, emb, scheme, freq),
            )
        })
        .collect();

    let composed = match scheme.ccr {
        CcrMode::SentenceLevel(k) => remove_sentence_components(composed, k)?,
        _ => composed,
    };

    let mut predictions = Vec::with_capacity(dataset.len());
    let mut skipped = 0usize;
    for (s1, s2) in &composed {
        match (s1, s2) {
            (Some(u), Some(v)) => predictions.push(cosine(u, v)),
            _ => {
                skipped += 1;
                predictions.push(0.0);
            }
        }
    }
    let golds: Vec<f64> = dataset.pairs.iter().map(|p| p.gold).collect();
    let rho = spearman(&predictions, &golds)?;
    Ok(EvalResult {
        spearman_x100: rho * 100.0,
        pairs_total: dataset.len(),
        pairs_skipped: skipped,
        dataset_name: dataset.name.clone(),
    })
}

/// Removes the top `k` singular directions of the (SIF-weighted, when the
/// scheme weights words) word-vector collection from the raw word vectors.
fn remove_word_components(
    emb: &EmbeddingSet,
    scheme: &CompositionScheme,
    freq: &FrequencyTable,
    k: usize,
) -> Result<EmbeddingSet> {
    let directions = match scheme.kind {
        CompositionKind::SifWeightedMean { a } => {
            let mut weighted = emb.matrix().clone();
            for i in 0..weighted.nrows() {
                let w = a / (a + freq.prob_of(emb.vocab().word(i)));
                weighted.row_mut(i).scale_mut(w);
            }
            top_singular_directions(&weighted, k)?
        }
        _ => top_singular_directions(emb.matrix(), k)?,
    };
    let deflated = emb.matrix() - emb.matrix() * &directions * directions.transpose();
    EmbeddingSet::new(emb.vocab_arc(), deflated)
}

/// Fits CCR on all nonempty composed sentence vectors and removes the
/// components from each of them.
#[allow(clippy::type_complexity)]
fn remove_sentence_components(
    composed: Vec<(Option<DVector<f64>>, Option<DVector<f64>>)>,
    k: usize,
) -> Result<Vec<(Option<DVector<f64>>, Option<DVector<f64>>)>> {
    let vectors: Vec<&DVector<f64>> = composed
        .iter()
        .flat_map(|(a, b)| [a.as_ref(), b.as_ref()])
        .flatten()
        .collect();
    if vectors.is_empty() {
        return Ok(composed);
    }
    let dim = vectors[0].len();
    let matrix = DMatrix::from_fn(vectors.len(), dim, |i, j| vectors[i][j]);
    let directions = top_singular_directions(&matrix, k)?;
    let remove = |v: Option<DVector<f64>>| {
        v.map(|v| {
            let coeffs = directions.transpose() * &v;
            v - &directions * coeffs
        })
    };
    Ok(composed
        .into_iter()
        .map(|(a, b)| (remove(a), remove(b)))
        .collect())
}
