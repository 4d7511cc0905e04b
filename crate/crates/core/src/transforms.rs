//! Embedding-space corrections: frequency-weighted centering and whitening,
//! all-but-the-top, SIF weights, common component removal, and the
//! token-level variants.
//!
//! Whitening fits an affine transform from the fitted set: subtract the
//! weighted mean, then project onto the right singular vectors of the
//! sqrt(weight)-scaled centered matrix, scaled by the inverse singular
//! values. On the fitting set the result has weighted mean zero and weighted
//! second moment equal to the identity on the retained directions.
//!
//! Uniform mode uses weights 1/|V|, so it is exactly the constant-prior
//! special case of the weighted path. This differs from the sample-covariance
//! convention (1/(n-1)) by a global factor of sqrt((n-1)/n) on all outputs,
//! which cancels in any cosine-based evaluation.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::corpus::{EmbeddingSet, FrequencyTable, Prior, PriorKind};
use crate::error::{Error, Result};

/// Default ratio under which trailing singular values are dropped:
/// directions with `sigma_i <= ratio * sigma_1` are not retained.
pub const DEFAULT_SV_FLOOR_RATIO: f64 = 1e-10;

/// Default SIF weighting parameter `a`.
pub const DEFAULT_SIF_A: f64 = 1e-3;

/// Default number of principal components removed by all-but-the-top.
pub const DEFAULT_ABTT_COMPONENTS: usize = 3;

/// Default number of components removed by common component removal.
pub const DEFAULT_CCR_COMPONENTS: usize = 1;

/// A fitted (weighted) centering transform: subtracts the weighted mean.
#[derive(Debug, Clone, PartialEq)]
pub struct CenteringModel {
    mean: DVector<f64>,
    prior_kind: PriorKind,
}

impl CenteringModel {
    /// Fits the weighted mean `sum_i p(w_i) w_i` of `emb` under `prior`.
    pub fn fit(emb: &EmbeddingSet, prior: Prior<'_>) -> Result<Self> {
        let weights = prior.weights(emb)?;
        Ok(Self {
            mean: weighted_mean(emb.matrix(), &weights),
            prior_kind: prior.kind(),
        })
    }

    /// Subtracts the fitted mean from every row.
    pub fn apply(&self, emb: &EmbeddingSet) -> Result<EmbeddingSet> {
        if emb.dim() != self.mean.len() {
            return Err(Error::DimensionMismatch {
                expected: self.mean.len(),
                found: emb.dim(),
            });
        }
        let mut out = emb.matrix().clone();
        for j in 0..out.ncols() {
            let mut col = out.column_mut(j);
            col.add_scalar_mut(-self.mean[j]);
        }
        EmbeddingSet::new(emb.vocab_arc(), out)
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn prior_kind(&self) -> PriorKind {
        self.prior_kind
    }
}

/// A fitted (weighted) whitening transform.
///
/// `apply` maps any vector v to `(v - mean) * projection`, where `projection`
/// is `V_k * diag(1/sigma_k)` from the SVD of the sqrt(weight)-scaled centered
/// fitting matrix, restricted to the `retained` directions whose singular
/// value exceeds the floor.
#[derive(Debug, Clone, PartialEq)]
pub struct WhiteningModel {
    mean: DVector<f64>,
    projection: DMatrix<f64>,
    singular_values: DVector<f64>,
    retained: usize,
    prior_kind: PriorKind,
}

impl WhiteningModel {
    /// Fits a whitening transform on `emb` under `prior`.
    ///
    /// Directions with `sigma_i <= sv_floor_ratio * sigma_1` are dropped,
    /// shrinking the output dimension instead of amplifying noise through
    /// near-zero singular values.
    pub fn fit(emb: &EmbeddingSet, prior: Prior<'_>, sv_floor_ratio: f64) -> Result<Self> {
        if emb.len() < 2 {
            return Err(Error::InvalidArgument(
                "whitening requires at least 2 vectors".into(),
            ));
        }
        let weights = prior.weights(emb)?;
        let fitted = fit_weighted_whitening(emb.matrix(), &weights, sv_floor_ratio)?;
        Ok(Self {
            mean: fitted.mean,
            projection: fitted.projection,
            singular_values: fitted.singular_values,
            retained: fitted.retained,
            prior_kind: prior.kind(),
        })
    }

    /// Applies the transform to every row of `emb`; the output has
    /// `retained` columns.
    pub fn apply(&self, emb: &EmbeddingSet) -> Result<EmbeddingSet> {
        if emb.dim() != self.mean.len() {
            return Err(Error::DimensionMismatch {
                expected: self.mean.len(),
                found: emb.dim(),
            });
        }
        let mut centered = emb.matrix().clone();
        for j in 0..centered.ncols() {
            centered.column_mut(j).add_scalar_mut(-self.mean[j]);
        }
        EmbeddingSet::new(emb.vocab_arc(), centered * &self.projection)
    }

    /// Applies the transform to a single vector (e.g. one not in the
    /// fitting set).
    pub fn apply_vector(&self, v: &DVector<f64>) -> Result<DVector<f64>> {
        if v.len() != self.mean.len() {
            return Err(Error::DimensionMismatch {
                expected: self.mean.len(),
                found: v.len(),
            });
        }
        Ok(self.projection.transpose() * (v - &self.mean))
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    /// `dim x retained` projection matrix.
    pub fn projection(&self) -> &DMatrix<f64> {
        &self.projection
    }

    /// All singular values of the scaled centered fitting matrix, in
    /// nonincreasing order, zero-padded to the input dimension.
    pub fn singular_values(&self) -> &DVector<f64> {
        &self.singular_values
    }

    /// Number of retained directions (output dimension).
    pub fn retained(&self) -> usize {
        self.retained
    }

    /// Input dimension.
    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn prior_kind(&self) -> PriorKind {
        self.prior_kind
    }

    /// Serializes to the documented JSON schema.
    pub fn to_json(&self) -> Result<String> {
        let repr = WhiteningModelRepr {
            prior_kind: self.prior_kind,
            dim: self.dim(),
            retained: self.retained,
            mean: self.mean.iter().copied().collect(),
            singular_values: self.singular_values.iter().copied().collect(),
            projection: row_major(&self.projection),
        };
        Ok(serde_json::to_string(&repr)?)
    }

    /// Deserializes from the documented JSON schema.
    pub fn from_json(json: &str) -> Result<Self> {
        let repr: WhiteningModelRepr = serde_json::from_str(json)?;
        let WhiteningModelRepr {
            prior_kind,
            dim,
            retained,
            mean,
            singular_values,
            projection,
        } = repr;
        if retained == 0 || retained > dim {
            return Err(Error::InvalidArgument(format!(
                "retained must be in 1..={dim}, found {retained}"
            )));
        }
        if mean.len() != dim
            || singular_values.len() != dim
            || projection.len() != dim * retained
        {
            return Err(Error::InvalidArgument(
                "inconsistent field lengths in whitening model".into(),
            ));
        }
        if singular_values.windows(2).any(|w| w[0] < w[1])
            || singular_values.iter().any(|&s| !(s >= 0.0))
        {
            return Err(Error::InvalidArgument(
                "singular values must be nonincreasing and nonnegative".into(),
            ));
        }
        let projection = DMatrix::from_row_iterator(dim, retained, projection);
        if projection.iter().any(|v| !v.is_finite()) || mean.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(
                "whitening model contains a non-finite entry".into(),
            ));
        }
        Ok(Self {
            mean: DVector::from_vec(mean),
            projection,
            singular_values: DVector::from_vec(singular_values),
            retained,
            prior_kind,
        })
    }
}

#[derive(Serialize, Deserialize)]
struct WhiteningModelRepr {
    prior_kind: PriorKind,
    dim: usize,
    retained: usize,
    mean: Vec<f64>,
    singular_values: Vec<f64>,
    projection: Vec<f64>,
}

fn row_major(m: &DMatrix<f64>) -> Vec<f64> {
    let mut out = Vec::with_capacity(m.nrows() * m.ncols());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            out.push(m[(i, j)]);
        }
    }
    out
}

/// `mean[j] = sum_i weights[i] * matrix[i, j]`.
pub(crate) fn weighted_mean(matrix: &DMatrix<f64>, weights: &DVector<f64>) -> DVector<f64> {
    DVector::from_iterator(
        matrix.ncols(),
        matrix.column_iter().map(|col| col.dot(weights)),
    )
}

/// Rows `sqrt(weights[i]) * (matrix[i, :] - mean)`.
pub(crate) fn scaled_centered(
    matrix: &DMatrix<f64>,
    weights: &DVector<f64>,
    mean: &DVector<f64>,
) -> DMatrix<f64> {
    let sqrt_w: Vec<f64> = weights.iter().map(|w| w.sqrt()).collect();
    let mut out = DMatrix::zeros(matrix.nrows(), matrix.ncols());
    for j in 0..matrix.ncols() {
        let m = mean[j];
        let src = matrix.column(j);
        let mut dst = out.column_mut(j);
        for i in 0..matrix.nrows() {
            dst[i] = sqrt_w[i] * (src[i] - m);
        }
    }
    out
}

/// Thin SVD keeping only singular values and right singular vectors, sorted
/// by nonincreasing singular value. Each direction's sign is fixed so that
/// its largest-magnitude component is positive, which pins the output of
/// otherwise sign-ambiguous decompositions.
///
/// Computed as Householder QR followed by a one-sided Jacobi SVD of the
/// triangular factor. nalgebra's implicit-shift bidiagonal iteration can
/// silently lose accuracy on the heavily row-graded matrices produced by
/// sqrt-frequency scaling; the QR + Jacobi route keeps full precision and
/// is deterministic.
pub(crate) fn right_singular_vectors(m: DMatrix<f64>) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let rank_bound = m.nrows().min(m.ncols());
    let reduced = if m.nrows() > m.ncols() {
        m.qr().unpack_r()
    } else {
        m
    };
    let (sv, mut v) = jacobi_right_singular(reduced, rank_bound)?;
    for mut col in v.column_iter_mut() {
        let mut pivot = 0;
        let mut best = 0.0;
        for (i, &x) in col.iter().enumerate() {
            if x.abs() > best {
                best = x.abs();
                pivot = i;
            }
        }
        if col[pivot] < 0.0 {
            col.neg_mut();
        }
    }
    Ok((sv, v))
}

/// One-sided (Hestenes) Jacobi SVD: repeatedly rotates column pairs of `a`
/// until all pairs are mutually orthogonal, accumulating the rotations into
/// V. Column norms are then the singular values. Returns the largest
/// `rank_bound` singular values (descending) and the matching V columns.
fn jacobi_right_singular(
    mut a: DMatrix<f64>,
    rank_bound: usize,
) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let d = a.ncols();
    let mut v = DMatrix::identity(d, d);
    let tol = f64::EPSILON;
    let max_sweeps = 64;

    let mut converged = false;
    for _ in 0..max_sweeps {
        let mut rotated = false;
        for i in 0..d.saturating_sub(1) {
            for j in (i + 1)..d {
                let alpha = a.column(i).dot(&a.column(i));
                let beta = a.column(j).dot(&a.column(j));
                let gamma = a.column(i).dot(&a.column(j));
                if gamma.abs() <= tol * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate_columns(&mut a, i, j, c, s);
                rotate_columns(&mut v, i, j, c, s);
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::Degenerate("SVD failed to converge".into()));
    }

    let mut order: Vec<usize> = (0..d).collect();
    let norms: Vec<f64> = (0..d).map(|j| a.column(j).norm()).collect();
    order.sort_by(|&x, &y| norms[y].total_cmp(&norms[x]));
    let kept = rank_bound.min(d);
    let sv = DVector::from_iterator(kept, order.iter().take(kept).map(|&j| norms[j]));
    let v_sorted = DMatrix::from_fn(d, kept, |r, c| v[(r, order[c])]);
    Ok((sv, v_sorted))
}

/// Applies the Givens rotation `[c, -s; s, c]` to columns `i` and `j`.
fn rotate_columns(m: &mut DMatrix<f64>, i: usize, j: usize, c: f64, s: f64) {
    for r in 0..m.nrows() {
        let x = m[(r, i)];
        let y = m[(r, j)];
        m[(r, i)] = c * x - s * y;
        m[(r, j)] = s * x + c * y;
    }
}

pub(crate) struct FittedWhitening {
    pub mean: DVector<f64>,
    pub projection: DMatrix<f64>,
    /// Nonincreasing, zero-padded to the input dimension.
    pub singular_values: DVector<f64>,
    pub retained: usize,
}

/// Weighted whitening over a raw matrix and a nonnegative weight vector that
/// sums to 1. Shared by the type-level and token-level entry points.
pub(crate) fn fit_weighted_whitening(
    matrix: &DMatrix<f64>,
    weights: &DVector<f64>,
    sv_floor_ratio: f64,
) -> Result<FittedWhitening> {
    if !(sv_floor_ratio > 0.0 && sv_floor_ratio < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "sv_floor_ratio must be in (0, 1), found {sv_floor_ratio}"
        )));
    }
    let dim = matrix.ncols();
    let mean = weighted_mean(matrix, weights);
    let scaled = scaled_centered(matrix, weights, &mean);
    let (sv, v) = right_singular_vectors(scaled)?;
    if sv.len() == 0 || !(sv[0] > 0.0) {
        return Err(Error::Degenerate(
            "weighted covariance is zero (all vectors identical under the prior)".into(),
        ));
    }
    let floor = sv_floor_ratio * sv[0];
    let retained = sv.iter().take_while(|&&s| s > floor).count();
    let projection = DMatrix::from_fn(dim, retained, |i, j| v[(i, j)] / sv[j]);
    let mut padded = DVector::zeros(dim);
    for (i, &s) in sv.iter().enumerate().take(dim) {
        padded[i] = s;
    }
    Ok(FittedWhitening {
        mean,
        projection,
        singular_values: padded,
        retained,
    })
}

/// All-but-the-top: uniform centering followed by removal of the projections
/// onto the top `num_components` principal directions of the centered set.
pub fn abtt(emb: &EmbeddingSet, num_components: usize) -> Result<EmbeddingSet> {
    if num_components == 0 || num_components >= emb.dim() {
        return Err(Error::InvalidArgument(format!(
            "abtt components must be in 1..{}, found {num_components}",
            emb.dim()
        )));
    }
    let uniform = DVector::repeat(emb.len(), 1.0 / emb.len() as f64);
    let mean = weighted_mean(emb.matrix(), &uniform);
    let mut centered = emb.matrix().clone();
    for j in 0..centered.ncols() {
        centered.column_mut(j).add_scalar_mut(-mean[j]);
    }
    let (_, v) = right_singular_vectors(centered.clone())?;
    let top = v.columns(0, num_components.min(v.ncols()));
    let deflated = &centered - &centered * top * top.transpose();
    EmbeddingSet::new(emb.vocab_arc(), deflated)
}

/// Common component removal: subtracts the projection onto the top
/// `num_components` singular directions of the (uncentered) collection.
pub fn common_component_removal(
    vectors: &DMatrix<f64>,
    num_components: usize,
) -> Result<DMatrix<f64>> {
    let top = top_singular_directions(vectors, num_components)?;
    Ok(vectors - vectors * &top * top.transpose())
}

/// Top `k` right singular directions of the uncentered collection `m`,
/// as a `d x k` matrix. Requires `1 <= k < min(rows, cols)`.
pub(crate) fn top_singular_directions(m: &DMatrix<f64>, k: usize) -> Result<DMatrix<f64>> {
    let limit = m.nrows().min(m.ncols());
    if k == 0 || k >= limit {
        return Err(Error::InvalidArgument(format!(
            "component count must be in 1..{limit}, found {k}"
        )));
    }
    let (_, v) = right_singular_vectors(m.clone())?;
    Ok(v.columns(0, k.min(v.ncols())).into_owned())
}

/// SIF weights `a / (a + p(w))` per vocabulary word.
pub fn sif_weights(freq: &FrequencyTable, a: f64) -> Result<DVector<f64>> {
    if !(a > 0.0) || !a.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "sif parameter a must be positive, found {a}"
        )));
    }
    Ok(DVector::from_iterator(
        freq.len(),
        freq.probs().iter().map(|&p| a / (a + p)),
    ))
}

/// How token vectors are weighted when fitting a token-level transform.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TokenWeighting {
    /// Every token weighs 1/n. Under the shared-vector assumption this
    /// equals type-level fitting with the empirical type frequency.
    TokenUniform,
    /// Token t weighs `1 / (|distinct types| * count(type(t)))`, removing
    /// the implicit type frequencies; equals type-level fitting with the
    /// uniform prior.
    PseudoUniform,
}

/// Which stage of the transform to apply at the token level.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TokenTransform {
    Center,
    Whiten,
}

/// Weights `1 / (|distinct types| * count(type(t)))` for each token. The
/// weights sum to 1 exactly in rational arithmetic.
pub fn pseudo_uniform_token_weights(type_ids: &[usize]) -> Result<Vec<f64>> {
    if type_ids.is_empty() {
        return Err(Error::EmptyInput("token list".into()));
    }
    let mut counts: std::collections::HashMap<usize, usize> = std::collections::HashMap::new();
    for &t in type_ids {
        *counts.entry(t).or_insert(0) += 1;
    }
    let distinct = counts.len() as f64;
    Ok(type_ids
        .iter()
        .map(|t| 1.0 / (distinct * counts[t] as f64))
        .collect())
}

/// Centers or whitens a token multiset (one row per token occurrence),
/// delegating to the weighted machinery with token-uniform or
/// pseudo-uniform weights as the prior.
pub fn token_center_whiten(
    type_ids: &[usize],
    vectors: &DMatrix<f64>,
    weighting: TokenWeighting,
    transform: TokenTransform,
    sv_floor_ratio: f64,
) -> Result<DMatrix<f64>> {
    if type_ids.is_empty() || vectors.nrows() == 0 {
        return Err(Error::EmptyInput("token list".into()));
    }
    if type_ids.len() != vectors.nrows() {
        return Err(Error::DimensionMismatch {
            expected: type_ids.len(),
            found: vectors.nrows(),
        });
    }
    let n = vectors.nrows();
    let weights = match weighting {
        TokenWeighting::TokenUniform => DVector::repeat(n, 1.0 / n as f64),
        TokenWeighting::PseudoUniform => {
            DVector::from_vec(pseudo_uniform_token_weights(type_ids)?)
        }
    };
    match transform {
        TokenTransform::Center => {
            let mean = weighted_mean(vectors, &weights);
            let mut out = vectors.clone();
            for j in 0..out.ncols() {
                out.column_mut(j).add_scalar_mut(-mean[j]);
            }
            Ok(out)
        }
        TokenTransform::Whiten => {
            let fitted = fit_weighted_whitening(vectors, &weights, sv_floor_ratio)?;
            let mut centered = vectors.clone();
            for j in 0..centered.ncols() {
                centered.column_mut(j).add_scalar_mut(-fitted.mean[j]);
            }
            Ok(centered * fitted.projection)
        }
    }
}
