//! First- and second-moment symmetry scores of an embedding set under a
//! word-frequency prior.
//!
//! The first score measures how close the weighted barycenter is to the
//! origin relative to the average vector length; the second measures the
//! flatness of the eigenspectrum of the weighted covariance via normalized
//! spectral entropy. Both take values in [0, 1], with 1 meaning exact
//! first- or second-moment symmetry.

use nalgebra::DVector;
use serde::Serialize;

use crate::corpus::{EmbeddingSet, Prior, PriorKind};
use crate::error::{Error, Result};
use crate::transforms::{right_singular_vectors, scaled_centered, weighted_mean};

/// Both symmetry scores plus the covariance eigenvalues they derive from.
#[derive(Debug, Clone, Serialize)]
pub struct SymmetryReport {
    pub sym1: f64,
    pub sym2: f64,
    pub prior_kind: PriorKind,
    pub dim: usize,
    /// Eigenvalues of the weighted covariance, nonincreasing, all `dim` of
    /// them including zeros.
    pub eigenvalues: Vec<f64>,
}

impl SymmetryReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }
}

/// Degree of centrality: `1 - ||E[v]|| / E[||v||]`.
///
/// Equals 1 iff the weighted mean is the zero vector; scale-invariant.
pub fn sym1(emb: &EmbeddingSet, prior: Prior<'_>) -> Result<f64> {
    let weights = prior.weights(emb)?;
    sym1_impl(emb, &weights)
}

fn sym1_impl(emb: &EmbeddingSet, weights: &DVector<f64>) -> Result<f64> {
    let mean = weighted_mean(emb.matrix(), weights);
    let mean_norm: f64 = (0..emb.len())
        .map(|i| weights[i] * emb.matrix().row(i).norm())
        .sum();
    if mean_norm <= 0.0 {
        return Err(Error::Undefined(
            "expected vector length is zero (all weighted vectors are zero)".into(),
        ));
    }
    Ok((1.0 - mean.norm() / mean_norm).clamp(0.0, 1.0))
}

/// Degree of isotropy around the barycenter: the Shannon entropy of the
/// normalized covariance eigenspectrum divided by `log d`.
///
/// The eigenvalues are the squared singular values of the sqrt(weight)-scaled
/// centered matrix; terms with zero eigenvalue contribute nothing
/// (`0 log 0 = 0`). Natural log is used; the base cancels after
/// normalization.
pub fn sym2(emb: &EmbeddingSet, prior: Prior<'_>) -> Result<f64> {
    let weights = prior.weights(emb)?;
    let eigenvalues = covariance_eigenvalues(emb, &weights)?;
    sym2_from_eigenvalues(&eigenvalues, emb.dim())
}

/// Eigenvalues of the weighted covariance, nonincreasing, zero-padded to `d`.
fn covariance_eigenvalues(emb: &EmbeddingSet, weights: &DVector<f64>) -> Result<Vec<f64>> {
    let mean = weighted_mean(emb.matrix(), weights);
    let scaled = scaled_centered(emb.matrix(), weights, &mean);
    let (sv, _) = right_singular_vectors(scaled)?;
    let mut eigenvalues = vec![0.0; emb.dim()];
    for (i, &s) in sv.iter().enumerate().take(emb.dim()) {
        eigenvalues[i] = s * s;
    }
    Ok(eigenvalues)
}

fn sym2_from_eigenvalues(eigenvalues: &[f64], dim: usize) -> Result<f64> {
    if dim < 2 {
        return Err(Error::InvalidArgument(
            "sym2 requires dimension >= 2 (log d vanishes at d = 1)".into(),
        ));
    }
    let total: f64 = eigenvalues.iter().sum();
    if total <= 0.0 {
        return Err(Error::Degenerate(
            "weighted covariance is zero; spectrum entropy undefined".into(),
        ));
    }
    let entropy: f64 = eigenvalues
        .iter()
        .map(|&l| {
            let q = l / total;
            if q > 0.0 {
                -q * q.ln()
            } else {
                0.0
            }
        })
        .sum();
    Ok((entropy / (dim as f64).ln()).clamp(0.0, 1.0))
}

/// Computes both scores with shared intermediates and exposes the
/// eigenspectrum.
pub fn symmetry_report(emb: &EmbeddingSet, prior: Prior<'_>) -> Result<SymmetryReport> {
    let weights = prior.weights(emb)?;
    let sym1 = sym1_impl(emb, &weights)?;
    let eigenvalues = covariance_eigenvalues(emb, &weights)?;
    let sym2 = sym2_from_eigenvalues(&eigenvalues, emb.dim())?;
    Ok(SymmetryReport {
        sym1,
        sym2,
        prior_kind: prior.kind(),
        dim: emb.dim(),
        eigenvalues,
    })
}
