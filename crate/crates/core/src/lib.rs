//! Frequency-weighted ("Zipfian") centering and whitening of static word
//! embeddings, symmetry metrics for embedding spaces under arbitrary
//! word-frequency priors, a sentence-similarity evaluation harness, and
//! diagnostic probes for vector norms and partition-function constancy.
//!
//! The key idea implemented here: every expectation over word vectors
//! (mean, covariance, symmetry scores, partition functions) is weighted by
//! the empirical word frequency `p(w)` instead of the uniform `1/|V|`.
//! Classical post-processing is recovered exactly by the uniform prior.
//!
//! # Quick start
//!
//! ```
//! use std::io::Cursor;
//! use zipfian_whitening::corpus::{load_embeddings_from, load_frequency_from,
//!     intersect_and_normalize, HeaderMode, Prior};
//! use zipfian_whitening::transforms::{WhiteningModel, DEFAULT_SV_FLOOR_RATIO};
//! use zipfian_whitening::symmetry::symmetry_report;
//!
//! # fn main() -> Result<(), zipfian_whitening::error::Error> {
//! let emb_text = "hot 1.0 0.0\ncold -1.0 0.5\nwarm 0.3 -1.0\n";
//! let freq_text = "hot 6\ncold 3\nwarm 1\nmissing 9\n";
//!
//! let (emb, _) = load_embeddings_from(&mut Cursor::new(emb_text), HeaderMode::Auto)?;
//! let counts = load_frequency_from(&mut Cursor::new(freq_text))?;
//! let (emb, freq) = intersect_and_normalize(&emb, &counts)?;
//!
//! let model = WhiteningModel::fit(&emb, Prior::Zipfian(&freq), DEFAULT_SV_FLOOR_RATIO)?;
//! let whitened = model.apply(&emb)?;
//!
//! let report = symmetry_report(&whitened, Prior::Zipfian(&freq))?;
//! assert!((report.sym1 - 1.0).abs() < 1e-9);
//! assert!((report.sym2 - 1.0).abs() < 1e-9);
//! # Ok(())
//! # }
//! ```

pub mod analysis;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod symmetry;
pub mod transforms;

pub use corpus::{EmbeddingSet, FrequencyTable, Prior, PriorKind, StsDataset, Vocabulary};
pub use error::{Error, Result};
