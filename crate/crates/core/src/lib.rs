//! Pairwise-ranking recommenders over matrix factorization, with
//! explainability-aware and propensity-debiased loss variants.
//!
//! The crate covers the full experimental loop for implicit-feedback
//! top-K recommendation:
//!
//! * [`dataset`] — ingestion, binarization, leave-one-out splitting and
//!   per-epoch triple sampling;
//! * [`explainability`] — item-item cosine neighborhoods and the sparse
//!   explainability matrix `E`;
//! * [`propensity`] — popularity-based exposure propensities and
//!   neighborhood propensities;
//! * [`model`] — the latent-factor scoring model and top-K generation;
//! * [`training`] — the five loss kinds (BPR, UBPR, EBPR, pUEBPR, UEBPR)
//!   as per-triple weights over a common `-log sigma(f)` core, SGD, and
//!   random hyperparameter search;
//! * [`evaluation`] — ranking, explainability and popularity-debiasing
//!   metrics under the leave-one-out and unbiased-test-set protocols;
//! * [`oracle`] — Monte Carlo verification of the estimators' bias
//!   properties on synthetic worlds with known exposure and relevance.
//!
//! The `pairrank` binary drives the pipeline; see the README for the
//! subcommand tour.

pub mod artifacts;
pub mod cli;
pub mod dataset;
pub mod error;
pub mod evaluation;
pub mod explainability;
pub mod model;
pub mod oracle;
pub mod propensity;
mod seeds;
pub mod training;

pub use error::{Error, Result};
