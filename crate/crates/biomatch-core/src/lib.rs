//! Core engine for template-based biometric verification and identification.
//!
//! The crate is organised around the classic module split of a biometric
//! system:
//!
//! - [`metric`] — the comparison spaces (Hamming, Levenshtein, Euclidean,
//!   Chebyshev, cosine) and the dispatching [`metric::compare`] entry point.
//! - [`learner`] — a small feedforward network used as the feature
//!   extractor, with full-batch gradient-descent training, a
//!   circuit-to-network compiler, and a binary model format.
//! - [`matcher`] — threshold decisions, gallery search, and the
//!   FMR/FNMR/EER/ROC statistics.
//! - [`store`] — the template database: identifier generation,
//!   capacity-bounded storage, and a binary persistence format.
//! - [`protocol`] — the interactive enroll/verify/identify system built on
//!   the modules above, with explicit message transcripts.
//! - [`synth`] and [`experiment`] — synthetic data generation and the
//!   end-to-end evaluation pipeline behind the CLI.

pub mod experiment;
pub mod learner;
pub mod matcher;
pub mod metric;
pub mod protocol;
pub mod store;
pub mod synth;

pub(crate) mod wire;
