//! Classifier ensembles combined through justifiable information granules.
//!
//! A pool of heterogeneous base classifiers emits a `K x M` matrix of class
//! posteriors for every observation. Instead of collapsing each class column
//! to a point statistic (sum, median, ...), the granular combiner wraps the
//! column in an interval that balances how many classifier outputs it covers
//! against how narrow it is, then de-granulates each interval back to a
//! single membership grade and predicts the class with the largest grade.
//!
//! The crate is organised bottom-up:
//!
//! * [`granule`] builds a single interval granule from a numeric sample.
//! * [`metadata`] holds per-observation posterior profiles and the stacked
//!   training meta-matrix.
//! * [`learners`] provides the base learners that produce those posteriors.
//! * [`combiners`] turns a profile into a decision: fixed rules, Decision
//!   Template, and the granular combiner.
//! * [`training`] generates cross-validated meta-data, selects the
//!   specificity weight and refits the ensemble.
//! * [`evaluation`] runs the repeated cross-validation protocol with
//!   error rate, macro-F1, Wilcoxon comparisons, rankings and
//!   bias/variance diagnostics.

pub mod combiners;
pub mod error;
pub mod evaluation;
pub mod granule;
pub mod learners;
pub mod metadata;
pub mod seed;
pub mod training;

pub use error::{Error, Result};
