//! Organizational insider-threat security maturity assessment.
//!
//! The pipeline runs in five stages:
//!
//! 1. [`survey`]: questionnaire schema and recoding of categorical answers.
//! 2. [`preprocess`]: loading, cleaning, composite dimension scores and
//!    threshold maturity labels, descriptive statistics.
//! 3. [`preprocess::stratified_split`]: class-preserving train/test split.
//! 4. [`hmm`]: diagonal Gaussian hidden Markov model over composite scores,
//!    fitted with Baum-Welch and used to classify each organization.
//! 5. [`forest`]: random forest validation of the labels, with
//!    [`explain`] providing exact Shapley values and LIME surrogates.
//!
//! [`synth`] generates survey datasets from a known model and [`pipeline`]
//! wires everything into the assessment report emitted by the `itxml` binary.

pub mod error;
pub mod explain;
pub mod forest;
pub mod hmm;
pub mod pipeline;
pub mod preprocess;
pub mod rng;
pub mod survey;
pub mod synth;

pub use error::{Error, ErrorKind, Result};
pub use preprocess::{MaturityLabel, ScoredDataset};
pub use survey::SurveyDefinition;
