//! Evaluation harness for three-way ideological stance classification of
//! social-media comments (Neutral / Pro-Palestine / Pro-Israel).
//!
//! The pipeline is split into independent stages:
//!
//! - [`corpus`]: ingestion, keyword filtering, deduplication, truncation,
//!   corpus statistics and the stratified 70:15:15 split.
//! - [`annotation`]: majority-vote gold labels and Fleiss' kappa.
//! - [`vectorize`]: bag-of-words / TF-IDF features and a softmax-regression
//!   baseline that runs without any model endpoint.
//! - [`prompt`]: prompting strategies compiled into one- or two-phase plans.
//! - [`llm`]: HTTP completion endpoints with retry/backoff and a rule-based
//!   mock model.
//! - [`parse`]: label and score extraction from free-form completions.
//! - [`metrics`]: confusion matrix, accuracy, macro and class-wise metrics.
//! - [`runner`]: resumable evaluation runs and report emission.
//!
//! The `stancebench` binary exposes the same stages as subcommands; see
//! [`cli`].

pub mod annotation;
pub mod cli;
pub mod corpus;
pub mod llm;
pub mod metrics;
pub mod parse;
pub mod prompt;
pub mod runner;
mod shuffle;
pub mod vectorize;

pub use corpus::{LabeledComment, RawComment, StanceLabel};
