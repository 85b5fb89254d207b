//! Effective-faithfulness toolkit for abstractive summarization.
//!
//! * [`text_metrics`]: tokenization, greedy extractive fragments, coverage
//!   and density.
//! * [`corpus`]: line-delimited corpus ingestion and coverage quartiles.
//! * [`annotations`]: human judgments aggregated into faithfulness scores.
//! * [`tradeoff`]: the control curve, effective faithfulness, correlation.
//! * [`selection`]: human-judgment oracles and the threshold-tuned selector.
//! * [`cli`]: the `faithcurve` command-line front end.
//!
//! Batch work runs on the rayon pool when the `parallel` feature is on (the
//! default); see [`parallel::Execution`].

pub mod annotations;
pub mod cli;
pub mod corpus;
pub mod error;
pub mod parallel;
pub mod selection;
pub mod synthetic;
pub mod text_metrics;
pub mod tradeoff;
pub mod units;

pub use error::{Error, Result};
pub use parallel::Execution;
