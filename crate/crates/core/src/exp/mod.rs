//! JSON-driven parameter sweeps with CSV output.
//!
//! A run expands an [`ExperimentSpec`] into one work item per
//! `(sweep value, seed)`, evaluates every scheme on the realization of that
//! seed, and writes `results.csv`, `timings.csv` and `manifest.json`.
//! Rates are converted to bits here and nowhere else.

mod format;
mod run;
mod spec;
mod summarize;

pub use format::fmt_float;
pub use run::{execute, prepare, run, Plan, ResultRow, RunOptions, RunReport};
pub use spec::{ExperimentSpec, SweepParam};
pub use summarize::{summarize, summarize_file, write_summary, SummaryRow};
