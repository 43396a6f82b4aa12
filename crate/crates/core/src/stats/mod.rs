//! Paired hypothesis tests, multiple-comparison control and confidence
//! intervals, built on a self-contained Student-t implementation.

mod dist;
mod humaneval;
mod hypothesis;
mod interval;
mod special;

pub use dist::{normal_quantile, student_t_cdf, student_t_isf, student_t_pdf, student_t_sf};
pub use humaneval::{
    parse_human_eval, render_table, run_battery, Battery, BatteryOptions, BatteryTest, DroppedPairs,
    HumanEvalRow, IutBlock, SamplerSummary,
};
pub use hypothesis::{
    bonferroni, iut, paired_ttest, summarize_family, uncorrected, AlphaDecision, Alternative, IutResult,
    MultipleComparisonSummary, PairedScores, RejectionCount, TTestResult,
};
pub use interval::{mean_ci, mean_sd, wilson_interval, Interval};
pub use special::{beta_inc_reg, ln_beta, ln_gamma};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("degrees of freedom must be >= 1, got {0}")]
    InvalidDof(u64),
    #[error("no input values")]
    EmptyInput,
    #[error("need at least {needed} observations, got {got}")]
    InsufficientData { needed: usize, got: usize },
    /// Paired differences are constant and non-zero; `t` is the limiting
    /// `±inf` and `p` its one-sided tail under the requested alternative.
    #[error("paired differences have zero variance (mean difference {mean_diff}); t = {t}, p = {p}")]
    DegenerateVariance { mean_diff: f64, t: f64, p: f64 },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("data error: {0}")]
    Data(String),
}

pub type Result<T> = std::result::Result<T, StatsError>;
