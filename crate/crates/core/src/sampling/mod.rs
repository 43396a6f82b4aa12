//! Temperature-scaled truncation samplers.
//!
//! The pipeline is `logits -> temperature -> softmax -> truncation -> renormalize -> draw`.
//! Every stage is a pure function; the only randomness is a single uniform
//! variate derived from `(seed, draw_index)`, so draws are reproducible and
//! independent of evaluation order.

mod config;
mod draw;
mod io;
mod logits;
mod truncate;

pub use config::{Sampler, SamplerConfig, SamplerKind, TruncationOrder};
pub use draw::{argmax, draw_uniform, inverse_cdf, sample, sample_trace, sampling_distribution, SampleTrace};
pub use io::{parse_logit_csv, read_logit_csv};
pub use logits::{apply_temperature, stable_softmax, LogitVector, ProbabilityDistribution};
pub use truncate::{renormalize, truncate, truncate_min_p, truncate_top_k, truncate_top_p, KeepSet};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SamplingError {
    #[error("invalid logits: {0}")]
    InvalidLogits(String),
    #[error("invalid temperature {0}: must be > 0 (use 0 only through sample() for greedy)")]
    InvalidTemperature(f64),
    #[error("invalid sampler configuration: {0}")]
    InvalidConfig(String),
    #[error("keep set carries zero probability mass")]
    DegenerateKeepSet,
    #[error("logit file: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, SamplingError>;
