//! Desk-scale sweep harness: a character n-gram reference model, generation
//! through the samplers, quality/diversity scoring and a resumable grid sweep.

mod config;
mod generate;
mod ngram;
mod sweep;

pub use config::{GridSpec, HarnessConfig};
pub use generate::{distinct_2, generate, prompt_seed, score_run, sequence_log_likelihood, GenerationRun, MetricPair};
pub use ngram::{build_ngram, prepare_corpus, NGramModel, END, MAX_ORDER};
pub use sweep::{run_cells, run_sweep, SweepOutcome, SweepRow, SweepSpec, SCORE_HEADER};

use crate::sampling::SamplingError;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("corpus has {len} symbols, need at least {needed}")]
    CorpusTooSmall { len: usize, needed: usize },
    #[error("smoothing must be positive and finite, got {0}")]
    InvalidSmoothing(f64),
    #[error("n-gram order {0} exceeds the supported maximum")]
    InvalidOrder(usize),
    #[error("symbol {0:?} is not in the model vocabulary")]
    UnknownSymbol(char),
    #[error("prompt {prompt:?} is shorter than the model order {needed}")]
    PromptTooShort { prompt: String, needed: usize },
    #[error("every generated sequence is empty")]
    EmptyGeneration,
    #[error(transparent)]
    Sampling(#[from] SamplingError),
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
    #[error("config: {0}")]
    Config(String),
    #[error("{0}")]
    Data(String),
}

pub type Result<T> = std::result::Result<T, HarnessError>;
