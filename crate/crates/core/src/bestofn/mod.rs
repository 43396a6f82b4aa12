//! Best-of-N analysis over a swept configuration pool.

mod curve;
mod io;
mod records;

pub use curve::{best_of_n_curve, diff_curve, exact_expected_max, BestOfNCurve, CurvePoint, DiffCurve, DiffPoint};
pub use io::{write_curve_csv, write_diff_csv};
pub use records::{aggregate_seeds, parse_score_table, ConfigKey, ConfigPool, MissingSeeds, PoolConfig, ScoreRecord};

use crate::sampling::SamplerKind;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BestOfNError {
    #[error("no score records")]
    EmptyInput,
    #[error("sampler {0} has no configurations in the pool")]
    UnknownSampler(SamplerKind),
    #[error("subset size {n} is invalid for a pool of {pool}")]
    InvalidSubsetSize { n: usize, pool: usize },
    #[error("{0}")]
    InvalidInput(String),
    #[error("duplicate record: {0}")]
    DuplicateRecord(String),
    #[error("{0}")]
    Data(String),
}

pub type Result<T> = std::result::Result<T, BestOfNError>;
