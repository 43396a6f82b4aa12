//! Truncation samplers and the statistics used to compare them.

pub mod bestofn;
pub mod harness;
pub mod plot;
pub mod report;
pub mod sampling;
pub mod stats;
