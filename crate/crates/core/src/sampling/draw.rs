use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::{SamplerConfig, TruncationOrder};
use super::logits::{apply_temperature, softmax_slice, stable_softmax, LogitVector, ProbabilityDistribution};
use super::truncate::{renormalize, truncate, KeepSet};
use super::Result;

/// Uniform variate in `[0, 1)` for one draw.
///
/// ChaCha8 keyed by `seed`, with `draw_index` selecting the stream, so each
/// draw is a pure function of the pair and parallel callers never share state.
pub fn draw_uniform(seed: u64, draw_index: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(draw_index);
    rng.gen::<f64>()
}

/// Index of the largest logit, ties to the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Walks the kept indices in ascending order and returns the first whose
/// cumulative probability exceeds `u`.
pub fn inverse_cdf(dist: &ProbabilityDistribution, keep: &KeepSet, u: f64) -> usize {
    let probs = dist.probs();
    let mut cumulative = 0.0;
    let mut last_positive = keep.indices()[0];
    for &i in keep.indices() {
        if probs[i] <= 0.0 {
            continue;
        }
        cumulative += probs[i];
        last_positive = i;
        if u < cumulative {
            return i;
        }
    }
    // u landed in the rounding gap above the final cumulative sum
    last_positive
}

/// Final sampling distribution for a configuration, plus the keep set that
/// produced it. Greedy (`temperature == 0`) is a point mass on the argmax.
pub fn sampling_distribution(
    config: &SamplerConfig,
    logits: &LogitVector,
) -> Result<(KeepSet, ProbabilityDistribution)> {
    let trace = pipeline(config, logits)?;
    Ok((trace.keep, ProbabilityDistribution::from_raw(trace.final_probs)))
}

/// Draws one token. Deterministic in `(config, logits, seed, draw_index)`.
pub fn sample(config: &SamplerConfig, logits: &LogitVector, seed: u64, draw_index: u64) -> Result<usize> {
    config.validate()?;
    if config.is_greedy() {
        return Ok(argmax(logits.values()));
    }
    let (keep, dist) = sampling_distribution(config, logits)?;
    Ok(inverse_cdf(&dist, &keep, draw_uniform(seed, draw_index)))
}

/// Every intermediate of one draw, for `sample --explain`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleTrace {
    pub config: SamplerConfig,
    pub logits: Vec<f64>,
    /// Logits divided by the temperature (empty for greedy).
    pub scaled_logits: Vec<f64>,
    /// The distribution the truncation rule was applied to.
    pub truncation_probs: Vec<f64>,
    pub keep: KeepSet,
    pub final_probs: Vec<f64>,
    pub uniform: Option<f64>,
    pub token: usize,
}

pub fn sample_trace(
    config: &SamplerConfig,
    logits: &LogitVector,
    seed: u64,
    draw_index: u64,
) -> Result<SampleTrace> {
    let mut trace = pipeline(config, logits)?;
    if !config.is_greedy() {
        let u = draw_uniform(seed, draw_index);
        let dist = ProbabilityDistribution::from_raw(trace.final_probs.clone());
        trace.token = inverse_cdf(&dist, &trace.keep, u);
        trace.uniform = Some(u);
    }
    Ok(trace)
}

/// Runs every stage except the draw. For greedy configs `token` is already final.
fn pipeline(config: &SamplerConfig, logits: &LogitVector) -> Result<SampleTrace> {
    config.validate()?;
    let n = logits.vocab_size();
    let mut trace = SampleTrace {
        config: *config,
        logits: logits.values().to_vec(),
        scaled_logits: Vec::new(),
        truncation_probs: Vec::new(),
        keep: KeepSet::all(n),
        final_probs: Vec::new(),
        uniform: None,
        token: 0,
    };

    if config.is_greedy() {
        let top = argmax(logits.values());
        trace.truncation_probs = stable_softmax(logits).probs().to_vec();
        trace.keep = KeepSet::new(vec![top], n)?;
        trace.final_probs = vec![0.0; n];
        trace.final_probs[top] = 1.0;
        trace.token = top;
        return Ok(trace);
    }

    let scaled = apply_temperature(logits, config.temperature)?;
    match config.order {
        TruncationOrder::TempBeforeTruncation => {
            let heated = stable_softmax(&scaled);
            let keep = truncate(&heated, &config.sampler);
            trace.final_probs = renormalize(&heated, &keep)?.probs().to_vec();
            trace.truncation_probs = heated.probs().to_vec();
            trace.keep = keep;
        }
        TruncationOrder::TempAfterTruncation => {
            let base = stable_softmax(logits);
            let keep = truncate(&base, &config.sampler);
            // re-softmax the survivors' own heated logits, not their renormalized probabilities
            let survivors: Vec<f64> = keep.indices().iter().map(|&i| scaled.values()[i]).collect();
            let mut final_probs = vec![0.0; n];
            for (&i, p) in keep.indices().iter().zip(softmax_slice(&survivors)) {
                final_probs[i] = p;
            }
            trace.final_probs = final_probs;
            trace.truncation_probs = base.probs().to_vec();
            trace.keep = keep;
        }
    }
    trace.scaled_logits = scaled.into_inner();
    Ok(trace)
}
