use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::records::ConfigPool;
use super::{BestOfNError, Result};
use crate::sampling::SamplerKind;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvePoint {
    pub n: usize,
    pub expected_max: f64,
    pub std_error: f64,
    pub repeats: usize,
}

/// Expected best score of a random size-`n` subset of one sampler's configs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BestOfNCurve {
    pub sampler: SamplerKind,
    pub points: Vec<CurvePoint>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DiffPoint {
    pub n: usize,
    pub expected_diff: f64,
    pub std_error: f64,
    pub repeats: usize,
}

/// Target's subset max minus the best of the other samplers' subset maxima.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiffCurve {
    pub target: SamplerKind,
    pub points: Vec<DiffPoint>,
}

fn sampler_tag(kind: SamplerKind) -> u64 {
    match kind {
        SamplerKind::Basic => 1,
        SamplerKind::TopK => 2,
        SamplerKind::TopP => 3,
        SamplerKind::MinP => 4,
    }
}

/// RNG for one `(seed, sampler, n, repeat)` cell. The first three form the
/// ChaCha key and the repeat index selects the stream.
fn cell_rng(seed: u64, sampler: SamplerKind, n: usize, repeat: usize) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&sampler_tag(sampler).to_le_bytes());
    key[16..24].copy_from_slice(&(n as u64).to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(repeat as u64);
    rng
}

/// Max over a uniformly drawn size-`n` subset (without replacement), `n < scores.len()`.
fn subset_max(scores: &[f64], n: usize, rng: &mut ChaCha8Rng) -> f64 {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    let mut best = f64::NEG_INFINITY;
    for i in 0..n {
        let j = rng.gen_range(i..idx.len());
        idx.swap(i, j);
        best = best.max(scores[idx[i]]);
    }
    best
}

fn max_of(scores: &[f64]) -> f64 {
    scores.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

/// Mean and standard error. The mean is accumulated relative to the first
/// value so identical inputs reproduce that value exactly.
fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let r = values.len() as f64;
    let anchor = values[0];
    let mean = anchor + values.iter().map(|v| v - anchor).sum::<f64>() / r;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let ss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
    (mean, (ss / (r - 1.0)).sqrt() / r.sqrt())
}

fn check_args(ns: &[usize], repeats: usize) -> Result<()> {
    if repeats == 0 {
        return Err(BestOfNError::InvalidInput("repeats must be >= 1".into()));
    }
    if ns.is_empty() || ns.contains(&0) {
        return Err(BestOfNError::InvalidInput("subset sizes must be positive".into()));
    }
    Ok(())
}

fn pool_scores(pool: &ConfigPool, sampler: SamplerKind) -> Result<Vec<f64>> {
    match pool.scores(sampler) {
        Some(s) if !s.is_empty() => Ok(s),
        _ => Err(BestOfNError::UnknownSampler(sampler)),
    }
}

/// Monte Carlo Best-of-N curve. Subset sizes above the pool size are clamped,
/// which makes the point exactly the pool max with zero standard error.
pub fn best_of_n_curve(
    pool: &ConfigPool,
    sampler: SamplerKind,
    ns: &[usize],
    repeats: usize,
    seed: u64,
) -> Result<BestOfNCurve> {
    check_args(ns, repeats)?;
    let scores = pool_scores(pool, sampler)?;
    let points = ns
        .iter()
        .map(|&n| {
            if n >= scores.len() {
                return CurvePoint { n, expected_max: max_of(&scores), std_error: 0.0, repeats };
            }
            let maxima: Vec<f64> = (0..repeats)
                .into_par_iter()
                .map(|r| subset_max(&scores, n, &mut cell_rng(seed, sampler, n, r)))
                .collect();
            let (expected_max, std_error) = mean_and_se(&maxima);
            CurvePoint { n, expected_max, std_error, repeats }
        })
        .collect();
    Ok(BestOfNCurve { sampler, points })
}

/// Monte Carlo curve of `max(target subset) - max over others of max(their subset)`,
/// with an independent subset per sampler, size clamped to each pool.
pub fn diff_curve(
    pool: &ConfigPool,
    target: SamplerKind,
    ns: &[usize],
    repeats: usize,
    seed: u64,
) -> Result<DiffCurve> {
    check_args(ns, repeats)?;
    let target_scores = pool_scores(pool, target)?;
    let others: Vec<(SamplerKind, Vec<f64>)> = pool
        .samplers()
        .filter(|&s| s != target)
        .filter_map(|s| pool.scores(s).filter(|v| !v.is_empty()).map(|v| (s, v)))
        .collect();
    if others.is_empty() {
        return Err(BestOfNError::InvalidInput(format!("no sampler besides {target} to compare against")));
    }

    let draw = |kind: SamplerKind, scores: &[f64], n: usize, r: usize| {
        if n >= scores.len() {
            max_of(scores)
        } else {
            subset_max(scores, n, &mut cell_rng(seed, kind, n, r))
        }
    };

    let points = ns
        .iter()
        .map(|&n| {
            let diffs: Vec<f64> = (0..repeats)
                .into_par_iter()
                .map(|r| {
                    let best_other = others
                        .iter()
                        .map(|(kind, s)| draw(*kind, s, n, r))
                        .fold(f64::NEG_INFINITY, f64::max);
                    draw(target, &target_scores, n, r) - best_other
                })
                .collect();
            let (expected_diff, std_error) = mean_and_se(&diffs);
            DiffPoint { n, expected_diff, std_error, repeats }
        })
        .collect();
    Ok(DiffCurve { target, points })
}

/// Exact mean of the maximum over all `C(M, n)` size-`n` subsets, via the
/// order-statistic identity `Σ_k s_(k) · C(k-1, n-1) / C(M, n)` on ascending scores.
pub fn exact_expected_max(scores: &[f64], n: usize) -> Result<f64> {
    let m = scores.len();
    if n == 0 || n > m {
        return Err(BestOfNError::InvalidSubsetSize { n, pool: m });
    }
    let mut sorted = scores.to_vec();
    sorted.sort_by(f64::total_cmp);
    if n == m {
        return Ok(sorted[m - 1]);
    }
    // weight of the k-th smallest (1-based) is C(k-1, n-1) / C(m, n); build
    // it upward from k = n, where the weight is 1 / C(m, n)
    let ln_total = ln_binomial(m, n);
    let mut acc = 0.0;
    for k in n..=m {
        let w = (ln_binomial(k - 1, n - 1) - ln_total).exp();
        acc += w * sorted[k - 1];
    }
    Ok(acc)
}

fn ln_binomial(n: usize, k: usize) -> f64 {
    // exact in f64 for the pool sizes this is used with; falls back to logs beyond
    if n <= 60 {
        let k = k.min(n - k);
        let mut c = 1.0f64;
        for i in 0..k {
            c = c * (n - i) as f64 / (i + 1) as f64;
        }
        c.ln()
    } else {
        crate::stats::ln_gamma(n as f64 + 1.0)
            - crate::stats::ln_gamma(k as f64 + 1.0)
            - crate::stats::ln_gamma((n - k) as f64 + 1.0)
    }
}
