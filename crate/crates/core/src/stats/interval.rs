use serde::Serialize;

use super::dist::{normal_quantile, student_t_isf};
use super::{Result, StatsError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Interval {
    pub lower: f64,
    pub upper: f64,
    pub level: f64,
}

impl Interval {
    pub fn contains(&self, x: f64) -> bool {
        self.lower <= x && x <= self.upper
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    /// True when `other` lies inside `self`.
    pub fn encloses(&self, other: &Interval) -> bool {
        self.lower <= other.lower && other.upper <= self.upper
    }
}

fn check_level(level: f64) -> Result<()> {
    if !(level > 0.0 && level < 1.0) {
        return Err(StatsError::InvalidInput(format!("confidence level must lie in (0, 1), got {level}")));
    }
    Ok(())
}

/// Sample mean and (n-1)-denominator standard deviation.
pub fn mean_sd(samples: &[f64]) -> (f64, f64) {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    if samples.len() < 2 {
        return (mean, 0.0);
    }
    let ss: f64 = samples.iter().map(|x| (x - mean).powi(2)).sum();
    (mean, (ss / (n - 1.0)).sqrt())
}

/// Student-t interval for the mean: `mean ± t_{(1+level)/2, n-1} · sd / √n`.
pub fn mean_ci(samples: &[f64], level: f64) -> Result<Interval> {
    check_level(level)?;
    if samples.len() < 2 {
        return Err(StatsError::InsufficientData { needed: 2, got: samples.len() });
    }
    if samples.iter().any(|v| !v.is_finite()) {
        return Err(StatsError::InvalidInput("samples must be finite".into()));
    }
    let (mean, sd) = mean_sd(samples);
    let df = (samples.len() - 1) as u64;
    let q = student_t_isf((1.0 - level) / 2.0, df)?;
    let half = q * sd / (samples.len() as f64).sqrt();
    Ok(Interval { lower: mean - half, upper: mean + half, level })
}

/// Wilson score interval for a binomial proportion.
pub fn wilson_interval(successes: u64, trials: u64, level: f64) -> Result<Interval> {
    check_level(level)?;
    if trials == 0 {
        return Err(StatsError::InsufficientData { needed: 1, got: 0 });
    }
    if successes > trials {
        return Err(StatsError::InvalidInput(format!("{successes} successes exceed {trials} trials")));
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z = normal_quantile((1.0 + level) / 2.0);
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    let lower = if successes == 0 { 0.0 } else { (center - half).max(0.0) };
    let upper = if successes == trials { 1.0 } else { (center + half).min(1.0) };
    Ok(Interval { lower, upper, level })
}
