use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use super::dist::student_t_sf;
use super::{Result, StatsError};

/// Per-subject measurements under two conditions, aligned by subject.
#[derive(Debug, Clone, PartialEq)]
pub struct PairedScores {
    subject_ids: Vec<String>,
    a: Vec<f64>,
    b: Vec<f64>,
}

impl PairedScores {
    pub fn new(subject_ids: Vec<String>, a: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        if a.len() != b.len() || a.len() != subject_ids.len() {
            return Err(StatsError::InvalidInput(format!(
                "paired samples must align: {} ids, {} a, {} b",
                subject_ids.len(),
                a.len(),
                b.len()
            )));
        }
        if a.len() < 2 {
            return Err(StatsError::InsufficientData { needed: 2, got: a.len() });
        }
        if a.iter().chain(&b).any(|v| !v.is_finite()) {
            return Err(StatsError::InvalidInput("paired scores must be finite".into()));
        }
        Ok(Self { subject_ids, a, b })
    }

    /// Pairs with synthetic ids `0..n`.
    pub fn from_slices(a: &[f64], b: &[f64]) -> Result<Self> {
        let ids = (0..a.len()).map(|i| i.to_string()).collect();
        Self::new(ids, a.to_vec(), b.to_vec())
    }

    pub fn len(&self) -> usize {
        self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }

    pub fn subject_ids(&self) -> &[String] {
        &self.subject_ids
    }

    pub fn a(&self) -> &[f64] {
        &self.a
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn differences(&self) -> Vec<f64> {
        self.a.iter().zip(&self.b).map(|(x, y)| x - y).collect()
    }

    /// Concatenates several paired samples into one.
    pub fn pooled<'a>(parts: impl IntoIterator<Item = &'a PairedScores>) -> Result<Self> {
        let (mut ids, mut a, mut b) = (Vec::new(), Vec::new(), Vec::new());
        for (k, part) in parts.into_iter().enumerate() {
            ids.extend(part.subject_ids.iter().map(|s| format!("{k}:{s}")));
            a.extend_from_slice(&part.a);
            b.extend_from_slice(&part.b);
        }
        Self::new(ids, a, b)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Alternative {
    /// Mean of `a - b` is positive.
    Greater,
    Less,
    TwoSided,
}

impl FromStr for Alternative {
    type Err = StatsError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "greater" => Ok(Self::Greater),
            "less" => Ok(Self::Less),
            "two_sided" => Ok(Self::TwoSided),
            other => Err(StatsError::InvalidInput(format!("unknown alternative '{other}'"))),
        }
    }
}

impl fmt::Display for Alternative {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Greater => "greater",
            Self::Less => "less",
            Self::TwoSided => "two_sided",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TTestResult {
    pub t: f64,
    pub df: u64,
    pub p: f64,
    pub alternative: Alternative,
    pub mean_diff: f64,
}

fn p_value(t: f64, df: u64, alternative: Alternative) -> Result<f64> {
    Ok(match alternative {
        Alternative::Greater => student_t_sf(t, df)?,
        Alternative::Less => student_t_sf(-t, df)?,
        Alternative::TwoSided => (2.0 * student_t_sf(t.abs(), df)?).min(1.0),
    })
}

/// One-sample t-test on the paired differences `a - b` (sample sd, `n - 1` dof).
///
/// All-zero differences give `t = 0` (no evidence either way). Constant
/// non-zero differences have no spread to scale by and are reported as
/// [`StatsError::DegenerateVariance`] carrying the limiting `t = ±∞` and its p-value.
pub fn paired_ttest(scores: &PairedScores, alternative: Alternative) -> Result<TTestResult> {
    let d = scores.differences();
    let n = d.len();
    let df = (n - 1) as u64;
    let nf = n as f64;

    if d.iter().all(|&x| x == d[0]) {
        let mean_diff = d[0];
        if mean_diff == 0.0 {
            return Ok(TTestResult { t: 0.0, df, p: p_value(0.0, df, alternative)?, alternative, mean_diff });
        }
        let t = if mean_diff > 0.0 { f64::INFINITY } else { f64::NEG_INFINITY };
        return Err(StatsError::DegenerateVariance {
            mean_diff,
            t,
            p: p_value(t, df, alternative)?,
        });
    }

    let mean_diff = d.iter().sum::<f64>() / nf;
    let ss: f64 = d.iter().map(|x| (x - mean_diff).powi(2)).sum();
    let sd = (ss / (nf - 1.0)).sqrt();
    let t = mean_diff / (sd / nf.sqrt());
    Ok(TTestResult { t, df, p: p_value(t, df, alternative)?, alternative, mean_diff })
}

fn check_pvalues(pvalues: &[f64]) -> Result<()> {
    if pvalues.is_empty() {
        return Err(StatsError::EmptyInput);
    }
    if let Some(p) = pvalues.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(StatsError::InvalidInput(format!("p-value {p} outside [0, 1]")));
    }
    Ok(())
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(StatsError::InvalidInput(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    Ok(())
}

/// Rejects component `i` iff `p_i <= alpha / m`.
pub fn bonferroni(pvalues: &[f64], alpha: f64) -> Result<Vec<bool>> {
    check_pvalues(pvalues)?;
    check_alpha(alpha)?;
    let threshold = alpha / pvalues.len() as f64;
    Ok(pvalues.iter().map(|&p| p <= threshold).collect())
}

/// Rejects component `i` iff `p_i <= alpha`, no correction.
pub fn uncorrected(pvalues: &[f64], alpha: f64) -> Result<Vec<bool>> {
    check_pvalues(pvalues)?;
    check_alpha(alpha)?;
    Ok(pvalues.iter().map(|&p| p <= alpha).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AlphaDecision {
    pub alpha: f64,
    pub reject: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IutResult {
    pub component_pvalues: Vec<f64>,
    /// The largest component p-value.
    pub iut_p: f64,
    pub reject_at: Vec<AlphaDecision>,
}

impl IutResult {
    pub fn rejects_at(&self, alpha: f64) -> Option<bool> {
        self.reject_at.iter().find(|d| d.alpha == alpha).map(|d| d.reject)
    }
}

/// Intersection-union test: the alternative holds in every component, so the
/// joint p-value is the maximum component p-value.
pub fn iut(pvalues: &[f64], alphas: &[f64]) -> Result<IutResult> {
    check_pvalues(pvalues)?;
    for &a in alphas {
        check_alpha(a)?;
    }
    let iut_p = pvalues.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(IutResult {
        component_pvalues: pvalues.to_vec(),
        iut_p,
        reject_at: alphas.iter().map(|&alpha| AlphaDecision { alpha, reject: iut_p <= alpha }).collect(),
    })
}

/// Rejection counts of a family of tests under each correction.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MultipleComparisonSummary {
    pub comparisons: usize,
    pub uncorrected: Vec<RejectionCount>,
    pub bonferroni: Vec<RejectionCount>,
    pub iut: IutResult,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RejectionCount {
    pub alpha: f64,
    pub rejections: usize,
}

impl MultipleComparisonSummary {
    pub fn uncorrected_at(&self, alpha: f64) -> Option<usize> {
        self.uncorrected.iter().find(|c| c.alpha == alpha).map(|c| c.rejections)
    }

    pub fn bonferroni_at(&self, alpha: f64) -> Option<usize> {
        self.bonferroni.iter().find(|c| c.alpha == alpha).map(|c| c.rejections)
    }
}

pub fn summarize_family(pvalues: &[f64], alphas: &[f64]) -> Result<MultipleComparisonSummary> {
    let count = |v: Vec<bool>| v.into_iter().filter(|&r| r).count();
    let mut unc = Vec::new();
    let mut bon = Vec::new();
    for &alpha in alphas {
        unc.push(RejectionCount { alpha, rejections: count(uncorrected(pvalues, alpha)?) });
        bon.push(RejectionCount { alpha, rejections: count(bonferroni(pvalues, alpha)?) });
    }
    Ok(MultipleComparisonSummary {
        comparisons: pvalues.len(),
        uncorrected: unc,
        bonferroni: bon,
        iut: iut(pvalues, alphas)?,
    })
}
