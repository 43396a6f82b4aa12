use super::{Result, SamplingError};

/// Raw, unnormalized scores over a vocabulary. Guaranteed non-empty and finite.
#[derive(Debug, Clone, PartialEq)]
pub struct LogitVector(Vec<f64>);

impl LogitVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(SamplingError::InvalidLogits("empty logit vector".into()));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(SamplingError::InvalidLogits(format!(
                "non-finite value {} at index {i}",
                values[i]
            )));
        }
        Ok(Self(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn vocab_size(&self) -> usize {
        self.0.len()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl TryFrom<Vec<f64>> for LogitVector {
    type Error = SamplingError;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        Self::new(values)
    }
}

/// A normalized categorical distribution over vocabulary indices.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityDistribution(Vec<f64>);

impl ProbabilityDistribution {
    /// Validates non-negativity and unit mass (within 1e-9, to admit
    /// hand-written fixtures like `[0.5, 0.3, 0.15, 0.05]`).
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(SamplingError::InvalidLogits("empty distribution".into()));
        }
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(SamplingError::InvalidLogits(
                "probabilities must be finite and non-negative".into(),
            ));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(SamplingError::InvalidLogits(format!(
                "probabilities sum to {total}, expected 1"
            )));
        }
        Ok(Self(probs))
    }

    pub(crate) fn from_raw(probs: Vec<f64>) -> Self {
        Self(probs)
    }

    pub fn probs(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Indices with strictly positive probability.
    pub fn support(&self) -> Vec<usize> {
        (0..self.0.len()).filter(|&i| self.0[i] > 0.0).collect()
    }

    /// Highest-probability index, ties to the lowest index.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &p) in self.0.iter().enumerate().skip(1) {
            if p > self.0[best] {
                best = i;
            }
        }
        best
    }

    pub fn max_prob(&self) -> f64 {
        self.0[self.argmax()]
    }
}

/// Softmax with the max-shift: `exp(x_i - max) / sum_j exp(x_j - max)`.
pub fn stable_softmax(logits: &LogitVector) -> ProbabilityDistribution {
    ProbabilityDistribution(softmax_slice(logits.values()))
}

pub(crate) fn softmax_slice(values: &[f64]) -> Vec<f64> {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = values.iter().map(|v| (v - max).exp()).collect();
    let total: f64 = out.iter().sum();
    for p in &mut out {
        *p /= total;
    }
    out
}

/// Divides every logit by `tau`.
pub fn apply_temperature(logits: &LogitVector, tau: f64) -> Result<LogitVector> {
    if !(tau.is_finite() && tau > 0.0) {
        return Err(SamplingError::InvalidTemperature(tau));
    }
    let scaled: Vec<f64> = logits.values().iter().map(|v| v / tau).collect();
    LogitVector::new(scaled)
}
