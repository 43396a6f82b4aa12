use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{Result, SamplingError};

/// Sampler family without its hyperparameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplerKind {
    Basic,
    TopK,
    TopP,
    MinP,
}

impl SamplerKind {
    pub const ALL: [SamplerKind; 4] = [Self::Basic, Self::TopK, Self::TopP, Self::MinP];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Basic => "basic",
            Self::TopK => "top_k",
            Self::TopP => "top_p",
            Self::MinP => "min_p",
        }
    }
}

impl fmt::Display for SamplerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SamplerKind {
    type Err = SamplingError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "basic" => Ok(Self::Basic),
            "top_k" => Ok(Self::TopK),
            "top_p" => Ok(Self::TopP),
            "min_p" => Ok(Self::MinP),
            other => Err(SamplingError::InvalidConfig(format!("unknown sampler '{other}'"))),
        }
    }
}

/// A sampler together with its truncation hyperparameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Sampler {
    Basic,
    TopK(usize),
    TopP(f64),
    /// Keep tokens whose probability is at least `p_base` times the maximum.
    MinP(f64),
}

impl Sampler {
    pub fn kind(&self) -> SamplerKind {
        match self {
            Self::Basic => SamplerKind::Basic,
            Self::TopK(_) => SamplerKind::TopK,
            Self::TopP(_) => SamplerKind::TopP,
            Self::MinP(_) => SamplerKind::MinP,
        }
    }

    /// Hyperparameter as a real, `None` for basic.
    pub fn hyper(&self) -> Option<f64> {
        match *self {
            Self::Basic => None,
            Self::TopK(k) => Some(k as f64),
            Self::TopP(p) | Self::MinP(p) => Some(p),
        }
    }

    /// Builds a sampler from a kind and an optional hyperparameter, validating it.
    pub fn from_parts(kind: SamplerKind, hyper: Option<f64>) -> Result<Self> {
        let sampler = match (kind, hyper) {
            (SamplerKind::Basic, None) => Self::Basic,
            (SamplerKind::Basic, Some(_)) => {
                return Err(SamplingError::InvalidConfig("basic takes no hyperparameter".into()))
            }
            (_, None) => {
                return Err(SamplingError::InvalidConfig(format!("{kind} requires a hyperparameter")))
            }
            (SamplerKind::TopK, Some(k)) => {
                if k.fract() != 0.0 || k < 1.0 || !k.is_finite() {
                    return Err(SamplingError::InvalidConfig(format!(
                        "top_k requires an integer k >= 1, got {k}"
                    )));
                }
                Self::TopK(k as usize)
            }
            (SamplerKind::TopP, Some(p)) => Self::TopP(p),
            (SamplerKind::MinP, Some(p)) => Self::MinP(p),
        };
        sampler.validate()?;
        Ok(sampler)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::Basic => Ok(()),
            Self::TopK(k) if k >= 1 => Ok(()),
            Self::TopK(k) => Err(SamplingError::InvalidConfig(format!("top_k requires k >= 1, got {k}"))),
            Self::TopP(p) | Self::MinP(p) if p > 0.0 && p <= 1.0 => Ok(()),
            Self::TopP(p) | Self::MinP(p) => Err(SamplingError::InvalidConfig(format!(
                "{} requires 0 < p <= 1, got {p}",
                self.kind()
            ))),
        }
    }
}

/// Where temperature scaling sits relative to the truncation rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TruncationOrder {
    /// Scale logits, then truncate the heated distribution.
    #[default]
    TempBeforeTruncation,
    /// Truncate the untempered distribution, then heat the survivors.
    TempAfterTruncation,
}

impl FromStr for TruncationOrder {
    type Err = SamplingError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "temp-before" | "temp-before-truncation" => Ok(Self::TempBeforeTruncation),
            "temp-after" | "temp-after-truncation" => Ok(Self::TempAfterTruncation),
            other => Err(SamplingError::InvalidConfig(format!("unknown truncation order '{other}'"))),
        }
    }
}

impl fmt::Display for TruncationOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::TempBeforeTruncation => "temp-before",
            Self::TempAfterTruncation => "temp-after",
        })
    }
}

/// One point in sweep space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplerConfig {
    pub sampler: Sampler,
    pub temperature: f64,
    pub order: TruncationOrder,
}

impl SamplerConfig {
    pub fn new(sampler: Sampler, temperature: f64, order: TruncationOrder) -> Result<Self> {
        let cfg = Self { sampler, temperature, order };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn basic(temperature: f64) -> Result<Self> {
        Self::new(Sampler::Basic, temperature, TruncationOrder::default())
    }

    pub fn validate(&self) -> Result<()> {
        self.sampler.validate()?;
        if !(self.temperature.is_finite() && self.temperature >= 0.0) {
            return Err(SamplingError::InvalidTemperature(self.temperature));
        }
        Ok(())
    }

    pub fn is_greedy(&self) -> bool {
        self.temperature == 0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hyperparameter_validation() {
        assert!(Sampler::TopK(0).validate().is_err());
        assert!(Sampler::TopP(0.0).validate().is_err());
        assert!(Sampler::TopP(1.0).validate().is_ok());
        assert!(Sampler::MinP(1.5).validate().is_err());
        assert!(Sampler::MinP(f64::NAN).validate().is_err());
        assert!(Sampler::from_parts(SamplerKind::Basic, Some(0.1)).is_err());
        assert!(Sampler::from_parts(SamplerKind::TopK, Some(2.5)).is_err());
        assert_eq!(Sampler::from_parts(SamplerKind::TopK, Some(50.0)).unwrap(), Sampler::TopK(50));
        assert!(SamplerConfig::basic(-0.1).is_err());
        assert!(SamplerConfig::basic(0.0).unwrap().is_greedy());
    }

    #[test]
    fn parse_names() {
        assert_eq!("min-p".parse::<SamplerKind>().unwrap(), SamplerKind::MinP);
        assert_eq!("top_k".parse::<SamplerKind>().unwrap(), SamplerKind::TopK);
        assert!("mirostat".parse::<SamplerKind>().is_err());
        assert_eq!(
            "temp-after".parse::<TruncationOrder>().unwrap(),
            TruncationOrder::TempAfterTruncation
        );
    }
}
