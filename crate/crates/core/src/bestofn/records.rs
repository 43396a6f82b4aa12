use std::collections::{BTreeMap, BTreeSet};
use std::io::Read;

use serde::Serialize;

use super::{BestOfNError, Result};
use crate::sampling::SamplerKind;

/// One evaluated `(sampler, hyper, temperature, seed)` cell of a sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoreRecord {
    pub sampler: SamplerKind,
    /// `None` for basic.
    pub hyper: Option<f64>,
    pub temperature: f64,
    pub seed: u64,
    pub score: f64,
}

/// Bit-exact identity of a configuration, ordered numerically.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ConfigKey {
    pub sampler: SamplerKind,
    hyper: Option<u64>,
    temperature: u64,
}

pub(crate) fn order_bits(x: f64) -> u64 {
    let bits = x.to_bits();
    if bits >> 63 == 1 {
        !bits
    } else {
        bits | (1 << 63)
    }
}

impl ConfigKey {
    pub fn new(sampler: SamplerKind, hyper: Option<f64>, temperature: f64) -> Self {
        Self { sampler, hyper: hyper.map(order_bits), temperature: order_bits(temperature) }
    }
}

impl ScoreRecord {
    pub fn key(&self) -> ConfigKey {
        ConfigKey::new(self.sampler, self.hyper, self.temperature)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PoolConfig {
    pub hyper: Option<f64>,
    pub temperature: f64,
    /// Mean over seeds.
    pub score: f64,
    pub seeds: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MissingSeeds {
    pub sampler: SamplerKind,
    pub hyper: Option<f64>,
    pub temperature: f64,
    pub missing: Vec<u64>,
}

/// Seed-averaged configurations per sampler.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ConfigPool {
    pools: BTreeMap<SamplerKind, Vec<PoolConfig>>,
    /// Configurations lacking some seed that appears elsewhere in the table.
    pub missing_seeds: Vec<MissingSeeds>,
}

impl ConfigPool {
    /// Builds a pool directly from per-sampler score lists (hyper/temperature unset).
    pub fn from_scores(scores: impl IntoIterator<Item = (SamplerKind, Vec<f64>)>) -> Self {
        let pools = scores
            .into_iter()
            .map(|(kind, s)| {
                let configs = s
                    .into_iter()
                    .enumerate()
                    .map(|(i, score)| PoolConfig { hyper: Some(i as f64), temperature: 0.0, score, seeds: 1 })
                    .collect();
                (kind, configs)
            })
            .collect();
        Self { pools, missing_seeds: Vec::new() }
    }

    pub fn samplers(&self) -> impl Iterator<Item = SamplerKind> + '_ {
        self.pools.keys().copied()
    }

    pub fn configs(&self, sampler: SamplerKind) -> Option<&[PoolConfig]> {
        self.pools.get(&sampler).map(Vec::as_slice)
    }

    pub fn scores(&self, sampler: SamplerKind) -> Option<Vec<f64>> {
        self.configs(sampler).map(|c| c.iter().map(|p| p.score).collect())
    }

    pub fn total_configs(&self) -> usize {
        self.pools.values().map(Vec::len).sum()
    }
}

/// Averages each configuration's score over its seeds.
pub fn aggregate_seeds(records: &[ScoreRecord]) -> Result<ConfigPool> {
    if records.is_empty() {
        return Err(BestOfNError::EmptyInput);
    }
    let mut grouped: BTreeMap<ConfigKey, (ScoreRecord, BTreeMap<u64, f64>)> = BTreeMap::new();
    let mut all_seeds = BTreeSet::new();
    for r in records {
        if !r.score.is_finite() || !r.temperature.is_finite() || r.hyper.is_some_and(|h| !h.is_finite()) {
            return Err(BestOfNError::InvalidInput(format!("non-finite value in record {r:?}")));
        }
        all_seeds.insert(r.seed);
        let entry = grouped.entry(r.key()).or_insert_with(|| (*r, BTreeMap::new()));
        if entry.1.insert(r.seed, r.score).is_some() {
            return Err(BestOfNError::DuplicateRecord(format!(
                "{} hyper={:?} temperature={} seed={}",
                r.sampler, r.hyper, r.temperature, r.seed
            )));
        }
    }

    let mut pool = ConfigPool::default();
    for (key, (first, by_seed)) in grouped {
        let n = by_seed.len();
        let score = by_seed.values().sum::<f64>() / n as f64;
        if n < all_seeds.len() {
            pool.missing_seeds.push(MissingSeeds {
                sampler: key.sampler,
                hyper: first.hyper,
                temperature: first.temperature,
                missing: all_seeds.iter().filter(|s| !by_seed.contains_key(s)).copied().collect(),
            });
        }
        pool.pools.entry(key.sampler).or_default().push(PoolConfig {
            hyper: first.hyper,
            temperature: first.temperature,
            score,
            seeds: n,
        });
    }
    Ok(pool)
}

/// Reads `sampler,hyper,temperature,seed,<score column>` rows; `hyper` is empty for basic.
pub fn parse_score_table<R: Read>(reader: R, score_column: &str) -> Result<Vec<ScoreRecord>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers().map_err(|e| BestOfNError::Data(e.to_string()))?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| BestOfNError::Data(format!("missing column '{name}'")))
    };
    let (c_sampler, c_hyper, c_temp, c_seed, c_score) =
        (col("sampler")?, col("hyper")?, col("temperature")?, col("seed")?, col(score_column)?);

    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| BestOfNError::Data(format!("line {line}: {e}")))?;
        let field = |c: usize| rec.get(c).unwrap_or("");
        let bad = |what: &str, c: usize| BestOfNError::Data(format!("line {line}: bad {what} '{}'", field(c)));
        let sampler: SamplerKind = field(c_sampler).parse().map_err(|_| bad("sampler", c_sampler))?;
        let hyper = match field(c_hyper) {
            "" => None,
            s => Some(s.parse::<f64>().map_err(|_| bad("hyper", c_hyper))?),
        };
        if (sampler == SamplerKind::Basic) != hyper.is_none() {
            return Err(BestOfNError::Data(format!(
                "line {line}: hyper must be empty exactly when the sampler is basic"
            )));
        }
        out.push(ScoreRecord {
            sampler,
            hyper,
            temperature: field(c_temp).parse().map_err(|_| bad("temperature", c_temp))?,
            seed: field(c_seed).parse().map_err(|_| bad("seed", c_seed))?,
            score: field(c_score).parse().map_err(|_| bad("score", c_score))?,
        });
    }
    Ok(out)
}
