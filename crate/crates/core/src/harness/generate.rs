use std::collections::HashSet;

use serde::Serialize;
use sha2::{Digest, Sha256};

use super::ngram::{NGramModel, END};
use super::{HarnessError, Result};
use crate::sampling::{sample, SamplerConfig};

/// Per-prompt RNG seed: the first 8 bytes of `sha256(seed_le || prompt)`.
pub fn prompt_seed(seed: u64, prompt: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(prompt.as_bytes());
    u64::from_le_bytes(h.finalize()[..8].try_into().expect("8 bytes"))
}

/// Continues `prompt` for at most `max_len` symbols, stopping after an emitted [`END`].
/// Step `i` uses draw index `i` of the prompt's seed stream.
pub fn generate(model: &NGramModel, config: &SamplerConfig, seed: u64, prompt: &str, max_len: usize) -> Result<String> {
    let mut history = model.encode(prompt)?;
    if history.len() < model.order() {
        return Err(HarnessError::PromptTooShort { prompt: prompt.to_string(), needed: model.order() });
    }
    let stream = prompt_seed(seed, prompt);
    let mut out = String::new();
    for step in 0..max_len {
        let id = sample(config, model.logits(&history), stream, step as u64)?;
        let symbol = model.symbol(id);
        out.push(symbol);
        if symbol == END {
            break;
        }
        history.push(id as u16);
    }
    Ok(out)
}

/// Generated continuations for one `(config, seed)` cell, aligned with their prompts.
#[derive(Debug, Clone, PartialEq)]
pub struct GenerationRun {
    pub config: SamplerConfig,
    pub seed: u64,
    pub prompts: Vec<String>,
    pub sequences: Vec<String>,
}

impl GenerationRun {
    pub fn generate(
        model: &NGramModel,
        config: SamplerConfig,
        seed: u64,
        prompts: &[String],
        max_len: usize,
    ) -> Result<Self> {
        let sequences = prompts
            .iter()
            .map(|p| generate(model, &config, seed, p, max_len))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { config, seed, prompts: prompts.to_vec(), sequences })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MetricPair {
    /// Mean per-symbol log-likelihood under the reference model, in nats.
    pub quality: f64,
    /// Distinct 2-grams over total 2-gram slots across all sequences.
    pub diversity: f64,
}

/// Mean per-symbol log-probability of `sequence` continuing `prompt`; `None` when empty.
pub fn sequence_log_likelihood(model: &NGramModel, prompt: &str, sequence: &str) -> Result<Option<f64>> {
    let mut history = model.encode(prompt)?;
    let ids = model.encode(sequence)?;
    if ids.is_empty() {
        return Ok(None);
    }
    let mut total = 0.0;
    for &id in &ids {
        total += model.log_prob(&history, id);
        history.push(id);
    }
    Ok(Some(total / ids.len() as f64))
}

/// Distinct-2 ratio; zero when no sequence has two symbols.
pub fn distinct_2<S: AsRef<str>>(sequences: &[S]) -> f64 {
    let mut seen = HashSet::new();
    let mut slots = 0usize;
    for s in sequences {
        let chars: Vec<char> = s.as_ref().chars().collect();
        for w in chars.windows(2) {
            seen.insert((w[0], w[1]));
            slots += 1;
        }
    }
    if slots == 0 {
        0.0
    } else {
        seen.len() as f64 / slots as f64
    }
}

/// Quality averages per-sequence means over the non-empty sequences.
pub fn score_run(run: &GenerationRun, model: &NGramModel) -> Result<MetricPair> {
    let mut per_seq = Vec::with_capacity(run.sequences.len());
    for (prompt, seq) in run.prompts.iter().zip(&run.sequences) {
        if let Some(ll) = sequence_log_likelihood(model, prompt, seq)? {
            per_seq.push(ll);
        }
    }
    if per_seq.is_empty() {
        return Err(HarnessError::EmptyGeneration);
    }
    let quality = per_seq.iter().sum::<f64>() / per_seq.len() as f64;
    Ok(MetricPair { quality, diversity: distinct_2(&run.sequences) })
}
