use std::collections::{BTreeSet, HashMap};

use super::{HarnessError, Result};
use crate::sampling::LogitVector;

/// Reserved end-of-sentence symbol.
pub const END: char = '\n';

/// Longest supported context; contexts are packed 16 bits per symbol into a `u128`.
pub const MAX_ORDER: usize = 8;

/// Character-level n-gram model with add-constant smoothing.
#[derive(Debug, Clone)]
pub struct NGramModel {
    order: usize,
    smoothing: f64,
    vocab: Vec<char>,
    index: HashMap<char, u16>,
    counts: HashMap<u128, Vec<u32>>,
    logits: HashMap<u128, LogitVector>,
    uniform: LogitVector,
}

/// Collapses whitespace and turns sentence boundaries into [`END`].
pub fn prepare_corpus(text: &str) -> String {
    let words: Vec<&str> = text.split_whitespace().collect();
    let mut out = String::with_capacity(text.len());
    for (i, w) in words.iter().enumerate() {
        out.push_str(w);
        if i + 1 == words.len() {
            break;
        }
        let ends_sentence = w.trim_end_matches(['"', '\'', ')']).ends_with(['.', '!', '?']);
        out.push(if ends_sentence { END } else { ' ' });
    }
    if !out.is_empty() {
        out.push(END);
    }
    out
}

fn pack(context: &[u16]) -> u128 {
    context.iter().fold(0u128, |acc, &s| (acc << 16) | s as u128)
}

/// Builds an order-`n` model: `n` symbols of context, `n = 0` for unigrams.
pub fn build_ngram(corpus: &str, n: usize, smoothing: f64) -> Result<NGramModel> {
    if !(smoothing > 0.0 && smoothing.is_finite()) {
        return Err(HarnessError::InvalidSmoothing(smoothing));
    }
    if n > MAX_ORDER {
        return Err(HarnessError::InvalidOrder(n));
    }
    let symbols: Vec<char> = corpus.chars().collect();
    if symbols.len() < n + 1 {
        return Err(HarnessError::CorpusTooSmall { len: symbols.len(), needed: n + 1 });
    }
    let vocab: Vec<char> = symbols.iter().copied().collect::<BTreeSet<_>>().into_iter().collect();
    if vocab.len() > u16::MAX as usize {
        return Err(HarnessError::Config(format!("vocabulary of {} symbols is too large", vocab.len())));
    }
    let index: HashMap<char, u16> = vocab.iter().enumerate().map(|(i, &c)| (c, i as u16)).collect();
    let ids: Vec<u16> = symbols.iter().map(|c| index[c]).collect();

    let v = vocab.len();
    let mut counts: HashMap<u128, Vec<u32>> = HashMap::new();
    for window in ids.windows(n + 1) {
        counts.entry(pack(&window[..n])).or_insert_with(|| vec![0; v])[window[n] as usize] += 1;
    }

    let logits = counts
        .iter()
        .map(|(&ctx, row)| {
            let total: u32 = row.iter().sum();
            let denom = (total as f64 + smoothing * v as f64).ln();
            let values = row.iter().map(|&c| (c as f64 + smoothing).ln() - denom).collect();
            (ctx, LogitVector::new(values).expect("smoothed log-probabilities are finite"))
        })
        .collect();
    let uniform = LogitVector::new(vec![-(v as f64).ln(); v]).expect("finite");

    Ok(NGramModel { order: n, smoothing, vocab, index, counts, logits, uniform })
}

impl NGramModel {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn smoothing(&self) -> f64 {
        self.smoothing
    }

    pub fn vocab(&self) -> &[char] {
        &self.vocab
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab.len()
    }

    pub fn symbol(&self, id: usize) -> char {
        self.vocab[id]
    }

    pub fn id(&self, symbol: char) -> Result<u16> {
        self.index.get(&symbol).copied().ok_or(HarnessError::UnknownSymbol(symbol))
    }

    pub fn encode(&self, text: &str) -> Result<Vec<u16>> {
        text.chars().map(|c| self.id(c)).collect()
    }

    /// Whether `END` occurs in the training corpus.
    pub fn has_end(&self) -> bool {
        self.index.contains_key(&END)
    }

    /// Next-symbol log-probabilities given the last `order` ids of `history`.
    /// Shorter histories and unseen contexts get the uniform row.
    pub fn logits(&self, history: &[u16]) -> &LogitVector {
        if history.len() < self.order {
            return &self.uniform;
        }
        let ctx = pack(&history[history.len() - self.order..]);
        self.logits.get(&ctx).unwrap_or(&self.uniform)
    }

    pub fn log_prob(&self, history: &[u16], next: u16) -> f64 {
        self.logits(history).values()[next as usize]
    }

    /// Raw continuation counts for a context, if it was seen.
    pub fn counts(&self, context: &str) -> Option<&[u32]> {
        let ids = self.encode(context).ok()?;
        if ids.len() != self.order {
            return None;
        }
        self.counts.get(&pack(&ids)).map(Vec::as_slice)
    }
}
