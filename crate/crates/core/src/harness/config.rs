use std::path::{Path, PathBuf};

use super::ngram::{build_ngram, prepare_corpus, NGramModel};
use super::sweep::SweepSpec;
use super::{HarnessError, Result};
use crate::sampling::{Sampler, SamplerConfig, TruncationOrder};

/// Sampler hyperparameters and temperatures to cross.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub basic: bool,
    pub top_k: Vec<usize>,
    pub top_p: Vec<f64>,
    pub min_p: Vec<f64>,
    pub temperatures: Vec<f64>,
    pub order: TruncationOrder,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            basic: true,
            top_k: vec![10, 30, 50, 100, 150, 200],
            top_p: vec![0.99, 0.98, 0.95, 0.9, 0.8, 0.7],
            min_p: vec![0.01, 0.02, 0.05, 0.1, 0.2, 0.3],
            temperatures: (0..=30).map(|i| i as f64 / 10.0).collect(),
            order: TruncationOrder::TempBeforeTruncation,
        }
    }
}

impl GridSpec {
    /// Configurations ordered by sampler (basic, top-k, top-p, min-p), then hyper, then temperature.
    pub fn configs(&self) -> Result<Vec<SamplerConfig>> {
        let mut samplers = Vec::new();
        if self.basic {
            samplers.push(Sampler::Basic);
        }
        samplers.extend(self.top_k.iter().map(|&k| Sampler::TopK(k)));
        samplers.extend(self.top_p.iter().map(|&p| Sampler::TopP(p)));
        samplers.extend(self.min_p.iter().map(|&p| Sampler::MinP(p)));
        let mut out = Vec::with_capacity(samplers.len() * self.temperatures.len());
        for s in samplers {
            for &t in &self.temperatures {
                out.push(SamplerConfig::new(s, t, self.order)?);
            }
        }
        Ok(out)
    }
}

/// Harness settings read from a `key = value` file.
///
/// Keys: `corpus`, `n`, `smoothing`, `max_len`, `seeds`, `basic`, `top_k`,
/// `top_p`, `min_p`, `temperatures`, `order`, and `prompt` (quoted, repeatable).
/// Lists are comma-separated; `temperatures` also accepts `start:stop:steps`.
/// `#` starts a comment outside quotes.
#[derive(Debug, Clone, PartialEq)]
pub struct HarnessConfig {
    pub corpus: PathBuf,
    pub n: usize,
    pub smoothing: f64,
    pub max_len: usize,
    pub seeds: Vec<u64>,
    pub prompts: Vec<String>,
    pub grid: GridSpec,
}

fn unquote(raw: &str, line: usize) -> Result<String> {
    let err = |m: &str| HarnessError::Config(format!("line {line}: {m}"));
    let inner = raw
        .strip_prefix('"')
        .and_then(|r| r.strip_suffix('"'))
        .ok_or_else(|| err("prompt must be double-quoted"))?;
    let mut out = String::new();
    let mut chars = inner.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        out.push(match chars.next() {
            Some('n') => '\n',
            Some('t') => '\t',
            Some('"') => '"',
            Some('\\') => '\\',
            other => return Err(err(&format!("unknown escape \\{}", other.map(String::from).unwrap_or_default()))),
        });
    }
    Ok(out)
}

fn strip_comment(line: &str) -> &str {
    let mut in_quotes = false;
    let mut escaped = false;
    for (i, c) in line.char_indices() {
        match c {
            _ if escaped => escaped = false,
            '\\' if in_quotes => escaped = true,
            '"' => in_quotes = !in_quotes,
            '#' if !in_quotes => return &line[..i],
            _ => {}
        }
    }
    line
}

fn parse_list<T: std::str::FromStr>(value: &str, key: &str, line: usize) -> Result<Vec<T>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse().map_err(|_| HarnessError::Config(format!("line {line}: bad {key} entry '{s}'"))))
        .collect()
}

fn parse_temperatures(value: &str, line: usize) -> Result<Vec<f64>> {
    let parts: Vec<&str> = value.split(':').map(str::trim).collect();
    if parts.len() == 1 {
        return parse_list(value, "temperatures", line);
    }
    let bad = || HarnessError::Config(format!("line {line}: temperatures range must be start:stop:steps"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let start: f64 = parts[0].parse().map_err(|_| bad())?;
    let stop: f64 = parts[1].parse().map_err(|_| bad())?;
    let steps: u32 = parts[2].parse().map_err(|_| bad())?;
    if steps == 0 {
        return Err(bad());
    }
    // one rounding per point so e.g. 0:3:30 yields exactly 0.1, 0.2, ...
    Ok((0..=steps).map(|i| start + (stop - start) * i as f64 / steps as f64).collect())
}

impl HarnessConfig {
    /// Parses config text; a relative `corpus` path is resolved against `base_dir`.
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self> {
        let mut corpus = None;
        let (mut n, mut smoothing, mut max_len) = (3usize, 1.0f64, 200usize);
        let mut seeds = vec![0, 1, 2];
        let mut prompts = Vec::new();
        let mut grid = GridSpec::default();

        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = strip_comment(raw).trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or_else(|| HarnessError::Config(format!("line {line}: expected key = value")))?;
            let num_err = || HarnessError::Config(format!("line {line}: bad value for {key}: '{value}'"));
            match key {
                "corpus" => corpus = Some(base_dir.join(value)),
                "n" => n = value.parse().map_err(|_| num_err())?,
                "smoothing" => smoothing = value.parse().map_err(|_| num_err())?,
                "max_len" => max_len = value.parse().map_err(|_| num_err())?,
                "seeds" => seeds = parse_list(value, key, line)?,
                "prompt" => prompts.push(unquote(value, line)?),
                "basic" => grid.basic = value.parse().map_err(|_| num_err())?,
                "top_k" => grid.top_k = parse_list(value, key, line)?,
                "top_p" => grid.top_p = parse_list(value, key, line)?,
                "min_p" => grid.min_p = parse_list(value, key, line)?,
                "temperatures" => grid.temperatures = parse_temperatures(value, line)?,
                "order" => grid.order = value.parse().map_err(|_| num_err())?,
                _ => return Err(HarnessError::Config(format!("line {line}: unknown key '{key}'"))),
            }
        }
        let corpus = corpus.ok_or_else(|| HarnessError::Config("missing 'corpus'".into()))?;
        if prompts.is_empty() {
            return Err(HarnessError::Config("at least one prompt is required".into()));
        }
        Ok(Self { corpus, n, smoothing, max_len, seeds, prompts, grid })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| HarnessError::Io {
            context: format!("reading {}", path.display()),
            source,
        })?;
        Self::parse(&text, path.parent().unwrap_or(Path::new(".")))
    }

    /// Reads and normalizes the corpus, then fits the model.
    pub fn build_model(&self) -> Result<NGramModel> {
        let text = std::fs::read_to_string(&self.corpus).map_err(|source| HarnessError::Io {
            context: format!("reading corpus {}", self.corpus.display()),
            source,
        })?;
        build_ngram(&prepare_corpus(&text), self.n, self.smoothing)
    }

    pub fn sweep_spec(&self) -> Result<SweepSpec> {
        Ok(SweepSpec {
            grid: self.grid.configs()?,
            seeds: self.seeds.clone(),
            prompts: self.prompts.clone(),
            max_len: self.max_len,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::SamplerKind;

    #[test]
    fn default_grid_shape() {
        let g = GridSpec::default().configs().unwrap();
        assert_eq!(g.len(), 31 + 3 * 6 * 31);
        let temps: Vec<f64> = g.iter().take(31).map(|c| c.temperature).collect();
        assert_eq!(temps[1], 0.1);
        assert_eq!(temps[3], 0.3);
        assert_eq!(temps[30], 3.0);
        assert_eq!(g.iter().filter(|c| c.sampler.kind() == SamplerKind::MinP).count(), 186);
    }

    #[test]
    fn parses_key_values() {
        let text = r#"
            # fixture
            corpus = text/corpus.txt
            n = 2
            smoothing = 0.5
            prompt = "the"   # trailing comment
            prompt = "a \"q\" # not a comment"
            seeds = 4, 5
            top_k =
            min_p = 0.1
            temperatures = 0:3:30
            order = temp-after
        "#;
        let c = HarnessConfig::parse(text, Path::new("/data")).unwrap();
        assert_eq!(c.corpus, PathBuf::from("/data/text/corpus.txt"));
        assert_eq!((c.n, c.smoothing, c.max_len), (2, 0.5, 200));
        assert_eq!(c.prompts, vec!["the".to_string(), "a \"q\" # not a comment".to_string()]);
        assert_eq!(c.seeds, vec![4, 5]);
        assert!(c.grid.top_k.is_empty());
        assert_eq!(c.grid.temperatures, GridSpec::default().temperatures);
        assert_eq!(c.grid.order, TruncationOrder::TempAfterTruncation);
        assert_eq!(c.grid.configs().unwrap().len(), 31 + 6 * 31 + 31);
    }

    #[test]
    fn rejects_bad_input() {
        let base = Path::new(".");
        assert!(HarnessConfig::parse("prompt = \"x\"", base).is_err());
        assert!(HarnessConfig::parse("corpus = c\n", base).is_err());
        assert!(HarnessConfig::parse("corpus = c\nprompt = x\n", base).is_err());
        assert!(HarnessConfig::parse("corpus = c\nprompt = \"x\"\ncolour = red\n", base).is_err());
        assert!(HarnessConfig::parse("corpus = c\nprompt = \"x\"\nn = two\n", base).is_err());
        assert!(HarnessConfig::parse("corpus = c\nprompt = \"x\"\ntemperatures = 0:1\n", base).is_err());
    }
}
