use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{Read, Seek, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use super::generate::{score_run, GenerationRun};
use super::ngram::NGramModel;
use super::{HarnessError, Result};
use crate::bestofn::{ConfigKey, ScoreRecord};
use crate::sampling::{Sampler, SamplerConfig, SamplerKind};

pub const SCORE_HEADER: &str = "sampler,hyper,temperature,seed,quality,diversity";

/// Cells are generated in parallel and appended to disk one chunk at a time.
const CHUNK: usize = 64;

#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub grid: Vec<SamplerConfig>,
    pub seeds: Vec<u64>,
    pub prompts: Vec<String>,
    pub max_len: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub sampler: SamplerKind,
    pub hyper: Option<f64>,
    pub temperature: f64,
    pub seed: u64,
    pub quality: f64,
    pub diversity: f64,
}

type CellKey = (ConfigKey, u64);

fn cell_key(config: &SamplerConfig, seed: u64) -> CellKey {
    (ConfigKey::new(config.sampler.kind(), config.sampler.hyper(), config.temperature), seed)
}

fn describe(config: &SamplerConfig, seed: u64) -> String {
    match config.sampler {
        Sampler::Basic => format!("basic temperature={} seed={seed}", config.temperature),
        s => format!("{} hyper={} temperature={} seed={seed}", s.kind(), s.hyper().unwrap_or(f64::NAN), config.temperature),
    }
}

impl SweepRow {
    fn key(&self) -> CellKey {
        (ConfigKey::new(self.sampler, self.hyper, self.temperature), self.seed)
    }

    pub fn to_csv_line(&self) -> String {
        let hyper = self.hyper.map(|h| h.to_string()).unwrap_or_default();
        format!(
            "{},{},{},{},{},{}",
            self.sampler, hyper, self.temperature, self.seed, self.quality, self.diversity
        )
    }

    pub fn quality_record(&self) -> ScoreRecord {
        ScoreRecord {
            sampler: self.sampler,
            hyper: self.hyper,
            temperature: self.temperature,
            seed: self.seed,
            score: self.quality,
        }
    }

    pub fn diversity_record(&self) -> ScoreRecord {
        ScoreRecord { score: self.diversity, ..self.quality_record() }
    }

    fn parse(line: &str, lineno: usize) -> Result<Self> {
        let bad = |what: &str| HarnessError::Data(format!("line {lineno}: bad {what} in '{line}'"));
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 6 {
            return Err(bad("field count"));
        }
        let sampler: SamplerKind = f[0].parse().map_err(|_| bad("sampler"))?;
        let hyper = match f[1] {
            "" => None,
            h => Some(h.parse().map_err(|_| bad("hyper"))?),
        };
        Ok(Self {
            sampler,
            hyper,
            temperature: f[2].parse().map_err(|_| bad("temperature"))?,
            seed: f[3].parse().map_err(|_| bad("seed"))?,
            quality: f[4].parse().map_err(|_| bad("quality"))?,
            diversity: f[5].parse().map_err(|_| bad("diversity"))?,
        })
    }
}

fn run_cell(model: &NGramModel, spec: &SweepSpec, config: &SamplerConfig, seed: u64) -> Result<SweepRow> {
    let run = GenerationRun::generate(model, *config, seed, &spec.prompts, spec.max_len)?;
    let m = score_run(&run, model)?;
    Ok(SweepRow {
        sampler: config.sampler.kind(),
        hyper: config.sampler.hyper(),
        temperature: config.temperature,
        seed,
        quality: m.quality,
        diversity: m.diversity,
    })
}

fn cells(spec: &SweepSpec) -> Result<Vec<(SamplerConfig, u64)>> {
    if spec.grid.is_empty() || spec.seeds.is_empty() || spec.prompts.is_empty() {
        return Err(HarnessError::Config("grid, seeds and prompts must all be non-empty".into()));
    }
    let mut seen = HashMap::new();
    let mut out = Vec::with_capacity(spec.grid.len() * spec.seeds.len());
    for c in &spec.grid {
        for &s in &spec.seeds {
            if seen.insert(cell_key(c, s), ()).is_some() {
                return Err(HarnessError::Config(format!("duplicate cell {}", describe(c, s))));
            }
            out.push((*c, s));
        }
    }
    Ok(out)
}

fn annotate(config: &SamplerConfig, seed: u64) -> impl Fn(HarnessError) -> HarnessError + '_ {
    move |e| HarnessError::Data(format!("{}: {e}", describe(config, seed)))
}

/// Runs every `(config, seed)` cell in memory, in grid order.
pub fn run_cells(model: &NGramModel, spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    cells(spec)?
        .par_iter()
        .map(|(c, s)| run_cell(model, spec, c, *s).map_err(annotate(c, *s)))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutcome {
    /// One row per grid cell, in grid order.
    pub rows: Vec<SweepRow>,
    pub generated: usize,
    pub reused: usize,
}

fn io_err(context: String) -> impl FnOnce(std::io::Error) -> HarnessError {
    move |source| HarnessError::Io { context, source }
}

/// Loads completed rows, cutting off a trailing partial line left by an interrupted run.
fn load_existing(file: &mut File, path: &Path) -> Result<HashMap<CellKey, SweepRow>> {
    let mut text = String::new();
    file.read_to_string(&mut text).map_err(io_err(format!("reading {}", path.display())))?;
    let complete = text.rfind('\n').map_or(0, |i| i + 1);
    if complete < text.len() {
        file.set_len(complete as u64).map_err(io_err(format!("truncating {}", path.display())))?;
    }
    file.seek(std::io::SeekFrom::End(0)).map_err(io_err(format!("seeking {}", path.display())))?;

    let mut rows = HashMap::new();
    let mut lines = text[..complete].lines();
    match lines.next() {
        None => return Ok(rows),
        Some(h) if h.trim_end() == SCORE_HEADER => {}
        Some(h) => return Err(HarnessError::Data(format!("{}: unexpected header '{h}'", path.display()))),
    }
    for (i, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row = SweepRow::parse(line.trim_end(), i + 2)?;
        if rows.insert(row.key(), row).is_some() {
            return Err(HarnessError::Data(format!("{}: duplicate row on line {}", path.display(), i + 2)));
        }
    }
    Ok(rows)
}

/// Runs the sweep into the score-table CSV at `out`, skipping cells already present there.
pub fn run_sweep(model: &NGramModel, spec: &SweepSpec, out: &Path) -> Result<SweepOutcome> {
    let cells = cells(spec)?;
    let mut file = OpenOptions::new()
        .read(true)
        .append(true)
        .create(true)
        .open(out)
        .map_err(io_err(format!("opening {}", out.display())))?;
    let existing = load_existing(&mut file, out)?;
    if file.metadata().map_err(io_err(format!("reading {}", out.display())))?.len() == 0 {
        writeln!(file, "{SCORE_HEADER}").map_err(io_err(format!("writing header to {}", out.display())))?;
    }

    let pending: Vec<&(SamplerConfig, u64)> =
        cells.iter().filter(|(c, s)| !existing.contains_key(&cell_key(c, *s))).collect();
    let mut fresh = HashMap::with_capacity(pending.len());
    for chunk in pending.chunks(CHUNK) {
        let rows: Vec<SweepRow> = chunk
            .par_iter()
            .map(|(c, s)| run_cell(model, spec, c, *s).map_err(annotate(c, *s)))
            .collect::<Result<_>>()?;
        let mut buf = String::new();
        for r in &rows {
            buf.push_str(&r.to_csv_line());
            buf.push('\n');
        }
        let (c, s) = chunk[0];
        file.write_all(buf.as_bytes())
            .and_then(|_| file.flush())
            .map_err(io_err(format!("writing chunk starting at {} to {}", describe(c, *s), out.display())))?;
        fresh.extend(rows.into_iter().map(|r| (r.key(), r)));
    }

    let rows = cells
        .iter()
        .map(|(c, s)| {
            let k = cell_key(c, *s);
            *existing.get(&k).or_else(|| fresh.get(&k)).expect("every cell is present")
        })
        .collect();
    Ok(SweepOutcome { rows, generated: pending.len(), reused: cells.len() - pending.len() })
}
