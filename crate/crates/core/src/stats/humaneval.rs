//! Pivoting per-participant human-evaluation scores into the
//! metric × temperature × baseline grid of one-sided paired t-tests.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::io::Read;

use serde::{Deserialize, Serialize};

use super::hypothesis::{
    bonferroni, paired_ttest, summarize_family, uncorrected, Alternative, MultipleComparisonSummary,
    PairedScores,
};
use super::interval::{mean_ci, mean_sd};
use super::{Result, StatsError};
use crate::sampling::SamplerKind;

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct HumanEvalRow {
    pub participant_id: String,
    pub sampler: String,
    pub temperature: f64,
    #[serde(default)]
    pub diversity_setting: String,
    pub metric: String,
    pub score: f64,
}

pub fn parse_human_eval<R: Read>(reader: R) -> Result<Vec<HumanEvalRow>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers().map_err(|e| StatsError::Data(e.to_string()))?.clone();
    for col in ["participant_id", "sampler", "temperature", "diversity_setting", "metric", "score"] {
        if !headers.iter().any(|h| h == col) {
            return Err(StatsError::Data(format!("missing column '{col}'")));
        }
    }
    let mut rows = Vec::new();
    for (i, rec) in rdr.deserialize::<HumanEvalRow>().enumerate() {
        let row = rec.map_err(|e| StatsError::Data(format!("row {}: {e}", i + 2)))?;
        if !row.score.is_finite() || !row.temperature.is_finite() {
            return Err(StatsError::Data(format!("row {}: non-finite value", i + 2)));
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(StatsError::Data("no data rows".into()));
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatteryOptions {
    /// Keep rows with this diversity setting (plus rows with none, e.g. basic).
    pub diversity_setting: Option<String>,
    pub target: SamplerKind,
    pub baselines: Vec<SamplerKind>,
    pub alphas: Vec<f64>,
}

impl Default for BatteryOptions {
    fn default() -> Self {
        Self {
            diversity_setting: Some("high".into()),
            target: SamplerKind::MinP,
            baselines: vec![SamplerKind::Basic, SamplerKind::TopP],
            alphas: vec![0.05, 0.01],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BatteryTest {
    pub metric: String,
    pub temperature: f64,
    pub comparison: String,
    pub n: usize,
    /// `None` when the differences have zero variance.
    pub t: Option<f64>,
    pub df: u64,
    pub p: f64,
    pub mean_diff: f64,
    pub degenerate_variance: bool,
    pub significant_uncorrected_05: bool,
    pub significant_bonferroni_05: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SamplerSummary {
    pub metric: String,
    pub temperature: f64,
    pub sampler: String,
    pub n: usize,
    pub mean: f64,
    pub sd: f64,
    pub ci95_lower: Option<f64>,
    pub ci95_upper: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DroppedPairs {
    pub metric: String,
    pub temperature: f64,
    pub comparison: String,
    pub dropped: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IutBlock {
    pub iut_p: f64,
    pub reject_05: bool,
    pub reject_01: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Battery {
    pub tests: Vec<BatteryTest>,
    pub iut: IutBlock,
    pub family: MultipleComparisonSummary,
    pub dropped_pairs: Vec<DroppedPairs>,
    pub summaries: Vec<SamplerSummary>,
}

/// Quality first, then diversity, then anything else alphabetically.
fn metric_rank(m: &str) -> (u8, String) {
    match m {
        "quality" => (0, String::new()),
        "diversity" => (1, String::new()),
        other => (2, other.to_string()),
    }
}

fn is_unset(setting: &str) -> bool {
    matches!(setting.to_ascii_lowercase().as_str(), "" | "none" | "na" | "n/a" | "-")
}

type CellKey = ((u8, String), u64, SamplerKind);

fn comparison_label(target: SamplerKind, baseline: SamplerKind) -> String {
    format!("{target} > {baseline}")
}

/// Runs one-sided paired t-tests (target as condition A, alternative
/// "greater") for every metric × temperature × baseline cell, then the
/// Bonferroni and intersection-union decisions across the whole grid.
pub fn run_battery(rows: &[HumanEvalRow], opts: &BatteryOptions) -> Result<Battery> {
    let mut scores: BTreeMap<CellKey, BTreeMap<String, f64>> = BTreeMap::new();
    let mut metric_names: BTreeMap<(u8, String), String> = BTreeMap::new();
    let mut temperatures: BTreeMap<u64, f64> = BTreeMap::new();

    for row in rows {
        let sampler: SamplerKind = row
            .sampler
            .parse()
            .map_err(|_| StatsError::Data(format!("unknown sampler '{}'", row.sampler)))?;
        if let Some(want) = &opts.diversity_setting {
            if !is_unset(&row.diversity_setting) && !row.diversity_setting.eq_ignore_ascii_case(want) {
                continue;
            }
        }
        let metric = row.metric.to_ascii_lowercase();
        let rank = metric_rank(&metric);
        metric_names.insert(rank.clone(), metric.clone());
        let temp_key = total_order_key(row.temperature);
        temperatures.insert(temp_key, row.temperature);
        let cell = scores.entry((rank, temp_key, sampler)).or_default();
        if cell.insert(row.participant_id.clone(), row.score).is_some() {
            return Err(StatsError::Data(format!(
                "duplicate score for participant '{}' ({}, {sampler}, temperature {})",
                row.participant_id, metric, row.temperature
            )));
        }
    }
    if scores.is_empty() {
        return Err(StatsError::Data("no rows match the requested diversity setting".into()));
    }
    let present: BTreeSet<SamplerKind> = scores.keys().map(|k| k.2).collect();
    let baselines: Vec<SamplerKind> =
        opts.baselines.iter().copied().filter(|b| present.contains(b) && *b != opts.target).collect();
    if baselines.is_empty() {
        return Err(StatsError::Data("no baseline sampler present in the data".into()));
    }

    let mut tests = Vec::new();
    let mut dropped_pairs = Vec::new();
    for (rank, metric) in &metric_names {
        for (&tk, &temperature) in &temperatures {
            for &baseline in &baselines {
                let comparison = comparison_label(opts.target, baseline);
                let cell_name = format!("metric={metric}, temperature={temperature}, comparison={comparison}");
                let target = scores
                    .get(&(rank.clone(), tk, opts.target))
                    .ok_or_else(|| StatsError::Data(format!("missing cell ({cell_name}): no {} rows", opts.target)))?;
                let base = scores
                    .get(&(rank.clone(), tk, baseline))
                    .ok_or_else(|| StatsError::Data(format!("missing cell ({cell_name}): no {baseline} rows")))?;

                let (mut ids, mut a, mut b) = (Vec::new(), Vec::new(), Vec::new());
                for (pid, &sa) in target {
                    if let Some(&sb) = base.get(pid) {
                        ids.push(pid.clone());
                        a.push(sa);
                        b.push(sb);
                    }
                }
                let dropped = target.len() + base.len() - 2 * ids.len();
                if dropped > 0 {
                    dropped_pairs.push(DroppedPairs {
                        metric: metric.clone(),
                        temperature,
                        comparison: comparison.clone(),
                        dropped,
                    });
                }
                let n = ids.len();
                let paired = PairedScores::new(ids, a, b)
                    .map_err(|e| StatsError::Data(format!("cell ({cell_name}): {e}")))?;
                let (t, df, p, mean_diff, degenerate) = match paired_ttest(&paired, Alternative::Greater) {
                    Ok(r) => (Some(r.t), r.df, r.p, r.mean_diff, false),
                    Err(StatsError::DegenerateVariance { mean_diff, p, .. }) => {
                        (None, (n - 1) as u64, p, mean_diff, true)
                    }
                    Err(e) => return Err(e),
                };
                tests.push(BatteryTest {
                    metric: metric.clone(),
                    temperature,
                    comparison,
                    n,
                    t,
                    df,
                    p,
                    mean_diff,
                    degenerate_variance: degenerate,
                    significant_uncorrected_05: false,
                    significant_bonferroni_05: false,
                });
            }
        }
    }

    let pvalues: Vec<f64> = tests.iter().map(|t| t.p).collect();
    let unc = uncorrected(&pvalues, 0.05)?;
    let bon = bonferroni(&pvalues, 0.05)?;
    for (i, test) in tests.iter_mut().enumerate() {
        test.significant_uncorrected_05 = unc[i];
        test.significant_bonferroni_05 = bon[i];
    }
    let mut alphas = opts.alphas.clone();
    for a in [0.05, 0.01] {
        if !alphas.contains(&a) {
            alphas.push(a);
        }
    }
    let family = summarize_family(&pvalues, &alphas)?;
    let iut = IutBlock {
        iut_p: family.iut.iut_p,
        reject_05: family.iut.rejects_at(0.05).unwrap_or(false),
        reject_01: family.iut.rejects_at(0.01).unwrap_or(false),
    };

    let mut summaries = Vec::new();
    for ((rank, tk, sampler), cell) in &scores {
        let values: Vec<f64> = cell.values().copied().collect();
        let (mean, sd) = mean_sd(&values);
        let ci = mean_ci(&values, 0.95).ok();
        summaries.push(SamplerSummary {
            metric: metric_names[rank].clone(),
            temperature: temperatures[tk],
            sampler: sampler.to_string(),
            n: values.len(),
            mean,
            sd,
            ci95_lower: ci.map(|c| c.lower),
            ci95_upper: ci.map(|c| c.upper),
        });
    }

    Ok(Battery { tests, iut, family, dropped_pairs, summaries })
}

/// Monotone map from f64 to u64 so temperatures sort numerically as keys.
fn total_order_key(x: f64) -> u64 {
    let bits = x.to_bits();
    if bits >> 63 == 1 {
        !bits
    } else {
        bits | (1 << 63)
    }
}

fn stars(p: f64) -> &'static str {
    if p < 0.001 {
        "***"
    } else if p < 0.01 {
        "**"
    } else if p < 0.05 {
        "*"
    } else {
        ""
    }
}

/// Plain-text table: one row per metric × comparison, one `t p` column pair per
/// temperature. `†` marks tests that survive Bonferroni at α = 0.05.
pub fn render_table(battery: &Battery) -> String {
    let mut temps: Vec<f64> = Vec::new();
    for t in &battery.tests {
        if !temps.contains(&t.temperature) {
            temps.push(t.temperature);
        }
    }
    let mut rows: Vec<(String, String)> = Vec::new();
    for t in &battery.tests {
        let key = (t.metric.clone(), t.comparison.clone());
        if !rows.contains(&key) {
            rows.push(key);
        }
    }

    let mut out = String::new();
    let _ = write!(out, "{:<10} {:<16}", "metric", "alternative");
    for temp in &temps {
        let _ = write!(out, " | {:^20}", format!("tau={temp:.1}"));
    }
    out.push('\n');
    for (metric, comparison) in &rows {
        let _ = write!(out, "{metric:<10} {comparison:<16}");
        for temp in &temps {
            let cell = battery
                .tests
                .iter()
                .find(|t| &t.metric == metric && &t.comparison == comparison && t.temperature == *temp);
            let text = match cell {
                Some(t) => {
                    let t_str = match t.t {
                        Some(v) => format!("{v:.2}"),
                        None if t.mean_diff > 0.0 => "+inf".into(),
                        None => "-inf".into(),
                    };
                    let dagger = if t.significant_bonferroni_05 { "†" } else { "" };
                    format!("{t_str}{}{dagger} {}", stars(t.p), format_p(t.p))
                }
                None => "-".into(),
            };
            let _ = write!(out, " | {text:^20}");
        }
        out.push('\n');
    }
    let _ = writeln!(
        out,
        "uncorrected rejections: {}; Bonferroni ({} comparisons): {}; IUT p = {:.3}",
        battery
            .family
            .uncorrected
            .iter()
            .map(|c| format!("{}@{}", c.rejections, c.alpha))
            .collect::<Vec<_>>()
            .join(", "),
        battery.family.comparisons,
        battery
            .family
            .bonferroni
            .iter()
            .map(|c| format!("{}@{}", c.rejections, c.alpha))
            .collect::<Vec<_>>()
            .join(", "),
        battery.iut.iut_p,
    );
    out
}

fn format_p(p: f64) -> String {
    let s = format!("{p:.3}");
    s.strip_prefix('0').map(str::to_string).unwrap_or(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(pid: &str, sampler: &str, temp: f64, setting: &str, metric: &str, score: f64) -> HumanEvalRow {
        HumanEvalRow {
            participant_id: pid.into(),
            sampler: sampler.into(),
            temperature: temp,
            diversity_setting: setting.into(),
            metric: metric.into(),
            score,
        }
    }

    #[test]
    fn parses_csv_and_checks_columns() {
        let csv = "participant_id,sampler,temperature,diversity_setting,metric,score\n\
                   p1,min_p,1.0,high,quality,7\np1,basic,1.0,,quality,6\n";
        let rows = parse_human_eval(csv.as_bytes()).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[1].diversity_setting, "");
        assert!(parse_human_eval("participant_id,sampler\n".as_bytes()).is_err());
    }

    #[test]
    fn drops_incomplete_pairs_and_reports_them() {
        let mut rows = Vec::new();
        for (i, (a, b)) in [(7.0, 6.0), (5.0, 5.5), (8.0, 6.0), (6.0, 6.0)].iter().enumerate() {
            rows.push(row(&format!("p{i}"), "min_p", 1.0, "high", "quality", *a));
            rows.push(row(&format!("p{i}"), "basic", 1.0, "", "quality", *b));
        }
        rows.push(row("lonely", "min_p", 1.0, "high", "quality", 9.0));
        rows.push(row("other", "min_p", 1.0, "low", "quality", 1.0));
        let opts = BatteryOptions { baselines: vec![SamplerKind::Basic], ..Default::default() };
        let b = run_battery(&rows, &opts).unwrap();
        assert_eq!(b.tests.len(), 1);
        assert_eq!(b.tests[0].n, 4);
        assert_eq!(b.dropped_pairs[0].dropped, 1);
    }

    #[test]
    fn missing_cell_is_named() {
        let rows = vec![
            row("a", "min_p", 1.0, "high", "quality", 1.0),
            row("b", "min_p", 1.0, "high", "quality", 2.0),
            row("a", "basic", 1.0, "", "quality", 1.0),
            row("b", "basic", 1.0, "", "quality", 3.0),
            row("a", "min_p", 2.0, "high", "quality", 1.0),
            row("b", "min_p", 2.0, "high", "quality", 2.0),
        ];
        let opts = BatteryOptions { baselines: vec![SamplerKind::Basic], ..Default::default() };
        match run_battery(&rows, &opts) {
            Err(StatsError::Data(msg)) => assert!(msg.contains("temperature=2"), "{msg}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn duplicate_scores_rejected() {
        let rows = vec![
            row("a", "min_p", 1.0, "high", "quality", 1.0),
            row("a", "min_p", 1.0, "high", "quality", 2.0),
        ];
        assert!(matches!(run_battery(&rows, &BatteryOptions::default()), Err(StatsError::Data(_))));
    }

    #[test]
    fn table_marks_significance() {
        let mut rows = Vec::new();
        for i in 0..6 {
            let noise = [0.1, -0.1, 0.2, -0.2, 0.0, 0.05][i];
            rows.push(row(&i.to_string(), "min_p", 1.0, "high", "quality", 5.0 + 2.0 + noise));
            rows.push(row(&i.to_string(), "basic", 1.0, "", "quality", 5.0));
        }
        let opts = BatteryOptions { baselines: vec![SamplerKind::Basic], ..Default::default() };
        let b = run_battery(&rows, &opts).unwrap();
        let table = render_table(&b);
        assert!(table.contains("***†"), "{table}");
        assert!(table.contains("min_p > basic"));
    }
}
