use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use sampler_audit::bestofn::{
    aggregate_seeds, best_of_n_curve, diff_curve, parse_score_table, write_curve_csv, write_diff_csv, BestOfNCurve,
    BestOfNError, ConfigPool, MissingSeeds,
};
use sampler_audit::harness::{HarnessConfig, HarnessError};
use sampler_audit::plot::{parse_plot_input, render, PlotFormat};
use sampler_audit::report::{InputDigest, Report};
use sampler_audit::sampling::{
    read_logit_csv, sample_trace, Sampler, SamplerConfig, SamplerKind, SamplingError, TruncationOrder,
};
use sampler_audit::stats::{parse_human_eval, render_table, run_battery, summarize_family, BatteryOptions, StatsError};

#[derive(Parser)]
#[command(name = "sampler-audit", version, about = "Truncation samplers and a statistical audit of sampler comparisons")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw tokens from logit rows, optionally printing every pipeline stage.
    Sample(SampleArgs),
    /// Run the n-gram harness sweep into a score-table CSV (resumable).
    Sweep(SweepArgs),
    /// Paired t-test battery over a human-evaluation CSV.
    AnalyzeTtests(TtestArgs),
    /// Bonferroni and intersection-union decisions over a p-value family.
    AnalyzeIut(IutArgs),
    /// Best-of-N expected-max curves per sampler.
    AnalyzeBestofn(BestOfNArgs),
    /// Best-of-N difference curve: target minus the best other sampler.
    AnalyzeDiff(DiffArgs),
    /// Render a curve CSV or battery report as SVG or TSV.
    Plot(PlotArgs),
}

#[derive(Args)]
struct SampleArgs {
    /// Logit CSV: `vocab_size,<V>` then one row of V logits per step.
    #[arg(long)]
    logits: PathBuf,
    #[arg(long, default_value = "basic")]
    sampler: SamplerKind,
    /// k for top_k, p for top_p, p_base for min_p.
    #[arg(long)]
    hyper: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    temperature: f64,
    #[arg(long, default_value = "temp-before")]
    order: TruncationOrder,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Draws per logit row; draw `j` of row `i` uses draw index `i * draws + j`.
    #[arg(long, default_value_t = 1)]
    draws: u64,
    #[arg(long)]
    explain: bool,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    config: PathBuf,
    /// Score-table CSV; completed cells already present are skipped.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct TtestArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long = "alpha", default_values_t = [0.05, 0.01])]
    alphas: Vec<f64>,
    /// Diversity setting to keep; `all` keeps every row.
    #[arg(long, default_value = "high")]
    diversity_setting: String,
    #[arg(long, default_value = "min_p")]
    target: SamplerKind,
    #[arg(long = "baseline", default_values_t = [SamplerKind::Basic, SamplerKind::TopP])]
    baselines: Vec<SamplerKind>,
    /// JSON report path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Text table path; stderr when absent.
    #[arg(long)]
    table: Option<PathBuf>,
}

#[derive(Args)]
struct IutArgs {
    /// Comma-separated p-values.
    #[arg(long, value_delimiter = ',', required_unless_present = "report", conflicts_with = "report")]
    pvalues: Option<Vec<f64>>,
    /// A report from analyze-ttests.
    #[arg(long)]
    report: Option<PathBuf>,
    #[arg(long = "alpha", default_values_t = [0.05, 0.01])]
    alphas: Vec<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CurveCommon {
    /// Score-table CSV (`sampler,hyper,temperature,seed,<metric>...`).
    #[arg(long)]
    scores: PathBuf,
    #[arg(long, default_value = "quality")]
    metric: String,
    /// Subset sizes: `1,2,5` or an inclusive range `1:100`.
    #[arg(long, default_value = "1:100")]
    ns: String,
    #[arg(long, default_value_t = 150)]
    repeats: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Curve CSV path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct BestOfNArgs {
    #[command(flatten)]
    common: CurveCommon,
    /// Restrict to these samplers; all in the table by default.
    #[arg(long = "sampler")]
    samplers: Vec<SamplerKind>,
}

#[derive(Args)]
struct DiffArgs {
    #[command(flatten)]
    common: CurveCommon,
    #[arg(long, default_value = "min_p")]
    target: SamplerKind,
}

#[derive(Args)]
struct PlotArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value = "svg")]
    format: PlotFormat,
    /// Output path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

enum CliError {
    Usage(String),
    Data(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            Self::Usage(_) => 2,
            Self::Data(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Self::Usage(m) | Self::Data(m) => m,
        }
    }
}

impl From<SamplingError> for CliError {
    fn from(e: SamplingError) -> Self {
        match e {
            SamplingError::InvalidTemperature(_) | SamplingError::InvalidConfig(_) => Self::Usage(e.to_string()),
            _ => Self::Data(e.to_string()),
        }
    }
}

impl From<StatsError> for CliError {
    fn from(e: StatsError) -> Self {
        Self::Data(e.to_string())
    }
}

impl From<BestOfNError> for CliError {
    fn from(e: BestOfNError) -> Self {
        match e {
            BestOfNError::InvalidInput(_) => Self::Usage(e.to_string()),
            _ => Self::Data(e.to_string()),
        }
    }
}

impl From<HarnessError> for CliError {
    fn from(e: HarnessError) -> Self {
        match e {
            HarnessError::Config(_) | HarnessError::InvalidSmoothing(_) | HarnessError::InvalidOrder(_) => {
                Self::Usage(e.to_string())
            }
            _ => Self::Data(e.to_string()),
        }
    }
}

type CliResult<T> = Result<T, CliError>;

fn read_input(path: &Path) -> CliResult<Vec<u8>> {
    std::fs::read(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn write_output(path: Option<&Path>, text: &str) -> CliResult<()> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::Data(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn digest(path: &Path, bytes: &[u8]) -> InputDigest {
    InputDigest::of_bytes(path.display().to_string(), bytes)
}

fn command_echo() -> Vec<String> {
    std::env::args().skip(1).collect()
}

fn configure_threads() -> CliResult<()> {
    let Ok(raw) = std::env::var("SAMPLER_AUDIT_THREADS") else { return Ok(()) };
    let n: usize = raw
        .trim()
        .parse()
        .map_err(|_| CliError::Usage(format!("SAMPLER_AUDIT_THREADS must be a non-negative integer, got '{raw}'")))?;
    if n > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(format!("cannot configure threads: {e}")))?;
    }
    Ok(())
}

fn join(values: &[f64]) -> String {
    values.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" ")
}

fn cmd_sample(a: &SampleArgs) -> CliResult<()> {
    let sampler = Sampler::from_parts(a.sampler, a.hyper)?;
    let config = SamplerConfig::new(sampler, a.temperature, a.order)?;
    let rows = read_logit_csv(&a.logits)?;
    if a.draws == 0 {
        return Err(CliError::Usage("--draws must be >= 1".into()));
    }
    let mut out = String::new();
    for (i, logits) in rows.iter().enumerate() {
        for j in 0..a.draws {
            let index = i as u64 * a.draws + j;
            let t = sample_trace(&config, logits, a.seed, index)?;
            if !a.explain {
                let _ = writeln!(out, "{}", t.token);
                continue;
            }
            let keep: Vec<String> = t.keep.indices().iter().map(|k| k.to_string()).collect();
            let _ = writeln!(out, "row {i} draw {index}");
            let _ = writeln!(out, "  config: {} hyper={:?} temperature={} order={}", a.sampler, a.hyper, a.temperature, a.order);
            let _ = writeln!(out, "  logits: {}", join(&t.logits));
            let _ = writeln!(out, "  scaled: {}", join(&t.scaled_logits));
            let _ = writeln!(out, "  probs: {}", join(&t.truncation_probs));
            let _ = writeln!(out, "  keep: {}", keep.join(" "));
            let _ = writeln!(out, "  renormalized: {}", join(&t.final_probs));
            match t.uniform {
                Some(u) => {
                    let _ = writeln!(out, "  u: {u}");
                }
                None => out.push_str("  u: greedy\n"),
            }
            let _ = writeln!(out, "  token: {}", t.token);
        }
    }
    write_output(None, &out)
}

#[derive(Serialize)]
struct SweepResults {
    cells: usize,
    generated: usize,
    reused: usize,
    output: String,
}

fn cmd_sweep(a: &SweepArgs) -> CliResult<()> {
    let config = HarnessConfig::load(&a.config)?;
    let model = config.build_model()?;
    let spec = config.sweep_spec()?;
    let outcome = sampler_audit::harness::run_sweep(&model, &spec, &a.out)?;
    eprintln!(
        "{} cells: {} generated, {} already present in {}",
        outcome.rows.len(),
        outcome.generated,
        outcome.reused,
        a.out.display()
    );
    if let Some(path) = &a.report {
        let inputs = vec![
            digest(&a.config, &read_input(&a.config)?),
            digest(&config.corpus, &read_input(&config.corpus)?),
            digest(&a.out, &read_input(&a.out)?),
        ];
        let results = SweepResults {
            cells: outcome.rows.len(),
            generated: outcome.generated,
            reused: outcome.reused,
            output: a.out.display().to_string(),
        };
        write_output(Some(path), &Report::new(command_echo(), inputs, results).to_json())?;
    }
    Ok(())
}

fn check_alphas(alphas: &[f64]) -> CliResult<()> {
    if alphas.is_empty() || alphas.iter().any(|a| !(*a > 0.0 && *a < 1.0)) {
        return Err(CliError::Usage("every --alpha must lie in (0, 1)".into()));
    }
    Ok(())
}

fn cmd_ttests(a: &TtestArgs) -> CliResult<()> {
    check_alphas(&a.alphas)?;
    let bytes = read_input(&a.input)?;
    let rows = parse_human_eval(bytes.as_slice())?;
    let opts = BatteryOptions {
        diversity_setting: (a.diversity_setting != "all").then(|| a.diversity_setting.clone()),
        target: a.target,
        baselines: a.baselines.clone(),
        alphas: a.alphas.clone(),
    };
    let battery = run_battery(&rows, &opts)?;
    let table = render_table(&battery);
    match &a.table {
        Some(p) => write_output(Some(p), &table)?,
        None => eprint!("{table}"),
    }
    let report = Report::new(command_echo(), vec![digest(&a.input, &bytes)], &battery);
    write_output(a.out.as_deref(), &report.to_json())
}

fn pvalues_from_report(path: &Path, bytes: &[u8]) -> CliResult<Vec<f64>> {
    let v: serde_json::Value = serde_json::from_slice(bytes)
        .map_err(|e| CliError::Data(format!("{}: invalid JSON: {e}", path.display())))?;
    let tests = v
        .get("results")
        .unwrap_or(&v)
        .get("tests")
        .and_then(|t| t.as_array())
        .ok_or_else(|| CliError::Data(format!("{}: no tests array", path.display())))?;
    tests
        .iter()
        .map(|t| {
            t.get("p")
                .and_then(|p| p.as_f64())
                .ok_or_else(|| CliError::Data(format!("{}: test without a p-value", path.display())))
        })
        .collect()
}

fn cmd_iut(a: &IutArgs) -> CliResult<()> {
    check_alphas(&a.alphas)?;
    let (pvalues, inputs) = match (&a.pvalues, &a.report) {
        (Some(p), _) => (p.clone(), Vec::new()),
        (None, Some(path)) => {
            let bytes = read_input(path)?;
            (pvalues_from_report(path, &bytes)?, vec![digest(path, &bytes)])
        }
        (None, None) => unreachable!("clap enforces one source"),
    };
    if pvalues.iter().any(|p| !(0.0..=1.0).contains(p)) {
        return Err(CliError::Data("p-values must lie in [0, 1]".into()));
    }
    let summary = summarize_family(&pvalues, &a.alphas)?;
    write_output(a.out.as_deref(), &Report::new(command_echo(), inputs, summary).to_json())
}

fn parse_ns(spec: &str) -> CliResult<Vec<usize>> {
    let bad = || CliError::Usage(format!("--ns expects `a,b,c` or `lo:hi`, got '{spec}'"));
    let ns: Vec<usize> = if let Some((lo, hi)) = spec.split_once(':') {
        let lo: usize = lo.trim().parse().map_err(|_| bad())?;
        let hi: usize = hi.trim().parse().map_err(|_| bad())?;
        if lo > hi {
            return Err(bad());
        }
        (lo..=hi).collect()
    } else {
        spec.split(',').map(|s| s.trim().parse().map_err(|_| bad())).collect::<CliResult<_>>()?
    };
    if ns.is_empty() || ns.contains(&0) {
        return Err(bad());
    }
    Ok(ns)
}

fn load_pool(c: &CurveCommon) -> CliResult<(ConfigPool, InputDigest)> {
    let bytes = read_input(&c.scores)?;
    let records = parse_score_table(bytes.as_slice(), &c.metric)?;
    Ok((aggregate_seeds(&records)?, digest(&c.scores, &bytes)))
}

fn warn_missing(missing: &[MissingSeeds]) {
    if !missing.is_empty() {
        eprintln!("warning: {} configurations lack some seeds; their means use the seeds present", missing.len());
    }
}

#[derive(Serialize)]
struct CurveResults<'a, C: Serialize> {
    metric: &'a str,
    repeats: usize,
    seed: u64,
    pool_sizes: Vec<(SamplerKind, usize)>,
    missing_seeds: &'a [MissingSeeds],
    #[serde(flatten)]
    curves: C,
}

#[derive(Serialize)]
struct Curves<'a> {
    curves: &'a [BestOfNCurve],
}

#[derive(Serialize)]
struct Diff<'a> {
    diff: &'a sampler_audit::bestofn::DiffCurve,
}

fn pool_sizes(pool: &ConfigPool) -> Vec<(SamplerKind, usize)> {
    pool.samplers().map(|s| (s, pool.configs(s).map_or(0, |c| c.len()))).collect()
}

fn to_string_csv(f: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>) -> CliResult<String> {
    let mut buf = Vec::new();
    f(&mut buf).map_err(|e| CliError::Data(e.to_string()))?;
    Ok(String::from_utf8(buf).expect("CSV output is UTF-8"))
}

fn cmd_bestofn(a: &BestOfNArgs) -> CliResult<()> {
    let c = &a.common;
    let ns = parse_ns(&c.ns)?;
    let (pool, input) = load_pool(c)?;
    warn_missing(&pool.missing_seeds);
    let samplers: Vec<SamplerKind> = if a.samplers.is_empty() { pool.samplers().collect() } else { a.samplers.clone() };
    let curves = samplers
        .iter()
        .map(|&s| best_of_n_curve(&pool, s, &ns, c.repeats, c.seed))
        .collect::<Result<Vec<_>, _>>()?;
    write_output(c.out.as_deref(), &to_string_csv(|b| write_curve_csv(b, &curves))?)?;
    if let Some(path) = &c.report {
        let results = CurveResults {
            metric: &c.metric,
            repeats: c.repeats,
            seed: c.seed,
            pool_sizes: pool_sizes(&pool),
            missing_seeds: &pool.missing_seeds,
            curves: Curves { curves: &curves },
        };
        write_output(Some(path), &Report::new(command_echo(), vec![input], results).to_json())?;
    }
    Ok(())
}

fn cmd_diff(a: &DiffArgs) -> CliResult<()> {
    let c = &a.common;
    let ns = parse_ns(&c.ns)?;
    let (pool, input) = load_pool(c)?;
    warn_missing(&pool.missing_seeds);
    let diff = diff_curve(&pool, a.target, &ns, c.repeats, c.seed)?;
    write_output(c.out.as_deref(), &to_string_csv(|b| write_diff_csv(b, &diff))?)?;
    if let Some(path) = &c.report {
        let results = CurveResults {
            metric: &c.metric,
            repeats: c.repeats,
            seed: c.seed,
            pool_sizes: pool_sizes(&pool),
            missing_seeds: &pool.missing_seeds,
            curves: Diff { diff: &diff },
        };
        write_output(Some(path), &Report::new(command_echo(), vec![input], results).to_json())?;
    }
    Ok(())
}

fn cmd_plot(a: &PlotArgs) -> CliResult<()> {
    let bytes = read_input(&a.input)?;
    let text = String::from_utf8(bytes).map_err(|_| CliError::Data(format!("{}: not UTF-8", a.input.display())))?;
    let data = parse_plot_input(&text).map_err(|e| CliError::Data(format!("{}: {e}", a.input.display())))?;
    write_output(a.out.as_deref(), &render(&data, a.format))
}

fn run(cli: Cli) -> CliResult<()> {
    configure_threads()?;
    match &cli.command {
        Command::Sample(a) => cmd_sample(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::AnalyzeTtests(a) => cmd_ttests(a),
        Command::AnalyzeIut(a) => cmd_iut(a),
        Command::AnalyzeBestofn(a) => cmd_bestofn(a),
        Command::AnalyzeDiff(a) => cmd_diff(a),
        Command::Plot(a) => cmd_plot(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}
