//! `geocoherence` command-line driver.

use std::fs::File;
use std::io::{self, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use geocoherence::data::{
    generate_dataset, parse_trace_file, write_csv, write_jsonl, Dataset, ParseMode, SynthConfig,
    TraceFormat,
};
use geocoherence::ensemble::{Algorithm, EnsembleConfig, DEFAULT_ESTIMATORS};
use geocoherence::evaluation::{run_experiment, ExperimentSpec, ExperimentTable, DEFAULT_FOLDS};
use geocoherence::features::{
    extract_feature_matrix, feature_distribution, CoherenceMode, ExtractionConfig, DEFAULT_SCALE,
};
use geocoherence::threat::{
    adversary_probability, format_percent, post_compromise_probability, ThreatParams,
};
use geocoherence::Error;
use serde::Serialize;

const EXIT_USAGE: u8 = 1;
const EXIT_DATA: u8 = 2;
const EXIT_INTERNAL: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "geocoherence", version, about = "GPS distance-coherence authentication experiments")]
struct Cli {
    /// Worker threads for the parallel core (0 = all cores). Results do not depend on it.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,

    /// Seed for folds, trees and synthetic data.
    #[arg(long, global = true, env = "GEOCOHERENCE_SEED")]
    seed: Option<u64>,

    /// Output format.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,

    /// Write the main output here instead of stdout.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
    Table,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Parse a trace file and print a dataset summary.
    Ingest(InputArgs),
    /// Per-feature distribution statistics (mean, SE, median, SD, kurtosis, skewness, min, max).
    Stats {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        features: FeatureArgs,
        /// Coherence columns to include.
        #[arg(long, default_value_t = 6)]
        alpha: u32,
    },
    /// Write the feature matrix as CSV.
    Extract {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        features: FeatureArgs,
        /// Coherence columns dc_1..dc_alpha appended to the 7 base features.
        #[arg(long, default_value_t = 6)]
        alpha: u32,
    },
    /// Cross-validate NoDC against alpha-DC features.
    Evaluate {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        features: FeatureArgs,
        #[command(flatten)]
        model: ModelArgs,
        /// Coherence columns [default: rf 3, et 4, bagging 5].
        #[arg(long)]
        alpha: Option<u32>,
    },
    /// Cross-validate every alpha in a range against NoDC.
    Sweep {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        features: FeatureArgs,
        #[command(flatten)]
        model: ModelArgs,
        /// Alphas as `1..6`, `1-6` or `1,3,5`.
        #[arg(long, default_value = "1..6", value_parser = parse_alphas)]
        alpha: AlphaList,
    },
    /// Generate a synthetic habit dataset.
    Synth(SynthArgs),
    /// Adversary success probability for PIN plus behavioural check.
    Threat(ThreatArgs),
}

#[derive(Args, Debug)]
struct InputArgs {
    /// Trace file (.csv, or .jsonl/.ndjson).
    path: PathBuf,
    /// Abort on the first malformed row instead of skipping it.
    #[arg(long)]
    strict: bool,
}

#[derive(Args, Debug)]
struct FeatureArgs {
    /// Coherence-set rule.
    #[arg(long, default_value = "daily")]
    mode: CoherenceMode,
    /// Multiplier for coherence columns.
    #[arg(long, default_value_t = DEFAULT_SCALE)]
    scale: f64,
    /// Value for a coherence column whose set is empty.
    #[arg(long, default_value_t = 0.0)]
    fill: f64,
    /// Treat 23h and 0h as adjacent.
    #[arg(long)]
    wrap_hours: bool,
}

impl FeatureArgs {
    fn config(&self, alpha: u32) -> ExtractionConfig {
        ExtractionConfig {
            alpha,
            mode: self.mode,
            scale: self.scale,
            fill_value: self.fill,
            wrap_hours: self.wrap_hours,
        }
    }
}

#[derive(Args, Debug)]
struct ModelArgs {
    /// Ensemble(s) to run; repeat or comma-separate [default: all].
    #[arg(long, value_delimiter = ',')]
    algorithm: Vec<Algorithm>,
    /// Trees per ensemble.
    #[arg(long, default_value_t = DEFAULT_ESTIMATORS)]
    estimators: usize,
    /// Stratified cross-validation folds (>= 2).
    #[arg(long, default_value_t = DEFAULT_FOLDS, value_parser = parse_folds)]
    folds: usize,
}

impl ModelArgs {
    fn algorithms(&self) -> Vec<Algorithm> {
        if self.algorithm.is_empty() {
            Algorithm::ALL.to_vec()
        } else {
            let mut v = self.algorithm.clone();
            v.dedup();
            v
        }
    }
}

#[derive(Args, Debug)]
struct SynthArgs {
    /// key=value file (n_users, samples_per_user, anchors_per_user, ...); flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    users: Option<usize>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    anchors: Option<usize>,
    /// Gaussian noise around anchors, degrees.
    #[arg(long)]
    noise: Option<f64>,
    /// Emit JSON lines instead of CSV (also implied by a .jsonl output path).
    #[arg(long)]
    jsonl: bool,
}

#[derive(Args, Debug)]
struct ThreatArgs {
    /// Classifier false-negative rate used as the forge probability.
    #[arg(long, conflicts_with = "from_report")]
    forge: Option<f64>,
    /// Take the forge probability from the FNR of an `evaluate --format json` report.
    #[arg(long)]
    from_report: Option<PathBuf>,
    /// Algorithm whose FNR to read from the report [default: first alpha-DC cell].
    #[arg(long, requires = "from_report")]
    algorithm: Option<Algorithm>,
    /// PIN attempts allowed.
    #[arg(long, default_value_t = 4)]
    tries: u64,
    /// PIN length.
    #[arg(long, default_value_t = 6)]
    digits: u32,
    /// Candidates per PIN position.
    #[arg(long, default_value_t = 10)]
    symbols: u64,
}

#[derive(Debug, Clone)]
struct AlphaList(Vec<u32>);

fn parse_alphas(s: &str) -> Result<AlphaList, String> {
    let bad = || format!("bad alpha list `{s}`");
    let range = s.split_once("..").or_else(|| s.split_once('-'));
    let v: Vec<u32> = if let Some((a, b)) = range {
        let a: u32 = a.trim().parse().map_err(|_| bad())?;
        let b: u32 = b.trim_start_matches('=').trim().parse().map_err(|_| bad())?;
        if a > b {
            return Err(bad());
        }
        (a..=b).collect()
    } else {
        s.split(',').map(|t| t.trim().parse().map_err(|_| bad())).collect::<Result<_, _>>()?
    };
    if v.is_empty() {
        return Err(bad());
    }
    Ok(AlphaList(v))
}

fn parse_folds(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(k) if k >= 2 => Ok(k),
        Ok(k) => Err(format!("need at least 2 folds, got {k}")),
        Err(e) => Err(e.to_string()),
    }
}

/// Error carrying its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Config(_) => EXIT_USAGE,
            Error::Parse { .. }
            | Error::Range { .. }
            | Error::Timestamp { .. }
            | Error::Header { .. }
            | Error::Width { .. }
            | Error::Overflow { .. }
            | Error::Format(_)
            | Error::Io(_)
            | Error::Csv(_)
            | Error::Json(_) => EXIT_DATA,
            _ => EXIT_INTERNAL,
        };
        Failure { code, message: e.to_string() }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Error::from(e).into()
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure { code: EXIT_USAGE, message: message.into() }
}

type CmdResult = Result<(), Failure>;

struct Ctx {
    seed: Option<u64>,
    format: Option<Format>,
    output: Option<PathBuf>,
}

impl Ctx {
    fn format_or(&self, default: Format, allowed: &[Format]) -> Result<Format, Failure> {
        let f = self.format.unwrap_or(default);
        if allowed.contains(&f) {
            Ok(f)
        } else {
            Err(usage(format!("--format {f:?} is not supported by this command").to_lowercase()))
        }
    }

    fn sink(&self) -> Result<Box<dyn Write>, Failure> {
        Ok(match &self.output {
            Some(p) => Box::new(BufWriter::new(File::create(p)?)),
            None => Box::new(BufWriter::new(io::stdout().lock())),
        })
    }

    fn emit(&self, text: &str) -> CmdResult {
        let mut out = self.sink()?;
        out.write_all(text.as_bytes())?;
        out.flush()?;
        Ok(())
    }
}

fn load(input: &InputArgs) -> Result<Dataset, Failure> {
    let mode = if input.strict { ParseMode::Strict } else { ParseMode::Lenient };
    let outcome = parse_trace_file(&input.path, mode)?;
    for r in outcome.rejects.iter().take(10) {
        log::warn!("skipped row: {}", r.error);
    }
    if outcome.reject_count() > 0 {
        eprintln!("rejected {} row(s)", outcome.reject_count());
    }
    Ok(outcome.dataset)
}

fn to_json<T: Serialize>(v: &T) -> Result<String, Failure> {
    Ok(serde_json::to_string_pretty(v).map_err(Error::from)? + "\n")
}

fn cmd_ingest(ctx: &Ctx, input: &InputArgs) -> CmdResult {
    let mode = if input.strict { ParseMode::Strict } else { ParseMode::Lenient };
    let outcome = parse_trace_file(&input.path, mode)?;
    let summary = outcome.dataset.summary();
    match ctx.format_or(Format::Table, &[Format::Table, Format::Json])? {
        Format::Json => {
            #[derive(Serialize)]
            struct Report<'a> {
                #[serde(flatten)]
                summary: &'a geocoherence::data::DatasetSummary,
                rejected: usize,
            }
            ctx.emit(&to_json(&Report { summary: &summary, rejected: outcome.reject_count() })?)
        }
        _ => {
            let mut s = format!("{}\nrejected rows: {}\n", summary.headline(), outcome.reject_count());
            if let (Some(a), Some(b)) = (summary.first_date, summary.last_date) {
                s += &format!("dates: {a} .. {b}\n");
            }
            if let Some(bb) = summary.bounding_box {
                s += &format!(
                    "bounding box: lat [{}, {}], lon [{}, {}]\n",
                    bb.min_lat, bb.max_lat, bb.min_lon, bb.max_lon
                );
            }
            for r in outcome.rejects.iter().take(20) {
                s += &format!("  {}\n", r.error);
            }
            ctx.emit(&s)
        }
    }
}

fn cmd_stats(ctx: &Ctx, input: &InputArgs, features: &FeatureArgs, alpha: u32) -> CmdResult {
    let d = load(input)?;
    let m = extract_feature_matrix(&d, &features.config(alpha))?;
    let stats = feature_distribution(&m);
    match ctx.format_or(Format::Table, &[Format::Table, Format::Csv, Format::Json])? {
        Format::Json => ctx.emit(&to_json(&stats)?),
        Format::Csv => {
            let mut out = ctx.sink()?;
            stats.write_csv(&mut out)?;
            out.flush()?;
            Ok(())
        }
        Format::Table => ctx.emit(&stats.to_table()),
    }
}

fn cmd_extract(ctx: &Ctx, input: &InputArgs, features: &FeatureArgs, alpha: u32) -> CmdResult {
    ctx.format_or(Format::Csv, &[Format::Csv])?;
    let d = load(input)?;
    let m = extract_feature_matrix(&d, &features.config(alpha))?;
    let mut out = ctx.sink()?;
    m.write_csv(&mut out)?;
    out.flush()?;
    eprintln!(
        "{} rows x {} features, {} empty coherence cell(s) filled",
        m.n_rows(),
        m.n_cols(),
        m.filled_cells()
    );
    Ok(())
}

fn experiment_spec(
    ctx: &Ctx,
    features: &FeatureArgs,
    model: &ModelArgs,
    algorithms: Vec<Algorithm>,
    alphas: Vec<u32>,
) -> ExperimentSpec {
    let seed = ctx.seed.unwrap_or(0);
    let mut spec = ExperimentSpec::new(algorithms, alphas);
    spec.extraction = features.config(0);
    spec.ensemble = EnsembleConfig::new(Algorithm::RandomForest)
        .with_estimators(model.estimators)
        .with_seed(seed);
    spec.folds = model.folds;
    spec.seed = seed;
    spec
}

fn check(spec: &ExperimentSpec) -> CmdResult {
    spec.extraction.validate()?;
    spec.ensemble.validate()?;
    Ok(())
}

fn emit_table(ctx: &Ctx, table: &ExperimentTable, default: Format, sweep: bool) -> CmdResult {
    for w in &table.warnings {
        eprintln!("warning: {w}");
    }
    match ctx.format_or(default, &[Format::Table, Format::Csv, Format::Json])? {
        Format::Json => ctx.emit(&table.to_json()?),
        Format::Csv => {
            let mut out = ctx.sink()?;
            table.write_sweep_csv(&mut out)?;
            out.flush()?;
            if sweep && ctx.output.is_some() {
                print!("{}", table.sweep_table());
            }
            Ok(())
        }
        Format::Table if sweep => ctx.emit(&table.sweep_table()),
        Format::Table => ctx.emit(&table.comparison_table()),
    }
}

fn cmd_evaluate(
    ctx: &Ctx,
    input: &InputArgs,
    features: &FeatureArgs,
    model: &ModelArgs,
    alpha: Option<u32>,
) -> CmdResult {
    let d = load(input)?;
    let mut merged: Option<ExperimentTable> = None;
    for alg in model.algorithms() {
        let a = alpha.unwrap_or(alg.default_alpha());
        let spec = experiment_spec(ctx, features, model, vec![alg], vec![a]);
        check(&spec)?;
        let t = run_experiment(&d, &spec)?;
        match &mut merged {
            None => merged = Some(t),
            Some(m) => m.cells.extend(t.cells),
        }
    }
    let table = merged.ok_or_else(|| usage("no algorithm selected"))?;
    emit_table(ctx, &table, Format::Table, false)
}

fn cmd_sweep(
    ctx: &Ctx,
    input: &InputArgs,
    features: &FeatureArgs,
    model: &ModelArgs,
    alphas: &AlphaList,
) -> CmdResult {
    let d = load(input)?;
    let spec = experiment_spec(ctx, features, model, model.algorithms(), alphas.0.clone());
    check(&spec)?;
    let table = run_experiment(&d, &spec)?;
    emit_table(ctx, &table, Format::Csv, true)
}

fn cmd_synth(ctx: &Ctx, args: &SynthArgs) -> CmdResult {
    let mut cfg = SynthConfig::default();
    if let Some(path) = &args.config {
        let mut text = String::new();
        File::open(path)?.read_to_string(&mut text)?;
        cfg = cfg.apply_kv(&text)?;
    }
    if let Some(v) = args.users {
        cfg.n_users = v;
    }
    if let Some(v) = args.samples {
        cfg.samples_per_user = v;
    }
    if let Some(v) = args.anchors {
        cfg.anchors_per_user = v;
    }
    if let Some(v) = args.noise {
        cfg.noise_sigma_deg = v;
    }
    if let Some(s) = ctx.seed {
        cfg.seed = s;
    }
    ctx.format_or(Format::Csv, &[Format::Csv, Format::Json])?;
    let jsonl = args.jsonl
        || ctx.format == Some(Format::Json)
        || ctx.output.as_deref().is_some_and(|p| TraceFormat::from_path(p) == TraceFormat::Jsonl);
    let d = generate_dataset(&cfg)?;
    let mut out = ctx.sink()?;
    if jsonl {
        write_jsonl(&d, &mut out)?;
    } else {
        write_csv(&d, &mut out)?;
    }
    out.flush()?;
    eprintln!("{}", d.summary().headline());
    Ok(())
}

fn forge_from_report(path: &Path, algorithm: Option<Algorithm>) -> Result<f64, Failure> {
    let text = std::fs::read_to_string(path)?;
    let v: serde_json::Value = serde_json::from_str(&text).map_err(Error::from)?;
    let cells = v["cells"]
        .as_array()
        .ok_or_else(|| Failure { code: EXIT_DATA, message: "report has no `cells`".into() })?;
    let wanted = algorithm.map(|a| serde_json::to_value(a).unwrap_or_default());
    cells
        .iter()
        .filter(|c| c["alpha"].as_u64().unwrap_or(0) > 0)
        .find(|c| wanted.as_ref().is_none_or(|w| &c["algorithm"] == w))
        .and_then(|c| c["metrics"]["fnr"].as_f64())
        .ok_or_else(|| Failure { code: EXIT_DATA, message: "no matching alpha-DC FNR in report".into() })
}

fn cmd_threat(ctx: &Ctx, args: &ThreatArgs) -> CmdResult {
    let pr_forge = match (&args.from_report, args.forge) {
        (Some(p), _) => forge_from_report(p, args.algorithm)?,
        (None, Some(f)) => f,
        (None, None) => return Err(usage("give --forge or --from-report")),
    };
    let params = ThreatParams { pr_forge, n_t: args.tries, sigma: args.symbols, tau: args.digits };
    let pr_a = adversary_probability(&params)?;
    let pr_known = post_compromise_probability(&params)?;
    match ctx.format_or(Format::Table, &[Format::Table, Format::Json])? {
        Format::Json => {
            #[derive(Serialize)]
            struct Report {
                params: ThreatParams,
                pin_space: u64,
                adversary_probability: f64,
                post_compromise_probability: f64,
            }
            ctx.emit(&to_json(&Report {
                params,
                pin_space: params.pin_space()?,
                adversary_probability: pr_a,
                post_compromise_probability: pr_known,
            })?)
        }
        _ => ctx.emit(&format!(
            "Pr_forge = {pr_forge:e} ({})\nn_t = {}, sigma = {}, tau = {}\nPr_A = {pr_a:e} ({})\nPr_A with PIN known = {pr_known:e} ({})\n",
            format_percent(pr_forge),
            params.n_t,
            params.sigma,
            params.tau,
            format_percent(pr_a),
            format_percent(pr_known),
        )),
    }
}

fn configure_threads(threads: usize) -> CmdResult {
    #[cfg(feature = "parallel")]
    if threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| Failure { code: EXIT_INTERNAL, message: e.to_string() })?;
    }
    #[cfg(not(feature = "parallel"))]
    if threads > 1 {
        log::warn!("built without the parallel feature; --threads {threads} ignored");
    }
    Ok(())
}

fn run(cli: Cli) -> CmdResult {
    configure_threads(cli.threads)?;
    let ctx = Ctx { seed: cli.seed, format: cli.format, output: cli.output };
    match &cli.command {
        Command::Ingest(input) => cmd_ingest(&ctx, input),
        Command::Stats { input, features, alpha } => cmd_stats(&ctx, input, features, *alpha),
        Command::Extract { input, features, alpha } => cmd_extract(&ctx, input, features, *alpha),
        Command::Evaluate { input, features, model, alpha } => {
            cmd_evaluate(&ctx, input, features, model, *alpha)
        }
        Command::Sweep { input, features, model, alpha } => {
            cmd_sweep(&ctx, input, features, model, alpha)
        }
        Command::Synth(args) => cmd_synth(&ctx, args),
        Command::Threat(args) => cmd_threat(&ctx, args),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
