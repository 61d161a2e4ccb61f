//! The `threshcal` command line.
//!
//! Results go to standard output as JSON (one object per line) or CSV;
//! progress and errors go to standard error. Exit codes: 0 success, 1 usage
//! or configuration error, 2 data error, 3 numeric failure.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::classifiers::{ClassifierSettings, GamLambda};
use crate::dataset::{
    clean, load_dataset, CleaningReport, Format, Label, LoadOptions, ScoreDataset, UnmappedLabel,
};
use crate::error::{Error, Result};
use crate::harness::{self, export_plot_data, Method, ReportFormat, RunConfig};
use crate::stats_tests::{independent_t_test, mann_whitney_u, TestMethod};

pub const SEED_ENV: &str = "THRESHCAL_SEED";

const LEVEL_HELP: &str = "Confidence level in (0, 1). Its meaning depends on the method: \
interval confidence (zscore), posterior floor (kde), recall target (emp-recall, pr-curve), \
1 - max FPR (roc-fpr), 1 - alpha (conformal); ignored by hist-min and youden";

#[derive(Debug, Parser)]
#[command(
    name = "threshcal",
    version,
    about = "Decision thresholds for [0, 1] evaluation scores from PASS/FAIL labels"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Load and clean the input; print the cleaning report and label balance.
    Validate(CommonArgs),
    /// t-test and Mann-Whitney U test of PASS scores against FAIL scores.
    Stats(CommonArgs),
    /// One method at one level on the full dataset.
    Threshold(ThresholdArgs),
    /// Stratified K-fold comparison of methods across confidence levels.
    Crossval(CrossvalArgs),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, ValueEnum)]
pub enum Emit {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// Input file(s), CSV or JSONL. Repeat for several libraries.
    #[arg(long, short = 'i')]
    pub input: Vec<PathBuf>,
    /// Input format; guessed from the extension when omitted.
    #[arg(long, value_parser = clap::value_parser!(Format))]
    pub format: Option<Format>,
    #[arg(long)]
    pub score_field: Option<String>,
    #[arg(long)]
    pub label_field: Option<String>,
    #[arg(long)]
    pub pass_token: Option<String>,
    #[arg(long)]
    pub fail_token: Option<String>,
    /// Drop rows whose label matches neither token instead of failing.
    #[arg(long)]
    pub skip_bad_labels: bool,
    /// TOML configuration; command-line flags take precedence over it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Standard output format.
    #[arg(long, value_enum, default_value_t = Emit::Json)]
    pub emit: Emit,
}

#[derive(Debug, Clone, Args)]
pub struct ThresholdArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// zscore, hist-min, kde, emp-recall, youden, pr-curve[:clf],
    /// roc-fpr[:clf], conformal[:clf]; clf is standard, polynomial or gam.
    #[arg(long)]
    pub method: String,
    #[arg(long, default_value_t = 0.95, help = LEVEL_HELP)]
    pub level: f64,
    /// Seed for the conformal fit/calibration split (falls back to THRESHCAL_SEED).
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Args)]
pub struct CrossvalArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Methods to compare (repeatable); default is every method.
    #[arg(long)]
    pub method: Vec<String>,
    /// Confidence levels (repeatable); default 0.8, 0.9, 0.95, 0.975, 0.99.
    #[arg(long)]
    pub level: Vec<f64>,
    #[arg(long)]
    pub folds: Option<usize>,
    /// Fold seed (falls back to THRESHCAL_SEED, then 0).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Report path; a directory when several inputs are given. Standard
    /// output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Directory for plot-data CSV files.
    #[arg(long)]
    pub plots: Option<PathBuf>,
}

/// `[data]`, `[run]` and `[output]` sections of the TOML configuration.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CliConfig {
    pub data: DataSection,
    pub run: RunConfig,
    pub output: OutputSection,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataSection {
    pub inputs: Vec<PathBuf>,
    pub format: Option<Format>,
    pub score_field: Option<String>,
    pub label_field: Option<String>,
    pub pass_token: Option<String>,
    pub fail_token: Option<String>,
    pub skip_bad_labels: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub out: Option<PathBuf>,
    pub report_format: Option<ReportFormat>,
    pub plots: Option<PathBuf>,
}

impl CliConfig {
    /// Parses a TOML file; relative paths are taken relative to its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => Error::FileNotFound(path.to_path_buf()),
            _ => Error::Io(e),
        })?;
        let mut cfg: CliConfig =
            toml::from_str(&text).map_err(|e| Error::ConfigInvalid(e.to_string()))?;
        let base = path.parent().unwrap_or(Path::new(""));
        let rebase = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        cfg.data.inputs.iter_mut().for_each(rebase);
        cfg.output.out.as_mut().map(rebase);
        cfg.output.plots.as_mut().map(rebase);
        Ok(cfg)
    }
}

fn load_config(common: &CommonArgs) -> Result<CliConfig> {
    match &common.config {
        Some(p) => CliConfig::load(p),
        None => Ok(CliConfig::default()),
    }
}

/// Flag, then config file, then environment, then 0.
fn resolve_seed(flag: Option<u64>, config: Option<u64>) -> Result<u64> {
    if let Some(s) = flag.or(config) {
        return Ok(s);
    }
    match std::env::var(SEED_ENV) {
        Ok(v) => v.trim().parse().map_err(|_| {
            Error::ConfigInvalid(format!("{SEED_ENV}=`{v}` is not an unsigned integer"))
        }),
        Err(_) => Ok(0),
    }
}

struct Input {
    library: String,
    dataset: ScoreDataset,
    report: CleaningReport,
}

fn library_name(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "data".to_string())
}

fn load_inputs(common: &CommonArgs, cfg: &DataSection) -> Result<Vec<Input>> {
    let paths = if common.input.is_empty() {
        &cfg.inputs
    } else {
        &common.input
    };
    if paths.is_empty() {
        return Err(Error::ConfigInvalid(
            "no input given (use --input or [data].inputs)".into(),
        ));
    }
    let defaults = LoadOptions::default();
    let pick = |flag: &Option<String>, file: &Option<String>, default: &str| {
        flag.clone()
            .or_else(|| file.clone())
            .unwrap_or_else(|| default.to_string())
    };
    paths
        .iter()
        .map(|path| {
            let opts = LoadOptions {
                format: common
                    .format
                    .or(cfg.format)
                    .unwrap_or_else(|| Format::from_path(path)),
                score_field: pick(&common.score_field, &cfg.score_field, &defaults.score_field),
                label_field: pick(&common.label_field, &cfg.label_field, &defaults.label_field),
                pass_token: pick(&common.pass_token, &cfg.pass_token, &defaults.pass_token),
                fail_token: pick(&common.fail_token, &cfg.fail_token, &defaults.fail_token),
                on_unmapped_label: if common.skip_bad_labels || cfg.skip_bad_labels {
                    UnmappedLabel::Skip
                } else {
                    UnmappedLabel::Error
                },
                ..defaults.clone()
            };
            let raw = load_dataset(path, &opts)?;
            let (dataset, report) = clean(&raw)?;
            Ok(Input {
                library: library_name(path),
                dataset,
                report,
            })
        })
        .collect()
}

/// Writes `rows` as JSON lines or as CSV with a header.
fn emit_rows<T: Serialize>(out: &mut dyn Write, emit: Emit, rows: &[T]) -> Result<()> {
    match emit {
        Emit::Json => {
            for r in rows {
                serde_json::to_writer(&mut *out, r)?;
                out.write_all(b"\n")?;
            }
        }
        Emit::Csv => {
            let mut w = csv::Writer::from_writer(&mut *out);
            for r in rows {
                w.serialize(r)?;
            }
            w.flush()?;
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct ValidateRow {
    library: String,
    rows_in: usize,
    rows_dropped_missing_score: usize,
    rows_dropped_bad_label: usize,
    rows_out: usize,
    n_pass: usize,
    n_fail: usize,
    pass_fraction: f64,
}

fn cmd_validate(args: &CommonArgs, out: &mut dyn Write) -> Result<()> {
    let cfg = load_config(args)?;
    let rows: Vec<ValidateRow> = load_inputs(args, &cfg.data)?
        .into_iter()
        .map(|i| {
            let n_pass = i.dataset.count(Label::Pass);
            ValidateRow {
                library: i.library,
                rows_in: i.report.rows_in,
                rows_dropped_missing_score: i.report.rows_dropped_missing_score,
                rows_dropped_bad_label: i.report.rows_dropped_bad_label,
                rows_out: i.report.rows_out,
                n_pass,
                n_fail: i.dataset.count(Label::Fail),
                pass_fraction: n_pass as f64 / i.dataset.len() as f64,
            }
        })
        .collect();
    emit_rows(out, args.emit, &rows)
}

#[derive(Serialize)]
struct StatsRow {
    library: String,
    test: TestMethod,
    statistic: f64,
    p_value: f64,
    n_pass: usize,
    n_fail: usize,
    mean_pass: f64,
    mean_fail: f64,
}

fn cmd_stats(args: &CommonArgs, out: &mut dyn Write) -> Result<()> {
    let cfg = load_config(args)?;
    let mut rows = Vec::new();
    for i in load_inputs(args, &cfg.data)? {
        i.dataset.require_both_labels()?;
        let pass = i.dataset.scores_with(Label::Pass);
        let fail = i.dataset.scores_with(Label::Fail);
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        for r in [
            independent_t_test(&pass, &fail, false)?,
            mann_whitney_u(&pass, &fail)?,
        ] {
            rows.push(StatsRow {
                library: i.library.clone(),
                test: r.method,
                statistic: r.statistic,
                p_value: r.p_value,
                n_pass: r.n_a,
                n_fail: r.n_b,
                mean_pass: mean(&pass),
                mean_fail: mean(&fail),
            });
        }
    }
    emit_rows(out, args.emit, &rows)
}

#[derive(Serialize)]
struct ThresholdRow {
    library: String,
    method: String,
    classifier: String,
    confidence: f64,
    threshold: f64,
    metric: String,
    value: f64,
}

#[derive(Serialize)]
struct ThresholdJson<'a> {
    library: &'a str,
    #[serde(flatten)]
    result: &'a harness::SingleThreshold,
}

fn cmd_threshold(args: &ThresholdArgs, out: &mut dyn Write) -> Result<()> {
    let method: Method = args.method.parse()?;
    let cfg = load_config(&args.common)?;
    let config = RunConfig {
        seed: resolve_seed(args.seed, args.common.config.as_ref().map(|_| cfg.run.seed))?,
        ..cfg.run.clone()
    };
    for i in load_inputs(&args.common, &cfg.data)? {
        let r = harness::single_threshold(method, args.level, &config, &i.dataset)?;
        match args.common.emit {
            Emit::Json => emit_rows(
                out,
                Emit::Json,
                &[ThresholdJson {
                    library: &i.library,
                    result: &r,
                }],
            )?,
            Emit::Csv => {
                let rows: Vec<ThresholdRow> = r
                    .metrics
                    .iter()
                    .map(|(k, v)| ThresholdRow {
                        library: i.library.clone(),
                        method: r.method.clone(),
                        classifier: r.classifier.clone(),
                        confidence: r.confidence,
                        threshold: r.threshold,
                        metric: k.clone(),
                        value: *v,
                    })
                    .collect();
                emit_rows(out, Emit::Csv, &rows)?;
            }
        }
    }
    Ok(())
}

fn cmd_crossval(args: &CrossvalArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    let cfg = load_config(&args.common)?;
    let mut config = cfg.run.clone();
    if !args.method.is_empty() {
        config.methods = args
            .method
            .iter()
            .map(|m| m.parse())
            .collect::<Result<_>>()?;
    }
    if !args.level.is_empty() {
        config.confidence_levels = args.level.clone();
    }
    if let Some(k) = args.folds {
        config.k_folds = k;
    }
    config.seed = resolve_seed(args.seed, args.common.config.as_ref().map(|_| cfg.run.seed))?;
    let config = config.validated()?;

    let inputs = load_inputs(&args.common, &cfg.data)?;
    let out_path = args.out.clone().or(cfg.output.out.clone());
    let plots = args.plots.clone().or(cfg.output.plots.clone());
    let format_for = |p: Option<&Path>| {
        cfg.output
            .report_format
            .unwrap_or(match (args.common.emit, p) {
                (_, Some(p))
                    if p.extension()
                        .is_some_and(|e| e.eq_ignore_ascii_case("json")) =>
                {
                    ReportFormat::Json
                }
                (_, Some(_)) => ReportFormat::Csv,
                (Emit::Json, None) => ReportFormat::Json,
                (Emit::Csv, None) => ReportFormat::Csv,
            })
    };
    if inputs.len() > 1 && out_path.is_none() {
        return Err(Error::ConfigInvalid(
            "several inputs need --out <directory>".into(),
        ));
    }

    for input in &inputs {
        let report = harness::run(&config, &input.dataset)?;
        match &out_path {
            None => harness::write_report(&report, format_for(None), &mut *out)?,
            Some(p) => {
                let target = if inputs.len() > 1 {
                    std::fs::create_dir_all(p)?;
                    let ext = match format_for(None) {
                        ReportFormat::Json => "json",
                        ReportFormat::Csv => "csv",
                    };
                    p.join(format!("{}.{ext}", input.library))
                } else {
                    p.clone()
                };
                harness::export_report(&report, format_for(Some(&target)), &target)?;
                writeln!(
                    err,
                    "{}: report written to {}",
                    input.library,
                    target.display()
                )?;
            }
        }
        if let Some(dir) = &plots {
            let files = export_plot_data(&input.dataset, &config, dir, &input.library)?;
            writeln!(
                err,
                "{}: {} plot files written to {}",
                input.library,
                files.len(),
                dir.display()
            )?;
        }
    }
    Ok(())
}

/// Runs the CLI on `args` (including the program name) and returns the exit
/// code.
pub fn run_with_args<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind as K;
            let text = e.render().to_string();
            return match e.kind() {
                K::DisplayHelp
                | K::DisplayVersion
                | K::DisplayHelpOnMissingArgumentOrSubcommand => {
                    let _ = out.write_all(text.as_bytes());
                    if e.kind() == K::DisplayHelpOnMissingArgumentOrSubcommand {
                        1
                    } else {
                        0
                    }
                }
                _ => {
                    let _ = err.write_all(text.as_bytes());
                    1
                }
            };
        }
    };
    let result = match &cli.command {
        Command::Validate(a) => cmd_validate(a, out),
        Command::Stats(a) => cmd_stats(a, out),
        Command::Threshold(a) => cmd_threshold(a, out),
        Command::Crossval(a) => cmd_crossval(a, out, err),
    };
    match result.and_then(|_| out.flush().map_err(Error::from)) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.kind().exit_code()
        }
    }
}

/// Default GAM smoothing for the configuration template.
pub fn config_template() -> String {
    let cfg = CliConfig {
        data: DataSection {
            inputs: vec![PathBuf::from("scores.csv")],
            ..DataSection::default()
        },
        run: RunConfig {
            classifier: ClassifierSettings {
                gam_lambda: GamLambda::Auto,
                ..ClassifierSettings::default()
            },
            ..RunConfig::default()
        },
        output: OutputSection {
            out: Some(PathBuf::from("report.csv")),
            ..OutputSection::default()
        },
    };
    toml::to_string(&cfg).expect("configuration serializes")
}
