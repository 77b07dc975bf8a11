//! Command-line front end: every computation in the library behind a
//! subcommand, with reproducible seeds, manifest replay, and both
//! human-readable and machine-readable output.
//!
//! Human tables round to 6 significant digits; `csv` and `json` output
//! carries full precision (shortest round-trip representation), and both
//! machine formats hold identical numeric content. Stochastic subcommands
//! (`simulate`, `reanalyze`) write their tables to files in `--out` and
//! emit exactly one `manifest.json` each; rerunning with `--replay
//! manifest.json` reproduces the data files bit-identically at any worker
//! count.

use crate::adaptive_euii::{
    euii_adaptive, mixture_moments, posterior_weights, OutcomeCells, DEFAULT_PRIORS,
};
use crate::dist::{
    ln_noncentral_t_cdf, noncentral_t_cdf, std_normal_cdf, std_normal_quantile, student_t_cdf,
    t_quantile, t_two_sided_p,
};
use crate::error::{Error, Result};
use crate::evidence::summarize;
use crate::fixed_design::{
    euii_asymptote, power_t, power_z, required_n, Arms, DesignPoint, Sidedness, TestKind,
};
use crate::gsd::{
    crossing_probabilities, expected_sample_sizes, max_sample_size, nominal_levels, Family,
    GsdSpec,
};
use crate::reanalysis::{
    read_dataset, reanalyze, InterimRounding, PpQuantile, ReanalysisMethod, ReanalysisResult,
    DEFAULT_FUTILITY_PP, DEFAULT_REPS as REANALYZE_DEFAULT_REPS,
};
use crate::simulator::{default_grid, run_study, SimCondition, StudyResult, DEFAULT_NSIM};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

/// Environment variable supplying the default worker count.
pub const WORKERS_ENV: &str = "EUII_WORKERS";

/// Parses the process arguments, runs the requested subcommand, and
/// returns the process exit code (0 success, 2 usage, 3 data, 4 numeric).
pub fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[derive(Parser)]
#[command(
    name = "euii",
    version,
    about = "Evidence per experimental unit of fixed, group-sequential, and adaptive designs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Likelihood ratios, diagnostic odds ratio, and per-unit evidence of a fixed design.
    Euii(EuiiArgs),
    /// Group-sequential boundaries, error rates, expected sizes, and evidence.
    Gsd(GsdArgs),
    /// Monte Carlo study of sequential stopping rules with optional futility.
    Simulate(SimulateArgs),
    /// Post-hoc single-interim reanalysis of a dataset of completed experiments.
    Reanalyze(ReanalyzeArgs),
    /// Distribution function evaluations (debugging aid).
    #[command(hide = true)]
    Dist(DistArgs),
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Euii(args) => cmd_euii(args),
        Command::Gsd(args) => cmd_gsd(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Reanalyze(args) => cmd_reanalyze(args),
        Command::Dist(args) => cmd_dist(args),
    }
}

// ---------------------------------------------------------------------------
// Shared flag vocabulary.

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutputFormat {
    /// Aligned table, 6 significant digits.
    Human,
    /// Comma-separated values, full precision.
    Csv,
    /// JSON, full precision.
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FileFormat {
    /// Comma-separated files, full precision.
    Csv,
    /// A single JSON file, full precision.
    Json,
}

impl FileFormat {
    fn as_str(self) -> &'static str {
        match self {
            FileFormat::Csv => "csv",
            FileFormat::Json => "json",
        }
    }

    fn parse(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(FileFormat::Csv),
            "json" => Ok(FileFormat::Json),
            other => Err(Error::Data(format!("unknown format '{other}' in manifest"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TestArg {
    Z,
    T,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SideArg {
    One,
    Two,
}

impl From<SideArg> for Sidedness {
    fn from(s: SideArg) -> Self {
        match s {
            SideArg::One => Sidedness::One,
            SideArg::Two => Sidedness::Two,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FamilyArg {
    Pocock,
    ObrienFleming,
    HaybittlePeto,
}

impl From<FamilyArg> for Family {
    fn from(f: FamilyArg) -> Self {
        match f {
            FamilyArg::Pocock => Family::Pocock,
            FamilyArg::ObrienFleming => Family::OBrienFleming,
            FamilyArg::HaybittlePeto => Family::HaybittlePeto,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum RoundingArg {
    /// Round each halved group to the nearest integer, halves upward.
    Nearest,
    /// Round each halved group upward.
    Ceil,
}

impl From<RoundingArg> for InterimRounding {
    fn from(r: RoundingArg) -> Self {
        match r {
            RoundingArg::Nearest => InterimRounding::HalfUp,
            RoundingArg::Ceil => InterimRounding::Ceiling,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PpArg {
    /// Standard-normal critical value in the predictive-power formula.
    Normal,
    /// Student-t critical value at the experiment's degrees of freedom.
    StudentT,
}

impl From<PpArg> for PpQuantile {
    fn from(p: PpArg) -> Self {
        match p {
            PpArg::Normal => PpQuantile::Normal,
            PpArg::StudentT => PpQuantile::StudentT,
        }
    }
}

fn default_workers() -> usize {
    std::env::var(WORKERS_ENV)
        .ok()
        .and_then(|s| s.parse::<usize>().ok())
        .filter(|&w| w >= 1)
        .unwrap_or(1)
}

// ---------------------------------------------------------------------------
// Number formatting.

/// Full-precision machine representation (shortest string that parses back
/// to the same value), shared by the CSV and JSON writers.
fn num(v: f64) -> String {
    format!("{v}")
}

/// Rounds to `sig` significant digits for human tables.
fn sig6(v: f64) -> String {
    format_sig(v, 6)
}

fn format_sig(v: f64, sig: usize) -> String {
    if v == 0.0 || !v.is_finite() {
        return format!("{v}");
    }
    let mag = v.abs().log10().floor() as i32;
    if !(-4..9).contains(&mag) {
        return format!("{:.*e}", sig.saturating_sub(1), v);
    }
    let decimals = (sig as i32 - 1 - mag).max(0) as usize;
    format!("{v:.decimals$}")
}

fn render_table(headers: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = headers.iter().map(|h| h.len()).collect();
    for row in rows {
        for (i, cell) in row.iter().enumerate() {
            widths[i] = widths[i].max(cell.len());
        }
    }
    let mut out = String::new();
    let mut push_row = |cells: Vec<&str>| {
        let line: Vec<String> = cells
            .iter()
            .enumerate()
            .map(|(i, c)| format!("{c:<width$}", width = widths[i]))
            .collect();
        out.push_str(line.join("  ").trim_end());
        out.push('\n');
    };
    push_row(headers.to_vec());
    for row in rows {
        push_row(row.iter().map(String::as_str).collect());
    }
    out
}

fn write_csv(path: &Path, headers: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)
        .map_err(|e| Error::Data(format!("cannot write {}: {e}", path.display())))?;
    w.write_record(headers)
        .and_then(|_| rows.iter().try_for_each(|r| w.write_record(r)))
        .and_then(|_| w.flush().map_err(csv::Error::from))
        .map_err(|e| Error::Data(format!("cannot write {}: {e}", path.display())))?;
    Ok(())
}

fn csv_to_stdout(headers: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_writer(std::io::stdout());
    w.write_record(headers)
        .and_then(|_| rows.iter().try_for_each(|r| w.write_record(r)))
        .and_then(|_| w.flush().map_err(csv::Error::from))
        .map_err(|e| Error::Data(format!("cannot write csv output: {e}")))?;
    Ok(())
}

fn json_to_stdout<T: Serialize>(value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::Data(format!("cannot serialize output: {e}")))?;
    println!("{text}");
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::Data(format!("cannot serialize {}: {e}", path.display())))?;
    let mut f = std::fs::File::create(path)?;
    f.write_all(text.as_bytes())?;
    f.write_all(b"\n")?;
    Ok(())
}

// ---------------------------------------------------------------------------
// euii: fixed-design evidence.

#[derive(Args)]
struct EuiiArgs {
    /// Target power; the sample size is computed from it.
    #[arg(long, conflicts_with = "beta")]
    power: Option<f64>,
    /// Target Type II error rate (equivalent to --power 1-beta).
    #[arg(long)]
    beta: Option<f64>,
    /// Significance level (the full level of the chosen sidedness).
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Standardized effect size.
    #[arg(long, allow_hyphen_values = true)]
    delta: f64,
    /// Number of arms (1 or 2).
    #[arg(long, default_value_t = 1)]
    arms: u8,
    /// Test statistic.
    #[arg(long, value_enum, default_value_t = TestArg::Z)]
    test: TestArg,
    /// Sidedness of the test.
    #[arg(long, value_enum, default_value_t = SideArg::Two)]
    sidedness: SideArg,
    /// Total sample size; power is computed at it. Conflicts with
    /// --power/--beta (the design would be overdetermined).
    #[arg(long, conflicts_with_all = ["power", "beta"])]
    n: Option<f64>,
    #[arg(long, value_enum, default_value_t = OutputFormat::Human)]
    format: OutputFormat,
}

#[derive(Serialize)]
struct EuiiReport {
    delta: f64,
    arms: u8,
    test: String,
    sidedness: String,
    alpha: f64,
    power: f64,
    n: f64,
    lr_plus: f64,
    lr_minus: f64,
    dor: f64,
    euii: f64,
    asymptote: f64,
}

fn cmd_euii(args: EuiiArgs) -> Result<()> {
    let arms = match args.arms {
        1 => Arms::One,
        2 => Arms::Two,
        other => {
            return Err(Error::Domain(format!(
                "--arms must be 1 or 2, got {other}"
            )))
        }
    };
    let sidedness: Sidedness = args.sidedness.into();
    let test = match args.test {
        TestArg::Z => TestKind::Z,
        TestArg::T => TestKind::T,
    };

    let power_target = match (args.power, args.beta) {
        (Some(p), None) => Some(p),
        (None, Some(b)) => {
            if !(b > 0.0 && b < 1.0) {
                return Err(Error::Domain(format!(
                    "--beta must lie in (0,1), got {b}"
                )));
            }
            Some(1.0 - b)
        }
        (None, None) => None,
        (Some(_), Some(_)) => unreachable!("clap conflict"),
    };

    let (n, power) = match (args.n, power_target) {
        (Some(n), None) => {
            let point = DesignPoint {
                delta: args.delta,
                arms,
                n_total: n,
                allocation: None,
                alpha: args.alpha,
                sidedness,
                test,
            };
            let p = match test {
                TestKind::Z => power_z(&point)?,
                TestKind::T => power_t(&point)?,
            };
            (n, p)
        }
        (None, Some(p)) => {
            // Closed-form normal-approximation sizing, as in the design
            // tables; the stated power is then used for the evidence row.
            let n = required_n(args.delta, args.alpha, 1.0 - p, arms, sidedness)?;
            (n, p)
        }
        (None, None) => {
            return Err(Error::Domain(
                "one of --power, --beta, or --n is required".into(),
            ))
        }
        (Some(_), Some(_)) => unreachable!("clap conflict"),
    };

    // Evidence convention: the Type I error rate is the full significance
    // level of the test as specified, regardless of sidedness.
    let summary = summarize(power, args.alpha, n)?;
    let lrs = crate::evidence::likelihood_ratios(power, args.alpha)?;
    let report = EuiiReport {
        delta: args.delta,
        arms: args.arms,
        test: format!("{:?}", args.test).to_lowercase(),
        sidedness: match sidedness {
            Sidedness::One => "one".into(),
            Sidedness::Two => "two".into(),
        },
        alpha: args.alpha,
        power,
        n,
        lr_plus: lrs.lr_plus,
        lr_minus: lrs.lr_minus,
        dor: summary.dor,
        euii: summary.euii,
        asymptote: euii_asymptote(args.delta, arms)?,
    };

    const FIELDS: [&str; 12] = [
        "delta", "arms", "test", "sidedness", "alpha", "power", "n", "lr_plus", "lr_minus",
        "dor", "euii", "asymptote",
    ];
    let values = |f: &dyn Fn(f64) -> String| -> Vec<String> {
        vec![
            f(report.delta),
            report.arms.to_string(),
            report.test.clone(),
            report.sidedness.clone(),
            f(report.alpha),
            f(report.power),
            f(report.n),
            f(report.lr_plus),
            f(report.lr_minus),
            f(report.dor),
            f(report.euii),
            f(report.asymptote),
        ]
    };
    match args.format {
        OutputFormat::Human => {
            let vals = values(&sig6);
            let rows: Vec<Vec<String>> = FIELDS
                .iter()
                .zip(vals)
                .map(|(k, v)| vec![k.to_string(), v])
                .collect();
            print!("{}", render_table(&["quantity", "value"], &rows));
        }
        OutputFormat::Csv => csv_to_stdout(&FIELDS, &[values(&num)])?,
        OutputFormat::Json => json_to_stdout(&report)?,
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// gsd: group-sequential designs.

#[derive(Args)]
struct GsdArgs {
    /// Boundary family.
    #[arg(long, value_enum)]
    family: FamilyArg,
    /// Number of equally spaced looks.
    #[arg(long)]
    looks: usize,
    /// Overall significance level (one-sided by default, as in design
    /// tables).
    #[arg(long, default_value_t = 0.025)]
    alpha: f64,
    #[arg(long, value_enum, default_value_t = SideArg::One)]
    sidedness: SideArg,
    /// Target power; with --delta, sizes the design.
    #[arg(long, requires = "delta")]
    power: Option<f64>,
    /// Standardized effect size under the alternative.
    #[arg(long, requires = "power", allow_hyphen_values = true)]
    delta: Option<f64>,
    /// Assumed prior probability of a true effect (repeatable).
    #[arg(long = "prior")]
    priors: Vec<f64>,
    #[arg(long, value_enum, default_value_t = OutputFormat::Human)]
    format: OutputFormat,
}

#[derive(Serialize)]
struct GsdEuiiRow {
    prior_h1: f64,
    lr_plus: f64,
    lr_minus: f64,
    e_n_plus: f64,
    e_n_minus: f64,
    euii_first: f64,
    euii_second: f64,
}

#[derive(Serialize)]
struct GsdReport {
    family: String,
    looks: usize,
    alpha: f64,
    sidedness: String,
    info_fractions: Vec<f64>,
    nominal_levels: Vec<f64>,
    z_bounds: Vec<f64>,
    overall_t1e: f64,
    power: Option<f64>,
    delta: Option<f64>,
    n_max: Option<f64>,
    cells: Option<OutcomeCells>,
    euii: Vec<GsdEuiiRow>,
}

fn gsd_euii_rows(cells: &OutcomeCells, priors: &[f64]) -> Result<Vec<GsdEuiiRow>> {
    if cells.h0_sig.empty || cells.h0_nonsig.empty || cells.h1_sig.empty || cells.h1_nonsig.empty
    {
        return Err(Error::DegenerateEvidence(
            "an outcome cell has zero probability; likelihood ratios are unbounded".into(),
        ));
    }
    let lr_plus = cells.h1_sig.mass / cells.h0_sig.mass;
    let lr_minus = cells.h1_nonsig.mass / cells.h0_nonsig.mass;
    if !(lr_plus > 0.0) || !(lr_minus > 0.0) {
        return Err(Error::DegenerateEvidence(
            "a likelihood ratio vanished; no finite evidence measure exists".into(),
        ));
    }
    let dor = lr_plus / lr_minus;
    priors
        .iter()
        .map(|&prior| {
            let weights = posterior_weights(prior, lr_plus, dor)?;
            let moments = mixture_moments(cells, &weights)?;
            let adaptive = euii_adaptive(lr_plus, lr_minus, &moments)?;
            Ok(GsdEuiiRow {
                prior_h1: prior,
                lr_plus,
                lr_minus,
                e_n_plus: adaptive.e_n_plus,
                e_n_minus: adaptive.e_n_minus,
                euii_first: adaptive.euii_first,
                euii_second: adaptive.euii_second,
            })
        })
        .collect()
}

fn cmd_gsd(args: GsdArgs) -> Result<()> {
    let family: Family = args.family.into();
    let sidedness: Sidedness = args.sidedness.into();
    let levels = nominal_levels(family, args.looks, args.alpha, sidedness)?;

    // The null crossing probability is scale-free, so a placeholder
    // maximum size serves when the design is not being sized.
    let (n_max, cells) = match (args.power, args.delta) {
        (Some(power), Some(delta)) => {
            let n_max = max_sample_size(family, args.looks, args.alpha, power, delta, sidedness)?;
            let spec = GsdSpec::equally_spaced(family, args.looks, args.alpha, sidedness, n_max)?;
            let cells = expected_sample_sizes(&spec, 0.0, delta)?;
            (Some(n_max), Some(cells))
        }
        _ => (None, None),
    };
    let spec = GsdSpec::equally_spaced(
        family,
        args.looks,
        args.alpha,
        sidedness,
        n_max.unwrap_or(1.0),
    )?;
    let overall_t1e = crossing_probabilities(&spec, 0.0)?.overall_reject;
    let z_bounds = spec.z_bounds()?;

    let priors: Vec<f64> = if args.priors.is_empty() {
        DEFAULT_PRIORS.to_vec()
    } else {
        args.priors.clone()
    };
    let euii = match &cells {
        Some(cells) => gsd_euii_rows(cells, &priors)?,
        None => Vec::new(),
    };

    let report = GsdReport {
        family: family.to_string(),
        looks: args.looks,
        alpha: args.alpha,
        sidedness: match sidedness {
            Sidedness::One => "one".into(),
            Sidedness::Two => "two".into(),
        },
        info_fractions: spec.info_fractions.clone(),
        nominal_levels: levels,
        z_bounds,
        overall_t1e,
        power: args.power,
        delta: args.delta,
        n_max,
        cells,
        euii,
    };

    match args.format {
        OutputFormat::Human => print_gsd_human(&report),
        OutputFormat::Csv => {
            let rows = gsd_long_rows(&report, &num);
            csv_to_stdout(&["quantity", "index", "value"], &rows)?;
        }
        OutputFormat::Json => json_to_stdout(&report)?,
    }
    Ok(())
}

/// Long-format rows (quantity, index, value) carrying every number of the
/// report; shared by the CSV writer and nothing else, so machine formats
/// stay numerically identical.
fn gsd_long_rows(report: &GsdReport, f: &dyn Fn(f64) -> String) -> Vec<Vec<String>> {
    let mut rows: Vec<Vec<String>> = Vec::new();
    let mut push = |q: &str, i: String, v: f64| rows.push(vec![q.to_string(), i, f(v)]);
    for (i, &v) in report.info_fractions.iter().enumerate() {
        push("info_fraction", (i + 1).to_string(), v);
    }
    for (i, &v) in report.nominal_levels.iter().enumerate() {
        push("nominal_level", (i + 1).to_string(), v);
    }
    for (i, &v) in report.z_bounds.iter().enumerate() {
        push("z_bound", (i + 1).to_string(), v);
    }
    push("overall_t1e", String::new(), report.overall_t1e);
    if let Some(n_max) = report.n_max {
        push("n_max", String::new(), n_max);
    }
    if let Some(cells) = &report.cells {
        for (name, cell) in [
            ("h0_sig", &cells.h0_sig),
            ("h0_nonsig", &cells.h0_nonsig),
            ("h1_sig", &cells.h1_sig),
            ("h1_nonsig", &cells.h1_nonsig),
        ] {
            push(&format!("{name}_mass"), String::new(), cell.mass);
            push(&format!("{name}_mean_n"), String::new(), cell.mean_n);
            push(&format!("{name}_var_n"), String::new(), cell.var_n);
        }
    }
    for row in &report.euii {
        let idx = num(row.prior_h1);
        push("lr_plus", idx.clone(), row.lr_plus);
        push("lr_minus", idx.clone(), row.lr_minus);
        push("e_n_plus", idx.clone(), row.e_n_plus);
        push("e_n_minus", idx.clone(), row.e_n_minus);
        push("euii_first", idx.clone(), row.euii_first);
        push("euii_second", idx, row.euii_second);
    }
    rows
}

fn print_gsd_human(report: &GsdReport) {
    println!(
        "{} design, {} look(s), {}-sided alpha {}",
        report.family,
        report.looks,
        report.sidedness,
        sig6(report.alpha)
    );
    let rows: Vec<Vec<String>> = (0..report.looks)
        .map(|i| {
            vec![
                (i + 1).to_string(),
                sig6(report.info_fractions[i]),
                sig6(report.nominal_levels[i]),
                sig6(report.z_bounds[i]),
            ]
        })
        .collect();
    print!(
        "{}",
        render_table(&["look", "info", "nominal level (one-tail)", "z bound"], &rows)
    );
    println!("overall type-I error: {}", sig6(report.overall_t1e));
    if let (Some(n_max), Some(power), Some(delta)) = (report.n_max, report.power, report.delta) {
        println!(
            "n_max: {} (power {} at delta {})",
            sig6(n_max),
            sig6(power),
            sig6(delta)
        );
    }
    if let Some(cells) = &report.cells {
        let cell_row = |name: &str, c: &crate::adaptive_euii::OutcomeCell| {
            vec![
                name.to_string(),
                sig6(c.mass),
                sig6(c.mean_n),
                sig6(c.var_n),
            ]
        };
        let rows = vec![
            cell_row("H0 significant", &cells.h0_sig),
            cell_row("H0 nonsignificant", &cells.h0_nonsig),
            cell_row("H1 significant", &cells.h1_sig),
            cell_row("H1 nonsignificant", &cells.h1_nonsig),
        ];
        println!("expected terminal sample sizes by outcome:");
        print!(
            "{}",
            render_table(&["cell", "mass", "mean n", "var n"], &rows)
        );
    }
    if !report.euii.is_empty() {
        let rows: Vec<Vec<String>> = report
            .euii
            .iter()
            .map(|r| {
                vec![
                    sig6(r.prior_h1),
                    sig6(r.lr_plus),
                    sig6(r.lr_minus),
                    sig6(r.e_n_plus),
                    sig6(r.e_n_minus),
                    sig6(r.euii_first),
                    sig6(r.euii_second),
                ]
            })
            .collect();
        println!("evidence per experimental unit by assumed prior:");
        print!(
            "{}",
            render_table(
                &["prior", "LR+", "LR-", "E(N|+)", "E(N|-)", "EUII (1st)", "EUII (2nd)"],
                &rows
            )
        );
    }
}

// ---------------------------------------------------------------------------
// Run manifests.

/// Record of one stochastic run: enough to reproduce it exactly.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    /// Which subcommand ran.
    pub subcommand: String,
    /// Tool version that produced the run.
    pub version: String,
    /// Master seed.
    pub seed: u64,
    /// Replications.
    pub reps: u64,
    /// Worker threads used (results do not depend on it).
    pub workers: usize,
    /// Output format of the data files.
    pub format: String,
    /// Subcommand-specific parameters.
    pub params: ManifestParams,
    /// Wall-clock duration of the run in seconds (informational; the only
    /// field that varies between a run and its replay).
    pub duration_secs: f64,
}

/// Subcommand-specific manifest payload.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ManifestParams {
    /// Simulation study parameters, with the full condition grid embedded.
    Simulate {
        /// Conditions simulated.
        grid: Vec<SimCondition>,
        /// Assumed priors for the evidence rows.
        priors: Vec<f64>,
    },
    /// Reanalysis parameters; the dataset stays external by path.
    Reanalyze {
        /// Dataset path as given.
        data: PathBuf,
        /// Futility threshold of the futility-enabled methods.
        futility_pp: f64,
        /// Interim rounding convention.
        rounding: InterimRounding,
        /// Predictive-power critical-value family.
        pp_quantile: PpQuantile,
    },
}

fn read_manifest(path: &Path, expect: &str) -> Result<RunManifest> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Data(format!("cannot read manifest {}: {e}", path.display())))?;
    let manifest: RunManifest = serde_json::from_str(&text)
        .map_err(|e| Error::Data(format!("malformed manifest {}: {e}", path.display())))?;
    if manifest.subcommand != expect {
        return Err(Error::Data(format!(
            "manifest {} records a '{}' run, not '{expect}'",
            path.display(),
            manifest.subcommand
        )));
    }
    Ok(manifest)
}

fn write_manifest(out: &Path, manifest: &RunManifest) -> Result<PathBuf> {
    let path = out.join("manifest.json");
    write_json(&path, manifest)?;
    Ok(path)
}

fn ensure_out_dir(out: &Path) -> Result<()> {
    std::fs::create_dir_all(out)
        .map_err(|e| Error::Data(format!("cannot create {}: {e}", out.display())))?;
    Ok(())
}

// ---------------------------------------------------------------------------
// simulate: the Monte Carlo study.

#[derive(Args)]
struct SimulateArgs {
    /// Condition grid: "default" or a path to a JSON array of conditions.
    #[arg(long, default_value = "default")]
    grid: String,
    /// Replications per condition.
    #[arg(long, default_value_t = DEFAULT_NSIM)]
    reps: u64,
    /// Master seed.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Worker threads (default: EUII_WORKERS or 1). Results are
    /// bit-identical for any value.
    #[arg(long)]
    workers: Option<usize>,
    /// Assumed prior probability of a true effect (repeatable).
    #[arg(long = "prior")]
    priors: Vec<f64>,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Replay a manifest: parameters come from it, flags below are ignored.
    #[arg(long, conflicts_with_all = ["grid", "reps", "seed", "priors"])]
    replay: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = FileFormat::Csv)]
    format: FileFormat,
}

const CONDITIONS_HEADER: [&str; 16] = [
    "n_max_per_group",
    "delta",
    "variant",
    "rejection_rate",
    "rejection_mcse",
    "mean_n_per_group",
    "mean_n_mcse",
    "futility_stop_rate",
    "sig_mass",
    "sig_mean_n_total",
    "sig_var_n_total",
    "nonsig_mass",
    "nonsig_mean_n_total",
    "nonsig_var_n_total",
    "nsim",
    "master_seed",
];

const EUII_HEADER: [&str; 10] = [
    "n_max_per_group",
    "delta",
    "variant",
    "prior_h1",
    "lr_plus",
    "lr_minus",
    "e_n_plus",
    "e_n_minus",
    "euii_first",
    "euii_second",
];

fn study_condition_rows(result: &StudyResult, f: &dyn Fn(f64) -> String) -> Vec<Vec<String>> {
    result
        .summaries
        .iter()
        .map(|s| {
            vec![
                s.condition.n_max_per_group.to_string(),
                f(s.condition.delta),
                s.condition.variant.label(),
                f(s.rejection_rate),
                f(s.rejection_mcse),
                f(s.mean_n_per_group),
                f(s.mean_n_mcse),
                f(s.futility_stop_rate),
                f(s.sig_cell.mass),
                f(s.sig_cell.mean_n),
                f(s.sig_cell.var_n),
                f(s.nonsig_cell.mass),
                f(s.nonsig_cell.mean_n),
                f(s.nonsig_cell.var_n),
                s.nsim.to_string(),
                s.master_seed.to_string(),
            ]
        })
        .collect()
}

fn study_euii_rows(result: &StudyResult, f: &dyn Fn(f64) -> String) -> Vec<Vec<String>> {
    result
        .euii_rows
        .iter()
        .map(|r| {
            vec![
                r.n_max_per_group.to_string(),
                f(r.delta),
                r.variant.label(),
                f(r.prior_h1),
                f(r.lr_plus),
                f(r.lr_minus),
                f(r.adaptive.e_n_plus),
                f(r.adaptive.e_n_minus),
                f(r.adaptive.euii_first),
                f(r.adaptive.euii_second),
            ]
        })
        .collect()
}

fn cmd_simulate(args: SimulateArgs) -> Result<()> {
    let (grid, reps, seed, priors, format) = match &args.replay {
        Some(path) => {
            let manifest = read_manifest(path, "simulate")?;
            let ManifestParams::Simulate { grid, priors } = manifest.params else {
                return Err(Error::Data(format!(
                    "manifest {} does not carry simulate parameters",
                    path.display()
                )));
            };
            (grid, manifest.reps, manifest.seed, priors, FileFormat::parse(&manifest.format)?)
        }
        None => {
            let grid = if args.grid == "default" {
                default_grid()
            } else {
                let text = std::fs::read_to_string(&args.grid)
                    .map_err(|e| Error::Data(format!("cannot read grid {}: {e}", args.grid)))?;
                serde_json::from_str::<Vec<SimCondition>>(&text)
                    .map_err(|e| Error::Data(format!("malformed grid {}: {e}", args.grid)))?
            };
            let priors = if args.priors.is_empty() {
                DEFAULT_PRIORS.to_vec()
            } else {
                args.priors.clone()
            };
            (grid, args.reps, args.seed, priors, args.format)
        }
    };
    let workers = args.workers.unwrap_or_else(default_workers);

    let started = Instant::now();
    let result = run_study(&grid, reps, seed, workers, &priors)?;
    let duration = started.elapsed().as_secs_f64();

    ensure_out_dir(&args.out)?;
    let mut written = Vec::new();
    match format {
        FileFormat::Csv => {
            let conditions = args.out.join("conditions.csv");
            write_csv(
                &conditions,
                &CONDITIONS_HEADER,
                &study_condition_rows(&result, &num),
            )?;
            let euii = args.out.join("euii.csv");
            write_csv(&euii, &EUII_HEADER, &study_euii_rows(&result, &num))?;
            written.push(conditions);
            written.push(euii);
        }
        FileFormat::Json => {
            let path = args.out.join("study.json");
            write_json(&path, &result)?;
            written.push(path);
        }
    }
    let manifest = RunManifest {
        subcommand: "simulate".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        seed,
        reps,
        workers,
        format: format.as_str().into(),
        params: ManifestParams::Simulate { grid, priors },
        duration_secs: duration,
    };
    written.push(write_manifest(&args.out, &manifest)?);

    println!(
        "simulated {} condition(s) x {} replication(s), seed {seed}, {} worker(s) in {:.1}s",
        result.summaries.len(),
        reps,
        workers,
        duration
    );
    if result.clamped_rates > 0 {
        eprintln!(
            "warning: {} empirical rate(s) at the Monte Carlo resolution limit were clamped \
             for the evidence table",
            result.clamped_rates
        );
    }
    if result.skipped_euii_conditions > 0 {
        eprintln!(
            "warning: {} condition(s) lack evidence rows because an outcome never occurred \
             in the sample; increase --reps",
            result.skipped_euii_conditions
        );
    }
    for path in written {
        println!("wrote {}", path.display());
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// reanalyze: dataset reanalysis.

#[derive(Args)]
struct ReanalyzeArgs {
    /// Dataset file: CSV with header id,n_control,n_treatment,effect.
    #[arg(long, required_unless_present = "replay")]
    data: Option<PathBuf>,
    /// Simulated interim analyses.
    #[arg(long, default_value_t = REANALYZE_DEFAULT_REPS)]
    reps: u64,
    /// Master seed.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Worker threads (default: EUII_WORKERS or 1). Results are
    /// bit-identical for any value.
    #[arg(long)]
    workers: Option<usize>,
    /// Predictive-power futility threshold of the futility-enabled rows.
    #[arg(long = "futility-pp", default_value_t = DEFAULT_FUTILITY_PP)]
    futility_pp: f64,
    /// Interim rounding convention.
    #[arg(long, value_enum, default_value_t = RoundingArg::Nearest)]
    rounding: RoundingArg,
    /// Critical-value family of the predictive-power formula.
    #[arg(long, value_enum, default_value_t = PpArg::Normal)]
    pp_quantile: PpArg,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Replay a manifest: parameters come from it, flags above are ignored.
    #[arg(long, conflicts_with_all = ["data", "reps", "seed", "futility_pp", "rounding", "pp_quantile"])]
    replay: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = FileFormat::Csv)]
    format: FileFormat,
}

const REANALYSIS_HEADER: [&str; 10] = [
    "method",
    "mean_n_median",
    "mean_n_lo025",
    "mean_n_hi975",
    "rejection_pct",
    "interim_efficacy_pct",
    "interim_futility_pct",
    "animals_saved_median",
    "animals_saved_lo025",
    "animals_saved_hi975",
];

fn reanalysis_rows(result: &ReanalysisResult, f: &dyn Fn(f64) -> String) -> Vec<Vec<String>> {
    result
        .summaries
        .iter()
        .map(|s| {
            vec![
                s.method.clone(),
                f(s.mean_n.median),
                f(s.mean_n.lo025),
                f(s.mean_n.hi975),
                f(s.rejection_pct),
                f(s.interim_efficacy_pct),
                f(s.interim_futility_pct),
                f(s.animals_saved.median),
                f(s.animals_saved.lo025),
                f(s.animals_saved.hi975),
            ]
        })
        .collect()
}

fn cmd_reanalyze(args: ReanalyzeArgs) -> Result<()> {
    let (data, reps, seed, futility_pp, rounding, pp_quantile, format) = match &args.replay {
        Some(path) => {
            let manifest = read_manifest(path, "reanalyze")?;
            let ManifestParams::Reanalyze { data, futility_pp, rounding, pp_quantile } =
                manifest.params
            else {
                return Err(Error::Data(format!(
                    "manifest {} does not carry reanalyze parameters",
                    path.display()
                )));
            };
            (
                data,
                manifest.reps,
                manifest.seed,
                futility_pp,
                rounding,
                pp_quantile,
                FileFormat::parse(&manifest.format)?,
            )
        }
        None => (
            args.data.clone().expect("clap enforces --data without --replay"),
            args.reps,
            args.seed,
            args.futility_pp,
            args.rounding.into(),
            args.pp_quantile.into(),
            args.format,
        ),
    };
    let workers = args.workers.unwrap_or_else(default_workers);

    let (rows, skipped) = read_dataset(&data)?;
    for s in &skipped {
        eprintln!("skipped line {}: {}", s.line, s.reason);
    }
    if rows.is_empty() {
        return Err(Error::Data(format!(
            "{}: zero valid rows ({} skipped)",
            data.display(),
            skipped.len()
        )));
    }

    let methods: Vec<ReanalysisMethod> = {
        let mut ms = Vec::with_capacity(6);
        for fut in [None, Some(futility_pp)] {
            for rule in [
                crate::reanalysis::InterimRule::HaybittlePeto,
                crate::reanalysis::InterimRule::OBrienFleming,
                crate::reanalysis::InterimRule::Pocock,
            ] {
                ms.push(ReanalysisMethod::new(rule, fut, pp_quantile)?);
            }
        }
        ms
    };

    let started = Instant::now();
    let result = reanalyze(&rows, &methods, reps, seed, workers, rounding)?;
    let duration = started.elapsed().as_secs_f64();

    for e in &result.excluded {
        eprintln!("excluded {}: {}", e.id, e.reason);
    }

    ensure_out_dir(&args.out)?;
    let mut written = Vec::new();
    match format {
        FileFormat::Csv => {
            let path = args.out.join("reanalysis.csv");
            write_csv(&path, &REANALYSIS_HEADER, &reanalysis_rows(&result, &num))?;
            written.push(path);
            if !result.excluded.is_empty() {
                let path = args.out.join("exclusions.csv");
                let rows: Vec<Vec<String>> = result
                    .excluded
                    .iter()
                    .map(|e| vec![e.id.clone(), e.reason.clone()])
                    .collect();
                write_csv(&path, &["id", "reason"], &rows)?;
                written.push(path);
            }
        }
        FileFormat::Json => {
            let path = args.out.join("reanalysis.json");
            write_json(&path, &result)?;
            written.push(path);
        }
    }
    let manifest = RunManifest {
        subcommand: "reanalyze".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        seed,
        reps,
        workers,
        format: format.as_str().into(),
        params: ManifestParams::Reanalyze { data, futility_pp, rounding, pp_quantile },
        duration_secs: duration,
    };
    written.push(write_manifest(&args.out, &manifest)?);

    print!(
        "{}",
        render_table(&REANALYSIS_HEADER, &reanalysis_rows(&result, &sig6))
    );
    println!(
        "{} experiment(s), {} repetition(s), seed {seed}, {} excluded, {} skipped",
        result.n_experiments,
        reps,
        result.excluded.len(),
        skipped.len()
    );
    for path in written {
        println!("wrote {}", path.display());
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// dist: hidden debugging surface.

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum DistOp {
    /// Standard normal CDF at --x.
    StdNormalCdf,
    /// Standard normal quantile at --p.
    StdNormalQuantile,
    /// Central t CDF at --x with --df.
    TCdf,
    /// Central t quantile at --p with --df.
    TQuantile,
    /// Two-sided p-value of a t statistic --x with --df.
    TTwoSidedP,
    /// Noncentral t CDF at --x with --df and --ncp.
    NctCdf,
    /// Natural log of the noncentral t CDF at --x with --df and --ncp.
    LnNctCdf,
}

#[derive(Args)]
struct DistArgs {
    /// Function to evaluate.
    #[arg(long, value_enum)]
    op: DistOp,
    /// Evaluation point for CDF-style functions.
    #[arg(long, allow_hyphen_values = true)]
    x: Option<f64>,
    /// Probability for quantile-style functions.
    #[arg(long)]
    p: Option<f64>,
    /// Degrees of freedom.
    #[arg(long)]
    df: Option<f64>,
    /// Noncentrality parameter.
    #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
    ncp: f64,
}

fn cmd_dist(args: DistArgs) -> Result<()> {
    let need = |v: Option<f64>, name: &str| {
        v.ok_or_else(|| Error::Domain(format!("--{name} is required for this operation")))
    };
    let value = match args.op {
        DistOp::StdNormalCdf => std_normal_cdf(need(args.x, "x")?)?,
        DistOp::StdNormalQuantile => std_normal_quantile(need(args.p, "p")?)?,
        DistOp::TCdf => student_t_cdf(need(args.x, "x")?, need(args.df, "df")?)?,
        DistOp::TQuantile => t_quantile(need(args.p, "p")?, need(args.df, "df")?)?,
        DistOp::TTwoSidedP => t_two_sided_p(need(args.x, "x")?, need(args.df, "df")?)?,
        DistOp::NctCdf => noncentral_t_cdf(need(args.x, "x")?, need(args.df, "df")?, args.ncp)?,
        DistOp::LnNctCdf => {
            ln_noncentral_t_cdf(need(args.x, "x")?, need(args.df, "df")?, args.ncp)?
        }
    };
    println!("{}", num(value));
    Ok(())
}
