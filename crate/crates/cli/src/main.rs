//! Command-line front end: data ingestion, model configuration, and
//! machine-readable reports for fitting, order selection, classification,
//! breakdown certificates, and empirical breakdown searches.
//!
//! Exit codes: 0 success, 2 invalid input or flags, 3 optimizer
//! non-convergence where convergence is required, 4 certificate
//! hypothesis violated.

mod report;

use clap::{Args, Parser, Subcommand, ValueEnum};
use mixbreak::{
    bic_gross_outlier_breakdown, bic_no_breakdown_certificate, calibrate, classify,
    empirical_contamination_probe, empirical_outlier_threshold, fit, improper_noise_certificate,
    nsd, select_order, Criterion, Dataset, Error as CoreError, Family, FitConfig, FitResult,
    NoiseRegime, Partition, ProbeMode,
};
use serde::Serialize;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "mixbreak",
    version,
    about = "Location-scale mixture estimation under a scale floor, with breakdown analysis",
    after_help = "Worker thread count follows RAYON_NUM_THREADS."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a mixture with a fixed number of components
    Fit(FitCmd),
    /// Estimate the number of components by criterion sweep
    Select(SelectCmd),
    /// Fit, then classify every point by posterior weight
    Classify(FitCmd),
    /// Evaluate a breakdown certificate
    Bound(BoundCmd),
    /// Empirical breakdown search (outlier threshold or contamination probe)
    Search(SearchCmd),
    /// Calibrate the scale floor ratio and improper noise level
    Calibrate(CalibrateCmd),
    /// Emit a Normal quantile dataset, one value per line
    Nsd(NsdCmd),
}

#[derive(Args, Serialize)]
struct ModelOpts {
    /// Data file: newline-delimited decimals; blank lines and '#' comments ignored
    #[arg(long)]
    data: PathBuf,
    /// Component family: normal | t:NU | huber[:K]
    #[arg(long, default_value = "normal")]
    family: String,
    /// Noise component: none | range | improper:B
    #[arg(long, default_value = "none")]
    noise: String,
    /// Scale floor applied to every component
    #[arg(long)]
    sigma0: f64,
}

#[derive(Args, Serialize)]
struct EmOpts {
    /// Number of EM restarts
    #[arg(long, default_value_t = 24)]
    restarts: usize,
    /// RNG seed for the randomized restarts
    #[arg(long, default_value_t = 1234)]
    seed: u64,
    /// EM iteration cap per start
    #[arg(long, default_value_t = 2000)]
    max_iters: usize,
    /// Relative log-likelihood improvement threshold
    #[arg(long, default_value_t = 1e-10)]
    rel_tol: f64,
}

impl EmOpts {
    fn config(&self, sigma0: f64) -> FitConfig {
        FitConfig {
            scale_floor: sigma0,
            restarts: self.restarts,
            max_iters: self.max_iters,
            rel_tol: self.rel_tol,
            seed: self.seed,
        }
    }
}

#[derive(Args, Serialize)]
struct OutputOpts {
    /// Report file (stdout when omitted); written atomically
    #[arg(long)]
    #[serde(skip)]
    output: Option<PathBuf>,
    /// Plot-data CSV file
    #[arg(long)]
    #[serde(skip)]
    plot: Option<PathBuf>,
    /// Report format
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum CriterionArg {
    Aic,
    Bic,
}

impl From<CriterionArg> for Criterion {
    fn from(c: CriterionArg) -> Criterion {
        match c {
            CriterionArg::Aic => Criterion::Aic,
            CriterionArg::Bic => Criterion::Bic,
        }
    }
}

#[derive(Args, Serialize)]
struct FitCmd {
    #[command(flatten)]
    model: ModelOpts,
    /// Number of mixture components
    #[arg(long)]
    s: usize,
    #[command(flatten)]
    em: EmOpts,
    #[command(flatten)]
    #[serde(flatten)]
    out: OutputOpts,
}

#[derive(Args, Serialize)]
struct SelectCmd {
    #[command(flatten)]
    model: ModelOpts,
    /// Selection criterion
    #[arg(long, value_enum, default_value_t = CriterionArg::Bic)]
    criterion: CriterionArg,
    /// Sweep ceiling (the distinct-value count always caps it)
    #[arg(long)]
    s_max: Option<usize>,
    #[command(flatten)]
    em: EmOpts,
    #[command(flatten)]
    #[serde(flatten)]
    out: OutputOpts,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
enum CertificateArg {
    /// Fixed-s lower bound for the improper-noise estimator
    #[value(name = "improper-noise")]
    #[serde(rename = "improper-noise")]
    ImproperNoise,
    /// No-breakdown lower bound at the BIC-selected order
    #[value(name = "bic-inlier")]
    #[serde(rename = "bic-inlier")]
    BicInlier,
    /// Gross-outlier upper bound at the BIC-selected order
    #[value(name = "bic-gross-outlier")]
    #[serde(rename = "bic-gross-outlier")]
    BicGrossOutlier,
}

#[derive(Args, Serialize)]
struct BoundCmd {
    #[command(flatten)]
    model: ModelOpts,
    /// Which certificate to evaluate
    #[arg(long, value_enum)]
    certificate: CertificateArg,
    /// Component count (required for improper-noise; defaults to the
    /// BIC-selected order otherwise)
    #[arg(long)]
    s: Option<usize>,
    /// Largest contamination size scanned (default 2n)
    #[arg(long)]
    g_max: Option<usize>,
    #[command(flatten)]
    em: EmOpts,
    #[command(flatten)]
    #[serde(flatten)]
    out: OutputOpts,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
enum SearchMode {
    /// Bisect for the smallest single-outlier position that collapses a
    /// fixed-s fit
    #[value(name = "outlier-threshold")]
    #[serde(rename = "outlier-threshold")]
    OutlierThreshold,
    /// Refit on explicitly contaminated data and report verdicts
    #[value(name = "contamination")]
    #[serde(rename = "contamination")]
    Contamination,
}

#[derive(Args, Serialize)]
struct SearchCmd {
    #[command(flatten)]
    model: ModelOpts,
    #[arg(long, value_enum)]
    mode: SearchMode,
    /// Fixed component count (outlier-threshold, or fixed-s contamination)
    #[arg(long)]
    s: Option<usize>,
    /// Added points for the contamination probe, comma-separated
    #[arg(long)]
    add: Option<String>,
    /// Re-estimate the order with this criterion instead of fixing s
    #[arg(long, value_enum)]
    estimate: Option<CriterionArg>,
    #[command(flatten)]
    em: EmOpts,
    #[command(flatten)]
    #[serde(flatten)]
    out: OutputOpts,
}

#[derive(Args, Serialize)]
struct CalibrateCmd {
    /// Calibration sample size
    #[arg(long)]
    n: usize,
    /// Probability that a clean n-sample contains no outlier
    #[arg(long, default_value_t = 0.95)]
    p: f64,
    /// Largest scale still read as one cluster in the application
    #[arg(long)]
    sigma_max: f64,
    /// Component family: normal | t:NU | huber[:K]
    #[arg(long, default_value = "normal")]
    family: String,
    #[command(flatten)]
    em: EmOpts,
    #[command(flatten)]
    #[serde(flatten)]
    out: OutputOpts,
}

#[derive(Args, Serialize)]
struct NsdCmd {
    /// Location
    #[arg(long, default_value_t = 0.0)]
    a: f64,
    /// Variance
    #[arg(long, default_value_t = 1.0)]
    var: f64,
    /// Number of points
    #[arg(long)]
    n: usize,
    /// Output file (stdout when omitted)
    #[arg(long)]
    #[serde(skip)]
    output: Option<PathBuf>,
}

struct CliError {
    code: u8,
    message: String,
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        let code = match e {
            CoreError::NonConvergence(_) => 3,
            CoreError::HypothesisViolated(_) => 4,
            _ => 2,
        };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError {
            code: 2,
            message: e.to_string(),
        }
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError {
            code: 2,
            message: e.to_string(),
        }
    }
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError {
        code: 2,
        message: msg.into(),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Fit(cmd) => run_fit(cmd, false),
        Command::Classify(cmd) => run_fit(cmd, true),
        Command::Select(cmd) => run_select(cmd),
        Command::Bound(cmd) => run_bound(cmd),
        Command::Search(cmd) => run_search(cmd),
        Command::Calibrate(cmd) => run_calibrate(cmd),
        Command::Nsd(cmd) => run_nsd(cmd),
    }
}

fn parse_family(spec: &str) -> Result<Family, CliError> {
    let lower = spec.to_ascii_lowercase();
    if lower == "normal" {
        return Ok(Family::Normal);
    }
    if lower == "huber" {
        return Ok(Family::huber_default());
    }
    if let Some(arg) = lower.strip_prefix("t:") {
        let nu: f64 = arg
            .parse()
            .map_err(|_| invalid(format!("bad degrees of freedom in family spec '{spec}'")))?;
        return Ok(Family::student_t(nu)?);
    }
    if let Some(arg) = lower.strip_prefix("huber:") {
        let k: f64 = arg
            .parse()
            .map_err(|_| invalid(format!("bad bending constant in family spec '{spec}'")))?;
        return Ok(Family::huber(k)?);
    }
    Err(invalid(format!(
        "unknown family '{spec}' (expected normal, t:NU, or huber[:K])"
    )))
}

fn parse_noise(spec: &str, data: &Dataset) -> Result<NoiseRegime, CliError> {
    let lower = spec.to_ascii_lowercase();
    if lower == "none" {
        return Ok(NoiseRegime::None);
    }
    if lower == "range" {
        return Ok(NoiseRegime::range_for(data)?);
    }
    if let Some(arg) = lower.strip_prefix("improper:") {
        let b: f64 = arg
            .parse()
            .map_err(|_| invalid(format!("bad level in noise spec '{spec}'")))?;
        return Ok(NoiseRegime::improper(b)?);
    }
    Err(invalid(format!(
        "unknown noise spec '{spec}' (expected none, range, or improper:B)"
    )))
}

fn read_data(path: &Path) -> Result<Dataset, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| invalid(format!("cannot read {}: {e}", path.display())))?;
    let mut values = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let v: f64 = trimmed.parse().map_err(|_| {
            invalid(format!(
                "{}:{}: not a decimal value: '{trimmed}'",
                path.display(),
                lineno + 1
            ))
        })?;
        values.push(v);
    }
    Ok(Dataset::new(values)?)
}

fn load_model(model: &ModelOpts) -> Result<(Dataset, Family, NoiseRegime), CliError> {
    let data = read_data(&model.data)?;
    let family = parse_family(&model.family)?;
    let regime = parse_noise(&model.noise, &data)?;
    Ok((data, family, regime))
}

fn finish<C: Serialize, R: Serialize>(
    command: &str,
    config: &C,
    result: &R,
    out: &OutputOpts,
    plot: Option<String>,
) -> Result<(), CliError> {
    let value = report::build(command, config, result)?;
    let body = match out.format {
        Format::Json => format!("{value:#}\n"),
        Format::Csv => report::to_csv(&value),
    };
    report::emit(out.output.as_deref(), &body)?;
    if let Some(path) = &out.plot {
        let csv = plot.unwrap_or_default();
        report::write_atomic(path, &csv)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct ClassifyResult {
    fit: FitResult,
    labels: Vec<usize>,
    clusters: Vec<ClusterOut>,
    noise_points: Vec<usize>,
}

#[derive(Serialize)]
struct ClusterOut {
    label: usize,
    points: Vec<usize>,
}

fn run_fit(cmd: FitCmd, classify_points: bool) -> Result<(), CliError> {
    let (data, family, regime) = load_model(&cmd.model)?;
    let cfg = cmd.em.config(cmd.model.sigma0);
    let result = fit(&data, cmd.s, family, &regime, &cfg)?;

    if classify_points {
        let partition = classify(&result.params, &data)?;
        let plot = cmd
            .out
            .plot
            .as_ref()
            .map(|_| classify_plot(&data, &partition));
        let clusters = partition
            .clusters()
            .into_iter()
            .map(|(label, points)| ClusterOut { label, points })
            .collect();
        let payload = ClassifyResult {
            fit: result,
            labels: partition.labels().to_vec(),
            clusters,
            noise_points: partition.noise_points(),
        };
        finish("classify", &cmd, &payload, &cmd.out, plot)
    } else {
        let plot = cmd.out.plot.as_ref().map(|_| density_plot(&data, &result));
        finish("fit", &cmd, &result, &cmd.out, plot)
    }
}

fn density_plot(data: &Dataset, result: &FitResult) -> String {
    let pad = 0.05 * data.range().max(1.0);
    let lo = data.xmin() - pad;
    let hi = data.xmax() + pad;
    let mut csv = String::from("x,density\n");
    for i in 0..=512 {
        let x = lo + (hi - lo) * i as f64 / 512.0;
        let _ = writeln!(csv, "{x},{}", result.params.mixture_density(x));
    }
    csv
}

fn classify_plot(data: &Dataset, partition: &Partition) -> String {
    let mut csv = String::from("index,x,label\n");
    for (i, (x, l)) in data.values().iter().zip(partition.labels()).enumerate() {
        let _ = writeln!(csv, "{i},{x},{l}");
    }
    csv
}

fn run_select(cmd: SelectCmd) -> Result<(), CliError> {
    let (data, family, regime) = load_model(&cmd.model)?;
    let cfg = cmd.em.config(cmd.model.sigma0);
    let result = select_order(
        &data,
        family,
        &regime,
        &cfg,
        cmd.criterion.into(),
        cmd.s_max,
    )?;
    let plot = cmd.out.plot.as_ref().map(|_| {
        let mut csv = String::from("s,loglik,k,value\n");
        for row in &result.rows {
            let _ = writeln!(csv, "{},{},{},{}", row.s, row.loglik, row.k, row.value);
        }
        csv
    });
    finish("select", &cmd, &result, &cmd.out, plot)
}

fn run_bound(cmd: BoundCmd) -> Result<(), CliError> {
    let (data, family, regime) = load_model(&cmd.model)?;
    let cfg = cmd.em.config(cmd.model.sigma0);
    let g_max = cmd.g_max.unwrap_or(2 * data.n());

    let rep = match cmd.certificate {
        CertificateArg::ImproperNoise => {
            let b = match regime {
                NoiseRegime::Improper { b } => b,
                _ => {
                    return Err(invalid(
                        "--certificate improper-noise needs --noise improper:B",
                    ))
                }
            };
            let s = cmd
                .s
                .ok_or_else(|| invalid("--certificate improper-noise needs --s"))?;
            improper_noise_certificate(&data, s, family, b, &cfg, g_max)?
        }
        CertificateArg::BicInlier | CertificateArg::BicGrossOutlier => {
            let s = match cmd.s {
                Some(s) => s,
                None => select_order(&data, family, &regime, &cfg, Criterion::Bic, None)?.selected,
            };
            if cmd.certificate == CertificateArg::BicInlier {
                bic_no_breakdown_certificate(&data, s, family, &regime, &cfg, g_max)?
            } else {
                bic_gross_outlier_breakdown(&data, s, family, &regime, &cfg)?
            }
        }
    };

    let plot = cmd.out.plot.as_ref().map(|_| {
        if rep.per_g.is_empty() {
            let mut csv = String::from("r,loglik,g_required\n");
            for row in &rep.per_r {
                let _ = writeln!(
                    csv,
                    "{},{},{}",
                    row.r,
                    row.loglik,
                    row.g_required.unwrap_or(f64::NAN)
                );
            }
            csv
        } else {
            let mut csv = String::from("g,value,certified\n");
            for row in &rep.per_g {
                let _ = writeln!(csv, "{},{},{}", row.g, row.value, row.certified);
            }
            csv
        }
    });
    finish("bound", &cmd, &rep, &cmd.out, plot)
}

fn run_search(cmd: SearchCmd) -> Result<(), CliError> {
    let (data, family, regime) = load_model(&cmd.model)?;
    let cfg = cmd.em.config(cmd.model.sigma0);

    match cmd.mode {
        SearchMode::OutlierThreshold => {
            if cmd.add.is_some() || cmd.estimate.is_some() {
                return Err(invalid(
                    "outlier-threshold mode takes --s only (no --add/--estimate)",
                ));
            }
            let s = cmd
                .s
                .ok_or_else(|| invalid("outlier-threshold mode needs --s"))?;
            let res = empirical_outlier_threshold(&data, s, family, &regime, &cfg)?;
            let plot = cmd.out.plot.as_ref().map(|_| {
                let mut csv = String::from("probe,y,broke\n");
                for (i, p) in res.trace.iter().enumerate() {
                    let _ = writeln!(csv, "{i},{},{}", p.y, p.broke);
                }
                csv
            });
            finish("search", &cmd, &res, &cmd.out, plot)
        }
        SearchMode::Contamination => {
            let spec = cmd
                .add
                .as_ref()
                .ok_or_else(|| invalid("contamination mode needs --add v1,v2,..."))?;
            let added: Vec<f64> = spec
                .split(',')
                .map(|t| {
                    t.trim()
                        .parse::<f64>()
                        .map_err(|_| invalid(format!("bad added value '{t}'")))
                })
                .collect::<Result<_, _>>()?;
            let mode = match (cmd.s, cmd.estimate) {
                (Some(s), None) => ProbeMode::FixedS(s),
                (None, Some(kind)) => ProbeMode::EstimatedS(kind.into()),
                _ => {
                    return Err(invalid(
                        "contamination mode needs exactly one of --s or --estimate",
                    ))
                }
            };
            let rep = empirical_contamination_probe(&data, &added, family, &regime, &cfg, mode)?;
            let plot = cmd.out.plot.as_ref().map(|_| {
                let mut csv = String::from("cluster,size,gamma_star,broke\n");
                if let Some(verdict) = &rep.classification {
                    for c in &verdict.clusters {
                        let _ =
                            writeln!(csv, "{},{},{},{}", c.label, c.size, c.gamma_star, c.broke);
                    }
                }
                csv
            });
            finish("search", &cmd, &rep, &cmd.out, plot)
        }
    }
}

fn run_calibrate(cmd: CalibrateCmd) -> Result<(), CliError> {
    let family = parse_family(&cmd.family)?;
    // The floor is what calibration estimates; the configured value only
    // seeds the FitConfig and is replaced during the root search.
    let cfg = cmd.em.config(0.01);
    let result = calibrate(cmd.n, cmd.p, cmd.sigma_max, family, &cfg)?;
    let plot = cmd.out.plot.as_ref().map(|_| {
        format!(
            "key,value\nc0,{}\nsigma0,{}\nb,{}\nalpha_n,{}\n",
            result.c0, result.sigma0, result.b, result.alpha_n
        )
    });
    finish("calibrate", &cmd, &result, &cmd.out, plot)
}

fn run_nsd(cmd: NsdCmd) -> Result<(), CliError> {
    let data = nsd(cmd.a, cmd.var, cmd.n)?;
    let mut body = String::new();
    for v in data.values() {
        let _ = writeln!(body, "{v}");
    }
    report::emit(cmd.output.as_deref(), &body)?;
    Ok(())
}
