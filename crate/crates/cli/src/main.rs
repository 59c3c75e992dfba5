use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use lasserre_cli::config::{DomainRef, R_MAX_LIMIT};
use lasserre_cli::experiment::DEFAULT_CEILING;
use lasserre_cli::output::{self, fmt_g17};
use lasserre_cli::{
    rate_report, ratio_report, registry, run, CliError, Engine, EstimatorChoice, ExperimentConfig, Format,
    MeasureConfig, Result,
};
use lasserre_core::needles::{lambda_lower, needle_eval};
use lasserre_core::{MomentOracle, MonomialBasis, NeedleSpec};

#[derive(Parser)]
#[command(name = "lasserre", version, about = "Measure-based upper bounds for polynomial minimization")]
struct Cli {
    /// Working precision of moment assembly, in bits.
    #[arg(long, global = true, default_value_t = 256)]
    precision_bits: u32,
    /// Seed for sampling-based certificates.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Bound series f^(r), r = 1..r_max, for one cell.
    Bound(BoundArgs),
    /// Error ratio E_A^(r) / E_B^(r) between two cells of one function.
    Ratio(RatioArgs),
    /// Fitted log-log slopes of error series.
    Rate(RateArgs),
    /// Needle, half-needle and lower-envelope values on [-1, 1].
    NeedleTable(NeedleTableArgs),
    /// Moment table of a (domain, measure) pair.
    MomentsDump(MomentsArgs),
}

#[derive(Args, Clone)]
struct CellArgs {
    /// Registry function name.
    #[arg(long)]
    function: Option<String>,
    /// Registry domain name.
    #[arg(long)]
    domain: Option<String>,
    /// lebesgue, chebyshev, box-jacobi or ball-jacobi.
    #[arg(long, default_value = "lebesgue")]
    measure: String,
    /// Jacobi exponent for box-jacobi / ball-jacobi.
    #[arg(long, allow_hyphen_values = true)]
    lambda: Option<f64>,
    #[arg(long, default_value_t = 20)]
    r_max: usize,
    /// Known minimum, when the registry cannot supply one.
    #[arg(long, allow_hyphen_values = true)]
    f_min: Option<f64>,
    /// Move the minimizer to the origin and shrink into the unit ball first.
    #[arg(long)]
    recentre: bool,
}

#[derive(Args)]
struct BoundArgs {
    #[command(flatten)]
    cell: CellArgs,
    #[arg(long, value_enum, default_value_t = Engine::Eigen)]
    engine: Engine,
    #[arg(long, value_enum)]
    estimator: Option<EstimatorChoice>,
    /// JSON config file; replaces the cell flags.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Leave timing columns out so repeated runs give identical files.
    #[arg(long)]
    omit_timing: bool,
}

#[derive(Args)]
struct RatioArgs {
    #[arg(long)]
    function: Option<String>,
    #[arg(long, default_value_t = 20)]
    r_max: usize,
    /// Numerator cell as `domain[:measure[:lambda]]`.
    #[arg(long)]
    a: Option<String>,
    /// Denominator cell as `domain[:measure[:lambda]]`.
    #[arg(long)]
    b: Option<String>,
    #[arg(long)]
    config_a: Option<PathBuf>,
    #[arg(long)]
    config_b: Option<PathBuf>,
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Args)]
struct RateArgs {
    /// One or more registry functions, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    function: Vec<String>,
    #[arg(long)]
    domain: String,
    #[arg(long, default_value = "lebesgue")]
    measure: String,
    #[arg(long, allow_hyphen_values = true)]
    lambda: Option<f64>,
    #[arg(long, default_value_t = 20)]
    r_max: usize,
    #[arg(long, default_value_t = 10)]
    window_lo: usize,
    #[arg(long, default_value_t = 20)]
    window_hi: usize,
    /// Slopes above this are flagged.
    #[arg(long, default_value_t = DEFAULT_CEILING, allow_hyphen_values = true)]
    ceiling: f64,
    #[arg(long)]
    recentre: bool,
    #[arg(long, allow_hyphen_values = true)]
    f_min: Option<f64>,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct NeedleTableArgs {
    #[arg(long, default_value_t = 4)]
    r: u32,
    #[arg(long, default_value_t = 0.2)]
    h: f64,
    #[arg(long, default_value_t = 401)]
    points: usize,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct MomentsArgs {
    #[arg(long)]
    domain: String,
    #[arg(long, default_value = "lebesgue")]
    measure: String,
    #[arg(long, allow_hyphen_values = true)]
    lambda: Option<f64>,
    #[arg(long, default_value_t = 4)]
    max_degree: usize,
    #[arg(long)]
    output: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn dispatch(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Bound(a) => bound(cli, a),
        Command::Ratio(a) => ratio(cli, a),
        Command::Rate(a) => rate(cli, a),
        Command::NeedleTable(a) => needle_table(a),
        Command::MomentsDump(a) => moments_dump(cli, a),
    }
}

fn emit(path: &Option<PathBuf>, contents: &str) -> Result<()> {
    match path {
        Some(p) => output::write_atomic(p, contents),
        None => {
            print!("{contents}");
            Ok(())
        }
    }
}

fn load_config(path: &PathBuf) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    Ok(serde_json::from_str(&text)?)
}

fn cell_config(cli: &Cli, cell: &CellArgs) -> Result<ExperimentConfig> {
    let function = cell
        .function
        .clone()
        .ok_or_else(|| CliError::Config("--function is required".into()))?;
    let domain = cell.domain.clone().ok_or_else(|| CliError::Config("--domain is required".into()))?;
    let mut c = ExperimentConfig::named(&function, &domain, cell.r_max)
        .with_measure(MeasureConfig::new(&cell.measure, cell.lambda));
    c.f_min = cell.f_min;
    c.recentre = cell.recentre;
    c.precision_bits = cli.precision_bits;
    c.seed = cli.seed;
    Ok(c)
}

fn bound(cli: &Cli, a: &BoundArgs) -> Result<()> {
    let mut c = match &a.config {
        Some(path) => load_config(path)?,
        None => {
            let mut c = cell_config(cli, &a.cell)?;
            c.engine = a.engine;
            c.estimator = a.estimator;
            c
        }
    };
    if a.output.is_some() {
        c.output = a.output.clone();
    }
    if let Some(f) = a.format {
        c.format = f;
    }
    c.omit_timing |= a.omit_timing;
    let out = run(&c)?;
    if c.output.is_none() {
        print!("{}", output::render_run(&out)?);
    }
    Ok(())
}

/// Parses `domain[:measure[:lambda]]`.
fn parse_cell(spec: &str) -> Result<(String, MeasureConfig)> {
    let mut parts = spec.split(':');
    let domain = parts.next().unwrap_or_default().to_string();
    let measure = parts.next().unwrap_or("lebesgue");
    let lambda = parts
        .next()
        .map(|l| l.parse::<f64>().map_err(|e| CliError::Config(format!("bad lambda `{l}`: {e}"))))
        .transpose()?;
    Ok((domain, MeasureConfig::new(measure, lambda)))
}

fn ratio(cli: &Cli, a: &RatioArgs) -> Result<()> {
    let side = |cell: &Option<String>, file: &Option<PathBuf>| -> Result<ExperimentConfig> {
        if let Some(path) = file {
            return load_config(path);
        }
        let cell = cell
            .as_deref()
            .ok_or_else(|| CliError::Config("give --a/--b cells or --config-a/--config-b files".into()))?;
        let function = a
            .function
            .clone()
            .ok_or_else(|| CliError::Config("--function is required".into()))?;
        let (domain, measure) = parse_cell(cell)?;
        let mut c = ExperimentConfig::named(&function, &domain, a.r_max).with_measure(measure);
        c.precision_bits = cli.precision_bits;
        c.seed = cli.seed;
        Ok(c)
    };
    let ca = side(&a.a, &a.config_a)?;
    let cb = side(&a.b, &a.config_b)?;
    if ca.function != cb.function {
        return Err(CliError::Config("both cells must use the same function".into()));
    }
    let (oa, ob) = (run(&ca)?, run(&cb)?);
    let rep = ratio_report(&oa, &ob)?;
    eprintln!(
        "tail (last {}): mean {} stdev {} cv {}",
        lasserre_cli::experiment::TAIL,
        fmt_g17(rep.tail_mean),
        fmt_g17(rep.tail_stdev),
        fmt_g17(rep.tail_cv())
    );
    let text = match a.format {
        Format::Csv => output::ratio_csv(&rep)?,
        Format::Json => {
            serde_json::to_string_pretty(&serde_json::json!({
                "config_a": ca,
                "config_b": cb,
                "rows": rep.rows,
                "tail_mean": rep.tail_mean,
                "tail_stdev": rep.tail_stdev,
            }))? + "\n"
        }
    };
    emit(&a.output, &text)
}

fn rate(cli: &Cli, a: &RateArgs) -> Result<()> {
    if a.window_lo > a.window_hi || a.window_hi > a.r_max.min(R_MAX_LIMIT) {
        return Err(CliError::Config(format!(
            "window [{}, {}] must lie within 1..={}",
            a.window_lo, a.window_hi, a.r_max
        )));
    }
    let mut reports = Vec::new();
    for f in &a.function {
        let mut c = ExperimentConfig::named(f, &a.domain, a.r_max).with_measure(MeasureConfig::new(&a.measure, a.lambda));
        c.recentre = a.recentre;
        c.f_min = a.f_min;
        c.precision_bits = cli.precision_bits;
        c.seed = cli.seed;
        let out = run(&c)?;
        reports.push(rate_report(&out, (a.window_lo, a.window_hi), a.ceiling)?);
    }
    emit(&a.output, &output::rate_csv(&reports)?)
}

fn needle_table(a: &NeedleTableArgs) -> Result<()> {
    if a.r == 0 || !(a.h > 0.0 && a.h < 1.0) || a.points < 2 {
        return Err(CliError::Config("need r >= 1, 0 < h < 1 and at least two points".into()));
    }
    let nu = NeedleSpec::needle(a.r, a.h);
    let kappa = NeedleSpec::half_needle(a.r, a.h * a.h);
    let envelope = 4.0 * (-0.5 * a.r as f64 * a.h).exp();
    let header: Vec<String> = ["t", "nu", "kappa", "lambda", "envelope"].map(String::from).to_vec();
    let rows: Vec<Vec<String>> = (0..a.points)
        .map(|i| {
            let t = -1.0 + 2.0 * i as f64 / (a.points - 1) as f64;
            vec![
                fmt_g17(t),
                fmt_g17(needle_eval(&nu, t)),
                if t >= 0.0 { fmt_g17(needle_eval(&kappa, t)) } else { String::new() },
                fmt_g17(lambda_lower(4 * a.r, t.abs())),
                fmt_g17(envelope),
            ]
        })
        .collect();
    emit(&a.output, &output::table_csv(&header, &rows)?)
}

fn moments_dump(cli: &Cli, a: &MomentsArgs) -> Result<()> {
    let domain = match serde_json::from_str::<DomainRef>(&a.domain) {
        Ok(DomainRef::Literal(d)) => d,
        _ => registry::domain(&a.domain).ok_or_else(|| CliError::Config(format!("unknown domain `{}`", a.domain)))?,
    };
    let measure = MeasureConfig::new(&a.measure, a.lambda).to_spec()?;
    let o = MomentOracle::new(domain, measure, cli.precision_bits)?;
    let n = o.n_vars();
    let basis = MonomialBasis::new(n, a.max_degree);
    let mut header: Vec<String> = (1..=n).map(|i| format!("alpha{i}")).collect();
    header.push("value".into());
    let mut rows = Vec::with_capacity(basis.len());
    for alpha in basis.exponents() {
        let mut row: Vec<String> = alpha.iter().map(|k| k.to_string()).collect();
        row.push(fmt_g17(o.moment(alpha)?));
        rows.push(row);
    }
    emit(&a.output, &output::table_csv(&header, &rows)?)
}
