//! The `sinebeta` command line.
//!
//! Exit codes: 0 on success, 2 when a validation (suite, identities, decay
//! report) fails, 1 on usage or runtime errors.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use sinebeta_core::linalg::identity_report;
use sinebeta_core::sde::{decay_report, KMax, DEFAULT_DT, DEFAULT_EPS_CUT, DEFAULT_PATHS};

use crate::curves::{
    compute, CurveRequest, EngineChoice, LambdaGrid, McSettings, Quantity, Spacing, Tolerances,
};
use crate::error::{usage, Error, Result};
use crate::output::{write_csv, write_json};
use crate::parallel::thread_count;
use crate::validate::{run_suite, suite_table, Suite, SuitePlan};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_VALIDATION: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "sinebeta",
    version,
    about = "Pair correlation of Sine-beta and density of the HP process"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Pair correlation ρ²_β(0, λ) (δ = β/2).
    Rho2(CurveArgs),
    /// HP density ρ¹_{β,δ}(λ); --delta is required.
    Hpdensity(CurveArgs),
    /// Run the validation suite.
    Validate(ValidateArgs),
    /// Exact checks of the linear-algebra identities behind the series engine.
    Identities(IdentitiesArgs),
    /// Monte Carlo check of the large-λ decay envelope.
    Decay(DecayArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct McArgs {
    /// Monte Carlo paths.
    #[arg(long, default_value_t = DEFAULT_PATHS)]
    pub paths: u64,
    /// Euler step.
    #[arg(long, default_value_t = DEFAULT_DT)]
    pub dt: f64,
    /// Effective λ at the start of the simulation.
    #[arg(long, default_value_t = DEFAULT_EPS_CUT)]
    pub eps_cut: f64,
    /// Fourier modes kept: a positive integer or "auto".
    #[arg(long, default_value = "auto", value_parser = parse_k_max)]
    pub k_max: KMax,
    /// Master seed of the per-path random streams.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

impl McArgs {
    fn settings(&self) -> McSettings {
        McSettings {
            paths: self.paths,
            dt: self.dt,
            eps_cut: self.eps_cut,
            k_max: self.k_max,
            seed: self.seed,
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct OutputArgs {
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Output file; standard output when omitted.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CurveArgs {
    #[arg(long)]
    pub beta: f64,
    /// Defaults to β/2 for rho2.
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long, value_enum, default_value_t = EngineChoice::All)]
    pub engine: EngineChoice,
    #[arg(long, default_value_t = 0.0)]
    pub lambda_min: f64,
    #[arg(long)]
    pub lambda_max: f64,
    #[arg(long, default_value_t = 50)]
    pub points: usize,
    #[arg(long, value_enum, default_value_t = Spacing::Linear)]
    pub spacing: Spacing,
    #[command(flatten)]
    pub mc: McArgs,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct ValidateArgs {
    #[arg(long, value_enum, default_value_t = Suite::Quick)]
    pub suite: Suite,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    /// CSV file receiving every curve computed by the suite.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct IdentitiesArgs {
    /// System size, 1 to 30.
    #[arg(long)]
    pub n: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct DecayArgs {
    #[arg(long)]
    pub beta: f64,
    /// Comma-separated λ values, each at least 2.
    #[arg(long, value_delimiter = ',', default_value = "4,8,16,32")]
    pub lambdas: Vec<f64>,
    #[command(flatten)]
    pub mc: McArgs,
    #[command(flatten)]
    pub out: OutputArgs,
}

fn parse_k_max(s: &str) -> std::result::Result<KMax, String> {
    if s.eq_ignore_ascii_case("auto") {
        return Ok(KMax::Auto);
    }
    match s.parse::<usize>() {
        Ok(k) if k > 0 => Ok(KMax::Fixed(k)),
        _ => Err(format!(
            "expected a positive integer or \"auto\", got {s:?}"
        )),
    }
}

/// Everything needed to reproduce a curve run, embedded in JSON output.
#[derive(Serialize)]
struct ResolvedConfig<'a> {
    subcommand: &'static str,
    engine: EngineChoice,
    lambda_grid: LambdaGrid,
    request: &'a CurveRequest,
    threads_do_not_affect_values: bool,
}

fn open_output(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(std::io::stdout())),
    })
}

fn run_curve(args: &CurveArgs, quantity: Quantity) -> Result<i32> {
    let delta = match (quantity, args.delta) {
        (Quantity::Rho2, None) => args.beta / 2.0,
        (Quantity::Rho2, Some(d)) if d == args.beta / 2.0 => d,
        (Quantity::Rho2, Some(d)) => {
            return Err(usage(format!(
                "--delta: rho2 needs delta = beta/2 = {}, got {d}",
                args.beta / 2.0
            )))
        }
        (Quantity::HpDensity, Some(d)) => d,
        (Quantity::HpDensity, None) => return Err(usage("--delta is required for hpdensity")),
    };
    let grid = LambdaGrid {
        min: args.lambda_min,
        max: args.lambda_max,
        points: args.points,
        spacing: args.spacing,
    };
    let request = CurveRequest {
        quantity,
        beta: args.beta,
        delta,
        lambdas: grid.values()?,
        mc: args.mc.settings(),
        tolerances: Tolerances::default(),
    };
    let table = compute(&request, args.engine, thread_count()?)?;
    let mut w = open_output(&args.out.output)?;
    match args.out.format {
        Format::Csv => write_csv(&table, &mut w)?,
        Format::Json => {
            let config = ResolvedConfig {
                subcommand: if quantity == Quantity::Rho2 {
                    "rho2"
                } else {
                    "hpdensity"
                },
                engine: args.engine,
                lambda_grid: grid,
                request: &request,
                threads_do_not_affect_values: true,
            };
            write_json(&config, &table, &mut w)?
        }
    }
    w.flush()?;
    Ok(EXIT_OK)
}

fn run_validate(args: &ValidateArgs, out: &mut dyn Write) -> Result<i32> {
    let plan = SuitePlan::new(args.suite, args.seed, thread_count()?);
    let mut io_err = None;
    let outcomes = run_suite(&plan, |o| {
        if let Err(e) = writeln!(out, "{}", o.line()).and_then(|_| out.flush()) {
            io_err.get_or_insert(e);
        }
    });
    if let Some(e) = io_err {
        return Err(e.into());
    }
    let failed = outcomes.iter().filter(|o| !o.passed).count();
    writeln!(
        out,
        "{} of {} criteria passed",
        outcomes.len() - failed,
        outcomes.len()
    )?;
    if let Some(path) = &args.output {
        let mut w = BufWriter::new(File::create(path)?);
        write_csv(&suite_table(&outcomes), &mut w)?;
        w.flush()?;
    }
    Ok(if failed == 0 {
        EXIT_OK
    } else {
        EXIT_VALIDATION
    })
}

fn run_identities(args: &IdentitiesArgs, out: &mut dyn Write) -> Result<i32> {
    let report = identity_report(args.n)?;
    for c in &report.checks {
        let status = if c.passed { "pass" } else { "FAIL" };
        let index = c.index.map(|i| format!("[{i}]")).unwrap_or_default();
        writeln!(out, "{status} {}{index} {}", c.name, c.detail)?;
    }
    let failed = report.failures().count();
    writeln!(
        out,
        "n={}: {} of {} checks passed",
        args.n,
        report.checks.len() - failed,
        report.checks.len()
    )?;
    Ok(if failed == 0 {
        EXIT_OK
    } else {
        EXIT_VALIDATION
    })
}

fn run_decay(args: &DecayArgs, out: &mut dyn Write) -> Result<i32> {
    let mut lambdas = args.lambdas.clone();
    lambdas.sort_by(f64::total_cmp);
    let request = CurveRequest::rho2(args.beta, lambdas).with_mc(args.mc.settings());
    let table = compute(&request, EngineChoice::Mc, thread_count()?)?;
    let code = match decay_report(args.beta, &table.rows) {
        Ok(rep) => {
            for p in &rep.points {
                writeln!(
                    out,
                    "λ={}: |ρ²-1/4π²|={:.4e} ± {:.1e}, envelope {:.4e}, ratio {:.4e}",
                    p.lambda, p.deviation, p.stderr, p.envelope, p.ratio
                )?;
            }
            writeln!(
                out,
                "{} fitted c={:.4e}, last ratio {:.4e}, median ratio {:.4e}",
                if rep.passed { "PASS" } else { "FAIL" },
                rep.fitted_c,
                rep.last_ratio,
                rep.median_ratio
            )?;
            if rep.passed {
                EXIT_OK
            } else {
                EXIT_VALIDATION
            }
        }
        Err(e @ sinebeta_core::Error::InsufficientPrecision { .. }) => {
            writeln!(out, "FAIL {e}")?;
            EXIT_VALIDATION
        }
        Err(e) => return Err(e.into()),
    };
    if args.out.output.is_some() {
        let mut w = open_output(&args.out.output)?;
        match args.out.format {
            Format::Csv => write_csv(&table, &mut w)?,
            Format::Json => write_json(
                &serde_json::json!({"subcommand": "decay", "args": args}),
                &table,
                &mut w,
            )?,
        }
        w.flush()?;
    }
    Ok(code)
}

/// Parses `args` (including the program name) and runs the command.
/// Messages go to `out` and `err`; curve tables go to their output target.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                write!(err, "{text}")
            } else {
                write!(out, "{text}")
            };
            return code;
        }
    };
    let result = match &cli.command {
        Command::Rho2(a) => run_curve(a, Quantity::Rho2),
        Command::Hpdensity(a) => run_curve(a, Quantity::HpDensity),
        Command::Validate(a) => run_validate(a, out),
        Command::Identities(a) => run_identities(a, out),
        Command::Decay(a) => run_decay(a, out),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let prefix = if matches!(e, Error::Usage(_)) {
                "usage error"
            } else {
                "error"
            };
            let _ = writeln!(err, "{prefix}: {e}");
            EXIT_USAGE
        }
    }
}
