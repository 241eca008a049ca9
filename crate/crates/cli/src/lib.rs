//! Command-line front end for the tensor-network HHL solver.

pub mod fileio;

use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use thiserror::Error;

use tnhhl::bench::{self, format_float, parse_methods, rmse, OutputFormat, SweepSpec};
use tnhhl::circuit::simulate_full;
use tnhhl::linalg::{lu_solve, max_abs};
use tnhhl::problems::{
    build_damped_oscillator, build_forced_oscillator, build_heat2d, hermitize, Boundary,
    Heat2dParams, LinearProblem, OscillatorParams,
};
use tnhhl::tn::{self, ClockParams, ClockSpec, DEFAULT_M, DEFAULT_POS_FRACTION, DEFAULT_SAFETY};
use tnhhl::{DenseMatrix, C64};

use fileio::{format_matrix, format_vector, parse_matrix_file, parse_vector_file};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags, unreadable or malformed inputs.
    #[error("{0}")]
    Usage(String),
    /// The computation itself failed.
    #[error(transparent)]
    Numerical(#[from] tnhhl::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Numerical(_) => EXIT_NUMERICAL,
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn usage(e: impl std::fmt::Display) -> CliError {
    CliError::Usage(e.to_string())
}

#[derive(Debug, Parser)]
#[command(
    name = "tnhhl",
    version,
    about = "Tensor-network HHL linear-system solver"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve A x = b from matrix and vector files (non-Hermitian A is embedded).
    Solve(SolveArgs),
    /// Approximate the inverse of a matrix file.
    Invert(InvertArgs),
    /// Forced harmonic oscillator boundary-value problem.
    Oscillator(OscillatorArgs),
    /// Damped harmonic oscillator boundary-value problem.
    Damped(DampedArgs),
    /// Static 2D heat equation on a rectangle.
    Heat2d(HeatArgs),
    /// Simulate the qudit circuit and compare it with the tensor network.
    Circuit(CircuitArgs),
    /// Run a parameter sweep described by a JSON file.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Args)]
pub struct ClockArgs {
    /// Clock register dimension.
    #[arg(long, default_value_t = DEFAULT_M)]
    pub m: usize,
    /// Evolution time; chosen from the spectrum when absent.
    #[arg(long)]
    pub t: Option<f64>,
    /// Fraction of clock bins read as positive eigenvalues.
    #[arg(long, default_value_t = DEFAULT_POS_FRACTION)]
    pub pos_fraction: f64,
    /// Safety factor applied to the automatic time.
    #[arg(long, default_value_t = DEFAULT_SAFETY)]
    pub safety: f64,
}

impl ClockArgs {
    fn spec(&self) -> CliResult<ClockSpec> {
        if self.m < 2 {
            return Err(usage(format!("--m must be at least 2, got {}", self.m)));
        }
        if let Some(t) = self.t {
            if !(t > 0.0 && t.is_finite()) {
                return Err(usage(format!("--t must be positive, got {t}")));
            }
        }
        if !(0.0..=1.0).contains(&self.pos_fraction) {
            return Err(usage(format!(
                "--pos-fraction must lie in [0, 1], got {}",
                self.pos_fraction
            )));
        }
        if !(self.safety > 0.0 && self.safety <= 1.0) {
            return Err(usage(format!(
                "--safety must lie in (0, 1], got {}",
                self.safety
            )));
        }
        Ok(ClockSpec {
            m: self.m,
            t: self.t,
            pos_fraction: self.pos_fraction,
            safety: self.safety,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

impl From<Format> for OutputFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Csv => OutputFormat::Csv,
            Format::Json => OutputFormat::Json,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    /// Output file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// JSON report file. Without it the report goes to standard output when
    /// --out is given and is skipped otherwise.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[arg(long)]
    pub matrix: PathBuf,
    #[arg(long)]
    pub rhs: PathBuf,
    #[command(flatten)]
    pub clock: ClockArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct InvertArgs {
    #[arg(long)]
    pub matrix: PathBuf,
    /// Contract the kickback tensors directly instead of one solve per column.
    #[arg(long)]
    pub direct: bool,
    #[command(flatten)]
    pub clock: ClockArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct OscillatorFlags {
    /// Number of interior time steps.
    #[arg(long, default_value_t = 64)]
    pub n: usize,
    #[arg(long, default_value_t = 1.0)]
    pub k_over_m: f64,
    /// Time step.
    #[arg(long, default_value_t = 2.2)]
    pub dt: f64,
    /// Forcing amplitude.
    #[arg(long, default_value_t = 1.0)]
    pub force_amp: f64,
    /// Forcing angular frequency.
    #[arg(long, default_value_t = 2.0)]
    pub force_freq: f64,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    pub x0: f64,
    #[arg(long = "xT", default_value_t = 0.0, allow_hyphen_values = true)]
    pub x_t: f64,
}

impl OscillatorFlags {
    fn params(&self) -> OscillatorParams {
        OscillatorParams {
            n: self.n,
            k_over_m: self.k_over_m,
            dt: self.dt,
            force_amp: self.force_amp,
            force_freq: self.force_freq,
            x0: self.x0,
            x_t: self.x_t,
        }
    }
}

#[derive(Debug, Args)]
pub struct OscillatorArgs {
    #[command(flatten)]
    pub osc: OscillatorFlags,
    #[command(flatten)]
    pub clock: ClockArgs,
    #[command(flatten)]
    pub output: OutputArgs,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct DampedArgs {
    #[command(flatten)]
    pub osc: OscillatorFlags,
    /// Damping coefficient.
    #[arg(long, default_value_t = tnhhl::problems::DEFAULT_GAMMA)]
    pub gamma: f64,
    #[command(flatten)]
    pub clock: ClockArgs,
    #[command(flatten)]
    pub output: OutputArgs,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct HeatArgs {
    #[arg(long, default_value_t = 16)]
    pub nx: usize,
    #[arg(long, default_value_t = 16)]
    pub ny: usize,
    #[arg(long, default_value_t = 1.0)]
    pub lx: f64,
    /// Defaults to the value that keeps the grid spacing uniform.
    #[arg(long)]
    pub ly: Option<f64>,
    /// Thermal diffusivity.
    #[arg(long, default_value_t = 1.0)]
    pub kappa: f64,
    /// Amplitude of the sin(2π x y / (Lx Ly)) source.
    #[arg(long, default_value_t = 10.0, allow_hyphen_values = true)]
    pub source_amp: f64,
    /// Constant Dirichlet value on all four edges.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub boundary: f64,
    #[command(flatten)]
    pub clock: ClockArgs,
    #[command(flatten)]
    pub output: OutputArgs,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct CircuitArgs {
    #[arg(long)]
    pub matrix: PathBuf,
    #[arg(long)]
    pub rhs: PathBuf,
    #[command(flatten)]
    pub clock: ClockArgs,
    /// Report file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// JSON sweep description.
    #[arg(long)]
    pub config: PathBuf,
    /// Comma-separated methods overriding the config (tn_hhl, lu, cg, circuit).
    #[arg(long)]
    pub methods: Option<String>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[command(flatten)]
    pub output: OutputArgs,
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code. Errors are reported on standard error.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(&cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(cli: &Cli) -> CliResult<()> {
    match &cli.command {
        Command::Solve(a) => cmd_solve(a),
        Command::Invert(a) => cmd_invert(a),
        Command::Oscillator(a) => {
            let p = build_forced_oscillator(&a.osc.params()).map_err(usage)?;
            cmd_problem(&p, &a.clock, &a.output, a.format, Layout::Index)
        }
        Command::Damped(a) => {
            let p = build_damped_oscillator(&a.osc.params(), a.gamma).map_err(usage)?;
            cmd_problem(&p, &a.clock, &a.output, a.format, Layout::Index)
        }
        Command::Heat2d(a) => {
            let params = heat_params(a)?;
            let p = build_heat2d(&params).map_err(usage)?;
            cmd_problem(&p, &a.clock, &a.output, a.format, Layout::Grid(params))
        }
        Command::Circuit(a) => cmd_circuit(a),
        Command::Bench(a) => cmd_bench(a),
    }
}

fn write_out(path: Option<&Path>, text: &str) -> CliResult<()> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| usage(format!("{}: {e}", p.display()))),
        None => io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| usage(format!("<stdout>: {e}"))),
    }
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("report types serialize");
    s.push('\n');
    s
}

fn write_report<T: Serialize>(output: &OutputArgs, report: &T) -> CliResult<()> {
    match (&output.report, &output.out) {
        (Some(p), _) => write_out(Some(p), &to_json(report)),
        (None, Some(_)) => write_out(None, &to_json(report)),
        (None, None) => Ok(()),
    }
}

fn read_matrix(path: &Path) -> CliResult<DenseMatrix> {
    parse_matrix_file(path).map_err(usage)
}

fn read_vector(path: &Path) -> CliResult<Vec<C64>> {
    parse_vector_file(path).map_err(usage)
}

#[derive(Debug, Serialize)]
struct ClockReport {
    m: usize,
    t: f64,
    pos_fraction: f64,
}

impl From<ClockParams> for ClockReport {
    fn from(c: ClockParams) -> Self {
        ClockReport {
            m: c.m,
            t: c.t,
            pos_fraction: c.pos_fraction,
        }
    }
}

#[derive(Debug, Serialize)]
struct SolveReport {
    n: usize,
    hermitized: bool,
    clock: ClockReport,
    scale: C64,
    scale_over_analytic: f64,
    scale_over_quoted: f64,
    residual_rel: f64,
    aliasing_flag: bool,
    upper_block_leak: f64,
}

fn cmd_solve(a: &SolveArgs) -> CliResult<()> {
    let clock = a.clock.spec()?;
    let matrix = read_matrix(&a.matrix)?;
    let rhs = read_vector(&a.rhs)?;
    let p = LinearProblem::new(matrix, rhs, "input").map_err(usage)?;
    let r = tn::solve(&p, &clock)?;
    write_out(a.output.out.as_deref(), &format_vector(&r.x))?;
    write_report(
        &a.output,
        &SolveReport {
            n: p.n(),
            hermitized: !p.a.is_hermitian(tnhhl::linalg::HERMITIAN_TOL),
            clock: r.clock.into(),
            scale: r.scale,
            scale_over_analytic: r.scale_over_analytic,
            scale_over_quoted: r.scale_over_quoted,
            residual_rel: r.residual_rel,
            aliasing_flag: r.aliasing_flag,
            upper_block_leak: r.upper_block_leak,
        },
    )
}

#[derive(Debug, Serialize)]
struct InvertReport {
    n: usize,
    hermitized: bool,
    route: &'static str,
    clock: ClockReport,
    aliasing_flag: bool,
    /// `max |Â⁻¹ A − I|`.
    identity_error: f64,
}

fn cmd_invert(a: &InvertArgs) -> CliResult<()> {
    let clock = a.clock.spec()?;
    let matrix = read_matrix(&a.matrix)?;
    if !matrix.is_square() {
        return Err(usage(format!(
            "matrix must be square, got {}x{}",
            matrix.rows(),
            matrix.cols()
        )));
    }
    let n = matrix.rows();
    let zero_rhs = vec![C64::new(0.0, 0.0); n];
    let p = LinearProblem::new(matrix.clone(), zero_rhs, "input").map_err(usage)?;
    let h = hermitize(&p);
    let op = tn::PreparedOperator::new(&h.a_prime, &clock)?;
    let full = if a.direct {
        op.invert_direct()?
    } else {
        op.invert_columns()?
    };
    // For the embedding [[0, A], [A†, 0]] the inverse is [[0, A†⁻¹], [A⁻¹, 0]].
    let inverse = if h.was_hermitian {
        full
    } else {
        DenseMatrix::from_fn(n, n, |i, j| full[(n + i, j)])
    };
    let identity_error = tnhhl::linalg::matmul(&inverse, &matrix)?
        .sub(&DenseMatrix::identity(n))?
        .max_abs();
    write_out(a.output.out.as_deref(), &format_matrix(&inverse))?;
    write_report(
        &a.output,
        &InvertReport {
            n,
            hermitized: !h.was_hermitian,
            route: if a.direct { "direct" } else { "columns" },
            clock: (*op.clock()).into(),
            aliasing_flag: op.aliased(),
            identity_error,
        },
    )
}

fn heat_params(a: &HeatArgs) -> CliResult<Heat2dParams> {
    if a.nx == 0 || a.ny == 0 {
        return Err(usage("--nx and --ny must be positive"));
    }
    let ly =
        a.ly.unwrap_or(a.lx * (a.ny as f64 + 1.0) / (a.nx as f64 + 1.0));
    Ok(Heat2dParams {
        nx: a.nx,
        ny: a.ny,
        lx: a.lx,
        ly,
        kappa_thermal: a.kappa,
        source_amp: a.source_amp,
        boundary: Boundary::constant(a.nx, a.ny, a.boundary),
    })
}

enum Layout {
    Index,
    Grid(Heat2dParams),
}

#[derive(Debug, Serialize)]
struct IndexRow {
    index: usize,
    tn_value: f64,
    lu_value: f64,
}

#[derive(Debug, Serialize)]
struct GridRow {
    x: f64,
    y: f64,
    tn_value: f64,
    lu_value: f64,
}

#[derive(Debug, Serialize)]
struct ProblemReport {
    problem: String,
    n: usize,
    clock: ClockReport,
    scale: C64,
    rmse_vs_lu: f64,
    lu_inf_norm: f64,
    residual_rel: f64,
    aliasing_flag: bool,
    upper_block_leak: f64,
    tn_seconds: f64,
    lu_seconds: f64,
}

/// Solves a built problem with TN HHL and LU and writes the two solutions
/// side by side.
fn cmd_problem(
    p: &LinearProblem,
    clock: &ClockArgs,
    output: &OutputArgs,
    format: Format,
    layout: Layout,
) -> CliResult<()> {
    let clock = clock.spec()?;
    let start = Instant::now();
    let r = tn::solve(p, &clock)?;
    let tn_seconds = start.elapsed().as_secs_f64();
    let start = Instant::now();
    let x_lu = lu_solve(&p.a, &p.b)?;
    let lu_seconds = start.elapsed().as_secs_f64();

    let text = match (&layout, format) {
        (Layout::Index, Format::Csv) => {
            let mut s = String::from("index,tn_value,lu_value\n");
            for (k, (tn, lu)) in r.x.iter().zip(&x_lu).enumerate() {
                s.push_str(&format!(
                    "{},{},{}\n",
                    k + 1,
                    format_float(tn.re),
                    format_float(lu.re)
                ));
            }
            s
        }
        (Layout::Index, Format::Json) => to_json(
            &r.x.iter()
                .zip(&x_lu)
                .enumerate()
                .map(|(k, (tn, lu))| IndexRow {
                    index: k + 1,
                    tn_value: tn.re,
                    lu_value: lu.re,
                })
                .collect::<Vec<_>>(),
        ),
        (Layout::Grid(h), _) => {
            let mut rows = Vec::with_capacity(p.n());
            for j in 0..h.nx {
                for k in 0..h.ny {
                    let idx = tnhhl::problems::heat_index(j, k, h.ny);
                    let (x, y) = h.node(j, k);
                    rows.push(GridRow {
                        x,
                        y,
                        tn_value: r.x[idx].re,
                        lu_value: x_lu[idx].re,
                    });
                }
            }
            if format == Format::Json {
                to_json(&rows)
            } else {
                let mut s = String::from("x,y,tn_value,lu_value\n");
                for g in rows {
                    s.push_str(&format!(
                        "{},{},{},{}\n",
                        format_float(g.x),
                        format_float(g.y),
                        format_float(g.tn_value),
                        format_float(g.lu_value)
                    ));
                }
                s
            }
        }
    };
    write_out(output.out.as_deref(), &text)?;
    write_report(
        output,
        &ProblemReport {
            problem: p.label.clone(),
            n: p.n(),
            clock: r.clock.into(),
            scale: r.scale,
            rmse_vs_lu: rmse(&r.x, &x_lu)?,
            lu_inf_norm: max_abs(&x_lu),
            residual_rel: r.residual_rel,
            aliasing_flag: r.aliasing_flag,
            upper_block_leak: r.upper_block_leak,
            tn_seconds,
            lu_seconds,
        },
    )
}

fn cmd_circuit(a: &CircuitArgs) -> CliResult<()> {
    let clock = a.clock.spec()?;
    let matrix = read_matrix(&a.matrix)?;
    let rhs = read_vector(&a.rhs)?;
    let p = LinearProblem::new(matrix, rhs, "input").map_err(usage)?;
    let report = simulate_full(&p, &clock)?;
    write_out(a.out.as_deref(), &to_json(&report))
}

#[derive(Debug, Serialize)]
struct BenchReport<'a> {
    summaries: &'a [bench::SlopeSummary],
    failures: &'a [bench::MethodFailure],
}

fn cmd_bench(a: &BenchArgs) -> CliResult<()> {
    let text =
        fs::read_to_string(&a.config).map_err(|e| usage(format!("{}: {e}", a.config.display())))?;
    let mut spec: SweepSpec =
        serde_json::from_str(&text).map_err(|e| usage(format!("{}: {e}", a.config.display())))?;
    if let Some(m) = &a.methods {
        spec.methods = parse_methods(m).map_err(usage)?;
    }
    spec.validate().map_err(usage)?;
    let result = bench::run_sweep(&spec)?;
    let mut buf = Vec::new();
    let shown = a
        .output
        .out
        .as_ref()
        .map(|p| p.display().to_string())
        .unwrap_or_else(|| "<stdout>".into());
    bench::write_records(&result.records, a.format.into(), &mut buf, &shown)?;
    write_out(a.output.out.as_deref(), &String::from_utf8_lossy(&buf))?;
    write_report(
        &a.output,
        &BenchReport {
            summaries: &result.summaries,
            failures: &result.failures,
        },
    )?;
    if result.records.is_empty() {
        return Err(CliError::Numerical(tnhhl::Error::Domain(
            "every sweep point failed".into(),
        )));
    }
    Ok(())
}
