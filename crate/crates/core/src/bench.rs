//! Experiment runner: TN HHL against LU, CG and the circuit simulator.

use std::collections::BTreeMap;
use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::circuit::simulate_full;
use crate::error::{Error, Result};
use crate::linalg::{
    conjugate_gradient, dot, hermitian_eigen, lu_solve, matmul, norm2, relative_residual,
    DenseMatrix, C64, EIGEN_TOL, HERMITIAN_TOL,
};
use crate::problems::{
    build_damped_oscillator, build_forced_oscillator, build_heat2d, hermitize, Boundary,
    Heat2dParams, LinearProblem, OscillatorParams, DEFAULT_GAMMA,
};
use crate::tn::{self, ClockSpec, DEFAULT_M, DEFAULT_POS_FRACTION};

pub const CSV_HEADER: [&str; 9] = [
    "problem_label",
    "n",
    "m",
    "t",
    "method",
    "rmse_vs_lu",
    "residual_rel",
    "wall_seconds",
    "aliasing_flag",
];

const CG_TOL: f64 = 1e-13;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    TnHhl,
    Lu,
    Cg,
    Circuit,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::TnHhl, Method::Lu, Method::Cg, Method::Circuit];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::TnHhl => "tn_hhl",
            Method::Lu => "lu",
            Method::Cg => "cg",
            Method::Circuit => "circuit",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s.trim())
            .ok_or_else(|| {
                Error::domain(format!(
                    "unknown method '{s}' (expected tn_hhl, lu, cg or circuit)"
                ))
            })
    }
}

/// Parses a comma-separated method list.
pub fn parse_methods(s: &str) -> Result<Vec<Method>> {
    s.split(',')
        .filter(|p| !p.trim().is_empty())
        .map(str::parse)
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub problem_label: String,
    pub n: usize,
    pub m: usize,
    pub t: f64,
    pub method: Method,
    pub rmse_vs_lu: f64,
    pub residual_rel: f64,
    pub wall_seconds: f64,
    pub aliasing_flag: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MethodFailure {
    pub problem_label: String,
    pub n: usize,
    pub method: Method,
    pub message: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub records: Vec<RunRecord>,
    pub failures: Vec<MethodFailure>,
}

pub fn rmse(x: &[C64], x_ref: &[C64]) -> Result<f64> {
    if x.len() != x_ref.len() {
        return Err(Error::shape(format!(
            "rmse of vectors with lengths {} and {}",
            x.len(),
            x_ref.len()
        )));
    }
    if x.is_empty() {
        return Ok(0.0);
    }
    let s: f64 = x.iter().zip(x_ref).map(|(a, b)| (a - b).norm_sqr()).sum();
    Ok((s / x.len() as f64).sqrt())
}

/// `x† M x`, the expected value of `M` in the (unnormalised) solution state.
pub fn quadratic_form(x: &[C64], m: &DenseMatrix) -> Result<C64> {
    Ok(dot(x, &m.mat_vec(x)?))
}

/// How a system was made definite before running CG on it.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CgForm {
    Direct,
    Negated,
    NormalEquations,
}

impl CgForm {
    pub fn as_str(self) -> &'static str {
        match self {
            CgForm::Direct => "direct",
            CgForm::Negated => "negated",
            CgForm::NormalEquations => "normal",
        }
    }
}

/// Picks the CG form: Hermitian definite systems are used as is (negated if
/// negative definite), anything else goes through `A† A x = A† b`.
pub fn cg_form(a: &DenseMatrix) -> Result<CgForm> {
    if a.is_hermitian(HERMITIAN_TOL) {
        let eig = hermitian_eigen(a, EIGEN_TOL)?;
        let (lo, hi) = (
            eig.eigenvalues[0],
            eig.eigenvalues[eig.eigenvalues.len() - 1],
        );
        if lo > 0.0 {
            return Ok(CgForm::Direct);
        }
        if hi < 0.0 {
            return Ok(CgForm::Negated);
        }
    }
    Ok(CgForm::NormalEquations)
}

pub fn cg_solve(a: &DenseMatrix, b: &[C64]) -> Result<(Vec<C64>, CgForm)> {
    let form = cg_form(a)?;
    let (a2, b2) = match form {
        CgForm::Direct => (a.clone(), b.to_vec()),
        CgForm::Negated => (a.scale(C64::new(-1.0, 0.0)), b.iter().map(|v| -v).collect()),
        CgForm::NormalEquations => {
            let ah = a.adjoint();
            let mut ata = matmul(&ah, a)?;
            // Round-off can leave A†A a hair off Hermitian.
            let sym = DenseMatrix::from_fn(ata.rows(), ata.cols(), |i, j| {
                (ata[(i, j)] + ata[(j, i)].conj()) * 0.5
            });
            ata = sym;
            (ata, ah.mat_vec(b)?)
        }
    };
    let max_iter = 20 * a.rows() + 100;
    let out = conjugate_gradient(&a2, &b2, CG_TOL, max_iter)?;
    if !out.converged {
        log::warn!(
            "CG stopped after {} iterations at relative residual {:.3e}",
            out.iterations,
            out.residual_rel
        );
    }
    Ok((out.x, form))
}

struct Timed<T> {
    value: T,
    seconds: f64,
}

fn timed<T>(f: impl FnOnce() -> Result<T>) -> Result<Timed<T>> {
    let start = Instant::now();
    let value = f()?;
    Ok(Timed {
        value,
        seconds: start.elapsed().as_secs_f64(),
    })
}

/// Runs every requested method on one problem. LU always runs, is the
/// reference, and always gets a record; failures of the other methods are collected, not propagated.
pub fn run_experiment(
    problem: &LinearProblem,
    clock: &ClockSpec,
    methods: &[Method],
) -> Result<ExperimentResult> {
    if methods.is_empty() {
        return Err(Error::domain("no methods requested"));
    }
    let n = problem.n();
    let lu = timed(|| lu_solve(&problem.a, &problem.b))?;
    let x_lu = lu.value;

    let mut out = ExperimentResult::default();
    let mut effective = (clock.m, clock.t);
    let fail = |out: &mut ExperimentResult, method: Method, e: Error| {
        log::warn!("{} failed on {}: {e}", method, problem.label);
        out.failures.push(MethodFailure {
            problem_label: problem.label.clone(),
            n,
            method,
            message: e.to_string(),
        });
    };

    let mut pending: Vec<RunRecord> = Vec::new();
    let mut wanted: Vec<Method> = methods.to_vec();
    wanted.push(Method::Lu);
    wanted.sort();
    wanted.dedup();

    for &method in &wanted {
        let record = match method {
            Method::Lu => Ok(RunRecord {
                problem_label: problem.label.clone(),
                n,
                m: 0,
                t: 0.0,
                method,
                rmse_vs_lu: 0.0,
                residual_rel: relative_residual(&problem.a, &x_lu, &problem.b)?,
                wall_seconds: lu.seconds,
                aliasing_flag: false,
            }),
            Method::TnHhl => timed(|| tn::solve(problem, clock)).and_then(|r| {
                effective = (r.value.clock.m, Some(r.value.clock.t));
                Ok(RunRecord {
                    problem_label: problem.label.clone(),
                    n,
                    m: r.value.clock.m,
                    t: r.value.clock.t,
                    method,
                    rmse_vs_lu: rmse(&r.value.x, &x_lu)?,
                    residual_rel: r.value.residual_rel,
                    wall_seconds: r.seconds,
                    aliasing_flag: r.value.aliasing_flag,
                })
            }),
            Method::Cg => timed(|| cg_solve(&problem.a, &problem.b)).and_then(|r| {
                let (x, form) = r.value;
                Ok(RunRecord {
                    problem_label: format!("{}/cg:{}", problem.label, form.as_str()),
                    n,
                    m: 0,
                    t: 0.0,
                    method,
                    rmse_vs_lu: rmse(&x, &x_lu)?,
                    residual_rel: relative_residual(&problem.a, &x, &problem.b)?,
                    wall_seconds: r.seconds,
                    aliasing_flag: false,
                })
            }),
            Method::Circuit => timed(|| circuit_solution(problem, clock)).and_then(|r| {
                let (x, clock_used, aliased) = r.value;
                effective = (clock_used.m, Some(clock_used.t));
                Ok(RunRecord {
                    problem_label: problem.label.clone(),
                    n,
                    m: clock_used.m,
                    t: clock_used.t,
                    method,
                    rmse_vs_lu: rmse(&x, &x_lu)?,
                    residual_rel: relative_residual(&problem.a, &x, &problem.b)?,
                    wall_seconds: r.seconds,
                    aliasing_flag: aliased,
                })
            }),
        };
        match record {
            Ok(r) => pending.push(r),
            Err(e) => fail(&mut out, method, e),
        }
    }

    // Classical rows carry the clock the quantum-inspired rows used, so a
    // sweep over m stays readable row by row.
    for mut r in pending {
        if matches!(r.method, Method::Lu | Method::Cg) {
            r.m = effective.0;
            r.t = effective.1.unwrap_or(0.0);
        }
        out.records.push(r);
    }
    Ok(out)
}

/// Circuit amplitudes rescaled to a solution of the original system.
fn circuit_solution(
    problem: &LinearProblem,
    clock: &ClockSpec,
) -> Result<(Vec<C64>, tn::ClockParams, bool)> {
    let h = hermitize(problem);
    let rep = simulate_full(problem, clock)?;
    let op = tn::PreparedOperator::new(&h.a_prime, &ClockSpec::from(rep.clock))?;
    let m = rep.clock.m as f64;
    let factor = op.scale() * (m * m * norm2(&h.b_prime));
    let x = rep
        .solution_amplitudes
        .iter()
        .map(|&v| v * factor)
        .collect();
    Ok((x, rep.clock, op.aliased()))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVariable {
    #[default]
    N,
    M,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemFamily {
    /// Random Hermitian matrix with eigenvalues drawn uniformly from
    /// `±[lambda_min, lambda_max]`.
    #[default]
    Synthetic,
    /// Random Hermitian matrix whose eigenvalues sit exactly on clock bins.
    GridAligned,
    Forced,
    Damped,
    Heat2d,
}

fn default_methods() -> Vec<Method> {
    vec![Method::TnHhl, Method::Lu]
}

fn default_repetitions() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub variable: SweepVariable,
    pub values: Vec<usize>,
    #[serde(default)]
    pub fixed: BTreeMap<String, f64>,
    #[serde(default = "default_repetitions")]
    pub repetitions: usize,
    #[serde(default = "default_methods")]
    pub methods: Vec<Method>,
    #[serde(default)]
    pub family: ProblemFamily,
    #[serde(default)]
    pub seed: u64,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::domain("sweep has no values"));
        }
        if self.values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::domain("sweep values must be strictly increasing"));
        }
        if self.repetitions == 0 {
            return Err(Error::domain("repetitions must be at least 1"));
        }
        if self.methods.is_empty() {
            return Err(Error::domain("no methods requested"));
        }
        if self.values.contains(&0) {
            return Err(Error::domain("sweep values must be positive"));
        }
        Ok(())
    }

    fn get(&self, key: &str, default: f64) -> f64 {
        self.fixed.get(key).copied().unwrap_or(default)
    }

    fn get_usize(&self, key: &str, default: usize) -> Result<usize> {
        match self.fixed.get(key) {
            None => Ok(default),
            Some(&v) if v >= 0.0 && v.fract() == 0.0 => Ok(v as usize),
            Some(&v) => Err(Error::domain(format!(
                "fixed parameter '{key}' must be a non-negative integer, got {v}"
            ))),
        }
    }
}

/// Least-squares slope of `log y` against `log x` for one method.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlopeSummary {
    pub method: Method,
    pub variable: SweepVariable,
    /// Per sweep value: (value, mean wall seconds, mean rmse_vs_lu).
    pub points: Vec<(usize, f64, f64)>,
    pub wall_seconds_slope: Option<f64>,
    pub rmse_slope: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub records: Vec<RunRecord>,
    pub failures: Vec<MethodFailure>,
    pub summaries: Vec<SlopeSummary>,
}

fn random_unitary(rng: &mut ChaCha8Rng, n: usize) -> Result<DenseMatrix> {
    let g = DenseMatrix::from_fn(n, n, |_, _| {
        C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    });
    let h = DenseMatrix::from_fn(n, n, |i, j| (g[(i, j)] + g[(j, i)].conj()) * 0.5);
    Ok(hermitian_eigen(&h, EIGEN_TOL)?.eigenvectors)
}

/// `V diag(λ) V†` for a random unitary `V`, with a random right-hand side.
pub fn random_hermitian_problem(
    rng: &mut ChaCha8Rng,
    eigenvalues: &[f64],
    label: impl Into<String>,
) -> Result<LinearProblem> {
    let n = eigenvalues.len();
    let v = random_unitary(rng, n)?;
    let d = DenseMatrix::from_diagonal(
        &eigenvalues
            .iter()
            .map(|&l| C64::new(l, 0.0))
            .collect::<Vec<_>>(),
    );
    let a = matmul(&matmul(&v, &d)?, &v.adjoint())?;
    // Exact Hermitian symmetry, so the matrix is never embedded.
    let a = DenseMatrix::from_fn(n, n, |i, j| (a[(i, j)] + a[(j, i)].conj()) * 0.5);
    let b = (0..n)
        .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    LinearProblem::new(a, b, label)
}

/// Eigenvalues `2π c / (t m)` on distinct random bins `c` in `1..=m/4`,
/// the first `negative` of them negated.
pub fn grid_aligned_eigenvalues(
    rng: &mut ChaCha8Rng,
    n: usize,
    m: usize,
    t: f64,
    negative: usize,
) -> Result<Vec<f64>> {
    let top = m / 4;
    if top < n.div_ceil(2).max(1) || (negative == 0 && top < n) {
        return Err(Error::domain(format!(
            "a clock of {m} bins cannot hold {n} distinct aligned eigenvalues"
        )));
    }
    let mut pos: Vec<usize> = Vec::new();
    let mut neg: Vec<usize> = Vec::new();
    while pos.len() + neg.len() < n {
        let c = rng.gen_range(1..=top);
        let list = if neg.len() < negative {
            &mut neg
        } else {
            &mut pos
        };
        if !list.contains(&c) {
            list.push(c);
        }
    }
    let w = 2.0 * std::f64::consts::PI / (t * m as f64);
    Ok(neg
        .into_iter()
        .map(|c| -(c as f64) * w)
        .chain(pos.into_iter().map(|c| c as f64 * w))
        .collect())
}

fn sweep_seed(spec: &SweepSpec, n: usize, rep: usize) -> u64 {
    spec.seed
        .wrapping_mul(0x9E37_79B9_7F4A_7C15)
        .wrapping_add((n as u64) << 32)
        .wrapping_add(rep as u64)
}

fn sweep_problem(
    spec: &SweepSpec,
    n: usize,
    m: usize,
    rep: usize,
) -> Result<(LinearProblem, ClockSpec)> {
    let pos_fraction = spec.get("pos_fraction", DEFAULT_POS_FRACTION);
    let fixed_t = spec.fixed.get("t").copied();
    let clock = |t: Option<f64>| {
        let c = match t {
            Some(t) => ClockSpec::fixed(m, t),
            None => ClockSpec::auto(m),
        };
        c.with_pos_fraction(pos_fraction)
    };
    let mut rng = ChaCha8Rng::seed_from_u64(sweep_seed(spec, n, rep));
    let osc = || OscillatorParams {
        n,
        k_over_m: spec.get("k_over_m", OscillatorParams::default().k_over_m),
        dt: spec.get("dt", OscillatorParams::default().dt),
        force_amp: spec.get("force_amp", OscillatorParams::default().force_amp),
        force_freq: spec.get("force_freq", OscillatorParams::default().force_freq),
        x0: spec.get("x0", OscillatorParams::default().x0),
        x_t: spec.get("xT", OscillatorParams::default().x_t),
    };
    match spec.family {
        ProblemFamily::Synthetic => {
            let lo = spec.get("lambda_min", 0.5);
            let hi = spec.get("lambda_max", 2.0);
            if !(lo > 0.0 && hi >= lo) {
                return Err(Error::domain(format!(
                    "need 0 < lambda_min <= lambda_max, got {lo}, {hi}"
                )));
            }
            let neg_frac = spec.get("negative_fraction", 0.0);
            let eigs: Vec<f64> = (0..n)
                .map(|i| {
                    let l = rng.gen_range(lo..=hi);
                    if (i as f64) < neg_frac * n as f64 {
                        -l
                    } else {
                        l
                    }
                })
                .collect();
            let p = random_hermitian_problem(&mut rng, &eigs, "synthetic")?;
            Ok((p, clock(fixed_t)))
        }
        ProblemFamily::GridAligned => {
            let t = fixed_t.unwrap_or(1.0);
            // Align on the coarsest clock of an m-sweep so every finer
            // multiple stays aligned.
            let grid_m = match spec.variable {
                SweepVariable::M => spec.get_usize("grid_m", spec.values[0])?,
                SweepVariable::N => spec.get_usize("grid_m", m)?,
            };
            let negative = (spec.get("negative_fraction", 0.0) * n as f64).floor() as usize;
            let eigs = grid_aligned_eigenvalues(&mut rng, n, grid_m, t, negative)?;
            let p = random_hermitian_problem(&mut rng, &eigs, "grid_aligned")?;
            Ok((p, clock(Some(t))))
        }
        ProblemFamily::Forced => Ok((build_forced_oscillator(&osc())?, clock(fixed_t))),
        ProblemFamily::Damped => Ok((
            build_damped_oscillator(&osc(), spec.get("gamma", DEFAULT_GAMMA))?,
            clock(fixed_t),
        )),
        ProblemFamily::Heat2d => {
            let d = Heat2dParams::default();
            let p = Heat2dParams {
                nx: n,
                ny: n,
                lx: spec.get("lx", d.lx),
                ly: spec.get("ly", d.ly),
                kappa_thermal: spec.get("kappa", d.kappa_thermal),
                source_amp: spec.get("source_amp", d.source_amp),
                boundary: Boundary::constant(n, n, spec.get("boundary", 0.0)),
            };
            Ok((build_heat2d(&p)?, clock(fixed_t)))
        }
    }
}

fn loglog_slope(points: &[(f64, f64)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(x, y)| *x > 0.0 && *y > 0.0 && y.is_finite())
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Runs the sweep; a failed point is recorded and the sweep moves on.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepResult> {
    spec.validate()?;
    let mut out = SweepResult::default();
    for &value in &spec.values {
        let (n, m) = match spec.variable {
            SweepVariable::N => (value, spec.get_usize("m", DEFAULT_M)?),
            SweepVariable::M => (spec.get_usize("n", 8)?, value),
        };
        for rep in 0..spec.repetitions {
            let run = sweep_problem(spec, n, m, rep)
                .and_then(|(p, clock)| run_experiment(&p, &clock, &spec.methods));
            match run {
                Ok(r) => {
                    out.records.extend(r.records);
                    out.failures.extend(r.failures);
                }
                Err(e) => {
                    log::warn!("sweep point {value} (repetition {rep}) failed: {e}");
                    out.failures
                        .extend(spec.methods.iter().map(|&method| MethodFailure {
                            problem_label: format!("{:?}", spec.family).to_lowercase(),
                            n,
                            method,
                            message: e.to_string(),
                        }));
                }
            }
        }
    }

    let mut methods = spec.methods.clone();
    methods.push(Method::Lu);
    methods.sort();
    methods.dedup();
    for method in methods {
        let mut points = Vec::new();
        for &value in &spec.values {
            let rows: Vec<&RunRecord> = out
                .records
                .iter()
                .filter(|r| {
                    r.method == method
                        && match spec.variable {
                            SweepVariable::N => r.n == value,
                            SweepVariable::M => r.m == value,
                        }
                })
                .collect();
            if rows.is_empty() {
                continue;
            }
            let k = rows.len() as f64;
            let wall = rows.iter().map(|r| r.wall_seconds).sum::<f64>() / k;
            let err = rows.iter().map(|r| r.rmse_vs_lu).sum::<f64>() / k;
            points.push((value, wall, err));
        }
        let slope = |f: fn(&(usize, f64, f64)) -> f64| {
            loglog_slope(
                &points
                    .iter()
                    .map(|p| (p.0 as f64, f(p)))
                    .collect::<Vec<_>>(),
            )
        };
        out.summaries.push(SlopeSummary {
            method,
            variable: spec.variable,
            wall_seconds_slope: slope(|p| p.1),
            rmse_slope: slope(|p| p.2),
            points,
        });
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(Error::domain(format!(
                "unknown format '{other}' (expected csv or json)"
            ))),
        }
    }
}

/// Fixed-width scientific notation with 17 significant digits.
pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

fn io_err(path: &str, e: impl fmt::Display) -> Error {
    Error::Io {
        path: path.to_string(),
        message: e.to_string(),
    }
}

pub fn write_records<W: Write>(
    records: &[RunRecord],
    format: OutputFormat,
    w: W,
    path: &str,
) -> Result<()> {
    match format {
        OutputFormat::Csv => {
            let mut wr = csv::Writer::from_writer(w);
            wr.write_record(CSV_HEADER).map_err(|e| io_err(path, e))?;
            for r in records {
                wr.write_record([
                    r.problem_label.clone(),
                    r.n.to_string(),
                    r.m.to_string(),
                    format_float(r.t),
                    r.method.to_string(),
                    format_float(r.rmse_vs_lu),
                    format_float(r.residual_rel),
                    format_float(r.wall_seconds),
                    r.aliasing_flag.to_string(),
                ])
                .map_err(|e| io_err(path, e))?;
            }
            wr.flush().map_err(|e| io_err(path, e))
        }
        OutputFormat::Json => {
            let mut w = w;
            serde_json::to_writer_pretty(&mut w, records).map_err(|e| io_err(path, e))?;
            writeln!(w).map_err(|e| io_err(path, e))
        }
    }
}

pub fn emit_results(records: &[RunRecord], format: OutputFormat, path: &Path) -> Result<()> {
    let shown = path.display().to_string();
    let file = File::create(path).map_err(|e| io_err(&shown, e))?;
    let mut w = BufWriter::new(file);
    write_records(records, format, &mut w, &shown)?;
    w.flush().map_err(|e| io_err(&shown, e))
}

/// Reads back a file written by [`emit_results`].
pub fn read_results(path: &Path, format: OutputFormat) -> Result<Vec<RunRecord>> {
    let shown = path.display().to_string();
    let mut text = String::new();
    File::open(path)
        .and_then(|mut f| f.read_to_string(&mut text))
        .map_err(|e| io_err(&shown, e))?;
    parse_records(&text, format, &shown)
}

pub fn parse_records(text: &str, format: OutputFormat, path: &str) -> Result<Vec<RunRecord>> {
    match format {
        OutputFormat::Json => serde_json::from_str(text).map_err(|e| Error::Parse {
            line: e.line(),
            message: e.to_string(),
        }),
        OutputFormat::Csv => {
            let mut rd = csv::Reader::from_reader(text.as_bytes());
            let header = rd.headers().map_err(|e| io_err(path, e))?;
            if header.iter().ne(CSV_HEADER) {
                return Err(Error::Parse {
                    line: 1,
                    message: format!(
                        "unexpected header '{}'",
                        header.iter().collect::<Vec<_>>().join(",")
                    ),
                });
            }
            let mut out = Vec::new();
            for (k, row) in rd.records().enumerate() {
                let line = k + 2;
                let row = row.map_err(|e| Error::Parse {
                    line,
                    message: e.to_string(),
                })?;
                let field = |i: usize| row.get(i).unwrap_or("");
                let bad = |what: &str| Error::Parse {
                    line,
                    message: format!(
                        "bad {what} '{}'",
                        field(CSV_HEADER.iter().position(|h| *h == what).unwrap_or(0))
                    ),
                };
                out.push(RunRecord {
                    problem_label: field(0).to_string(),
                    n: field(1).parse().map_err(|_| bad("n"))?,
                    m: field(2).parse().map_err(|_| bad("m"))?,
                    t: field(3).parse().map_err(|_| bad("t"))?,
                    method: field(4).parse().map_err(|_| bad("method"))?,
                    rmse_vs_lu: field(5).parse().map_err(|_| bad("rmse_vs_lu"))?,
                    residual_rel: field(6).parse().map_err(|_| bad("residual_rel"))?,
                    wall_seconds: field(7).parse().map_err(|_| bad("wall_seconds"))?,
                    aliasing_flag: field(8).parse().map_err(|_| bad("aliasing_flag"))?,
                });
            }
            Ok(out)
        }
    }
}
