//! Linear systems: the finite-difference builders and the Hermitian embedding.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::linalg::{max_abs, DenseMatrix, C64, HERMITIAN_TOL};

/// `a x = b` plus the physical parameters it was built from.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearProblem {
    pub a: DenseMatrix,
    pub b: Vec<C64>,
    pub label: String,
    pub meta: BTreeMap<String, f64>,
}

impl LinearProblem {
    pub fn new(a: DenseMatrix, b: Vec<C64>, label: impl Into<String>) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::shape(format!(
                "system matrix must be square, got {}x{}",
                a.rows(),
                a.cols()
            )));
        }
        if b.len() != a.rows() {
            return Err(Error::shape(format!(
                "right-hand side has length {}, matrix has {} rows",
                b.len(),
                a.rows()
            )));
        }
        Ok(LinearProblem {
            a,
            b,
            label: label.into(),
            meta: BTreeMap::new(),
        })
    }

    pub fn n(&self) -> usize {
        self.b.len()
    }

    fn with_meta(mut self, entries: &[(&str, f64)]) -> Self {
        for &(k, v) in entries {
            self.meta.insert(k.to_string(), v);
        }
        self
    }
}

/// A system guaranteed to have a Hermitian matrix.
///
/// Non-Hermitian `A` is embedded as `[[0, A], [A†, 0]]` with right-hand side
/// `(b, 0)`; the solution then sits in the lower block as `(0, x)`.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitizedProblem {
    pub a_prime: DenseMatrix,
    pub b_prime: Vec<C64>,
    pub original_n: usize,
    pub was_hermitian: bool,
}

pub fn hermitize(p: &LinearProblem) -> HermitizedProblem {
    let n = p.n();
    if p.a.is_hermitian(HERMITIAN_TOL) {
        return HermitizedProblem {
            a_prime: p.a.clone(),
            b_prime: p.b.clone(),
            original_n: n,
            was_hermitian: true,
        };
    }
    let zero = C64::new(0.0, 0.0);
    let a_prime = DenseMatrix::from_fn(2 * n, 2 * n, |i, j| match (i < n, j < n) {
        (true, false) => p.a[(i, j - n)],
        (false, true) => p.a[(j, i - n)].conj(),
        _ => zero,
    });
    let mut b_prime = p.b.clone();
    b_prime.resize(2 * n, zero);
    HermitizedProblem {
        a_prime,
        b_prime,
        original_n: n,
        was_hermitian: false,
    }
}

/// Solution of the original system recovered from an embedded one.
#[derive(Clone, Debug, PartialEq)]
pub struct Extracted {
    pub x: Vec<C64>,
    /// Largest magnitude in the discarded upper block; zero for pass-through.
    pub upper_block_leak: f64,
}

pub fn extract_solution(y: &[C64], h: &HermitizedProblem) -> Result<Extracted> {
    if y.len() != h.a_prime.rows() {
        return Err(Error::shape(format!(
            "solution has length {}, embedded system has {} rows",
            y.len(),
            h.a_prime.rows()
        )));
    }
    if h.was_hermitian {
        return Ok(Extracted {
            x: y.to_vec(),
            upper_block_leak: 0.0,
        });
    }
    let n = h.original_n;
    Ok(Extracted {
        x: y[n..].to_vec(),
        upper_block_leak: max_abs(&y[..n]),
    })
}

/// Oscillator discretisation parameters.
///
/// The defaults keep `(k/m)(Δt)²` above 4, so the tridiagonal matrix is
/// definite with a condition number near 3 and the whole spectrum is
/// resolvable by a clock of a few hundred bins.
#[derive(Clone, Debug, PartialEq)]
pub struct OscillatorParams {
    pub n: usize,
    pub k_over_m: f64,
    pub dt: f64,
    pub force_amp: f64,
    pub force_freq: f64,
    pub x0: f64,
    pub x_t: f64,
}

pub const DEFAULT_GAMMA: f64 = 0.2;

impl Default for OscillatorParams {
    fn default() -> Self {
        OscillatorParams {
            n: 64,
            k_over_m: 1.0,
            dt: 2.2,
            force_amp: 1.0,
            force_freq: 2.0,
            x0: 1.0,
            x_t: 0.0,
        }
    }
}

impl OscillatorParams {
    fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::domain(format!(
                "oscillator needs n >= 2, got {}",
                self.n
            )));
        }
        if !(self.dt > 0.0) {
            return Err(Error::domain(format!(
                "time step must be positive, got {}",
                self.dt
            )));
        }
        Ok(())
    }

    /// `F_j = (Δt)² C sin(ν j Δt)` for `j = 1..=n`.
    fn forcing(&self) -> Vec<f64> {
        (1..=self.n)
            .map(|j| {
                self.dt * self.dt * self.force_amp * (self.force_freq * j as f64 * self.dt).sin()
            })
            .collect()
    }

    fn meta(&self) -> Vec<(&'static str, f64)> {
        vec![
            ("n", self.n as f64),
            ("dt", self.dt),
            ("k_over_m", self.k_over_m),
            ("force_amp", self.force_amp),
            ("force_freq", self.force_freq),
            ("x0", self.x0),
            ("xT", self.x_t),
        ]
    }
}

fn tridiagonal(n: usize, sub: f64, diag: f64, sup: f64) -> DenseMatrix {
    DenseMatrix::from_fn(n, n, |i, j| {
        let v = if i == j {
            diag
        } else if j == i + 1 {
            sup
        } else if i == j + 1 {
            sub
        } else {
            0.0
        };
        C64::new(v, 0.0)
    })
}

/// Forced harmonic oscillator `x'' + (k/m) x = C sin(ν t)` with Dirichlet ends.
pub fn build_forced_oscillator(p: &OscillatorParams) -> Result<LinearProblem> {
    p.validate()?;
    let omega = -2.0 + p.k_over_m * p.dt * p.dt;
    let mut rhs = p.forcing();
    rhs[0] -= p.x0;
    rhs[p.n - 1] -= p.x_t;
    let b = rhs.into_iter().map(|v| C64::new(v, 0.0)).collect();
    let mut meta = p.meta();
    meta.push(("omega", omega));
    Ok(
        LinearProblem::new(tridiagonal(p.n, 1.0, omega, 1.0), b, "forced_oscillator")?
            .with_meta(&meta),
    )
}

/// Damped oscillator `x'' + γ x' + (k/m) x = C sin(ν t)`; not Hermitian for `γ ≠ 0`.
pub fn build_damped_oscillator(p: &OscillatorParams, gamma: f64) -> Result<LinearProblem> {
    p.validate()?;
    let beta_minus = 1.0 - gamma * p.dt / 2.0;
    let beta_plus = 1.0 + gamma * p.dt / 2.0;
    let beta_0 = -2.0 + p.k_over_m * p.dt * p.dt;
    let mut rhs = p.forcing();
    rhs[0] -= beta_minus * p.x0;
    rhs[p.n - 1] -= beta_plus * p.x_t;
    let b = rhs.into_iter().map(|v| C64::new(v, 0.0)).collect();
    let mut meta = p.meta();
    meta.extend([
        ("gamma", gamma),
        ("beta_0", beta_0),
        ("beta_plus", beta_plus),
        ("beta_minus", beta_minus),
    ]);
    Ok(LinearProblem::new(
        tridiagonal(p.n, beta_minus, beta_0, beta_plus),
        b,
        "damped_oscillator",
    )?
    .with_meta(&meta))
}

/// Dirichlet values along the four edges of the heat domain.
#[derive(Clone, Debug, PartialEq)]
pub struct Boundary {
    /// `x = 0`, one value per interior row `k` (length `ny`).
    pub left: Vec<f64>,
    /// `x = Lx`, length `ny`.
    pub right: Vec<f64>,
    /// `y = 0`, one value per interior column `j` (length `nx`).
    pub bottom: Vec<f64>,
    /// `y = Ly`, length `nx`.
    pub top: Vec<f64>,
}

impl Boundary {
    pub fn constant(nx: usize, ny: usize, value: f64) -> Self {
        Boundary {
            left: vec![value; ny],
            right: vec![value; ny],
            bottom: vec![value; nx],
            top: vec![value; nx],
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Heat2dParams {
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub ly: f64,
    pub kappa_thermal: f64,
    pub source_amp: f64,
    pub boundary: Boundary,
}

impl Default for Heat2dParams {
    fn default() -> Self {
        Heat2dParams {
            nx: 16,
            ny: 16,
            lx: 1.0,
            ly: 1.0,
            kappa_thermal: 1.0,
            source_amp: 10.0,
            boundary: Boundary::constant(16, 16, 0.0),
        }
    }
}

impl Heat2dParams {
    /// Square grid over `[0, l]²` with a constant boundary.
    pub fn square(n: usize, l: f64, boundary_value: f64) -> Self {
        Heat2dParams {
            nx: n,
            ny: n,
            lx: l,
            ly: l,
            boundary: Boundary::constant(n, n, boundary_value),
            ..Default::default()
        }
    }

    /// Interior node spacing.
    pub fn spacing(&self) -> f64 {
        self.lx / (self.nx as f64 + 1.0)
    }

    /// Physical coordinates of interior node `(j, k)`.
    pub fn node(&self, j: usize, k: usize) -> (f64, f64) {
        let h = self.spacing();
        ((j + 1) as f64 * h, (k + 1) as f64 * h)
    }

    pub fn source(&self, x: f64, y: f64) -> f64 {
        self.source_amp * (2.0 * PI * x * y / (self.lx * self.ly)).sin()
    }
}

/// Flattened index of interior node `(j, k)`; `j` runs along x and is the
/// slow index.
pub fn heat_index(j: usize, k: usize, ny: usize) -> usize {
    j * ny + k
}

/// Static heat equation `κ ∇²u = −S` on a rectangle, five-point stencil,
/// Dirichlet values folded into the right-hand side.
pub fn build_heat2d(p: &Heat2dParams) -> Result<LinearProblem> {
    let (nx, ny) = (p.nx, p.ny);
    if nx == 0 || ny == 0 {
        return Err(Error::domain(format!(
            "heat grid needs at least one interior node, got {nx}x{ny}"
        )));
    }
    let dx = p.lx / (nx as f64 + 1.0);
    let dy = p.ly / (ny as f64 + 1.0);
    if !(dx > 0.0 && dy > 0.0) || (dx - dy).abs() > 1e-12 * dx.max(dy) {
        return Err(Error::domain(format!(
            "grid spacing must be uniform and positive, got dx={dx} dy={dy}"
        )));
    }
    if p.kappa_thermal == 0.0 || !p.kappa_thermal.is_finite() {
        return Err(Error::domain(
            "thermal conductivity must be finite and nonzero",
        ));
    }
    let bd = &p.boundary;
    if bd.left.len() != ny || bd.right.len() != ny || bd.bottom.len() != nx || bd.top.len() != nx {
        return Err(Error::shape(format!(
            "boundary edges must have lengths left/right={ny}, bottom/top={nx}"
        )));
    }

    let n = nx * ny;
    let mut a = DenseMatrix::zeros(n, n);
    let mut b = vec![C64::new(0.0, 0.0); n];
    let one = C64::new(1.0, 0.0);
    for j in 0..nx {
        for k in 0..ny {
            let r = heat_index(j, k, ny);
            a[(r, r)] = C64::new(-4.0, 0.0);
            let (x, y) = p.node(j, k);
            let mut rhs = -dx * dx * p.source(x, y) / p.kappa_thermal;
            if j > 0 {
                a[(r, heat_index(j - 1, k, ny))] = one;
            } else {
                rhs -= bd.left[k];
            }
            if j + 1 < nx {
                a[(r, heat_index(j + 1, k, ny))] = one;
            } else {
                rhs -= bd.right[k];
            }
            if k > 0 {
                a[(r, heat_index(j, k - 1, ny))] = one;
            } else {
                rhs -= bd.bottom[j];
            }
            if k + 1 < ny {
                a[(r, heat_index(j, k + 1, ny))] = one;
            } else {
                rhs -= bd.top[j];
            }
            b[r] = C64::new(rhs, 0.0);
        }
    }
    Ok(LinearProblem::new(a, b, "heat2d")?.with_meta(&[
        ("nx", nx as f64),
        ("ny", ny as f64),
        ("lx", p.lx),
        ("ly", p.ly),
        ("dx", dx),
        ("kappa_thermal", p.kappa_thermal),
        ("source_amp", p.source_amp),
    ]))
}
