//! Tensor-network HHL.
//!
//! The phase-estimation circuit is contracted classically. The clock register
//! is an `m`-dimensional index; the Fourier transforms are the unnormalised
//! matrices `H` and `H⁻¹`; the eigenvalue inverter `inv` is applied directly
//! as a non-unitary diagonal tensor, so no post-selection is needed.
//!
//! Two contraction orders are provided. [`contract_naive`] follows the
//! circuit: `b · P · H⁻¹ · inv · H · P⁻¹`, with `P` holding every power of
//! `U`. [`contract_efficient`] replaces the two kickback tensors by
//! `W_{ab} = b U^{a−b}` and precontracts `K = H⁻¹ inv H` once per clock.
//!
//! The kickback and `W` tensors act on row vectors (`b U^p`). For a complex
//! Hermitian `A'` that computes with `Uᵀ`, so [`PreparedOperator`] feeds
//! `exp(i A' t)ᵀ` into them; the contraction then equals
//! `Σ_p c_p exp(i A' t p) b` as a column product.

use std::f64::consts::PI;
use std::ops::Index;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    hermitian_eigen, matmul, relative_residual, vec_mat, DenseMatrix, C64, EIGEN_TOL,
};
use crate::problems::{extract_solution, hermitize, LinearProblem};

pub const DEFAULT_POS_FRACTION: f64 = 0.5;
pub const DEFAULT_SAFETY: f64 = 0.9;
pub const DEFAULT_M: usize = 512;

/// Unitarity tolerance for `U` handed to the tensor builders.
const UNITARY_TOL: f64 = 1e-10;

/// Clock register dimension `m` and evolution time `t`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClockParams {
    pub m: usize,
    pub t: f64,
    /// Fraction of the clock bins read as positive eigenvalues.
    pub pos_fraction: f64,
}

impl ClockParams {
    pub fn new(m: usize, t: f64) -> Result<Self> {
        Self::with_split(m, t, DEFAULT_POS_FRACTION)
    }

    pub fn with_split(m: usize, t: f64, pos_fraction: f64) -> Result<Self> {
        if m < 2 {
            return Err(Error::domain(format!(
                "clock dimension must be at least 2, got {m}"
            )));
        }
        if !(t > 0.0) || !t.is_finite() {
            return Err(Error::domain(format!(
                "evolution time must be positive and finite, got {t}"
            )));
        }
        validate_pos_fraction(pos_fraction)?;
        Ok(ClockParams { m, t, pos_fraction })
    }

    /// Bins `1..=positive_bins()` encode positive eigenvalues.
    pub fn positive_bins(&self) -> usize {
        positive_bins(self.m, self.pos_fraction)
    }

    /// Width of one eigenvalue bin, `2π / (t m)`.
    pub fn bin_width(&self) -> f64 {
        2.0 * PI / (self.t * self.m as f64)
    }
}

fn validate_pos_fraction(f: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&f) {
        return Err(Error::domain(format!(
            "positive-bin fraction must lie in [0, 1], got {f}"
        )));
    }
    Ok(())
}

fn positive_bins(m: usize, pos_fraction: f64) -> usize {
    ((m as f64 * pos_fraction).floor() as usize).min(m - 1)
}

/// Signed eigenvalue index of clock bin `i`: `i` up to the split, `i − m`
/// above it, `0` for the zero bin.
pub fn signed_bin(i: usize, m: usize, positive_bins: usize) -> i64 {
    if i == 0 {
        0
    } else if i <= positive_bins {
        i as i64
    } else {
        i as i64 - m as i64
    }
}

/// Clock request where the time may be left to [`choose_time`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClockSpec {
    pub m: usize,
    pub t: Option<f64>,
    pub pos_fraction: f64,
    pub safety: f64,
}

impl ClockSpec {
    pub fn auto(m: usize) -> Self {
        ClockSpec {
            m,
            t: None,
            pos_fraction: DEFAULT_POS_FRACTION,
            safety: DEFAULT_SAFETY,
        }
    }

    pub fn fixed(m: usize, t: f64) -> Self {
        ClockSpec {
            t: Some(t),
            ..Self::auto(m)
        }
    }

    pub fn with_pos_fraction(self, pos_fraction: f64) -> Self {
        ClockSpec {
            pos_fraction,
            ..self
        }
    }

    /// Fixes `t`, picking it from `spectrum` when not supplied.
    pub fn resolve(&self, spectrum: &[f64]) -> Result<ClockParams> {
        validate_pos_fraction(self.pos_fraction)?;
        let t = match self.t {
            Some(t) => t,
            None => choose_time_from_spectrum(spectrum, self.pos_fraction, self.safety)?,
        };
        ClockParams::with_split(self.m, t, self.pos_fraction)
    }
}

impl From<ClockParams> for ClockSpec {
    fn from(c: ClockParams) -> Self {
        ClockSpec {
            m: c.m,
            t: Some(c.t),
            pos_fraction: c.pos_fraction,
            safety: DEFAULT_SAFETY,
        }
    }
}

fn check_m(m: usize) -> Result<()> {
    if m < 2 {
        return Err(Error::domain(format!(
            "clock dimension must be at least 2, got {m}"
        )));
    }
    Ok(())
}

/// `e^{sign · 2πi q/m}` for `q = 0..m`. Phases are always looked up by the
/// exact integer residue `ab mod m`.
fn phase_table(m: usize, sign: f64) -> Vec<C64> {
    (0..m)
        .map(|q| C64::from_polar(1.0, sign * 2.0 * PI * q as f64 / m as f64))
        .collect()
}

fn fourier_with_sign(m: usize, sign: f64) -> Result<DenseMatrix> {
    check_m(m)?;
    let table = phase_table(m, sign);
    Ok(DenseMatrix::from_fn(m, m, |a, b| table[(a * b) % m]))
}

/// Unnormalised Fourier matrix, entry `(a, b) = e^{2πi ab/m}`.
pub fn build_fourier(m: usize) -> Result<DenseMatrix> {
    fourier_with_sign(m, 1.0)
}

/// Unnormalised conjugate Fourier matrix, entry `(a, b) = e^{−2πi ab/m}`.
/// `build_fourier(m) · build_inverse_fourier(m) = m I`.
pub fn build_inverse_fourier(m: usize) -> Result<DenseMatrix> {
    fourier_with_sign(m, -1.0)
}

/// Diagonal inverter with the default half/half split.
pub fn build_inverter(m: usize) -> Result<DenseMatrix> {
    build_inverter_split(m, DEFAULT_POS_FRACTION)
}

/// Diagonal inverter: `1/i` on positive bins, `1/(i − m)` above the split,
/// `0` on the zero bin.
pub fn build_inverter_split(m: usize, pos_fraction: f64) -> Result<DenseMatrix> {
    check_m(m)?;
    validate_pos_fraction(pos_fraction)?;
    Ok(DenseMatrix::from_diagonal(&inverter_diagonal(
        m,
        pos_fraction,
    )))
}

fn inverter_diagonal(m: usize, pos_fraction: f64) -> Vec<C64> {
    let npos = positive_bins(m, pos_fraction);
    (0..m)
        .map(|i| match signed_bin(i, m, npos) {
            0 => C64::new(0.0, 0.0),
            c => C64::new(1.0 / c as f64, 0.0),
        })
        .collect()
}

/// Dense rank-3 tensor, row-major over `(i, j, k)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor3 {
    dims: [usize; 3],
    data: Vec<C64>,
}

impl Tensor3 {
    pub fn zeros(d0: usize, d1: usize, d2: usize) -> Self {
        Tensor3 {
            dims: [d0, d1, d2],
            data: vec![C64::new(0.0, 0.0); d0 * d1 * d2],
        }
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    fn offset(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.dims[1] + j) * self.dims[2] + k
    }

    pub fn set(&mut self, i: usize, j: usize, k: usize, v: C64) {
        let o = self.offset(i, j, k);
        self.data[o] = v;
    }

    /// The matrix obtained by fixing the middle index.
    pub fn slice(&self, j: usize) -> DenseMatrix {
        DenseMatrix::from_fn(self.dims[0], self.dims[2], |i, k| self[(i, j, k)])
    }
}

impl Index<(usize, usize, usize)> for Tensor3 {
    type Output = C64;

    fn index(&self, (i, j, k): (usize, usize, usize)) -> &C64 {
        &self.data[self.offset(i, j, k)]
    }
}

fn check_unitary(u: &DenseMatrix) -> Result<()> {
    if !u.is_unitary(UNITARY_TOL) {
        return Err(Error::domain("evolution operator is not unitary"));
    }
    Ok(())
}

/// Phase-kickback tensor, `N × m × N`.
///
/// Forward: `P[i, j, k] = (U^j)_{ik}`. Inverse: `P⁻¹[i, j, k] = ((U⁻¹)^j)_{ki}`,
/// i.e. slice `j` is the transpose of `(U⁻¹)^j`. Powers are accumulated by
/// repeated multiplication.
pub fn build_phase_kickback(u: &DenseMatrix, m: usize, inverse: bool) -> Result<Tensor3> {
    check_m(m)?;
    check_unitary(u)?;
    let n = u.rows();
    let step = if inverse { u.adjoint() } else { u.clone() };
    let mut power = DenseMatrix::identity(n);
    let mut p = Tensor3::zeros(n, m, n);
    for j in 0..m {
        for i in 0..n {
            for k in 0..n {
                let v = if inverse {
                    power[(k, i)]
                } else {
                    power[(i, k)]
                };
                p.set(i, j, k, v);
            }
        }
        if j + 1 < m {
            power = matmul(&power, &step)?;
        }
    }
    Ok(p)
}

/// `W_{abi} = (b U^{a−b})_i`, stored as the `2m − 1` row vectors `b U^p`.
#[derive(Clone, Debug, PartialEq)]
pub struct WTensor {
    m: usize,
    chain: Vec<Vec<C64>>,
}

impl WTensor {
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.chain[0].len()
    }

    /// `b U^p` for `p ∈ (−m, m)`.
    pub fn vector(&self, p: isize) -> &[C64] {
        &self.chain[(p + self.m as isize - 1) as usize]
    }

    pub fn get(&self, a: usize, b: usize, i: usize) -> C64 {
        self.vector(a as isize - b as isize)[i]
    }

    /// Materialises the full `m × m × N` tensor.
    pub fn to_tensor(&self) -> Tensor3 {
        let (m, n) = (self.m, self.n());
        let mut t = Tensor3::zeros(m, m, n);
        for a in 0..m {
            for b in 0..m {
                for (i, &v) in self.vector(a as isize - b as isize).iter().enumerate() {
                    t.set(a, b, i, v);
                }
            }
        }
        t
    }
}

/// Builds `W` by iterating `v_{p+1} = v_p U` and `v_{p−1} = v_p U⁻¹` from
/// `v_0 = b`, `O(N² m)` in total.
pub fn build_w(b: &[C64], u: &DenseMatrix, m: usize) -> Result<WTensor> {
    check_m(m)?;
    if !u.is_square() || b.len() != u.rows() {
        return Err(Error::shape(format!(
            "vector of length {} does not match {}x{} evolution operator",
            b.len(),
            u.rows(),
            u.cols()
        )));
    }
    check_unitary(u)?;
    let u_inv = u.adjoint();
    let mut chain = vec![Vec::new(); 2 * m - 1];
    let centre = m - 1;
    chain[centre] = b.to_vec();
    for p in 1..m {
        chain[centre + p] = vec_mat(&chain[centre + p - 1], u)?;
        chain[centre - p] = vec_mat(&chain[centre - p + 1], &u_inv)?;
    }
    Ok(WTensor { m, chain })
}

/// Precontracted `K = H⁻¹ · inv · H` and its diagonal sums
/// `c_p = Σ_{a−b=p} K_{ab}`.
#[derive(Clone, Debug)]
pub struct SpectralKernel {
    k: DenseMatrix,
    diagonal_weights: Vec<C64>,
}

impl SpectralKernel {
    /// Builds the kernel in `O(m²)`.
    ///
    /// `inv` is diagonal, so `K_{ab} = Σ_c inv_c e^{−2πi c(a−b)/m}` depends only
    /// on `(a − b) mod m`: `m` distinct values, each an `O(m)` sum.
    pub fn new(m: usize, pos_fraction: f64) -> Result<Self> {
        check_m(m)?;
        validate_pos_fraction(pos_fraction)?;
        let inv = inverter_diagonal(m, pos_fraction);
        let table = phase_table(m, -1.0);
        let toeplitz: Vec<C64> = (0..m)
            .map(|q| {
                inv.iter()
                    .enumerate()
                    .map(|(c, &w)| w * table[(c * q) % m])
                    .sum()
            })
            .collect();
        let k = DenseMatrix::from_fn(m, m, |a, b| toeplitz[(a + m - b) % m]);
        Ok(Self::from_matrix(k))
    }

    /// Builds the kernel by explicit matrix products, `O(m³)`.
    pub fn from_tensors(h_inv: &DenseMatrix, inv: &DenseMatrix, h: &DenseMatrix) -> Result<Self> {
        let k = matmul(&matmul(h_inv, inv)?, h)?;
        if !k.is_square() {
            return Err(Error::shape("kernel factors must be square"));
        }
        Ok(Self::from_matrix(k))
    }

    fn from_matrix(k: DenseMatrix) -> Self {
        let diagonal_weights = diagonal_sums(&k);
        SpectralKernel {
            k,
            diagonal_weights,
        }
    }

    pub fn m(&self) -> usize {
        self.k.rows()
    }

    pub fn matrix(&self) -> &DenseMatrix {
        &self.k
    }

    /// `c_p` for `p ∈ (−m, m)`.
    pub fn weight(&self, p: isize) -> C64 {
        self.diagonal_weights[(p + self.m() as isize - 1) as usize]
    }

    pub fn diagonal_weights(&self) -> &[C64] {
        &self.diagonal_weights
    }
}

/// `c_p = Σ_{a−b=p} K_{ab}`, indexed by `p + m − 1`.
pub fn diagonal_sums(k: &DenseMatrix) -> Vec<C64> {
    let m = k.rows();
    let mut c = vec![C64::new(0.0, 0.0); 2 * m - 1];
    for a in 0..m {
        for b in 0..m {
            c[a + m - 1 - b] += k[(a, b)];
        }
    }
    c
}

/// Contracts the circuit-shaped network
/// `r_i = Σ b_a P_{abc} H⁻¹_{bd} inv_{de} H_{ef} P⁻¹_{ifc}`, unscaled.
///
/// `P⁻¹` is indexed as built by [`build_phase_kickback`]; its third index is
/// the one shared with `P`, so the system index flows through as
/// `b U^b U^{−f}`.
pub fn contract_naive(b: &[C64], u: &DenseMatrix, clock: &ClockParams) -> Result<Vec<C64>> {
    let m = clock.m;
    let n = u.rows();
    if b.len() != n {
        return Err(Error::shape(format!(
            "vector of length {} does not match {n}x{n} operator",
            b.len()
        )));
    }
    let p = build_phase_kickback(u, m, false)?;
    let p_inv = build_phase_kickback(u, m, true)?;
    let h = build_fourier(m)?;
    let h_inv = build_inverse_fourier(m)?;
    let inv = build_inverter_split(m, clock.pos_fraction)?;
    let zero = C64::new(0.0, 0.0);

    // X[b][c] = Σ_a b_a P[a, b, c]
    let mut x = vec![vec![zero; n]; m];
    for (a, &ba) in b.iter().enumerate() {
        for (bb, row) in x.iter_mut().enumerate() {
            for (c, v) in row.iter_mut().enumerate() {
                *v += ba * p[(a, bb, c)];
            }
        }
    }
    let through = |mat: &DenseMatrix, src: &[Vec<C64>]| -> Vec<Vec<C64>> {
        // out[d][c] = Σ_b mat[b, d] src[b][c]
        let mut out = vec![vec![zero; n]; m];
        for (bb, row) in src.iter().enumerate() {
            for (d, o) in out.iter_mut().enumerate() {
                let w = mat[(bb, d)];
                if w == zero {
                    continue;
                }
                for (ov, &sv) in o.iter_mut().zip(row) {
                    *ov += w * sv;
                }
            }
        }
        out
    };
    let y = through(&h_inv, &x);
    let z = through(&inv, &y);
    let q = through(&h, &z);

    let mut r = vec![zero; n];
    for (i, ri) in r.iter_mut().enumerate() {
        for (f, row) in q.iter().enumerate() {
            for (c, &v) in row.iter().enumerate() {
                *ri += v * p_inv[(i, f, c)];
            }
        }
    }
    Ok(r)
}

fn check_kernel(w: &WTensor, kernel: &SpectralKernel) -> Result<()> {
    if w.m() != kernel.m() {
        return Err(Error::shape(format!(
            "W tensor has clock dimension {}, kernel has {}",
            w.m(),
            kernel.m()
        )));
    }
    Ok(())
}

/// `r_i = Σ_{ab} W_{abi} K_{ab}`, evaluated as `Σ_p c_p (b U^p)_i` in `O(N m)`.
pub fn contract_efficient(w: &WTensor, kernel: &SpectralKernel) -> Result<Vec<C64>> {
    check_kernel(w, kernel)?;
    let m = w.m() as isize;
    let mut r = vec![C64::new(0.0, 0.0); w.n()];
    for p in (1 - m)..m {
        let c = kernel.weight(p);
        for (ri, &v) in r.iter_mut().zip(w.vector(p)) {
            *ri += c * v;
        }
    }
    Ok(r)
}

/// The same contraction summed entry by entry over `(a, b)`, `O(N m²)`.
pub fn contract_efficient_dense(w: &WTensor, kernel: &SpectralKernel) -> Result<Vec<C64>> {
    check_kernel(w, kernel)?;
    let m = w.m();
    let k = kernel.matrix();
    let mut r = vec![C64::new(0.0, 0.0); w.n()];
    for a in 0..m {
        for b in 0..m {
            let kab = k[(a, b)];
            for (i, ri) in r.iter_mut().enumerate() {
                *ri += w.get(a, b, i) * kab;
            }
        }
    }
    Ok(r)
}

/// Default bin used for calibration: `⌊m/4⌋` clamped into the positive
/// range, or `−1` when no positive bins exist.
pub fn default_calibration_bin(clock: &ClockParams) -> i64 {
    let npos = clock.positive_bins();
    if npos == 0 {
        -1
    } else {
        ((clock.m / 4).max(1)).min(npos) as i64
    }
}

/// Output scale from a 1×1 system whose eigenvalue sits exactly on bin
/// `bin`: returns `s` with `s · r = 1/λ*`.
pub fn calibrate_scale_at_bin(
    clock: &ClockParams,
    kernel: &SpectralKernel,
    bin: i64,
) -> Result<C64> {
    let npos = clock.positive_bins() as i64;
    if bin == 0 || bin > npos || bin <= npos - clock.m as i64 {
        return Err(Error::Calibration(format!(
            "bin {bin} is outside the invertible range for m = {}",
            clock.m
        )));
    }
    let lambda = 2.0 * PI * bin as f64 / (clock.t * clock.m as f64);
    let u = DenseMatrix::from_vec(1, 1, vec![C64::from_polar(1.0, lambda * clock.t)])?;
    let w = build_w(&[C64::new(1.0, 0.0)], &u, clock.m)?;
    let r = contract_efficient(&w, kernel)?[0];
    if r.norm() < 1e-300 {
        return Err(Error::Calibration(format!(
            "degenerate contraction {r} at bin {bin}"
        )));
    }
    Ok(C64::new(1.0 / lambda, 0.0) / r)
}

/// Output scale for `clock`, calibrated on [`default_calibration_bin`].
pub fn calibrate_scale(clock: &ClockParams) -> Result<C64> {
    let kernel = SpectralKernel::new(clock.m, clock.pos_fraction)?;
    calibrate_scale_at_bin(clock, &kernel, default_calibration_bin(clock))
}

/// `t / (2π m)`: the scale implied by unnormalised `H` and `U = e^{iA't}`.
pub fn analytic_scale(clock: &ClockParams) -> f64 {
    clock.t / (2.0 * PI * clock.m as f64)
}

/// `t / m²`, an alternative normalisation reported next to the calibrated scale.
pub fn quoted_scale(clock: &ClockParams) -> f64 {
    clock.t / (clock.m as f64 * clock.m as f64)
}

/// Largest evolution time for which no eigenvalue wraps into the wrong
/// signed bin, times `safety`: `t = safety · π / max|λ|` for the default
/// half/half split.
pub fn choose_time(a_prime: &DenseMatrix, safety: f64) -> Result<f64> {
    let eig = hermitian_eigen(a_prime, EIGEN_TOL)?;
    choose_time_from_spectrum(&eig.eigenvalues, DEFAULT_POS_FRACTION, safety)
}

/// As [`choose_time`], for a known spectrum and an arbitrary positive/negative
/// bin split: positive eigenvalues must satisfy `λ t ≤ 2π f`, negative ones
/// `|λ| t ≤ 2π (1 − f)`.
pub fn choose_time_from_spectrum(
    eigenvalues: &[f64],
    pos_fraction: f64,
    safety: f64,
) -> Result<f64> {
    if !(safety > 0.0) {
        return Err(Error::domain(format!(
            "safety factor must be positive, got {safety}"
        )));
    }
    let max_pos = eigenvalues
        .iter()
        .copied()
        .filter(|&l| l > 0.0)
        .fold(0.0, f64::max);
    let max_neg = eigenvalues
        .iter()
        .copied()
        .filter(|&l| l < 0.0)
        .map(f64::abs)
        .fold(0.0, f64::max);
    if max_pos == 0.0 && max_neg == 0.0 {
        return Err(Error::domain(
            "cannot choose an evolution time for the zero matrix",
        ));
    }
    let mut t = f64::INFINITY;
    if max_pos > 0.0 {
        t = t.min(2.0 * PI * pos_fraction / max_pos);
    }
    if max_neg > 0.0 {
        t = t.min(2.0 * PI * (1.0 - pos_fraction) / max_neg);
    }
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::domain(format!(
            "positive-bin fraction {pos_fraction} leaves no bins for part of the spectrum"
        )));
    }
    Ok(safety * t)
}

/// True when some eigenvalue falls outside its signed bin range.
pub fn is_aliased(eigenvalues: &[f64], clock: &ClockParams) -> bool {
    let f = clock.pos_fraction;
    eigenvalues.iter().any(|&l| {
        if l > 0.0 {
            l * clock.t > 2.0 * PI * f
        } else {
            -l * clock.t > 2.0 * PI * (1.0 - f)
        }
    })
}

/// Everything that depends on `A'` and the clock but not on `b`.
#[derive(Clone, Debug)]
pub struct PreparedOperator {
    clock: ClockParams,
    evolution: DenseMatrix,
    row_evolution: DenseMatrix,
    kernel: SpectralKernel,
    scale: C64,
    eigenvalues: Vec<f64>,
    aliased: bool,
}

impl PreparedOperator {
    pub fn new(a_prime: &DenseMatrix, clock: &ClockSpec) -> Result<Self> {
        let eig = hermitian_eigen(a_prime, EIGEN_TOL)?;
        let clock = clock.resolve(&eig.eigenvalues)?;
        let evolution = eig.exp_i(clock.t);
        let row_evolution = evolution.transpose();
        let kernel = SpectralKernel::new(clock.m, clock.pos_fraction)?;
        let scale = calibrate_scale_at_bin(&clock, &kernel, default_calibration_bin(&clock))?;
        let aliased = is_aliased(&eig.eigenvalues, &clock);
        if aliased {
            warn!(
                "spectrum exceeds the clock range (max |λ| t = {:.4}); eigenvalues will alias",
                eig.max_abs_eigenvalue() * clock.t
            );
        }
        Ok(PreparedOperator {
            clock,
            evolution,
            row_evolution,
            kernel,
            scale,
            eigenvalues: eig.eigenvalues,
            aliased,
        })
    }

    pub fn clock(&self) -> &ClockParams {
        &self.clock
    }

    pub fn scale(&self) -> C64 {
        self.scale
    }

    pub fn kernel(&self) -> &SpectralKernel {
        &self.kernel
    }

    pub fn aliased(&self) -> bool {
        self.aliased
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// `U = exp(i A' t)` acting on column vectors.
    pub fn evolution(&self) -> &DenseMatrix {
        &self.evolution
    }

    /// `Uᵀ`, the operator handed to the row-vector tensor builders.
    pub fn row_evolution(&self) -> &DenseMatrix {
        &self.row_evolution
    }

    pub fn dim(&self) -> usize {
        self.evolution.rows()
    }

    /// Unscaled efficient contraction for right-hand side `b`.
    pub fn raw(&self, b: &[C64]) -> Result<Vec<C64>> {
        let w = build_w(b, &self.row_evolution, self.clock.m)?;
        contract_efficient(&w, &self.kernel)
    }

    /// Scaled approximation of `A'⁻¹ b`.
    pub fn apply(&self, b: &[C64]) -> Result<Vec<C64>> {
        Ok(self.raw(b)?.into_iter().map(|v| v * self.scale).collect())
    }

    /// Approximate inverse, one efficient solve per basis vector.
    pub fn invert_columns(&self) -> Result<DenseMatrix> {
        let n = self.dim();
        let mut inv = DenseMatrix::zeros(n, n);
        for j in 0..n {
            let mut e = vec![C64::new(0.0, 0.0); n];
            e[j] = C64::new(1.0, 0.0);
            for (i, v) in self.apply(&e)?.into_iter().enumerate() {
                inv[(i, j)] = v;
            }
        }
        Ok(inv)
    }

    /// Approximate inverse from the full network with the `b` node removed:
    /// `R_{ai} = Σ P_{abc} K_{bf} P⁻¹_{ifc}`, then `A'⁻¹ ≈ s Rᵀ`.
    /// Costs `O(N³ m + N² m²)`.
    pub fn invert_direct(&self) -> Result<DenseMatrix> {
        let (n, m) = (self.dim(), self.clock.m);
        let p = build_phase_kickback(&self.row_evolution, m, false)?;
        let p_inv = build_phase_kickback(&self.row_evolution, m, true)?;
        let k = self.kernel.matrix();
        let zero = C64::new(0.0, 0.0);
        // T[a][f][c] = Σ_b P[a, b, c] K[b, f]
        let mut t = Tensor3::zeros(n, m, n);
        for a in 0..n {
            for f in 0..m {
                for c in 0..n {
                    let s: C64 = (0..m).map(|b| p[(a, b, c)] * k[(b, f)]).sum();
                    t.set(a, f, c, s);
                }
            }
        }
        let mut r = DenseMatrix::zeros(n, n);
        for a in 0..n {
            for i in 0..n {
                let mut s = zero;
                for f in 0..m {
                    for c in 0..n {
                        s += t[(a, f, c)] * p_inv[(i, f, c)];
                    }
                }
                r[(a, i)] = s;
            }
        }
        Ok(r.transpose().scale(self.scale))
    }
}

/// Outcome of a tensor-network solve.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TnSolveReport {
    /// Solution of the original system.
    pub x: Vec<C64>,
    /// Unscaled contraction over the (possibly embedded) system.
    pub raw: Vec<C64>,
    pub scale: C64,
    pub residual_rel: f64,
    pub aliasing_flag: bool,
    pub upper_block_leak: f64,
    pub clock: ClockParams,
    /// `|scale| / (t / 2πm)`.
    pub scale_over_analytic: f64,
    /// `|scale| / (t / m²)`.
    pub scale_over_quoted: f64,
}

/// Full pipeline: embed, evolve, contract, calibrate, extract.
pub fn solve(p: &LinearProblem, clock: &ClockSpec) -> Result<TnSolveReport> {
    let h = hermitize(p);
    let op = PreparedOperator::new(&h.a_prime, clock)?;
    let raw = op.raw(&h.b_prime)?;
    let scale = op.scale();
    let y: Vec<C64> = raw.iter().map(|&v| v * scale).collect();
    let extracted = extract_solution(&y, &h)?;
    let residual_rel = relative_residual(&p.a, &extracted.x, &p.b)?;
    let clock = *op.clock();
    Ok(TnSolveReport {
        x: extracted.x,
        raw,
        scale,
        residual_rel,
        aliasing_flag: op.aliased(),
        upper_block_leak: extracted.upper_block_leak,
        scale_over_analytic: scale.norm() / analytic_scale(&clock),
        scale_over_quoted: scale.norm() / quoted_scale(&clock),
        clock,
    })
}

/// Approximate `A'⁻¹` via one solve per column.
pub fn invert_matrix(a_prime: &DenseMatrix, clock: &ClockSpec) -> Result<DenseMatrix> {
    PreparedOperator::new(a_prime, clock)?.invert_columns()
}

/// Approximate `A'⁻¹` by contracting the kickback tensors directly.
pub fn invert_matrix_direct(a_prime: &DenseMatrix, clock: &ClockSpec) -> Result<DenseMatrix> {
    PreparedOperator::new(a_prime, clock)?.invert_direct()
}
