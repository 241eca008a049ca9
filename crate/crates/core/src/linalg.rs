//! Dense complex linear algebra.
//!
//! Everything the solvers need and nothing more: products, a cyclic Jacobi
//! eigensolver for Hermitian matrices, `exp(i H t)` through that
//! eigendecomposition, LU with partial pivoting and conjugate gradient.

use std::ops::{Index, IndexMut};

use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Relative tolerance used when deciding whether a matrix is Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-12;

/// Off-diagonal tolerance (relative to the largest entry) used by the
/// solvers when they diagonalise internally.
pub const EIGEN_TOL: f64 = 1e-15;

/// Hard cap on Jacobi sweeps.
pub const MAX_JACOBI_SWEEPS: usize = 100;

/// Row-major complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix {
            rows,
            cols,
            data: vec![C64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    /// Builds a matrix from row-major entries, rejecting wrong lengths and
    /// non-finite values.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::shape(format!(
                "matrix dimensions must be positive, got {rows}x{cols}"
            )));
        }
        if data.len() != rows * cols {
            return Err(Error::shape(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        if let Some(pos) = data
            .iter()
            .position(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(Error::domain(format!(
                "non-finite entry at ({}, {})",
                pos / cols,
                pos % cols
            )));
        }
        Ok(DenseMatrix { rows, cols, data })
    }

    pub fn from_real(rows: usize, cols: usize, data: &[f64]) -> Result<Self> {
        Self::from_vec(rows, cols, data.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        DenseMatrix { rows, cols, data }
    }

    pub fn from_diagonal(diag: &[C64]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n, n);
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[C64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<C64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn diagonal(&self) -> Vec<C64> {
        (0..self.rows.min(self.cols))
            .map(|i| self[(i, i)])
            .collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn scale(&self, s: C64) -> Self {
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&z| z * s).collect(),
        }
    }

    pub fn sub(&self, other: &DenseMatrix) -> Result<Self> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::shape(format!(
                "cannot subtract {}x{} from {}x{}",
                other.rows, other.cols, self.rows, self.cols
            )));
        }
        Ok(DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a - b)
                .collect(),
        })
    }

    /// Largest entry magnitude.
    pub fn max_abs(&self) -> f64 {
        max_abs(&self.data)
    }

    pub fn trace(&self) -> C64 {
        self.diagonal().iter().sum()
    }

    /// Hermitian within `tol` relative to the largest entry.
    pub fn is_hermitian(&self, tol: f64) -> bool {
        if !self.is_square() {
            return false;
        }
        let bound = tol * self.max_abs();
        (0..self.rows)
            .all(|i| (i..self.cols).all(|j| (self[(i, j)] - self[(j, i)].conj()).norm() <= bound))
    }

    /// `‖U U† − I‖_max ≤ tol`.
    pub fn is_unitary(&self, tol: f64) -> bool {
        if !self.is_square() {
            return false;
        }
        let n = self.rows;
        for i in 0..n {
            for j in 0..n {
                let s: C64 = self
                    .row(i)
                    .iter()
                    .zip(self.row(j))
                    .map(|(a, b)| a * b.conj())
                    .sum();
                let target = if i == j { 1.0 } else { 0.0 };
                if (s - target).norm() > tol {
                    return false;
                }
            }
        }
        true
    }

    /// Column-vector product `A v`.
    pub fn mat_vec(&self, v: &[C64]) -> Result<Vec<C64>> {
        if v.len() != self.cols {
            return Err(Error::shape(format!(
                "vector of length {} does not match {} matrix columns",
                v.len(),
                self.cols
            )));
        }
        Ok((0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(a, x)| a * x).sum())
            .collect())
    }
}

impl Index<(usize, usize)> for DenseMatrix {
    type Output = C64;

    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for DenseMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Matrix product `a · b`.
pub fn matmul(a: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix> {
    if a.cols != b.rows {
        return Err(Error::shape(format!(
            "cannot multiply {}x{} by {}x{}",
            a.rows, a.cols, b.rows, b.cols
        )));
    }
    let mut out = DenseMatrix::zeros(a.rows, b.cols);
    for i in 0..a.rows {
        let out_row = &mut out.data[i * b.cols..(i + 1) * b.cols];
        for (k, &aik) in a.row(i).iter().enumerate() {
            if aik == C64::new(0.0, 0.0) {
                continue;
            }
            for (o, &bkj) in out_row.iter_mut().zip(b.row(k)) {
                *o += aik * bkj;
            }
        }
    }
    Ok(out)
}

/// Row vector times matrix: `out_k = Σ_i v_i a_{ik}`.
pub fn vec_mat(v: &[C64], a: &DenseMatrix) -> Result<Vec<C64>> {
    if v.len() != a.rows {
        return Err(Error::shape(format!(
            "row vector of length {} does not match {} matrix rows",
            v.len(),
            a.rows
        )));
    }
    let mut out = vec![C64::new(0.0, 0.0); a.cols];
    for (i, &vi) in v.iter().enumerate() {
        for (o, &aik) in out.iter_mut().zip(a.row(i)) {
            *o += vi * aik;
        }
    }
    Ok(out)
}

pub fn norm2(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn max_abs(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// `Σ conj(x_i) y_i`.
pub fn dot(x: &[C64], y: &[C64]) -> C64 {
    x.iter().zip(y).map(|(a, b)| a.conj() * b).sum()
}

/// Relative residual `‖A x − b‖₂ / ‖b‖₂` (absolute when `b = 0`).
pub fn relative_residual(a: &DenseMatrix, x: &[C64], b: &[C64]) -> Result<f64> {
    let ax = a.mat_vec(x)?;
    let r: Vec<C64> = ax.iter().zip(b).map(|(p, q)| p - q).collect();
    let nb = norm2(b);
    Ok(if nb > 0.0 { norm2(&r) / nb } else { norm2(&r) })
}

/// Spectral decomposition `H = V diag(λ) V†`.
#[derive(Clone, Debug)]
pub struct EigenDecomposition {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// Column `k` is the eigenvector for `eigenvalues[k]`.
    pub eigenvectors: DenseMatrix,
}

impl EigenDecomposition {
    /// Evaluates `V diag(f(λ)) V†`.
    pub fn apply_fn(&self, f: impl Fn(f64) -> C64) -> DenseMatrix {
        let v = &self.eigenvectors;
        let n = v.rows();
        let fl: Vec<C64> = self.eigenvalues.iter().map(|&l| f(l)).collect();
        DenseMatrix::from_fn(n, n, |i, j| {
            (0..n).map(|k| v[(i, k)] * fl[k] * v[(j, k)].conj()).sum()
        })
    }

    /// `exp(i H t)`.
    pub fn exp_i(&self, t: f64) -> DenseMatrix {
        self.apply_fn(|l| C64::from_polar(1.0, l * t))
    }

    pub fn max_abs_eigenvalue(&self) -> f64 {
        self.eigenvalues.iter().map(|l| l.abs()).fold(0.0, f64::max)
    }
}

fn max_off_diagonal(a: &DenseMatrix) -> f64 {
    let n = a.rows();
    let mut m = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                m = m.max(a[(i, j)].norm());
            }
        }
    }
    m
}

/// Cyclic Jacobi eigensolver for Hermitian matrices.
///
/// Sweeps over every `(p, q)` pair, annihilating `h_pq` with a unitary plane
/// rotation, until all off-diagonal magnitudes are at most `tol · ‖h‖_max`.
pub fn hermitian_eigen(h: &DenseMatrix, tol: f64) -> Result<EigenDecomposition> {
    if !h.is_square() {
        return Err(Error::shape(format!(
            "eigensolver needs a square matrix, got {}x{}",
            h.rows, h.cols
        )));
    }
    if !(tol > 0.0) {
        return Err(Error::domain("eigensolver tolerance must be positive"));
    }
    if !h.is_hermitian(HERMITIAN_TOL) {
        return Err(Error::domain("matrix is not Hermitian"));
    }
    let n = h.rows();
    let scale = h.max_abs();
    let mut a = h.clone();
    let mut v = DenseMatrix::identity(n);
    for i in 0..n {
        a[(i, i)] = C64::new(a[(i, i)].re, 0.0);
    }

    let threshold = tol * scale;
    let mut sweeps = 0;
    while max_off_diagonal(&a) > threshold {
        if sweeps == MAX_JACOBI_SWEEPS {
            return Err(Error::Convergence {
                sweeps,
                off_diagonal: max_off_diagonal(&a),
            });
        }
        for p in 0..n {
            for q in p + 1..n {
                rotate(&mut a, &mut v, p, q);
            }
        }
        sweeps += 1;
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.total_cmp(&a[(j, j)].re));
    let eigenvalues = order.iter().map(|&i| a[(i, i)].re).collect();
    let eigenvectors = DenseMatrix::from_fn(n, n, |i, k| v[(i, order[k])]);
    Ok(EigenDecomposition {
        eigenvalues,
        eigenvectors,
    })
}

/// One Jacobi rotation zeroing `a[p][q]`; accumulates into `v`.
fn rotate(a: &mut DenseMatrix, v: &mut DenseMatrix, p: usize, q: usize) {
    let z = a[(p, q)];
    let az = z.norm();
    if az == 0.0 {
        return;
    }
    let phase = z / az;
    let app = a[(p, p)].re;
    let aqq = a[(q, q)].re;
    // tan of the rotation angle, smaller root of t² + 2τt − 1 = 0
    let tau = (aqq - app) / (2.0 * az);
    let t = if tau.abs() > 1e150 {
        0.5 / tau
    } else {
        let sign = if tau >= 0.0 { 1.0 } else { -1.0 };
        sign / (tau.abs() + (1.0 + tau * tau).sqrt())
    };
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;
    // G = diag(1, e^{-iφ}) · [[c, s], [-s, c]]
    let g00 = C64::new(c, 0.0);
    let g01 = C64::new(s, 0.0);
    let g10 = -s * phase.conj();
    let g11 = c * phase.conj();

    let n = a.rows();
    for k in 0..n {
        let (akp, akq) = (a[(k, p)], a[(k, q)]);
        a[(k, p)] = akp * g00 + akq * g10;
        a[(k, q)] = akp * g01 + akq * g11;
    }
    for k in 0..n {
        let (apk, aqk) = (a[(p, k)], a[(q, k)]);
        a[(p, k)] = g00.conj() * apk + g10.conj() * aqk;
        a[(q, k)] = g01.conj() * apk + g11.conj() * aqk;
    }
    a[(p, q)] = C64::new(0.0, 0.0);
    a[(q, p)] = C64::new(0.0, 0.0);
    a[(p, p)] = C64::new(a[(p, p)].re, 0.0);
    a[(q, q)] = C64::new(a[(q, q)].re, 0.0);

    for k in 0..n {
        let (vkp, vkq) = (v[(k, p)], v[(k, q)]);
        v[(k, p)] = vkp * g00 + vkq * g10;
        v[(k, q)] = vkp * g01 + vkq * g11;
    }
}

/// `exp(i h t)` for Hermitian `h`.
pub fn unitary_exp(h: &DenseMatrix, t: f64) -> Result<DenseMatrix> {
    Ok(hermitian_eigen(h, EIGEN_TOL)?.exp_i(t))
}

/// Solves `a x = b` by LU factorisation with partial pivoting.
pub fn lu_solve(a: &DenseMatrix, b: &[C64]) -> Result<Vec<C64>> {
    if !a.is_square() {
        return Err(Error::shape(format!(
            "LU needs a square matrix, got {}x{}",
            a.rows, a.cols
        )));
    }
    let n = a.rows();
    if b.len() != n {
        return Err(Error::shape(format!(
            "right-hand side has length {}, expected {n}",
            b.len()
        )));
    }
    let mut lu = a.clone();
    let mut x = b.to_vec();
    let tiny = f64::EPSILON * a.max_abs() * n as f64;

    for col in 0..n {
        let (pivot_row, pivot_mag) =
            (col..n)
                .map(|r| (r, lu[(r, col)].norm()))
                .fold(
                    (col, -1.0),
                    |best, cur| if cur.1 > best.1 { cur } else { best },
                );
        if pivot_mag <= tiny {
            return Err(Error::Singular { column: col });
        }
        if pivot_row != col {
            for j in 0..n {
                let tmp = lu[(col, j)];
                lu[(col, j)] = lu[(pivot_row, j)];
                lu[(pivot_row, j)] = tmp;
            }
            x.swap(col, pivot_row);
        }
        let pivot = lu[(col, col)];
        for r in col + 1..n {
            let factor = lu[(r, col)] / pivot;
            if factor == C64::new(0.0, 0.0) {
                continue;
            }
            lu[(r, col)] = factor;
            for j in col + 1..n {
                let u = lu[(col, j)];
                lu[(r, j)] -= factor * u;
            }
            let xc = x[col];
            x[r] -= factor * xc;
        }
    }
    for i in (0..n).rev() {
        let mut acc = x[i];
        for j in i + 1..n {
            acc -= lu[(i, j)] * x[j];
        }
        x[i] = acc / lu[(i, i)];
    }
    Ok(x)
}

/// Result of a conjugate-gradient run.
#[derive(Clone, Debug)]
pub struct CgOutcome {
    pub x: Vec<C64>,
    pub iterations: usize,
    pub residual_rel: f64,
    pub converged: bool,
}

/// Conjugate gradient for Hermitian positive definite `a`.
///
/// Stops once `‖a x − b‖₂ ≤ tol ‖b‖₂` or after `max_iter` iterations; the
/// outcome says which. A non-positive curvature `p† A p` means `a` is not
/// positive definite.
pub fn conjugate_gradient(
    a: &DenseMatrix,
    b: &[C64],
    tol: f64,
    max_iter: usize,
) -> Result<CgOutcome> {
    if !a.is_square() || a.rows() != b.len() {
        return Err(Error::shape(format!(
            "CG needs a square matrix matching the right-hand side, got {}x{} and {}",
            a.rows,
            a.cols,
            b.len()
        )));
    }
    if !(tol > 0.0) {
        return Err(Error::domain("CG tolerance must be positive"));
    }
    if !a.is_hermitian(HERMITIAN_TOL) {
        return Err(Error::domain("CG matrix is not Hermitian"));
    }
    let n = b.len();
    let bnorm = norm2(b);
    let mut x = vec![C64::new(0.0, 0.0); n];
    if bnorm == 0.0 {
        return Ok(CgOutcome {
            x,
            iterations: 0,
            residual_rel: 0.0,
            converged: true,
        });
    }
    let mut r = b.to_vec();
    let mut p = r.clone();
    let mut rs = dot(&r, &r).re;
    let mut iterations = 0;
    let mut converged = false;

    while iterations < max_iter {
        let ap = a.mat_vec(&p)?;
        let curvature = dot(&p, &ap).re;
        if curvature <= 0.0 {
            return Err(Error::domain(format!(
                "matrix is not positive definite (curvature {curvature:.3e} at iteration {iterations})"
            )));
        }
        let alpha = rs / curvature;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        iterations += 1;
        let rs_new = dot(&r, &r).re;
        if rs_new.sqrt() <= tol * bnorm {
            converged = true;
            break;
        }
        let beta = rs_new / rs;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
        rs = rs_new;
    }
    let residual_rel = relative_residual(a, &x, b)?;
    Ok(CgOutcome {
        x,
        iterations,
        residual_rel,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn random_matrix(rng: &mut ChaCha8Rng, n: usize, m: usize) -> DenseMatrix {
        DenseMatrix::from_fn(n, m, |_, _| {
            c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        })
    }

    fn random_hermitian(rng: &mut ChaCha8Rng, n: usize) -> DenseMatrix {
        let a = random_matrix(rng, n, n);
        let mut h = DenseMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                h[(i, j)] = (a[(i, j)] + a[(j, i)].conj()) * 0.5;
            }
        }
        h
    }

    fn max_diff(a: &DenseMatrix, b: &DenseMatrix) -> f64 {
        a.sub(b).unwrap().max_abs()
    }

    #[test]
    fn matmul_identity_and_involution() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let m = random_matrix(&mut rng, 2, 2);
        assert_eq!(matmul(&DenseMatrix::identity(2), &m).unwrap(), m);
        let x = DenseMatrix::from_real(2, 2, &[0.0, 1.0, 1.0, 0.0]).unwrap();
        assert_eq!(matmul(&x, &x).unwrap(), DenseMatrix::identity(2));
    }

    #[test]
    fn matmul_matches_triple_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = random_matrix(&mut rng, 3, 3);
        let b = random_matrix(&mut rng, 3, 3);
        let p = matmul(&a, &b).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let mut s = c(0.0, 0.0);
                for k in 0..3 {
                    s += a[(i, k)] * b[(k, j)];
                }
                assert!((p[(i, j)] - s).norm() < 1e-13);
            }
        }
        assert!(matches!(
            matmul(&a, &random_matrix(&mut rng, 2, 3)),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn vec_mat_cases() {
        let v = vec![c(1.0, 2.0), c(-0.5, 0.0)];
        assert_eq!(vec_mat(&v, &DenseMatrix::identity(2)).unwrap(), v);
        let x = DenseMatrix::from_real(2, 2, &[0.0, 1.0, 1.0, 0.0]).unwrap();
        assert_eq!(
            vec_mat(&[c(1.0, 0.0), c(0.0, 0.0)], &x).unwrap(),
            vec![c(0.0, 0.0), c(1.0, 0.0)]
        );

        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = random_matrix(&mut rng, 4, 3);
        let v: Vec<C64> = (0..4).map(|_| c(rng.gen(), rng.gen())).collect();
        let got = vec_mat(&v, &a).unwrap();
        let oracle = a.transpose().mat_vec(&v).unwrap();
        for (g, o) in got.iter().zip(&oracle) {
            assert!((g - o).norm() < 1e-13);
        }
        assert!(vec_mat(&v[..3], &a).is_err());
    }

    #[test]
    fn eigen_simple_spectra() {
        let d =
            DenseMatrix::from_real(3, 3, &[3.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 2.0]).unwrap();
        assert_eq!(
            hermitian_eigen(&d, 1e-14).unwrap().eigenvalues,
            vec![1.0, 2.0, 3.0]
        );
        let x = DenseMatrix::from_real(2, 2, &[0.0, 1.0, 1.0, 0.0]).unwrap();
        let e = hermitian_eigen(&x, 1e-14).unwrap();
        assert!((e.eigenvalues[0] + 1.0).abs() < 1e-15);
        assert!((e.eigenvalues[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn eigen_random_hermitian_diagonalises() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let h = random_hermitian(&mut rng, 6);
        let e = hermitian_eigen(&h, 1e-14).unwrap();
        let v = &e.eigenvectors;
        let d = matmul(&matmul(&v.adjoint(), &h).unwrap(), v).unwrap();
        for i in 0..6 {
            for j in 0..6 {
                if i != j {
                    assert!(d[(i, j)].norm() < 1e-10);
                } else {
                    assert!((d[(i, i)].re - e.eigenvalues[i]).abs() < 1e-10);
                }
            }
        }
        assert!(max_diff(&matmul(&v.adjoint(), v).unwrap(), &DenseMatrix::identity(6)) < 1e-12);
        assert!(e.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn eigen_rejects_bad_input() {
        let a = DenseMatrix::from_real(2, 2, &[1.0, 2.0, 0.0, 1.0]).unwrap();
        assert!(matches!(hermitian_eigen(&a, 1e-14), Err(Error::Domain(_))));
        assert!(matches!(
            hermitian_eigen(&DenseMatrix::identity(2), 0.0),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn unitary_exp_trivial_cases() {
        let u = unitary_exp(&DenseMatrix::zeros(3, 3), 1.7).unwrap();
        assert_eq!(u, DenseMatrix::identity(3));
        let u = unitary_exp(
            &DenseMatrix::from_real(1, 1, &[std::f64::consts::PI]).unwrap(),
            1.0,
        )
        .unwrap();
        assert!((u[(0, 0)] - c(-1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn unitary_exp_matches_taylor_series() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let h = random_hermitian(&mut rng, 4);
        let t = 0.7;
        // Σ (i h t)^k / k!, 50 terms
        let iht = h.scale(c(0.0, t));
        let mut term = DenseMatrix::identity(4);
        let mut sum = DenseMatrix::identity(4);
        for k in 1..50 {
            term = matmul(&term, &iht).unwrap().scale(c(1.0 / k as f64, 0.0));
            sum = DenseMatrix::from_fn(4, 4, |i, j| sum[(i, j)] + term[(i, j)]);
        }
        let u = unitary_exp(&h, t).unwrap();
        assert!(max_diff(&u, &sum) < 1e-10);
        assert!(u.is_unitary(1e-11));
    }

    #[test]
    fn lu_simple_systems() {
        let d = DenseMatrix::from_real(2, 2, &[2.0, 0.0, 0.0, 4.0]).unwrap();
        let x = lu_solve(&d, &[c(2.0, 0.0), c(4.0, 0.0)]).unwrap();
        assert_eq!(x, vec![c(1.0, 0.0), c(1.0, 0.0)]);
        let b = vec![c(1.0, -2.0), c(0.5, 3.0), c(-1.0, 0.0)];
        assert_eq!(lu_solve(&DenseMatrix::identity(3), &b).unwrap(), b);
    }

    #[test]
    fn lu_random_residual() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let mut a = random_matrix(&mut rng, 8, 8);
        for i in 0..8 {
            a[(i, i)] += c(8.0, 0.0);
        }
        let b: Vec<C64> = (0..8).map(|_| c(rng.gen(), rng.gen())).collect();
        let x = lu_solve(&a, &b).unwrap();
        assert!(relative_residual(&a, &x, &b).unwrap() <= 1e-10);
    }

    #[test]
    fn lu_detects_singularity() {
        let a = DenseMatrix::from_real(2, 2, &[1.0, 2.0, 2.0, 4.0]).unwrap();
        assert!(matches!(
            lu_solve(&a, &[c(1.0, 0.0), c(1.0, 0.0)]),
            Err(Error::Singular { .. })
        ));
    }

    #[test]
    fn cg_identity_and_diagonal() {
        let b = vec![c(1.0, 0.5), c(-2.0, 0.0), c(0.0, 3.0)];
        let out = conjugate_gradient(&DenseMatrix::identity(3), &b, 1e-12, 10).unwrap();
        assert_eq!(out.iterations, 1);
        assert!(out.converged);
        for (x, y) in out.x.iter().zip(&b) {
            assert!((x - y).norm() < 1e-15);
        }
        let d =
            DenseMatrix::from_real(3, 3, &[1.0, 0.0, 0.0, 0.0, 2.0, 0.0, 0.0, 0.0, 3.0]).unwrap();
        let out =
            conjugate_gradient(&d, &[c(1.0, 0.0), c(2.0, 0.0), c(3.0, 0.0)], 1e-12, 10).unwrap();
        for x in &out.x {
            assert!((x - c(1.0, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn cg_matches_lu_on_shifted_laplacian() {
        // 4x4 grid Laplacian, negated and shifted to be positive definite
        let n = 4;
        let mut a = DenseMatrix::zeros(16, 16);
        for j in 0..n {
            for k in 0..n {
                let r = j * n + k;
                a[(r, r)] = c(4.5, 0.0);
                if j > 0 {
                    a[(r, r - n)] = c(-1.0, 0.0);
                }
                if j + 1 < n {
                    a[(r, r + n)] = c(-1.0, 0.0);
                }
                if k > 0 {
                    a[(r, r - 1)] = c(-1.0, 0.0);
                }
                if k + 1 < n {
                    a[(r, r + 1)] = c(-1.0, 0.0);
                }
            }
        }
        let b: Vec<C64> = (0..16).map(|i| c((i as f64).sin(), 0.0)).collect();
        let cg = conjugate_gradient(&a, &b, 1e-14, 200).unwrap();
        let lu = lu_solve(&a, &b).unwrap();
        for (x, y) in cg.x.iter().zip(&lu) {
            assert!((x - y).norm() < 1e-8);
        }
    }

    #[test]
    fn cg_rejects_indefinite() {
        let a = DenseMatrix::from_real(2, 2, &[1.0, 0.0, 0.0, -1.0]).unwrap();
        let r = conjugate_gradient(&a, &[c(1.0, 0.0), c(1.0, 0.0)], 1e-12, 10);
        assert!(matches!(r, Err(Error::Domain(_))));
    }

    #[test]
    fn from_vec_validates() {
        assert!(DenseMatrix::from_vec(2, 2, vec![c(0.0, 0.0); 3]).is_err());
        assert!(DenseMatrix::from_vec(1, 1, vec![c(f64::NAN, 0.0)]).is_err());
        assert!(DenseMatrix::from_vec(0, 1, vec![]).is_err());
    }
}
