//! Exact statevector simulation of the qudit HHL circuit.
//!
//! Registers: a system qudit of dimension `N`, a single clock qudit of
//! dimension `m` and one ancilla qubit. Phase estimation is a Fourier
//! transform on the clock, clock-controlled powers of `U = exp(i A' t)` on the
//! system, then the inverse transform. The ancilla is rotated by `1/c̃` for
//! clock value `c`, post-selected on `|1⟩`, and the estimation is undone.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, matmul, max_abs, norm2, DenseMatrix, C64};
use crate::problems::{extract_solution, hermitize, LinearProblem};
use crate::tn::{signed_bin, ClockParams, ClockSpec, PreparedOperator, DEFAULT_POS_FRACTION};

/// Amplitudes over system × clock × ancilla, index `(i m + c) 2 + a`.
#[derive(Clone, Debug, PartialEq)]
pub struct QuditState {
    n_sys: usize,
    n_clock: usize,
    amplitudes: Vec<C64>,
}

impl QuditState {
    pub fn dims(&self) -> (usize, usize, usize) {
        (self.n_sys, self.n_clock, 2)
    }

    fn index(&self, i: usize, c: usize, a: usize) -> usize {
        (i * self.n_clock + c) * 2 + a
    }

    pub fn amplitude(&self, i: usize, c: usize, a: usize) -> C64 {
        self.amplitudes[self.index(i, c, a)]
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        norm2(&self.amplitudes)
    }

    /// Probability mass on each clock value.
    pub fn clock_distribution(&self) -> Vec<f64> {
        let mut dist = vec![0.0; self.n_clock];
        for i in 0..self.n_sys {
            for (c, d) in dist.iter_mut().enumerate() {
                for a in 0..2 {
                    *d += self.amplitude(i, c, a).norm_sqr();
                }
            }
        }
        dist
    }

    /// System amplitudes with the clock fixed to `c` and the ancilla to `a`.
    pub fn system_slice(&self, c: usize, a: usize) -> Vec<C64> {
        (0..self.n_sys).map(|i| self.amplitude(i, c, a)).collect()
    }

    fn map_clock(&self, mut f: impl FnMut(&[C64], &mut [C64])) -> QuditState {
        let m = self.n_clock;
        let mut out = self.clone();
        let mut src = vec![C64::new(0.0, 0.0); m];
        let mut dst = vec![C64::new(0.0, 0.0); m];
        for i in 0..self.n_sys {
            for a in 0..2 {
                for (c, s) in src.iter_mut().enumerate() {
                    *s = self.amplitude(i, c, a);
                }
                f(&src, &mut dst);
                for (c, &d) in dst.iter().enumerate() {
                    let idx = out.index(i, c, a);
                    out.amplitudes[idx] = d;
                }
            }
        }
        out
    }
}

/// `b/‖b‖` on the system, clock and ancilla in `|0⟩`.
pub fn init_state(b: &[C64], m: usize) -> Result<QuditState> {
    if m < 2 {
        return Err(Error::domain(format!(
            "clock dimension must be at least 2, got {m}"
        )));
    }
    let nb = norm2(b);
    if nb == 0.0 || b.is_empty() {
        return Err(Error::domain("cannot encode a zero right-hand side"));
    }
    let mut s = QuditState {
        n_sys: b.len(),
        n_clock: m,
        amplitudes: vec![C64::new(0.0, 0.0); b.len() * m * 2],
    };
    for (i, &bi) in b.iter().enumerate() {
        let idx = s.index(i, 0, 0);
        s.amplitudes[idx] = bi / nb;
    }
    Ok(s)
}

/// Normalised `m`-point Fourier transform on the clock,
/// `e^{±2πi c c'/m} / √m`.
pub fn apply_clock_fourier(s: &QuditState, inverse: bool) -> QuditState {
    let m = s.n_clock;
    let sign = if inverse { -1.0 } else { 1.0 };
    let norm = 1.0 / (m as f64).sqrt();
    let table: Vec<C64> = (0..m)
        .map(|q| {
            C64::from_polar(
                norm,
                sign * 2.0 * std::f64::consts::PI * q as f64 / m as f64,
            )
        })
        .collect();
    s.map_clock(|src, dst| {
        for (cp, d) in dst.iter_mut().enumerate() {
            *d = src
                .iter()
                .enumerate()
                .map(|(c, &v)| table[(c * cp) % m] * v)
                .sum();
        }
    })
}

/// Applies `U^c` (or `U^{−c}`) to the system for every clock value `c`.
pub fn apply_controlled_powers(
    s: &QuditState,
    u: &DenseMatrix,
    inverse: bool,
) -> Result<QuditState> {
    if !u.is_square() || u.rows() != s.n_sys {
        return Err(Error::shape(format!(
            "{}x{} operator does not act on a system of dimension {}",
            u.rows(),
            u.cols(),
            s.n_sys
        )));
    }
    if !u.is_unitary(1e-10) {
        return Err(Error::domain("controlled operator is not unitary"));
    }
    let step = if inverse { u.adjoint() } else { u.clone() };
    let mut out = s.clone();
    let mut power = DenseMatrix::identity(s.n_sys);
    for c in 0..s.n_clock {
        if c > 0 {
            power = matmul(&power, &step)?;
        }
        for a in 0..2 {
            let v = power.mat_vec(&s.system_slice(c, a))?;
            for (i, vi) in v.into_iter().enumerate() {
                let idx = out.index(i, c, a);
                out.amplitudes[idx] = vi;
            }
        }
    }
    Ok(out)
}

pub fn apply_conditional_rotation(s: &QuditState) -> Result<QuditState> {
    apply_conditional_rotation_split(s, DEFAULT_POS_FRACTION)
}

/// Rotates the ancilla by clock value: `|0⟩ → √(1 − 1/c̃²)|0⟩ + (1/c̃)|1⟩`,
/// with `c̃` the signed bin. The zero bin is left alone.
pub fn apply_conditional_rotation_split(s: &QuditState, pos_fraction: f64) -> Result<QuditState> {
    if !(0.0..=1.0).contains(&pos_fraction) {
        return Err(Error::domain(format!(
            "positive-bin fraction must lie in [0, 1], got {pos_fraction}"
        )));
    }
    let m = s.n_clock;
    let npos = ((m as f64 * pos_fraction).floor() as usize).min(m - 1);
    let mut out = s.clone();
    for i in 0..s.n_sys {
        for c in 0..m {
            if s.amplitude(i, c, 1).norm() > 1e-12 {
                return Err(Error::State(format!(
                    "ancilla is not in |0> (system {i}, clock {c})"
                )));
            }
            let ct = signed_bin(c, m, npos);
            if ct == 0 {
                continue;
            }
            let inv = 1.0 / ct as f64;
            let amp = s.amplitude(i, c, 0);
            let (i0, i1) = (out.index(i, c, 0), out.index(i, c, 1));
            out.amplitudes[i0] = amp * (1.0 - inv * inv).sqrt();
            out.amplitudes[i1] = amp * inv;
        }
    }
    Ok(out)
}

/// Keeps the ancilla-`|1⟩` component, unnormalised, with its probability.
pub fn postselect_ancilla_one(s: &QuditState) -> Result<(QuditState, f64)> {
    let mut out = s.clone();
    for (k, v) in out.amplitudes.iter_mut().enumerate() {
        if k % 2 == 0 {
            *v = C64::new(0.0, 0.0);
        }
    }
    let p = out.norm().powi(2);
    if p.sqrt() < 1e-300 {
        return Err(Error::DegeneratePostselection(p.sqrt()));
    }
    Ok((out, p))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CircuitReport {
    /// Clock-0, ancilla-1 system amplitudes restricted to the original system.
    pub solution_amplitudes: Vec<C64>,
    pub success_probability: f64,
    /// Least-squares ratio of the circuit output to the tensor-network raw output.
    pub proportionality_to_tn: C64,
    /// `max |circuit − ratio · tn|` over the full system register.
    pub max_ratio_deviation: f64,
    /// `‖circuit output‖_∞` over the full system register.
    pub output_inf_norm: f64,
    /// Share of the post-selected norm left in the clock-0 sector.
    pub clock_zero_fraction: f64,
    pub clock: ClockParams,
}

/// Runs the whole circuit and compares it with the tensor-network contraction
/// for the same clock.
pub fn simulate_full(p: &LinearProblem, clock: &ClockSpec) -> Result<CircuitReport> {
    let h = hermitize(p);
    let op = PreparedOperator::new(&h.a_prime, clock)?;
    let clock = *op.clock();
    let u = op.evolution();

    let s = init_state(&h.b_prime, clock.m)?;
    let s = apply_clock_fourier(&s, false);
    let s = apply_controlled_powers(&s, u, false)?;
    let s = apply_clock_fourier(&s, true);
    let s = apply_conditional_rotation_split(&s, clock.pos_fraction)?;
    let (s, success_probability) = postselect_ancilla_one(&s)?;
    let s = apply_clock_fourier(&s, false);
    let s = apply_controlled_powers(&s, u, true)?;
    let s = apply_clock_fourier(&s, true);

    let output = s.system_slice(0, 1);
    let clock_zero_fraction = norm2(&output).powi(2) / success_probability;

    let raw = op.raw(&h.b_prime)?;
    let denom = dot(&raw, &raw).re;
    let ratio = if denom > 0.0 {
        dot(&raw, &output) / denom
    } else {
        C64::new(0.0, 0.0)
    };
    let max_ratio_deviation = output
        .iter()
        .zip(&raw)
        .map(|(o, r)| (o - ratio * r).norm())
        .fold(0.0, f64::max);

    Ok(CircuitReport {
        solution_amplitudes: extract_solution(&output, &h)?.x,
        success_probability,
        proportionality_to_tn: ratio,
        max_ratio_deviation,
        output_inf_norm: max_abs(&output),
        clock_zero_fraction,
        clock,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::unitary_exp;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn clock_basis(n: usize, m: usize, sys: &[C64], clock: usize) -> QuditState {
        let mut s = QuditState {
            n_sys: n,
            n_clock: m,
            amplitudes: vec![c(0.0, 0.0); n * m * 2],
        };
        for (i, &v) in sys.iter().enumerate() {
            let idx = s.index(i, clock, 0);
            s.amplitudes[idx] = v;
        }
        s
    }

    #[test]
    fn init_normalises() {
        let s = init_state(&[c(1.0, 0.0), c(0.0, 0.0)], 2).unwrap();
        assert_eq!(s.amplitude(0, 0, 0), c(1.0, 0.0));
        let s = init_state(&[c(3.0, 0.0), c(4.0, 0.0)], 4).unwrap();
        assert!((s.amplitude(0, 0, 0) - c(0.6, 0.0)).norm() < 1e-15);
        assert!((s.amplitude(1, 0, 0) - c(0.8, 0.0)).norm() < 1e-15);
        assert!((s.norm() - 1.0).abs() < 1e-14);
        assert!(init_state(&[c(0.0, 0.0)], 4).is_err());
    }

    #[test]
    fn fourier_on_clock() {
        let m = 8;
        let s = apply_clock_fourier(&clock_basis(1, m, &[c(1.0, 0.0)], 0), false);
        for cc in 0..m {
            assert!((s.amplitude(0, cc, 0) - c(1.0 / (m as f64).sqrt(), 0.0)).norm() < 1e-15);
        }
        let back = apply_clock_fourier(&s, true);
        assert!((back.amplitude(0, 0, 0) - c(1.0, 0.0)).norm() < 1e-12);

        let s = apply_clock_fourier(&clock_basis(1, 2, &[c(1.0, 0.0)], 1), false);
        let r = 1.0 / 2f64.sqrt();
        assert!((s.amplitude(0, 0, 0) - c(r, 0.0)).norm() < 1e-15);
        assert!((s.amplitude(0, 1, 0) - c(-r, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn controlled_powers_kick_back_phase() {
        let theta = 0.3;
        let u = DenseMatrix::from_vec(1, 1, vec![C64::from_polar(1.0, theta)]).unwrap();
        let m = 6;
        let s = apply_clock_fourier(&clock_basis(1, m, &[c(1.0, 0.0)], 0), false);
        let k = apply_controlled_powers(&s, &u, false).unwrap();
        for cc in 0..m {
            let expected = C64::from_polar(1.0 / (m as f64).sqrt(), theta * cc as f64);
            assert!((k.amplitude(0, cc, 0) - expected).norm() < 1e-14);
        }
        // clock 0 sector untouched
        let h = DenseMatrix::from_real(2, 2, &[0.2, 0.5, 0.5, -0.1]).unwrap();
        let u = unitary_exp(&h, 1.1).unwrap();
        let s = clock_basis(2, 4, &[c(0.6, 0.0), c(0.0, 0.8)], 0);
        assert_eq!(
            apply_controlled_powers(&s, &u, false)
                .unwrap()
                .system_slice(0, 0),
            s.system_slice(0, 0)
        );
        let s = apply_clock_fourier(&s, false);
        let round =
            apply_controlled_powers(&apply_controlled_powers(&s, &u, false).unwrap(), &u, true)
                .unwrap();
        let d = round
            .amplitudes()
            .iter()
            .zip(s.amplitudes())
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max);
        assert!(d < 1e-12);
    }

    #[test]
    fn rotation_amplitudes() {
        let m = 16;
        let s = apply_conditional_rotation(&clock_basis(1, m, &[c(1.0, 0.0)], 1)).unwrap();
        assert!((s.amplitude(0, 1, 1) - c(1.0, 0.0)).norm() < 1e-15);
        assert!(s.amplitude(0, 1, 0).norm() < 1e-15);
        let s = apply_conditional_rotation(&clock_basis(1, m, &[c(1.0, 0.0)], m - 1)).unwrap();
        assert!((s.amplitude(0, m - 1, 1) - c(-1.0, 0.0)).norm() < 1e-15);
        let s = apply_conditional_rotation(&clock_basis(1, m, &[c(1.0, 0.0)], 4)).unwrap();
        assert!((s.amplitude(0, 4, 1) - c(0.25, 0.0)).norm() < 1e-15);
        assert!((s.amplitude(0, 4, 0) - c(15f64.sqrt() / 4.0, 0.0)).norm() < 1e-15);
        let s0 = clock_basis(1, m, &[c(1.0, 0.0)], 0);
        assert_eq!(apply_conditional_rotation(&s0).unwrap(), s0);
        // precondition: ancilla must start in |0>
        let mut bad = clock_basis(1, m, &[c(1.0, 0.0)], 0);
        bad.amplitudes[1] = c(0.5, 0.0);
        assert!(matches!(
            apply_conditional_rotation(&bad),
            Err(Error::State(_))
        ));
    }

    #[test]
    fn postselection() {
        let m = 4;
        let s = apply_conditional_rotation(&clock_basis(1, m, &[c(1.0, 0.0)], 1)).unwrap();
        let (ps, p) = postselect_ancilla_one(&s).unwrap();
        assert!((p - 1.0).abs() < 1e-15);
        assert_eq!(ps, s);
        let s0 = clock_basis(1, m, &[c(1.0, 0.0)], 0);
        assert!(matches!(
            postselect_ancilla_one(&s0),
            Err(Error::DegeneratePostselection(_))
        ));
        let mut mixed = clock_basis(2, m, &[c(0.6, 0.0), c(0.0, 0.0)], 2);
        mixed.amplitudes[3] = c(0.0, 0.8);
        let (_, p) = postselect_ancilla_one(&mixed).unwrap();
        assert!((p - 0.64).abs() < 1e-14);
    }

    #[test]
    fn single_eigenvalue_success_probability() {
        let (m, t) = (16, 1.0);
        let bin = 4.0;
        let lambda = 2.0 * std::f64::consts::PI * bin / (t * m as f64);
        let p = LinearProblem::new(
            DenseMatrix::from_real(1, 1, &[lambda]).unwrap(),
            vec![c(1.0, 0.0)],
            "scalar",
        )
        .unwrap();
        let rep = simulate_full(&p, &ClockSpec::fixed(m, t)).unwrap();
        assert!((rep.success_probability - 1.0 / (bin * bin)).abs() < 1e-10);
        assert!(rep.max_ratio_deviation <= 1e-9 * rep.output_inf_norm);
        assert!((rep.clock_zero_fraction - 1.0).abs() < 1e-10);
    }
}
