use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tnhhl::bench::{grid_aligned_eigenvalues, random_hermitian_problem};
use tnhhl::circuit::{
    apply_clock_fourier, apply_conditional_rotation, apply_controlled_powers, init_state,
    postselect_ancilla_one, simulate_full,
};
use tnhhl::linalg::unitary_exp;
use tnhhl::problems::LinearProblem;
use tnhhl::tn::ClockSpec;
use tnhhl::{DenseMatrix, C64};

fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<C64> {
    (0..n)
        .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect()
}

#[test]
fn unitary_stages_preserve_norm() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let h = DenseMatrix::from_fn(3, 3, |i, j| {
        if i == j {
            C64::new(i as f64 * 0.4 - 0.3, 0.0)
        } else {
            C64::new(0.1, 0.05 * (i as f64 - j as f64))
        }
    });
    let u = unitary_exp(&h, 0.9).unwrap();
    let s = init_state(&random_vec(&mut rng, 3), 8).unwrap();
    let s = apply_clock_fourier(&s, false);
    assert!((s.norm() - 1.0).abs() < 1e-12);
    let s = apply_controlled_powers(&s, &u, false).unwrap();
    assert!((s.norm() - 1.0).abs() < 1e-12);
    let s = apply_clock_fourier(&s, true);
    assert!((s.norm() - 1.0).abs() < 1e-12);
    let s = apply_conditional_rotation(&s).unwrap();
    assert!((s.norm() - 1.0).abs() < 1e-12);
    let (_, p) = postselect_ancilla_one(&s).unwrap();
    assert!(p > 0.0 && p <= 1.0);
}

#[test]
fn phase_estimation_lands_on_aligned_bins() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let (n, m, t) = (4, 32, 1.0);
    let eigs = grid_aligned_eigenvalues(&mut rng, n, m, t, 2).unwrap();
    let p = random_hermitian_problem(&mut rng, &eigs, "aligned").unwrap();
    let u = unitary_exp(&p.a, t).unwrap();
    let s = init_state(&p.b, m).unwrap();
    let s = apply_clock_fourier(
        &apply_controlled_powers(&apply_clock_fourier(&s, false), &u, false).unwrap(),
        true,
    );
    let bins: Vec<usize> = eigs
        .iter()
        .map(|l| {
            ((l * t * m as f64 / (2.0 * std::f64::consts::PI)).round() as i64).rem_euclid(m as i64)
                as usize
        })
        .collect();
    for (c, w) in s.clock_distribution().into_iter().enumerate() {
        if !bins.contains(&c) {
            assert!(w < 1e-24, "clock value {c} carries {w}");
        }
    }
}

#[test]
fn uncompute_returns_clock_to_zero_on_aligned_spectra() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for n in [1, 2, 4] {
        let m = 16;
        let eigs = grid_aligned_eigenvalues(&mut rng, n, m, 1.0, n / 2).unwrap();
        let p = random_hermitian_problem(&mut rng, &eigs, "aligned").unwrap();
        let rep = simulate_full(&p, &ClockSpec::fixed(m, 1.0)).unwrap();
        assert!(
            rep.clock_zero_fraction >= 1.0 - 1e-10,
            "n = {n}: {}",
            rep.clock_zero_fraction
        );
        assert!(rep.max_ratio_deviation <= 1e-9 * rep.output_inf_norm);
    }
}

#[test]
fn off_grid_output_is_proportional_to_tn() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for m in [5, 8, 13, 16] {
        let a = DenseMatrix::from_fn(3, 3, |i, j| {
            C64::new(
                if i == j { 0.7 + i as f64 } else { 0.2 },
                if i < j {
                    0.1
                } else if i > j {
                    -0.1
                } else {
                    0.0
                },
            )
        });
        let p = LinearProblem::new(a, random_vec(&mut rng, 3), "offgrid").unwrap();
        let rep = simulate_full(&p, &ClockSpec::auto(m)).unwrap();
        assert!(
            rep.max_ratio_deviation <= 1e-9 * rep.output_inf_norm,
            "m = {m}"
        );
        // the circuit output is the raw contraction over m² ‖b‖
        let expected = 1.0 / (m as f64 * m as f64 * tnhhl::linalg::norm2(&p.b));
        assert!((rep.proportionality_to_tn - C64::new(expected, 0.0)).norm() < 1e-9 * expected);
    }
}

#[test]
fn non_hermitian_input_is_embedded() {
    let a = DenseMatrix::from_real(2, 2, &[1.0, 0.5, 0.0, 2.0]).unwrap();
    let p = LinearProblem::new(a, vec![C64::new(1.0, 0.0), C64::new(1.0, 0.0)], "upper").unwrap();
    let rep = simulate_full(&p, &ClockSpec::auto(16)).unwrap();
    assert_eq!(rep.solution_amplitudes.len(), 2);
    assert!(rep.max_ratio_deviation <= 1e-9 * rep.output_inf_norm);
}
