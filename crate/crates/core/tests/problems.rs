use tnhhl::linalg::lu_solve;
use tnhhl::problems::{
    build_damped_oscillator, build_forced_oscillator, build_heat2d, heat_index, hermitize,
    Heat2dParams, OscillatorParams,
};

fn forced_max_error(n: usize, t_end: f64) -> f64 {
    let p = OscillatorParams {
        n,
        dt: t_end / (n as f64 + 1.0),
        ..OscillatorParams::default()
    };
    let prob = build_forced_oscillator(&p).unwrap();
    let x = lu_solve(&prob.a, &prob.b).unwrap();
    // x'' + x = sin 2t  →  x = x0 cos t + B sin t − sin(2t)/3
    let b = (p.x_t - p.x0 * t_end.cos() + (2.0 * t_end).sin() / 3.0) / t_end.sin();
    let exact = |t: f64| p.x0 * t.cos() + b * t.sin() - (2.0 * t).sin() / 3.0;
    x.iter()
        .enumerate()
        .map(|(j, v)| (v.re - exact((j + 1) as f64 * p.dt)).abs())
        .fold(0.0, f64::max)
}

#[test]
fn forced_oscillator_converges_at_second_order() {
    let e1 = forced_max_error(31, 3.0);
    let e2 = forced_max_error(63, 3.0);
    let e3 = forced_max_error(127, 3.0);
    for ratio in [e1 / e2, e2 / e3] {
        assert!(
            (3.0..=5.0).contains(&ratio),
            "ratio {ratio} (errors {e1:e}, {e2:e}, {e3:e})"
        );
    }
}

#[test]
fn forced_oscillator_is_symmetric_damped_is_not() {
    let p = OscillatorParams::default();
    assert!(build_forced_oscillator(&p).unwrap().a.is_hermitian(0.0));
    let d = build_damped_oscillator(&p, 0.2).unwrap();
    assert!(!d.a.is_hermitian(1e-12));
    assert!(!hermitize(&d).was_hermitian);
}

#[test]
fn heat_row_sums() {
    let n = 5;
    let prob = build_heat2d(&Heat2dParams::square(n, 1.0, 0.0)).unwrap();
    for j in 0..n {
        for k in 0..n {
            let row = heat_index(j, k, n);
            let s: f64 = prob.a.row(row).iter().map(|v| v.re).sum();
            assert!((-4.0..=0.0).contains(&s), "row ({j}, {k}) sums to {s}");
            let interior = j > 0 && k > 0 && j + 1 < n && k + 1 < n;
            if interior {
                assert_eq!(s, 0.0, "row ({j}, {k})");
            }
            assert_eq!(prob.a[(row, row)].re, -4.0);
        }
    }
    assert!(prob.a.is_hermitian(0.0));
}

#[test]
fn heat_maximum_principle() {
    // no source: the solution is bounded by the boundary values
    let mut p = Heat2dParams::square(8, 1.0, 0.0);
    p.source_amp = 0.0;
    for (k, v) in p.boundary.left.iter_mut().enumerate() {
        *v = 1.0 + k as f64 * 0.1;
    }
    p.boundary.top = vec![-0.5; 8];
    let prob = build_heat2d(&p).unwrap();
    let x = lu_solve(&prob.a, &prob.b).unwrap();
    for v in &x {
        assert!(v.re <= 1.7 + 1e-12 && v.re >= -0.5 - 1e-12);
    }
}
