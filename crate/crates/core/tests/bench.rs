use std::collections::BTreeMap;

use proptest::prelude::*;

use tnhhl::bench::{
    emit_results, parse_records, read_results, run_experiment, run_sweep, write_records, Method,
    OutputFormat, ProblemFamily, RunRecord, SweepSpec, SweepVariable, CSV_HEADER,
};
use tnhhl::linalg::{lu_solve, max_abs};
use tnhhl::problems::{build_forced_oscillator, build_heat2d, Heat2dParams, OscillatorParams};
use tnhhl::tn::ClockSpec;
use tnhhl::Error;

fn record(label: &str, method: Method, rmse: f64) -> RunRecord {
    RunRecord {
        problem_label: label.to_string(),
        n: 8,
        m: 64,
        t: 0.1 + 0.2,
        method,
        rmse_vs_lu: rmse,
        residual_rel: 1.0 / 3.0,
        wall_seconds: 1e-7,
        aliasing_flag: method == Method::Circuit,
    }
}

#[test]
fn forced_oscillator_experiment() {
    let p = build_forced_oscillator(&OscillatorParams::default()).unwrap();
    let x_lu = lu_solve(&p.a, &p.b).unwrap();
    let r = run_experiment(&p, &ClockSpec::auto(512), &[Method::TnHhl, Method::Lu]).unwrap();
    assert!(r.failures.is_empty());
    let tn = r
        .records
        .iter()
        .find(|r| r.method == Method::TnHhl)
        .unwrap();
    assert!(
        tn.rmse_vs_lu <= 1e-2 * max_abs(&x_lu),
        "rmse {}",
        tn.rmse_vs_lu
    );
    assert_eq!(tn.m, 512);
    let lu = r.records.iter().find(|r| r.method == Method::Lu).unwrap();
    assert_eq!(lu.rmse_vs_lu, 0.0);
    assert!(lu.residual_rel <= 1e-10);
    assert_eq!(lu.t, tn.t);
}

#[test]
fn heat_cg_matches_lu() {
    let p = build_heat2d(&Heat2dParams::square(8, 1.0, 0.0)).unwrap();
    let r = run_experiment(&p, &ClockSpec::auto(64), &[Method::Lu, Method::Cg]).unwrap();
    assert_eq!(r.records.len(), 2);
    let cg = r.records.iter().find(|r| r.method == Method::Cg).unwrap();
    // the heat matrix is negative definite
    assert!(
        cg.problem_label.ends_with("/cg:negated"),
        "{}",
        cg.problem_label
    );
    assert!(cg.rmse_vs_lu <= 1e-7);
}

#[test]
fn lu_is_always_recorded() {
    let p = build_heat2d(&Heat2dParams::square(3, 1.0, 0.0)).unwrap();
    let r = run_experiment(&p, &ClockSpec::auto(64), &[Method::Cg]).unwrap();
    assert!(r.records.iter().any(|r| r.method == Method::Lu));
    assert!(matches!(
        run_experiment(&p, &ClockSpec::auto(64), &[]),
        Err(Error::Domain(_))
    ));
}

#[test]
fn failures_do_not_abort_the_experiment() {
    let p = build_heat2d(&Heat2dParams::square(2, 1.0, 0.0)).unwrap();
    // m = 1 is not a valid clock
    let r = run_experiment(&p, &ClockSpec::auto(1), &[Method::TnHhl, Method::Cg]).unwrap();
    assert_eq!(r.failures.len(), 1);
    assert_eq!(r.failures[0].method, Method::TnHhl);
    assert_eq!(r.records.len(), 2);
}

#[test]
fn circuit_method_reproduces_tn_solution() {
    let p = build_heat2d(&Heat2dParams::square(2, 1.0, 0.0)).unwrap();
    let r = run_experiment(&p, &ClockSpec::auto(32), &[Method::TnHhl, Method::Circuit]).unwrap();
    let tn = r
        .records
        .iter()
        .find(|r| r.method == Method::TnHhl)
        .unwrap();
    let circ = r
        .records
        .iter()
        .find(|r| r.method == Method::Circuit)
        .unwrap();
    assert!((tn.rmse_vs_lu - circ.rmse_vs_lu).abs() <= 1e-9 * tn.rmse_vs_lu.max(1e-12));
}

fn sweep(variable: SweepVariable, values: Vec<usize>, family: ProblemFamily) -> SweepSpec {
    SweepSpec {
        variable,
        values,
        fixed: BTreeMap::new(),
        repetitions: 1,
        methods: vec![Method::TnHhl, Method::Lu],
        family,
        seed: 7,
    }
}

#[test]
fn grid_aligned_n_sweep_is_exact() {
    let mut spec = sweep(
        SweepVariable::N,
        vec![16, 32, 64],
        ProblemFamily::GridAligned,
    );
    spec.fixed.insert("m".into(), 512.0);
    spec.fixed.insert("negative_fraction".into(), 0.5);
    let r = run_sweep(&spec).unwrap();
    assert!(r.failures.is_empty(), "{:?}", r.failures);
    let tn: Vec<&RunRecord> = r
        .records
        .iter()
        .filter(|r| r.method == Method::TnHhl)
        .collect();
    assert_eq!(tn.len(), 3);
    for rec in tn {
        assert!(rec.rmse_vs_lu <= 1e-10, "n = {}: {}", rec.n, rec.rmse_vs_lu);
    }
}

#[test]
fn synthetic_m_sweep_error_falls_with_m() {
    let mut spec = sweep(
        SweepVariable::M,
        vec![16, 32, 64, 128, 256],
        ProblemFamily::Synthetic,
    );
    spec.repetitions = 3;
    spec.fixed.insert("n".into(), 8.0);
    spec.fixed.insert("negative_fraction".into(), 0.5);
    let r = run_sweep(&spec).unwrap();
    let summary = r
        .summaries
        .iter()
        .find(|s| s.method == Method::TnHhl)
        .unwrap();
    assert_eq!(summary.points.len(), 5);
    for w in summary.points.windows(2) {
        assert!(
            w[1].2 <= w[0].2,
            "m {} -> {}: {} -> {}",
            w[0].0,
            w[1].0,
            w[0].2,
            w[1].2
        );
    }
    assert!(summary.rmse_slope.unwrap() < 0.0);
    assert!(summary.wall_seconds_slope.is_some());
}

#[test]
fn sweep_over_physical_families() {
    for family in [
        ProblemFamily::Forced,
        ProblemFamily::Damped,
        ProblemFamily::Heat2d,
    ] {
        let mut spec = sweep(SweepVariable::N, vec![2, 4], family);
        spec.fixed.insert("m".into(), 128.0);
        spec.methods = vec![Method::TnHhl, Method::Cg];
        let r = run_sweep(&spec).unwrap();
        assert!(r.failures.is_empty(), "{family:?}: {:?}", r.failures);
        assert_eq!(r.records.len(), 6);
    }
}

#[test]
fn sweep_spec_json_defaults() {
    let spec: SweepSpec = serde_json::from_str(r#"{"variable": "m", "values": [8, 16]}"#).unwrap();
    assert_eq!(spec.repetitions, 1);
    assert_eq!(spec.family, ProblemFamily::Synthetic);
    assert_eq!(spec.methods, vec![Method::TnHhl, Method::Lu]);
    let bad: SweepSpec = serde_json::from_str(r#"{"variable": "n", "values": [8, 4]}"#).unwrap();
    assert!(run_sweep(&bad).is_err());
}

#[test]
fn csv_layout() {
    let mut buf = Vec::new();
    write_records(&[], OutputFormat::Csv, &mut buf, "mem").unwrap();
    assert_eq!(
        String::from_utf8(buf).unwrap(),
        format!("{}\n", CSV_HEADER.join(","))
    );

    let mut buf = Vec::new();
    write_records(
        &[record("a,b \"q\"", Method::TnHhl, 0.5)],
        OutputFormat::Csv,
        &mut buf,
        "mem",
    )
    .unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().count(), 2);
    assert_eq!(
        text.lines().nth(1).unwrap(),
        "\"a,b \"\"q\"\"\",8,64,3.0000000000000004e-1,tn_hhl,5.0000000000000000e-1,3.3333333333333331e-1,9.9999999999999995e-8,false"
    );
}

#[test]
fn emit_and_read_back() {
    let dir = tempfile::tempdir().unwrap();
    let records = vec![
        record("x", Method::Lu, 0.0),
        record("y", Method::Circuit, 1.25e-300),
    ];
    for format in [OutputFormat::Csv, OutputFormat::Json] {
        let path = dir.path().join(format!("out.{format:?}"));
        emit_results(&records, format, &path).unwrap();
        assert_eq!(read_results(&path, format).unwrap(), records);
    }
    let missing = dir.path().join("no/such/dir/out.csv");
    match emit_results(&records, OutputFormat::Csv, &missing) {
        Err(Error::Io { path, .. }) => assert!(path.contains("no/such/dir")),
        other => panic!("expected an I/O error, got {other:?}"),
    }
}

fn any_method() -> impl Strategy<Value = Method> {
    prop_oneof![
        Just(Method::TnHhl),
        Just(Method::Lu),
        Just(Method::Cg),
        Just(Method::Circuit)
    ]
}

proptest! {
    #[test]
    fn records_round_trip_losslessly(
        label in "[ -~]{0,12}",
        n in 0usize..10_000,
        m in 0usize..10_000,
        t in any::<f64>().prop_filter("finite", |v| v.is_finite()),
        method in any_method(),
        rmse in 0.0f64..1e300,
        residual in 0.0f64..1.0,
        wall in 0.0f64..100.0,
        flag in any::<bool>(),
    ) {
        let rec = RunRecord {
            problem_label: label,
            n,
            m,
            t,
            method,
            rmse_vs_lu: rmse,
            residual_rel: residual,
            wall_seconds: wall,
            aliasing_flag: flag,
        };
        for format in [OutputFormat::Csv, OutputFormat::Json] {
            let mut buf = Vec::new();
            write_records(std::slice::from_ref(&rec), format, &mut buf, "mem").unwrap();
            let back = parse_records(std::str::from_utf8(&buf).unwrap(), format, "mem").unwrap();
            prop_assert_eq!(&back, &vec![rec.clone()]);
        }
    }
}
