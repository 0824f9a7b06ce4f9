use rsd_core::harness::{parse_sweep_file, run_experiment, sweep, verify_small};
use rsd_core::{Error, Mode, PdeKind, ProblemConfig};

fn cfg(kind: PdeKind, n: usize, p: usize, gamma: usize) -> ProblemConfig {
    ProblemConfig::new(kind, n, p, gamma)
}

#[test]
fn runs_are_deterministic() {
    for kind in [PdeKind::Poisson, PdeKind::StrongCoupled] {
        let a = run_experiment(&cfg(kind, 9, 4, 2)).unwrap();
        let b = run_experiment(&cfg(kind, 9, 4, 2)).unwrap();
        assert_eq!(a.beta, b.beta);
        assert_eq!(a.residual_history, b.residual_history);
        assert_eq!(a.counters, b.counters);
        assert_eq!(a.solution_error, b.solution_error);
    }
}

#[test]
fn seed_changes_rhs_but_not_structure() {
    let a = run_experiment(&cfg(PdeKind::Poisson, 9, 4, 2)).unwrap();
    let b = run_experiment(&cfg(PdeKind::Poisson, 9, 4, 2).with_seed(5)).unwrap();
    assert_ne!(a.residual_history[0], b.residual_history[0]);
    assert_eq!(a.per_application, b.per_application);
}

#[test]
fn beta_drops_as_gamma_doubles() {
    for kind in PdeKind::ALL {
        let betas: Vec<usize> = [2, 4, 8]
            .iter()
            .map(|&g| run_experiment(&cfg(kind, 17, 8, g)).unwrap().beta)
            .collect();
        assert!(betas.windows(2).all(|w| w[1] < w[0]), "{kind}: {betas:?}");
    }
}

#[test]
fn solutions_are_accurate() {
    for kind in PdeKind::ALL {
        let r = run_experiment(&cfg(kind, 17, 8, 4)).unwrap();
        assert!(r.success());
        assert!(r.solution_error <= 1e-6, "{kind}: {}", r.solution_error);
        assert!(r.final_relative_residual <= 1e-12);
    }
}

#[test]
fn poisson_beta_barely_grows_with_p() {
    for n in [17, 33] {
        let small = run_experiment(&cfg(PdeKind::Poisson, n, 8, 2)).unwrap().beta;
        let large = run_experiment(&cfg(PdeKind::Poisson, n, 128, 2)).unwrap().beta;
        let slack = 3.max((0.15 * small as f64).ceil() as usize);
        assert!(large <= small + slack, "N={n}: {small} -> {large}");
    }
}

#[test]
fn sweep_csv_reproduces_four_points() {
    let configs: Vec<_> = [(17, 2, 18), (17, 4, 9), (33, 2, 26), (33, 4, 13)]
        .iter()
        .map(|&(n, g, _)| cfg(PdeKind::Poisson, n, 8, g))
        .collect();
    let outcome = sweep(&configs).unwrap();
    let mut buf = Vec::new();
    outcome.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let headers = rdr.headers().unwrap().clone();
    let beta_col = headers.iter().position(|h| h == "beta").unwrap();
    let rows: Vec<_> = rdr.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 4);
    for (row, want) in rows.iter().zip([18, 9, 26, 13]) {
        let got: usize = row[beta_col].parse().unwrap();
        assert!(got.abs_diff(want) <= 2, "{got} vs {want}");
    }
}

#[test]
fn duplicate_configs_give_identical_rows() {
    let c = cfg(PdeKind::WeakCoupled, 5, 2, 2);
    let outcome = sweep(&[c.clone(), c]).unwrap();
    let r: Vec<_> = outcome.reports().collect();
    assert_eq!(r[0].beta, r[1].beta);
    assert_eq!(r[0].residual_history, r[1].residual_history);
}

#[test]
fn sweep_keeps_going_after_a_failure() {
    let mut bad = cfg(PdeKind::Poisson, 9, 4, 1);
    bad.max_outer = 1;
    let outcome = sweep(&[bad, cfg(PdeKind::Poisson, 5, 2, 2)]).unwrap();
    assert_eq!(outcome.runs.len(), 2);
    assert!(!outcome.all_succeeded());
    assert!(outcome.runs[1].report.as_ref().unwrap().success());
}

#[test]
fn sweep_file_round_trip() {
    let text = r#"{"pde":"lame","n":5,"p":2,"gamma":2}

{"pde":"weak","n":5,"p":4,"gamma":1,"seed":3,"mode":"verify"}
"#;
    let configs = parse_sweep_file(text).unwrap();
    assert_eq!(configs.len(), 2);
    assert_eq!(configs[1].mode, Mode::Verify);
    assert_eq!(configs[1].tol, 1e-12);
    let err = parse_sweep_file("{\"pde\":\"heat\"}").unwrap_err();
    assert!(err.is_config());
}

#[test]
fn verify_small_covers_every_kind() {
    for kind in PdeKind::ALL {
        let v = verify_small(&cfg(kind, 5, 4, 2).with_mode(Mode::Verify)).unwrap();
        assert!(v.pass && v.relative_difference <= 1e-9);
    }
    let big = cfg(PdeKind::NavierLame, 65, 8, 2);
    assert!(matches!(verify_small(&big), Err(Error::SizeCap { .. })));
}

#[test]
fn literal_sign_changes_lame_only() {
    let mut c = cfg(PdeKind::NavierLame, 9, 4, 2);
    c.literal_eq4_sign = true;
    let r = run_experiment(&c).unwrap();
    assert!(r.solution_error <= 1e-6 || !r.converged());
    let mut p = cfg(PdeKind::Poisson, 9, 4, 2);
    let a = run_experiment(&p).unwrap();
    p.literal_eq4_sign = true;
    assert_eq!(run_experiment(&p).unwrap().beta, a.beta);
}
