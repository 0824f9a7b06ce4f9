//! Acceptance suite. Every criterion runs at its stated tolerance and prints
//! a single `[PASS]` / `[FAIL]` line; the process exits non-zero if any fail.

mod common;

use std::process::ExitCode;
use std::time::Instant;

use common::*;
use nalgebra::DVector;
use rsd_core::harness::{run_experiment, verify_small};
use rsd_core::{
    split_interface_matrix, CsrMatrix, Mode, PdeKind, ProblemConfig, Side,
};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn beta(kind: PdeKind, n: usize, p: usize, gamma: usize) -> Result<usize, String> {
    let report = run_experiment(&ProblemConfig::new(kind, n, p, gamma)).map_err(|e| e.to_string())?;
    if !report.converged() {
        return Err(format!("{kind} N={n} P={p} gamma={gamma} did not converge"));
    }
    if report.solution_error > 1e-6 {
        return Err(format!("{kind} N={n} P={p} gamma={gamma} solution error {:.2e}", report.solution_error));
    }
    Ok(report.beta)
}

fn within_abs(got: usize, want: usize, tol: usize) -> bool {
    got.abs_diff(want) <= tol
}

fn within_rel(got: usize, want: usize, frac: f64) -> bool {
    (got as f64 - want as f64).abs() <= frac * want as f64
}

/// Runs a table of (N, gamma, expected) cases and compares each count.
fn beta_table(
    kind: PdeKind,
    p: usize,
    cases: &[(usize, usize, usize)],
    ok: impl Fn(usize, usize) -> bool,
) -> Outcome {
    let mut seen = Vec::new();
    let mut bad = Vec::new();
    for &(n, g, want) in cases {
        let got = beta(kind, n, p, g)?;
        seen.push(format!("N{n}/g{g}={got}({want})"));
        if !ok(got, want) {
            bad.push(format!("N={n} gamma={g}: {got} vs {want}"));
        }
    }
    if bad.is_empty() {
        Ok(seen.join(" "))
    } else {
        Err(bad.join("; "))
    }
}

fn poisson_p8() -> Outcome {
    let start = Instant::now();
    let detail = beta_table(
        PdeKind::Poisson,
        8,
        &[(17, 2, 18), (17, 4, 9), (17, 8, 5), (33, 2, 26), (33, 4, 13), (33, 8, 6), (65, 2, 36)],
        |g, w| within_abs(g, w, 2),
    )?;
    let secs = start.elapsed().as_secs_f64();
    if secs > 60.0 {
        return Err(format!("took {secs:.1}s"));
    }
    Ok(format!("{detail} in {secs:.1}s"))
}

fn poisson_p128() -> Outcome {
    beta_table(PdeKind::Poisson, 128, &[(17, 2, 20), (17, 4, 10), (17, 8, 5)], |g, w| within_abs(g, w, 2))
}

fn weak_coupled() -> Outcome {
    beta_table(PdeKind::WeakCoupled, 8, &[(17, 2, 57), (17, 4, 25), (17, 8, 16)], |g, w| within_rel(g, w, 0.15))
}

fn strong_coupled() -> Outcome {
    beta_table(PdeKind::StrongCoupled, 8, &[(17, 2, 32), (17, 4, 17), (17, 8, 9)], |g, w| within_rel(g, w, 0.15))
}

fn navier_lame() -> Outcome {
    beta_table(PdeKind::NavierLame, 8, &[(17, 2, 39), (17, 4, 18), (17, 8, 10)], |g, w| within_rel(g, w, 0.20))
}

fn dense_agreement() -> Outcome {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for kind in PdeKind::ALL {
        for p in [2, 4] {
            for n in [3, 5] {
                let cfg = ProblemConfig::new(kind, n, p, 4).with_mode(Mode::Verify);
                let v = verify_small(&cfg).map_err(|e| e.to_string())?;
                worst = worst.max(v.relative_difference);
                if v.relative_difference > 1e-9 {
                    return Err(format!("{kind} P={p} N={n}: {:.3e}", v.relative_difference));
                }
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    if secs > 10.0 {
        return Err(format!("took {secs:.1}s"));
    }
    Ok(format!("max rel diff {worst:.2e} in {secs:.2}s"))
}

fn schur_exact_two_leaves() -> Outcome {
    let mut worst: f64 = 0.0;
    for kind in PdeKind::ALL {
        for n in [5, 9] {
            let prob = problem(kind, n, 2, 1);
            let setup = prob.setup().map_err(|e| e.to_string())?;
            let root = prob.tree.root();
            let s = exact_schur(&dense(&prob.k), &root.idx_vl, &root.idx_vr, &root.idx_i);
            let mut counters = setup.counters();
            for t in 0..20 {
                let x = pseudo_random(root.idx_i.len(), 1000 + t);
                let y = setup.schur_matvec(0, &x, &mut counters).map_err(|e| e.to_string())?;
                let e = &s * DVector::from_vec(x);
                let err = rel_err(&y, e.as_slice());
                worst = worst.max(err);
                if err > 1e-10 {
                    return Err(format!("{kind} N={n} vector {t}: {err:.3e}"));
                }
            }
        }
    }
    Ok(format!("max rel err {worst:.2e} over 20 vectors per case"))
}

fn counter_law() -> Outcome {
    let mut checked = 0;
    for p in [2usize, 4, 8] {
        let log2p = p.trailing_zeros() as usize;
        for g in [1usize, 2, 4] {
            let cfg = ProblemConfig::new(PdeKind::Poisson, 9, p, g).with_mode(Mode::Count);
            let r = run_experiment(&cfg).map_err(|e| e.to_string())?;
            let c = &r.per_application;
            let want = p + (p - 1) * (2 * g + 2);
            if c.leaf_solve_count != want {
                return Err(format!("P={p} gamma={g}: {} leaf solves, expected {want}", c.leaf_solve_count));
            }
            let bound = 1 + log2p * (g + 1);
            if c.max_leaf_solves() > bound {
                return Err(format!("P={p} gamma={g}: busiest leaf {} > {bound}", c.max_leaf_solves()));
            }
            let msgs = 2 * c.smatvec_count + 2 * (p - 1);
            if c.point_to_point_message_count != msgs {
                return Err(format!("P={p} gamma={g}: {} messages, expected {msgs}", c.point_to_point_message_count));
            }
            checked += 1;
        }
    }
    Ok(format!("{checked} (P, gamma) pairs"))
}

fn monotone_history() -> Result<(), String> {
    for kind in PdeKind::ALL {
        let r = run_experiment(&ProblemConfig::new(kind, 9, 4, 2)).map_err(|e| e.to_string())?;
        for w in r.residual_history.windows(2) {
            if w[1] > w[0] * (1.0 + 1e-12) {
                return Err(format!("{kind}: residual rose {:.3e} -> {:.3e}", w[0], w[1]));
            }
        }
    }
    Ok(())
}

fn hat_round_trip() -> Result<(), String> {
    let prob = problem(PdeKind::NavierLame, 5, 8, 1);
    let setup = prob.setup().map_err(|e| e.to_string())?;
    for node in prob.tree.interior_nodes() {
        for (side, hat) in [(Side::Left, node.hat_left_leaf), (Side::Right, node.hat_right_leaf)] {
            let len = prob.tree.node(hat.unwrap()).dofs.len();
            let v = pseudo_random(len, node.id as u64 * 2 + 1);
            let w = setup.prolong_hat(node.id, side, &v).map_err(|e| e.to_string())?;
            if setup.restrict_hat(node.id, side, &w).map_err(|e| e.to_string())? != v {
                return Err(format!("node {} round trip changed the vector", node.id));
            }
        }
    }
    Ok(())
}

fn split_sums() -> Result<(), String> {
    for kind in PdeKind::ALL {
        for p in [2, 4, 8] {
            let prob = problem(kind, 5, p, 1);
            for node in prob.tree.interior_nodes() {
                let (l, r) = split_interface_matrix(&prob.grid, &prob.coeffs, node).map_err(|e| e.to_string())?;
                let kii = dense(&prob.k.extract_block(&node.idx_i, &node.idx_i).map_err(|e| e.to_string())?);
                let diff = (dense(&l) + dense(&r) - kii).abs().max();
                if diff > 1e-15 {
                    return Err(format!("{kind} P={p} node {}: {diff:.2e}", node.id));
                }
            }
        }
    }
    Ok(())
}

fn all_zero(m: &CsrMatrix) -> bool {
    m.values().iter().all(|&v| v == 0.0)
}

fn coupling_outside_hat_is_zero() -> Result<(), String> {
    for kind in PdeKind::ALL {
        let prob = problem(kind, 5, 8, 1);
        for node in prob.tree.interior_nodes() {
            for (vset, hat) in [(&node.idx_vl, node.hat_left_leaf), (&node.idx_vr, node.hat_right_leaf)] {
                let hat_dofs = &prob.tree.node(hat.unwrap()).dofs;
                let outside: Vec<usize> = vset.iter().copied().filter(|d| hat_dofs.binary_search(d).is_err()).collect();
                let a = prob.k.extract_block(&outside, &node.idx_i).map_err(|e| e.to_string())?;
                let b = prob.k.extract_block(&node.idx_i, &outside).map_err(|e| e.to_string())?;
                if !all_zero(&a) || !all_zero(&b) {
                    return Err(format!("{kind} node {}: coupling outside hat leaf", node.id));
                }
            }
        }
    }
    Ok(())
}

fn properties() -> Outcome {
    monotone_history().map_err(|e| format!("gmres monotonicity: {e}"))?;
    hat_round_trip().map_err(|e| format!("restrict/prolong: {e}"))?;
    split_sums().map_err(|e| format!("interface split: {e}"))?;
    coupling_outside_hat_is_zero().map_err(|e| format!("hat sparsity: {e}"))?;
    Ok("monotone residuals, hat round trip, split sum, hat sparsity".into())
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("poisson P=8 iteration counts", poisson_p8),
        ("poisson P=128 iteration counts", poisson_p128),
        ("weakly coupled iteration counts", weak_coupled),
        ("strongly coupled iteration counts", strong_coupled),
        ("navier-lame iteration counts", navier_lame),
        ("small problems agree with dense LU", dense_agreement),
        ("two-leaf S-MatVec equals exact Schur product", schur_exact_two_leaves),
        ("leaf-solve and message counts", counter_law),
        ("structural properties", properties),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        match run() {
            Ok(detail) => println!("[PASS] {:>2} {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("[FAIL] {:>2} {name}: {detail}", i + 1);
            }
        }
    }
    println!("[N/A ] 10 scalability: covered by criteria 2 and 8");
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
