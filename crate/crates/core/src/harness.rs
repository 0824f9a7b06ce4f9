//! Experiment driver: builds a configured problem, runs the preconditioned
//! solve and produces reports.

use std::io::Write;
use std::time::Instant;

use log::{info, warn};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::config::{Mode, ProblemConfig};
use crate::error::{Error, Result};
use crate::fem::{assemble, manufactured_problem, PdeCoefficients};
use crate::grid::{build_grid, Grid};
use crate::krylov::{gmres_flexible, LinearOperator, Termination};
use crate::rsd::{rsd_setup, InnerSolve, RsdCounters, RsdPreconditioner, RsdSetup};
use crate::sparse::{norm2, CsrMatrix};
use crate::tree::{build_tree, compute_index_sets, DomainTree};

/// Largest system the dense LU oracle will take on.
pub const DENSE_ORACLE_CAP: usize = 20_000;
/// Relative 2-norm distance to the dense solution accepted by `verify_small`.
pub const VERIFY_TOL: f64 = 1e-9;

/// An assembled problem with its manufactured solution.
#[derive(Debug, Clone)]
pub struct Problem {
    pub config: ProblemConfig,
    pub grid: Grid,
    pub tree: DomainTree,
    pub coeffs: PdeCoefficients,
    pub k: CsrMatrix,
    pub u_star: Vec<f64>,
    pub f: Vec<f64>,
}

impl Problem {
    pub fn build(config: &ProblemConfig) -> Result<Self> {
        config.validate()?;
        let grid = build_grid(config).map_err(|e| e.at_stage("grid"))?;
        let tree = build_tree(config.p).map_err(|e| e.at_stage("tree"))?;
        let tree = compute_index_sets(tree, &grid);
        let coeffs = PdeCoefficients::new(config.pde, config.literal_eq4_sign);
        let k = assemble(&grid, &coeffs).map_err(|e| e.at_stage("assembly"))?;
        let (u_star, f) = if config.zero_solution {
            (vec![0.0; k.nrows()], vec![0.0; k.nrows()])
        } else {
            manufactured_problem(&k, config.seed).map_err(|e| e.at_stage("manufactured solution"))?
        };
        Ok(Problem {
            config: config.clone(),
            grid,
            tree,
            coeffs,
            k,
            u_star,
            f,
        })
    }

    pub fn setup(&self) -> Result<RsdSetup> {
        rsd_setup(&self.k, &self.tree, &self.grid, &self.coeffs).map_err(|e| e.at_stage("setup"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    /// `‖u_rsd - u_dense‖ / ‖u_dense‖`
    pub relative_difference: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub config: ProblemConfig,
    pub dofs: usize,
    /// Outer iterations.
    pub beta: usize,
    /// `None` when no outer solve was run (count mode).
    pub termination: Option<Termination>,
    pub residual_history: Vec<f64>,
    pub setup_seconds: f64,
    pub solve_seconds: f64,
    pub final_relative_residual: f64,
    /// `‖u - u*‖ / ‖u*‖`, or `‖u‖` when `u* = 0`.
    pub solution_error: f64,
    /// Summed over every preconditioner application of the run.
    pub counters: RsdCounters,
    /// Counters of the first preconditioner application.
    pub per_application: RsdCounters,
    pub applications: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verdict: Option<Verdict>,
}

impl SolveReport {
    pub fn converged(&self) -> bool {
        self.termination == Some(Termination::Converged)
    }

    /// Whether the run met its goal: convergence for solve mode, a passing
    /// oracle comparison for verify mode, always for count mode.
    pub fn success(&self) -> bool {
        match self.config.mode {
            Mode::Solve => self.converged(),
            Mode::Verify => self.converged() && self.verdict.as_ref().is_some_and(|v| v.pass),
            Mode::Count => true,
        }
    }
}

fn relative_distance(u: &[f64], reference: &[f64]) -> f64 {
    let diff: f64 = u
        .iter()
        .zip(reference)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    let scale = norm2(reference);
    if scale == 0.0 {
        diff
    } else {
        diff / scale
    }
}

/// Builds the problem, sets up the preconditioner and runs the outer
/// flexible GMRES (or, in count mode, a single preconditioner application).
pub fn run_experiment(config: &ProblemConfig) -> Result<SolveReport> {
    let problem = Problem::build(config)?;
    let t0 = Instant::now();
    let setup = problem.setup()?;
    let setup_seconds = t0.elapsed().as_secs_f64();
    let dofs = problem.k.nrows();
    info!(
        "{} N={} P={} gamma={}: {} dofs, setup {:.3}s",
        config.pde, config.n, config.p, config.gamma, dofs, setup_seconds
    );

    let mut pre = RsdPreconditioner::new(&setup, InnerSolve::Fixed(config.gamma));

    if config.mode == Mode::Count {
        let t1 = Instant::now();
        let mut u = vec![0.0; dofs];
        pre.apply(&problem.f, &mut u).map_err(|e| e.at_stage("preconditioner"))?;
        return Ok(SolveReport {
            config: config.clone(),
            dofs,
            beta: 0,
            termination: None,
            residual_history: Vec::new(),
            setup_seconds,
            solve_seconds: t1.elapsed().as_secs_f64(),
            final_relative_residual: f64::NAN,
            solution_error: f64::NAN,
            per_application: pre.last.clone(),
            counters: pre.total.clone(),
            applications: pre.applications,
            verdict: None,
        });
    }

    let mut first: Option<RsdCounters> = None;
    let mut precondition = |x: &[f64], y: &mut [f64]| {
        pre.apply(x, y)?;
        if first.is_none() {
            first = Some(pre.last.clone());
        }
        Ok(())
    };
    let k = &problem.k;
    let mut matvec = |x: &[f64], y: &mut [f64]| k.spmv_into(x, y);

    let t1 = Instant::now();
    let (u, stats) = gmres_flexible(
        &mut matvec,
        &mut precondition,
        &problem.f,
        config.tol,
        config.max_outer,
    )
    .map_err(|e| e.at_stage("solve"))?;
    let solve_seconds = t1.elapsed().as_secs_f64();
    let per_application = first.unwrap_or_else(|| setup.counters());
    if !stats.converged() {
        warn!(
            "{} N={} P={} gamma={} stopped after {} iterations ({:?})",
            config.pde, config.n, config.p, config.gamma, stats.iterations, stats.reason
        );
    }

    let verdict = if config.mode == Mode::Verify {
        Some(compare_with_dense(&problem, &u)?)
    } else {
        None
    };

    Ok(SolveReport {
        config: config.clone(),
        dofs,
        beta: stats.iterations,
        termination: Some(stats.reason),
        residual_history: stats.residual_history,
        setup_seconds,
        solve_seconds,
        final_relative_residual: stats.final_relative_residual,
        solution_error: relative_distance(&u, &problem.u_star),
        counters: pre.total.clone(),
        per_application,
        applications: pre.applications,
        verdict,
    })
}

/// Solves `K u = f` with a dense LU factorization.
pub fn dense_solve(k: &CsrMatrix, f: &[f64]) -> Result<Vec<f64>> {
    let n = k.nrows();
    if n > DENSE_ORACLE_CAP {
        return Err(Error::SizeCap {
            dofs: n,
            cap: DENSE_ORACLE_CAP,
        });
    }
    let mut dense = DMatrix::<f64>::zeros(n, k.ncols());
    for i in 0..n {
        let (cols, vals) = k.row(i);
        for (&j, &v) in cols.iter().zip(vals) {
            dense[(i, j)] = v;
        }
    }
    let x = dense
        .lu()
        .solve(&DVector::from_column_slice(f))
        .ok_or(Error::SingularPivot { row: 0 })?;
    Ok(x.iter().copied().collect())
}

fn compare_with_dense(problem: &Problem, u: &[f64]) -> Result<Verdict> {
    let dense = dense_solve(&problem.k, &problem.f).map_err(|e| e.at_stage("dense oracle"))?;
    let relative_difference = relative_distance(u, &dense);
    Ok(Verdict {
        relative_difference,
        pass: relative_difference <= VERIFY_TOL,
    })
}

/// Runs the RSD solve and a dense LU solve of the same system and compares
/// them. Refuses problems above [`DENSE_ORACLE_CAP`] unknowns.
pub fn verify_small(config: &ProblemConfig) -> Result<Verdict> {
    let mut config = config.clone();
    config.mode = Mode::Verify;
    config.validate()?;
    let grid = build_grid(&config)?;
    if grid.num_dofs() > DENSE_ORACLE_CAP {
        return Err(Error::SizeCap {
            dofs: grid.num_dofs(),
            cap: DENSE_ORACLE_CAP,
        });
    }
    let report = run_experiment(&config)?;
    Ok(report.verdict.expect("verify mode fills the verdict"))
}

/// Result of a sweep: one entry per configuration, in input order.
#[derive(Debug, Clone, Serialize)]
pub struct SweepOutcome {
    pub runs: Vec<SweepRun>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepRun {
    pub config: ProblemConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report: Option<SolveReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Runs every configuration in order; a failing run is recorded and the
/// sweep moves on.
pub fn sweep(configs: &[ProblemConfig]) -> Result<SweepOutcome> {
    if configs.is_empty() {
        return Err(Error::config("sweep needs at least one configuration"));
    }
    let runs = configs
        .iter()
        .map(|config| match run_experiment(config) {
            Ok(report) => SweepRun {
                config: config.clone(),
                report: Some(report),
                error: None,
            },
            Err(e) => {
                warn!("run {config:?} failed: {e}");
                SweepRun {
                    config: config.clone(),
                    report: None,
                    error: Some(e.to_string()),
                }
            }
        })
        .collect();
    Ok(SweepOutcome { runs })
}

/// Parses a sweep file: one JSON `ProblemConfig` per non-blank line.
pub fn parse_sweep_file(text: &str) -> Result<Vec<ProblemConfig>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, line)| {
            serde_json::from_str(line)
                .map_err(|e| Error::config(format!("sweep line {}: {e}", i + 1)))
        })
        .collect()
}

#[derive(Debug, Serialize)]
struct CsvRow {
    pde: String,
    #[serde(rename = "N")]
    n: usize,
    #[serde(rename = "P")]
    p: usize,
    gamma: usize,
    beta: Option<usize>,
    setup_s: Option<f64>,
    solve_s: Option<f64>,
    final_rel_res: Option<f64>,
    solution_err: Option<f64>,
    leaf_solves: Option<usize>,
}

impl CsvRow {
    fn new(config: &ProblemConfig, report: Option<&SolveReport>) -> Self {
        CsvRow {
            pde: config.pde.to_string(),
            n: config.n,
            p: config.p,
            gamma: config.gamma,
            beta: report.map(|r| r.beta),
            setup_s: report.map(|r| r.setup_seconds),
            solve_s: report.map(|r| r.solve_seconds),
            final_rel_res: report.map(|r| r.final_relative_residual),
            solution_err: report.map(|r| r.solution_error),
            leaf_solves: report.map(|r| r.counters.leaf_solve_count),
        }
    }
}

pub const CSV_HEADER: &str =
    "pde,N,P,gamma,beta,setup_s,solve_s,final_rel_res,solution_err,leaf_solves";

impl SweepOutcome {
    pub fn reports(&self) -> impl Iterator<Item = &SolveReport> {
        self.runs.iter().filter_map(|r| r.report.as_ref())
    }

    /// Writes one CSV row per run; failed runs keep their configuration
    /// columns and leave the result columns empty.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        for run in &self.runs {
            out.serialize(CsvRow::new(&run.config, run.report.as_ref()))?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn write_json<W: Write>(&self, w: W) -> Result<()> {
        serde_json::to_writer_pretty(w, self)?;
        Ok(())
    }

    pub fn all_succeeded(&self) -> bool {
        self.runs
            .iter()
            .all(|r| r.report.as_ref().is_some_and(SolveReport::success))
    }
}

pub fn write_reports_csv<W: Write>(reports: &[SolveReport], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for r in reports {
        out.serialize(CsvRow::new(&r.config, Some(r)))?;
    }
    out.flush()?;
    Ok(())
}
