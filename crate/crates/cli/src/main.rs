//! `rsd`: run RSD-preconditioned solves of the benchmark problems and write
//! CSV or JSON reports.
//!
//! Exit status: 0 when every run converged (or passed verification), 2 when
//! a run did not converge or failed verification, 1 on configuration errors.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::Parser;
use log::info;
use rsd_core::harness::{parse_sweep_file, Problem, SweepOutcome};
use rsd_core::{sweep, Error, Mode, PdeKind, ProblemConfig};

#[derive(Debug, Parser)]
#[command(name = "rsd", version, about = "Recursive Schur decomposition benchmark driver")]
struct Cli {
    /// Model problem: poisson, weak, strong or lame.
    #[arg(long, default_value = "poisson", value_parser = parse_pde)]
    pde: PdeKind,

    /// Nodes per dimension of each leaf sub-domain.
    #[arg(long, default_value_t = 17)]
    n: usize,

    /// Number of leaf sub-domains (power of two).
    #[arg(long, default_value_t = 8)]
    p: usize,

    /// S-MatVecs per interface solve.
    #[arg(long, default_value_t = 2)]
    gamma: usize,

    /// Relative residual tolerance of the outer solve.
    #[arg(long, default_value_t = 1.0e-12)]
    tol: f64,

    /// Outer iteration cap.
    #[arg(long, default_value_t = 2000)]
    max_outer: usize,

    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// solve, verify (compare with dense LU) or count (one preconditioner application).
    #[arg(long, default_value = "solve", value_parser = parse_mode)]
    mode: Mode,

    /// Assemble the elasticity grad-div term with the flipped sign.
    #[arg(long)]
    literal_eq4_sign: bool,

    /// Element width along the domain [default: 1/(N-1), unit-square leaves].
    #[arg(long)]
    hx: Option<f64>,

    /// Element height across the domain [default: 1/(N-1)].
    #[arg(long)]
    hy: Option<f64>,

    /// Report destination; the extension selects CSV or JSON. Defaults to CSV on stdout.
    #[arg(long)]
    out: Option<PathBuf>,

    /// File with one JSON problem configuration per line; overrides the single-run flags.
    #[arg(long)]
    sweep: Option<PathBuf>,

    /// Also write the assembled matrix in Matrix Market format.
    #[arg(long)]
    export_matrix: Option<PathBuf>,
}

fn parse_pde(s: &str) -> Result<PdeKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_mode(s: &str) -> Result<Mode, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

impl Cli {
    fn config(&self) -> ProblemConfig {
        ProblemConfig {
            tol: self.tol,
            max_outer: self.max_outer,
            seed: self.seed,
            literal_eq4_sign: self.literal_eq4_sign,
            mode: self.mode,
            hx: self.hx,
            hy: self.hy,
            ..ProblemConfig::new(self.pde, self.n, self.p, self.gamma)
        }
    }
}

enum Format {
    Csv,
    Json,
}

fn format_for(path: &Path) -> Result<Format, Error> {
    match path.extension().and_then(|e| e.to_str()) {
        Some(ext) if ext.eq_ignore_ascii_case("csv") => Ok(Format::Csv),
        Some(ext) if ext.eq_ignore_ascii_case("json") => Ok(Format::Json),
        _ => Err(Error::Config(format!(
            "--out must end in .csv or .json: {}",
            path.display()
        ))),
    }
}

fn write_outcome(outcome: &SweepOutcome, out: Option<&Path>) -> Result<(), Error> {
    match out {
        None => outcome.write_csv(io::stdout().lock()),
        Some(path) => {
            let format = format_for(path)?;
            let mut w = BufWriter::new(File::create(path)?);
            match format {
                Format::Csv => outcome.write_csv(&mut w)?,
                Format::Json => outcome.write_json(&mut w)?,
            }
            w.flush()?;
            Ok(())
        }
    }
}

fn run(cli: &Cli) -> Result<ExitCode, Error> {
    if let Some(out) = &cli.out {
        format_for(out)?;
    }
    let configs = match &cli.sweep {
        Some(path) => parse_sweep_file(&std::fs::read_to_string(path)?)?,
        None => vec![cli.config()],
    };
    for config in &configs {
        config.validate()?;
    }
    if let Some(path) = &cli.export_matrix {
        let problem = Problem::build(&configs[0])?;
        problem.k.write_matrix_market(BufWriter::new(File::create(path)?))?;
        info!("wrote {}x{} matrix to {}", problem.k.nrows(), problem.k.ncols(), path.display());
    }

    let outcome = sweep(&configs)?;
    for run in &outcome.runs {
        let c = &run.config;
        match (&run.report, &run.error) {
            (Some(r), _) => {
                let mut line = format!(
                    "{} N={} P={} gamma={}: beta={} rel_res={:.3e} err={:.3e} leaf_solves={}",
                    c.pde,
                    c.n,
                    c.p,
                    c.gamma,
                    r.beta,
                    r.final_relative_residual,
                    r.solution_error,
                    r.counters.leaf_solve_count
                );
                if let Some(v) = &r.verdict {
                    line += &format!(
                        " dense_diff={:.3e} {}",
                        v.relative_difference,
                        if v.pass { "PASS" } else { "FAIL" }
                    );
                }
                eprintln!("{line}");
            }
            (None, Some(e)) => eprintln!("{} N={} P={} gamma={}: error: {e}", c.pde, c.n, c.p, c.gamma),
            (None, None) => unreachable!("a run has either a report or an error"),
        }
    }
    write_outcome(&outcome, cli.out.as_deref())?;
    Ok(if outcome.all_succeeded() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_config() {
                ExitCode::from(1)
            } else {
                ExitCode::from(2)
            }
        }
    }
}
