//! Fixtures shared by the criterion benchmarks.

use rsd_core::harness::Problem;
use rsd_core::{PdeKind, ProblemConfig};

/// Assembled Poisson problem with `P` leaves of `N x N` nodes.
pub fn poisson(n: usize, p: usize, gamma: usize) -> Problem {
    Problem::build(&ProblemConfig::new(PdeKind::Poisson, n, p, gamma)).expect("valid benchmark config")
}

pub fn problem(pde: PdeKind, n: usize, p: usize, gamma: usize) -> Problem {
    Problem::build(&ProblemConfig::new(pde, n, p, gamma)).expect("valid benchmark config")
}
