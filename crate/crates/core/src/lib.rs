//! Recursive Schur decomposition (RSD): a multi-level domain decomposition
//! preconditioner for Krylov solvers on long, thin two-dimensional domains.
//!
//! The domain is cut into `P` strips along its length and the strips are
//! organized in a binary tree. Each interior tree node owns one interface
//! column; applying the preconditioner recursively eliminates sub-domain
//! interiors and approximately solves every interface problem with a fixed
//! number of GMRES steps.
//!
//! The crate also contains everything needed to reproduce the benchmark
//! experiments: bilinear finite element assembly of four model problems,
//! banded direct solvers for the leaves, flexible GMRES, and a harness that
//! runs configurations and writes CSV/JSON reports.

pub mod banded;
pub mod config;
pub mod error;
pub mod fem;
pub mod grid;
pub mod harness;
pub mod krylov;
pub mod rsd;
pub mod sparse;
pub mod tree;

pub use banded::{band_factor, band_solve, BandedFactorization};
pub use config::{Mode, PdeKind, ProblemConfig};
pub use error::{Error, Result};
pub use fem::{assemble, element_matrix, manufactured_problem, split_interface_matrix, PdeCoefficients};
pub use grid::{build_grid, Grid};
pub use harness::{run_experiment, sweep, verify_small, Problem, SolveReport, SweepOutcome, Verdict};
pub use krylov::{gmres_fixed_steps, gmres_flexible, Identity, KrylovStats, LinearOperator, Termination};
pub use rsd::{rsd_setup, InnerSolve, RsdCounters, RsdPreconditioner, RsdSetup, SchurNodeData, Side};
pub use sparse::{extract_block, spmv, CsrMatrix};
pub use tree::{build_tree, compute_index_sets, DomainTree, TreeNode};
