//! The global structured grid over the long, thin domain.
//!
//! Nodes are addressed by `(column, row)` with `column` running along the
//! long (x) axis. Interior degrees of freedom are numbered column by column,
//! bottom to top within a column, with the field components of a node stored
//! next to each other. Every node column therefore owns a contiguous block of
//! DOF indices, and a leaf sub-domain matrix is banded with bandwidth close to
//! `(N - 1) * c`.

use std::ops::Range;

use crate::config::ProblemConfig;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    /// Number of leaf sub-domains.
    pub p: usize,
    /// Nodes per dimension of one leaf sub-domain.
    pub n: usize,
    /// Global node count along x, `P * (N - 1) + 1`.
    pub nx: usize,
    /// Global node count along y, equal to `N`.
    pub ny: usize,
    pub hx: f64,
    pub hy: f64,
    /// Scalar fields per node.
    pub components: usize,
    /// One entry per node, true on the Dirichlet boundary.
    pub dirichlet_mask: Vec<bool>,
    /// `(node * components + component)` to interior DOF index.
    pub dof_map: Vec<Option<usize>>,
    num_dofs: usize,
}

pub fn build_grid(config: &ProblemConfig) -> Result<Grid> {
    if config.n < 3 {
        return Err(Error::config(format!("N must be >= 3, got {}", config.n)));
    }
    if config.p < 2 || !config.p.is_power_of_two() {
        return Err(Error::config(format!(
            "P must be a power of two >= 2, got {}",
            config.p
        )));
    }
    let (hx, hy) = config.spacing();
    if !(hx > 0.0 && hy > 0.0) {
        return Err(Error::config("element sizes must be positive"));
    }
    Ok(Grid::new(config.p, config.n, config.components(), hx, hy))
}

impl Grid {
    fn new(p: usize, n: usize, components: usize, hx: f64, hy: f64) -> Self {
        let nx = p * (n - 1) + 1;
        let ny = n;
        let mut dirichlet_mask = vec![false; nx * ny];
        let mut dof_map = vec![None; nx * ny * components];
        let mut next = 0;
        for ix in 0..nx {
            for iy in 0..ny {
                let node = ix * ny + iy;
                let boundary = ix == 0 || ix == nx - 1 || iy == 0 || iy == ny - 1;
                dirichlet_mask[node] = boundary;
                if !boundary {
                    for c in 0..components {
                        dof_map[node * components + c] = Some(next);
                        next += 1;
                    }
                }
            }
        }
        Grid {
            p,
            n,
            nx,
            ny,
            hx,
            hy,
            components,
            dirichlet_mask,
            dof_map,
            num_dofs: next,
        }
    }

    pub fn num_dofs(&self) -> usize {
        self.num_dofs
    }

    pub fn num_nodes(&self) -> usize {
        self.nx * self.ny
    }

    #[inline]
    pub fn node(&self, ix: usize, iy: usize) -> usize {
        ix * self.ny + iy
    }

    #[inline]
    pub fn dof(&self, ix: usize, iy: usize, component: usize) -> Option<usize> {
        self.dof_map[self.node(ix, iy) * self.components + component]
    }

    /// Element columns along x; element `e` spans node columns `e` and `e + 1`.
    pub fn element_columns(&self) -> usize {
        self.nx - 1
    }

    pub fn element_rows(&self) -> usize {
        self.ny - 1
    }

    /// Node columns of leaf `leaf`, end-inclusive boundary columns included.
    pub fn leaf_columns(&self, leaf: usize) -> Range<usize> {
        let w = self.n - 1;
        leaf * w..(leaf + 1) * w + 1
    }

    /// Sorted interior DOFs of all node columns in `cols`.
    pub fn dofs_in_columns(&self, cols: Range<usize>) -> Vec<usize> {
        let mut out = Vec::new();
        for ix in cols {
            for iy in 0..self.ny {
                for c in 0..self.components {
                    if let Some(d) = self.dof(ix, iy, c) {
                        out.push(d);
                    }
                }
            }
        }
        out
    }

    /// The four global node indices of element `(ex, ey)`, counter-clockwise
    /// from the lower-left corner.
    pub fn element_nodes(&self, ex: usize, ey: usize) -> [usize; 4] {
        [
            self.node(ex, ey),
            self.node(ex + 1, ey),
            self.node(ex + 1, ey + 1),
            self.node(ex, ey + 1),
        ]
    }

    /// Interior DOF for each local element DOF (`local_node * c + component`).
    pub fn element_dofs(&self, ex: usize, ey: usize) -> Vec<Option<usize>> {
        let c = self.components;
        let mut out = Vec::with_capacity(4 * c);
        for node in self.element_nodes(ex, ey) {
            for k in 0..c {
                out.push(self.dof_map[node * c + k]);
            }
        }
        out
    }
}
