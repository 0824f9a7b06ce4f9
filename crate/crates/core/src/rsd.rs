//! Recursive Schur decomposition preconditioner.
//!
//! Every interior tree node eliminates the interiors of its two children and
//! approximately solves the interface (Schur complement) system with a fixed
//! number of GMRES steps. The children are solved recursively when computing
//! the reduced right-hand side; inside the Schur MatVec and the back
//! substitution the child solves are replaced by exact solves on the *hat*
//! leaves, the two leaves that touch the node's interface. Those solves only
//! ever see vectors supported next to the interface, which is why one leaf is
//! enough.
//!
//! All vectors handed between the recursive calls are indexed by global DOF.

use serde::{Deserialize, Serialize};

use crate::banded::{band_factor, BandedFactorization};
use crate::error::{Error, Result};
use crate::fem::{split_interface_matrix, PdeCoefficients};
use crate::grid::Grid;
use crate::krylov::{gmres_fixed_steps, gmres_to_tolerance, LinearOperator};
use crate::sparse::CsrMatrix;
use crate::tree::{DomainTree, TreeNode};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// How the interface systems are solved.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InnerSolve {
    /// Exactly this many S-MatVecs per interface solve.
    Fixed(usize),
    /// Unpreconditioned GMRES to a relative tolerance. Only meant for tests
    /// that need (nearly) exact interface solves.
    Tolerance { tol: f64, max_steps: usize },
}

/// Work and communication counters. Per-level vectors are indexed by the
/// tree level of the node that requested the work; base-case leaf solves are
/// booked on the leaf level.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RsdCounters {
    pub leaf_solve_count: usize,
    pub smatvec_count: usize,
    pub point_to_point_message_count: usize,
    /// Leaf solves performed by each leaf, indexed by rank.
    pub per_leaf_solves: Vec<usize>,
    pub per_level_leaf_solves: Vec<usize>,
    pub per_level_smatvecs: Vec<usize>,
    pub per_level_messages: Vec<usize>,
}

impl RsdCounters {
    pub fn new(p: usize, height: usize) -> Self {
        RsdCounters {
            per_leaf_solves: vec![0; p],
            per_level_leaf_solves: vec![0; height + 1],
            per_level_smatvecs: vec![0; height + 1],
            per_level_messages: vec![0; height + 1],
            ..Default::default()
        }
    }

    pub fn reset(&mut self) {
        self.leaf_solve_count = 0;
        self.smatvec_count = 0;
        self.point_to_point_message_count = 0;
        for v in [
            &mut self.per_leaf_solves,
            &mut self.per_level_leaf_solves,
            &mut self.per_level_smatvecs,
            &mut self.per_level_messages,
        ] {
            v.iter_mut().for_each(|c| *c = 0);
        }
    }

    pub fn accumulate(&mut self, other: &RsdCounters) {
        self.leaf_solve_count += other.leaf_solve_count;
        self.smatvec_count += other.smatvec_count;
        self.point_to_point_message_count += other.point_to_point_message_count;
        let pairs = [
            (&mut self.per_leaf_solves, &other.per_leaf_solves),
            (&mut self.per_level_leaf_solves, &other.per_level_leaf_solves),
            (&mut self.per_level_smatvecs, &other.per_level_smatvecs),
            (&mut self.per_level_messages, &other.per_level_messages),
        ];
        for (mine, theirs) in pairs {
            if mine.len() < theirs.len() {
                mine.resize(theirs.len(), 0);
            }
            for (a, b) in mine.iter_mut().zip(theirs) {
                *a += b;
            }
        }
    }

    pub fn max_leaf_solves(&self) -> usize {
        self.per_leaf_solves.iter().copied().max().unwrap_or(0)
    }

    fn leaf_solve(&mut self, rank: usize, level: usize) {
        self.leaf_solve_count += 1;
        self.per_leaf_solves[rank] += 1;
        self.per_level_leaf_solves[level] += 1;
    }

    fn message(&mut self, level: usize) {
        self.point_to_point_message_count += 1;
        self.per_level_messages[level] += 1;
    }
}

#[derive(Debug, Clone)]
pub struct LeafData {
    pub node_id: usize,
    pub rank: usize,
    pub dofs: Vec<usize>,
    pub factor: BandedFactorization,
}

/// Blocks cached for one interior node. "Hat" blocks couple the interface
/// to the hat leaf's interior, in the leaf's local ordering.
#[derive(Debug, Clone)]
pub struct SchurNodeData {
    pub node_id: usize,
    pub level: usize,
    /// Ranks of the hat leaves.
    pub hat_left_rank: usize,
    pub hat_right_rank: usize,
    pub k_lhat_i: CsrMatrix,
    pub k_i_lhat: CsrMatrix,
    pub k_rhat_i: CsrMatrix,
    pub k_i_rhat: CsrMatrix,
    pub k_ii_left: CsrMatrix,
    pub k_ii_right: CsrMatrix,
    /// Positions of the hat leaf DOFs inside `idx_vl` / `idx_vr`.
    hat_pos_left: Vec<usize>,
    hat_pos_right: Vec<usize>,
}

/// Everything extracted and factorized ahead of the first application.
#[derive(Debug, Clone)]
pub struct RsdSetup {
    pub tree: DomainTree,
    /// Indexed by rank.
    pub leaves: Vec<LeafData>,
    /// Indexed by interior node id.
    pub nodes: Vec<SchurNodeData>,
    dim: usize,
}

pub fn rsd_setup(
    k: &CsrMatrix,
    tree: &DomainTree,
    grid: &Grid,
    coeffs: &PdeCoefficients,
) -> Result<RsdSetup> {
    let dim = grid.num_dofs();
    if k.nrows() != dim || k.ncols() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: k.nrows(),
        });
    }
    if tree.root().dofs.len() != dim {
        return Err(Error::config("tree index sets were not computed for this grid"));
    }
    let mut leaves = Vec::with_capacity(tree.p);
    for leaf in tree.leaves() {
        let rank = leaf.owner_rank;
        let block = k.extract_block(&leaf.dofs, &leaf.dofs)?;
        let factor = band_factor(&block).map_err(|e| Error::SingularLeaf {
            leaf: rank,
            source: Box::new(e),
        })?;
        leaves.push(LeafData {
            node_id: leaf.id,
            rank,
            dofs: leaf.dofs.clone(),
            factor,
        });
    }
    let mut nodes = Vec::with_capacity(tree.p - 1);
    for node in tree.interior_nodes() {
        let hl = tree.node(node.hat_left_leaf.expect("interior node has hats"));
        let hr = tree.node(node.hat_right_leaf.expect("interior node has hats"));
        let (k_ii_left, k_ii_right) = split_interface_matrix(grid, coeffs, node)?;
        nodes.push(SchurNodeData {
            node_id: node.id,
            level: node.level,
            hat_left_rank: hl.owner_rank,
            hat_right_rank: hr.owner_rank,
            k_lhat_i: k.extract_block(&hl.dofs, &node.idx_i)?,
            k_i_lhat: k.extract_block(&node.idx_i, &hl.dofs)?,
            k_rhat_i: k.extract_block(&hr.dofs, &node.idx_i)?,
            k_i_rhat: k.extract_block(&node.idx_i, &hr.dofs)?,
            k_ii_left,
            k_ii_right,
            hat_pos_left: positions(&node.idx_vl, &hl.dofs),
            hat_pos_right: positions(&node.idx_vr, &hr.dofs),
        });
    }
    Ok(RsdSetup {
        tree: tree.clone(),
        leaves,
        nodes,
        dim,
    })
}

/// Position of each element of `subset` inside the sorted `set`.
fn positions(set: &[usize], subset: &[usize]) -> Vec<usize> {
    subset
        .iter()
        .map(|d| set.binary_search(d).expect("hat leaf lies inside its side"))
        .collect()
}

fn gather(src: &[f64], idx: &[usize]) -> Vec<f64> {
    idx.iter().map(|&i| src[i]).collect()
}

impl RsdSetup {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn counters(&self) -> RsdCounters {
        RsdCounters::new(self.tree.p, self.tree.height)
    }

    fn interior(&self, id: usize) -> Result<(&TreeNode, &SchurNodeData)> {
        let node = self.tree.interior(id)?;
        Ok((node, &self.nodes[id]))
    }

    fn hat(&self, data: &SchurNodeData, side: Side) -> &LeafData {
        match side {
            Side::Left => &self.leaves[data.hat_left_rank],
            Side::Right => &self.leaves[data.hat_right_rank],
        }
    }

    /// Restricts `w`, indexed like the node's `V_L` or `V_R` set, to the hat
    /// leaf on that side (leaf-local ordering).
    pub fn restrict_hat(&self, node_id: usize, side: Side, w: &[f64]) -> Result<Vec<f64>> {
        let (node, data) = self.interior(node_id)?;
        let (set, pos) = match side {
            Side::Left => (&node.idx_vl, &data.hat_pos_left),
            Side::Right => (&node.idx_vr, &data.hat_pos_right),
        };
        if w.len() != set.len() {
            return Err(Error::DimensionMismatch {
                expected: set.len(),
                got: w.len(),
            });
        }
        Ok(gather(w, pos))
    }

    /// Embeds a hat-leaf vector into `V_L` or `V_R`, zero elsewhere.
    pub fn prolong_hat(&self, node_id: usize, side: Side, v: &[f64]) -> Result<Vec<f64>> {
        let (node, data) = self.interior(node_id)?;
        let (set, pos) = match side {
            Side::Left => (&node.idx_vl, &data.hat_pos_left),
            Side::Right => (&node.idx_vr, &data.hat_pos_right),
        };
        if v.len() != pos.len() {
            return Err(Error::DimensionMismatch {
                expected: pos.len(),
                got: v.len(),
            });
        }
        let mut out = vec![0.0; set.len()];
        for (&p, &x) in pos.iter().zip(v) {
            out[p] = x;
        }
        Ok(out)
    }

    fn leaf_solve(
        &self,
        leaf: &LeafData,
        level: usize,
        rhs: &mut [f64],
        counters: &mut RsdCounters,
    ) -> Result<()> {
        counters.leaf_solve(leaf.rank, level);
        leaf.factor.solve_in_place(rhs)
    }

    /// One approximate Schur complement product `y = S x` at an interior node.
    pub fn schur_matvec(
        &self,
        node_id: usize,
        x: &[f64],
        counters: &mut RsdCounters,
    ) -> Result<Vec<f64>> {
        let (node, _) = self.interior(node_id)?;
        if x.len() != node.idx_i.len() {
            return Err(Error::DimensionMismatch {
                expected: node.idx_i.len(),
                got: x.len(),
            });
        }
        let mut y = vec![0.0; x.len()];
        self.schur_matvec_into(node_id, x, &mut y, counters)?;
        Ok(y)
    }

    fn schur_matvec_into(
        &self,
        node_id: usize,
        x: &[f64],
        y: &mut [f64],
        counters: &mut RsdCounters,
    ) -> Result<()> {
        let data = &self.nodes[node_id];
        let level = data.level;
        counters.smatvec_count += 1;
        counters.per_level_smatvecs[level] += 1;

        // x: L̂ -> R̂
        counters.message(level);
        let mut y_left = data.k_ii_left.spmv(x)?;
        let mut y_right = data.k_ii_right.spmv(x)?;

        let mut w_left = data.k_lhat_i.spmv(x)?;
        let mut w_right = data.k_rhat_i.spmv(x)?;
        self.leaf_solve(self.hat(data, Side::Left), level, &mut w_left, counters)?;
        self.leaf_solve(self.hat(data, Side::Right), level, &mut w_right, counters)?;
        data.k_i_lhat.mul_add(-1.0, &w_left, &mut y_left);
        data.k_i_rhat.mul_add(-1.0, &w_right, &mut y_right);

        // y^(R̂): R̂ -> L̂
        counters.message(level);
        for ((out, l), r) in y.iter_mut().zip(&y_left).zip(&y_right) {
            *out = l + r;
        }
        Ok(())
    }

    fn solve_interface(
        &self,
        node_id: usize,
        g: &[f64],
        inner: InnerSolve,
        counters: &mut RsdCounters,
    ) -> Result<Vec<f64>> {
        let mut op = |x: &[f64], y: &mut [f64]| self.schur_matvec_into(node_id, x, y, counters);
        match inner {
            InnerSolve::Fixed(gamma) => gmres_fixed_steps(&mut op, g, gamma),
            InnerSolve::Tolerance { tol, max_steps } => {
                Ok(gmres_to_tolerance(&mut op, g, tol, max_steps)?.0)
            }
        }
    }

    /// Approximately solves `K_VV u = f` on the DOF set of `node_id`, reading
    /// `f` and writing `u` at global DOF positions.
    fn apply_node(
        &self,
        node_id: usize,
        f: &[f64],
        u: &mut [f64],
        inner: InnerSolve,
        counters: &mut RsdCounters,
    ) -> Result<()> {
        let node = self.tree.node(node_id);
        let Some((left, right)) = node.children else {
            let leaf = &self.leaves[node.owner_rank];
            let mut local = gather(f, &leaf.dofs);
            self.leaf_solve(leaf, node.level, &mut local, counters)?;
            for (&d, v) in leaf.dofs.iter().zip(local) {
                u[d] = v;
            }
            return Ok(());
        };
        self.apply_node(left, f, u, inner, counters)?;
        self.apply_node(right, f, u, inner, counters)?;

        let data = &self.nodes[node_id];
        let level = node.level;
        let hat_l = self.hat(data, Side::Left);
        let hat_r = self.hat(data, Side::Right);

        let v_left = gather(u, &hat_l.dofs);
        let v_right = gather(u, &hat_r.dofs);
        let mut g = gather(f, &node.idx_i);
        data.k_i_lhat.mul_add(-1.0, &v_left, &mut g);
        // g^(R̂): R̂ -> L̂
        counters.message(level);
        data.k_i_rhat.mul_add(-1.0, &v_right, &mut g);

        let u_i = self.solve_interface(node_id, &g, inner, counters)?;

        // û_I: L̂ -> R̂
        counters.message(level);
        let mut z_left = data.k_lhat_i.spmv(&u_i)?;
        let mut z_right = data.k_rhat_i.spmv(&u_i)?;
        self.leaf_solve(hat_l, level, &mut z_left, counters)?;
        self.leaf_solve(hat_r, level, &mut z_right, counters)?;
        for (&d, z) in hat_l.dofs.iter().zip(&z_left) {
            u[d] -= z;
        }
        for (&d, z) in hat_r.dofs.iter().zip(&z_right) {
            u[d] -= z;
        }
        for (&d, v) in node.idx_i.iter().zip(&u_i) {
            u[d] = *v;
        }
        Ok(())
    }

    /// Applies the preconditioner on the sub-tree rooted at `node_id`. `f`
    /// and the result are indexed by the node's DOF set.
    pub fn rsd_apply(
        &self,
        node_id: usize,
        f: &[f64],
        inner: InnerSolve,
        counters: &mut RsdCounters,
    ) -> Result<Vec<f64>> {
        let node = self.tree.node(node_id);
        if f.len() != node.dofs.len() {
            return Err(Error::DimensionMismatch {
                expected: node.dofs.len(),
                got: f.len(),
            });
        }
        let mut f_global = vec![0.0; self.dim];
        for (&d, &v) in node.dofs.iter().zip(f) {
            f_global[d] = v;
        }
        let mut u_global = vec![0.0; self.dim];
        self.apply_node(node_id, &f_global, &mut u_global, inner, counters)?;
        Ok(gather(&u_global, &node.dofs))
    }

    /// Applies the preconditioner to a full-length vector.
    pub fn apply_root(
        &self,
        f: &[f64],
        u: &mut [f64],
        inner: InnerSolve,
        counters: &mut RsdCounters,
    ) -> Result<()> {
        for len in [f.len(), u.len()] {
            if len != self.dim {
                return Err(Error::DimensionMismatch {
                    expected: self.dim,
                    got: len,
                });
            }
        }
        u.iter_mut().for_each(|x| *x = 0.0);
        self.apply_node(0, f, u, inner, counters)
    }
}

/// The RSD preconditioner as an operator for the outer Krylov solver.
pub struct RsdPreconditioner<'a> {
    setup: &'a RsdSetup,
    inner: InnerSolve,
    /// Counters of the most recent application.
    pub last: RsdCounters,
    /// Counters summed over all applications.
    pub total: RsdCounters,
    pub applications: usize,
}

impl<'a> RsdPreconditioner<'a> {
    pub fn new(setup: &'a RsdSetup, inner: InnerSolve) -> Self {
        RsdPreconditioner {
            setup,
            inner,
            last: setup.counters(),
            total: setup.counters(),
            applications: 0,
        }
    }
}

impl LinearOperator for RsdPreconditioner<'_> {
    fn apply(&mut self, x: &[f64], y: &mut [f64]) -> Result<()> {
        self.last.reset();
        self.setup.apply_root(x, y, self.inner, &mut self.last)?;
        self.total.accumulate(&self.last);
        self.applications += 1;
        Ok(())
    }
}
