//! Binary tree of nested sub-domains.
//!
//! Nodes are stored in heap order: the root is node 0 and the children of
//! node `i` are `2i + 1` and `2i + 2`. With `P` leaves the leaves occupy ids
//! `P - 1 ..= 2P - 2`, left to right, and leaf `k` (its rank) is owned by
//! logical processor `k`.

use std::ops::Range;

use crate::error::{Error, Result};
use crate::grid::Grid;

#[derive(Debug, Clone, PartialEq)]
pub struct TreeNode {
    pub id: usize,
    /// Depth from the root.
    pub level: usize,
    /// Height of the subtree below this node; 0 for leaves.
    pub height_below: usize,
    pub children: Option<(usize, usize)>,
    /// Ranks of the leaves covered by this node.
    pub leaf_span: Range<usize>,
    /// Global node columns covered, including both bounding columns.
    /// Empty until [`compute_index_sets`] has run.
    pub x_range: Range<usize>,
    /// Node column of the interface between the two children.
    pub interface_col: Option<usize>,
    pub idx_vl: Vec<usize>,
    pub idx_vr: Vec<usize>,
    pub idx_i: Vec<usize>,
    /// All DOFs strictly inside `x_range`; for leaves this is the leaf block.
    pub dofs: Vec<usize>,
    /// Rightmost leaf of the left subtree (node id).
    pub hat_left_leaf: Option<usize>,
    /// Leftmost leaf of the right subtree (node id).
    pub hat_right_leaf: Option<usize>,
    pub owner_rank: usize,
}

impl TreeNode {
    pub fn is_leaf(&self) -> bool {
        self.children.is_none()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DomainTree {
    pub nodes: Vec<TreeNode>,
    /// Number of leaves.
    pub p: usize,
    pub height: usize,
}

pub fn build_tree(p: usize) -> Result<DomainTree> {
    if p < 2 || !p.is_power_of_two() {
        return Err(Error::config(format!(
            "P must be a power of two >= 2, got {p}"
        )));
    }
    let height = p.trailing_zeros() as usize;
    let count = 2 * p - 1;
    let mut nodes = Vec::with_capacity(count);
    for id in 0..count {
        let level = usize::BITS as usize - 1 - (id + 1).leading_zeros() as usize;
        let height_below = height - level;
        let first_at_level = (1 << level) - 1;
        let width = 1 << height_below;
        let start = (id - first_at_level) * width;
        let children = (height_below > 0).then(|| (2 * id + 1, 2 * id + 2));
        nodes.push(TreeNode {
            id,
            level,
            height_below,
            children,
            leaf_span: start..start + width,
            x_range: 0..0,
            interface_col: None,
            idx_vl: Vec::new(),
            idx_vr: Vec::new(),
            idx_i: Vec::new(),
            dofs: Vec::new(),
            hat_left_leaf: None,
            hat_right_leaf: None,
            owner_rank: 0,
        });
    }
    let mut tree = DomainTree { nodes, p, height };
    for id in 0..count {
        let node = &tree.nodes[id];
        match node.children {
            None => {
                let rank = node.leaf_span.start;
                tree.nodes[id].owner_rank = rank;
            }
            Some(_) => {
                let mid = node.leaf_span.start + node.leaf_span.len() / 2;
                let left = tree.leaf_id(mid - 1);
                let right = tree.leaf_id(mid);
                let n = &mut tree.nodes[id];
                n.hat_left_leaf = Some(left);
                n.hat_right_leaf = Some(right);
                n.owner_rank = mid - 1;
            }
        }
    }
    Ok(tree)
}

/// Fills in column ranges and the `V_L`, `V_R`, `I` DOF sets of every node.
pub fn compute_index_sets(mut tree: DomainTree, grid: &Grid) -> DomainTree {
    let w = grid.n - 1;
    for node in &mut tree.nodes {
        let first = node.leaf_span.start * w;
        let last = node.leaf_span.end * w;
        node.x_range = first..last + 1;
        node.dofs = grid.dofs_in_columns(first + 1..last);
        if node.children.is_some() {
            let mid = first + (last - first) / 2;
            node.interface_col = Some(mid);
            node.idx_vl = grid.dofs_in_columns(first + 1..mid);
            node.idx_i = grid.dofs_in_columns(mid..mid + 1);
            node.idx_vr = grid.dofs_in_columns(mid + 1..last);
        } else {
            node.interface_col = None;
            node.idx_vl.clear();
            node.idx_vr.clear();
            node.idx_i.clear();
        }
    }
    tree
}

impl DomainTree {
    pub fn root(&self) -> &TreeNode {
        &self.nodes[0]
    }

    pub fn node(&self, id: usize) -> &TreeNode {
        &self.nodes[id]
    }

    /// Node id of the leaf with the given rank.
    pub fn leaf_id(&self, rank: usize) -> usize {
        self.p - 1 + rank
    }

    pub fn leaves(&self) -> impl Iterator<Item = &TreeNode> {
        self.nodes[self.p - 1..].iter()
    }

    pub fn interior_nodes(&self) -> impl Iterator<Item = &TreeNode> {
        self.nodes[..self.p - 1].iter()
    }

    pub(crate) fn interior(&self, id: usize) -> Result<&TreeNode> {
        let node = &self.nodes[id];
        if node.is_leaf() {
            Err(Error::NotInterior(id))
        } else {
            Ok(node)
        }
    }
}
