//! Bilinear finite element assembly of the benchmark operators on the
//! structured grid, with homogeneous Dirichlet nodes eliminated.

use std::ops::Range;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::PdeKind;
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::sparse::CsrMatrix;
use crate::tree::TreeNode;

pub const LAME_LAMBDA: f64 = 10.0;
pub const LAME_MU: f64 = 1.0;

/// Coefficients of a (possibly two-field) second order operator
///
/// `-∂x(a_k ∂x u_k) - ∂y(b_k ∂y u_k) + Σ_j r_kj u_j - g ∇(∇·u)_k`
///
/// where the grad-div term is only present for elasticity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PdeCoefficients {
    pub kind: PdeKind,
    /// `(a_k, b_k)` per component.
    pub diffusion: [(f64, f64); 2],
    /// `reaction[k][j]` multiplies field `j` in equation `k`.
    pub reaction: [[f64; 2]; 2],
    /// Weight of `∫(∇·u)(∇·w)` in the bilinear form.
    pub grad_div: f64,
}

impl PdeCoefficients {
    /// Standard coefficients for `kind`. For elasticity the grad-div term
    /// enters with `+(λ + μ)`, giving a symmetric positive definite matrix;
    /// `literal_lame_sign` flips it.
    pub fn new(kind: PdeKind, literal_lame_sign: bool) -> Self {
        let zero = [[0.0; 2]; 2];
        match kind {
            PdeKind::Poisson => PdeCoefficients {
                kind,
                diffusion: [(1.0, 1.0), (0.0, 0.0)],
                reaction: zero,
                grad_div: 0.0,
            },
            PdeKind::WeakCoupled => PdeCoefficients {
                kind,
                diffusion: [(0.01, 1.0), (1.0, 0.01)],
                reaction: [[0.0, 0.01], [-0.01, 0.0]],
                grad_div: 0.0,
            },
            PdeKind::StrongCoupled => PdeCoefficients {
                kind,
                diffusion: [(0.01, 1.0), (1.0, 0.01)],
                reaction: [[0.0, 100.0], [-100.0, 0.0]],
                grad_div: 0.0,
            },
            PdeKind::NavierLame => {
                let gd = LAME_LAMBDA + LAME_MU;
                PdeCoefficients {
                    kind,
                    diffusion: [(LAME_MU, LAME_MU), (LAME_MU, LAME_MU)],
                    reaction: zero,
                    grad_div: if literal_lame_sign { -gd } else { gd },
                }
            }
        }
    }

    pub fn components(&self) -> usize {
        self.kind.components()
    }
}

impl From<PdeKind> for PdeCoefficients {
    fn from(kind: PdeKind) -> Self {
        PdeCoefficients::new(kind, false)
    }
}

/// Reference-element corners, counter-clockwise from the lower left.
const CORNERS: [(f64, f64); 4] = [(-1.0, -1.0), (1.0, -1.0), (1.0, 1.0), (-1.0, 1.0)];

/// Dense `(4c) x (4c)` element matrix for one `hx` by `hy` rectangle,
/// integrated with 2x2 Gauss quadrature. Local DOF `node * c + component`.
pub fn element_matrix(coeffs: &PdeCoefficients, hx: f64, hy: f64) -> Result<Vec<Vec<f64>>> {
    if !(hx > 0.0 && hy > 0.0) {
        return Err(Error::config(format!(
            "element sizes must be positive, got {hx} x {hy}"
        )));
    }
    let c = coeffs.components();
    let n = 4 * c;
    let mut ke = vec![vec![0.0; n]; n];
    let g = 1.0 / 3f64.sqrt();
    let det = hx * hy / 4.0;
    for &xi in &[-g, g] {
        for &eta in &[-g, g] {
            let mut phi = [0.0; 4];
            let mut grad = [[0.0; 2]; 4];
            for (k, &(xk, yk)) in CORNERS.iter().enumerate() {
                phi[k] = 0.25 * (1.0 + xk * xi) * (1.0 + yk * eta);
                grad[k][0] = 0.25 * xk * (1.0 + yk * eta) * 2.0 / hx;
                grad[k][1] = 0.25 * yk * (1.0 + xk * xi) * 2.0 / hy;
            }
            for i in 0..4 {
                for j in 0..4 {
                    let mass = phi[i] * phi[j] * det;
                    for b in 0..c {
                        for a in 0..c {
                            let mut v = coeffs.reaction[b][a] * mass;
                            if a == b {
                                let (ax, ay) = coeffs.diffusion[a];
                                v += (ax * (grad[i][0] * grad[j][0])
                                    + ay * (grad[i][1] * grad[j][1]))
                                    * det;
                            }
                            v += coeffs.grad_div * (grad[i][b] * grad[j][a]) * det;
                            ke[i * c + b][j * c + a] += v;
                        }
                    }
                }
            }
        }
    }
    Ok(ke)
}

/// Global interior-DOF matrix of the whole grid.
pub fn assemble(grid: &Grid, coeffs: &PdeCoefficients) -> Result<CsrMatrix> {
    assemble_element_columns(grid, coeffs, 0..grid.element_columns())
}

/// Sum of the element matrices of element columns `cols` only.
pub fn assemble_element_columns(
    grid: &Grid,
    coeffs: &PdeCoefficients,
    cols: Range<usize>,
) -> Result<CsrMatrix> {
    if coeffs.components() != grid.components {
        return Err(Error::config(format!(
            "{} has {} components but the grid was built for {}",
            coeffs.kind,
            coeffs.components(),
            grid.components
        )));
    }
    if cols.end > grid.element_columns() {
        return Err(Error::IndexOutOfRange {
            index: cols.end,
            dim: grid.element_columns(),
        });
    }
    let ke = element_matrix(coeffs, grid.hx, grid.hy)?;
    let local = 4 * grid.components;
    let mut triplets = Vec::with_capacity(cols.len() * grid.element_rows() * local * local);
    for ex in cols {
        for ey in 0..grid.element_rows() {
            let dofs = grid.element_dofs(ex, ey);
            for (p, row) in dofs.iter().enumerate() {
                let Some(i) = *row else { continue };
                for (q, col) in dofs.iter().enumerate() {
                    if let Some(j) = *col {
                        triplets.push((i, j, ke[p][q]));
                    }
                }
            }
        }
    }
    let n = grid.num_dofs();
    Ok(CsrMatrix::from_triplets(n, n, &triplets))
}

/// Contributions to the interface block of `node` from the elements left
/// and right of its interface column: `(K_II^(L), K_II^(R))`.
pub fn split_interface_matrix(
    grid: &Grid,
    coeffs: &PdeCoefficients,
    node: &TreeNode,
) -> Result<(CsrMatrix, CsrMatrix)> {
    let col = node.interface_col.ok_or(Error::NotInterior(node.id))?;
    // Only the element columns touching the interface reach I x I.
    let left = assemble_element_columns(grid, coeffs, col - 1..col)?;
    let right = assemble_element_columns(grid, coeffs, col..col + 1)?;
    Ok((
        left.extract_block(&node.idx_i, &node.idx_i)?,
        right.extract_block(&node.idx_i, &node.idx_i)?,
    ))
}

/// Draws `u*` uniformly from `[-1, 1]` and returns `(u*, K u*)`.
pub fn manufactured_problem(k: &CsrMatrix, seed: u64) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u_star: Vec<f64> = (0..k.ncols()).map(|_| rng.random_range(-1.0..=1.0)).collect();
    let f = k.spmv(&u_star)?;
    Ok((u_star, f))
}
