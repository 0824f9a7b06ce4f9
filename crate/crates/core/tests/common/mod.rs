//! Dense reference computations shared by the integration tests. Nothing in
//! here goes through the sparse/banded/RSD code paths it is used to check.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rsd_core::harness::Problem;
use rsd_core::{element_matrix, CsrMatrix, PdeCoefficients, PdeKind, ProblemConfig};

pub fn problem(kind: PdeKind, n: usize, p: usize, gamma: usize) -> Problem {
    Problem::build(&ProblemConfig::new(kind, n, p, gamma)).unwrap()
}

pub fn dense(k: &CsrMatrix) -> DMatrix<f64> {
    let d = k.to_dense();
    DMatrix::from_fn(k.nrows(), k.ncols(), |i, j| d[i][j])
}

pub fn sub(m: &DMatrix<f64>, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), cols.len(), |i, j| m[(rows[i], cols[j])])
}

pub fn solve(m: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    m.clone().lu().solve(b).expect("nonsingular")
}

pub fn inverse(m: &DMatrix<f64>) -> DMatrix<f64> {
    m.clone().try_inverse().expect("nonsingular")
}

pub fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let d: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    let s: f64 = b.iter().map(|y| y * y).sum::<f64>().sqrt();
    if s == 0.0 {
        d
    } else {
        d / s
    }
}

/// Interior DOF of node `(ix, iy)`, computed from the numbering formula
/// rather than the grid's map: column by column, bottom to top, components
/// interleaved.
pub fn formula_dof(ix: usize, iy: usize, comp: usize, nx: usize, ny: usize, c: usize) -> Option<usize> {
    if ix == 0 || iy == 0 || ix == nx - 1 || iy == ny - 1 {
        None
    } else {
        Some(((ix - 1) * (ny - 2) + (iy - 1)) * c + comp)
    }
}

/// Dense global assembly by direct scatter of element matrices.
pub fn dense_assembly(kind: PdeKind, n: usize, p: usize) -> DMatrix<f64> {
    let coeffs = PdeCoefficients::from(kind);
    let h = 1.0 / (n - 1) as f64;
    let ke = element_matrix(&coeffs, h, h).unwrap();
    let c = kind.components();
    let nx = p * (n - 1) + 1;
    let ny = n;
    let dim = (nx - 2) * (ny - 2) * c;
    let mut k = DMatrix::zeros(dim, dim);
    for ex in 0..nx - 1 {
        for ey in 0..ny - 1 {
            let corners = [(ex, ey), (ex + 1, ey), (ex + 1, ey + 1), (ex, ey + 1)];
            for (a, &(ax, ay)) in corners.iter().enumerate() {
                for ca in 0..c {
                    let Some(i) = formula_dof(ax, ay, ca, nx, ny, c) else { continue };
                    for (b, &(bx, by)) in corners.iter().enumerate() {
                        for cb in 0..c {
                            if let Some(j) = formula_dof(bx, by, cb, nx, ny, c) {
                                k[(i, j)] += ke[a * c + ca][b * c + cb];
                            }
                        }
                    }
                }
            }
        }
    }
    k
}

/// Exact Schur complement of the node's interface with respect to its full
/// left and right pseudo sub-domains.
pub fn exact_schur(k: &DMatrix<f64>, vl: &[usize], vr: &[usize], i: &[usize]) -> DMatrix<f64> {
    let kii = sub(k, i, i);
    let kil = sub(k, i, vl);
    let kli = sub(k, vl, i);
    let kir = sub(k, i, vr);
    let kri = sub(k, vr, i);
    let kll = inverse(&sub(k, vl, vl));
    let krr = inverse(&sub(k, vr, vr));
    kii - kil * kll * kli - kir * krr * kri
}

/// Deterministic pseudo-random vector in [-1, 1].
pub fn pseudo_random(n: usize, seed: u64) -> Vec<f64> {
    let mut s = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) | 1;
    (0..n)
        .map(|_| {
            s ^= s << 13;
            s ^= s >> 7;
            s ^= s << 17;
            (s >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
        })
        .collect()
}
