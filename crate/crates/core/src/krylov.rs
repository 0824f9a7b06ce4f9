//! GMRES drivers: a flexible, right-preconditioned outer solver and the
//! fixed-work inner solver used on the interface systems.
//!
//! Both share one Arnoldi/Givens core. Orthogonalization is modified
//! Gram-Schmidt with a second pass when the new direction is still more than
//! `REORTH_THRESHOLD` away from orthogonal to the basis.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sparse::{dot, norm2};

const REORTH_THRESHOLD: f64 = 1e-8;
const BREAKDOWN_RTOL: f64 = 1e-14;

/// Something that maps `x` to `y = A x`.
pub trait LinearOperator {
    fn apply(&mut self, x: &[f64], y: &mut [f64]) -> Result<()>;
}

impl<F> LinearOperator for F
where
    F: FnMut(&[f64], &mut [f64]) -> Result<()>,
{
    fn apply(&mut self, x: &[f64], y: &mut [f64]) -> Result<()> {
        self(x, y)
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Identity;

impl LinearOperator for Identity {
    fn apply(&mut self, x: &[f64], y: &mut [f64]) -> Result<()> {
        y.copy_from_slice(x);
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Converged,
    MaxIterations,
    Breakdown,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KrylovStats {
    pub iterations: usize,
    /// Residual 2-norms, starting with `‖b‖` (zero initial guess).
    pub residual_history: Vec<f64>,
    pub reason: Termination,
    /// `‖b - A x‖ / ‖b‖` recomputed from the returned iterate.
    pub final_relative_residual: f64,
}

impl KrylovStats {
    pub fn converged(&self) -> bool {
        self.reason == Termination::Converged
    }
}

/// Flexible GMRES with right preconditioning and no restart.
///
/// Each preconditioned direction `z_j = M v_j` is kept, so `apply_m` may
/// change from one application to the next. Convergence is declared on the
/// true relative residual `‖b - A x‖ / ‖b‖ <= tol`.
pub fn gmres_flexible(
    apply_a: &mut dyn LinearOperator,
    apply_m: &mut dyn LinearOperator,
    b: &[f64],
    tol: f64,
    max_it: usize,
) -> Result<(Vec<f64>, KrylovStats)> {
    gmres_core(apply_a, Some(apply_m), b, Some(tol), max_it)
}

/// Exactly `gamma` Arnoldi steps of unpreconditioned GMRES from a zero guess,
/// returning the residual minimizer over the Krylov space. Stops early only on
/// breakdown, in which case the iterate solves the system exactly.
pub fn gmres_fixed_steps(
    apply_s: &mut dyn LinearOperator,
    g: &[f64],
    gamma: usize,
) -> Result<Vec<f64>> {
    if gamma == 0 {
        return Err(Error::config("gamma must be >= 1"));
    }
    Ok(gmres_core(apply_s, None, g, None, gamma)?.0)
}

/// Unpreconditioned GMRES to a relative tolerance.
pub(crate) fn gmres_to_tolerance(
    apply_a: &mut dyn LinearOperator,
    b: &[f64],
    tol: f64,
    max_it: usize,
) -> Result<(Vec<f64>, KrylovStats)> {
    gmres_core(apply_a, None, b, Some(tol), max_it)
}

fn gmres_core(
    apply_a: &mut dyn LinearOperator,
    mut apply_m: Option<&mut dyn LinearOperator>,
    b: &[f64],
    tol: Option<f64>,
    max_it: usize,
) -> Result<(Vec<f64>, KrylovStats)> {
    let n = b.len();
    let bnorm = norm2(b);
    if bnorm == 0.0 {
        return Ok((
            vec![0.0; n],
            KrylovStats {
                iterations: 0,
                residual_history: vec![0.0],
                reason: Termination::Converged,
                final_relative_residual: 0.0,
            },
        ));
    }
    let target = tol.map(|t| t * bnorm);

    let mut basis: Vec<Vec<f64>> = vec![b.iter().map(|v| v / bnorm).collect()];
    let mut directions: Vec<Vec<f64>> = Vec::new();
    // Column j of the (already rotated) Hessenberg matrix, length j + 1.
    let mut r_cols: Vec<Vec<f64>> = Vec::new();
    let mut rotations: Vec<(f64, f64)> = Vec::new();
    let mut s = vec![bnorm];
    let mut history = vec![bnorm];
    let mut w = vec![0.0; n];

    let mut iterations = 0;
    let mut reason = Termination::MaxIterations;
    let mut solution = None;

    for j in 0..max_it {
        let z = match apply_m.as_deref_mut() {
            Some(m) => {
                let mut z = vec![0.0; n];
                m.apply(&basis[j], &mut z)?;
                Some(z)
            }
            None => None,
        };
        apply_a.apply(z.as_deref().unwrap_or(&basis[j]), &mut w)?;
        if let Some(z) = z {
            directions.push(z);
        }

        let wnorm0 = norm2(&w);
        let mut h = vec![0.0; j + 2];
        for (i, v) in basis.iter().enumerate() {
            let c = dot(v, &w);
            h[i] = c;
            axpy(-c, v, &mut w);
        }
        let mut wnorm = norm2(&w);
        if wnorm > 0.0 {
            let defect = basis
                .iter()
                .map(|v| dot(v, &w).abs())
                .fold(0.0f64, f64::max)
                / wnorm;
            if defect > REORTH_THRESHOLD {
                for (i, v) in basis.iter().enumerate() {
                    let c = dot(v, &w);
                    h[i] += c;
                    axpy(-c, v, &mut w);
                }
                wnorm = norm2(&w);
            }
        }
        h[j + 1] = wnorm;

        for (i, &(cs, sn)) in rotations.iter().enumerate() {
            let (a, b) = (h[i], h[i + 1]);
            h[i] = cs * a + sn * b;
            h[i + 1] = -sn * a + cs * b;
        }
        let (cs, sn) = givens(h[j], h[j + 1]);
        h[j] = cs * h[j] + sn * h[j + 1];
        h.truncate(j + 1);
        rotations.push((cs, sn));
        let sj = s[j];
        s[j] = cs * sj;
        s.push(-sn * sj);
        r_cols.push(h);
        iterations = j + 1;

        let estimate = s[j + 1].abs();
        history.push(estimate);

        let broke_down = wnorm <= BREAKDOWN_RTOL * wnorm0 || wnorm == 0.0;
        if let Some(target) = target {
            if estimate <= target {
                let x = combine(&r_cols, &s, directions_or_basis(&directions, &basis), n);
                let true_res = residual_norm(apply_a, b, &x)?;
                if true_res <= target {
                    reason = Termination::Converged;
                    solution = Some((x, true_res));
                    break;
                }
            }
        }
        if broke_down {
            reason = Termination::Breakdown;
            break;
        }
        if j + 1 < max_it {
            basis.push(w.iter().map(|v| v / wnorm).collect());
        }
    }

    let (x, final_res) = match solution {
        Some(found) => found,
        None => {
            let x = combine(&r_cols, &s, directions_or_basis(&directions, &basis), n);
            let res = if tol.is_some() {
                residual_norm(apply_a, b, &x)?
            } else {
                // fixed-step mode must not spend extra operator applications
                s[iterations].abs()
            };
            (x, res)
        }
    };
    Ok((
        x,
        KrylovStats {
            iterations,
            residual_history: history,
            reason,
            final_relative_residual: final_res / bnorm,
        },
    ))
}

fn directions_or_basis<'a>(directions: &'a [Vec<f64>], basis: &'a [Vec<f64>]) -> &'a [Vec<f64>] {
    if directions.is_empty() {
        basis
    } else {
        directions
    }
}

/// `x = Σ y_i d_i` with `R y = s` solved by back substitution.
fn combine(r_cols: &[Vec<f64>], s: &[f64], dirs: &[Vec<f64>], n: usize) -> Vec<f64> {
    let k = r_cols.len();
    let mut y = vec![0.0; k];
    for i in (0..k).rev() {
        let mut acc = s[i];
        for (jj, yj) in y.iter().enumerate().skip(i + 1) {
            acc -= r_cols[jj][i] * yj;
        }
        y[i] = acc / r_cols[i][i];
    }
    let mut x = vec![0.0; n];
    for (yi, d) in y.iter().zip(dirs) {
        axpy(*yi, d, &mut x);
    }
    x
}

fn residual_norm(apply_a: &mut dyn LinearOperator, b: &[f64], x: &[f64]) -> Result<f64> {
    let mut ax = vec![0.0; b.len()];
    apply_a.apply(x, &mut ax)?;
    Ok(b.iter().zip(&ax).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt())
}

fn givens(a: f64, b: f64) -> (f64, f64) {
    if b == 0.0 {
        (1.0, 0.0)
    } else {
        let r = a.hypot(b);
        (a / r, b / r)
    }
}

#[inline]
pub(crate) fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}
