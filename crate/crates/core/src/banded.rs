//! Banded LU factorization with partial pivoting for the leaf sub-domain
//! matrices.
//!
//! Row `i` is stored as a dense window over columns `i - kl ..= i + kl + ku`;
//! the extra `kl` columns hold the fill that row interchanges push into `U`.
//! Multipliers stay where they were computed and pivots are replayed during
//! the forward solve, as in LAPACK's `gbtrf`/`gbtrs`.

use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;

#[derive(Debug, Clone, PartialEq)]
pub struct BandedFactorization {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    band: Vec<f64>,
    pivots: Vec<usize>,
}

impl BandedFactorization {
    pub fn dim(&self) -> usize {
        self.n
    }

    /// `(lower, upper)` bandwidth of the factorized matrix.
    pub fn bandwidths(&self) -> (usize, usize) {
        (self.kl, self.ku)
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> usize {
        i * self.width + (j + self.kl - i)
    }

    /// Solves `A x = b` in place.
    pub fn solve_in_place(&self, x: &mut [f64]) -> Result<()> {
        if x.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: x.len(),
            });
        }
        let n = self.n;
        for k in 0..n {
            let p = self.pivots[k];
            if p != k {
                x.swap(k, p);
            }
            let xk = x[k];
            if xk != 0.0 {
                for i in k + 1..(k + self.kl + 1).min(n) {
                    x[i] -= self.band[self.at(i, k)] * xk;
                }
            }
        }
        let reach = self.kl + self.ku;
        for k in (0..n).rev() {
            let base = self.at(k, k);
            let end = (k + reach + 1).min(n);
            let mut acc = x[k];
            for (off, xj) in x[k + 1..end].iter().enumerate() {
                acc -= self.band[base + 1 + off] * xj;
            }
            x[k] = acc / self.band[base];
        }
        Ok(())
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x)?;
        Ok(x)
    }
}

pub fn band_factor(a: &CsrMatrix) -> Result<BandedFactorization> {
    if a.nrows() != a.ncols() {
        return Err(Error::DimensionMismatch {
            expected: a.nrows(),
            got: a.ncols(),
        });
    }
    let n = a.nrows();
    let (kl, ku) = a.bandwidths();
    let width = 2 * kl + ku + 1;
    let mut f = BandedFactorization {
        n,
        kl,
        ku,
        width,
        band: vec![0.0; n * width],
        pivots: vec![0; n],
    };
    for i in 0..n {
        let (cols, vals) = a.row(i);
        for (&j, &v) in cols.iter().zip(vals) {
            let at = f.at(i, j);
            f.band[at] = v;
        }
    }
    let reach = kl + ku;
    for k in 0..n {
        let last_row = (k + kl).min(n - 1);
        let mut p = k;
        let mut best = f.band[f.at(k, k)].abs();
        for i in k + 1..=last_row {
            let v = f.band[f.at(i, k)].abs();
            if v > best {
                best = v;
                p = i;
            }
        }
        f.pivots[k] = p;
        if best == 0.0 || !best.is_finite() {
            return Err(Error::SingularPivot { row: k });
        }
        let last_col = (k + reach).min(n - 1);
        if p != k {
            for j in k..=last_col {
                let (a, b) = (f.at(k, j), f.at(p, j));
                f.band.swap(a, b);
            }
        }
        let pivot = f.band[f.at(k, k)];
        for i in k + 1..=last_row {
            let ik = f.at(i, k);
            let l = f.band[ik] / pivot;
            f.band[ik] = l;
            if l == 0.0 {
                continue;
            }
            let krow = f.at(k, k + 1);
            let irow = f.at(i, k + 1);
            for off in 0..last_col.saturating_sub(k) {
                let u = f.band[krow + off];
                f.band[irow + off] -= l * u;
            }
        }
    }
    Ok(f)
}

pub fn band_solve(f: &BandedFactorization, b: &[f64]) -> Result<Vec<f64>> {
    f.solve(b)
}
