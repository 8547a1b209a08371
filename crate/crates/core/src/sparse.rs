//! Compressed sparse rows and the LSQR least-squares iteration.
//!
//! LSQR started from zero returns the minimum-norm least-squares solution,
//! which is what the projection solver needs from its linearized systems.

use rayon::prelude::*;

/// Row-compressed sparse matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    rows: usize,
    cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    vals: Vec<f64>,
}

impl CsrMatrix {
    /// Builds from per-row `(column, value)` lists; duplicate columns are summed.
    pub fn from_rows(cols: usize, rows: Vec<Vec<(usize, f64)>>) -> Self {
        let mut row_ptr = Vec::with_capacity(rows.len() + 1);
        let mut col_idx = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        let n_rows = rows.len();
        for mut row in rows {
            row.sort_by_key(|e| e.0);
            let mut last: Option<usize> = None;
            for (c, v) in row {
                assert!(c < cols, "column {c} out of range");
                if last == Some(c) {
                    *vals.last_mut().unwrap() += v;
                } else {
                    col_idx.push(c);
                    vals.push(v);
                    last = Some(c);
                }
            }
            row_ptr.push(col_idx.len());
        }
        Self {
            rows: n_rows,
            cols,
            row_ptr,
            col_idx,
            vals,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[r.clone()].iter().copied().zip(self.vals[r].iter().copied())
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols);
        (0..self.rows)
            .into_par_iter()
            .map(|i| self.row(i).map(|(c, v)| v * x[c]).sum())
            .collect()
    }

    pub fn transpose(&self) -> Self {
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); self.cols];
        for i in 0..self.rows {
            for (c, v) in self.row(i) {
                rows[c].push((i, v));
            }
        }
        Self::from_rows(self.rows, rows)
    }

    /// Dense row-major copy, for small cross-checks.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut out = vec![vec![0.0; self.cols]; self.rows];
        for (i, row) in out.iter_mut().enumerate() {
            for (c, v) in self.row(i) {
                row[c] += v;
            }
        }
        out
    }
}

fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LsqrStop {
    /// `Ax = b` solved to tolerance.
    Consistent,
    /// Least-squares optimality reached (`A^T r` small).
    LeastSquares,
    /// Right-hand side is zero.
    ZeroRhs,
    IterationLimit,
}

#[derive(Debug, Clone)]
pub struct LsqrOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub stop: LsqrStop,
    pub residual_norm: f64,
}

impl LsqrOutcome {
    pub fn converged(&self) -> bool {
        self.stop != LsqrStop::IterationLimit
    }
}

/// Paige-Saunders LSQR for `min |Ax - b|` from `x = 0`.
pub fn lsqr(a: &CsrMatrix, at: &CsrMatrix, b: &[f64], tol: f64, max_iter: usize) -> LsqrOutcome {
    let n = a.cols();
    let mut x = vec![0.0; n];
    let bnorm = norm2(b);
    if bnorm == 0.0 {
        return LsqrOutcome {
            x,
            iterations: 0,
            stop: LsqrStop::ZeroRhs,
            residual_norm: 0.0,
        };
    }
    let mut u: Vec<f64> = b.iter().map(|v| v / bnorm).collect();
    let mut beta = bnorm;
    let mut v = at.mul_vec(&u);
    let mut alpha = norm2(&v);
    if alpha == 0.0 {
        return LsqrOutcome {
            x,
            iterations: 0,
            stop: LsqrStop::LeastSquares,
            residual_norm: bnorm,
        };
    }
    v.iter_mut().for_each(|e| *e /= alpha);
    let mut w = v.clone();
    let mut phibar = beta;
    let mut rhobar = alpha;
    let mut anorm_sq = 0.0;
    let mut xnorm;

    for it in 1..=max_iter {
        let av = a.mul_vec(&v);
        for (ui, avi) in u.iter_mut().zip(&av) {
            *ui = avi - alpha * *ui;
        }
        beta = norm2(&u);
        if beta > 0.0 {
            u.iter_mut().for_each(|e| *e /= beta);
        }
        anorm_sq += alpha * alpha + beta * beta;
        let atu = at.mul_vec(&u);
        for (vi, ai) in v.iter_mut().zip(&atu) {
            *vi = ai - beta * *vi;
        }
        alpha = norm2(&v);
        if alpha > 0.0 {
            v.iter_mut().for_each(|e| *e /= alpha);
        }

        let rho = rhobar.hypot(beta);
        let c = rhobar / rho;
        let s = beta / rho;
        let theta = s * alpha;
        rhobar = -c * alpha;
        let phi = c * phibar;
        phibar *= s;

        let t1 = phi / rho;
        let t2 = -theta / rho;
        for ((xi, wi), vi) in x.iter_mut().zip(w.iter_mut()).zip(&v) {
            *xi += t1 * *wi;
            *wi = vi + t2 * *wi;
        }

        let anorm = anorm_sq.sqrt();
        xnorm = norm2(&x);
        let rnorm = phibar;
        let arnorm = alpha * c.abs() * phibar;
        if rnorm <= tol * bnorm + tol * anorm * xnorm {
            return LsqrOutcome {
                x,
                iterations: it,
                stop: LsqrStop::Consistent,
                residual_norm: rnorm,
            };
        }
        if arnorm <= tol * anorm * rnorm {
            return LsqrOutcome {
                x,
                iterations: it,
                stop: LsqrStop::LeastSquares,
                residual_norm: rnorm,
            };
        }
    }
    LsqrOutcome {
        x,
        iterations: max_iter,
        stop: LsqrStop::IterationLimit,
        residual_norm: phibar,
    }
}
