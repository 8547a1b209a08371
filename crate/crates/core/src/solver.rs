//! Projection of a nearly isotropic quadrangular mesh onto the zero set of
//! the symplectic density.
//!
//! Each Gauss-Newton step solves `L delta = -mu` in the minimum-norm sense,
//! where `L` is the linearization of `mu` at the current mesh. The rows of `L`
//! always sum to zero (the total density telescopes on a closed torus), so the
//! mean of `mu` is removed before solving.

use std::f64::consts::SQRT_2;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::density::symplectic_density;
use crate::mesh::{facet_corner_indices, quad_c0_distance, QuadMesh};
use crate::sparse::{lsqr, CsrMatrix};

pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITER: usize = 50;
pub const DEFAULT_INNER_TOL: f64 = 1e-12;
pub const DEFAULT_MAX_HALVINGS: usize = 10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolveError {
    #[error("solver tolerance must be positive, got {0}")]
    InvalidTolerance(f64),
    #[error("density residual {residual:e} still above tolerance after {iterations} iterations")]
    MaxIterExceeded { iterations: usize, residual: f64 },
    #[error("inner least-squares solve stagnated after {iterations} iterations at outer step {step}")]
    LinearSolveFailure { step: usize, iterations: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    /// Target for `max |mu|`.
    pub tol: f64,
    pub max_iter: usize,
    /// Relative tolerance of the inner LSQR solve.
    pub inner_tol: f64,
    /// Step halvings allowed when a full step increases the residual.
    pub max_halvings: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
            inner_tol: DEFAULT_INNER_TOL,
            max_halvings: DEFAULT_MAX_HALVINGS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub iterations: usize,
    /// Final `max |mu|`.
    pub residual_c0: f64,
    /// `max_v |rho(v) - tau_0(v)|`.
    pub correction_c0: f64,
    pub converged: bool,
    /// LSQR iterations per outer step.
    pub inner_iterations: Vec<usize>,
}

/// Jacobian of `mu` at `mesh`: one row per facet, one column per vertex
/// coordinate (`vertex * dim + coord`).
///
/// Row `f` is `delta -> omega(U_delta, V) + omega(U, V_delta)`.
pub fn mu_jacobian(mesh: &QuadMesh) -> CsrMatrix {
    let chart = mesh.chart();
    let dim = mesh.dim();
    let c = chart.n() as f64 / SQRT_2;
    let rows = (0..chart.num_cells())
        .into_par_iter()
        .map(|i| {
            let f = chart.cell(i);
            let idx = facet_corner_indices(f);
            let corners = idx.map(|v| mesh.vertex(v));
            let cols = idx.map(|v| chart.linear(v) * dim);
            let u: Vec<f64> = corners[2].iter().zip(&corners[0]).map(|(a, b)| c * (a - b)).collect();
            let v: Vec<f64> = corners[3].iter().zip(&corners[1]).map(|(a, b)| c * (a - b)).collect();
            let mut row = Vec::with_capacity(4 * dim);
            for j in 0..dim / 2 {
                let (x, y) = (2 * j, 2 * j + 1);
                // d/da omega(a, V) = (V_y, -V_x); d/db omega(U, b) = (-U_y, U_x)
                let ga = [v[y], -v[x]];
                let gb = [-u[y], u[x]];
                for (k, g) in [(x, 0), (y, 1)] {
                    row.push((cols[2] + k, c * ga[g]));
                    row.push((cols[0] + k, -c * ga[g]));
                    row.push((cols[3] + k, c * gb[g]));
                    row.push((cols[1] + k, -c * gb[g]));
                }
            }
            row
        })
        .collect();
    CsrMatrix::from_rows(chart.num_cells() * dim, rows)
}

/// The minimum-norm solution of `L delta = -(mu - mean mu)`.
pub fn gauss_newton_step(mesh: &QuadMesh, inner_tol: f64) -> Result<(Vec<f64>, usize), usize> {
    let mu = symplectic_density(mesh);
    let mean = mu.sum() / mu.values().len() as f64;
    let rhs: Vec<f64> = mu.values().iter().map(|m| mean - m).collect();
    let l = mu_jacobian(mesh);
    let lt = l.transpose();
    let max_inner = 20 * l.rows().max(50);
    let out = lsqr(&l, &lt, &rhs, inner_tol, max_inner);
    if out.converged() {
        Ok((out.x, out.iterations))
    } else {
        Err(out.iterations)
    }
}

fn displaced(mesh: &QuadMesh, delta: &[f64], t: f64) -> QuadMesh {
    let mut out = mesh.clone();
    for (x, d) in out.values_mut().iter_mut().zip(delta) {
        *x += t * d;
    }
    out
}

/// Gauss-Newton projection onto `mu = 0` with step halving.
pub fn project_isotropic(
    tau0: &QuadMesh,
    opts: &SolveOptions,
) -> Result<(QuadMesh, SolveReport), SolveError> {
    if !(opts.tol > 0.0) {
        return Err(SolveError::InvalidTolerance(opts.tol));
    }
    let mut mesh = tau0.clone();
    let mut residual = symplectic_density(&mesh).max_abs();
    let mut inner_iterations = Vec::new();
    let mut iterations = 0;
    while residual > opts.tol {
        if iterations == opts.max_iter {
            return Err(SolveError::MaxIterExceeded {
                iterations,
                residual,
            });
        }
        let (delta, inner) = gauss_newton_step(&mesh, opts.inner_tol).map_err(|it| {
            SolveError::LinearSolveFailure {
                step: iterations,
                iterations: it,
            }
        })?;
        inner_iterations.push(inner);
        let mut t = 1.0;
        let mut candidate = displaced(&mesh, &delta, t);
        let mut cand_res = symplectic_density(&candidate).max_abs();
        for _ in 0..opts.max_halvings {
            if cand_res <= residual {
                break;
            }
            t *= 0.5;
            candidate = displaced(&mesh, &delta, t);
            cand_res = symplectic_density(&candidate).max_abs();
        }
        mesh = candidate;
        residual = cand_res;
        iterations += 1;
    }
    let report = SolveReport {
        iterations,
        residual_c0: residual,
        correction_c0: quad_c0_distance(&mesh, tau0),
        converged: true,
        inner_iterations,
    };
    Ok((mesh, report))
}
