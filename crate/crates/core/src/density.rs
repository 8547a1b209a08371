//! Discrete symplectic geometry of quadrangular meshes.
//!
//! Each facet carries the two renormalized diagonals of its quadrilateral,
//! `U = (N / sqrt 2)(A_2 - A_0)` and `V = (N / sqrt 2)(A_3 - A_1)`, and the
//! symplectic density `mu = omega(U, V)`. The Liouville integral around the
//! facet quadrilateral equals `mu / N^2`, so a mesh is isotropic exactly when
//! `mu` vanishes on every facet.
//!
//! Weak norms only use finite differences along the diagonal translations
//! `T_u` and `T_v`, which generate an index-two sublattice of the grid.

use std::f64::consts::SQRT_2;

use nalgebra::Vector2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::lattice::{translate, CellIndex, Chart, Translation};
use crate::mesh::{FacetField, QuadMesh};
use crate::symplectic::{liouville_segment, omega};

/// Facet count above which the Hölder seminorm is estimated from random pairs.
pub const EXACT_HOLDER_LIMIT: usize = 4096;
/// Number of random pairs used above [`EXACT_HOLDER_LIMIT`].
pub const SAMPLED_HOLDER_PAIRS: usize = 100_000;
pub const DEFAULT_HOLDER_SEED: u64 = 0x5EED;
pub const DEFAULT_ALPHA: f64 = 0.5;

/// Renormalized diagonals `(U, V)` of facet `f`.
pub fn diagonals(mesh: &QuadMesh, f: CellIndex) -> (Vec<f64>, Vec<f64>) {
    let c = mesh.chart().n() as f64 / SQRT_2;
    let [a0, a1, a2, a3] = mesh.facet_corners(f);
    let u = a2.iter().zip(&a0).map(|(p, q)| c * (p - q)).collect();
    let v = a3.iter().zip(&a1).map(|(p, q)| c * (p - q)).collect();
    (u, v)
}

/// `mu(f) = omega(U(f), V(f))` for every canonical facet.
pub fn symplectic_density(mesh: &QuadMesh) -> FacetField {
    let chart = mesh.chart();
    let values = (0..chart.num_cells())
        .into_par_iter()
        .map(|i| {
            let (u, v) = diagonals(mesh, chart.cell(i));
            omega(&u, &v)
        })
        .collect();
    FacetField::new(chart.clone(), values)
}

/// Integral of the Liouville form `sum_j x_j dy_j` along the closed polygon
/// through `points` (the last point connects back to the first).
pub fn liouville_polygon<P: AsRef<[f64]>>(points: &[P]) -> f64 {
    assert!(points.len() >= 3, "a polygon needs at least three points");
    let m = points.len();
    (0..m)
        .map(|i| liouville_segment(points[i].as_ref(), points[(i + 1) % m].as_ref()))
        .sum()
}

/// Liouville integral around the quadrilateral of every facet.
pub fn facet_liouville(mesh: &QuadMesh) -> FacetField {
    let chart = mesh.chart();
    let values = (0..chart.num_cells())
        .into_par_iter()
        .map(|i| liouville_polygon(&mesh.facet_corners(chart.cell(i))))
        .collect();
    FacetField::new(chart.clone(), values)
}

/// Diagonal finite difference `(N / sqrt 2)(phi o T - phi)`.
pub fn finite_difference(field: &FacetField, dir: Translation) -> FacetField {
    assert!(
        matches!(dir, Translation::U | Translation::V),
        "weak finite differences are only defined along T_u and T_v"
    );
    let chart = field.chart();
    let c = chart.n() as f64 / SQRT_2;
    FacetField::from_fn(chart.clone(), |f| {
        c * (field.get(translate(f, dir, 1)) - field.get(f))
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WeakNorm {
    C0,
    C1w,
    /// `C^{0,alpha}_w` with `alpha` in `(0, 1)`.
    C0AlphaW(f64),
}

pub fn weak_norm(field: &FacetField, kind: WeakNorm) -> f64 {
    weak_norm_seeded(field, kind, DEFAULT_HOLDER_SEED)
}

/// As [`weak_norm`], with an explicit seed for the sampled Hölder regime.
pub fn weak_norm_seeded(field: &FacetField, kind: WeakNorm, seed: u64) -> f64 {
    let c0 = field.max_abs();
    match kind {
        WeakNorm::C0 => c0,
        WeakNorm::C1w => {
            let du = finite_difference(field, Translation::U).max_abs();
            let dv = finite_difference(field, Translation::V).max_abs();
            c0 + du.max(dv)
        }
        WeakNorm::C0AlphaW(alpha) => {
            assert!(alpha > 0.0 && alpha < 1.0, "Hölder exponent must lie in (0, 1)");
            c0 + holder_seminorm(field, alpha, seed)
        }
    }
}

/// Distance between facet centers of the same diagonal-parity class,
/// minimized over period translates.
///
/// When parity does not descend to the quotient, translates are restricted
/// to those landing in the parity class of the first facet.
struct FacetMetric {
    centers: Vec<Vector2<f64>>,
    parity: Vec<i64>,
    gamma: nalgebra::Matrix2<f64>,
    gamma_inv: nalgebra::Matrix2<f64>,
    period_parity: [i64; 2],
    window: i64,
}

impl FacetMetric {
    fn new(chart: &Chart) -> Self {
        let centers = chart.cells().map(|f| chart.facet_center(f)).collect();
        let parity = chart.cells().map(|f| f.parity()).collect();
        let m = chart.m_matrix();
        let gamma = *chart.gamma_basis();
        Self {
            centers,
            parity,
            gamma,
            gamma_inv: gamma.try_inverse().expect("chart basis is invertible"),
            period_parity: [
                (m[0][0] + m[1][0]).rem_euclid(2),
                (m[0][1] + m[1][1]).rem_euclid(2),
            ],
            window: if chart.parity_descends() { 1 } else { 2 },
        }
    }

    fn distance(&self, i: usize, j: usize) -> Option<f64> {
        let delta = self.centers[j] - self.centers[i];
        let base = self.gamma_inv * delta;
        let (b0, b1) = (-base[0].round() as i64, -base[1].round() as i64);
        let want = (self.parity[i] - self.parity[j]).rem_euclid(2);
        let mut best: Option<f64> = None;
        for w0 in b0 - self.window..=b0 + self.window {
            for w1 in b1 - self.window..=b1 + self.window {
                let par = (w0 * self.period_parity[0] + w1 * self.period_parity[1]).rem_euclid(2);
                if par != want {
                    continue;
                }
                let d = (delta + self.gamma * Vector2::new(w0 as f64, w1 as f64)).norm();
                best = Some(best.map_or(d, |b: f64| b.min(d)));
            }
        }
        best
    }

    fn quotient(&self, field: &[f64], i: usize, j: usize, alpha: f64) -> f64 {
        match self.distance(i, j) {
            Some(d) if d > 0.0 => (field[i] - field[j]).abs() / d.powf(alpha),
            _ => 0.0,
        }
    }
}

/// Restricted Hölder seminorm, exact for at most [`EXACT_HOLDER_LIMIT`] facets.
pub fn holder_seminorm(field: &FacetField, alpha: f64, seed: u64) -> f64 {
    let chart = field.chart();
    let metric = FacetMetric::new(chart);
    let vals = field.values();
    let f = vals.len();
    if f <= EXACT_HOLDER_LIMIT {
        (0..f)
            .into_par_iter()
            .map(|i| {
                (i + 1..f)
                    .map(|j| metric.quotient(vals, i, j, alpha))
                    .fold(0.0, f64::max)
            })
            .reduce(|| 0.0, f64::max)
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..SAMPLED_HOLDER_PAIRS)
            .map(|_| {
                let i = rng.gen_range(0..f);
                let j = rng.gen_range(0..f);
                metric.quotient(vals, i, j, alpha)
            })
            .fold(0.0, f64::max)
    }
}
