//! Pyramid refinement of quadrangular meshes into triangular meshes.
//!
//! Every facet quadrilateral `A_0 A_1 A_2 A_3` gets an apex `P` on its center,
//! splitting it into the four triangles `(A_i, A_{i+1}, P)`. With the
//! barycenter as apex the triangles are generally not isotropic. The optimal
//! apex is the point closest to the barycenter for which all four are, and it
//! exists exactly when the quadrilateral itself is isotropic.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use thiserror::Error;

use crate::density::liouville_polygon;
use crate::mesh::{QuadMesh, TriMesh};
use crate::symplectic::{apply_j, dist, omega, sub};

/// Relative rank cutoff of the apex system.
pub const APEX_RANK_CUTOFF: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RefineError {
    #[error("quadrilateral is not isotropic: |liouville| = {liouville:e} exceeds {tol:e}{}", facet_suffix(*.facet))]
    NotIsotropic {
        facet: Option<usize>,
        liouville: f64,
        tol: f64,
    },
}

fn facet_suffix(facet: Option<usize>) -> String {
    facet.map(|f| format!(" (facet {f})")).unwrap_or_default()
}

/// Default polygon tolerance for a mesh solved to `mu <= solver_tol`.
///
/// The Liouville integral around a facet is `mu / N^2`.
pub fn default_iso_tol(solver_tol: f64, n: usize) -> f64 {
    10.0 * solver_tol / (n * n) as f64
}

pub fn barycenter(corners: &[&[f64]; 4]) -> Vec<f64> {
    (0..corners[0].len())
        .map(|d| 0.25 * corners.iter().map(|c| c[d]).sum::<f64>())
        .collect()
}

/// Apexes at facet barycenters.
pub fn barycentric_apexes(mesh: &QuadMesh) -> TriMesh {
    let chart = mesh.chart();
    let apexes = (0..mesh.num_vertices())
        .into_par_iter()
        .flat_map_iter(|i| {
            let c = mesh.facet_corners(chart.cell(i));
            barycenter(&[&c[0], &c[1], &c[2], &c[3]])
        })
        .collect();
    TriMesh::new(mesh.clone(), apexes)
}

/// The affine system `omega(A_{i+1} - A_i, P) + omega(A_i, A_{i+1}) = 0`
/// written in the offset `x = P - G` from the barycenter `G`.
#[derive(Debug, Clone)]
pub struct ApexSystem {
    /// Row `i` is `J (A_{i+1} - A_i)`, since `omega(e, x) = <J e, x>`.
    pub matrix: DMatrix<f64>,
    pub rhs: DVector<f64>,
    pub barycenter: Vec<f64>,
    /// Longest edge of the quadrilateral.
    pub scale: f64,
}

impl ApexSystem {
    pub fn new(corners: &[&[f64]; 4]) -> Self {
        let dim = corners[0].len();
        let g = barycenter(corners);
        let mut matrix = DMatrix::zeros(4, dim);
        let mut rhs = DVector::zeros(4);
        let mut scale: f64 = 0.0;
        for i in 0..4 {
            let (a, b) = (corners[i], corners[(i + 1) % 4]);
            let e = sub(b, a);
            scale = scale.max(dist(a, b));
            for (d, v) in apply_j(&e).into_iter().enumerate() {
                matrix[(i, d)] = v;
            }
            rhs[i] = -omega(a, b) - omega(&e, &g);
        }
        Self {
            matrix,
            rhs,
            barycenter: g,
            scale,
        }
    }

    /// Numerical rank; rows whose component orthogonal to the rows already
    /// taken is below `rel_tol` times the largest row norm count as dependent.
    pub fn rank(&self, rel_tol: f64) -> usize {
        RowLq::new(&self.matrix, rel_tol).rank()
    }

    /// Minimum-norm offset solving the independent rows exactly.
    ///
    /// For an isotropic quadrilateral the system is consistent and this is
    /// its minimum-norm solution.
    pub fn min_norm_offset(&self) -> DVector<f64> {
        RowLq::new(&self.matrix, APEX_RANK_CUTOFF).solve(&self.rhs)
    }

    /// Constraint residuals `omega(E_i, P) + omega(A_i, A_{i+1})` at the apex `p`.
    pub fn residuals(&self, p: &[f64]) -> Vec<f64> {
        let x = DVector::from_iterator(
            p.len(),
            p.iter().zip(&self.barycenter).map(|(a, b)| a - b),
        );
        (&self.matrix * x - &self.rhs).iter().copied().collect()
    }
}

/// Row-pivoted LQ factorization `M[rows] = L Q` of a short matrix, truncated
/// at numerical rank. `Q` has orthonormal rows; `L` is lower triangular.
struct RowLq {
    cols: usize,
    rows: Vec<usize>,
    l: Vec<Vec<f64>>,
    q: Vec<DVector<f64>>,
}

impl RowLq {
    fn new(m: &DMatrix<f64>, rel_tol: f64) -> Self {
        let mut resid: Vec<DVector<f64>> = (0..m.nrows()).map(|i| m.row(i).transpose()).collect();
        let scale = resid.iter().map(|r| r.norm()).fold(0.0, f64::max);
        let mut out = Self {
            cols: m.ncols(),
            rows: Vec::new(),
            l: Vec::new(),
            q: Vec::new(),
        };
        if scale == 0.0 {
            return out;
        }
        let mut free: Vec<usize> = (0..m.nrows()).collect();
        while !free.is_empty() {
            let (pos, norm) = free
                .iter()
                .enumerate()
                .map(|(pos, &i)| (pos, resid[i].norm()))
                .max_by(|a, b| a.1.total_cmp(&b.1))
                .expect("nonempty");
            if norm <= rel_tol * scale {
                break;
            }
            let i = free.swap_remove(pos);
            let mut q = &resid[i] / norm;
            // second pass keeps the basis orthonormal to working precision
            for prev in &out.q {
                q -= prev * prev.dot(&q);
            }
            q /= q.norm();
            let row = m.row(i).transpose();
            let mut coeffs: Vec<f64> = out.q.iter().map(|p| p.dot(&row)).collect();
            coeffs.push(q.dot(&row));
            for &j in &free {
                let c = q.dot(&resid[j]);
                resid[j] -= &q * c;
            }
            out.rows.push(i);
            out.l.push(coeffs);
            out.q.push(q);
        }
        out
    }

    fn rank(&self) -> usize {
        self.rows.len()
    }

    /// Minimum-norm `x` with `M[rows] x = b[rows]`.
    fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        let mut y = Vec::with_capacity(self.rank());
        for (k, &i) in self.rows.iter().enumerate() {
            let acc: f64 = (0..k).map(|j| self.l[k][j] * y[j]).sum();
            y.push((b[i] - acc) / self.l[k][k]);
        }
        let mut x = DVector::zeros(self.cols);
        for (q, yk) in self.q.iter().zip(&y) {
            x += q * *yk;
        }
        x
    }
}

/// Closest point to the barycenter completing the quadrilateral into an
/// isotropic pyramid.
pub fn optimal_apex(corners: &[&[f64]; 4], iso_tol: f64) -> Result<Vec<f64>, RefineError> {
    let liouville = liouville_polygon(corners);
    if liouville.abs() > iso_tol {
        return Err(RefineError::NotIsotropic {
            facet: None,
            liouville,
            tol: iso_tol,
        });
    }
    let sys = ApexSystem::new(corners);
    let x = sys.min_norm_offset();
    Ok(sys.barycenter.iter().zip(x.iter()).map(|(g, d)| g + d).collect())
}

/// Dimension of the affine span of the four points.
pub fn quad_dimension(corners: &[&[f64]; 4], rank_tol: f64) -> usize {
    let dim = corners[0].len();
    let edges = DMatrix::from_fn(3, dim, |i, d| corners[i + 1][d] - corners[0][d]);
    RowLq::new(&edges, rank_tol).rank()
}

/// Replaces every barycenter by the optimal apex of its facet.
pub fn apex_refine(mesh: &QuadMesh, iso_tol: f64) -> Result<TriMesh, RefineError> {
    let chart = mesh.chart();
    let per_facet: Vec<Result<Vec<f64>, RefineError>> = (0..mesh.num_vertices())
        .into_par_iter()
        .map(|i| {
            let c = mesh.facet_corners(chart.cell(i));
            optimal_apex(&[&c[0], &c[1], &c[2], &c[3]], iso_tol).map_err(|e| match e {
                RefineError::NotIsotropic { liouville, tol, .. } => RefineError::NotIsotropic {
                    facet: Some(i),
                    liouville,
                    tol,
                },
            })
        })
        .collect();
    let mut apexes = Vec::with_capacity(mesh.values().len());
    for r in per_facet {
        apexes.extend(r?);
    }
    Ok(TriMesh::new(mesh.clone(), apexes))
}
