//! Mesh containers: values on vertices, facets and facet centers of the
//! quotient quadrangulation.

use crate::lattice::{CellIndex, Chart};
use crate::symplectic::dist;

/// One point of `R^2n` per canonical vertex.
///
/// Lookups by raw index add `z_1 shift_1 + z_2 shift_2` where `raw = canon + M z`,
/// so meshes of shift-equivariant maps (affine planes) are represented exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadMesh {
    chart: Chart,
    dim: usize,
    values: Vec<f64>,
    shifts: [Vec<f64>; 2],
}

impl QuadMesh {
    pub fn from_values(chart: Chart, dim: usize, values: Vec<f64>, shifts: [Vec<f64>; 2]) -> Self {
        assert!(dim.is_multiple_of(2) && dim > 0, "ambient dimension must be even");
        assert_eq!(values.len(), chart.num_cells() * dim);
        assert_eq!(shifts[0].len(), dim);
        assert_eq!(shifts[1].len(), dim);
        Self {
            chart,
            dim,
            values,
            shifts,
        }
    }

    /// Periodic mesh (zero shifts).
    pub fn periodic(chart: Chart, dim: usize, values: Vec<f64>) -> Self {
        Self::from_values(chart, dim, values, [vec![0.0; dim], vec![0.0; dim]])
    }

    pub fn constant(chart: Chart, point: &[f64]) -> Self {
        let values = point.repeat(chart.num_cells());
        Self::periodic(chart, point.len(), values)
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_vertices(&self) -> usize {
        self.chart.num_cells()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn shifts(&self) -> &[Vec<f64>; 2] {
        &self.shifts
    }

    pub fn at(&self, linear: usize) -> &[f64] {
        &self.values[linear * self.dim..(linear + 1) * self.dim]
    }

    /// Value at a raw vertex index, written into `out`.
    pub fn vertex_into(&self, raw: CellIndex, out: &mut [f64]) {
        let (canon, z) = self.chart.reduce(raw);
        let i = self.chart.linear(canon);
        out.copy_from_slice(self.at(i));
        if z != [0, 0] {
            for (d, o) in out.iter_mut().enumerate() {
                *o += z[0] as f64 * self.shifts[0][d] + z[1] as f64 * self.shifts[1][d];
            }
        }
    }

    pub fn vertex(&self, raw: CellIndex) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        self.vertex_into(raw, &mut out);
        out
    }

    /// Corners `A_0..A_3` of facet `f` in counterclockwise order.
    pub fn facet_corners(&self, f: CellIndex) -> [Vec<f64>; 4] {
        facet_corner_indices(f).map(|v| self.vertex(v))
    }

    /// Applies `x -> a x + c` to every value (`a` row-major, `dim x dim`).
    /// Shifts transform linearly.
    pub fn map_affine(&self, a: &[f64], c: &[f64]) -> Self {
        let d = self.dim;
        assert_eq!(a.len(), d * d);
        let lin = |x: &[f64]| -> Vec<f64> {
            (0..d)
                .map(|i| (0..d).map(|j| a[i * d + j] * x[j]).sum())
                .collect()
        };
        let values = self
            .values
            .chunks_exact(d)
            .flat_map(|x| lin(x).into_iter().zip(c).map(|(y, ci)| y + ci))
            .collect();
        let shifts = [lin(&self.shifts[0]), lin(&self.shifts[1])];
        Self::from_values(self.chart.clone(), d, values, shifts)
    }

    /// Adds `even` to vertices with even `k + l` and `odd` to the others.
    /// Requires the parity to descend to the quotient.
    pub fn shear(&self, even: &[f64], odd: &[f64]) -> Self {
        assert!(self.chart.parity_descends(), "parity classes are not defined on this quotient");
        let mut out = self.clone();
        let d = self.dim;
        for i in 0..self.num_vertices() {
            let add = if self.chart.cell(i).parity() == 0 { even } else { odd };
            for (x, a) in out.values[i * d..(i + 1) * d].iter_mut().zip(add) {
                *x += a;
            }
        }
        out
    }
}

/// Raw vertex indices of the corners of facet `f`:
/// `v_kl, v_{k+1,l}, v_{k+1,l+1}, v_{k,l+1}`.
pub fn facet_corner_indices(f: CellIndex) -> [CellIndex; 4] {
    [
        CellIndex::new(f.k, f.l),
        CellIndex::new(f.k + 1, f.l),
        CellIndex::new(f.k + 1, f.l + 1),
        CellIndex::new(f.k, f.l + 1),
    ]
}

/// One scalar per canonical facet.
#[derive(Debug, Clone, PartialEq)]
pub struct FacetField {
    chart: Chart,
    values: Vec<f64>,
}

impl FacetField {
    pub fn new(chart: Chart, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), chart.num_cells());
        Self { chart, values }
    }

    pub fn from_fn(chart: Chart, f: impl Fn(CellIndex) -> f64) -> Self {
        let values = chart.cells().map(f).collect();
        Self { chart, values }
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, raw: CellIndex) -> f64 {
        self.values[self.chart.linear(raw)]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }
}

/// Corner values on quadrangulation vertices and apex values on facet centers.
///
/// The induced triangulation has four triangles per facet.
#[derive(Debug, Clone, PartialEq)]
pub struct TriMesh {
    quad: QuadMesh,
    apexes: Vec<f64>,
}

impl TriMesh {
    pub fn new(quad: QuadMesh, apexes: Vec<f64>) -> Self {
        assert_eq!(apexes.len(), quad.values().len());
        Self { quad, apexes }
    }

    pub fn quad(&self) -> &QuadMesh {
        &self.quad
    }

    pub fn chart(&self) -> &Chart {
        self.quad.chart()
    }

    pub fn dim(&self) -> usize {
        self.quad.dim()
    }

    pub fn apex_values(&self) -> &[f64] {
        &self.apexes
    }

    pub fn apex_at(&self, linear: usize) -> &[f64] {
        let d = self.dim();
        &self.apexes[linear * d..(linear + 1) * d]
    }

    pub fn corner(&self, raw: CellIndex) -> Vec<f64> {
        self.quad.vertex(raw)
    }

    /// Apex of the facet with raw index `raw`.
    pub fn apex(&self, raw: CellIndex) -> Vec<f64> {
        let chart = self.quad.chart();
        let (canon, z) = chart.reduce(raw);
        let mut out = self.apex_at(chart.linear(canon)).to_vec();
        if z != [0, 0] {
            let s = self.quad.shifts();
            for (d, o) in out.iter_mut().enumerate() {
                *o += z[0] as f64 * s[0][d] + z[1] as f64 * s[1][d];
            }
        }
        out
    }

    pub fn num_triangles(&self) -> usize {
        4 * self.quad.num_vertices()
    }

    /// Largest distance between corresponding corner or apex values.
    pub fn c0_distance(&self, other: &TriMesh) -> f64 {
        let d = self.dim();
        let chunked = |xs: &[f64], ys: &[f64]| -> f64 {
            xs.chunks_exact(d)
                .zip(ys.chunks_exact(d))
                .map(|(x, y)| dist(x, y))
                .fold(0.0, f64::max)
        };
        chunked(self.quad.values(), other.quad.values()).max(chunked(&self.apexes, &other.apexes))
    }
}

/// Largest vertexwise distance between two meshes on the same chart.
pub fn quad_c0_distance(a: &QuadMesh, b: &QuadMesh) -> f64 {
    let d = a.dim();
    a.values()
        .chunks_exact(d)
        .zip(b.values().chunks_exact(d))
        .map(|(x, y)| dist(x, y))
        .fold(0.0, f64::max)
}
