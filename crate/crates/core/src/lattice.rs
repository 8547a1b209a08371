//! Lattices, charts and index arithmetic on the quotient quadrangulation.
//!
//! A [`Chart`] identifies the standard grid `Z^2 / N` with a lattice of the
//! parameter plane that contains the period lattice `Gamma` as a sublattice.
//! Vertices and facets of the quadrangulation are both addressed by a
//! [`CellIndex`]; facet `(k, l)` is the square whose lower-left corner is
//! vertex `(k, l)`. Indices are reduced modulo the integer lattice spanned by
//! the columns of `M` using its column Hermite normal form.

use nalgebra::{Matrix2, Vector2};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LatticeError {
    #[error("period basis is singular")]
    SingularBasis,
    #[error("subdivision count must be positive")]
    ZeroSubdivision,
    #[error("integer lattice matrix is degenerate at N = {0}; increase N")]
    DegenerateLattice(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CellIndex {
    pub k: i64,
    pub l: i64,
}

impl CellIndex {
    pub const fn new(k: i64, l: i64) -> Self {
        Self { k, l }
    }

    /// Parity of `k + l`, preserved by both diagonal translations.
    pub fn parity(self) -> i64 {
        (self.k + self.l).rem_euclid(2)
    }
}

impl From<(i64, i64)> for CellIndex {
    fn from((k, l): (i64, i64)) -> Self {
        Self { k, l }
    }
}

/// Translations acting on vertex and facet indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Translation {
    /// `(k, l) -> (k + 1, l + 1)`
    U,
    /// `(k, l) -> (k - 1, l + 1)`
    V,
    E1,
    E2,
}

pub fn translate(cell: CellIndex, dir: Translation, steps: i64) -> CellIndex {
    let (dk, dl) = match dir {
        Translation::U => (1, 1),
        Translation::V => (-1, 1),
        Translation::E1 => (1, 0),
        Translation::E2 => (0, 1),
    };
    CellIndex::new(cell.k + steps * dk, cell.l + steps * dl)
}

/// Lower triangular column Hermite form `H = M U` of the index lattice.
///
/// `H = [[a, 0], [b, c]]` with `a, c > 0` and `0 <= b < c`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Hermite {
    a: i64,
    b: i64,
    c: i64,
    /// Unimodular `U`, row-major.
    u: [[i64; 2]; 2],
}

fn ext_gcd(a: i64, b: i64) -> (i64, i64, i64) {
    if b == 0 {
        if a < 0 {
            (-a, -1, 0)
        } else {
            (a, 1, 0)
        }
    } else {
        let (g, x, y) = ext_gcd(b, a.rem_euclid(b));
        // a = q b + r with r = a mod b (euclidean)
        let q = (a - a.rem_euclid(b)) / b;
        (g, y, x - q * y)
    }
}

impl Hermite {
    fn of(m: [[i64; 2]; 2]) -> Option<Self> {
        let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        if det == 0 {
            return None;
        }
        let (g, x, y) = ext_gcd(m[0][0], m[0][1]);
        // columns of U: (x, y) and (-m01/g, m00/g)
        let mut u = [[x, -m[0][1] / g], [y, m[0][0] / g]];
        let mut b = x * m[1][0] + y * m[1][1];
        let mut c = det / g;
        if c < 0 {
            c = -c;
            u[0][1] = -u[0][1];
            u[1][1] = -u[1][1];
        }
        let q = b.div_euclid(c);
        b -= q * c;
        u[0][0] -= q * u[0][1];
        u[1][0] -= q * u[1][1];
        Some(Self { a: g, b, c, u })
    }
}

/// Lattice data for one subdivision level: the period basis, the integer
/// matrix `M` whose columns `m_i` satisfy `A_N (m_i / N) = gamma_i`, and the
/// almost-isometry `A_N`.
#[derive(Debug, Clone, PartialEq)]
pub struct Chart {
    n: usize,
    gamma: Matrix2<f64>,
    m: [[i64; 2]; 2],
    a: Matrix2<f64>,
    a_inv: Matrix2<f64>,
    hermite: Hermite,
}

impl Chart {
    /// Rounds `N R^-1 gamma_i` to integers (half away from zero) and solves for
    /// `A_N = B (M / N)^-1`.
    pub fn build(
        gamma_basis: Matrix2<f64>,
        reference_isometry: Matrix2<f64>,
        n: usize,
    ) -> Result<Self, LatticeError> {
        if n == 0 {
            return Err(LatticeError::ZeroSubdivision);
        }
        let r_inv = reference_isometry
            .try_inverse()
            .ok_or(LatticeError::SingularBasis)?;
        let scaled = r_inv * gamma_basis * n as f64;
        let m = [
            [scaled[(0, 0)].round() as i64, scaled[(0, 1)].round() as i64],
            [scaled[(1, 0)].round() as i64, scaled[(1, 1)].round() as i64],
        ];
        Self::with_matrix(gamma_basis, m, n)
    }

    /// Chart from an explicit integer matrix (row-major; columns are `m_1`, `m_2`).
    pub fn with_matrix(
        gamma_basis: Matrix2<f64>,
        m: [[i64; 2]; 2],
        n: usize,
    ) -> Result<Self, LatticeError> {
        if n == 0 {
            return Err(LatticeError::ZeroSubdivision);
        }
        if gamma_basis.determinant().abs() < f64::EPSILON {
            return Err(LatticeError::SingularBasis);
        }
        let hermite = Hermite::of(m).ok_or(LatticeError::DegenerateLattice(n))?;
        let mf = Matrix2::new(m[0][0] as f64, m[0][1] as f64, m[1][0] as f64, m[1][1] as f64)
            / n as f64;
        let mf_inv = mf.try_inverse().ok_or(LatticeError::DegenerateLattice(n))?;
        let a = gamma_basis * mf_inv;
        let a_inv = a.try_inverse().ok_or(LatticeError::SingularBasis)?;
        Ok(Self {
            n,
            gamma: gamma_basis,
            m,
            a,
            a_inv,
            hermite,
        })
    }

    /// Integer lattice `Z^2` with the identity isometry.
    pub fn square(n: usize) -> Result<Self, LatticeError> {
        Self::build(Matrix2::identity(), Matrix2::identity(), n)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn gamma_basis(&self) -> &Matrix2<f64> {
        &self.gamma
    }

    pub fn m_matrix(&self) -> [[i64; 2]; 2] {
        self.m
    }

    pub fn a_matrix(&self) -> &Matrix2<f64> {
        &self.a
    }

    /// Number of vertices (equivalently facets) of the quotient, `|det M|`.
    pub fn num_cells(&self) -> usize {
        (self.hermite.a * self.hermite.c) as usize
    }

    /// Reduces `raw` to its canonical coset representative `c` and returns the
    /// integer coefficients `z` with `raw = c + M z`.
    pub fn reduce(&self, raw: CellIndex) -> (CellIndex, [i64; 2]) {
        let h = &self.hermite;
        let w1 = raw.k.div_euclid(h.a);
        let k = raw.k - w1 * h.a;
        let l1 = raw.l - w1 * h.b;
        let w2 = l1.div_euclid(h.c);
        let l = l1 - w2 * h.c;
        let z = [
            h.u[0][0] * w1 + h.u[0][1] * w2,
            h.u[1][0] * w1 + h.u[1][1] * w2,
        ];
        (CellIndex::new(k, l), z)
    }

    pub fn canonical_index(&self, raw: CellIndex) -> CellIndex {
        self.reduce(raw).0
    }

    /// Position of a canonical cell in `0..num_cells()`.
    pub fn linear(&self, raw: CellIndex) -> usize {
        let c = self.canonical_index(raw);
        (c.k * self.hermite.c + c.l) as usize
    }

    /// Inverse of [`Chart::linear`].
    pub fn cell(&self, linear: usize) -> CellIndex {
        let c = self.hermite.c;
        let linear = linear as i64;
        CellIndex::new(linear / c, linear % c)
    }

    pub fn cells(&self) -> impl Iterator<Item = CellIndex> + '_ {
        (0..self.num_cells()).map(|i| self.cell(i))
    }

    /// `M z`, the index offset of a period.
    pub fn period_offset(&self, z: [i64; 2]) -> CellIndex {
        CellIndex::new(
            self.m[0][0] * z[0] + self.m[0][1] * z[1],
            self.m[1][0] * z[0] + self.m[1][1] * z[1],
        )
    }

    /// Maps index-grid coordinates `(k / N, l / N)` into the parameter plane.
    pub fn grid_to_plane(&self, k: f64, l: f64) -> Vector2<f64> {
        let nf = self.n as f64;
        self.a * Vector2::new(k / nf, l / nf)
    }

    /// Inverse of [`Chart::grid_to_plane`], returning fractional `(k, l)`.
    pub fn plane_to_grid(&self, p: Vector2<f64>) -> (f64, f64) {
        let q = self.a_inv * p * self.n as f64;
        (q[0], q[1])
    }

    pub fn vertex_position(&self, v: CellIndex) -> Vector2<f64> {
        self.grid_to_plane(v.k as f64, v.l as f64)
    }

    /// Barycenter of facet `f`.
    pub fn facet_center(&self, f: CellIndex) -> Vector2<f64> {
        self.grid_to_plane(f.k as f64 + 0.5, f.l as f64 + 0.5)
    }

    /// Whether `k + l` parity descends to the quotient, i.e. every column of
    /// `M` has even coordinate sum.
    pub fn parity_descends(&self) -> bool {
        (self.m[0][0] + self.m[1][0]) % 2 == 0 && (self.m[0][1] + self.m[1][1]) % 2 == 0
    }
}
