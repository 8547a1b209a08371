//! Smooth `Gamma`-periodic maps from the plane into `R^2n`, built-in
//! isotropic examples, and sampling onto quadrangulations.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use nalgebra::{Matrix2, Vector2};
use rayon::prelude::*;

use crate::lattice::{CellIndex, Chart};
use crate::mesh::{QuadMesh, TriMesh};
use crate::symplectic::omega;

type EvalFn = dyn Fn(Vector2<f64>) -> Vec<f64> + Send + Sync;
type JetFn = dyn Fn(Vector2<f64>) -> Jet + Send + Sync;

/// Step used by the central finite-difference fallback.
pub const FD_STEP: f64 = 1e-5;

/// Value and first derivatives of a map at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet {
    pub value: Vec<f64>,
    pub ds: Vec<f64>,
    pub dt: Vec<f64>,
}

/// A smooth map `l: R^2 -> R^2n` with `l(p + gamma_i) = l(p) + shift_i`.
///
/// Ordinary periodic maps have zero shifts. Nonzero shifts describe maps that
/// are equivariant under a translation of the target, such as affine planes.
#[derive(Clone)]
pub struct ImmersionSpec {
    name: String,
    dim_n: usize,
    gamma: Matrix2<f64>,
    shifts: [Vec<f64>; 2],
    eval: Arc<EvalFn>,
    jet: Option<Arc<JetFn>>,
}

impl fmt::Debug for ImmersionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ImmersionSpec")
            .field("name", &self.name)
            .field("dim_n", &self.dim_n)
            .field("gamma", &self.gamma)
            .finish_non_exhaustive()
    }
}

impl ImmersionSpec {
    /// User-supplied periodic map; derivatives come from central differences.
    pub fn new<F>(name: impl Into<String>, dim_n: usize, gamma: Matrix2<f64>, eval: F) -> Self
    where
        F: Fn(Vector2<f64>) -> Vec<f64> + Send + Sync + 'static,
    {
        Self {
            name: name.into(),
            dim_n,
            gamma,
            shifts: [vec![0.0; 2 * dim_n], vec![0.0; 2 * dim_n]],
            eval: Arc::new(eval),
            jet: None,
        }
    }

    pub fn with_jet<J>(mut self, jet: J) -> Self
    where
        J: Fn(Vector2<f64>) -> Jet + Send + Sync + 'static,
    {
        self.jet = Some(Arc::new(jet));
        self
    }

    pub fn with_shifts(mut self, shifts: [Vec<f64>; 2]) -> Self {
        assert_eq!(shifts[0].len(), 2 * self.dim_n);
        assert_eq!(shifts[1].len(), 2 * self.dim_n);
        self.shifts = shifts;
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim_n(&self) -> usize {
        self.dim_n
    }

    /// Ambient dimension `2n`.
    pub fn dim(&self) -> usize {
        2 * self.dim_n
    }

    pub fn gamma_basis(&self) -> &Matrix2<f64> {
        &self.gamma
    }

    pub fn shifts(&self) -> &[Vec<f64>; 2] {
        &self.shifts
    }

    pub fn is_periodic(&self) -> bool {
        self.shifts.iter().all(|s| s.iter().all(|&x| x == 0.0))
    }

    pub fn eval(&self, p: Vector2<f64>) -> Vec<f64> {
        (self.eval)(p)
    }

    pub fn jet(&self, p: Vector2<f64>) -> Jet {
        match &self.jet {
            Some(j) => j(p),
            None => self.fd_jet(p),
        }
    }

    /// Central finite-difference jet, independent of any analytic jet.
    pub fn fd_jet(&self, p: Vector2<f64>) -> Jet {
        let h = FD_STEP;
        let diff = |e: Vector2<f64>| {
            let a = self.eval(p + e * h);
            let b = self.eval(p - e * h);
            a.iter().zip(&b).map(|(x, y)| (x - y) / (2.0 * h)).collect()
        };
        Jet {
            value: self.eval(p),
            ds: diff(Vector2::new(1.0, 0.0)),
            dt: diff(Vector2::new(0.0, 1.0)),
        }
    }
}

fn circle_point(r: f64, s: f64) -> [f64; 2] {
    let (sn, cs) = (2.0 * PI * s).sin_cos();
    [r * cs, r * sn]
}

fn circle_tangent(r: f64, s: f64) -> [f64; 2] {
    let (sn, cs) = (2.0 * PI * s).sin_cos();
    [-2.0 * PI * r * sn, 2.0 * PI * r * cs]
}

/// The torus `(r1 e^{2 pi i s}, r2 e^{2 pi i t})` with period lattice `Z^2`.
pub fn make_clifford(r1: f64, r2: f64) -> ImmersionSpec {
    assert!(r1 > 0.0 && r2 > 0.0, "radii must be positive");
    make_product_torus(PlaneCurve::circle(r1), PlaneCurve::circle(r2))
        .renamed(format!("clifford({r1},{r2})"))
}

/// A closed `C^1` plane curve of period 1 with its velocity.
#[derive(Clone)]
pub struct PlaneCurve {
    name: String,
    point: Arc<dyn Fn(f64) -> [f64; 2] + Send + Sync>,
    velocity: Arc<dyn Fn(f64) -> [f64; 2] + Send + Sync>,
}

impl fmt::Debug for PlaneCurve {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PlaneCurve").field("name", &self.name).finish_non_exhaustive()
    }
}

impl PlaneCurve {
    pub fn new<P, V>(name: impl Into<String>, point: P, velocity: V) -> Self
    where
        P: Fn(f64) -> [f64; 2] + Send + Sync + 'static,
        V: Fn(f64) -> [f64; 2] + Send + Sync + 'static,
    {
        Self {
            name: name.into(),
            point: Arc::new(point),
            velocity: Arc::new(velocity),
        }
    }

    /// Constant-speed circle of radius `r`.
    pub fn circle(r: f64) -> Self {
        Self::new("circle", move |s| circle_point(r, s), move |s| circle_tangent(r, s))
    }

    /// Gerono lemniscate `(sin 2 pi s, sin 2 pi s cos 2 pi s)`, an immersed
    /// figure-eight with its node at the origin, reached at `s = 0` and `s = 1/2`.
    pub fn figure_eight() -> Self {
        Self::new(
            "figure8",
            |s| {
                let (sn, cs) = (2.0 * PI * s).sin_cos();
                [sn, sn * cs]
            },
            |s| {
                let w = 2.0 * PI;
                [w * (w * s).cos(), w * (2.0 * w * s).cos()]
            },
        )
    }

    /// Convex closed curve of constant speed `2 pi r` whose tangent angle is
    /// `2 pi s + eps sin(2 pi k s)`.
    ///
    /// Positions come from the Jacobi-Anger expansion
    /// `e^{i eps sin x} = sum_m J_m(eps) e^{i m x}`, truncated once the Bessel
    /// coefficients drop below machine precision. Requires `k >= 2` (so the
    /// curve closes) and `k |eps| < 1` (so the curvature stays positive).
    pub fn wobble(r: f64, eps: f64, k: u32) -> Self {
        assert!(k >= 2, "wobble frequency must be at least 2");
        assert!((k as f64) * eps.abs() < 1.0, "wobble curve would not be convex");
        let speed = 2.0 * PI * r;
        let kf = k as f64;
        let mut terms = Vec::new();
        for m in -40i32..=40 {
            let c = bessel_j(m, eps);
            if c.abs() < 1e-18 {
                continue;
            }
            let freq = 1.0 + kf * m as f64;
            terms.push((freq, speed * c / (2.0 * PI * freq)));
        }
        let name = format!("wobble({r},{eps},{k})");
        Self::new(
            name,
            move |s| {
                // integral of e^{i 2 pi f s} is -i e^{i 2 pi f s} / (2 pi f)
                let (mut x, mut y) = (0.0, 0.0);
                for &(f, c) in &terms {
                    let (sn, cs) = (2.0 * PI * f * s).sin_cos();
                    x += c * sn;
                    y -= c * cs;
                }
                [x, y]
            },
            move |s| {
                let theta = 2.0 * PI * s + eps * (2.0 * PI * kf * s).sin();
                let (sn, cs) = theta.sin_cos();
                [speed * cs, speed * sn]
            },
        )
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn point(&self, s: f64) -> [f64; 2] {
        (self.point)(s)
    }

    pub fn velocity(&self, s: f64) -> [f64; 2] {
        (self.velocity)(s)
    }
}

/// Bessel function of the first kind for integer order, by its power series.
/// Accurate for `|x| <= 1`.
fn bessel_j(m: i32, x: f64) -> f64 {
    let order = m.unsigned_abs();
    let half = 0.5 * x;
    let mut term = 1.0;
    for i in 1..=order {
        term *= half / i as f64;
    }
    let mut sum = term;
    for j in 1..60 {
        term *= -half * half / (j as f64 * (j + order) as f64);
        sum += term;
        if term.abs() < 1e-300 || term.abs() < 1e-18 * sum.abs() {
            break;
        }
    }
    if m < 0 && order % 2 == 1 {
        -sum
    } else {
        sum
    }
}

impl ImmersionSpec {
    fn renamed(mut self, name: String) -> Self {
        self.name = name;
        self
    }
}

/// `l(s, t) = (a(s), b(t))` in `R^4`; isotropic for any pair of curves.
pub fn make_product_torus(curve_a: PlaneCurve, curve_b: PlaneCurve) -> ImmersionSpec {
    let name = format!("product:{},{}", curve_a.name(), curve_b.name());
    let (a1, b1) = (curve_a.clone(), curve_b.clone());
    ImmersionSpec::new(name, 2, Matrix2::identity(), move |p| {
        let a = a1.point(p[0]);
        let b = b1.point(p[1]);
        vec![a[0], a[1], b[0], b[1]]
    })
    .with_jet(move |p| {
        let a = curve_a.point(p[0]);
        let b = curve_b.point(p[1]);
        let da = curve_a.velocity(p[0]);
        let db = curve_b.velocity(p[1]);
        Jet {
            value: vec![a[0], a[1], b[0], b[1]],
            ds: vec![da[0], da[1], 0.0, 0.0],
            dt: vec![0.0, 0.0, db[0], db[1]],
        }
    })
}

/// The affine isotropic plane `l(s, t) = (s, 0, t, 0)`. It is not periodic;
/// translating by a period of `Z^2` translates the image by `(1,0,0,0)` or
/// `(0,0,1,0)`.
pub fn make_flat_plane() -> ImmersionSpec {
    ImmersionSpec::new("flat-plane", 2, Matrix2::identity(), |p| {
        vec![p[0], 0.0, p[1], 0.0]
    })
    .with_jet(|p| Jet {
        value: vec![p[0], 0.0, p[1], 0.0],
        ds: vec![1.0, 0.0, 0.0, 0.0],
        dt: vec![0.0, 0.0, 1.0, 0.0],
    })
    .with_shifts([vec![1.0, 0.0, 0.0, 0.0], vec![0.0, 0.0, 1.0, 0.0]])
}

/// Amplitude and frequency of the built-in `wobble` curve.
pub const WOBBLE_EPS: f64 = 0.2;
pub const WOBBLE_FREQ: u32 = 2;

/// Resolves a built-in by name: `clifford`, `flat-plane`, or
/// `product:<curve>,<curve>` with curves `circle`, `figure8` and `wobble`.
/// Unit circles and the built-in wobble share the speed `2 pi`, so their
/// products are conformally parametrized.
pub fn builtin(name: &str) -> Option<ImmersionSpec> {
    let curve = |c: &str| match c.trim() {
        "circle" => Some(PlaneCurve::circle(1.0)),
        "figure8" => Some(PlaneCurve::figure_eight()),
        "wobble" => Some(PlaneCurve::wobble(1.0, WOBBLE_EPS, WOBBLE_FREQ)),
        _ => None,
    };
    match name.trim() {
        "clifford" => Some(make_clifford(1.0, 1.0)),
        "flat-plane" => Some(make_flat_plane()),
        other => {
            let rest = other.strip_prefix("product:")?;
            let (a, b) = rest.split_once(',')?;
            Some(make_product_torus(curve(a)?, curve(b)?))
        }
    }
}

/// Largest `|omega(dl/ds, dl/dt)|` over a `grid_res x grid_res` grid of the
/// period parallelogram.
pub fn smooth_isotropy_defect(spec: &ImmersionSpec, grid_res: usize) -> f64 {
    assert!(grid_res >= 2);
    let g = spec.gamma_basis();
    let mut worst: f64 = 0.0;
    for i in 0..grid_res {
        for j in 0..grid_res {
            let a = i as f64 / grid_res as f64;
            let b = j as f64 / grid_res as f64;
            let p = g * Vector2::new(a, b);
            let jet = spec.jet(p);
            worst = worst.max(omega(&jet.ds, &jet.dt).abs());
        }
    }
    worst
}

/// Samples `tau_N(v) = l(v)` at every canonical vertex.
pub fn sample_quad(spec: &ImmersionSpec, chart: &Chart) -> QuadMesh {
    let values = (0..chart.num_cells())
        .into_par_iter()
        .flat_map_iter(|i| spec.eval(chart.vertex_position(chart.cell(i))))
        .collect();
    QuadMesh::from_values(chart.clone(), spec.dim(), values, spec.shifts().clone())
}

/// Samples at vertices and at facet centers.
pub fn sample_tri(spec: &ImmersionSpec, chart: &Chart) -> TriMesh {
    let quad = sample_quad(spec, chart);
    let apexes = (0..chart.num_cells())
        .into_par_iter()
        .flat_map_iter(|i| spec.eval(chart.facet_center(chart.cell(i))))
        .collect();
    TriMesh::new(quad, apexes)
}

/// Value of `l` at a raw vertex index, for cross-checks against a mesh.
pub fn eval_at_vertex(spec: &ImmersionSpec, chart: &Chart, v: CellIndex) -> Vec<f64> {
    spec.eval(chart.vertex_position(v))
}
