//! Piecewise-linear maps on the pyramid triangulation.
//!
//! Facet `f_kl` is cut into four triangles through its center `z_kl`:
//!
//! ```text
//! 0: (v_kl,       v_{k+1,l},   z_kl)
//! 1: (v_{k+1,l},   v_{k+1,l+1}, z_kl)
//! 2: (v_{k+1,l+1}, v_{k,l+1},   z_kl)
//! 3: (v_{k,l+1},   v_kl,        z_kl)
//! ```
//!
//! Triangle `j` of the facet with linear index `i` has id `4 i + j`. Node ids
//! number the corners `0..F` followed by the apexes `F..2F`.
//!
//! Differentials and distances use the flat metric of the parameter plane.

use std::io;
use std::path::Path;

use nalgebra::{Matrix2, MatrixXx2, Vector2};
use rayon::prelude::*;

use crate::geometry::{simplex_distance, Aabb, Bvh};
use crate::immersion::ImmersionSpec;
use crate::lattice::{CellIndex, Chart};
use crate::mesh::{facet_corner_indices, TriMesh};
use crate::symmesh::TriangleSoup;
use crate::symplectic::{dist, dot, omega, sub};

/// Default relative tolerance of [`check_immersion`].
pub const DEFAULT_IMMERSION_TOL: f64 = 1e-6;
/// Default tolerance of [`check_embedding`], relative to the mean edge length.
pub const DEFAULT_EMBEDDING_TOL: f64 = 0.05;
/// Default number of subdivisions per triangle edge when sampling distances.
pub const DEFAULT_OVERSAMPLE: usize = 4;

/// A vertex of the triangulation on the cover, by raw index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Node {
    Corner(CellIndex),
    Apex(CellIndex),
}

impl Node {
    /// Position in grid units, where corners sit on integer points.
    pub fn grid(self) -> (f64, f64) {
        match self {
            Node::Corner(c) => (c.k as f64, c.l as f64),
            Node::Apex(f) => (f.k as f64 + 0.5, f.l as f64 + 0.5),
        }
    }
}

/// Raw nodes of triangle `j` of the facet with raw index `f`.
pub fn triangle_nodes(f: CellIndex, j: usize) -> [Node; 3] {
    let c = facet_corner_indices(f);
    [Node::Corner(c[j]), Node::Corner(c[(j + 1) % 4]), Node::Apex(f)]
}

/// The piecewise-linear interpolant of a triangular mesh.
#[derive(Debug, Clone)]
pub struct PlMap {
    tri: TriMesh,
    /// Image vertices of every triangle, `3 * dim` values each.
    images: Vec<f64>,
}

pub fn build_pl(tri: TriMesh) -> PlMap {
    PlMap::new(tri)
}

impl PlMap {
    pub fn new(tri: TriMesh) -> Self {
        let chart = tri.chart().clone();
        let images = (0..tri.num_triangles())
            .into_par_iter()
            .flat_map_iter(|id| {
                let f = chart.cell(id / 4);
                triangle_nodes(f, id % 4)
                    .into_iter()
                    .flat_map(|n| node_value(&tri, n))
                    .collect::<Vec<_>>()
            })
            .collect();
        Self { tri, images }
    }

    pub fn tri(&self) -> &TriMesh {
        &self.tri
    }

    pub fn chart(&self) -> &Chart {
        self.tri.chart()
    }

    pub fn dim(&self) -> usize {
        self.tri.dim()
    }

    pub fn num_triangles(&self) -> usize {
        self.tri.num_triangles()
    }

    pub fn num_nodes(&self) -> usize {
        2 * self.chart().num_cells()
    }

    /// Quotient node id of a raw node.
    pub fn node_id(&self, n: Node) -> usize {
        match n {
            Node::Corner(c) => self.chart().linear(c),
            Node::Apex(f) => self.chart().num_cells() + self.chart().linear(f),
        }
    }

    pub fn triangle_node_ids(&self, id: usize) -> [usize; 3] {
        let f = self.chart().cell(id / 4);
        triangle_nodes(f, id % 4).map(|n| self.node_id(n))
    }

    /// Image vertices of a triangle, consistent on its canonical facet.
    pub fn triangle_image(&self, id: usize) -> [&[f64]; 3] {
        let d = self.dim();
        let s = &self.images[3 * d * id..3 * d * (id + 1)];
        [&s[..d], &s[d..2 * d], &s[2 * d..]]
    }

    /// Parameter-plane positions of a triangle's vertices.
    pub fn triangle_domain(&self, id: usize) -> [Vector2<f64>; 3] {
        let f = self.chart().cell(id / 4);
        triangle_nodes(f, id % 4).map(|n| {
            let (k, l) = n.grid();
            self.chart().grid_to_plane(k, l)
        })
    }

    /// Value of the map at a point of the parameter plane.
    pub fn eval(&self, p: Vector2<f64>) -> Vec<f64> {
        let (gx, gy) = self.chart().plane_to_grid(p);
        let (k, l) = (gx.floor(), gy.floor());
        let (a, b) = (gx - k, gy - l);
        let f = CellIndex::new(k as i64, l as i64);
        let below_main = b <= a;
        let below_anti = b <= 1.0 - a;
        let j = match (below_main, below_anti) {
            (true, true) => 0,
            (true, false) => 1,
            (false, false) => 2,
            (false, true) => 3,
        };
        let nodes = triangle_nodes(f, j);
        let w = barycentric(nodes.map(Node::grid), (gx, gy));
        let mut out = vec![0.0; self.dim()];
        for (n, wi) in nodes.into_iter().zip(w) {
            for (o, v) in out.iter_mut().zip(node_value(&self.tri, n)) {
                *o += wi * v;
            }
        }
        out
    }

    /// Constant differential of an affine piece, as a `2n x 2` matrix whose
    /// columns are derivatives along the two plane axes.
    pub fn facet_differential(&self, id: usize) -> MatrixXx2<f64> {
        let [y0, y1, y2] = self.triangle_image(id);
        let [q0, q1, q2] = self.triangle_domain(id);
        let q = Matrix2::from_columns(&[q1 - q0, q2 - q0]);
        let q_inv = q.try_inverse().expect("chart triangles are nondegenerate");
        let y = MatrixXx2::from_fn(self.dim(), |r, c| if c == 0 { y1[r] - y0[r] } else { y2[r] - y0[r] });
        y * q_inv
    }
}

fn node_value(tri: &TriMesh, n: Node) -> Vec<f64> {
    match n {
        Node::Corner(c) => tri.corner(c),
        Node::Apex(f) => tri.apex(f),
    }
}

fn barycentric(tri: [(f64, f64); 3], p: (f64, f64)) -> [f64; 3] {
    let (x0, y0) = tri[0];
    let m = Matrix2::new(tri[1].0 - x0, tri[2].0 - x0, tri[1].1 - y0, tri[2].1 - y0);
    let st = m.try_inverse().expect("nondegenerate triangle") * Vector2::new(p.0 - x0, p.1 - y0);
    [1.0 - st[0] - st[1], st[0], st[1]]
}

/// Largest singular value of a `d x 2` matrix.
pub fn spectral_norm(m: &MatrixXx2<f64>) -> f64 {
    singular_values(m).0
}

/// `(largest, smallest)` singular values of a `d x 2` matrix.
fn singular_values(m: &MatrixXx2<f64>) -> (f64, f64) {
    let g = m.transpose() * m;
    let tr = g[(0, 0)] + g[(1, 1)];
    let det = g[(0, 0)] * g[(1, 1)] - g[(0, 1)] * g[(1, 0)];
    let disc = (0.25 * tr * tr - det).max(0.0).sqrt();
    let hi = (0.5 * tr + disc).max(0.0);
    let lo = (0.5 * tr - disc).max(0.0);
    (hi.sqrt(), lo.sqrt())
}

/// Barycentric sample points `(i, j, os - i - j) / os` of a triangle.
fn sample_weights(os: usize) -> Vec<[f64; 3]> {
    let mut w = Vec::new();
    for i in 0..=os {
        for j in 0..=os - i {
            let (a, b) = (i as f64 / os as f64, j as f64 / os as f64);
            w.push([a, b, 1.0 - a - b]);
        }
    }
    w
}

fn combine<T: AsRef<[f64]>>(w: &[f64; 3], pts: &[T; 3]) -> Vec<f64> {
    let d = pts[0].as_ref().len();
    (0..d)
        .map(|i| w[0] * pts[0].as_ref()[i] + w[1] * pts[1].as_ref()[i] + w[2] * pts[2].as_ref()[i])
        .collect()
}

/// Sampled C^0 and C^1 distances to a smooth map on the same parameter plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Distances {
    pub c0: f64,
    /// Largest operator norm of `dl - dl_N`.
    pub differential: f64,
}

impl Distances {
    pub fn c1(&self) -> f64 {
        self.c0 + self.differential
    }
}

pub fn distances(map: &PlMap, spec: &ImmersionSpec, oversample: usize) -> Distances {
    assert!(oversample >= 1, "oversample must be positive");
    let weights = sample_weights(oversample);
    (0..map.num_triangles())
        .into_par_iter()
        .map(|id| {
            let image = map.triangle_image(id);
            let dom = map.triangle_domain(id);
            let diff = map.facet_differential(id);
            let mut c0: f64 = 0.0;
            let mut c1: f64 = 0.0;
            for w in &weights {
                let p = dom[0] * w[0] + dom[1] * w[1] + dom[2] * w[2];
                let jet = spec.jet(p);
                c0 = c0.max(dist(&jet.value, &combine(w, &image)));
                let smooth = MatrixXx2::from_fn(map.dim(), |r, c| if c == 0 { jet.ds[r] } else { jet.dt[r] });
                c1 = c1.max(spectral_norm(&(smooth - &diff)));
            }
            Distances { c0, differential: c1 }
        })
        .reduce(
            || Distances { c0: 0.0, differential: 0.0 },
            |a, b| Distances {
                c0: a.c0.max(b.c0),
                differential: a.differential.max(b.differential),
            },
        )
}

/// Largest sampled `|l(p) - l_N(p)|`.
pub fn distance_c0(map: &PlMap, spec: &ImmersionSpec, oversample: usize) -> f64 {
    distances(map, spec, oversample).c0
}

/// `distance_c0` plus the largest sampled operator norm of `dl - dl_N`.
pub fn distance_c1(map: &PlMap, spec: &ImmersionSpec, oversample: usize) -> f64 {
    distances(map, spec, oversample).c1()
}

/// Piecewise C^0 and C^1 distances between two maps on the same triangulation.
pub fn pl_distance(a: &PlMap, b: &PlMap) -> Distances {
    assert_eq!(a.num_triangles(), b.num_triangles());
    (0..a.num_triangles())
        .into_par_iter()
        .map(|id| {
            let (ia, ib) = (a.triangle_image(id), b.triangle_image(id));
            let c0 = (0..3).map(|i| dist(ia[i], ib[i])).fold(0.0, f64::max);
            let differential = spectral_norm(&(a.facet_differential(id) - b.facet_differential(id)));
            Distances { c0, differential }
        })
        .reduce(
            || Distances { c0: 0.0, differential: 0.0 },
            |x, y| Distances {
                c0: x.c0.max(y.c0),
                differential: x.differential.max(y.differential),
            },
        )
}

/// `|omega(B - A, C - A)|` for every triangle `(A, B, C)`.
pub fn pl_isotropy_residual(map: &PlMap) -> Vec<f64> {
    (0..map.num_triangles())
        .into_par_iter()
        .map(|id| {
            let [a, b, c] = map.triangle_image(id);
            omega(&sub(b, a), &sub(c, a)).abs()
        })
        .collect()
}

/// Longest image edge of every triangle.
pub fn triangle_scales(map: &PlMap) -> Vec<f64> {
    (0..map.num_triangles())
        .map(|id| {
            let [a, b, c] = map.triangle_image(id);
            dist(a, b).max(dist(b, c)).max(dist(c, a))
        })
        .collect()
}

fn mean_edge_length(map: &PlMap) -> f64 {
    let total: f64 = (0..map.num_triangles())
        .map(|id| {
            let [a, b, c] = map.triangle_image(id);
            dist(a, b) + dist(b, c) + dist(c, a)
        })
        .sum();
    total / (3 * map.num_triangles()) as f64
}

/// A reason for rejecting local injectivity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ImmersionWitness {
    /// The affine piece collapses: `sigma_min <= tol * sigma_max`.
    Degenerate { triangle: usize, sigma_min: f64, sigma_max: f64 },
    /// Two triangles of a star share an edge through `node` and lie on the
    /// same side of it.
    Fold { node: usize, triangles: (usize, usize) },
    /// Two triangles of a star meet only at `node` but their cones at it
    /// come within tolerance of each other.
    ConeContact { node: usize, triangles: (usize, usize), distance: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImmersionVerdict {
    pub witnesses: Vec<ImmersionWitness>,
}

impl ImmersionVerdict {
    pub fn passed(&self) -> bool {
        self.witnesses.is_empty()
    }
}

/// Local injectivity test around every node.
pub fn check_immersion(map: &PlMap, tol: f64) -> ImmersionVerdict {
    let mut witnesses: Vec<ImmersionWitness> = (0..map.num_triangles())
        .into_par_iter()
        .filter_map(|id| {
            let (hi, lo) = singular_values(&map.facet_differential(id));
            (lo <= tol * hi || hi == 0.0).then_some(ImmersionWitness::Degenerate {
                triangle: id,
                sigma_min: lo,
                sigma_max: hi,
            })
        })
        .collect();
    let chart = map.chart();
    let star_witnesses: Vec<ImmersionWitness> = (0..map.num_nodes())
        .into_par_iter()
        .flat_map_iter(|node| {
            let f_count = chart.num_cells();
            let center = if node < f_count {
                Node::Corner(chart.cell(node))
            } else {
                Node::Apex(chart.cell(node - f_count))
            };
            star_checks(map, node, center, tol)
        })
        .collect();
    witnesses.extend(star_witnesses);
    ImmersionVerdict { witnesses }
}

struct StarTriangle {
    id: usize,
    nodes: [Node; 3],
    values: [Vec<f64>; 3],
}

fn star(map: &PlMap, center: Node) -> Vec<StarTriangle> {
    let facets: Vec<CellIndex> = match center {
        Node::Apex(f) => vec![f],
        Node::Corner(c) => vec![
            CellIndex::new(c.k - 1, c.l - 1),
            CellIndex::new(c.k, c.l - 1),
            CellIndex::new(c.k - 1, c.l),
            c,
        ],
    };
    let mut out = Vec::new();
    for f in facets {
        for j in 0..4 {
            let nodes = triangle_nodes(f, j);
            if nodes.contains(&center) {
                out.push(StarTriangle {
                    id: 4 * map.chart().linear(f) + j,
                    nodes,
                    values: nodes.map(|n| node_value(map.tri(), n)),
                });
            }
        }
    }
    out
}

fn unit(v: Vec<f64>) -> Option<Vec<f64>> {
    let n = dot(&v, &v).sqrt();
    (n > 0.0).then(|| v.into_iter().map(|x| x / n).collect())
}

fn star_checks(map: &PlMap, node: usize, center: Node, tol: f64) -> Vec<ImmersionWitness> {
    let tris = star(map, center);
    let origin = node_value(map.tri(), center);
    // directions from the center to the other two vertices of each triangle
    let others = |t: &StarTriangle| -> Vec<(Node, Vec<f64>)> {
        t.nodes
            .iter()
            .zip(&t.values)
            .filter(|(n, _)| **n != center)
            .map(|(n, v)| (*n, sub(v, &origin)))
            .collect()
    };
    let mut out = Vec::new();
    for i in 0..tris.len() {
        for j in i + 1..tris.len() {
            let (oa, ob) = (others(&tris[i]), others(&tris[j]));
            let shared: Vec<&(Node, Vec<f64>)> =
                oa.iter().filter(|(n, _)| ob.iter().any(|(m, _)| m == n)).collect();
            let pair = (tris[i].id, tris[j].id);
            if let Some((edge_node, e)) = shared.first() {
                let c = &oa.iter().find(|(n, _)| n != edge_node).expect("two other vertices").1;
                let d = &ob.iter().find(|(n, _)| n != edge_node).expect("two other vertices").1;
                if let (Some(c), Some(d)) = (normal_part(c, e), normal_part(d, e)) {
                    if dist(&c, &d) < tol {
                        out.push(ImmersionWitness::Fold { node, triangles: pair });
                    }
                }
            } else {
                let dirs = |o: &[(Node, Vec<f64>)]| -> Option<[Vec<f64>; 2]> {
                    Some([unit(o[0].1.clone())?, unit(o[1].1.clone())?])
                };
                let (Some([a, b]), Some([c, d])) = (dirs(&oa), dirs(&ob)) else {
                    continue;
                };
                // the triangle (0, R c, R d) contains every point of the cone
                // spanned by c and d with norm at most 1
                let half = (0.5 * (1.0 + dot(&c, &d))).max(0.0).sqrt();
                let r = 2.0 / half.max(0.05);
                let zero = vec![0.0; c.len()];
                let rc: Vec<f64> = c.iter().map(|x| r * x).collect();
                let rd: Vec<f64> = d.iter().map(|x| r * x).collect();
                let distance = simplex_distance(&[&a, &b], &[&zero, &rc, &rd]);
                if distance < tol {
                    out.push(ImmersionWitness::ConeContact {
                        node,
                        triangles: pair,
                        distance,
                    });
                }
            }
        }
    }
    out
}

/// Unit component of `v` orthogonal to `e`.
fn normal_part(v: &[f64], e: &[f64]) -> Option<Vec<f64>> {
    let ee = dot(e, e);
    if ee == 0.0 {
        return None;
    }
    let t = dot(v, e) / ee;
    unit(v.iter().zip(e).map(|(a, b)| a - t * b).collect())
}

/// A pair of non-adjacent triangles whose images come too close.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContactPair {
    pub first: usize,
    pub second: usize,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingVerdict {
    /// Sorted by `(first, second)` with `first < second`.
    pub pairs: Vec<ContactPair>,
    /// Absolute distance threshold used, `tol` times the mean edge length.
    pub threshold: f64,
}

impl EmbeddingVerdict {
    pub fn passed(&self) -> bool {
        self.pairs.is_empty()
    }
}

/// Global injectivity test over all pairs of triangles sharing no node.
pub fn check_embedding(map: &PlMap, tol: f64) -> EmbeddingVerdict {
    check_embedding_with_order(map, tol, None)
}

/// As [`check_embedding`], inserting triangles into the hierarchy in the
/// given order.
pub fn check_embedding_with_order(map: &PlMap, tol: f64, order: Option<&[usize]>) -> EmbeddingVerdict {
    let threshold = tol * mean_edge_length(map);
    let ids: Vec<usize> = match order {
        Some(o) => o.to_vec(),
        None => (0..map.num_triangles()).collect(),
    };
    let pad = 0.5 * threshold;
    let boxes: Vec<Aabb> = ids.iter().map(|&id| Aabb::of_points(&map.triangle_image(id), pad)).collect();
    let bvh = Bvh::build(boxes);
    let node_ids: Vec<[usize; 3]> = (0..map.num_triangles()).map(|id| map.triangle_node_ids(id)).collect();
    let mut pairs: Vec<ContactPair> = (0..ids.len())
        .into_par_iter()
        .flat_map_iter(|slot| {
            let a = ids[slot];
            let hits = bvh.query(&bvh.boxes()[slot]);
            let ids = &ids;
            let node_ids = &node_ids;
            hits.into_iter().filter_map(move |other| {
                let b = ids[other];
                if b <= a || node_ids[a].iter().any(|n| node_ids[b].contains(n)) {
                    return None;
                }
                let distance = simplex_distance(&map.triangle_image(a), &map.triangle_image(b));
                (distance < threshold).then_some(ContactPair {
                    first: a,
                    second: b,
                    distance,
                })
            })
        })
        .collect();
    pairs.sort_by_key(|p| (p.first, p.second));
    EmbeddingVerdict { pairs, threshold }
}

/// The quotient triangulation as a vertex/face list: corners, then apexes.
pub fn to_soup(map: &PlMap) -> TriangleSoup {
    let tri = map.tri();
    let d = map.dim();
    let vertices = tri
        .quad()
        .values()
        .chunks_exact(d)
        .chain(tri.apex_values().chunks_exact(d))
        .map(|v| v.to_vec())
        .collect();
    let faces = (0..map.num_triangles()).map(|id| map.triangle_node_ids(id)).collect();
    TriangleSoup { dim: d, vertices, faces }
}

/// Writes the full-dimensional mesh to `path` and, with a projection, the
/// selected three coordinates next to it with extension `obj`.
pub fn export_mesh(map: &PlMap, path: &Path, projection: Option<[usize; 3]>) -> io::Result<()> {
    let soup = to_soup(map);
    std::fs::write(path, soup.to_symmesh())?;
    if let Some(coords) = projection {
        if coords.iter().any(|&c| c >= soup.dim) {
            return Err(io::Error::new(io::ErrorKind::InvalidInput, "projection coordinate out of range"));
        }
        std::fs::write(path.with_extension("obj"), soup.to_obj(coords))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::immersion::{builtin, make_clifford, make_flat_plane, sample_quad, sample_tri};
    use crate::mesh::QuadMesh;
    use crate::refine::{apex_refine, barycentric_apexes};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn flat_map(n: usize) -> (PlMap, ImmersionSpec) {
        let spec = make_flat_plane();
        let mesh = sample_quad(&spec, &Chart::square(n).unwrap());
        (build_pl(apex_refine(&mesh, 1e-12).unwrap()), spec)
    }

    fn clifford_map(n: usize) -> PlMap {
        let mesh = sample_quad(&make_clifford(1.0, 1.0), &Chart::square(n).unwrap());
        build_pl(apex_refine(&mesh, 1e-12).unwrap())
    }

    #[test]
    fn interpolates_nodes_and_edge_midpoints() {
        let map = clifford_map(8);
        let chart = map.chart().clone();
        for f in [CellIndex::new(0, 0), CellIndex::new(3, 5), CellIndex::new(7, 7)] {
            let v = chart.grid_to_plane(f.k as f64, f.l as f64);
            assert_eq!(map.eval(v), map.tri().corner(f));
            let z = chart.facet_center(f);
            let apex = map.tri().apex(f);
            assert!(dist(&map.eval(z), &apex) <= 1e-15);
            let mid = (v + z) * 0.5;
            let avg: Vec<f64> = apex.iter().zip(map.tri().corner(f)).map(|(a, b)| 0.5 * (a + b)).collect();
            assert!(dist(&map.eval(mid), &avg) <= 1e-15);
        }
    }

    #[test]
    fn flat_plane_is_reproduced() {
        let (map, spec) = flat_map(4);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let p = Vector2::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
            assert!(dist(&map.eval(p), &spec.eval(p)) <= 1e-13);
        }
        let d = distances(&map, &spec, 4);
        assert!(d.c0 <= 1e-13 && d.differential <= 1e-13);
        for id in 0..map.num_triangles() {
            let m = map.facet_differential(id);
            assert!((m[(0, 0)] - 1.0).abs() <= 1e-13 && (m[(2, 1)] - 1.0).abs() <= 1e-13);
        }
        assert!(pl_isotropy_residual(&map).iter().all(|&r| r == 0.0));
    }

    #[test]
    fn evaluation_is_periodic_and_continuous() {
        let mesh = sample_quad(&builtin("product:figure8,circle").unwrap(), &Chart::square(6).unwrap());
        let map = build_pl(barycentric_apexes(&mesh));
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..200 {
            let p = Vector2::new(rng.gen::<f64>(), rng.gen::<f64>());
            let a = map.eval(p);
            assert!(dist(&a, &map.eval(p + Vector2::new(1.0, 0.0))) <= 1e-12);
            assert!(dist(&a, &map.eval(p + Vector2::new(-2.0, 3.0))) <= 1e-12);
        }
        // points on a diagonal of a facet, evaluated from both incident pieces
        for _ in 0..200 {
            let (k, l) = (rng.gen_range(0..6), rng.gen_range(0..6));
            let t: f64 = rng.gen_range(0.0..0.5);
            let f = CellIndex::new(k, l);
            let nodes0 = triangle_nodes(f, 0);
            let nodes1 = triangle_nodes(f, 1);
            // the shared edge is v_{k+1,l} -> z_kl
            let g = (k as f64 + 1.0 - t, l as f64 + t);
            let w0 = barycentric(nodes0.map(Node::grid), g);
            let w1 = barycentric(nodes1.map(Node::grid), g);
            let val = |nodes: [Node; 3], w: [f64; 3]| combine(&w, &nodes.map(|n| node_value(map.tri(), n)));
            assert!(dist(&val(nodes0, w0), &val(nodes1, w1)) <= 1e-12);
        }
    }

    #[test]
    fn differential_matches_finite_differences() {
        let map = clifford_map(8);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let h = 1e-7;
        for _ in 0..50 {
            let id = rng.gen_range(0..map.num_triangles());
            let dom = map.triangle_domain(id);
            // interior point well away from the edges
            let p = (dom[0] + dom[1] + dom[2]) / 3.0;
            let m = map.facet_differential(id);
            let base = map.eval(p);
            for (c, e) in [Vector2::new(h, 0.0), Vector2::new(0.0, h)].into_iter().enumerate() {
                let fd: Vec<f64> = map.eval(p + e).iter().zip(&base).map(|(a, b)| (a - b) / h).collect();
                for r in 0..4 {
                    assert!((fd[r] - m[(r, c)]).abs() <= 1e-6 * (1.0 + m[(r, c)].abs()));
                }
            }
        }
        let constant = QuadMesh::constant(Chart::square(3).unwrap(), &[1.0, 2.0, 3.0, 4.0]);
        let cmap = build_pl(barycentric_apexes(&constant));
        assert_eq!(cmap.facet_differential(5), MatrixXx2::zeros(4));
    }

    #[test]
    fn isotropy_residuals() {
        let map = clifford_map(8);
        assert!(pl_isotropy_residual(&map).iter().all(|&r| r <= 1e-15));
        let spec = builtin("product:wobble,circle").unwrap();
        let th = 0.5f64.atan();
        let chart = Chart::build(Matrix2::identity(), Matrix2::new(th.cos(), -th.sin(), th.sin(), th.cos()), 8).unwrap();
        let tau = sample_quad(&spec, &chart);
        let (rho, _) = crate::solver::project_isotropic(&tau, &Default::default()).unwrap();
        let bary = build_pl(barycentric_apexes(&rho));
        let worst = pl_isotropy_residual(&bary).into_iter().fold(0.0, f64::max);
        assert!(worst > 1e-6, "{worst}");
        let refined = build_pl(apex_refine(&rho, 1e-9).unwrap());
        let scales = triangle_scales(&refined);
        for (r, s) in pl_isotropy_residual(&refined).iter().zip(scales) {
            assert!(*r <= 1e-9 * s * s);
        }
    }

    #[test]
    fn immersion_checks() {
        let constant = QuadMesh::constant(Chart::square(4).unwrap(), &[1.0, 2.0, 3.0, 4.0]);
        let verdict = check_immersion(&build_pl(barycentric_apexes(&constant)), DEFAULT_IMMERSION_TOL);
        assert!(!verdict.passed());
        assert!(verdict
            .witnesses
            .iter()
            .any(|w| matches!(w, ImmersionWitness::Degenerate { .. })));

        assert!(check_immersion(&clifford_map(8), DEFAULT_IMMERSION_TOL).passed());
        assert!(check_immersion(&flat_map(4).0, DEFAULT_IMMERSION_TOL).passed());

        // pushing an apex through the opposite side folds its triangles over
        let mesh = sample_quad(&make_flat_plane(), &Chart::square(4).unwrap());
        let tri = barycentric_apexes(&mesh);
        let mut apexes = tri.apex_values().to_vec();
        apexes[0] = 0.125;
        apexes[2] = -0.3;
        let folded = build_pl(TriMesh::new(mesh, apexes));
        let verdict = check_immersion(&folded, DEFAULT_IMMERSION_TOL);
        assert!(verdict.witnesses.iter().any(|w| matches!(w, ImmersionWitness::Fold { .. })));
    }

    #[test]
    fn embedding_of_flat_and_clifford() {
        let (flat, _) = flat_map(4);
        let v = check_embedding(&flat, DEFAULT_EMBEDDING_TOL);
        assert!(v.passed(), "{:?}", v.pairs);
        assert!(check_embedding(&clifford_map(8), DEFAULT_EMBEDDING_TOL).passed());
    }

    #[test]
    fn embedding_is_independent_of_insertion_order() {
        let mesh = sample_quad(&builtin("product:figure8,circle").unwrap(), &Chart::square(8).unwrap());
        let map = build_pl(apex_refine(&mesh, 1e-12).unwrap());
        let base = check_embedding(&map, DEFAULT_EMBEDDING_TOL);
        assert!(!base.passed());
        let mut order: Vec<usize> = (0..map.num_triangles()).rev().collect();
        order.rotate_left(17);
        assert_eq!(check_embedding_with_order(&map, DEFAULT_EMBEDDING_TOL, Some(&order)), base);
        for p in &base.pairs {
            assert!(p.first < p.second);
        }
    }

    #[test]
    fn export_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let (flat, _) = flat_map(2);
        let path = dir.path().join("flat.symmesh");
        export_mesh(&flat, &path, Some([0, 1, 2])).unwrap();
        let soup = TriangleSoup::parse_symmesh(&std::fs::read_to_string(&path).unwrap()).unwrap();
        assert_eq!(soup.vertices.len(), 8);
        assert_eq!(soup.faces.len(), 16);
        assert_eq!(soup, to_soup(&flat));
        let obj = TriangleSoup::parse_obj(&std::fs::read_to_string(path.with_extension("obj")).unwrap()).unwrap();
        assert_eq!(obj.faces, soup.faces);

        let cl = clifford_map(8);
        let soup = to_soup(&cl);
        assert_eq!((soup.vertices.len(), soup.faces.len()), (128, 256));
        assert!(export_mesh(&cl, &dir.path().join("x.symmesh"), Some([0, 1, 7])).is_err());
    }

    #[test]
    fn interpolant_of_samples_agrees_at_nodes() {
        let spec = make_clifford(1.0, 1.0);
        let chart = Chart::square(8).unwrap();
        let map = build_pl(sample_tri(&spec, &chart));
        for f in chart.cells() {
            let z = chart.facet_center(f);
            assert!(dist(&map.eval(z), &spec.eval(z)) <= 1e-14);
        }
    }
}
