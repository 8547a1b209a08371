//! Distances between simplices in `R^d` and a bounding-volume hierarchy over
//! axis-aligned boxes.

use nalgebra::{DMatrix, DVector};

/// Smallest distance between the convex hulls of two point sets with at most
/// three points each.
///
/// The minimizing pair lies in the relative interiors of some pair of faces,
/// where it is the unconstrained closest pair of the affine hulls. Every pair
/// of faces is tried and only interior solutions are kept; vertex pairs make
/// the candidate set nonempty.
pub fn simplex_distance(p: &[&[f64]], q: &[&[f64]]) -> f64 {
    assert!((1..=3).contains(&p.len()) && (1..=3).contains(&q.len()));
    let fp = faces(p.len());
    let fq = faces(q.len());
    let mut best = f64::INFINITY;
    for a in &fp {
        for b in &fq {
            if let Some(d) = face_distance(p, a, q, b) {
                best = best.min(d);
            }
        }
    }
    best
}

fn faces(n: usize) -> Vec<Vec<usize>> {
    (1u32..(1 << n))
        .map(|mask| (0..n).filter(|i| mask & (1 << i) != 0).collect())
        .collect()
}

fn face_distance(p: &[&[f64]], fa: &[usize], q: &[&[f64]], fb: &[usize]) -> Option<f64> {
    let dim = p[0].len();
    let p0 = p[fa[0]];
    let q0 = q[fb[0]];
    let k = fa.len() - 1;
    let m = fb.len() - 1;
    let base: Vec<f64> = (0..dim).map(|d| p0[d] - q0[d]).collect();
    if k + m == 0 {
        return Some(norm(&base));
    }
    // x(s) - y(t) = base + sum s_i (p_i - p0) - sum t_j (q_j - q0)
    let cols = DMatrix::from_fn(dim, k + m, |d, c| {
        if c < k {
            p[fa[c + 1]][d] - p0[d]
        } else {
            -(q[fb[c - k + 1]][d] - q0[d])
        }
    });
    let gram = cols.transpose() * &cols;
    let rhs = -(cols.transpose() * DVector::from_column_slice(&base));
    let chol = gram.cholesky()?;
    let sol = chol.solve(&rhs);
    let (s, t) = sol.as_slice().split_at(k);
    if !interior(s) || !interior(t) {
        return None;
    }
    let r = DVector::from_column_slice(&base) + &cols * &sol;
    Some(r.norm())
}

fn interior(coords: &[f64]) -> bool {
    coords.iter().all(|&c| c > 0.0) && coords.iter().sum::<f64>() < 1.0
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Axis-aligned box.
#[derive(Debug, Clone, PartialEq)]
pub struct Aabb {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl Aabb {
    pub fn of_points(points: &[&[f64]], pad: f64) -> Self {
        let dim = points[0].len();
        let mut min = vec![f64::INFINITY; dim];
        let mut max = vec![f64::NEG_INFINITY; dim];
        for p in points {
            for d in 0..dim {
                min[d] = min[d].min(p[d]);
                max[d] = max[d].max(p[d]);
            }
        }
        min.iter_mut().for_each(|x| *x -= pad);
        max.iter_mut().for_each(|x| *x += pad);
        Self { min, max }
    }

    pub fn overlaps(&self, other: &Aabb) -> bool {
        self.min
            .iter()
            .zip(&self.max)
            .zip(other.min.iter().zip(&other.max))
            .all(|((a0, a1), (b0, b1))| a0 <= b1 && b0 <= a1)
    }

    fn union(&self, other: &Aabb) -> Aabb {
        Aabb {
            min: self.min.iter().zip(&other.min).map(|(a, b)| a.min(*b)).collect(),
            max: self.max.iter().zip(&other.max).map(|(a, b)| a.max(*b)).collect(),
        }
    }

    fn center(&self, d: usize) -> f64 {
        0.5 * (self.min[d] + self.max[d])
    }
}

const LEAF_SIZE: usize = 4;

#[derive(Debug)]
enum Node {
    Leaf { bounds: Aabb, items: Vec<usize> },
    Inner { bounds: Aabb, children: [Box<Node>; 2] },
}

impl Node {
    fn bounds(&self) -> &Aabb {
        match self {
            Node::Leaf { bounds, .. } | Node::Inner { bounds, .. } => bounds,
        }
    }
}

/// Median-split hierarchy over a fixed set of boxes.
#[derive(Debug)]
pub struct Bvh {
    boxes: Vec<Aabb>,
    root: Option<Node>,
}

impl Bvh {
    pub fn build(boxes: Vec<Aabb>) -> Self {
        let items: Vec<usize> = (0..boxes.len()).collect();
        let root = (!items.is_empty()).then(|| build_node(&boxes, items));
        Self { boxes, root }
    }

    pub fn boxes(&self) -> &[Aabb] {
        &self.boxes
    }

    /// Indices of stored boxes overlapping `query`, in increasing order.
    pub fn query(&self, query: &Aabb) -> Vec<usize> {
        let mut out = Vec::new();
        let mut stack: Vec<&Node> = self.root.iter().collect();
        while let Some(node) = stack.pop() {
            if !node.bounds().overlaps(query) {
                continue;
            }
            match node {
                Node::Leaf { items, .. } => {
                    out.extend(items.iter().copied().filter(|&i| self.boxes[i].overlaps(query)))
                }
                Node::Inner { children, .. } => stack.extend(children.iter().map(|c| &**c)),
            }
        }
        out.sort_unstable();
        out
    }
}

fn build_node(boxes: &[Aabb], mut items: Vec<usize>) -> Node {
    let bounds = items[1..]
        .iter()
        .fold(boxes[items[0]].clone(), |acc, &i| acc.union(&boxes[i]));
    if items.len() <= LEAF_SIZE {
        return Node::Leaf { bounds, items };
    }
    let axis = (0..bounds.min.len())
        .max_by(|&a, &b| {
            let ea = bounds.max[a] - bounds.min[a];
            let eb = bounds.max[b] - bounds.min[b];
            ea.total_cmp(&eb)
        })
        .unwrap_or(0);
    items.sort_by(|&a, &b| boxes[a].center(axis).total_cmp(&boxes[b].center(axis)).then(a.cmp(&b)));
    let right = items.split_off(items.len() / 2);
    Node::Inner {
        bounds,
        children: [Box::new(build_node(boxes, items)), Box::new(build_node(boxes, right))],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Dense barycentric grid search, an upper bound that converges to the
    /// true distance.
    fn brute_distance(p: &[&[f64]; 3], q: &[&[f64]; 3], steps: usize) -> f64 {
        let pts = |t: &[&[f64]; 3]| -> Vec<Vec<f64>> {
            let mut out = Vec::new();
            for i in 0..=steps {
                for j in 0..=steps - i {
                    let (a, b) = (i as f64 / steps as f64, j as f64 / steps as f64);
                    let c = 1.0 - a - b;
                    out.push((0..t[0].len()).map(|d| a * t[0][d] + b * t[1][d] + c * t[2][d]).collect());
                }
            }
            out
        };
        let (pp, qq) = (pts(p), pts(q));
        let mut best = f64::INFINITY;
        for x in &pp {
            for y in &qq {
                best = best.min(norm(&x.iter().zip(y).map(|(a, b)| a - b).collect::<Vec<_>>()));
            }
        }
        best
    }

    #[test]
    fn known_distances() {
        let a = [0.0, 0.0, 0.0, 0.0];
        let b = [1.0, 0.0, 0.0, 0.0];
        let c = [0.0, 1.0, 0.0, 0.0];
        // parallel copy of the triangle lifted by 2 in x2
        let a2 = [0.2, 0.2, 2.0, 0.0];
        let b2 = [1.2, 0.2, 2.0, 0.0];
        let c2 = [0.2, 1.2, 2.0, 0.0];
        assert!((simplex_distance(&[&a, &b, &c], &[&a2, &b2, &c2]) - 2.0).abs() <= 1e-12);
        // triangles in orthogonal planes through a common point
        let d = [0.0, 0.0, 1.0, 0.0];
        let e = [0.0, 0.0, 0.0, 1.0];
        assert_eq!(simplex_distance(&[&a, &b, &c], &[&a, &d, &e]), 0.0);
        // transversal crossing in R^4 at an interior point
        let m = [0.25, 0.25, -1.0, 0.0];
        let n = [0.25, 0.25, 1.0, 1.0];
        let o = [0.25, 0.25, 1.0, -1.0];
        assert!(simplex_distance(&[&a, &b, &c], &[&m, &n, &o]) <= 1e-12);
        // point to segment
        let s0 = [0.0, 1.0];
        let s1 = [2.0, 1.0];
        let pt = [1.0, 0.0];
        assert!((simplex_distance(&[&pt], &[&s0, &s1]) - 1.0).abs() <= 1e-15);
    }

    #[test]
    fn distance_matches_grid_search() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..40 {
            let tri = |rng: &mut ChaCha8Rng, off: f64| -> [Vec<f64>; 3] {
                std::array::from_fn(|_| (0..4).map(|_| off + rng.gen_range(-1.0..1.0)).collect())
            };
            let off = rng.gen_range(0.0..1.5);
            let (p, q) = (tri(&mut rng, 0.0), tri(&mut rng, off));
            let pr = [p[0].as_slice(), &p[1], &p[2]];
            let qr = [q[0].as_slice(), &q[1], &q[2]];
            let exact = simplex_distance(&pr, &qr);
            let grid = brute_distance(&pr, &qr, 40);
            assert!(exact <= grid + 1e-12);
            assert!(grid - exact <= 0.05, "{exact} vs {grid}");
        }
    }

    #[test]
    fn bvh_query_matches_linear_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let boxes: Vec<Aabb> = (0..300)
            .map(|_| {
                let c: Vec<f64> = (0..4).map(|_| rng.gen_range(-5.0..5.0)).collect();
                let r: f64 = rng.gen_range(0.01..0.5);
                Aabb {
                    min: c.iter().map(|x| x - r).collect(),
                    max: c.iter().map(|x| x + r).collect(),
                }
            })
            .collect();
        let bvh = Bvh::build(boxes.clone());
        for q in boxes.iter().take(50) {
            let scan: Vec<usize> = (0..boxes.len()).filter(|&i| boxes[i].overlaps(q)).collect();
            assert_eq!(bvh.query(q), scan);
        }
        assert!(Bvh::build(Vec::new()).query(&boxes[0]).is_empty());
    }
}
