//! The standard symplectic structure on `R^2n`.
//!
//! Points are flat slices with coordinates ordered `(x1, y1, x2, y2, ..., xn, yn)`.
//! Every exported mesh and every built-in map follows this ordering.

/// `omega(a, b) = sum_j a_xj * b_yj - a_yj * b_xj`.
#[inline]
pub fn omega(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    debug_assert!(a.len().is_multiple_of(2));
    a.chunks_exact(2)
        .zip(b.chunks_exact(2))
        .map(|(p, q)| p[0] * q[1] - p[1] * q[0])
        .sum()
}

/// Complex structure `J(x, y) = (-y, x)` on each pair.
pub fn apply_j(a: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len()];
    for (o, p) in out.chunks_exact_mut(2).zip(a.chunks_exact(2)) {
        o[0] = -p[1];
        o[1] = p[0];
    }
    out
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

#[inline]
pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Liouville form `lambda = sum_j x_j dy_j` integrated along the straight
/// segment from `a` to `b`. Up to an exact term this equals `omega(a, b) / 2`,
/// and the exact terms cancel around any closed polygon.
pub fn liouville_segment(a: &[f64], b: &[f64]) -> f64 {
    a.chunks_exact(2)
        .zip(b.chunks_exact(2))
        .map(|(p, q)| 0.5 * (p[0] + q[0]) * (q[1] - p[1]))
        .sum()
}
