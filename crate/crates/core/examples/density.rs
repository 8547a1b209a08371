//! Samples a torus on a chart and measures its symplectic density in the
//! three weak norms.
//!
//! Run with `cargo run --release --example density [spec]`.

use nalgebra::Matrix2;
use polytori::density::{facet_liouville, symplectic_density, weak_norm, WeakNorm, DEFAULT_ALPHA};
use polytori::immersion::{builtin, sample_quad};
use polytori::lattice::Chart;
use polytori::study::fit_slope;

fn main() {
    let name = std::env::args().nth(1).unwrap_or_else(|| "product:wobble,circle".into());
    let spec = builtin(&name).unwrap_or_else(|| panic!("unknown spec {name}"));
    // An oblique reference isometry; axis-aligned charts sample product tori
    // into exactly isotropic meshes.
    let (s, c) = 0.5f64.atan().sin_cos();
    let rot = Matrix2::new(c, -s, s, c);

    println!("{name}");
    println!("{:>4} {:>12} {:>12} {:>12} {:>12} {:>12}", "N", "C0", "C1w", "Holder", "sum", "lambda*N^2");
    let mut rows = Vec::new();
    for n in [8usize, 16, 32, 64] {
        let chart = Chart::build(*spec.gamma_basis(), rot, n).expect("chart");
        let tau = sample_quad(&spec, &chart);
        let mu = symplectic_density(&tau);
        let c0 = weak_norm(&mu, WeakNorm::C0);
        let c1 = weak_norm(&mu, WeakNorm::C1w);
        let h = weak_norm(&mu, WeakNorm::C0AlphaW(DEFAULT_ALPHA));
        let lam = facet_liouville(&tau).max_abs() * (n * n) as f64;
        println!("{n:>4} {c0:>12.4e} {c1:>12.4e} {h:>12.4e} {:>12.1e} {lam:>12.4e}", mu.sum());
        rows.push((n as f64, c0, c1, h));
    }
    for (label, pick) in [("C0", 1), ("C1w", 2), ("Holder", 3)] {
        let pairs: Vec<(f64, f64)> = rows
            .iter()
            .map(|r| (r.0, [r.1, r.2, r.3][pick - 1]))
            .collect();
        match fit_slope(&pairs) {
            Ok(s) => println!("slope {label}: {s:.3}"),
            Err(e) => println!("slope {label}: n/a ({e})"),
        }
    }
}
