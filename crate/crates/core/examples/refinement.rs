//! Optimal apexes: a single quadrilateral, then a whole projected mesh.
//!
//! Run with `cargo run --release --example refinement`.

use polytori::pipeline::{run_stages, Config, Stage};
use polytori::refine::{barycenter, optimal_apex, quad_dimension, ApexSystem};

fn main() {
    // A Lagrangian skew quadrilateral in R^4: (x1, y1, x2, y2).
    let a = [0.0, 0.0, 0.0, 0.0];
    let b = [1.0, 0.0, 0.0, 0.0];
    let c = [1.0, 0.0, 1.0, 0.0];
    let d = [0.0, 0.3, 1.0, -0.3];
    let quad = [&a[..], &b, &c, &d];
    let apex = optimal_apex(&quad, 1e-12).expect("isotropic quad");
    let system = ApexSystem::new(&quad);
    println!("barycenter     {:?}", barycenter(&quad));
    println!("optimal apex   {apex:.4?}");
    println!("residuals      {:?}", system.residuals(&apex).iter().map(|r| format!("{r:.1e}")).collect::<Vec<_>>());
    println!("constraint rank {}", quad_dimension(&quad, 1e-10));

    let cfg = Config {
        spec: "clifford".into(),
        ..Config::default()
    };
    println!("\n{:>4} {:>14} {:>14} {:>14}", "N", "|rho' - tau'|", "bary - tau'", "apex - bary");
    for n in [8usize, 16, 32, 64] {
        let art = run_stages(&cfg, n, Stage::Refine).expect("refine");
        let r = art.report.refine.as_ref().unwrap();
        println!("{n:>4} {:>14.3e} {:>14.3e} {:>14.3e}", r.tri_c0, r.barycentric_c0, r.apex_offset_c0);
    }
}
