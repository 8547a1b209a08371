//! Projects sampled meshes onto isotropic quadrangular meshes.
//!
//! Run with `cargo run --release --example projection`.

use polytori::pipeline::{run_stages, Config, Stage};

fn main() {
    let cfg = Config {
        spec: "product:wobble,circle".into(),
        chart_angle: 0.5f64.atan(),
        ..Config::default()
    };
    println!("{:>4} {:>6} {:>12} {:>12} {:>12}", "N", "iters", "mu before", "mu after", "|rho - tau|");
    for n in [8usize, 16, 32, 64] {
        let art = run_stages(&cfg, n, Stage::Solve).expect("solve");
        let r = &art.report;
        let solve = r.solve.as_ref().unwrap();
        println!(
            "{n:>4} {:>6} {:>12.3e} {:>12.3e} {:>12.3e}",
            solve.iterations,
            r.samples.mu_c0,
            r.projected.as_ref().unwrap().mu_c0,
            solve.correction_c0
        );
    }
}
