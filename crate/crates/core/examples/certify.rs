//! Builds piecewise-linear tori, certifies isotropy, immersion and embedding,
//! and exports the meshes.
//!
//! Run with `cargo run --release --example certify [out-dir]`.

use std::path::PathBuf;

use polytori::pipeline::{run_pipeline, write_outputs, Config};

fn main() {
    let out = std::env::args().nth(1).map(PathBuf::from);
    for spec in ["clifford", "product:figure8,circle"] {
        let mut cfg = Config {
            spec: spec.into(),
            n: 16,
            ..Config::default()
        };
        cfg.certify.embedding_check = true;
        cfg.output.projection = Some([0, 1, 2]);
        cfg.output.dir = out.as_ref().map(|d| d.join(spec.replace([':', ','], "_")));
        let art = run_pipeline(&cfg).expect("pipeline");
        let r = &art.report;
        let pl = r.pl.as_ref().unwrap();
        let imm = r.immersion.as_ref().unwrap();
        let emb = r.embedding.as_ref().unwrap();
        println!("{spec} at N = {}", r.n);
        println!("  |omega| / scale^2 <= {:.2e}", pl.isotropy_ratio);
        println!("  C0 distance {:.3e}, C1 distance {:.3e}", pl.c0, pl.c1);
        println!("  immersion: {}", if imm.passed { "pass" } else { "fail" });
        println!("  embedding: {} ({} close pairs)", if emb.passed { "pass" } else { "fail" }, emb.pairs.len());
        for p in emb.pairs.iter().take(3) {
            println!("    triangles {} and {} at distance {:.2e}", p.0, p.1, p.2);
        }
        for path in write_outputs(&cfg, &art).expect("write") {
            println!("  wrote {}", path.display());
        }
    }
}
