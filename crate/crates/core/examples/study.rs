//! Convergence study with fitted log-log slopes, printed as CSV.
//!
//! Run with `cargo run --release --example study [spec]`.

use polytori::pipeline::Config;
use polytori::study::convergence_study;

fn main() {
    let spec = std::env::args().nth(1).unwrap_or_else(|| "product:wobble,circle".into());
    let cfg = Config {
        chart_angle: 0.5f64.atan(),
        spec,
        ..Config::default()
    };
    let table = convergence_study(&cfg, &[8, 16, 32, 64]).expect("valid config");
    print!("{}", table.to_csv());
}
