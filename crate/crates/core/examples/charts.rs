//! Almost-isometric charts of a period lattice and their convergence.
//!
//! Run with `cargo run --example charts`.

use nalgebra::Matrix2;
use polytori::lattice::{CellIndex, Chart};

fn main() {
    let s3 = 3f64.sqrt();
    let hexagonal = Matrix2::new(1.0, 0.5, 0.0, s3 / 2.0);
    println!("{:>5} {:>22} {:>12} {:>8}", "N", "M", "|A - I| N", "cells");
    for n in [8usize, 16, 32, 64, 128, 256] {
        let chart = Chart::build(hexagonal, Matrix2::identity(), n).expect("chart");
        let dev = (chart.a_matrix() - Matrix2::identity()).norm() * n as f64;
        println!("{n:>5} {:>22} {dev:>12.5} {:>8}", format!("{:?}", chart.m_matrix()), chart.num_cells());
    }

    let chart = Chart::build(hexagonal, Matrix2::identity(), 4).expect("chart");
    let far = CellIndex::new(17, -9);
    let (canon, z) = chart.reduce(far);
    println!("\nN = 4: cell {far:?} reduces to {canon:?} after {z:?} periods");
    let p = chart.vertex_position(far);
    let q = chart.vertex_position(canon);
    println!("plane offset {:.3?} is a period combination", (p - q).as_slice());
    println!("diagonal parity descends to the quotient: {}", chart.parity_descends());
}
