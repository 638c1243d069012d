//! Systemic loss along the shock ray c(eps) = c0 - eps q.
//!
//! Prints the crossing and the first default of each node. Pass a path to
//! also write the sweep CSV: `cargo run --example shock_sweep -- sweep.csv`.

use std::fs::File;

use satnet::shock::{sweep, write_sweep_csv, ShockRay};
use satnet::{Network, SolveOptions};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let net = Network::from_rows(
        &[vec![0.0, 0.75, 0.25], vec![0.0, 0.0, 1.0], vec![0.3, 0.7, 0.0]],
        vec![5.0, 3.0, 2.0],
    )?;
    let ray = ShockRay::new(vec![5.0, 2.0, 2.0], vec![0.07, 0.59, 0.34], 0.0, 14.0, 1401)?;
    let report = sweep(&net, &ray, &SolveOptions::default())?;

    for x in &report.crossings {
        println!("crossing at eps = {} with c = {:.4?}", x.eps_star, x.c_star);
        println!("  below: x = {:.6?}, loss {:.6}", x.x_below, x.loss_below);
        println!("  above: x = {:.6?}, loss {:.6}", x.x_above, x.loss_above);
        println!("  jump {:.6?}, loss jump {:.6}", x.jump_vector, x.loss_jump);
    }
    for node in 0..net.n() {
        if let Some(r) = report.records.iter().find(|r| r.defaults.contains(&node)) {
            println!("node {} first below its obligation at eps = {}", node + 1, r.eps);
        }
    }
    println!("default sets only grow: {}", report.defaults_monotone);

    if let Some(path) = std::env::args().nth(1) {
        write_sweep_csv(&mut File::create(&path)?, net.n(), &report.records)?;
        println!("wrote {path}");
    }
    Ok(())
}
