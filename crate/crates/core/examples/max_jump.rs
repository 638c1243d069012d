//! Largest possible jump of the equilibrium, and how close random flows
//! come to it.

use satnet::shock::max_jump_norm;
use satnet::{equilibrium_bounds, Network, SolveOptions};

fn main() -> satnet::Result<()> {
    let net = Network::from_rows(
        &[vec![0.0, 0.75, 0.25], vec![0.0, 0.0, 1.0], vec![0.3, 0.7, 0.0]],
        vec![5.0, 3.0, 2.0],
    )?;
    for (label, p) in [("1", 1.0), ("2", 2.0), ("inf", f64::INFINITY)] {
        println!("max jump, {label}-norm: {:.6}", max_jump_norm(&net, p)?);
    }

    // zero-sum flows on a grid: the only ones with a gap between the bounds
    let opts = SolveOptions::default();
    let mut best = (0.0, vec![0.0; 3]);
    for i in -10..=10 {
        for j in -10..=10 {
            let c = vec![0.3 * i as f64, 0.3 * j as f64, -0.3 * (i + j) as f64];
            let (lo, hi) = equilibrium_bounds(&net, &c, &opts)?;
            let gap: f64 = hi.x.iter().zip(&lo.x).map(|(a, b)| a - b).sum();
            if gap > best.0 {
                best = (gap, c);
            }
        }
    }
    println!("largest 1-norm gap on the grid: {:.6} at c = {:.2?}", best.0, best.1);
    Ok(())
}
