//! The flow dx/dt = S(P'x + c) - x settles on an equilibrium. From below it
//! reaches the minimal one, from above the maximal one.

use satnet::dynamics::{simulate, DEFAULT_DT, DEFAULT_T_END};
use satnet::{equilibrium_bounds, equilibrium_set, Network, SolveOptions};

fn main() -> satnet::Result<()> {
    let net = Network::from_rows(
        &[vec![0.0, 0.75, 0.25], vec![0.0, 0.0, 1.0], vec![0.3, 0.7, 0.0]],
        vec![5.0, 3.0, 2.0],
    )?;
    let c = [4.37, -3.31, -1.06];
    let opts = SolveOptions::default();
    let (lo, hi) = equilibrium_bounds(&net, &c, &opts)?;
    let set = equilibrium_set(&net, &c, &opts)?;

    for (name, x0, target) in [("below", vec![0.0; 3], &lo.x), ("above", net.w().to_vec(), &hi.x)] {
        let traj = simulate(&net, &c, &x0, DEFAULT_T_END, DEFAULT_DT)?;
        let err = traj.terminal.iter().zip(target).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        println!("from {name}: x(T) = {:.8?}, residual {:.1e}, off by {err:.1e}", traj.terminal, traj.residual);
    }

    let mid = simulate(&net, &c, &[2.0, 1.0, 1.0], DEFAULT_T_END, DEFAULT_DT)?;
    println!(
        "from inside: x(T) = {:.6?}, distance to the segment {:.1e}",
        mid.terminal,
        set.distance(&mid.terminal)
    );
    Ok(())
}
