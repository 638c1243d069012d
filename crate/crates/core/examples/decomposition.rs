//! Transient part and trapping sets of a network, and how the solver uses
//! them.

use satnet::graph::{deficiency_set, is_out_connected, spectral_radius};
use satnet::{classify, decompose, equilibrium_bounds, Network, SolveOptions};

fn main() -> satnet::Result<()> {
    // a leaking 3-cycle feeding a closed 2-cycle and an absorbing node
    let rows = vec![
        vec![0.0, 0.6, 0.0, 0.2, 0.0, 0.0],
        vec![0.0, 0.0, 1.0, 0.0, 0.0, 0.0],
        vec![0.5, 0.0, 0.0, 0.0, 0.0, 0.4],
        vec![0.0, 0.0, 0.0, 0.0, 1.0, 0.0],
        vec![0.0, 0.0, 0.0, 1.0, 0.0, 0.0],
        vec![0.0, 0.0, 0.0, 0.0, 0.0, 0.5],
    ];
    let net = Network::from_rows(&rows, vec![2.0, 1.0, 1.5, 1.0, 1.0, 3.0])?;
    let d = decompose(&net);
    println!("transient {:?}", d.transient);
    for (k, s) in d.sinks.iter().enumerate() {
        let rho = spectral_radius(net.restrict(&s.nodes).p(), 2000);
        println!("sink {k}: {:?} out_connected={} radius={rho:.4}", s.nodes, s.out_connected);
    }
    println!("leaking rows {:?}", deficiency_set(&net));
    println!("transient block out-connected: {}", is_out_connected(&net, &d.transient)?);

    let opts = SolveOptions::default();
    let c = vec![0.5, 0.0, 0.0, 0.0, 0.0, -0.1];
    let cls = classify(&net, &c, &opts)?;
    println!("transient values {:.4?}", cls.transient_values);
    for s in &cls.sinks {
        println!("sink {:?}: {:?}, flow in {:.4?}", s.nodes, s.kind, s.effective_flow);
    }
    let (lo, hi) = equilibrium_bounds(&net, &c, &opts)?;
    println!("x_min {:.4?}\nx_max {:.4?}", lo.x, hi.x);
    Ok(())
}
