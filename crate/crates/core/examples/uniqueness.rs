//! Uniqueness of equilibria on a strongly connected stochastic network.
//!
//! A flow that does not sum to zero always has a single equilibrium. A
//! zero-sum flow may have a whole segment of them.

use satnet::structure::SinkComponent;
use satnet::{classify, equilibrium_set, Network, SolveOptions};

fn main() -> satnet::Result<()> {
    let net = Network::from_rows(
        &[vec![0.0, 0.75, 0.25], vec![0.0, 0.0, 1.0], vec![0.3, 0.7, 0.0]],
        vec![5.0, 3.0, 2.0],
    )?;
    let opts = SolveOptions::default();

    let flows = [
        vec![1.0, 0.5, 0.0],
        vec![-1.0, 1.0, 0.0],
        vec![-2.0, 2.0, 0.0],
        vec![0.0, 0.0, 0.0],
        vec![4.37, -3.31, -1.06],
    ];
    for c in &flows {
        let cls = classify(&net, c, &opts)?;
        let sink = &cls.sinks[0];
        print!("c = {c:?}: {:?}", sink.kind);
        if let Some(v) = sink.condition_value {
            print!(", condition {v:.6}");
        }
        println!();

        let set = equilibrium_set(&net, c, &opts)?;
        match &set.sinks[0] {
            SinkComponent::Unique { x, .. } => println!("    x = {x:.6?}"),
            SinkComponent::Segment { nu, pi, alpha_min, alpha_max, .. } => {
                println!("    x = {nu:.4?} + a {pi:.4?}, a in [{alpha_min:.6}, {alpha_max:.6}]");
                println!("    from {:.6?} to {:.6?}", set.lower(), set.upper());
            }
        }
    }
    Ok(())
}
