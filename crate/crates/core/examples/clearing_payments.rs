//! Clearing payments of a small interbank system given as liabilities.
//!
//! Run with `cargo run --example clearing_payments`.

use nalgebra::DMatrix;
use satnet::model::{from_liabilities, LiabilityData};
use satnet::{equilibrium_bounds, nash_payments, node_partition, SolveOptions};

fn main() -> satnet::Result<()> {
    // bank i owes bank j W[i][j]
    let w = DMatrix::from_row_slice(4, 4, &[
        0.0, 10.0, 4.0, 0.0,
        3.0, 0.0, 6.0, 2.0,
        0.0, 5.0, 0.0, 8.0,
        6.0, 0.0, 1.0, 0.0,
    ]);
    let assets = vec![8.0, 2.0, 1.0, 5.0];
    let senior = vec![1.0, 0.5, 2.0, 0.0];
    let external = vec![2.0, 0.0, 1.0, 3.0];
    let data = LiabilityData::new(w, assets, senior, external)?;

    let (net, c) = from_liabilities(&data)?;
    let opts = SolveOptions::default();
    let (lo, hi) = equilibrium_bounds(&net, &c, &opts)?;
    println!("obligations w = {:?}", net.w());
    println!("net external flow c = {c:?}");
    println!("clearing vector   x = {:.4?}", lo.x);
    if lo.x != hi.x {
        println!("(maximal clearing vector {:.4?})", hi.x);
    }

    let part = node_partition(&net, &c, &lo.x, &opts)?;
    println!("paying in full: {:?}", part.surplus);
    println!("partial default: {:?}", part.exposed);
    println!("paying nothing: {:?}", part.deficit);

    let pay = nash_payments(&net, &c, &lo.x)?;
    for (i, row) in pay.payments.iter().enumerate() {
        println!("bank {i} pays {:.3?} inside, {:.3} outside", row, pay.external[i]);
    }
    println!("best-response gap {:.1e}", pay.residual);
    Ok(())
}
