//! Continuous-time flow `dx/dt = S_w(P'x + c) - x`.
//!
//! Rest points of the flow are exactly the equilibria, and trajectories
//! settle on one of them, which makes the flow an independent check of the
//! fixed-point solver.

use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::format::fmt_num;
use crate::model::Network;

pub const TOL_DYN: f64 = 1e-8;
pub const DEFAULT_T_END: f64 = 200.0;
pub const DEFAULT_DT: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub terminal: Vec<f64>,
    /// `|S_w(P'x + c) - x|_inf` at the terminal state.
    pub residual: f64,
}

fn field(net: &Network, c: &[f64], x: &[f64]) -> Vec<f64> {
    net.apply(x, c).iter().zip(x).map(|(s, v)| s - v).collect()
}

fn axpy(x: &[f64], h: f64, k: &[f64]) -> Vec<f64> {
    x.iter().zip(k).map(|(a, b)| a + h * b).collect()
}

fn rk4_step(net: &Network, c: &[f64], x: &[f64], h: f64) -> Vec<f64> {
    let k1 = field(net, c, x);
    let k2 = field(net, c, &axpy(x, 0.5 * h, &k1));
    let k3 = field(net, c, &axpy(x, 0.5 * h, &k2));
    let k4 = field(net, c, &axpy(x, h, &k3));
    (0..x.len())
        .map(|i| x[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect()
}

/// Classical Runge-Kutta integration from `x0` up to `t_end`. The last step
/// is shortened to land on `t_end` exactly.
pub fn simulate(net: &Network, c: &[f64], x0: &[f64], t_end: f64, dt: f64) -> Result<Trajectory> {
    net.check_vector("c", c)?;
    net.check_vector("x0", x0)?;
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::input("dt must be positive"));
    }
    if !(t_end >= dt && t_end.is_finite()) {
        return Err(Error::input("t_end must be at least dt"));
    }
    let steps = (t_end / dt - 1e-9).ceil() as usize;
    let mut times = Vec::with_capacity(steps + 1);
    let mut states = Vec::with_capacity(steps + 1);
    let mut x = x0.to_vec();
    times.push(0.0);
    states.push(x.clone());
    for k in 1..=steps {
        let t = if k == steps { t_end } else { k as f64 * dt };
        let h = t - times[k - 1];
        x = rk4_step(net, c, &x, h);
        times.push(t);
        states.push(x.clone());
    }
    let residual = field(net, c, &x).iter().fold(0.0, |m: f64, v| m.max(v.abs()));
    Ok(Trajectory { times, states, terminal: x, residual })
}

/// Trajectory as CSV with columns `t, x_1..x_n`.
pub fn write_trajectory_csv(out: &mut impl Write, traj: &Trajectory) -> std::io::Result<()> {
    let n = traj.terminal.len();
    let mut header = vec!["t".to_string()];
    header.extend((1..=n).map(|i| format!("x_{i}")));
    writeln!(out, "{}", header.join(","))?;
    for (t, x) in traj.times.iter().zip(&traj.states) {
        let row: Vec<String> = std::iter::once(*t).chain(x.iter().copied()).map(fmt_num).collect();
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}
