//! Minimal and maximal equilibria.
//!
//! The map `x -> S(P'x + c)` is monotone on the lattice `[0, w]`, so iterating
//! it from `0` climbs to the minimal equilibrium and iterating from `w`
//! descends to the maximal one. Iteration alone stalls near critical flows,
//! so the canonical path is: split the network into its transient part and
//! trapping sets, iterate each piece from the side where it contracts, then
//! classify nodes and re-solve the exposed block exactly.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{decompose, Decomposition};
use crate::model::{Network, FEAS_TOL};
use crate::structure::{alpha_bounds, invariant_vector, is_zero_sum, particular_nu};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    /// Sup-norm step size at which the iteration stops, and the residual bound
    /// every returned equilibrium satisfies.
    pub tol_fp: f64,
    pub max_iter: usize,
    /// Margin used when sorting nodes into surplus / exposed / deficit.
    pub tol_class: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions { tol_fp: 1e-12, max_iter: 1_000_000, tol_class: 1e-9 }
    }
}

impl SolveOptions {
    pub fn check(&self) -> Result<()> {
        if !(self.tol_fp > 0.0) {
            return Err(Error::input("tol_fp must be positive"));
        }
        if self.max_iter == 0 {
            return Err(Error::input("max_iter must be at least 1"));
        }
        if !(self.tol_class >= self.tol_fp) {
            return Err(Error::input("tol_class must be at least tol_fp"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquilibriumVector {
    pub x: Vec<f64>,
    /// `|x - S(P'x + c)|_inf`
    pub residual: f64,
}

/// Which end of the equilibrium set to compute.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bound {
    Lower,
    Upper,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct NodePartition {
    pub surplus: Vec<usize>,
    pub exposed: Vec<usize>,
    pub deficit: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Status {
    Surplus,
    Exposed,
    Deficit,
}

fn status_of(z: f64, w: f64, tol: f64) -> Status {
    if z > w + tol {
        Status::Surplus
    } else if z < -tol {
        Status::Deficit
    } else {
        Status::Exposed
    }
}

fn prepare(net: &Network, c: &[f64], opts: &SolveOptions) -> Result<()> {
    opts.check()?;
    net.ensure_valid()?;
    net.check_vector("c", c)
}

fn check_in_lattice(net: &Network, x: &[f64]) -> Result<()> {
    net.check_vector("x", x)?;
    for (i, (&xi, &wi)) in x.iter().zip(net.w()).enumerate() {
        if xi < -FEAS_TOL || xi > wi + FEAS_TOL {
            return Err(Error::input(format!("x[{i}] = {xi} lies outside [0, {wi}]")));
        }
    }
    Ok(())
}

fn sup_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| f64::max(m, (x - y).abs()))
}

fn run_iteration(net: &Network, c: &[f64], x: &mut Vec<f64>, opts: &SolveOptions) -> Result<usize> {
    let mut last_step = f64::INFINITY;
    for it in 1..=opts.max_iter {
        let next = net.apply(x, c);
        last_step = sup_dist(&next, x);
        *x = next;
        if last_step <= opts.tol_fp {
            return Ok(it);
        }
    }
    Err(Error::NonConvergence { iterations: opts.max_iter, last_step, last: x.clone() })
}

/// Plain fixed-point iteration `x(t+1) = S(P'x(t) + c)` from `x0`.
pub fn iterate(net: &Network, c: &[f64], x0: &[f64], opts: &SolveOptions) -> Result<EquilibriumVector> {
    prepare(net, c, opts)?;
    check_in_lattice(net, x0)?;
    let mut x = x0.to_vec();
    run_iteration(net, c, &mut x, opts)?;
    let residual = net.residual(&x, c);
    Ok(EquilibriumVector { x, residual })
}

pub fn minimal_equilibrium(net: &Network, c: &[f64], opts: &SolveOptions) -> Result<EquilibriumVector> {
    prepare(net, c, opts)?;
    solve_bound(net, c, &decompose(net), Bound::Lower, opts)
}

pub fn maximal_equilibrium(net: &Network, c: &[f64], opts: &SolveOptions) -> Result<EquilibriumVector> {
    prepare(net, c, opts)?;
    solve_bound(net, c, &decompose(net), Bound::Upper, opts)
}

/// Both ends of the equilibrium set, sharing one decomposition.
pub fn equilibrium_bounds(
    net: &Network,
    c: &[f64],
    opts: &SolveOptions,
) -> Result<(EquilibriumVector, EquilibriumVector)> {
    prepare(net, c, opts)?;
    let d = decompose(net);
    let lo = solve_bound(net, c, &d, Bound::Lower, opts)?;
    let hi = solve_bound(net, c, &d, Bound::Upper, opts)?;
    Ok((lo, hi))
}

/// Equilibrium values on the transient part (zero elsewhere). They are the
/// same for every equilibrium.
pub(crate) fn transient_values(
    net: &Network,
    c: &[f64],
    d: &Decomposition,
    opts: &SolveOptions,
) -> Result<Vec<f64>> {
    let mut x = vec![0.0; net.n()];
    if d.transient.is_empty() {
        return Ok(x);
    }
    let sub = net.restrict(&d.transient);
    let c_t: Vec<f64> = d.transient.iter().map(|&i| c[i]).collect();
    let mut xt = vec![0.0; sub.n()];
    run_iteration(&sub, &c_t, &mut xt, opts)?;
    let refined = refine_impl(&sub, &c_t, &xt, opts, None)?;
    for (&i, v) in d.transient.iter().zip(refined.x) {
        x[i] = v;
    }
    Ok(x)
}

/// Exogenous flow seen by a trapping set: its own flow plus what the rest of
/// the network routes into it.
pub(crate) fn effective_flow(net: &Network, c: &[f64], nodes: &[usize], x: &[f64]) -> Vec<f64> {
    let p = net.p();
    let mut inside = vec![false; net.n()];
    for &i in nodes {
        inside[i] = true;
    }
    nodes
        .iter()
        .map(|&j| {
            let routed: f64 = (0..net.n())
                .filter(|&k| !inside[k])
                .map(|k| p[(k, j)] * x[k])
                .sum();
            c[j] + routed
        })
        .collect()
}

pub(crate) fn solve_bound(
    net: &Network,
    c: &[f64],
    d: &Decomposition,
    bound: Bound,
    opts: &SolveOptions,
) -> Result<EquilibriumVector> {
    let mut x = transient_values(net, c, d, opts)?;
    for sink in &d.sinks {
        let sub = net.restrict(&sink.nodes);
        let flow = effective_flow(net, c, &sink.nodes, &x);
        // stochastic block with nonzero net inflow: start on the side of its sign
        let start = if !sink.out_connected && !is_zero_sum(&flow) {
            if flow.iter().sum::<f64>() > 0.0 {
                Bound::Upper
            } else {
                Bound::Lower
            }
        } else {
            bound
        };
        let mut xs = match start {
            Bound::Lower => vec![0.0; sub.n()],
            Bound::Upper => sub.w().to_vec(),
        };
        run_iteration(&sub, &flow, &mut xs, opts)?;
        let refined = refine_impl(&sub, &flow, &xs, opts, Some(bound))?;
        for (&i, v) in sink.nodes.iter().zip(refined.x) {
            x[i] = v;
        }
    }
    let residual = net.residual(&x, c);
    Ok(EquilibriumVector { x, residual })
}

/// Surplus / exposed / deficit split of an equilibrium, from the inflow
/// `z = P'x + c`. Ties within `tol_class` of a boundary count as exposed.
pub fn node_partition(
    net: &Network,
    c: &[f64],
    x: &[f64],
    opts: &SolveOptions,
) -> Result<NodePartition> {
    prepare(net, c, opts)?;
    net.check_vector("x", x)?;
    let residual = net.residual(x, c);
    if residual > opts.tol_class {
        return Err(Error::input(format!("x is not an equilibrium (residual {residual:e})")));
    }
    let z = net.inflow(x, c);
    let mut part = NodePartition { surplus: vec![], exposed: vec![], deficit: vec![] };
    for (i, (&zi, &wi)) in z.iter().zip(net.w()).enumerate() {
        match status_of(zi, wi, opts.tol_class) {
            Status::Surplus => part.surplus.push(i),
            Status::Exposed => part.exposed.push(i),
            Status::Deficit => part.deficit.push(i),
        }
    }
    Ok(part)
}

/// Turns an approximate equilibrium into an exact one.
///
/// Surplus nodes are fixed at `w`, deficit nodes at `0`, and the exposed
/// block is solved as a linear system. Stochastic trapping sets lying wholly
/// in the exposed block have a line of solutions `nu + alpha * pi`; the
/// point nearest to `x` on the part of that line inside the lattice is used.
pub fn refine(net: &Network, c: &[f64], x: &[f64], opts: &SolveOptions) -> Result<EquilibriumVector> {
    prepare(net, c, opts)?;
    net.check_vector("x", x)?;
    refine_impl(net, c, x, opts, None)
}

fn argmax_by(nodes: &[usize], key: impl Fn(usize) -> f64) -> usize {
    let mut best = nodes[0];
    for &i in &nodes[1..] {
        if key(i) > key(best) {
            best = i;
        }
    }
    best
}

fn refine_impl(
    net: &Network,
    c: &[f64],
    x: &[f64],
    opts: &SolveOptions,
    hint: Option<Bound>,
) -> Result<EquilibriumVector> {
    let n = net.n();
    let w = net.w();
    let p = net.p();
    let d = decompose(net);
    let z0 = net.inflow(x, c);
    let mut status: Vec<Status> =
        z0.iter().zip(w).map(|(&z, &wi)| status_of(z, wi, opts.tol_class)).collect();
    let tau = 0.1 * opts.tol_fp;

    for _ in 0..(2 * n + 4) {
        let mut y: Vec<f64> = (0..n)
            .map(|i| if status[i] == Status::Surplus { w[i] } else { 0.0 })
            .collect();

        let mut on_line = vec![false; n];
        let degenerate: Vec<&[usize]> = d
            .stochastic_sinks()
            .map(|(_, s)| s.nodes.as_slice())
            .filter(|nodes| nodes.iter().all(|&i| status[i] == Status::Exposed))
            .collect();
        for nodes in &degenerate {
            for &i in *nodes {
                on_line[i] = true;
            }
        }

        let free: Vec<usize> =
            (0..n).filter(|&i| status[i] == Status::Exposed && !on_line[i]).collect();
        if !free.is_empty() {
            let k = free.len();
            let a = DMatrix::from_fn(k, k, |r, s| {
                let diag = if r == s { 1.0 } else { 0.0 };
                diag - p[(free[s], free[r])]
            });
            let rhs = DVector::from_fn(k, |r, _| {
                let i = free[r];
                c[i] + (0..n)
                    .filter(|&j| status[j] == Status::Surplus)
                    .map(|j| p[(j, i)] * w[j])
                    .sum::<f64>()
            });
            let sol = a
                .lu()
                .solve(&rhs)
                .ok_or_else(|| Error::Inconsistent("singular exposed block".into()))?;
            for (r, &i) in free.iter().enumerate() {
                y[i] = sol[r];
            }
        }

        let mut moves: Vec<(usize, Status)> = Vec::new();
        let mut defect: f64 = 0.0;
        for nodes in &degenerate {
            let nodes: &[usize] = nodes;
            let flow = effective_flow(net, c, nodes, &y);
            let to_top = |moves: &mut Vec<(usize, Status)>| {
                moves.push((argmax_by(nodes, |i| x[i] - w[i]), Status::Surplus));
            };
            let to_bottom = |moves: &mut Vec<(usize, Status)>| {
                moves.push((argmax_by(nodes, |i| -x[i]), Status::Deficit));
            };
            if !is_zero_sum(&flow) {
                if flow.iter().sum::<f64>() > 0.0 {
                    to_top(&mut moves);
                } else {
                    to_bottom(&mut moves);
                }
                continue;
            }
            let block = net.restrict(nodes);
            let pi = invariant_vector(block.p())?;
            let nu = particular_nu(block.p(), &flow)?;
            let (lo, hi) = alpha_bounds(&nu, &pi, block.w());
            if hi - lo < -opts.tol_class {
                // the solution line misses the lattice: some node saturates at each end
                to_top(&mut moves);
                to_bottom(&mut moves);
                continue;
            }
            defect = defect.max(flow.iter().sum::<f64>().abs());
            let alpha = if hi < lo {
                0.5 * (lo + hi)
            } else {
                match hint {
                    Some(Bound::Lower) => lo,
                    Some(Bound::Upper) => hi,
                    None => {
                        let num: f64 = nodes.iter().zip(&nu).zip(&pi).map(|((&i, v), q)| q * (x[i] - v)).sum();
                        let den: f64 = pi.iter().map(|q| q * q).sum();
                        (num / den).clamp(lo, hi)
                    }
                }
            };
            for ((&i, v), q) in nodes.iter().zip(&nu).zip(&pi) {
                y[i] = (v + alpha * q).clamp(0.0, w[i]);
            }
        }

        if moves.is_empty() {
            let z = net.inflow(&y, c);
            for i in 0..n {
                match status[i] {
                    Status::Exposed if !on_line[i] => {
                        if y[i] > w[i] + tau {
                            moves.push((i, Status::Surplus));
                        } else if y[i] < -tau {
                            moves.push((i, Status::Deficit));
                        }
                    }
                    Status::Surplus if z[i] < w[i] - tau => moves.push((i, Status::Exposed)),
                    Status::Deficit if z[i] > tau => moves.push((i, Status::Exposed)),
                    _ => {}
                }
            }
        }

        if moves.is_empty() {
            for (yi, &wi) in y.iter_mut().zip(w) {
                *yi = yi.clamp(0.0, wi);
            }
            let residual = net.residual(&y, c);
            if residual <= opts.tol_fp + defect {
                return Ok(EquilibriumVector { x: y, residual });
            }
            return Err(Error::Inconsistent(format!("residual {residual:e} after exact solve")));
        }
        for (i, s) in moves {
            status[i] = s;
        }
    }
    Err(Error::Inconsistent("node partition did not settle".into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn three_node() -> Network {
        Network::from_rows(
            &[vec![0.0, 0.75, 0.25], vec![0.0, 0.0, 1.0], vec![0.3, 0.7, 0.0]],
            vec![5.0, 3.0, 2.0],
        )
        .unwrap()
    }

    const C_STAR: [f64; 3] = [4.37, -3.31, -1.06];

    fn assert_close(a: &[f64], b: &[f64], tol: f64) {
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() <= tol, "{a:?} vs {b:?}");
        }
    }

    /// Ends of the solution line (0.3t + 4.37, 0.925t - 0.0325, t) inside [0, w]:
    /// t runs from 0.0325/0.925 (x2 hits 0) to 2 (x3 hits w3).
    fn line_point(t: f64) -> Vec<f64> {
        vec![0.3 * t + 4.37, 0.925 * t - 0.0325, t]
    }

    #[test]
    fn iterate_is_stationary_at_an_equilibrium() {
        let net = three_node();
        let x = vec![0.6, 1.85, 2.0];
        let eq = iterate(&net, &[0.0; 3], &x, &SolveOptions::default()).unwrap();
        assert_close(&eq.x, &x, 1e-15);
    }

    #[test]
    fn zero_flow_from_bottom_and_top() {
        let net = three_node();
        let opts = SolveOptions::default();
        let lo = iterate(&net, &[0.0; 3], &[0.0; 3], &opts).unwrap();
        assert_eq!(lo.x, vec![0.0; 3]);
        let hi = iterate(&net, &[0.0; 3], net.w(), &opts).unwrap();
        assert_close(&hi.x, &[0.6, 1.85, 2.0], 1e-9);
        let hi = maximal_equilibrium(&net, &[0.0; 3], &opts).unwrap();
        assert_close(&hi.x, &[0.6, 1.85, 2.0], 1e-12);
    }

    #[test]
    fn iterate_rejects_start_outside_lattice() {
        let net = three_node();
        assert!(iterate(&net, &[0.0; 3], &[6.0, 0.0, 0.0], &SolveOptions::default()).is_err());
    }

    #[test]
    fn iterate_reports_non_convergence() {
        let net = three_node();
        let opts = SolveOptions { max_iter: 3, ..Default::default() };
        match iterate(&net, &C_STAR, &[0.0; 3], &opts) {
            Err(Error::NonConvergence { iterations: 3, last, .. }) => assert_eq!(last.len(), 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn nonpositive_flow_gives_zero_minimum() {
        let net = three_node();
        let eq = minimal_equilibrium(&net, &[-1.0, 0.0, -0.5], &SolveOptions::default()).unwrap();
        assert_eq!(eq.x, vec![0.0; 3]);
    }

    #[test]
    fn critical_flow_endpoints() {
        let net = three_node();
        let opts = SolveOptions::default();
        let lo = minimal_equilibrium(&net, &C_STAR, &opts).unwrap();
        let hi = maximal_equilibrium(&net, &C_STAR, &opts).unwrap();
        assert_close(&lo.x, &line_point(0.0325 / 0.925), 1e-12);
        assert_close(&hi.x, &line_point(2.0), 1e-12);
        assert!(lo.residual <= opts.tol_fp && hi.residual <= opts.tol_fp);
        assert_close(&lo.x, &[4.380541, 0.0, 0.035135], 1e-6);
        assert_close(&hi.x, &[4.97, 1.8175, 2.0], 1e-12);
    }

    #[test]
    fn large_flow_saturates_everything() {
        let net = three_node();
        let opts = SolveOptions::default();
        let lo = minimal_equilibrium(&net, &[5.0, 2.0, 2.0], &opts).unwrap();
        assert_eq!(lo.x, net.w().to_vec());
        let (lo, hi) = equilibrium_bounds(&net, &[6.0, 4.0, 3.0], &opts).unwrap();
        assert_eq!(lo.x, net.w().to_vec());
        assert_eq!(hi.x, net.w().to_vec());
    }

    #[test]
    fn two_cycle_maximum() {
        let net = Network::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]], vec![1.0, 1.0]).unwrap();
        let opts = SolveOptions::default();
        assert_eq!(maximal_equilibrium(&net, &[0.0, 0.0], &opts).unwrap().x, vec![1.0, 1.0]);
        assert_eq!(minimal_equilibrium(&net, &[0.0, 0.0], &opts).unwrap().x, vec![0.0, 0.0]);
    }

    #[test]
    fn partitions() {
        let net = three_node();
        let opts = SolveOptions::default();
        let all_top = node_partition(&net, &[5.0, 2.0, 2.0], net.w(), &opts).unwrap();
        assert_eq!(all_top.surplus, vec![0, 1, 2]);

        let lo = minimal_equilibrium(&net, &C_STAR, &opts).unwrap();
        let part = node_partition(&net, &C_STAR, &lo.x, &opts).unwrap();
        assert_eq!(part.exposed, vec![0, 1, 2]);

        let neg = node_partition(&net, &[-10.0; 3], &[0.0; 3], &opts).unwrap();
        assert_eq!(neg.deficit, vec![0, 1, 2]);

        assert!(node_partition(&net, &[-10.0; 3], net.w(), &opts).is_err());
    }

    #[test]
    fn refine_sharpens_a_loose_iterate() {
        let net = three_node();
        let loose = SolveOptions { tol_fp: 1e-6, tol_class: 1e-6, ..Default::default() };
        let rough = iterate(&net, &C_STAR, &[0.0; 3], &loose).unwrap();
        assert!(rough.residual > 1e-12);
        let sharp = refine(&net, &C_STAR, &rough.x, &SolveOptions::default()).unwrap();
        assert!(sharp.residual <= 1e-12);
        assert_close(&sharp.x, &line_point(0.0325 / 0.925), 1e-9);
    }

    #[test]
    fn refine_keeps_exact_equilibria() {
        let net = three_node();
        let opts = SolveOptions::default();
        let x = line_point(1.0);
        let out = refine(&net, &C_STAR, &x, &opts).unwrap();
        assert_close(&out.x, &x, 1e-12);
        let top = refine(&net, &[5.0, 2.0, 2.0], net.w(), &opts).unwrap();
        assert_eq!(top.x, net.w().to_vec());
    }

    #[test]
    fn options_are_checked() {
        let net = three_node();
        let bad = SolveOptions { tol_fp: 0.0, ..Default::default() };
        assert!(minimal_equilibrium(&net, &[0.0; 3], &bad).is_err());
        let bad = SolveOptions { tol_class: 1e-13, ..Default::default() };
        assert!(minimal_equilibrium(&net, &[0.0; 3], &bad).is_err());
        assert!(minimal_equilibrium(&net, &[0.0; 2], &SolveOptions::default()).is_err());
    }
}
