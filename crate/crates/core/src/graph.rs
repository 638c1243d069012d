//! Transient part and irreducible trapping sets of the routing graph.
//!
//! The graph has an edge `i -> j` whenever `P[i][j] > 0`. Irreducible
//! trapping sets are the strongly connected components with no edge leaving
//! them; every other node is transient.

use std::collections::VecDeque;

use nalgebra::DMatrix;
use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{Network, FEAS_TOL};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Sink {
    pub nodes: Vec<usize>,
    /// Some row of the block leaks mass, so the block has spectral radius < 1.
    pub out_connected: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Decomposition {
    pub transient: Vec<usize>,
    pub sinks: Vec<Sink>,
}

impl Decomposition {
    /// Sinks whose block is irreducible and row-stochastic.
    pub fn stochastic_sinks(&self) -> impl Iterator<Item = (usize, &Sink)> {
        self.sinks.iter().enumerate().filter(|(_, s)| !s.out_connected)
    }
}

fn digraph(p: &DMatrix<f64>) -> DiGraph<(), ()> {
    let n = p.nrows();
    let mut g = DiGraph::with_capacity(n, 0);
    for _ in 0..n {
        g.add_node(());
    }
    for i in 0..n {
        for j in 0..n {
            if p[(i, j)] > 0.0 {
                g.add_edge((i as u32).into(), (j as u32).into(), ());
            }
        }
    }
    g
}

pub fn decompose(net: &Network) -> Decomposition {
    let n = net.n();
    let p = net.p();
    let mut comp_of = vec![0usize; n];
    let sccs = tarjan_scc(&digraph(p));
    for (k, scc) in sccs.iter().enumerate() {
        for v in scc {
            comp_of[v.index()] = k;
        }
    }

    let mut closed = vec![true; sccs.len()];
    for i in 0..n {
        for j in 0..n {
            if p[(i, j)] > 0.0 && comp_of[i] != comp_of[j] {
                closed[comp_of[i]] = false;
            }
        }
    }

    let mut sinks = Vec::new();
    let mut transient = Vec::new();
    for (k, scc) in sccs.iter().enumerate() {
        let mut nodes: Vec<usize> = scc.iter().map(|v| v.index()).collect();
        nodes.sort_unstable();
        if closed[k] {
            let out_connected = nodes.iter().any(|&i| net.row_sum(i) < 1.0 - FEAS_TOL);
            sinks.push(Sink { nodes, out_connected });
        } else {
            transient.extend(nodes);
        }
    }
    transient.sort_unstable();
    sinks.sort_by_key(|s| s.nodes[0]);
    Decomposition { transient, sinks }
}

/// Rows of `P` that leak mass.
pub fn deficiency_set(net: &Network) -> Vec<usize> {
    (0..net.n()).filter(|&i| net.row_sum(i) < 1.0 - FEAS_TOL).collect()
}

/// Whether the block of `P` induced by `nodes` is out-connected: its leaking
/// rows (row sums taken inside the block) are reachable from every node of
/// the block.
pub fn is_out_connected(net: &Network, nodes: &[usize]) -> Result<bool> {
    if nodes.is_empty() {
        return Err(Error::input("node set must be nonempty"));
    }
    if let Some(&bad) = nodes.iter().find(|&&i| i >= net.n()) {
        return Err(Error::input(format!("node {bad} out of range")));
    }
    let block = net.restrict(nodes);
    let k = nodes.len();
    let p = block.p();

    let mut reached = vec![false; k];
    let mut queue = VecDeque::new();
    for a in 0..k {
        if block.row_sum(a) < 1.0 - FEAS_TOL {
            reached[a] = true;
            queue.push_back(a);
        }
    }
    // walk edges backwards from the leaking rows
    while let Some(b) = queue.pop_front() {
        for a in 0..k {
            if !reached[a] && p[(a, b)] > 0.0 {
                reached[a] = true;
                queue.push_back(a);
            }
        }
    }
    Ok(reached.iter().all(|&r| r))
}

pub fn is_strongly_connected(p: &DMatrix<f64>) -> bool {
    tarjan_scc(&digraph(p)).len() == 1
}

/// Perron root estimate of a nonnegative square matrix.
///
/// Power iteration runs on the lazy matrix `(I + A) / 2`, which has the
/// same Perron vector and is aperiodic, so periodic blocks do not oscillate.
pub fn spectral_radius(a: &DMatrix<f64>, iterations: usize) -> f64 {
    let k = a.nrows();
    if k == 0 {
        return 0.0;
    }
    let lazy = (DMatrix::identity(k, k) + a) * 0.5;
    let mut v = nalgebra::DVector::from_element(k, 1.0 / k as f64);
    let mut lambda = 0.0;
    for _ in 0..iterations {
        let next = &lazy * &v;
        let norm = next.iter().map(|x| x.abs()).sum::<f64>();
        if norm == 0.0 {
            return 0.0;
        }
        lambda = norm / v.iter().map(|x| x.abs()).sum::<f64>();
        v = next / norm;
    }
    2.0 * lambda - 1.0
}
