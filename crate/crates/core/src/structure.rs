//! Uniqueness classification and the full set of equilibria.
//!
//! On the transient part the equilibrium is always unique. Each trapping set
//! sees an effective flow `c_S + P_TS' x_T`. Out-connected sets, and
//! stochastic sets whose effective flow does not sum to zero, have a unique
//! equilibrium. A stochastic set with zero-sum effective flow has the line of
//! linear solutions `nu + alpha * pi`; its equilibria are the part of that
//! line inside `[0, w]`, which is a segment of positive length exactly when
//!
//! ```text
//! min_i nu_i / pi_i + min_i (w_i - nu_i) / pi_i > 0.
//! ```

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{decompose, is_strongly_connected, Decomposition};
use crate::model::{Network, FEAS_TOL};
use crate::solver::{effective_flow, solve_bound, transient_values, Bound, SolveOptions};

/// Relative slack of the zero-sum test: `|sum c| <= 1e-9 (1 + |c|_1)`.
pub const ZERO_SUM_TOL: f64 = 1e-9;

pub fn zero_sum_tolerance(c: &[f64]) -> f64 {
    ZERO_SUM_TOL * (1.0 + c.iter().map(|v| v.abs()).sum::<f64>())
}

pub fn is_zero_sum(c: &[f64]) -> bool {
    c.iter().sum::<f64>().abs() <= zero_sum_tolerance(c)
}

fn check_irreducible_stochastic(block: &DMatrix<f64>) -> Result<()> {
    let k = block.nrows();
    if k == 0 || block.ncols() != k {
        return Err(Error::input("block must be square and nonempty"));
    }
    if block.iter().any(|&v| v < -FEAS_TOL || !v.is_finite()) {
        return Err(Error::input("block has a negative entry"));
    }
    for i in 0..k {
        let s = block.row(i).sum();
        if (s - 1.0).abs() > FEAS_TOL {
            return Err(Error::input(format!("block row {i} sums to {s}, not 1")));
        }
    }
    if !is_strongly_connected(block) {
        return Err(Error::input("block is reducible"));
    }
    Ok(())
}

/// The invariant probability vector `pi = B' pi` of an irreducible
/// row-stochastic block, from `(I - B') pi = 0` with the last equation
/// replaced by `sum pi = 1`.
pub fn invariant_vector(block: &DMatrix<f64>) -> Result<Vec<f64>> {
    check_irreducible_stochastic(block)?;
    let k = block.nrows();
    let mut a = DMatrix::from_fn(k, k, |i, j| if i == j { 1.0 } else { 0.0 } - block[(j, i)]);
    for j in 0..k {
        a[(k - 1, j)] = 1.0;
    }
    let mut rhs = DVector::zeros(k);
    rhs[k - 1] = 1.0;
    let pi = a.lu().solve(&rhs).ok_or_else(|| Error::input("singular invariant-vector system"))?;
    if pi.iter().any(|&v| v <= 0.0) {
        return Err(Error::input("invariant vector is not positive"));
    }
    Ok(pi.iter().copied().collect())
}

/// Some solution of `nu = B' nu + c` for a zero-sum `c`, with the last
/// coordinate pinned to zero. Any other solution differs by a multiple of
/// `pi`.
pub fn particular_nu(block: &DMatrix<f64>, c_eff: &[f64]) -> Result<Vec<f64>> {
    check_irreducible_stochastic(block)?;
    let k = block.nrows();
    if c_eff.len() != k {
        return Err(Error::Dimension { what: "effective flow", expected: k, found: c_eff.len() });
    }
    if !is_zero_sum(c_eff) {
        let s: f64 = c_eff.iter().sum();
        return Err(Error::input(format!("flow sums to {s:e}; the linear system is inconsistent")));
    }
    let mut nu = vec![0.0; k];
    if k == 1 {
        return Ok(nu);
    }
    // dropping the pinned unknown and the last equation leaves the
    // restriction to a proper subset, which is nonsingular
    let m = k - 1;
    let a = DMatrix::from_fn(m, m, |i, j| if i == j { 1.0 } else { 0.0 } - block[(j, i)]);
    let rhs = DVector::from_fn(m, |i, _| c_eff[i]);
    let sol = a.lu().solve(&rhs).ok_or_else(|| Error::input("singular pinned system"))?;
    nu[..m].copy_from_slice(sol.as_slice());
    Ok(nu)
}

/// `[alpha_min, alpha_max]` such that `nu + alpha * pi` lies in `[0, w]`.
/// Empty when `alpha_min > alpha_max`.
pub fn alpha_bounds(nu: &[f64], pi: &[f64], w: &[f64]) -> (f64, f64) {
    let lo = nu.iter().zip(pi).map(|(v, q)| 0.0 - v / q).fold(f64::NEG_INFINITY, f64::max);
    let hi = nu
        .iter()
        .zip(pi)
        .zip(w)
        .map(|((v, q), wi)| (wi - v) / q)
        .fold(f64::INFINITY, f64::min);
    (lo, hi)
}

/// `min_i nu_i / pi_i + min_i (w_i - nu_i) / pi_i`, the length of the
/// alpha-interval (negative when the line misses the lattice).
pub fn condition_value(nu: &[f64], pi: &[f64], w: &[f64]) -> f64 {
    let (lo, hi) = alpha_bounds(nu, pi, w);
    hi - lo
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SinkKind {
    OutConnected,
    StochasticNonZeroSum,
    StochasticZeroSumUnique,
    StochasticZeroSumSegment,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SinkAnalysis {
    pub index: usize,
    pub nodes: Vec<usize>,
    pub kind: SinkKind,
    pub effective_flow: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pi: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nu: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub condition_value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha_range: Option<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Classification {
    pub decomposition: Decomposition,
    /// Equilibrium values on `decomposition.transient`, in that order.
    pub transient_values: Vec<f64>,
    pub sinks: Vec<SinkAnalysis>,
    pub is_unique: bool,
}

pub fn classify(net: &Network, c: &[f64], opts: &SolveOptions) -> Result<Classification> {
    opts.check()?;
    net.ensure_valid()?;
    net.check_vector("c", c)?;
    let d = decompose(net);
    classify_with(net, c, d, opts)
}

fn classify_with(
    net: &Network,
    c: &[f64],
    d: Decomposition,
    opts: &SolveOptions,
) -> Result<Classification> {
    let xt = transient_values(net, c, &d, opts)?;
    let mut sinks = Vec::with_capacity(d.sinks.len());
    for (index, sink) in d.sinks.iter().enumerate() {
        let flow = effective_flow(net, c, &sink.nodes, &xt);
        let mut analysis = SinkAnalysis {
            index,
            nodes: sink.nodes.clone(),
            kind: SinkKind::OutConnected,
            effective_flow: flow.clone(),
            pi: None,
            nu: None,
            condition_value: None,
            alpha_range: None,
        };
        if !sink.out_connected {
            if !is_zero_sum(&flow) {
                analysis.kind = SinkKind::StochasticNonZeroSum;
            } else {
                let block = net.restrict(&sink.nodes);
                let pi = invariant_vector(block.p())?;
                let nu = particular_nu(block.p(), &flow)?;
                let (lo, hi) = alpha_bounds(&nu, &pi, block.w());
                let cond = hi - lo;
                if cond > zero_sum_tolerance(&flow) {
                    analysis.kind = SinkKind::StochasticZeroSumSegment;
                    analysis.alpha_range = Some([lo, hi]);
                } else {
                    analysis.kind = SinkKind::StochasticZeroSumUnique;
                }
                analysis.pi = Some(pi);
                analysis.nu = Some(nu);
                analysis.condition_value = Some(cond);
            }
        }
        sinks.push(analysis);
    }
    let is_unique = sinks.iter().all(|s| s.kind != SinkKind::StochasticZeroSumSegment);
    let transient_values = d.transient.iter().map(|&i| xt[i]).collect();
    Ok(Classification { decomposition: d, transient_values, sinks, is_unique })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SinkComponent {
    Unique {
        nodes: Vec<usize>,
        x: Vec<f64>,
    },
    /// `{ nu + alpha * pi : alpha_min <= alpha <= alpha_max }`
    Segment {
        nodes: Vec<usize>,
        nu: Vec<f64>,
        pi: Vec<f64>,
        alpha_min: f64,
        alpha_max: f64,
    },
}

impl SinkComponent {
    pub fn nodes(&self) -> &[usize] {
        match self {
            SinkComponent::Unique { nodes, .. } | SinkComponent::Segment { nodes, .. } => nodes,
        }
    }

    /// Point of the component at fraction `t` in `[0, 1]` along the segment.
    pub fn at(&self, t: f64) -> Vec<f64> {
        match self {
            SinkComponent::Unique { x, .. } => x.clone(),
            SinkComponent::Segment { nu, pi, alpha_min, alpha_max, .. } => {
                let alpha = alpha_min + t * (alpha_max - alpha_min);
                nu.iter().zip(pi).map(|(v, q)| v + alpha * q).collect()
            }
        }
    }

    fn sq_distance(&self, x: &[f64]) -> f64 {
        let y: Vec<f64> = self.nodes().iter().map(|&i| x[i]).collect();
        let t = match self {
            SinkComponent::Unique { .. } => 0.0,
            SinkComponent::Segment { nu, pi, alpha_min, alpha_max, .. } => {
                let num: f64 = y.iter().zip(nu).zip(pi).map(|((a, v), q)| q * (a - v)).sum();
                let den: f64 = pi.iter().map(|q| q * q).sum();
                let alpha = (num / den).clamp(*alpha_min, *alpha_max);
                if alpha_max > alpha_min {
                    (alpha - alpha_min) / (alpha_max - alpha_min)
                } else {
                    0.0
                }
            }
        };
        self.at(t).iter().zip(&y).map(|(a, b)| (a - b) * (a - b)).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquilibriumSet {
    pub unique: bool,
    pub transient_nodes: Vec<usize>,
    pub transient_values: Vec<f64>,
    pub sinks: Vec<SinkComponent>,
}

impl EquilibriumSet {
    fn n(&self) -> usize {
        self.transient_nodes.len() + self.sinks.iter().map(|s| s.nodes().len()).sum::<usize>()
    }

    /// The equilibrium at fraction `t` of every segment; `t = 0` is the
    /// minimal equilibrium and `t = 1` the maximal one.
    pub fn at(&self, t: f64) -> Vec<f64> {
        let mut x = vec![0.0; self.n()];
        for (&i, &v) in self.transient_nodes.iter().zip(&self.transient_values) {
            x[i] = v;
        }
        for comp in &self.sinks {
            for (&i, v) in comp.nodes().iter().zip(comp.at(t)) {
                x[i] = v;
            }
        }
        x
    }

    pub fn lower(&self) -> Vec<f64> {
        self.at(0.0)
    }

    pub fn upper(&self) -> Vec<f64> {
        self.at(1.0)
    }

    /// Euclidean distance from `x` to the set.
    pub fn distance(&self, x: &[f64]) -> f64 {
        let transient: f64 = self
            .transient_nodes
            .iter()
            .zip(&self.transient_values)
            .map(|(&i, v)| (x[i] - v) * (x[i] - v))
            .sum();
        let sinks: f64 = self.sinks.iter().map(|s| s.sq_distance(x)).sum();
        (transient + sinks).sqrt()
    }
}

pub fn equilibrium_set(net: &Network, c: &[f64], opts: &SolveOptions) -> Result<EquilibriumSet> {
    let cls = classify(net, c, opts)?;
    let lower = solve_bound(net, c, &cls.decomposition, Bound::Lower, opts)?;
    let sinks = cls
        .sinks
        .into_iter()
        .map(|s| match (s.kind, s.alpha_range) {
            (SinkKind::StochasticZeroSumSegment, Some([lo, hi])) => SinkComponent::Segment {
                nodes: s.nodes,
                nu: s.nu.unwrap_or_default(),
                pi: s.pi.unwrap_or_default(),
                alpha_min: lo,
                alpha_max: hi,
            },
            _ => {
                let x = s.nodes.iter().map(|&i| lower.x[i]).collect();
                SinkComponent::Unique { nodes: s.nodes, x }
            }
        })
        .collect();
    Ok(EquilibriumSet {
        unique: cls.is_unique,
        transient_nodes: cls.decomposition.transient,
        transient_values: cls.transient_values,
        sinks,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NashPayments {
    /// `payments[i][j] = x_i P_ij`, what node `i` pays node `j`.
    pub payments: Vec<Vec<f64>>,
    /// Payment of each node outside the network, `x_i (1 - sum_j P_ij)`.
    pub external: Vec<f64>,
    /// Sup-norm gap to the best response `P_ij S_{w_i}(sum_k X_ki + c_i)`.
    pub residual: f64,
}

/// Fixed-point residual above which [`nash_payments`] refuses its input.
pub const EQUILIBRIUM_INPUT_TOL: f64 = 1e-9;

pub fn nash_payments(net: &Network, c: &[f64], x: &[f64]) -> Result<NashPayments> {
    net.check_vector("c", c)?;
    net.check_vector("x", x)?;
    let r = net.residual(x, c);
    if r > EQUILIBRIUM_INPUT_TOL {
        return Err(Error::input(format!("x is not an equilibrium (residual {r:e})")));
    }
    let n = net.n();
    let p = net.p();
    let payments: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| x[i] * p[(i, j)]).collect()).collect();
    let mut residual: f64 = 0.0;
    for i in 0..n {
        let received: f64 = (0..n).map(|k| payments[k][i]).sum();
        let budget = (received + c[i]).max(0.0).min(net.w()[i]);
        for j in 0..n {
            residual = residual.max((payments[i][j] - p[(i, j)] * budget).abs());
        }
    }
    let external = (0..n).map(|i| x[i] * (1.0 - net.row_sum(i)).max(0.0)).collect();
    Ok(NashPayments { payments, external, residual })
}
