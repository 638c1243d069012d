//! Systemic loss along shock rays and the jumps at critical flows.
//!
//! A shock ray is `c(eps) = c0 - eps * q`. Equilibria move continuously
//! along it except where the effective flow into a stochastic trapping set
//! sums to zero; there the equilibrium drops from the top of a segment to
//! its bottom.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::format::fmt_num;
use crate::graph::{decompose, Decomposition};
use crate::model::{Network, FEAS_TOL};
use crate::solver::{effective_flow, transient_values, SolveOptions};
use crate::structure::{equilibrium_set, invariant_vector, EQUILIBRIUM_INPUT_TOL};

/// Width of the bracket left by the bisection before the final secant step.
pub const BISECTION_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShockRay {
    pub c0: Vec<f64>,
    pub q: Vec<f64>,
    pub eps_lo: f64,
    pub eps_hi: f64,
    pub grid: usize,
    /// Accept directions with negative entries.
    pub allow_signed: bool,
}

impl ShockRay {
    pub fn new(c0: Vec<f64>, q: Vec<f64>, eps_lo: f64, eps_hi: f64, grid: usize) -> Result<Self> {
        let ray = ShockRay { c0, q, eps_lo, eps_hi, grid, allow_signed: false };
        ray.check(None)?;
        Ok(ray)
    }

    pub fn signed(mut self) -> Self {
        self.allow_signed = true;
        self
    }

    pub fn check(&self, n: Option<usize>) -> Result<()> {
        if self.c0.len() != self.q.len() {
            return Err(Error::Dimension { what: "q", expected: self.c0.len(), found: self.q.len() });
        }
        if let Some(n) = n {
            if self.c0.len() != n {
                return Err(Error::Dimension { what: "c0", expected: n, found: self.c0.len() });
            }
        }
        if self.c0.iter().chain(&self.q).any(|v| !v.is_finite()) {
            return Err(Error::input("c0 and q must be finite"));
        }
        if !self.allow_signed && self.q.iter().any(|&v| v < 0.0) {
            return Err(Error::input("q has a negative entry; pass the signed override to allow it"));
        }
        if self.q.iter().all(|&v| v == 0.0) {
            return Err(Error::input("q must be nonzero"));
        }
        if !(self.eps_lo.is_finite() && self.eps_hi.is_finite() && self.eps_lo <= self.eps_hi) {
            return Err(Error::input("need finite eps_lo <= eps_hi"));
        }
        if self.grid < 2 {
            return Err(Error::input("grid must be at least 2"));
        }
        Ok(())
    }

    pub fn flow_at(&self, eps: f64) -> Vec<f64> {
        self.c0.iter().zip(&self.q).map(|(c, q)| c - eps * q).collect()
    }

    pub fn grid_points(&self) -> Vec<f64> {
        let m = self.grid - 1;
        (0..self.grid)
            .map(|k| {
                if k == m {
                    self.eps_hi
                } else {
                    self.eps_lo + (self.eps_hi - self.eps_lo) * k as f64 / m as f64
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRecord {
    pub eps: f64,
    pub unique: bool,
    pub x_min: Vec<f64>,
    pub x_max: Vec<f64>,
    /// Loss at the maximal equilibrium.
    pub loss_min: f64,
    /// Loss at the minimal equilibrium.
    pub loss_max: f64,
    /// Nodes with `x_min[i] < w[i] - tol_class`.
    pub defaults: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriticalCrossing {
    pub eps_star: f64,
    pub c_star: Vec<f64>,
    pub sink: usize,
    /// Limit from below the crossing, the maximal equilibrium at `c_star`.
    pub x_below: Vec<f64>,
    /// Limit from above the crossing, the minimal equilibrium at `c_star`.
    pub x_above: Vec<f64>,
    pub jump_vector: Vec<f64>,
    pub loss_jump: f64,
    pub loss_below: f64,
    pub loss_above: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub records: Vec<SweepRecord>,
    pub crossings: Vec<CriticalCrossing>,
    /// Whether the default sets grow along the sweep. Reported, not enforced.
    pub defaults_monotone: bool,
}

fn loss_of(net: &Network, c0: &[f64], c: &[f64], x: &[f64]) -> f64 {
    let s0: f64 = c0.iter().sum();
    let s: f64 = c.iter().sum();
    let sw: f64 = net.w().iter().sum();
    let sx: f64 = x.iter().sum();
    (s0 - s) + (sw - sx)
}

/// `1'c0 - 1'c + 1'w - 1'x`, the value destroyed by moving from `c0` to `c`.
pub fn systemic_loss(net: &Network, c0: &[f64], c: &[f64], x: &[f64]) -> Result<f64> {
    net.check_vector("c0", c0)?;
    net.check_vector("c", c)?;
    net.check_vector("x", x)?;
    if let Some(i) = (0..c.len()).find(|&i| c[i] > c0[i] + FEAS_TOL) {
        return Err(Error::input(format!("c[{i}] exceeds c0[{i}]; loss is defined for shocks")));
    }
    let r = net.residual(x, c);
    if r > EQUILIBRIUM_INPUT_TOL {
        return Err(Error::input(format!("x is not an equilibrium (residual {r:e})")));
    }
    Ok(loss_of(net, c0, c, x))
}

/// `1'(x_max - x_min)` at a critical flow.
pub fn loss_jump(net: &Network, c_star: &[f64], opts: &SolveOptions) -> Result<f64> {
    let set = equilibrium_set(net, c_star, opts)?;
    if set.unique {
        return Err(Error::NotCritical);
    }
    Ok(set.upper().iter().zip(set.lower()).map(|(a, b)| a - b).sum())
}

/// Largest `p`-norm of `x_max(c) - x_min(c)` over all flows `c`.
/// Use `f64::INFINITY` for the sup norm.
pub fn max_jump_norm(net: &Network, p: f64) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(Error::input("norm exponent must be at least 1"));
    }
    net.ensure_valid()?;
    let d = decompose(net);
    let mut acc: f64 = 0.0;
    for (_, sink) in d.stochastic_sinks() {
        let block = net.restrict(&sink.nodes);
        let pi = invariant_vector(block.p())?;
        let reach = block.w().iter().zip(&pi).map(|(w, q)| w / q).fold(f64::INFINITY, f64::min);
        if p.is_infinite() {
            let top = pi.iter().copied().fold(0.0, f64::max);
            acc = acc.max(reach * top);
        } else {
            let norm_p: f64 = pi.iter().map(|q| q.powf(p)).sum();
            acc += reach.powf(p) * norm_p;
        }
    }
    Ok(if p.is_infinite() { acc } else { acc.powf(1.0 / p) })
}

/// Net effective flow into a trapping set along the ray.
fn aggregate(
    net: &Network,
    ray: &ShockRay,
    d: &Decomposition,
    sink: usize,
    eps: f64,
    opts: &SolveOptions,
) -> Result<f64> {
    let c = ray.flow_at(eps);
    let xt = transient_values(net, &c, d, opts)?;
    Ok(effective_flow(net, &c, &d.sinks[sink].nodes, &xt).iter().sum())
}

/// First sign change of the aggregate flow into `sink` on the ray, located
/// by bisection and a closing secant step. `None` for out-connected sinks or
/// when the aggregate keeps its sign on the whole range.
pub fn find_critical_eps(
    net: &Network,
    ray: &ShockRay,
    sink: usize,
    opts: &SolveOptions,
) -> Result<Option<f64>> {
    opts.check()?;
    net.ensure_valid()?;
    ray.check(Some(net.n()))?;
    let d = decompose(net);
    let s = d.sinks.get(sink).ok_or_else(|| Error::input(format!("no sink with index {sink}")))?;
    if s.out_connected {
        return Ok(None);
    }
    let g = |eps: f64| aggregate(net, ray, &d, sink, eps, opts);

    // a bracket: the whole range for monotone rays, else the first grid cell
    // with a sign change
    let mut a = ray.eps_lo;
    let mut ga = g(a)?;
    if ga == 0.0 {
        return Ok(Some(a));
    }
    let mut bracket = None;
    let points = if ray.allow_signed { ray.grid_points() } else { vec![ray.eps_lo, ray.eps_hi] };
    for &b in &points[1..] {
        let gb = g(b)?;
        if gb == 0.0 {
            return Ok(Some(b));
        }
        if (ga < 0.0) != (gb < 0.0) {
            bracket = Some((b, gb));
            break;
        }
        a = b;
        ga = gb;
    }
    let Some((mut b, mut gb)) = bracket else {
        return Ok(None);
    };

    while b - a > BISECTION_TOL {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let gm = g(m)?;
        if gm == 0.0 {
            return Ok(Some(m));
        }
        if (gm < 0.0) == (ga < 0.0) {
            a = m;
            ga = gm;
        } else {
            b = m;
            gb = gm;
        }
    }
    // closing secant step inside the final bracket
    let e = a - ga * (b - a) / (gb - ga);
    Ok(Some(if e.is_finite() { e.clamp(a, b) } else { 0.5 * (a + b) }))
}

fn evaluate(
    net: &Network,
    ray: &ShockRay,
    eps: f64,
    opts: &SolveOptions,
) -> Result<SweepRecord> {
    let c = ray.flow_at(eps);
    let set = equilibrium_set(net, &c, opts)?;
    let x_min = set.lower();
    let x_max = set.upper();
    let defaults = (0..net.n()).filter(|&i| x_min[i] < net.w()[i] - opts.tol_class).collect();
    Ok(SweepRecord {
        eps,
        unique: set.unique,
        loss_min: loss_of(net, &ray.c0, &c, &x_max),
        loss_max: loss_of(net, &ray.c0, &c, &x_min),
        x_min,
        x_max,
        defaults,
    })
}

/// Evaluates the ray on its grid and at every critical crossing.
pub fn sweep(net: &Network, ray: &ShockRay, opts: &SolveOptions) -> Result<SweepReport> {
    opts.check()?;
    net.ensure_valid()?;
    ray.check(Some(net.n()))?;
    let d = decompose(net);

    let mut crossings = Vec::new();
    for (index, _) in d.stochastic_sinks() {
        let Some(eps_star) = find_critical_eps(net, ray, index, opts)? else {
            continue;
        };
        let c_star = ray.flow_at(eps_star);
        let set = equilibrium_set(net, &c_star, opts)?;
        let x_above = set.lower();
        let x_below = set.upper();
        let jump_vector: Vec<f64> = x_below.iter().zip(&x_above).map(|(a, b)| a - b).collect();
        crossings.push(CriticalCrossing {
            eps_star,
            sink: index,
            loss_jump: jump_vector.iter().sum(),
            loss_below: loss_of(net, &ray.c0, &c_star, &x_below),
            loss_above: loss_of(net, &ray.c0, &c_star, &x_above),
            c_star,
            x_below,
            x_above,
            jump_vector,
        });
    }
    crossings.sort_by(|a, b| a.eps_star.total_cmp(&b.eps_star).then(a.sink.cmp(&b.sink)));

    let mut points = ray.grid_points();
    points.extend(crossings.iter().map(|c| c.eps_star));
    points.sort_by(f64::total_cmp);
    points.dedup();

    let records = points
        .par_iter()
        .map(|&eps| evaluate(net, ray, eps, opts))
        .collect::<Result<Vec<_>>>()?;
    let defaults_monotone = records
        .windows(2)
        .all(|pair| pair[0].defaults.iter().all(|i| pair[1].defaults.contains(i)));
    Ok(SweepReport { records, crossings, defaults_monotone })
}

/// Sweep records as CSV: `eps, unique, loss_min, loss_max, n_defaults`,
/// then `x_min_1..n` and `x_max_1..n`.
pub fn write_sweep_csv(out: &mut impl Write, n: usize, records: &[SweepRecord]) -> std::io::Result<()> {
    let mut header = vec!["eps".to_string(), "unique".into(), "loss_min".into(), "loss_max".into()];
    header.push("n_defaults".into());
    header.extend((1..=n).map(|i| format!("x_min_{i}")));
    header.extend((1..=n).map(|i| format!("x_max_{i}")));
    writeln!(out, "{}", header.join(","))?;
    for r in records {
        let mut row = vec![fmt_num(r.eps), r.unique.to_string(), fmt_num(r.loss_min), fmt_num(r.loss_max)];
        row.push(r.defaults.len().to_string());
        row.extend(r.x_min.iter().chain(&r.x_max).map(|&v| fmt_num(v)));
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}
