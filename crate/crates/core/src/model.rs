//! Networks, exogenous flows, the saturation operator and liability data.
//!
//! A network is a pair `(P, w)`: a nonnegative sub-stochastic routing matrix
//! `P` (row `i` says how node `i` splits its outflow) and a nonnegative
//! capacity vector `w`. Equilibria are the fixed points of
//! `x = S(P'x + c)` where `S` clamps every coordinate to `[0, w_i]`.

use std::fmt;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};

/// Absolute slack for nonnegativity and row-sum checks.
pub const FEAS_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    p: DMatrix<f64>,
    w: Vec<f64>,
}

impl Network {
    /// Builds a network after checking shapes and finiteness. Sign and
    /// row-sum constraints are reported by [`Network::validate`].
    pub fn new(p: DMatrix<f64>, w: Vec<f64>) -> Result<Self> {
        let n = w.len();
        if n == 0 {
            return Err(Error::input("network must have at least one node"));
        }
        if p.nrows() != n {
            return Err(Error::Dimension { what: "P rows", expected: n, found: p.nrows() });
        }
        if p.ncols() != n {
            return Err(Error::Dimension { what: "P columns", expected: n, found: p.ncols() });
        }
        if p.iter().chain(w.iter()).any(|v| !v.is_finite()) {
            return Err(Error::input("network entries must be finite"));
        }
        Ok(Network { p, w })
    }

    pub fn from_rows(rows: &[Vec<f64>], w: Vec<f64>) -> Result<Self> {
        let n = w.len();
        if rows.len() != n {
            return Err(Error::Dimension { what: "P rows", expected: n, found: rows.len() });
        }
        for row in rows {
            if row.len() != n {
                return Err(Error::Dimension { what: "P columns", expected: n, found: row.len() });
            }
        }
        Network::new(DMatrix::from_fn(n, n, |i, j| rows[i][j]), w)
    }

    /// Like [`Network::new`] but also rejects networks that fail validation.
    pub fn checked(p: DMatrix<f64>, w: Vec<f64>) -> Result<Self> {
        let net = Network::new(p, w)?;
        net.ensure_valid()?;
        Ok(net)
    }

    pub fn n(&self) -> usize {
        self.w.len()
    }

    pub fn p(&self) -> &DMatrix<f64> {
        &self.p
    }

    pub fn w(&self) -> &[f64] {
        &self.w
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.n()).map(|i| self.p.row(i).iter().copied().collect()).collect()
    }

    pub fn row_sum(&self, i: usize) -> f64 {
        self.p.row(i).sum()
    }

    /// Unsaturated inflow `P'x + c`.
    pub fn inflow(&self, x: &[f64], c: &[f64]) -> Vec<f64> {
        let n = self.n();
        let mut z = c.to_vec();
        for k in 0..n {
            let xk = x[k];
            if xk == 0.0 {
                continue;
            }
            for i in 0..n {
                z[i] += self.p[(k, i)] * xk;
            }
        }
        z
    }

    /// One application of the equilibrium map `x -> S(P'x + c)`.
    pub fn apply(&self, x: &[f64], c: &[f64]) -> Vec<f64> {
        let mut z = self.inflow(x, c);
        for (zi, &wi) in z.iter_mut().zip(&self.w) {
            *zi = clamp(*zi, wi);
        }
        z
    }

    /// Sup-norm distance between `x` and its image under the equilibrium map.
    pub fn residual(&self, x: &[f64], c: &[f64]) -> f64 {
        self.apply(x, c)
            .iter()
            .zip(x)
            .fold(0.0, |m, (a, b)| f64::max(m, (a - b).abs()))
    }

    pub fn check_vector(&self, what: &'static str, v: &[f64]) -> Result<()> {
        if v.len() != self.n() {
            return Err(Error::Dimension { what, expected: self.n(), found: v.len() });
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::input(format!("{what} must have finite entries")));
        }
        Ok(())
    }

    pub fn validate(&self) -> ValidationReport {
        let mut violations = Vec::new();
        let n = self.n();
        for i in 0..n {
            for j in 0..n {
                let v = self.p[(i, j)];
                if v < -FEAS_TOL {
                    violations.push(Violation::NegativeEntry { row: i, col: j, value: v });
                }
            }
            let s = self.row_sum(i);
            if s > 1.0 + FEAS_TOL {
                violations.push(Violation::RowSumExcess { row: i, sum: s });
            }
        }
        for (i, &wi) in self.w.iter().enumerate() {
            if wi < -FEAS_TOL {
                violations.push(Violation::NegativeCapacity { node: i, value: wi });
            }
        }
        ValidationReport { violations }
    }

    pub(crate) fn ensure_valid(&self) -> Result<()> {
        let report = self.validate();
        if report.is_valid() {
            Ok(())
        } else {
            Err(Error::InvalidNetwork(report))
        }
    }

    /// Induced sub-network on `nodes` (in the given order).
    pub fn restrict(&self, nodes: &[usize]) -> Network {
        let k = nodes.len();
        Network {
            p: DMatrix::from_fn(k, k, |a, b| self.p[(nodes[a], nodes[b])]),
            w: nodes.iter().map(|&i| self.w[i]).collect(),
        }
    }

    /// Relabels nodes so that new node `a` is old node `perm[a]`.
    pub fn permute(&self, perm: &[usize]) -> Network {
        self.restrict(perm)
    }
}

#[inline]
pub(crate) fn clamp(y: f64, w: f64) -> f64 {
    y.max(0.0).min(w)
}

/// Per-coordinate clamp of `y` to the box `[0, w]`.
pub fn saturate(y: &[f64], w: &[f64]) -> Result<Vec<f64>> {
    if y.len() != w.len() {
        return Err(Error::Dimension { what: "saturate input", expected: w.len(), found: y.len() });
    }
    Ok(y.iter().zip(w).map(|(&a, &b)| clamp(a, b)).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    NegativeEntry { row: usize, col: usize, value: f64 },
    RowSumExcess { row: usize, sum: f64 },
    NegativeCapacity { node: usize, value: f64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NegativeEntry { row, col, value } => {
                write!(f, "P[{row}][{col}] = {value} is negative")
            }
            Violation::RowSumExcess { row, sum } => write!(f, "row {row} of P sums to {sum} > 1"),
            Violation::NegativeCapacity { node, value } => {
                write!(f, "capacity w[{node}] = {value} is negative")
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return write!(f, "valid");
        }
        let parts: Vec<String> = self.violations.iter().map(|v| v.to_string()).collect();
        write!(f, "{}", parts.join("; "))
    }
}

/// Obligations among `n` institutions.
///
/// `liabilities[(i, j)]` is what `i` owes `j`; `assets` are external assets,
/// `senior` the external non-financial liabilities paid first, and
/// `external` the liabilities towards financial entities outside the network.
#[derive(Debug, Clone, PartialEq)]
pub struct LiabilityData {
    pub liabilities: DMatrix<f64>,
    pub assets: Vec<f64>,
    pub senior: Vec<f64>,
    pub external: Vec<f64>,
}

impl LiabilityData {
    pub fn new(
        liabilities: DMatrix<f64>,
        assets: Vec<f64>,
        senior: Vec<f64>,
        external: Vec<f64>,
    ) -> Result<Self> {
        let n = liabilities.nrows();
        if liabilities.ncols() != n {
            return Err(Error::Dimension { what: "W columns", expected: n, found: liabilities.ncols() });
        }
        for (what, v) in [("a", &assets), ("b", &senior), ("u", &external)] {
            if v.len() != n {
                return Err(Error::Dimension { what, expected: n, found: v.len() });
            }
        }
        let all = liabilities.iter().chain(&assets).chain(&senior).chain(&external);
        for v in all {
            if !v.is_finite() || *v < 0.0 {
                return Err(Error::input("liability data must be finite and nonnegative"));
            }
        }
        for i in 0..n {
            if liabilities[(i, i)] != 0.0 {
                return Err(Error::input(format!("W[{i}][{i}] must be zero")));
            }
        }
        Ok(LiabilityData { liabilities, assets, senior, external })
    }

    pub fn n(&self) -> usize {
        self.assets.len()
    }
}

/// Converts obligations to a network and its exogenous flow.
///
/// `w_i = sum_j W_ij + u_i`, `P_ij = W_ij / w_i` (a zero row when `w_i = 0`),
/// and `c = a - b`.
pub fn from_liabilities(data: &LiabilityData) -> Result<(Network, Vec<f64>)> {
    let n = data.n();
    let w: Vec<f64> = (0..n)
        .map(|i| data.liabilities.row(i).sum() + data.external[i])
        .collect();
    let p = DMatrix::from_fn(n, n, |i, j| {
        if w[i] > 0.0 {
            data.liabilities[(i, j)] / w[i]
        } else {
            0.0
        }
    });
    let c = data.assets.iter().zip(&data.senior).map(|(a, b)| a - b).collect();
    Ok((Network::new(p, w)?, c))
}
