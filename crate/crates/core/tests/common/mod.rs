//! Generators and independent oracles shared by the integration tests.
#![allow(dead_code, clippy::needless_range_loop)]

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use satnet::Network;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn three_node() -> Network {
    Network::from_rows(
        &[vec![0.0, 0.75, 0.25], vec![0.0, 0.0, 1.0], vec![0.3, 0.7, 0.0]],
        vec![5.0, 3.0, 2.0],
    )
    .unwrap()
}

pub const C_STAR: [f64; 3] = [4.37, -3.31, -1.06];
pub const C0: [f64; 3] = [5.0, 2.0, 2.0];
pub const Q: [f64; 3] = [0.07, 0.59, 0.34];

/// Random network with `n <= max_n`: sparse rows, a mix of stochastic,
/// leaking and empty rows, occasional zero capacities.
pub fn random_network(rng: &mut impl Rng, max_n: usize) -> Network {
    let n = rng.random_range(1..=max_n);
    let density = rng.random_range(0.2..0.9);
    let mut rows = vec![vec![0.0; n]; n];
    for row in rows.iter_mut() {
        for v in row.iter_mut() {
            if rng.random_bool(density) {
                *v = rng.random_range(0.05..1.0);
            }
        }
        let s: f64 = row.iter().sum();
        if s == 0.0 {
            continue;
        }
        let target = match rng.random_range(0..3) {
            0 => rng.random_range(0.3..1.0),
            _ => 1.0,
        };
        row.iter_mut().for_each(|v| *v *= target / s);
    }
    let w = (0..n)
        .map(|_| if rng.random_bool(0.05) { 0.0 } else { rng.random_range(0.1..5.0) })
        .collect();
    Network::from_rows(&rows, w).unwrap()
}

pub fn random_flow(rng: &mut impl Rng, n: usize, scale: f64) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-scale..scale)).collect()
}

pub fn zero_sum(mut c: Vec<f64>) -> Vec<f64> {
    let mean = c.iter().sum::<f64>() / c.len() as f64;
    c.iter_mut().for_each(|v| *v -= mean);
    c
}

/// Strongly connected row-stochastic network with `n <= max_n`: a random
/// positive pattern on top of the cycle `0 -> 1 -> ... -> 0`.
pub fn random_irreducible(rng: &mut impl Rng, max_n: usize) -> Network {
    let n = rng.random_range(1..=max_n);
    let mut rows = vec![vec![0.0; n]; n];
    for i in 0..n {
        rows[i][(i + 1) % n] = rng.random_range(0.1..1.0);
        for j in 0..n {
            if rng.random_bool(0.4) {
                rows[i][j] += rng.random_range(0.0..1.0);
            }
        }
        let s: f64 = rows[i].iter().sum();
        rows[i].iter_mut().for_each(|v| *v /= s);
    }
    let w = (0..n).map(|_| rng.random_range(0.2..3.0)).collect();
    Network::from_rows(&rows, w).unwrap()
}

/// Line-lattice intersection for an irreducible stochastic network and a
/// zero-sum flow. Both the direction and a point of the line come from the
/// overdetermined system `[I - P'; 1'] y = [rhs; s]`, which has full column
/// rank and is solved through its normal equations.
pub struct LineOracle {
    pub point: Vec<f64>,
    pub direction: Vec<f64>,
    pub t_lo: f64,
    pub t_hi: f64,
}

fn augmented_solve(net: &Network, rhs: &[f64], total: f64) -> Vec<f64> {
    let n = net.n();
    let a = DMatrix::<f64>::identity(n, n) - net.p().transpose();
    let m = DMatrix::from_fn(n + 1, n, |i, j| if i < n { a[(i, j)] } else { 1.0 });
    let b = DVector::from_fn(n + 1, |i, _| if i < n { rhs[i] } else { total });
    let mt = m.transpose();
    let y = (&mt * &m).cholesky().expect("full column rank").solve(&(&mt * b));
    y.iter().copied().collect()
}

impl LineOracle {
    pub fn new(net: &Network, c: &[f64]) -> Self {
        let n = net.n();
        let direction = augmented_solve(net, &vec![0.0; n], 1.0);
        let point = augmented_solve(net, c, 0.0);
        let mut t_lo = f64::NEG_INFINITY;
        let mut t_hi = f64::INFINITY;
        for i in 0..n {
            // 0 <= point_i + t dir_i <= w_i with dir_i > 0
            t_lo = t_lo.max(-point[i] / direction[i]);
            t_hi = t_hi.min((net.w()[i] - point[i]) / direction[i]);
        }
        LineOracle { point, direction, t_lo, t_hi }
    }

    pub fn at(&self, t: f64) -> Vec<f64> {
        self.point.iter().zip(&self.direction).map(|(p, d)| p + t * d).collect()
    }

    pub fn length(&self) -> f64 {
        self.t_hi - self.t_lo
    }
}

/// All equilibria of a small network found by trying every assignment of
/// nodes to "at w", "at 0" and "free", solving the free block and keeping
/// the consistent solutions. Singular free blocks are skipped; the ends of
/// a segment still show up because they pin some node at a bound.
pub fn enumerate_equilibria(net: &Network, c: &[f64]) -> Vec<Vec<f64>> {
    let n = net.n();
    let p = net.p();
    let w = net.w();
    let mut found = Vec::new();
    let total = 3usize.pow(n as u32);
    for code in 0..total {
        let mut status = vec![0u8; n];
        let mut k = code;
        for s in status.iter_mut() {
            *s = (k % 3) as u8;
            k /= 3;
        }
        let free: Vec<usize> = (0..n).filter(|&i| status[i] == 2).collect();
        let mut x: Vec<f64> = (0..n).map(|i| if status[i] == 0 { w[i] } else { 0.0 }).collect();
        if !free.is_empty() {
            let m = free.len();
            let a = DMatrix::from_fn(m, m, |r, s| {
                let (i, j) = (free[r], free[s]);
                let delta = if i == j { 1.0 } else { 0.0 };
                delta - p[(j, i)]
            });
            let rhs = DVector::from_fn(m, |r, _| {
                let i = free[r];
                c[i] + (0..n).filter(|&k| status[k] != 2).map(|k| p[(k, i)] * x[k]).sum::<f64>()
            });
            let lu = a.lu();
            if lu.determinant().abs() < 1e-10 {
                continue;
            }
            let sol = lu.solve(&rhs).unwrap();
            for (r, &i) in free.iter().enumerate() {
                x[i] = sol[r];
            }
        }
        if net.residual(&x, c) < 1e-9 {
            found.push(x);
        }
    }
    found
}

pub fn sup_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| f64::max(m, (x - y).abs()))
}

pub fn le(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.iter().zip(b).all(|(x, y)| *x <= *y + tol)
}
