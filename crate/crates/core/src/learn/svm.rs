//! Soft-margin RBF support vector machine trained by sequential minimal
//! optimization with second-order working-set selection.
//!
//! Dual problem: minimize `0.5 a'Qa - e'a` subject to `0 <= a_i <= C` and
//! `y'a = 0`, where `Q_ij = y_i y_j k(x_i, x_j)`.

use std::collections::{HashMap, VecDeque};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dataset::Label;

const TAU: f64 = 1e-12;
const CACHE_BYTES: usize = 512 << 20;

#[inline]
pub fn rbf(a: &[f64], b: &[f64], gamma: f64) -> f64 {
    let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    (-gamma * d2).exp()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmState {
    pub c: f64,
    pub gamma: f64,
    pub support_vectors: Vec<Vec<f64>>,
    /// Dual coefficient `a_i` of each support vector, in `(0, C]`.
    pub alpha: Vec<f64>,
    pub labels: Vec<Label>,
    pub bias: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl SvmState {
    /// `sum_i a_i y_i k(sv_i, x) + b`.
    pub fn decision(&self, x: &[f64]) -> f64 {
        self.support_vectors
            .iter()
            .zip(&self.alpha)
            .zip(&self.labels)
            .map(|((sv, a), l)| a * l.sign() * rbf(sv, x, self.gamma))
            .sum::<f64>()
            + self.bias
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoParams {
    pub c: f64,
    pub gamma: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub trace: bool,
}

#[derive(Debug, Clone)]
pub struct SmoOutcome {
    pub state: SvmState,
    /// Dual objective after each iteration, when tracing.
    pub objective: Vec<f64>,
}

/// Bounded FIFO cache of kernel rows.
struct KernelRows<'a> {
    rows: &'a [Vec<f64>],
    gamma: f64,
    cache: HashMap<usize, Arc<Vec<f64>>>,
    order: VecDeque<usize>,
    capacity: usize,
}

impl<'a> KernelRows<'a> {
    fn new(rows: &'a [Vec<f64>], gamma: f64) -> Self {
        let n = rows.len().max(1);
        Self {
            rows,
            gamma,
            cache: HashMap::new(),
            order: VecDeque::new(),
            capacity: (CACHE_BYTES / (8 * n)).max(2),
        }
    }

    fn row(&mut self, i: usize) -> Arc<Vec<f64>> {
        if let Some(r) = self.cache.get(&i) {
            return Arc::clone(r);
        }
        let xi = &self.rows[i];
        let gamma = self.gamma;
        let r: Vec<f64> = self.rows.par_iter().map(|xj| rbf(xi, xj, gamma)).collect();
        let r = Arc::new(r);
        if self.order.len() == self.capacity {
            if let Some(old) = self.order.pop_front() {
                self.cache.remove(&old);
            }
        }
        self.order.push_back(i);
        self.cache.insert(i, Arc::clone(&r));
        r
    }
}

/// Trains on `rows` with labels mapped to +1 (tumor) and -1.
pub fn smo(rows: &[Vec<f64>], labels: &[Label], p: SmoParams) -> SmoOutcome {
    let n = rows.len();
    let y: Vec<f64> = labels.iter().map(|l| l.sign()).collect();
    let c = p.c;
    let mut alpha = vec![0.0; n];
    let mut grad = vec![-1.0; n];
    // k(x, x) = 1 for the RBF kernel
    let qd = 1.0;
    let mut kernel = KernelRows::new(rows, p.gamma);
    let mut objective = Vec::new();

    let in_up = |a: f64, yt: f64| (yt > 0.0 && a < c) || (yt < 0.0 && a > 0.0);
    let in_low = |a: f64, yt: f64| (yt > 0.0 && a > 0.0) || (yt < 0.0 && a < c);

    let mut iterations = 0;
    let mut converged = false;
    while iterations < p.max_iter {
        // i maximizes -y_t G_t over the up set
        let mut gmax = f64::NEG_INFINITY;
        let mut i = usize::MAX;
        for t in 0..n {
            if in_up(alpha[t], y[t]) {
                let v = -y[t] * grad[t];
                if v > gmax {
                    gmax = v;
                    i = t;
                }
            }
        }
        if i == usize::MAX {
            converged = true;
            break;
        }
        let ki = kernel.row(i);

        // j minimizes the second-order objective decrease over the low set
        let mut gmin = f64::INFINITY;
        let mut j = usize::MAX;
        let mut best = f64::INFINITY;
        for t in 0..n {
            if !in_low(alpha[t], y[t]) {
                continue;
            }
            let v = -y[t] * grad[t];
            gmin = gmin.min(v);
            let b = gmax - v;
            if b > 0.0 {
                let a = (qd + qd - 2.0 * ki[t]).max(TAU);
                let dec = -(b * b) / a;
                if dec < best {
                    best = dec;
                    j = t;
                }
            }
        }
        if gmax - gmin < p.tol || j == usize::MAX {
            converged = true;
            break;
        }
        let kj = kernel.row(j);

        let (old_i, old_j) = (alpha[i], alpha[j]);
        let kij = ki[j];
        if y[i] != y[j] {
            let quad = (qd + qd + 2.0 * (y[i] * y[j] * kij)).max(TAU);
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let quad = (qd + qd - 2.0 * (y[i] * y[j] * kij)).max(TAU);
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }

        let di = alpha[i] - old_i;
        let dj = alpha[j] - old_j;
        for t in 0..n {
            grad[t] += y[t] * (y[i] * ki[t] * di + y[j] * kj[t] * dj);
        }
        iterations += 1;
        if p.trace {
            let obj: f64 = alpha.iter().zip(&grad).map(|(a, g)| a * (g - 1.0)).sum::<f64>() * 0.5;
            objective.push(obj);
        }
    }

    let bias = -rho(&alpha, &grad, &y, c);
    let mut state = SvmState {
        c,
        gamma: p.gamma,
        support_vectors: Vec::new(),
        alpha: Vec::new(),
        labels: Vec::new(),
        bias,
        iterations,
        converged,
    };
    for t in 0..n {
        if alpha[t] > 0.0 {
            state.support_vectors.push(rows[t].clone());
            state.alpha.push(alpha[t]);
            state.labels.push(labels[t]);
        }
    }
    SmoOutcome { state, objective }
}

/// Offset from free support vectors, or the midpoint of the feasible
/// interval when none is free.
fn rho(alpha: &[f64], grad: &[f64], y: &[f64], c: f64) -> f64 {
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut sum_free, mut n_free) = (0.0, 0usize);
    for t in 0..alpha.len() {
        let yg = y[t] * grad[t];
        if alpha[t] >= c {
            if y[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if alpha[t] <= 0.0 {
            if y[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            n_free += 1;
            sum_free += yg;
        }
    }
    if n_free > 0 {
        sum_free / n_free as f64
    } else {
        (ub + lb) / 2.0
    }
}
