//! L2-regularised logistic regression fitted with L-BFGS.
//!
//! Objective: mean logistic loss + ‖w‖² / (2·C·n); the intercept is not
//! penalised. Iteration stops when the gradient norm drops below `tol` or
//! after `max_iter` iterations.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::{sigmoid, LearnError, Matrix};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LrParams {
    pub c: f64,
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for LrParams {
    fn default() -> Self {
        Self { c: 1.0, max_iter: 10_000, tol: 1e-6 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LrModel {
    pub weights: Vec<f64>,
    pub intercept: f64,
    pub iterations: usize,
}

impl LrModel {
    pub fn predict(&self, row: &[f64]) -> f64 {
        sigmoid(self.intercept + dot(&self.weights, row))
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `log(1 + e^z)` without overflow.
#[inline]
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// Objective and gradient at `theta = [w_0..w_{p-1}, b]`.
pub fn loss_and_grad(theta: &[f64], x: &Matrix, y: &[u8], c: f64) -> (f64, Vec<f64>) {
    let p = x.cols();
    let n = x.rows() as f64;
    let (w, b) = (&theta[..p], theta[p]);
    let mut loss = 0.0;
    let mut grad = vec![0.0; p + 1];
    for i in 0..x.rows() {
        let row = x.row(i);
        let z = b + dot(w, row);
        let yi = y[i] as f64;
        loss += softplus(z) - yi * z;
        let r = sigmoid(z) - yi;
        for (g, &v) in grad[..p].iter_mut().zip(row) {
            *g += r * v;
        }
        grad[p] += r;
    }
    let reg = 1.0 / (c * n);
    loss = loss / n + 0.5 * reg * dot(w, w);
    for (g, &wj) in grad[..p].iter_mut().zip(w) {
        *g = *g / n + reg * wj;
    }
    grad[p] /= n;
    (loss, grad)
}

fn norm(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

pub fn fit(params: &LrParams, x: &Matrix, y: &[u8]) -> Result<LrModel, LearnError> {
    if !(params.c > 0.0) || params.max_iter == 0 {
        return Err(LearnError::InvalidParams(format!("C={} max_iter={}", params.c, params.max_iter)));
    }
    const MEMORY: usize = 10;
    let dim = x.cols() + 1;
    let mut theta = vec![0.0; dim];
    let (mut f, mut g) = loss_and_grad(&theta, x, y, params.c);
    let mut history: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::with_capacity(MEMORY);
    let mut iterations = 0;

    while iterations < params.max_iter && norm(&g) > params.tol {
        iterations += 1;
        // two-loop recursion
        let mut q = g.clone();
        let mut alphas = Vec::with_capacity(history.len());
        for (s, yv, rho) in history.iter().rev() {
            let a = rho * dot(s, &q);
            for (qi, yi) in q.iter_mut().zip(yv) {
                *qi -= a * yi;
            }
            alphas.push(a);
        }
        if let Some((s, yv, _)) = history.back() {
            let gamma = dot(s, yv) / dot(yv, yv);
            q.iter_mut().for_each(|v| *v *= gamma);
        }
        for ((s, yv, rho), a) in history.iter().zip(alphas.iter().rev()) {
            let bcoef = rho * dot(yv, &q);
            for (qi, si) in q.iter_mut().zip(s) {
                *qi += si * (a - bcoef);
            }
        }
        let mut dir: Vec<f64> = q.iter().map(|v| -v).collect();
        let mut slope = dot(&g, &dir);
        if slope >= 0.0 {
            // not a descent direction: restart from steepest descent
            history.clear();
            dir = g.iter().map(|v| -v).collect();
            slope = -dot(&g, &g);
        }
        // backtracking Armijo line search
        let mut step = if history.is_empty() { (1.0 / norm(&g)).min(1.0) } else { 1.0 };
        let mut accepted = None;
        for _ in 0..60 {
            let cand: Vec<f64> = theta.iter().zip(&dir).map(|(t, d)| t + step * d).collect();
            let (fc, gc) = loss_and_grad(&cand, x, y, params.c);
            if fc <= f + 1e-4 * step * slope {
                accepted = Some((cand, fc, gc));
                break;
            }
            step *= 0.5;
        }
        let Some((cand, fc, gc)) = accepted else { break };
        let s: Vec<f64> = cand.iter().zip(&theta).map(|(a, b)| a - b).collect();
        let yv: Vec<f64> = gc.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &yv);
        if sy > 1e-12 * norm(&s) * norm(&yv) {
            if history.len() == MEMORY {
                history.pop_front();
            }
            history.push_back((s, yv, 1.0 / sy));
        }
        let improvement = f - fc;
        theta = cand;
        f = fc;
        g = gc;
        if improvement.abs() <= f64::EPSILON * f.abs().max(1.0) {
            break;
        }
    }
    let p = x.cols();
    Ok(LrModel { weights: theta[..p].to_vec(), intercept: theta[p], iterations })
}
