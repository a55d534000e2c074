use std::collections::VecDeque;

use super::{LinearModel, ModelKind};
use crate::error::{CloakError, Result};

#[derive(Debug, Clone)]
pub struct LogregOptions {
    pub max_iter: usize,
    /// Stop when |ΔJ| / J falls below this.
    pub rel_tol: f64,
    /// Stop when the gradient ∞-norm falls below this.
    pub grad_tol: f64,
    /// Starting point `[w.., b]`; zeros when absent.
    pub init: Option<Vec<f64>>,
}

impl Default for LogregOptions {
    fn default() -> Self {
        LogregOptions {
            max_iter: 20_000,
            rel_tol: 1e-8,
            grad_tol: 1e-6,
            init: None,
        }
    }
}

/// log(1 + e^t) without overflow.
fn softplus(t: f64) -> f64 {
    if t > 0.0 {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

fn logistic(t: f64) -> f64 {
    super::sigmoid(t)
}

/// J(w,b) = ½‖w‖² + C·Σ log(1 + exp(−ỹ(w·x + b))) and its gradient.
///
/// `params` is `[w_0, …, w_{d−1}, b]`; the intercept is not penalized.
pub fn logreg_objective(x: &[&[usize]], y: &[bool], c: f64, params: &[f64]) -> (f64, Vec<f64>) {
    let d = params.len() - 1;
    let (w, b) = (&params[..d], params[d]);
    let mut grad: Vec<f64> = w.to_vec();
    grad.push(0.0);
    let mut f = 0.5 * w.iter().map(|v| v * v).sum::<f64>();
    for (row, &label) in x.iter().zip(y) {
        let z = b + row.iter().map(|&j| w[j]).sum::<f64>();
        let sign = if label { 1.0 } else { -1.0 };
        let margin = sign * z;
        f += c * softplus(-margin);
        // d/dz log(1+exp(-s z)) = -s·σ(-s z)
        let g = -c * sign * logistic(-margin);
        for &j in row.iter() {
            grad[j] += g;
        }
        grad[d] += g;
    }
    (f, grad)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Trains an L2-regularized logistic regression with L-BFGS.
pub fn train_logreg_l2(
    x: &[&[usize]],
    y: &[bool],
    n_features: usize,
    c: f64,
    opts: &LogregOptions,
) -> Result<LinearModel> {
    if x.len() != y.len() {
        return Err(CloakError::InvalidArgument(
            "rows and labels differ in length".into(),
        ));
    }
    if !(c > 0.0 && c.is_finite()) {
        return Err(CloakError::InvalidArgument(format!("C must be positive, got {c}")));
    }
    if !(y.iter().any(|&v| v) && y.iter().any(|&v| !v)) {
        return Err(CloakError::SingleClass);
    }
    if x.iter().flat_map(|r| r.iter()).any(|&j| j >= n_features) {
        return Err(CloakError::InvalidArgument("feature index out of range".into()));
    }

    let dim = n_features + 1;
    let mut params = match &opts.init {
        Some(p) if p.len() == dim => p.clone(),
        Some(p) => {
            return Err(CloakError::InvalidArgument(format!(
                "initial point has length {}, expected {dim}",
                p.len()
            )))
        }
        None => vec![0.0; dim],
    };
    let eval = |p: &[f64]| logreg_objective(x, y, c, p);
    let (mut f, mut g) = eval(&params);

    const MEMORY: usize = 10;
    let mut history: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::with_capacity(MEMORY);
    let mut converged = inf_norm(&g) < opts.grad_tol;
    let mut iter = 0;

    while !converged && iter < opts.max_iter {
        iter += 1;

        // Two-loop recursion for the search direction.
        let mut q = g.clone();
        let mut alphas = Vec::with_capacity(history.len());
        for (s, yv, rho) in history.iter().rev() {
            let a = rho * dot(s, &q);
            q.iter_mut().zip(yv).for_each(|(qi, yi)| *qi -= a * yi);
            alphas.push(a);
        }
        let gamma = history
            .back()
            .map_or(1.0 / dot(&g, &g).sqrt().max(1.0), |(s, yv, _)| {
                dot(s, yv) / dot(yv, yv)
            });
        q.iter_mut().for_each(|v| *v *= gamma);
        for ((s, yv, rho), a) in history.iter().zip(alphas.iter().rev()) {
            let b = rho * dot(yv, &q);
            q.iter_mut().zip(s).for_each(|(qi, si)| *qi += (a - b) * si);
        }
        let mut dir: Vec<f64> = q.iter().map(|v| -v).collect();
        let mut slope = dot(&g, &dir);
        if slope >= 0.0 {
            // Not a descent direction; restart from steepest descent.
            history.clear();
            dir = g.iter().map(|v| -v).collect();
            slope = -dot(&g, &g);
        }

        // Backtracking line search with the Armijo condition.
        let mut step = 1.0;
        let (mut f_new, mut g_new, mut p_new);
        loop {
            p_new = params
                .iter()
                .zip(&dir)
                .map(|(p, d)| p + step * d)
                .collect::<Vec<f64>>();
            (f_new, g_new) = eval(&p_new);
            if f_new <= f + 1e-4 * step * slope || step < 1e-20 {
                break;
            }
            step *= 0.5;
        }

        let s: Vec<f64> = p_new.iter().zip(&params).map(|(a, b)| a - b).collect();
        let yv: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &yv);
        if sy > 1e-12 * dot(&yv, &yv).sqrt() * dot(&s, &s).sqrt() {
            if history.len() == MEMORY {
                history.pop_front();
            }
            history.push_back((s, yv, 1.0 / sy));
        }

        let rel_change = (f - f_new).abs() / f.abs().max(f64::MIN_POSITIVE);
        params = p_new;
        f = f_new;
        g = g_new;
        converged = rel_change < opts.rel_tol || inf_norm(&g) < opts.grad_tol;
    }

    if !converged {
        return Err(CloakError::NotConverged {
            iterations: iter,
            grad_norm: inf_norm(&g),
        });
    }
    let intercept = params.pop().unwrap_or(0.0);
    Ok(LinearModel {
        weights: params,
        intercept,
        c,
        kind: ModelKind::BinaryClassifier,
    })
}
