use serde::{Deserialize, Serialize};

use super::{dot, Training};
use crate::error::{Error, Result};
use crate::features::LabeledDataset;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LrConfig {
    /// Weight on `||w||^2 / 2`; the bias is not penalised.
    pub l2: f64,
    pub max_iterations: usize,
    pub gradient_tolerance: f64,
}

impl Default for LrConfig {
    fn default() -> Self {
        LrConfig {
            l2: 1.0,
            max_iterations: 10_000,
            gradient_tolerance: 1e-6,
        }
    }
}

impl LrConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.l2 >= 0.0 && self.l2.is_finite()) {
            return Err(Error::Config(format!("lr.l2 {} must be >= 0", self.l2)));
        }
        if !(self.gradient_tolerance > 0.0) {
            return Err(Error::Config("lr.gradient_tolerance must be > 0".into()));
        }
        Ok(())
    }
}

/// `P(ASD | x) = sigmoid(w.x + b)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticRegression {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub iterations: usize,
    pub gradient_norm: f64,
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + exp(-m))` without overflow.
fn log_loss(margin: f64) -> f64 {
    if margin > 0.0 {
        (-margin).exp().ln_1p()
    } else {
        -margin + margin.exp().ln_1p()
    }
}

/// `l2 ||w||^2 / 2 + sum_i log(1 + exp(-y_i (w.x_i + b)))` over `theta = (w, b)`.
pub(crate) fn objective(data: &Training, l2: f64, theta: &[f64]) -> f64 {
    let d = theta.len() - 1;
    let reg = 0.5 * l2 * theta[..d].iter().map(|w| w * w).sum::<f64>();
    reg + data
        .x
        .iter()
        .zip(&data.y)
        .map(|(x, y)| log_loss(y * (dot(&theta[..d], x) + theta[d])))
        .sum::<f64>()
}

pub(crate) fn gradient(data: &Training, l2: f64, theta: &[f64]) -> Vec<f64> {
    let d = theta.len() - 1;
    let mut g: Vec<f64> = theta[..d].iter().map(|w| l2 * w).chain([0.0]).collect();
    for (x, y) in data.x.iter().zip(&data.y) {
        let t = if *y > 0.0 { 1.0 } else { 0.0 };
        let r = sigmoid(dot(&theta[..d], x) + theta[d]) - t;
        for (gj, xj) in g.iter_mut().zip(x) {
            *gj += r * xj;
        }
        g[d] += r;
    }
    g
}

fn check_theta(ds: &LabeledDataset, theta: &[f64]) -> Result<()> {
    if theta.len() != ds.n_features() + 1 {
        return Err(Error::Argument(format!(
            "theta has {} entries, expected {} weights and a bias",
            theta.len(),
            ds.n_features()
        )));
    }
    Ok(())
}

/// Training objective at `theta = (w, b)`.
pub fn lr_objective(ds: &LabeledDataset, l2: f64, theta: &[f64]) -> Result<f64> {
    check_theta(ds, theta)?;
    Ok(objective(&Training::from(ds)?, l2, theta))
}

/// Analytic gradient of [`lr_objective`].
pub fn lr_gradient(ds: &LabeledDataset, l2: f64, theta: &[f64]) -> Result<Vec<f64>> {
    check_theta(ds, theta)?;
    Ok(gradient(&Training::from(ds)?, l2, theta))
}

/// Largest eigenvalue of `X~^T X~` (X~ = [X, 1]) by power iteration, padded
/// slightly so `1/L` stays a safe step.
fn gram_spectral_bound(data: &Training) -> f64 {
    let d = data.x[0].len() + 1;
    let mut v = vec![1.0 / (d as f64).sqrt(); d];
    let mut lambda = 0.0;
    for _ in 0..500 {
        let mut w = vec![0.0; d];
        for x in data.x {
            let s = dot(&v[..d - 1], x) + v[d - 1];
            for (wj, xj) in w.iter_mut().zip(x.iter().chain([&1.0])) {
                *wj += s * xj;
            }
        }
        let norm = w.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm == 0.0 {
            break;
        }
        let next = norm;
        v = w.iter().map(|a| a / norm).collect();
        if (next - lambda).abs() <= 1e-12 * next {
            lambda = next;
            break;
        }
        lambda = next;
    }
    lambda * 1.01
}

impl LogisticRegression {
    /// Gradient descent with step `1/L`, `L = l2 + lambda_max(X~^T X~) / 4`,
    /// until the gradient norm drops below tolerance.
    pub(crate) fn fit(data: &Training, cfg: &LrConfig) -> Self {
        let d = data.x[0].len();
        let lipschitz = cfg.l2 + 0.25 * gram_spectral_bound(data);
        let step = 1.0 / lipschitz;
        let mut theta = vec![0.0; d + 1];
        let mut g = gradient(data, cfg.l2, &theta);
        let mut norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        let mut it = 0;
        while norm >= cfg.gradient_tolerance && it < cfg.max_iterations {
            for (t, gj) in theta.iter_mut().zip(&g) {
                *t -= step * gj;
            }
            g = gradient(data, cfg.l2, &theta);
            norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
            it += 1;
        }
        if norm >= cfg.gradient_tolerance {
            log::warn!("logistic regression stopped at {it} iterations, gradient norm {norm:.3e}");
        }
        LogisticRegression {
            weights: theta[..d].to_vec(),
            bias: theta[d],
            iterations: it,
            gradient_norm: norm,
        }
    }

    pub fn probability(&self, x: &[f64]) -> f64 {
        sigmoid(dot(&self.weights, x) + self.bias)
    }
}
