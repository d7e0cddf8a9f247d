use serde::{Deserialize, Serialize};

use super::{dot, Training};
use crate::error::{Error, Result};

const TAU: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelChoice {
    #[default]
    Linear,
    Rbf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SvmConfig {
    pub c: f64,
    pub kernel: KernelChoice,
    /// RBF width; `1/d` when unset.
    pub gamma: Option<f64>,
    /// Stop when the maximal violating pair gap falls below this.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for SvmConfig {
    fn default() -> Self {
        SvmConfig {
            c: 1.0,
            kernel: KernelChoice::Linear,
            gamma: None,
            tolerance: 1e-3,
            max_iterations: 10_000_000,
        }
    }
}

impl SvmConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::Config(format!("svm.c {} must be > 0", self.c)));
        }
        if let Some(g) = self.gamma {
            if !(g > 0.0 && g.is_finite()) {
                return Err(Error::Config(format!("svm.gamma {g} must be > 0")));
            }
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::Config("svm.tolerance must be > 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Kernel {
    Linear,
    Rbf { gamma: f64 },
}

impl Kernel {
    pub fn eval(&self, a: &[f64], b: &[f64]) -> f64 {
        match *self {
            Kernel::Linear => dot(a, b),
            Kernel::Rbf { gamma } => {
                let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
                (-gamma * d2).exp()
            }
        }
    }
}

/// Decision function `f(x) = sum_i coef_i K(sv_i, x) - rho`, `coef_i = alpha_i y_i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Svm {
    pub kernel: Kernel,
    pub c: f64,
    pub support_vectors: Vec<Vec<f64>>,
    pub dual_coef: Vec<f64>,
    pub rho: f64,
    pub iterations: usize,
    /// Final maximal-violating-pair gap.
    pub kkt_gap: f64,
}

impl Svm {
    /// SMO with second-order working-set selection on
    /// `min 1/2 a'Qa - e'a` s.t. `0 <= a <= C`, `y'a = 0`.
    pub(crate) fn fit(data: &Training, cfg: &SvmConfig) -> Result<Self> {
        let n = data.x.len();
        let d = data.x[0].len();
        let kernel = match cfg.kernel {
            KernelChoice::Linear => Kernel::Linear,
            KernelChoice::Rbf => Kernel::Rbf {
                gamma: cfg.gamma.unwrap_or(1.0 / d as f64),
            },
        };
        let y = &data.y;
        let c = cfg.c;
        let mut k = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let v = kernel.eval(&data.x[i], &data.x[j]);
                k[i * n + j] = v;
                k[j * n + i] = v;
            }
        }
        let kk = |i: usize, j: usize| k[i * n + j];

        let mut alpha = vec![0.0; n];
        let mut grad = vec![-1.0; n];
        let mut iterations = 0;
        let gap = loop {
            let mut gmax = f64::NEG_INFINITY;
            let mut i_sel = usize::MAX;
            for t in 0..n {
                let up = if y[t] > 0.0 {
                    alpha[t] < c
                } else {
                    alpha[t] > 0.0
                };
                if up && -y[t] * grad[t] >= gmax {
                    gmax = -y[t] * grad[t];
                    i_sel = t;
                }
            }
            let mut gmax2 = f64::NEG_INFINITY;
            let mut j_sel = usize::MAX;
            let mut best = f64::INFINITY;
            for t in 0..n {
                let low = if y[t] > 0.0 {
                    alpha[t] > 0.0
                } else {
                    alpha[t] < c
                };
                if !low {
                    continue;
                }
                let v = y[t] * grad[t];
                gmax2 = gmax2.max(v);
                let b = gmax + v;
                if i_sel != usize::MAX && b > 0.0 {
                    let mut a = kk(i_sel, i_sel) + kk(t, t) - 2.0 * kk(i_sel, t);
                    if a <= 0.0 {
                        a = TAU;
                    }
                    let obj = -b * b / a;
                    if obj <= best {
                        best = obj;
                        j_sel = t;
                    }
                }
            }
            let gap = gmax + gmax2;
            if gap < cfg.tolerance || j_sel == usize::MAX {
                break gap;
            }
            if iterations >= cfg.max_iterations {
                log::warn!("SMO stopped at {iterations} iterations with gap {gap:.3e}");
                break gap;
            }
            iterations += 1;
            let (i, j) = (i_sel, j_sel);
            let (old_i, old_j) = (alpha[i], alpha[j]);
            let mut quad = kk(i, i) + kk(j, j) - 2.0 * kk(i, j);
            if quad <= 0.0 {
                quad = TAU;
            }
            if y[i] != y[j] {
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
            let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
            for t in 0..n {
                grad[t] += y[t] * (y[i] * kk(t, i) * di + y[j] * kk(t, j) * dj);
            }
        };

        let rho = {
            let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
            let (mut sum, mut n_free) = (0.0, 0usize);
            for t in 0..n {
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
                    sum += yg;
                    n_free += 1;
                }
            }
            if n_free > 0 {
                sum / n_free as f64
            } else {
                (ub + lb) / 2.0
            }
        };

        let (support_vectors, dual_coef) = (0..n)
            .filter(|&t| alpha[t] > 0.0)
            .map(|t| (data.x[t].clone(), alpha[t] * y[t]))
            .unzip();
        Ok(Svm {
            kernel,
            c,
            support_vectors,
            dual_coef,
            rho,
            iterations,
            kkt_gap: gap,
        })
    }

    pub fn decision(&self, x: &[f64]) -> f64 {
        self.support_vectors
            .iter()
            .zip(&self.dual_coef)
            .map(|(sv, a)| a * self.kernel.eval(sv, x))
            .sum::<f64>()
            - self.rho
    }

    /// Largest violation of `0 <= alpha_i <= C` and `|sum_i alpha_i y_i|`.
    pub fn dual_residuals(&self) -> (f64, f64) {
        let bound = self
            .dual_coef
            .iter()
            .map(|a| (a.abs() - self.c).max(0.0))
            .fold(0.0, f64::max);
        let equality = self.dual_coef.iter().sum::<f64>().abs();
        (bound, equality)
    }
}

#[cfg(test)]
mod tests {
    use super::super::testdata::*;
    use super::super::{fit, ClassifierConfig, ClassifierKind, ModelParams};
    use super::*;

    fn svm_of(m: &super::super::TrainedModel) -> &Svm {
        match &m.params {
            ModelParams::Svm(s) => s,
            _ => panic!(),
        }
    }

    #[test]
    fn free_support_vectors_sit_on_the_margin() {
        let ds = separable_toy();
        let m = fit(ClassifierKind::Svm, &ds, &ClassifierConfig::default(), 0).unwrap();
        let svm = svm_of(&m);
        assert!(!svm.support_vectors.is_empty());
        for (sv, a) in svm.support_vectors.iter().zip(&svm.dual_coef) {
            let p = m.predict(&ds.names, sv).unwrap();
            let f = svm.decision(sv);
            assert_eq!(p.label.is_positive(), *a > 0.0);
            if a.abs() < svm.c {
                assert!(f.abs() >= 1.0 - 1e-3, "margin {f}");
            }
        }
    }

    #[test]
    fn dual_constraints_hold() {
        for (kernel, seed) in [
            (KernelChoice::Linear, 1),
            (KernelChoice::Rbf, 2),
            (KernelChoice::Linear, 3),
        ] {
            let ds = two_gaussians(60, 4, 1.5, seed);
            let mut cfg = ClassifierConfig::default();
            cfg.svm.kernel = kernel;
            let m = fit(ClassifierKind::Svm, &ds, &cfg, 0).unwrap();
            let svm = svm_of(&m);
            let (bound, eq) = svm.dual_residuals();
            assert!(bound < 1e-6 && eq < 1e-6, "{bound} {eq}");
            assert!(svm.kkt_gap < 1e-3);
            assert!(
                svm.dual_coef.iter().any(|a| a.abs() >= svm.c),
                "overlapping classes bind C"
            );
        }
    }

    #[test]
    fn linear_decision_matches_primal_weights() {
        let ds = separable_toy();
        let m = fit(ClassifierKind::Svm, &ds, &ClassifierConfig::default(), 0).unwrap();
        let svm = svm_of(&m);
        let mut w = [0.0; 2];
        for (sv, a) in svm.support_vectors.iter().zip(&svm.dual_coef) {
            w[0] += a * sv[0];
            w[1] += a * sv[1];
        }
        for x in &ds.rows {
            assert!((svm.decision(x) - (dot(&w, x) - svm.rho)).abs() < 1e-12);
        }
    }

    #[test]
    fn rbf_defaults_gamma_to_inverse_dimension() {
        let ds = two_gaussians(20, 5, 3.0, 4);
        let mut cfg = ClassifierConfig::default();
        cfg.svm.kernel = KernelChoice::Rbf;
        let m = fit(ClassifierKind::Svm, &ds, &cfg, 0).unwrap();
        assert_eq!(svm_of(&m).kernel, Kernel::Rbf { gamma: 0.2 });
    }
}
