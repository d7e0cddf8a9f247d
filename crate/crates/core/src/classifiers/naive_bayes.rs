use serde::{Deserialize, Serialize};

use super::Training;

pub const VARIANCE_FLOOR: f64 = 1e-9;

/// Per-class, per-attribute Gaussian likelihoods. Index 0 is ASD, 1 is TD.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NaiveBayes {
    pub priors: [f64; 2],
    pub means: [Vec<f64>; 2],
    /// Maximum-likelihood variances, floored at [`VARIANCE_FLOOR`].
    pub variances: [Vec<f64>; 2],
}

impl NaiveBayes {
    pub(crate) fn fit(data: &Training) -> Self {
        let d = data.x[0].len();
        let mut counts = [0usize; 2];
        let mut means = [vec![0.0; d], vec![0.0; d]];
        for (row, y) in data.x.iter().zip(&data.y) {
            let c = usize::from(*y < 0.0);
            counts[c] += 1;
            for (m, v) in means[c].iter_mut().zip(row) {
                *m += v;
            }
        }
        for c in 0..2 {
            means[c].iter_mut().for_each(|m| *m /= counts[c] as f64);
        }
        let mut variances = [vec![0.0; d], vec![0.0; d]];
        for (row, y) in data.x.iter().zip(&data.y) {
            let c = usize::from(*y < 0.0);
            for j in 0..d {
                variances[c][j] += (row[j] - means[c][j]).powi(2);
            }
        }
        for c in 0..2 {
            variances[c]
                .iter_mut()
                .for_each(|v| *v = (*v / counts[c] as f64).max(VARIANCE_FLOOR));
        }
        let n = data.x.len() as f64;
        NaiveBayes {
            priors: [counts[0] as f64 / n, counts[1] as f64 / n],
            means,
            variances,
        }
    }

    /// `log p(c) + sum_j log N(x_j; mu_cj, var_cj)`.
    pub fn log_joint(&self, x: &[f64], class: usize) -> f64 {
        let mut lp = self.priors[class].ln();
        for ((v, m), var) in x.iter().zip(&self.means[class]).zip(&self.variances[class]) {
            lp += -0.5 * (2.0 * std::f64::consts::PI * var).ln() - (v - m).powi(2) / (2.0 * var);
        }
        lp
    }

    pub fn posterior_positive(&self, x: &[f64]) -> f64 {
        let a = self.log_joint(x, 0);
        let b = self.log_joint(x, 1);
        1.0 / (1.0 + (b - a).exp())
    }
}
