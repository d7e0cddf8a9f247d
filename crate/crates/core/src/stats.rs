//! Min-max scaling, two-sample t-tests, |t| feature ranking and the
//! per-attribute class comparison report.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::features::{Label, LabeledDataset};

pub const SIGNIFICANCE_LEVEL: f64 = 0.05;
pub const DEFAULT_SELECT: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizationParams {
    pub names: Vec<String>,
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl NormalizationParams {
    pub fn fit(ds: &LabeledDataset) -> Result<Self> {
        if ds.len() < 2 {
            return Err(Error::Argument(
                "normalisation needs at least 2 rows".into(),
            ));
        }
        let (min, max) = (0..ds.n_features())
            .map(|j| {
                let col = ds.column(j);
                let lo = col.iter().cloned().fold(f64::INFINITY, f64::min);
                let hi = col.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                (lo, hi)
            })
            .unzip();
        Ok(NormalizationParams {
            names: ds.names.clone(),
            min,
            max,
        })
    }

    /// `2 (x - min) / (max - min) - 1`; constant attributes map to 0. Values
    /// outside the fitted range extrapolate beyond [-1, 1].
    pub fn apply(&self, ds: &LabeledDataset) -> Result<LabeledDataset> {
        if ds.names != self.names {
            return Err(Error::Schema(
                "attributes differ from the fitted normalisation".into(),
            ));
        }
        let rows = ds
            .rows
            .iter()
            .map(|r| {
                r.iter()
                    .enumerate()
                    .map(|(j, x)| {
                        let span = self.max[j] - self.min[j];
                        if span > 0.0 {
                            2.0 * (x - self.min[j]) / span - 1.0
                        } else {
                            0.0
                        }
                    })
                    .collect()
            })
            .collect();
        LabeledDataset::new(ds.names.clone(), rows, ds.labels.clone(), ds.ids.clone())
    }
}

pub fn minmax_fit_apply(ds: &LabeledDataset) -> Result<(LabeledDataset, NormalizationParams)> {
    let params = NormalizationParams::fit(ds)?;
    Ok((params.apply(ds)?, params))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TTestKind {
    #[default]
    Welch,
    Pooled,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TTest {
    pub t: f64,
    pub p: f64,
    pub df: f64,
}

fn mean_var(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let m = x.iter().sum::<f64>() / n;
    let v = x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, v)
}

fn check_samples(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::Argument(format!(
            "t-test needs two values per sample, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(Error::Argument("t-test input is not finite".into()));
    }
    Ok(())
}

fn two_sided(diff: f64, se: f64, df: f64) -> Result<TTest> {
    if se == 0.0 {
        return Ok(if diff == 0.0 {
            TTest { t: 0.0, p: 1.0, df }
        } else {
            TTest {
                t: diff.signum() * f64::INFINITY,
                p: 0.0,
                df,
            }
        });
    }
    let t = diff / se;
    let dist = StudentsT::new(0.0, 1.0, df)
        .map_err(|e| Error::Argument(format!("t distribution: {e}")))?;
    let p = (2.0 * dist.cdf(-t.abs())).min(1.0);
    Ok(TTest { t, p, df })
}

/// Unequal-variance t statistic with Welch-Satterthwaite degrees of freedom.
pub fn welch_t_test(a: &[f64], b: &[f64]) -> Result<TTest> {
    check_samples(a, b)?;
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (ma, va) = mean_var(a);
    let (mb, vb) = mean_var(b);
    let (qa, qb) = (va / na, vb / nb);
    let se2 = qa + qb;
    let df = if se2 > 0.0 {
        se2 * se2 / (qa * qa / (na - 1.0) + qb * qb / (nb - 1.0))
    } else {
        na + nb - 2.0
    };
    two_sided(ma - mb, se2.sqrt(), df)
}

/// Student's t-test with pooled variance.
pub fn pooled_t_test(a: &[f64], b: &[f64]) -> Result<TTest> {
    check_samples(a, b)?;
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (ma, va) = mean_var(a);
    let (mb, vb) = mean_var(b);
    let df = na + nb - 2.0;
    let sp2 = ((na - 1.0) * va + (nb - 1.0) * vb) / df;
    two_sided(ma - mb, (sp2 * (1.0 / na + 1.0 / nb)).sqrt(), df)
}

pub fn t_test(kind: TTestKind, a: &[f64], b: &[f64]) -> Result<TTest> {
    match kind {
        TTestKind::Welch => welch_t_test(a, b),
        TTestKind::Pooled => pooled_t_test(a, b),
    }
}

fn split_classes(ds: &LabeledDataset, j: usize) -> (Vec<f64>, Vec<f64>) {
    let mut asd = Vec::new();
    let mut td = Vec::new();
    for (row, label) in ds.rows.iter().zip(&ds.labels) {
        match label {
            Label::Asd => asd.push(row[j]),
            Label::Td => td.push(row[j]),
        }
    }
    (asd, td)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureScore {
    pub name: String,
    pub t: f64,
    pub p: f64,
    pub rank: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankResult {
    /// In dataset column order.
    pub scores: Vec<FeatureScore>,
    /// Column indices, best first.
    pub order: Vec<usize>,
    pub selected: Vec<String>,
}

/// Scores every attribute by |t| (ASD vs TD), sorts descending with ties
/// resolved by column order, and selects the top `k`.
pub fn rank_features(train: &LabeledDataset, k: usize, kind: TTestKind) -> Result<RankResult> {
    train.require_both_classes()?;
    if k == 0 || k > train.n_features() {
        return Err(Error::Argument(format!(
            "cannot select {k} of {} attributes",
            train.n_features()
        )));
    }
    let tests = (0..train.n_features())
        .map(|j| {
            let (a, b) = split_classes(train, j);
            t_test(kind, &a, &b)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut order: Vec<usize> = (0..tests.len()).collect();
    order.sort_by(|&x, &y| {
        tests[y]
            .t
            .abs()
            .total_cmp(&tests[x].t.abs())
            .then(x.cmp(&y))
    });
    let mut scores: Vec<FeatureScore> = tests
        .iter()
        .zip(&train.names)
        .map(|(t, name)| FeatureScore {
            name: name.clone(),
            t: t.t,
            p: t.p,
            rank: 0,
        })
        .collect();
    for (r, &j) in order.iter().enumerate() {
        scores[j].rank = r + 1;
    }
    let selected = order[..k].iter().map(|&j| train.names[j].clone()).collect();
    Ok(RankResult {
        scores,
        order,
        selected,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassComparison {
    pub name: String,
    pub mean_asd: f64,
    pub mean_td: f64,
    pub t: f64,
    pub p: f64,
    /// H1 accepted iff `p < 0.05`.
    pub accepted: bool,
}

pub fn class_statistics(ds: &LabeledDataset, kind: TTestKind) -> Result<Vec<ClassComparison>> {
    ds.require_both_classes()?;
    (0..ds.n_features())
        .map(|j| {
            let (a, b) = split_classes(ds, j);
            let t = t_test(kind, &a, &b)?;
            Ok(ClassComparison {
                name: ds.names[j].clone(),
                mean_asd: a.iter().sum::<f64>() / a.len() as f64,
                mean_td: b.iter().sum::<f64>() / b.len() as f64,
                t: t.t,
                p: t.p,
                accepted: t.p < SIGNIFICANCE_LEVEL,
            })
        })
        .collect()
}

fn decision(accepted: bool) -> &'static str {
    if accepted {
        "Accepted"
    } else {
        "Rejected"
    }
}

pub fn class_statistics_text(rows: &[ClassComparison]) -> String {
    let mut out = format!(
        "{:<12} {:>14} {:>14} {:>12} {:>9}\n",
        "Feature", "ASD mean", "TD mean", "p-value", "H1"
    );
    for r in rows {
        let _ = writeln!(
            out,
            "{:<12} {:>14.6} {:>14.6} {:>12.4e} {:>9}",
            r.name,
            r.mean_asd,
            r.mean_td,
            r.p,
            decision(r.accepted)
        );
    }
    let _ = writeln!(out, "alpha = {SIGNIFICANCE_LEVEL}");
    out
}

pub fn class_statistics_csv(rows: &[ClassComparison]) -> String {
    let mut out = String::from("feature,mean_asd,mean_td,t,p,decision\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{:.11e},{:.11e},{:.11e},{:.11e},{}",
            r.name,
            r.mean_asd,
            r.mean_td,
            r.t,
            r.p,
            decision(r.accepted)
        );
    }
    out
}

pub fn ranking_text(rank: &RankResult) -> String {
    let mut out = format!(
        "{:<6} {:<12} {:>12} {:>12}\n",
        "Rank", "Feature", "|t|", "p-value"
    );
    for &j in &rank.order {
        let s = &rank.scores[j];
        let _ = writeln!(
            out,
            "{:<6} {:<12} {:>12.4} {:>12.4e}",
            s.rank,
            s.name,
            s.t.abs(),
            s.p
        );
    }
    let _ = writeln!(out, "selected: {}", rank.selected.join(", "));
    out
}

/// Best first: rank, feature, t, p, selected flag.
pub fn ranking_csv(rank: &RankResult) -> String {
    let mut out = String::from("rank,feature,t,p,selected\n");
    for &j in &rank.order {
        let s = &rank.scores[j];
        let sel = rank.selected.contains(&s.name);
        let _ = writeln!(out, "{},{},{:.11e},{:.11e},{sel}", s.rank, s.name, s.t, s.p);
    }
    out
}
