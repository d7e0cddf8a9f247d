//! Stratified k-fold cross-validation with per-fold ranking and selection,
//! confusion-matrix metrics, accuracy confidence intervals and reports.

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal, StudentsT};

use crate::classifiers::{fit, ClassifierConfig, ClassifierKind};
use crate::error::{Error, Result};
use crate::features::{Label, LabeledDataset};
use crate::stats::{
    minmax_fit_apply, rank_features, NormalizationParams, TTestKind, DEFAULT_SELECT,
};

pub const DEFAULT_FOLDS: usize = 5;
pub const CONFIDENCE_LEVEL: f64 = 0.95;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub k: usize,
    /// Fold index per dataset row.
    pub assignments: Vec<usize>,
    pub seed: u64,
}

impl FoldPlan {
    pub fn test_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.assignments.len())
            .filter(|&i| self.assignments[i] == fold)
            .collect()
    }

    pub fn train_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.assignments.len())
            .filter(|&i| self.assignments[i] != fold)
            .collect()
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut s = vec![0; self.k];
        for &a in &self.assignments {
            s[a] += 1;
        }
        s
    }
}

/// Shuffles each class with the seed, lays ASD then TD end to end and deals
/// position `p` into fold `p mod k`. `k == n` gives leave-one-out.
pub fn make_folds(ds: &LabeledDataset, k: usize, seed: u64) -> Result<FoldPlan> {
    let n = ds.len();
    if k < 2 || k > n {
        return Err(Error::Argument(format!(
            "cannot make {k} folds from {n} rows"
        )));
    }
    let (asd, td) = ds.class_counts();
    if k != n && (asd < k || td < k) {
        return Err(Error::Argument(format!(
            "{k} folds need at least {k} rows per class, got ASD {asd}, TD {td}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order = Vec::with_capacity(n);
    for class in [Label::Asd, Label::Td] {
        let mut idx: Vec<usize> = (0..n).filter(|&i| ds.labels[i] == class).collect();
        idx.shuffle(&mut rng);
        order.extend(idx);
    }
    let mut assignments = vec![0; n];
    for (p, &i) in order.iter().enumerate() {
        assignments[i] = p % k;
    }
    Ok(FoldPlan {
        k,
        assignments,
        seed,
    })
}

/// Counts with ASD as the positive class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub tn: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl Confusion {
    pub fn new(tp: usize, tn: usize, fp: usize, fn_: usize) -> Self {
        Confusion { tp, tn, fp, fn_ }
    }

    pub fn from_pairs(truth: &[Label], predicted: &[Label]) -> Self {
        let mut c = Confusion::default();
        for (t, p) in truth.iter().zip(predicted) {
            match (t.is_positive(), p.is_positive()) {
                (true, true) => c.tp += 1,
                (false, false) => c.tn += 1,
                (false, true) => c.fp += 1,
                (true, false) => c.fn_ += 1,
            }
        }
        c
    }

    pub fn total(&self) -> usize {
        self.tp + self.tn + self.fp + self.fn_
    }

    /// The same outcomes with TD as the positive class.
    pub fn swapped(&self) -> Self {
        Confusion::new(self.tn, self.tp, self.fn_, self.fp)
    }

    pub fn add(&mut self, o: &Confusion) {
        self.tp += o.tp;
        self.tn += o.tn;
        self.fp += o.fp;
        self.fn_ += o.fn_;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f_measure: f64,
    /// No positive predictions; precision reported as 0.
    pub precision_undefined: bool,
    /// No positive rows; recall reported as 0.
    pub recall_undefined: bool,
}

pub fn compute_metrics(c: &Confusion) -> Result<Metrics> {
    let n = c.total();
    if n == 0 {
        return Err(Error::Argument("empty confusion matrix".into()));
    }
    let ratio = |num: usize, den: usize| {
        if den == 0 {
            0.0
        } else {
            num as f64 / den as f64
        }
    };
    let precision = ratio(c.tp, c.tp + c.fp);
    let recall = ratio(c.tp, c.tp + c.fn_);
    let f_measure = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    Ok(Metrics {
        accuracy: (c.tp + c.tn) as f64 / n as f64,
        precision,
        recall,
        f_measure,
        precision_undefined: c.tp + c.fp == 0,
        recall_undefined: c.tp + c.fn_ == 0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceInterval {
    pub lower: f64,
    pub point: f64,
    pub upper: f64,
}

/// Mean fold accuracy +- `t_{k-1} * s / sqrt(k)`, clipped to [0, 1].
pub fn confidence_interval(fold_accuracies: &[f64], level: f64) -> Result<ConfidenceInterval> {
    let k = fold_accuracies.len();
    if k < 2 {
        return Err(Error::Argument(format!(
            "confidence interval needs >= 2 folds, got {k}"
        )));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::Argument(format!(
            "confidence level {level} outside (0, 1)"
        )));
    }
    let kf = k as f64;
    let mean = fold_accuracies.iter().sum::<f64>() / kf;
    let var = fold_accuracies
        .iter()
        .map(|a| (a - mean).powi(2))
        .sum::<f64>()
        / (kf - 1.0);
    let t = StudentsT::new(0.0, 1.0, kf - 1.0)
        .map_err(|e| Error::Argument(e.to_string()))?
        .inverse_cdf(0.5 + level / 2.0);
    let half = t * var.sqrt() / kf.sqrt();
    Ok(ConfidenceInterval {
        lower: (mean - half).clamp(0.0, 1.0),
        point: mean,
        upper: (mean + half).clamp(0.0, 1.0),
    })
}

/// Normal-approximation interval for a pooled accuracy over `n` trials.
pub fn binomial_interval(accuracy: f64, n: usize, level: f64) -> Result<ConfidenceInterval> {
    if n == 0 {
        return Err(Error::Argument("binomial interval over zero trials".into()));
    }
    let z = Normal::new(0.0, 1.0)
        .map_err(|e| Error::Argument(e.to_string()))?
        .inverse_cdf(0.5 + level / 2.0);
    let half = z * (accuracy * (1.0 - accuracy) / n as f64).sqrt();
    Ok(ConfidenceInterval {
        lower: (accuracy - half).clamp(0.0, 1.0),
        point: accuracy,
        upper: (accuracy + half).clamp(0.0, 1.0),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub folds: usize,
    pub select: usize,
    pub classifiers: Vec<ClassifierKind>,
    /// Refit min-max normalisation on each training split instead of once
    /// on the whole dataset.
    pub strict_folds: bool,
    pub t_test: TTestKind,
    pub confidence_level: f64,
    pub hyper: ClassifierConfig,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            folds: DEFAULT_FOLDS,
            select: DEFAULT_SELECT,
            classifiers: ClassifierKind::ALL.to_vec(),
            strict_folds: false,
            t_test: TTestKind::Welch,
            confidence_level: CONFIDENCE_LEVEL,
            hyper: ClassifierConfig::default(),
        }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<()> {
        if self.folds < 2 {
            return Err(Error::Config(format!("folds {} must be >= 2", self.folds)));
        }
        if self.select == 0 {
            return Err(Error::Config("select must be >= 1".into()));
        }
        if self.classifiers.is_empty() {
            return Err(Error::Config("no classifiers requested".into()));
        }
        if !(self.confidence_level > 0.0 && self.confidence_level < 1.0) {
            return Err(Error::Config(format!(
                "confidence_level {} outside (0, 1)",
                self.confidence_level
            )));
        }
        self.hyper.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowPrediction {
    pub id: String,
    pub truth: Label,
    pub predicted: Label,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldClassifierResult {
    pub kind: ClassifierKind,
    pub confusion: Confusion,
    pub accuracy: f64,
    /// Mean of the ASD-positive and TD-positive precision, recall and F.
    pub class_average: ClassMetrics,
    pub asd: ClassMetrics,
    pub td: ClassMetrics,
    pub predictions: Vec<RowPrediction>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f_measure: f64,
}

impl ClassMetrics {
    fn from(m: &Metrics) -> Self {
        ClassMetrics {
            precision: m.precision,
            recall: m.recall,
            f_measure: m.f_measure,
        }
    }

    fn mean(items: impl Iterator<Item = ClassMetrics>) -> Self {
        let (mut p, mut r, mut f, mut n) = (0.0, 0.0, 0.0, 0.0);
        for m in items {
            p += m.precision;
            r += m.recall;
            f += m.f_measure;
            n += 1.0;
        }
        ClassMetrics {
            precision: p / n,
            recall: r / n,
            f_measure: f / n,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldOutcome {
    pub fold: usize,
    pub train_size: usize,
    pub test_size: usize,
    pub selected: Vec<String>,
    pub results: Vec<FoldClassifierResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierSummary {
    pub kind: ClassifierKind,
    pub name: String,
    pub fold_accuracies: Vec<f64>,
    /// Student-t interval over fold accuracies; `point` is the mean.
    pub accuracy_ci: ConfidenceInterval,
    /// Normal-approximation interval on the pooled accuracy.
    pub binomial_ci: ConfidenceInterval,
    /// Per fold: class-averaged precision, recall and F; then averaged over folds.
    pub macro_avg: ClassMetrics,
    /// Per-class metrics averaged over folds.
    pub asd: ClassMetrics,
    pub td: ClassMetrics,
    pub confusion: Confusion,
    /// Metrics of the pooled confusion matrix, ASD positive.
    pub micro: Metrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub n_rows: usize,
    pub n_asd: usize,
    pub n_td: usize,
    pub seed: u64,
    pub config: EvalConfig,
    pub plan: FoldPlan,
    pub folds: Vec<FoldOutcome>,
    pub summaries: Vec<ClassifierSummary>,
    /// How often each attribute was selected across folds, most frequent first.
    pub selection_counts: Vec<(String, usize)>,
}

/// Per-(fold, classifier) model seed, independent of scheduling.
pub fn derive_seed(seed: u64, fold: usize, kind: ClassifierKind) -> u64 {
    let mut z = seed ^ ((fold as u64) << 8 | kind as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Trains and scores one fold. The test split only enters through
/// `predict`, never through normalisation, ranking or fitting.
pub fn run_fold(
    ds: &LabeledDataset,
    plan: &FoldPlan,
    fold: usize,
    cfg: &EvalConfig,
    seed: u64,
) -> Result<FoldOutcome> {
    let wrap = |e: Error| match e {
        Error::Argument(m) => Error::Argument(format!("fold {fold}: {m}")),
        other => other,
    };
    let train_idx = plan.train_indices(fold);
    let test_idx = plan.test_indices(fold);
    let mut train = ds.subset(&train_idx);
    let mut test = ds.subset(&test_idx);
    if cfg.strict_folds {
        let params = NormalizationParams::fit(&train).map_err(wrap)?;
        train = params.apply(&train)?;
        test = params.apply(&test)?;
    }
    let rank =
        rank_features(&train, cfg.select.min(train.n_features()), cfg.t_test).map_err(wrap)?;
    let train = train.project(&rank.selected)?;
    let test = test.project(&rank.selected)?;
    let results = cfg
        .classifiers
        .iter()
        .map(|&kind| {
            let model =
                fit(kind, &train, &cfg.hyper, derive_seed(seed, fold, kind)).map_err(wrap)?;
            let preds = model.predict_dataset(&test)?;
            let predicted: Vec<Label> = preds.iter().map(|p| p.label).collect();
            let confusion = Confusion::from_pairs(&test.labels, &predicted);
            let m = compute_metrics(&confusion)?;
            let asd = ClassMetrics::from(&m);
            let td = ClassMetrics::from(&compute_metrics(&confusion.swapped())?);
            Ok(FoldClassifierResult {
                kind,
                confusion,
                accuracy: m.accuracy,
                class_average: ClassMetrics::mean([asd, td].into_iter()),
                asd,
                td,
                predictions: test
                    .ids
                    .iter()
                    .zip(&test.labels)
                    .zip(&preds)
                    .map(|((id, t), p)| RowPrediction {
                        id: id.clone(),
                        truth: *t,
                        predicted: p.label,
                        score: p.score,
                    })
                    .collect(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FoldOutcome {
        fold,
        train_size: train_idx.len(),
        test_size: test_idx.len(),
        selected: rank.selected,
        results,
    })
}

pub fn cross_validate(
    ds: &LabeledDataset,
    cfg: &EvalConfig,
    seed: u64,
) -> Result<EvaluationReport> {
    cfg.validate()?;
    ds.require_both_classes()?;
    let plan = make_folds(ds, cfg.folds, seed)?;
    let prepared = if cfg.strict_folds {
        ds.clone()
    } else {
        minmax_fit_apply(ds)?.0
    };
    let folds = (0..plan.k)
        .into_par_iter()
        .map(|f| run_fold(&prepared, &plan, f, cfg, seed))
        .collect::<Result<Vec<_>>>()?;

    let mut summaries = Vec::new();
    for (ci, &kind) in cfg.classifiers.iter().enumerate() {
        let per_fold: Vec<&FoldClassifierResult> = folds.iter().map(|f| &f.results[ci]).collect();
        let fold_accuracies: Vec<f64> = per_fold.iter().map(|r| r.accuracy).collect();
        let mut confusion = Confusion::default();
        per_fold.iter().for_each(|r| confusion.add(&r.confusion));
        let micro = compute_metrics(&confusion)?;
        summaries.push(ClassifierSummary {
            kind,
            name: kind.display_name().to_string(),
            accuracy_ci: confidence_interval(&fold_accuracies, cfg.confidence_level)?,
            binomial_ci: binomial_interval(
                micro.accuracy,
                confusion.total(),
                cfg.confidence_level,
            )?,
            fold_accuracies,
            macro_avg: ClassMetrics::mean(per_fold.iter().map(|r| r.class_average)),
            asd: ClassMetrics::mean(per_fold.iter().map(|r| r.asd)),
            td: ClassMetrics::mean(per_fold.iter().map(|r| r.td)),
            confusion,
            micro,
        });
    }

    let mut counts: Vec<(String, usize)> = Vec::new();
    for name in &ds.names {
        let c = folds.iter().filter(|f| f.selected.contains(name)).count();
        if c > 0 {
            counts.push((name.clone(), c));
        }
    }
    counts.sort_by(|a, b| b.1.cmp(&a.1));
    let (n_asd, n_td) = ds.class_counts();
    Ok(EvaluationReport {
        n_rows: ds.len(),
        n_asd,
        n_td,
        seed,
        config: cfg.clone(),
        plan,
        folds,
        summaries,
        selection_counts: counts,
    })
}

/// Confidence-interval table, ASD precision/recall table, class-averaged
/// summary and per-fold selections.
pub fn report_text(r: &EvaluationReport) -> String {
    let mut s = String::new();
    let cfg = &r.config;
    let _ = writeln!(
        s,
        "{}-fold cross-validation, {} rows (ASD {}, TD {}), top {} attributes per fold, seed {}",
        cfg.folds, r.n_rows, r.n_asd, r.n_td, cfg.select, r.seed
    );
    if cfg.strict_folds {
        let _ = writeln!(s, "normalisation: refit on each training split");
    } else {
        let _ = writeln!(
            s,
            "normalisation: fitted once on all rows before splitting (test rows influence the scaling; use --strict-folds to avoid)"
        );
    }
    let _ = writeln!(s, "t-test: {:?}", cfg.t_test);
    let _ = writeln!(
        s,
        "hyperparameters: NB var_floor=1e-9; LR l2={} max_iter={} tol={:e}; SVM kernel={:?} C={} tol={:e}; RF trees={} max_features={} min_leaf={}",
        cfg.hyper.lr.l2,
        cfg.hyper.lr.max_iterations,
        cfg.hyper.lr.gradient_tolerance,
        cfg.hyper.svm.kernel,
        cfg.hyper.svm.c,
        cfg.hyper.svm.tolerance,
        cfg.hyper.rf.n_trees,
        cfg.hyper.rf.max_features.map_or("sqrt(d)".to_string(), |m| m.to_string()),
        cfg.hyper.rf.min_samples_leaf
    );

    let _ = writeln!(
        s,
        "\nConfidence intervals of the classification algorithms ({:.0}%)",
        cfg.confidence_level * 100.0
    );
    let _ = writeln!(
        s,
        "{:<10} {:>12} {:>30} {:>12}",
        "Classifier", "Lower limit", "Estimated average accuracy", "Upper limit"
    );
    for m in &r.summaries {
        let _ = writeln!(
            s,
            "{:<10} {:>12.4} {:>30.4} {:>12.4}",
            m.kind.to_string().to_uppercase(),
            m.accuracy_ci.lower,
            m.accuracy_ci.point,
            m.accuracy_ci.upper
        );
    }

    let _ = writeln!(
        s,
        "\nASD subjects: F-measure, Precision and Recall (pooled over folds)"
    );
    let _ = writeln!(
        s,
        "{:<10} {:>10} {:>10} {:>10}",
        "Classifier", "F-measure", "Precision", "Recall"
    );
    for m in &r.summaries {
        let flag = if m.micro.precision_undefined || m.micro.recall_undefined {
            " *"
        } else {
            ""
        };
        let _ = writeln!(
            s,
            "{:<10} {:>10.3} {:>10.3} {:>10.3}{flag}",
            m.kind.to_string().to_uppercase(),
            m.micro.f_measure,
            m.micro.precision,
            m.micro.recall
        );
    }
    if r.summaries
        .iter()
        .any(|m| m.micro.precision_undefined || m.micro.recall_undefined)
    {
        let _ = writeln!(s, "* zero denominator; value reported as 0");
    }

    let _ = writeln!(s, "\nAverage over folds of the ASD/TD class mean");
    let _ = writeln!(
        s,
        "{:<10} {:>10} {:>10} {:>10} {:>10} {:>8} {:>5} {:>5} {:>5} {:>5}",
        "Classifier",
        "Accuracy",
        "F-measure",
        "Precision",
        "Recall",
        "Binom-lo",
        "TP",
        "TN",
        "FP",
        "FN"
    );
    for m in &r.summaries {
        let _ = writeln!(
            s,
            "{:<10} {:>10.4} {:>10.4} {:>10.4} {:>10.4} {:>8.4} {:>5} {:>5} {:>5} {:>5}",
            m.kind.to_string().to_uppercase(),
            m.accuracy_ci.point,
            m.macro_avg.f_measure,
            m.macro_avg.precision,
            m.macro_avg.recall,
            m.binomial_ci.lower,
            m.confusion.tp,
            m.confusion.tn,
            m.confusion.fp,
            m.confusion.fn_
        );
    }

    let _ = writeln!(s, "\nSelected attributes per fold");
    for f in &r.folds {
        let _ = writeln!(
            s,
            "fold {} (train {}, test {}): {}",
            f.fold + 1,
            f.train_size,
            f.test_size,
            f.selected.join(", ")
        );
    }
    s
}

pub fn report_json(r: &EvaluationReport) -> Result<String> {
    serde_json::to_string_pretty(r).map_err(|e| Error::Format(format!("report encoding: {e}")))
}

/// One row per classifier, plot-ready.
pub fn report_plot_csv(r: &EvaluationReport) -> String {
    let mut s = String::from(
        "classifier,accuracy,ci_lower,ci_upper,f_measure,precision,recall,asd_f_measure,asd_precision,asd_recall,td_f_measure,td_precision,td_recall\n",
    );
    for m in &r.summaries {
        let _ = writeln!(
            s,
            "{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6}",
            m.kind,
            m.accuracy_ci.point,
            m.accuracy_ci.lower,
            m.accuracy_ci.upper,
            m.macro_avg.f_measure,
            m.macro_avg.precision,
            m.macro_avg.recall,
            m.asd.f_measure,
            m.asd.precision,
            m.asd.recall,
            m.td.f_measure,
            m.td.precision,
            m.td.recall
        );
    }
    s
}

/// Per-row out-of-fold predictions, in dataset order within each classifier.
pub fn predictions_csv(r: &EvaluationReport) -> String {
    let mut s = String::from("classifier,fold,id,truth,predicted,score\n");
    for (ci, kind) in r.config.classifiers.iter().enumerate() {
        for f in &r.folds {
            for p in &f.results[ci].predictions {
                let _ = writeln!(
                    s,
                    "{kind},{},{},{},{},{:.6}",
                    f.fold + 1,
                    p.id,
                    p.truth,
                    p.predicted,
                    p.score
                );
            }
        }
    }
    s
}
