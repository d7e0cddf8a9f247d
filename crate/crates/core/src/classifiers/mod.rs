//! Binary classifiers over selected, normalised attributes: Gaussian naive
//! Bayes, L2 logistic regression, an SMO-trained SVM and a random forest.
//!
//! ASD is the positive class throughout. Scores at exactly the decision
//! threshold resolve to ASD, the lexicographically first label.

mod logistic;
mod naive_bayes;
mod random_forest;
mod svm;

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{Label, LabeledDataset};

pub use logistic::{lr_gradient, lr_objective, LogisticRegression, LrConfig};
pub use naive_bayes::NaiveBayes;
pub use random_forest::{Node, RandomForest, RfConfig, Tree};
pub use svm::{Kernel, KernelChoice, Svm, SvmConfig};

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassifierKind {
    Nb,
    Lr,
    Svm,
    Rf,
}

impl ClassifierKind {
    pub const ALL: [ClassifierKind; 4] = [
        ClassifierKind::Nb,
        ClassifierKind::Lr,
        ClassifierKind::Svm,
        ClassifierKind::Rf,
    ];

    pub fn display_name(self) -> &'static str {
        match self {
            ClassifierKind::Nb => "Naive Bayes",
            ClassifierKind::Lr => "Logistic Regression",
            ClassifierKind::Svm => "SVM",
            ClassifierKind::Rf => "Random Forest",
        }
    }

    /// Comma-separated short names, e.g. `nb,lr,svm,rf`.
    pub fn parse_list(s: &str) -> Result<Vec<ClassifierKind>> {
        let kinds = s
            .split(',')
            .map(str::trim)
            .filter(|p| !p.is_empty())
            .map(str::parse)
            .collect::<Result<Vec<_>>>()?;
        if kinds.is_empty() {
            return Err(Error::Argument("no classifier given".into()));
        }
        Ok(kinds)
    }
}

impl fmt::Display for ClassifierKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ClassifierKind::Nb => "nb",
            ClassifierKind::Lr => "lr",
            ClassifierKind::Svm => "svm",
            ClassifierKind::Rf => "rf",
        })
    }
}

impl FromStr for ClassifierKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "nb" => Ok(ClassifierKind::Nb),
            "lr" => Ok(ClassifierKind::Lr),
            "svm" => Ok(ClassifierKind::Svm),
            "rf" => Ok(ClassifierKind::Rf),
            other => Err(Error::Argument(format!(
                "unknown classifier {other:?} (expected nb, lr, svm or rf)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifierConfig {
    pub lr: LrConfig,
    pub svm: SvmConfig,
    pub rf: RfConfig,
}

impl ClassifierConfig {
    pub fn validate(&self) -> Result<()> {
        self.lr.validate()?;
        self.svm.validate()?;
        self.rf.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ModelParams {
    Nb(NaiveBayes),
    Lr(LogisticRegression),
    Svm(Svm),
    Rf(RandomForest),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub format_version: u32,
    pub kind: ClassifierKind,
    pub feature_names: Vec<String>,
    pub seed: u64,
    pub params: ModelParams,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub label: Label,
    /// Posterior of ASD (NB, LR), signed margin (SVM) or ASD vote share (RF).
    pub score: f64,
}

/// Design matrix with `+1` for ASD and `-1` for TD.
pub(crate) struct Training<'a> {
    pub x: &'a [Vec<f64>],
    pub y: Vec<f64>,
}

impl<'a> Training<'a> {
    fn from(ds: &'a LabeledDataset) -> Result<Self> {
        let (asd, td) = ds.class_counts();
        if asd < 2 || td < 2 {
            return Err(Error::Argument(format!(
                "training needs two rows per class, got ASD {asd}, TD {td}"
            )));
        }
        if ds.n_features() == 0 {
            return Err(Error::Argument("no attributes to train on".into()));
        }
        if ds.rows.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Argument("non-finite attribute value".into()));
        }
        Ok(Training {
            x: &ds.rows,
            y: ds
                .labels
                .iter()
                .map(|l| if l.is_positive() { 1.0 } else { -1.0 })
                .collect(),
        })
    }
}

pub fn fit(
    kind: ClassifierKind,
    train: &LabeledDataset,
    cfg: &ClassifierConfig,
    seed: u64,
) -> Result<TrainedModel> {
    cfg.validate()?;
    let data = Training::from(train)?;
    let params = match kind {
        ClassifierKind::Nb => ModelParams::Nb(NaiveBayes::fit(&data)),
        ClassifierKind::Lr => ModelParams::Lr(LogisticRegression::fit(&data, &cfg.lr)),
        ClassifierKind::Svm => ModelParams::Svm(Svm::fit(&data, &cfg.svm)?),
        ClassifierKind::Rf => ModelParams::Rf(RandomForest::fit(&data, &cfg.rf, seed)),
    };
    Ok(TrainedModel {
        format_version: MODEL_FORMAT_VERSION,
        kind,
        feature_names: train.names.clone(),
        seed,
        params,
    })
}

fn label_at_least(score: f64, threshold: f64) -> Label {
    if score >= threshold {
        Label::Asd
    } else {
        Label::Td
    }
}

impl TrainedModel {
    /// Scores one row whose attributes are `names` (must equal the fitted set).
    pub fn predict(&self, names: &[String], x: &[f64]) -> Result<Prediction> {
        if names != self.feature_names.as_slice() {
            return Err(Error::Schema(format!(
                "model expects attributes [{}], got [{}]",
                self.feature_names.join(", "),
                names.join(", ")
            )));
        }
        if x.len() != names.len() {
            return Err(Error::Schema(format!(
                "{} values for {} attributes",
                x.len(),
                names.len()
            )));
        }
        Ok(self.predict_row(x))
    }

    pub(crate) fn predict_row(&self, x: &[f64]) -> Prediction {
        let (score, threshold) = match &self.params {
            ModelParams::Nb(m) => (m.posterior_positive(x), 0.5),
            ModelParams::Lr(m) => (m.probability(x), 0.5),
            ModelParams::Svm(m) => (m.decision(x), 0.0),
            ModelParams::Rf(m) => (m.vote_fraction(x), 0.5),
        };
        Prediction {
            label: label_at_least(score, threshold),
            score,
        }
    }

    /// Projects `ds` onto the model's attributes, then scores every row.
    pub fn predict_dataset(&self, ds: &LabeledDataset) -> Result<Vec<Prediction>> {
        let p = ds.project(&self.feature_names)?;
        Ok(p.rows.iter().map(|r| self.predict_row(r)).collect())
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self)
            .map_err(|e| Error::Format(format!("model encoding: {e}")))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let model: TrainedModel = serde_json::from_str(text)
            .map_err(|e| Error::Format(format!("model decoding: {e}")))?;
        if model.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::Format(format!(
                "model format version {} is not supported (expected {MODEL_FORMAT_VERSION})",
                model.format_version
            )));
        }
        Ok(model)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()? + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::from_json(&std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
pub(crate) mod testdata {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    pub fn dataset(rows: Vec<Vec<f64>>, labels: Vec<Label>) -> LabeledDataset {
        let d = rows[0].len();
        let n = rows.len();
        LabeledDataset::new(
            (0..d).map(|j| format!("x{j}")).collect(),
            rows,
            labels,
            (0..n).map(|i| format!("r{i}")).collect(),
        )
        .unwrap()
    }

    /// Two isotropic Gaussians in `d` dimensions whose means are `sep`
    /// standard deviations apart along the diagonal.
    pub fn two_gaussians(n_per_class: usize, d: usize, sep: f64, seed: u64) -> LabeledDataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let norm = Normal::new(0.0, 1.0).unwrap();
        let shift = sep / (d as f64).sqrt() / 2.0;
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..2 * n_per_class {
            let (label, s) = if i % 2 == 0 {
                (Label::Asd, shift)
            } else {
                (Label::Td, -shift)
            };
            rows.push((0..d).map(|_| norm.sample(&mut rng) + s).collect());
            labels.push(label);
        }
        dataset(rows, labels)
    }

    pub fn separable_toy() -> LabeledDataset {
        dataset(
            vec![
                vec![2.0, 2.0],
                vec![3.0, 1.0],
                vec![2.5, 3.0],
                vec![4.0, 2.0],
                vec![-1.0, -1.0],
                vec![-2.0, 0.0],
                vec![0.0, -2.0],
                vec![-1.5, -2.5],
            ],
            vec![
                Label::Asd,
                Label::Asd,
                Label::Asd,
                Label::Asd,
                Label::Td,
                Label::Td,
                Label::Td,
                Label::Td,
            ],
        )
    }

    pub fn training_accuracy(model: &TrainedModel, ds: &LabeledDataset) -> f64 {
        let preds = model.predict_dataset(ds).unwrap();
        preds
            .iter()
            .zip(&ds.labels)
            .filter(|(p, l)| p.label == **l)
            .count() as f64
            / ds.len() as f64
    }
}

#[cfg(test)]
mod tests {
    use super::testdata::*;
    use super::*;

    #[test]
    fn kinds_parse() {
        assert_eq!(
            ClassifierKind::parse_list("nb, LR,svm,rf").unwrap(),
            ClassifierKind::ALL.to_vec()
        );
        assert!(ClassifierKind::parse_list("nb,knn").is_err());
        assert!(ClassifierKind::parse_list("").is_err());
        assert_eq!(ClassifierKind::Svm.to_string(), "svm");
    }

    #[test]
    fn separable_toy_is_learned_by_linear_models() {
        let ds = separable_toy();
        let cfg = ClassifierConfig::default();
        for kind in [ClassifierKind::Lr, ClassifierKind::Svm] {
            let m = fit(kind, &ds, &cfg, 0).unwrap();
            assert_eq!(training_accuracy(&m, &ds), 1.0, "{kind}");
        }
    }

    #[test]
    fn every_classifier_handles_four_sigma_gaussians() {
        let train = two_gaussians(100, 2, 4.0, 11);
        let test = two_gaussians(100, 2, 4.0, 12);
        for kind in ClassifierKind::ALL {
            let m = fit(kind, &train, &ClassifierConfig::default(), 3).unwrap();
            let acc = training_accuracy(&m, &test);
            assert!(acc >= 0.95, "{kind}: {acc}");
        }
    }

    #[test]
    fn rejects_bad_training_sets() {
        let ds = separable_toy();
        let one_class = ds.with_labels(vec![Label::Asd; 8]).unwrap();
        assert!(matches!(
            fit(
                ClassifierKind::Nb,
                &one_class,
                &ClassifierConfig::default(),
                0
            ),
            Err(Error::Argument(_))
        ));
        let mut bad = ds.clone();
        bad.rows[0][0] = f64::NAN;
        assert!(fit(ClassifierKind::Lr, &bad, &ClassifierConfig::default(), 0).is_err());
    }

    #[test]
    fn feature_mismatch_is_a_schema_error() {
        let ds = separable_toy();
        let m = fit(ClassifierKind::Nb, &ds, &ClassifierConfig::default(), 0).unwrap();
        let wrong = vec!["x1".to_string(), "x0".to_string()];
        assert!(matches!(
            m.predict(&wrong, &[0.0, 0.0]),
            Err(Error::Schema(_))
        ));
        assert!(m.predict(&ds.names, &[0.0, 0.0]).is_ok());
    }

    #[test]
    fn zero_logistic_model_ties_to_asd() {
        let m = TrainedModel {
            format_version: MODEL_FORMAT_VERSION,
            kind: ClassifierKind::Lr,
            feature_names: vec!["a".into()],
            seed: 0,
            params: ModelParams::Lr(LogisticRegression {
                weights: vec![0.0],
                bias: 0.0,
                iterations: 0,
                gradient_norm: 0.0,
            }),
        };
        let p = m.predict(&["a".to_string()], &[3.0]).unwrap();
        assert_eq!((p.label, p.score), (Label::Asd, 0.5));
    }

    #[test]
    fn serialisation_round_trip_is_exact() {
        let ds = two_gaussians(30, 3, 3.0, 5);
        let dir = tempfile::tempdir().unwrap();
        for kind in ClassifierKind::ALL {
            let m = fit(kind, &ds, &ClassifierConfig::default(), 9).unwrap();
            let path = dir.path().join(format!("{kind}.json"));
            m.save(&path).unwrap();
            let back = TrainedModel::load(&path).unwrap();
            assert_eq!(back, m);
            assert_eq!(
                back.predict_dataset(&ds).unwrap(),
                m.predict_dataset(&ds).unwrap()
            );
        }
        let mut text = fit(ClassifierKind::Nb, &ds, &ClassifierConfig::default(), 0)
            .unwrap()
            .to_json()
            .unwrap();
        text = text.replacen("\"format_version\": 1", "\"format_version\": 99", 1);
        assert!(TrainedModel::from_json(&text).is_err());
    }
}
