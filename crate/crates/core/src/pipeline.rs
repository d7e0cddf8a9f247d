//! Corpus-level glue: extraction over a directory of recordings, and a
//! trained bundle (normalisation, selected attributes, model) for scoring
//! new recordings.

use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classifiers::{fit, ClassifierConfig, ClassifierKind, Prediction, TrainedModel};
use crate::error::{Error, Result};
use crate::features::{
    analyze_recording, FeatureConfig, FeatureTable, FrameCounts, Label, LabeledDataset,
    FEATURE_NAMES,
};
use crate::signal_io::load_wav;
use crate::stats::{rank_features, FeatureScore, NormalizationParams, TTestKind};

/// `.wav` files directly inside `dir`, sorted by file name.
pub fn list_wavs(dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    let mut out: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|x| x.eq_ignore_ascii_case("wav")))
        .collect();
    out.sort();
    if out.is_empty() {
        return Err(Error::Argument(format!(
            "no .wav files in {}",
            dir.display()
        )));
    }
    Ok(out)
}

pub fn recording_id(path: &Path) -> String {
    path.file_stem()
        .map_or_else(String::new, |s| s.to_string_lossy().into_owned())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordingSummary {
    pub id: String,
    pub counts: FrameCounts,
    pub gate_applied: bool,
    pub voiced_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub id: String,
    pub error: String,
}

/// Per-file results of a corpus extraction. Failures never abort the run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Extraction {
    pub ids: Vec<String>,
    pub values: Vec<Vec<f64>>,
    pub summaries: Vec<RecordingSummary>,
    pub failures: Vec<Failure>,
}

/// Analyses each file in parallel; output order follows `paths`.
pub fn extract_files(paths: &[PathBuf], cfg: &FeatureConfig) -> Result<Extraction> {
    cfg.validate()?;
    let results: Vec<(String, Result<_>)> = paths
        .par_iter()
        .map(|p| {
            let id = recording_id(p);
            let r = load_wav(p).and_then(|clip| analyze_recording(&clip, cfg));
            (id, r)
        })
        .collect();
    let mut out = Extraction {
        ids: Vec::new(),
        values: Vec::new(),
        summaries: Vec::new(),
        failures: Vec::new(),
    };
    for (id, r) in results {
        match r {
            Ok(a) => {
                out.values.push(a.features.values().to_vec());
                out.summaries.push(RecordingSummary {
                    id: id.clone(),
                    counts: a.counts,
                    gate_applied: a.gate_applied,
                    voiced_fraction: a.voiced_fraction,
                });
                out.ids.push(id);
            }
            Err(e) => {
                log::warn!("{id}: {e}");
                out.failures.push(Failure {
                    id,
                    error: e.to_string(),
                });
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledExtraction {
    pub dataset: LabeledDataset,
    pub extraction: Extraction,
    /// Recordings with no entry in the labels table (not analysed).
    pub unlabeled: Vec<String>,
    /// Labels with no matching recording.
    pub missing_audio: Vec<String>,
}

/// Extracts every labelled `.wav` in `dir`; unlabelled files are skipped with a warning.
pub fn extract_labeled_dir(
    dir: impl AsRef<Path>,
    labels: &[(String, Label)],
    cfg: &FeatureConfig,
) -> Result<LabeledExtraction> {
    let wavs = list_wavs(&dir)?;
    let mut table: HashMap<&str, Label> = HashMap::new();
    for (id, l) in labels {
        if table.insert(id.as_str(), *l).is_some_and(|prev| prev != *l) {
            return Err(Error::Schema(format!("conflicting labels for {id}")));
        }
    }
    let (labeled, unlabeled): (Vec<PathBuf>, Vec<PathBuf>) = wavs
        .into_iter()
        .partition(|p| table.contains_key(recording_id(p).as_str()));
    let unlabeled: Vec<String> = unlabeled.iter().map(|p| recording_id(p)).collect();
    for id in &unlabeled {
        log::warn!("{id}: no label, skipped");
    }
    let present: std::collections::HashSet<String> =
        labeled.iter().map(|p| recording_id(p)).collect();
    let mut missing_audio: Vec<String> = labels
        .iter()
        .map(|(id, _)| id.clone())
        .filter(|id| !present.contains(id))
        .collect();
    missing_audio.sort();
    missing_audio.dedup();
    let extraction = extract_files(&labeled, cfg)?;
    let dataset = LabeledDataset::new(
        FEATURE_NAMES.iter().map(|s| s.to_string()).collect(),
        extraction.values.clone(),
        extraction.ids.iter().map(|id| table[id.as_str()]).collect(),
        extraction.ids.clone(),
    )?;
    Ok(LabeledExtraction {
        dataset,
        extraction,
        unlabeled,
        missing_audio,
    })
}

pub const PIPELINE_FORMAT_VERSION: u32 = 1;

/// Everything needed to score raw feature rows: min-max parameters over
/// all attributes, the ranking, and a model over the selected attributes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedPipeline {
    pub format_version: u32,
    pub normalization: NormalizationParams,
    pub ranking: Vec<FeatureScore>,
    pub selected: Vec<String>,
    pub model: TrainedModel,
}

pub fn train_pipeline(
    ds: &LabeledDataset,
    kind: ClassifierKind,
    select: usize,
    t_test: TTestKind,
    hyper: &ClassifierConfig,
    seed: u64,
) -> Result<TrainedPipeline> {
    let normalization = NormalizationParams::fit(ds)?;
    let scaled = normalization.apply(ds)?;
    let rank = rank_features(&scaled, select, t_test)?;
    let model = fit(kind, &scaled.project(&rank.selected)?, hyper, seed)?;
    Ok(TrainedPipeline {
        format_version: PIPELINE_FORMAT_VERSION,
        normalization,
        ranking: rank.scores,
        selected: rank.selected,
        model,
    })
}

impl TrainedPipeline {
    /// Scores rows of raw (unnormalised) attributes named `names`.
    pub fn predict(&self, names: &[String], rows: &[Vec<f64>]) -> Result<Vec<Prediction>> {
        let idx: BTreeMap<&str, usize> = names
            .iter()
            .enumerate()
            .map(|(i, n)| (n.as_str(), i))
            .collect();
        let cols = self
            .selected
            .iter()
            .map(|n| {
                let src = *idx
                    .get(n.as_str())
                    .ok_or_else(|| Error::Schema(format!("input lacks attribute {n}")))?;
                let fitted = self
                    .normalization
                    .names
                    .iter()
                    .position(|m| m == n)
                    .ok_or_else(|| {
                        Error::Schema(format!(
                            "attribute {n} missing from the stored normalisation"
                        ))
                    })?;
                Ok((src, fitted))
            })
            .collect::<Result<Vec<_>>>()?;
        rows.iter()
            .map(|r| {
                let x: Vec<f64> = cols
                    .iter()
                    .map(|&(src, j)| {
                        let span = self.normalization.max[j] - self.normalization.min[j];
                        if span > 0.0 {
                            2.0 * (r[src] - self.normalization.min[j]) / span - 1.0
                        } else {
                            0.0
                        }
                    })
                    .collect();
                self.model.predict(&self.selected, &x)
            })
            .collect()
    }

    pub fn predict_table(&self, t: &FeatureTable) -> Result<Vec<Prediction>> {
        self.predict(&t.names, &t.rows)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string_pretty(self).map_err(|e| Error::Format(e.to_string()))?;
        std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let p: TrainedPipeline = serde_json::from_str(&text)
            .map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
        if p.format_version != PIPELINE_FORMAT_VERSION {
            return Err(Error::Format(format!(
                "{}: pipeline format version {} is not supported",
                path.display(),
                p.format_version
            )));
        }
        Ok(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{write_corpus, CorpusSpec};

    fn tiny_corpus(dir: &Path) -> Vec<(String, Label)> {
        let mut spec = CorpusSpec::default();
        spec.classes[0].count = 6;
        spec.classes[1].count = 6;
        spec.duration_s = 0.5;
        let w = write_corpus(&spec, dir).unwrap();
        w.entries.iter().map(|e| (e.id.clone(), e.label)).collect()
    }

    #[test]
    fn extraction_skips_unlabeled_and_failed_files() {
        let dir = tempfile::tempdir().unwrap();
        let mut labels = tiny_corpus(dir.path());
        std::fs::write(dir.path().join("broken.wav"), b"not a wav").unwrap();
        labels.push(("broken".into(), Label::Td));
        labels.push(("ghost".into(), Label::Asd));
        let dropped = labels.remove(0);
        let out = extract_labeled_dir(dir.path(), &labels, &FeatureConfig::default()).unwrap();
        assert_eq!(out.unlabeled, vec![dropped.0]);
        assert_eq!(out.missing_audio, vec!["ghost".to_string()]);
        assert_eq!(out.extraction.failures.len(), 1);
        assert_eq!(out.extraction.failures[0].id, "broken");
        assert_eq!(out.dataset.len(), 11);
        assert_eq!(out.dataset.n_features(), 36);
        let again = extract_labeled_dir(dir.path(), &labels, &FeatureConfig::default()).unwrap();
        assert_eq!(again.dataset, out.dataset);
    }

    #[test]
    fn empty_directory_is_an_argument_error() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(list_wavs(dir.path()), Err(Error::Argument(_))));
    }

    #[test]
    fn trained_pipeline_scores_raw_rows() {
        let dir = tempfile::tempdir().unwrap();
        let labels = tiny_corpus(dir.path());
        let ds = extract_labeled_dir(dir.path(), &labels, &FeatureConfig::default())
            .unwrap()
            .dataset;
        let p = train_pipeline(
            &ds,
            ClassifierKind::Svm,
            8,
            TTestKind::Welch,
            &ClassifierConfig::default(),
            0,
        )
        .unwrap();
        let preds = p.predict(&ds.names, &ds.rows).unwrap();
        let correct = preds
            .iter()
            .zip(&ds.labels)
            .filter(|(p, l)| p.label == **l)
            .count();
        assert_eq!(correct, ds.len());
        let path = dir.path().join("model.json");
        p.save(&path).unwrap();
        let back = TrainedPipeline::load(&path).unwrap();
        assert_eq!(back, p);
        // Column order of the input does not matter.
        let mut names = ds.names.clone();
        names.reverse();
        let rows: Vec<Vec<f64>> = ds
            .rows
            .iter()
            .map(|r| r.iter().rev().copied().collect())
            .collect();
        assert_eq!(back.predict(&names, &rows).unwrap(), preds);
        assert!(matches!(
            back.predict(&names[..3], &[rows[0][..3].to_vec()]),
            Err(Error::Schema(_))
        ));
    }
}
