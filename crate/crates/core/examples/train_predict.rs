//! Trains a pipeline on one corpus, saves it, and scores a fresh corpus.

use voxprosody::classifiers::{ClassifierConfig, ClassifierKind};
use voxprosody::corpus::{write_corpus, CorpusSpec};
use voxprosody::features::{FeatureConfig, LabeledDataset};
use voxprosody::pipeline::{extract_labeled_dir, train_pipeline, TrainedPipeline};
use voxprosody::stats::TTestKind;

fn corpus(name: &str, seed: u64) -> voxprosody::Result<LabeledDataset> {
    let dir = std::env::temp_dir().join(name);
    std::fs::create_dir_all(&dir).map_err(|e| voxprosody::Error::io(&dir, e))?;
    let mut spec = CorpusSpec {
        seed,
        ..Default::default()
    };
    for c in &mut spec.classes {
        c.count = 15;
    }
    let w = write_corpus(&spec, &dir)?;
    let labels: Vec<_> = w.entries.iter().map(|e| (e.id.clone(), e.label)).collect();
    Ok(extract_labeled_dir(&dir, &labels, &FeatureConfig::default())?.dataset)
}

fn main() -> voxprosody::Result<()> {
    let train = corpus("voxprosody_train_example", 1)?;
    let fresh = corpus("voxprosody_fresh_example", 2)?;
    let p = train_pipeline(
        &train,
        ClassifierKind::Rf,
        8,
        TTestKind::Welch,
        &ClassifierConfig::default(),
        0,
    )?;
    println!("selected {:?}", p.selected);
    let path = std::env::temp_dir().join("voxprosody_model.json");
    p.save(&path)?;
    let back = TrainedPipeline::load(&path)?;
    let preds = back.predict(&fresh.names, &fresh.rows)?;
    let correct = preds
        .iter()
        .zip(&fresh.labels)
        .filter(|(p, l)| p.label == **l)
        .count();
    println!("fresh corpus accuracy {correct}/{}", fresh.len());
    Ok(())
}
