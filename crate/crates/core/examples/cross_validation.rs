//! Stratified 5-fold evaluation of the default corpus, as a text report.

use voxprosody::corpus::{write_corpus, CorpusSpec};
use voxprosody::evaluation::{cross_validate, report_text, EvalConfig};
use voxprosody::features::FeatureConfig;
use voxprosody::pipeline::extract_labeled_dir;

fn main() -> voxprosody::Result<()> {
    let dir = std::env::temp_dir().join("voxprosody_cv_example");
    std::fs::create_dir_all(&dir).map_err(|e| voxprosody::Error::io(&dir, e))?;
    let w = write_corpus(&CorpusSpec::default(), &dir)?;
    let labels: Vec<_> = w.entries.iter().map(|e| (e.id.clone(), e.label)).collect();
    let ds = extract_labeled_dir(&dir, &labels, &FeatureConfig::default())?.dataset;
    let cfg = EvalConfig {
        strict_folds: true,
        ..Default::default()
    };
    print!("{}", report_text(&cross_validate(&ds, &cfg, 0)?));
    Ok(())
}
