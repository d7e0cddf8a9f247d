//! Class means, Welch t-tests and the |t| ranking on an extracted corpus.
//!
//! cargo run --release --example rank_attributes -- [features.csv]
//! Without an argument a small corpus is synthesised and extracted first.

use voxprosody::corpus::{write_corpus, CorpusSpec};
use voxprosody::features::{read_csv, FeatureConfig, LabeledDataset};
use voxprosody::pipeline::extract_labeled_dir;
use voxprosody::stats::{
    class_statistics, class_statistics_text, rank_features, ranking_text, TTestKind,
};

fn small_corpus() -> voxprosody::Result<LabeledDataset> {
    let dir = std::env::temp_dir().join("voxprosody_rank_example");
    std::fs::create_dir_all(&dir).map_err(|e| voxprosody::Error::io(&dir, e))?;
    let mut spec = CorpusSpec::default();
    for c in &mut spec.classes {
        c.count = 12;
    }
    let w = write_corpus(&spec, &dir)?;
    let labels: Vec<_> = w.entries.iter().map(|e| (e.id.clone(), e.label)).collect();
    Ok(extract_labeled_dir(&dir, &labels, &FeatureConfig::default())?.dataset)
}

fn main() -> voxprosody::Result<()> {
    let ds = match std::env::args().nth(1) {
        Some(p) => read_csv(p)?,
        None => small_corpus()?,
    };
    print!(
        "{}",
        class_statistics_text(&class_statistics(&ds, TTestKind::Welch)?)
    );
    println!();
    print!(
        "{}",
        ranking_text(&rank_features(&ds, 10, TTestKind::Welch)?)
    );
    Ok(())
}
