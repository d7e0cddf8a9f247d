//! Writes a small two-class corpus (WAV, JSON sidecars, labels.csv).
//!
//! cargo run --release --example synth_corpus -- [out_dir]

use voxprosody::corpus::{write_corpus, CorpusSpec};

fn main() -> voxprosody::Result<()> {
    let out = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "out/example_corpus".into());
    let mut spec = CorpusSpec::default();
    for c in &mut spec.classes {
        c.count = 5;
    }
    std::fs::create_dir_all(&out).map_err(|e| voxprosody::Error::io(&out, e))?;
    let w = write_corpus(&spec, &out)?;
    for e in &w.entries {
        println!(
            "{} {} f0 {:.1} Hz, F1 {:.0} Hz",
            e.id, e.label, e.voice.f0_hz, e.voice.formants_hz[0].0
        );
    }
    println!("labels: {}", w.labels_path.display());
    Ok(())
}
