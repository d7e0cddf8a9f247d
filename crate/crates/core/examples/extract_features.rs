//! The 36 attributes of one synthetic recording.

use voxprosody::features::{analyze_recording, FeatureConfig, FEATURE_NAMES};
use voxprosody::signal_io::{synthesize_voice, SynthesisSpec};

fn main() -> voxprosody::Result<()> {
    let spec = SynthesisSpec {
        f0_hz: 220.0,
        f0_jitter_pct: 0.8,
        amp_shimmer_db: 0.4,
        formants_hz: vec![
            (750.0, 80.0),
            (1300.0, 100.0),
            (2500.0, 120.0),
            (3500.0, 150.0),
        ],
        duration_s: 1.0,
        noise_db: Some(-35.0),
        seed: 1,
    };
    let clip = synthesize_voice(&spec, 16000.0)?;
    let a = analyze_recording(&clip, &FeatureConfig::default())?;
    for (name, v) in FEATURE_NAMES.iter().zip(a.features.values()) {
        println!("{name:>10} {v:.6}");
    }
    println!(
        "frames {:?}, voiced fraction {:.2}",
        a.counts, a.voiced_fraction
    );
    Ok(())
}
