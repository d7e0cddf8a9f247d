//! Formants and dominant frequencies from LP envelopes, frame by frame.

use voxprosody::lp::{extract_dominants, extract_formants};
use voxprosody::preprocess::hamming;
use voxprosody::signal_io::{synthesize_voice, SynthesisSpec};

fn main() -> voxprosody::Result<()> {
    let fs = 10000.0;
    let spec = SynthesisSpec {
        f0_hz: 130.0,
        f0_jitter_pct: 0.0,
        amp_shimmer_db: 0.0,
        formants_hz: vec![(700.0, 80.0), (1200.0, 100.0), (2600.0, 120.0)],
        duration_s: 0.3,
        noise_db: Some(-45.0),
        seed: 5,
    };
    let x = synthesize_voice(&spec, fs)?.samples;
    let w = hamming(250);
    for (i, frame) in x.windows(250).step_by(500).enumerate() {
        let fr: Vec<f64> = frame.iter().zip(&w).map(|(a, b)| a * b).collect();
        let f = extract_formants(&fr, fs)?;
        let d = extract_dominants(&fr, fs)?;
        let shown: Vec<String> = f.present().map(|v| format!("{v:.0}")).collect();
        println!(
            "frame {i}: formants [{}]  FD1 {:?}  FD2 {:?}",
            shown.join(", "),
            d.fd1.map(f64::round),
            d.fd2.map(f64::round)
        );
    }
    Ok(())
}
