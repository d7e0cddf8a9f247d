//! SRH pitch track, jitter and shimmer of a perturbed pulse train.

use voxprosody::signal_io::{resample, synthesize_voice, SynthesisSpec};
use voxprosody::source::{
    aggregate_source, glottal_cycles, jitter_abs, shimmer_db, srh_analyze, PitchConfig,
};

fn main() -> voxprosody::Result<()> {
    let spec = SynthesisSpec {
        f0_hz: 180.0,
        f0_jitter_pct: 1.0,
        amp_shimmer_db: 0.5,
        formants_hz: vec![],
        duration_s: 1.0,
        noise_db: Some(-30.0),
        seed: 3,
    };
    let clip = resample(&synthesize_voice(&spec, 16000.0)?, 10000.0)?;
    let analysis = srh_analyze(&clip, &PitchConfig::default())?;
    for f in analysis.track.frames.iter().step_by(10) {
        println!(
            "{:.2} s  f0 {:?}  srh {:.3}",
            f.time_s,
            f.f0_hz.map(|v| v.round()),
            f.srh_peak
        );
    }
    let cycles = glottal_cycles(&analysis);
    println!("cycles {}", cycles.frames.len());
    println!(
        "jitter {:.3e} s, shimmer {:.3} dB",
        jitter_abs(&cycles)?,
        shimmer_db(&cycles)?
    );
    println!("{:?}", aggregate_source(&analysis.track, Some(&cycles))?);
    Ok(())
}
