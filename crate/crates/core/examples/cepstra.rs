//! MFCC and LPCC of one windowed frame.

use voxprosody::lp::{fit_frame, lpcc, LPCC_ORDER};
use voxprosody::mfcc::{build_filterbank, mfcc, MFCC_N_FFT, N_COEFFS, N_FILTERS};
use voxprosody::preprocess::hamming;
use voxprosody::signal_io::{synthesize_voice, SynthesisSpec};

fn main() -> voxprosody::Result<()> {
    let fs = 10000.0;
    let spec = SynthesisSpec {
        f0_hz: 200.0,
        f0_jitter_pct: 0.0,
        amp_shimmer_db: 0.0,
        formants_hz: vec![(800.0, 80.0), (1500.0, 100.0)],
        duration_s: 0.1,
        noise_db: Some(-40.0),
        seed: 2,
    };
    let x = synthesize_voice(&spec, fs)?.samples;
    let frame: Vec<f64> = x[500..750]
        .iter()
        .zip(hamming(250))
        .map(|(a, b)| a * b)
        .collect();

    let bank = build_filterbank(fs, MFCC_N_FFT, N_FILTERS)?;
    println!("mel filter centre bins {:?}", bank.center_bins());
    let c = mfcc(&frame, &bank, N_COEFFS)?.expect("frame is not silent");
    println!(
        "mfcc {:?}",
        c.iter()
            .map(|v| (v * 1e4).round() / 1e4)
            .collect::<Vec<_>>()
    );

    let model = fit_frame(&frame, LPCC_ORDER)?;
    let l = lpcc(&model, LPCC_ORDER)?;
    println!(
        "lpcc {:?}",
        l.iter()
            .map(|v| (v * 1e4).round() / 1e4)
            .collect::<Vec<_>>()
    );
    Ok(())
}
