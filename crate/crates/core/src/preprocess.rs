//! Edge trimming, spectral noise gating, pre-emphasis, z-normalisation,
//! framing and Hamming windowing.
//!
//! The stages run in a fixed order, see [`PIPELINE_STAGES`].

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal_io::AudioClip;
use crate::spectral;

/// Order in which [`crate::features::extract_features`] applies the stages.
pub const PIPELINE_STAGES: [&str; 6] = [
    "trim",
    "gate",
    "pre_emphasis",
    "normalize",
    "frame",
    "window",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PreprocessConfig {
    pub pre_emphasis_alpha: f64,
    pub frame_len_s: f64,
    pub frame_shift_s: f64,
    /// Attenuation applied to gated bins, dB.
    pub noise_reduction_db: f64,
    /// 0..=24; maps linearly onto a 0..=12 dB margin above the noise profile.
    pub gate_sensitivity: f64,
    /// Edge blocks quieter than this (dB re clip peak) are trimmed.
    pub silence_threshold_db: f64,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        PreprocessConfig {
            pre_emphasis_alpha: 0.98,
            frame_len_s: 0.025,
            frame_shift_s: 0.010,
            noise_reduction_db: 6.0,
            gate_sensitivity: 6.0,
            silence_threshold_db: -40.0,
        }
    }
}

impl PreprocessConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.9..=1.0).contains(&self.pre_emphasis_alpha) {
            return Err(Error::Config(format!(
                "pre_emphasis_alpha {} outside [0.9, 1]",
                self.pre_emphasis_alpha
            )));
        }
        if !(self.frame_shift_s > 0.0 && self.frame_shift_s <= self.frame_len_s) {
            return Err(Error::Config(format!(
                "need 0 < frame_shift_s ({}) <= frame_len_s ({})",
                self.frame_shift_s, self.frame_len_s
            )));
        }
        if !(0.0..=24.0).contains(&self.gate_sensitivity) {
            return Err(Error::Config(format!(
                "gate_sensitivity {} outside [0, 24]",
                self.gate_sensitivity
            )));
        }
        if !(self.noise_reduction_db >= 0.0 && self.noise_reduction_db.is_finite()) {
            return Err(Error::Config(format!(
                "noise_reduction_db {} must be >= 0",
                self.noise_reduction_db
            )));
        }
        if !self.silence_threshold_db.is_finite() {
            return Err(Error::Config("silence_threshold_db must be finite".into()));
        }
        Ok(())
    }

    /// Frame length and shift in samples at `sample_rate_hz`.
    pub fn frame_geometry(&self, sample_rate_hz: f64) -> (usize, usize) {
        let len = (self.frame_len_s * sample_rate_hz).round().max(1.0) as usize;
        let shift = (self.frame_shift_s * sample_rate_hz).round().max(1.0) as usize;
        (len, shift)
    }
}

/// Short-time frames cut from a clip.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameSequence {
    pub frames: Vec<Vec<f64>>,
    pub frame_len: usize,
    pub shift: usize,
    pub sample_rate_hz: f64,
    pub windowed: bool,
}

impl FrameSequence {
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }
}

fn peak_abs(samples: &[f64]) -> f64 {
    samples.iter().fold(0.0f64, |m, s| m.max(s.abs()))
}

/// Removes leading and trailing 10 ms blocks whose RMS is below
/// `threshold_db` relative to the clip peak.
pub fn trim_silence(clip: &AudioClip, threshold_db: f64) -> Result<AudioClip> {
    let (start, end) = trim_bounds(clip, threshold_db)?;
    Ok(clip.with_samples(clip.samples[start..end].to_vec()))
}

/// Sample range kept by [`trim_silence`].
pub fn trim_bounds(clip: &AudioClip, threshold_db: f64) -> Result<(usize, usize)> {
    if clip.is_empty() {
        return Err(Error::EmptyInput("trim_silence on empty clip".into()));
    }
    let peak = peak_abs(&clip.samples);
    if peak == 0.0 {
        return Err(Error::EmptyResult(format!(
            "{}: clip is silent",
            clip.source_id
        )));
    }
    let block = ((0.010 * clip.sample_rate_hz).round() as usize).max(1);
    let floor = peak * 10f64.powf(threshold_db / 20.0);
    let loud: Vec<bool> = clip
        .samples
        .chunks(block)
        .map(|b| (b.iter().map(|s| s * s).sum::<f64>() / b.len() as f64).sqrt() >= floor)
        .collect();
    let first = loud.iter().position(|&l| l);
    let last = loud.iter().rposition(|&l| l);
    match (first, last) {
        (Some(a), Some(b)) => Ok((a * block, ((b + 1) * block).min(clip.len()))),
        _ => Err(Error::EmptyResult(format!(
            "{}: every block below {threshold_db} dB",
            clip.source_id
        ))),
    }
}

/// Analysis window length used by [`noise_gate`]: the power of two at or
/// above 20 ms.
pub fn gate_window_len(sample_rate_hz: f64) -> usize {
    ((0.020 * sample_rate_hz).ceil() as usize)
        .max(2)
        .next_power_of_two()
}

fn periodic_hann(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / n as f64).cos())
        .collect()
}

fn stft_frames(
    samples: &[f64],
    win: &[f64],
    hop: usize,
    sample_rate_hz: f64,
) -> Result<Vec<spectral::Spectrum>> {
    let n = win.len();
    let mut out = Vec::new();
    let mut start = 0;
    while start + n <= samples.len() {
        let frame: Vec<f64> = samples[start..start + n]
            .iter()
            .zip(win)
            .map(|(s, w)| s * w)
            .collect();
        out.push(spectral::dft(&frame, n, sample_rate_hz)?);
        start += hop;
    }
    Ok(out)
}

/// Single-pass spectral gate driven by a noise-only profile.
///
/// Hann frames with 50% overlap. A bin is gated when its level, averaged over
/// three neighbouring frames, falls below the profile's mean level plus a
/// margin of `gate_sensitivity / 2` dB. Gated bins are attenuated by
/// `noise_reduction_db`; the gain mask is smoothed over three bins before
/// overlap-add. Output length equals input length.
pub fn noise_gate(
    clip: &AudioClip,
    noise_profile: &AudioClip,
    cfg: &PreprocessConfig,
) -> Result<AudioClip> {
    let n = gate_window_len(clip.sample_rate_hz);
    if noise_profile.len() < n {
        return Err(Error::Argument(format!(
            "noise profile has {} samples, one analysis frame needs {n}",
            noise_profile.len()
        )));
    }
    if (noise_profile.sample_rate_hz - clip.sample_rate_hz).abs() > 1e-9 {
        return Err(Error::Argument(
            "noise profile sample rate differs from clip".into(),
        ));
    }
    if cfg.noise_reduction_db == 0.0 {
        return Ok(clip.clone());
    }
    let hop = n / 2;
    let win = periodic_hann(n);
    let bins = n / 2 + 1;

    let profile = stft_frames(&noise_profile.samples, &win, hop, clip.sample_rate_hz)?;
    let mut noise_mag = vec![0.0; bins];
    for spec in &profile {
        for (acc, c) in noise_mag.iter_mut().zip(&spec.bins[..bins]) {
            *acc += c.norm();
        }
    }
    let margin = 10f64.powf(cfg.gate_sensitivity * 0.5 / 20.0);
    let threshold: Vec<f64> = noise_mag
        .iter()
        .map(|m| m / profile.len() as f64 * margin)
        .collect();
    let attenuation = 10f64.powf(-cfg.noise_reduction_db / 20.0);

    // pad so every original sample is covered by two half-overlapping windows
    let mut padded = vec![0.0; n];
    padded.extend_from_slice(&clip.samples);
    let tail = n + (hop - clip.len() % hop) % hop;
    padded.extend(std::iter::repeat_n(0.0, tail));
    let frames = stft_frames(&padded, &win, hop, clip.sample_rate_hz)?;
    let mags: Vec<Vec<f64>> = frames
        .iter()
        .map(|s| s.bins[..bins].iter().map(|c| c.norm()).collect())
        .collect();

    let mut out = vec![0.0; padded.len()];
    for (t, spec) in frames.iter().enumerate() {
        let lo = t.saturating_sub(1);
        let hi = (t + 1).min(frames.len() - 1);
        let raw: Vec<f64> = (0..bins)
            .map(|k| {
                let level = (lo..=hi).map(|u| mags[u][k]).sum::<f64>() / (hi - lo + 1) as f64;
                if level < threshold[k] {
                    attenuation
                } else {
                    1.0
                }
            })
            .collect();
        let mask: Vec<f64> = (0..bins)
            .map(|k| {
                let a = k.saturating_sub(1);
                let b = (k + 1).min(bins - 1);
                raw[a..=b].iter().sum::<f64>() / (b - a + 1) as f64
            })
            .collect();
        let mut gated = spec.clone();
        for k in 0..n {
            let idx = if k < bins { k } else { n - k };
            gated.bins[k] *= mask[idx];
        }
        let frame = gated.inverse();
        let start = t * hop;
        for (o, v) in out[start..start + n].iter_mut().zip(frame) {
            *o += v;
        }
    }
    Ok(clip.with_samples(out[n..n + clip.len()].to_vec()))
}

/// First-order FIR `y[n] = x[n] - alpha * x[n-1]`, `y[0] = x[0]`.
pub fn pre_emphasize(clip: &AudioClip, alpha: f64) -> Result<AudioClip> {
    if !(0.9..=1.0).contains(&alpha) {
        return Err(Error::Argument(format!(
            "pre-emphasis alpha {alpha} outside [0.9, 1]"
        )));
    }
    let x = &clip.samples;
    let mut y = Vec::with_capacity(x.len());
    if let Some(&first) = x.first() {
        y.push(first);
    }
    y.extend(x.windows(2).map(|w| w[1] - alpha * w[0]));
    Ok(clip.with_samples(y))
}

/// Zero mean, unit population standard deviation.
pub fn z_normalize(clip: &AudioClip) -> Result<AudioClip> {
    let n = clip.len();
    if n < 2 {
        return Err(Error::Degenerate(format!(
            "{}: need at least 2 samples",
            clip.source_id
        )));
    }
    let mean = clip.samples.iter().sum::<f64>() / n as f64;
    let var = clip.samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / n as f64;
    let sd = var.sqrt();
    if !(sd > 0.0) || sd < 1e-300 {
        return Err(Error::Degenerate(format!(
            "{}: zero variance",
            clip.source_id
        )));
    }
    Ok(clip.with_samples(clip.samples.iter().map(|s| (s - mean) / sd).collect()))
}

/// Cuts `floor((n - N) / shift) + 1` frames; a trailing partial frame is dropped.
pub fn frame_signal(clip: &AudioClip, cfg: &PreprocessConfig) -> Result<FrameSequence> {
    let (frame_len, shift) = cfg.frame_geometry(clip.sample_rate_hz);
    if shift > frame_len {
        return Err(Error::Argument("frame shift exceeds frame length".into()));
    }
    if clip.len() < frame_len {
        return Err(Error::TooShort {
            needed: frame_len,
            got: clip.len(),
        });
    }
    let count = (clip.len() - frame_len) / shift + 1;
    let frames = (0..count)
        .map(|i| clip.samples[i * shift..i * shift + frame_len].to_vec())
        .collect();
    Ok(FrameSequence {
        frames,
        frame_len,
        shift,
        sample_rate_hz: clip.sample_rate_hz,
        windowed: false,
    })
}

/// `w(n) = 0.54 - 0.46 cos(2 pi n / (N - 1))`.
pub fn hamming(n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![1.0];
    }
    let half: Vec<f64> = (0..n.div_ceil(2))
        .map(|i| 0.54 - 0.46 * (2.0 * PI * i as f64 / (n - 1) as f64).cos())
        .collect();
    // mirror so that w(n) == w(N-1-n) bit for bit
    (0..n).map(|i| half[i.min(n - 1 - i)]).collect()
}

pub fn apply_hamming(fs: &FrameSequence) -> Result<FrameSequence> {
    if fs.windowed {
        return Err(Error::State("frames are already windowed".into()));
    }
    let w = hamming(fs.frame_len);
    let frames = fs
        .frames
        .iter()
        .map(|f| f.iter().zip(&w).map(|(x, w)| x * w).collect())
        .collect();
    Ok(FrameSequence {
        frames,
        windowed: true,
        ..fs.clone()
    })
}
