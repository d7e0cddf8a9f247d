//! Mono PCM audio: WAV reading and writing, band-limited resampling, and
//! synthetic voice generation with known ground truth.

use std::f64::consts::PI;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A sampled mono waveform.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioClip {
    pub samples: Vec<f64>,
    pub sample_rate_hz: f64,
    pub source_id: String,
}

impl AudioClip {
    /// Builds a clip, checking the rate and that every sample is finite.
    pub fn new(
        samples: Vec<f64>,
        sample_rate_hz: f64,
        source_id: impl Into<String>,
    ) -> Result<Self> {
        if !(sample_rate_hz.is_finite() && sample_rate_hz > 0.0) {
            return Err(Error::Argument(format!(
                "sample rate must be positive, got {sample_rate_hz}"
            )));
        }
        if let Some(i) = samples.iter().position(|s| !s.is_finite()) {
            return Err(Error::Argument(format!("non-finite sample at index {i}")));
        }
        Ok(AudioClip {
            samples,
            sample_rate_hz,
            source_id: source_id.into(),
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate_hz
    }

    /// Same metadata, new samples.
    pub(crate) fn with_samples(&self, samples: Vec<f64>) -> AudioClip {
        AudioClip {
            samples,
            sample_rate_hz: self.sample_rate_hz,
            source_id: self.source_id.clone(),
        }
    }
}

/// Sample encodings accepted by [`save_wav`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WavEncoding {
    #[default]
    Pcm16,
    Pcm24,
    Float32,
}

/// Reads a WAV file, averaging channels to mono and scaling integer PCM to [-1, 1].
pub fn load_wav(path: impl AsRef<Path>) -> Result<AudioClip> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = hound::WavReader::new(std::io::BufReader::new(file))
        .map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
    let spec = reader.spec();
    let channels = spec.channels as usize;
    if channels == 0 {
        return Err(Error::Format(format!("{}: zero channels", path.display())));
    }
    let interleaved: Vec<f64> = match spec.sample_format {
        hound::SampleFormat::Float => {
            if spec.bits_per_sample != 32 {
                return Err(Error::Format(format!(
                    "{}: unsupported float width {}",
                    path.display(),
                    spec.bits_per_sample
                )));
            }
            reader
                .into_samples::<f32>()
                .map(|s| s.map(f64::from))
                .collect::<std::result::Result<_, _>>()
        }
        hound::SampleFormat::Int => {
            let bits = spec.bits_per_sample;
            if !matches!(bits, 8 | 16 | 24 | 32) {
                return Err(Error::Format(format!(
                    "{}: unsupported integer width {bits}",
                    path.display()
                )));
            }
            let scale = (1u64 << (bits - 1)) as f64;
            reader
                .into_samples::<i32>()
                .map(|s| s.map(|v| v as f64 / scale))
                .collect::<std::result::Result<_, _>>()
        }
    }
    .map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;

    if interleaved.is_empty() {
        return Err(Error::EmptyInput(format!(
            "{}: no sample data",
            path.display()
        )));
    }
    let samples: Vec<f64> = interleaved
        .chunks_exact(channels)
        .map(|frame| frame.iter().sum::<f64>() / channels as f64)
        .collect();
    let id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    AudioClip::new(samples, spec.sample_rate as f64, id)
}

/// Writes a mono WAV file. Samples outside [-1, 1] are clipped for integer encodings.
pub fn save_wav(clip: &AudioClip, path: impl AsRef<Path>, encoding: WavEncoding) -> Result<()> {
    let path = path.as_ref();
    let rate = clip.sample_rate_hz.round();
    if (rate - clip.sample_rate_hz).abs() > 1e-9 || rate > u32::MAX as f64 {
        return Err(Error::Argument(format!(
            "WAV needs an integral sample rate, got {}",
            clip.sample_rate_hz
        )));
    }
    let (bits, format) = match encoding {
        WavEncoding::Pcm16 => (16, hound::SampleFormat::Int),
        WavEncoding::Pcm24 => (24, hound::SampleFormat::Int),
        WavEncoding::Float32 => (32, hound::SampleFormat::Float),
    };
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: rate as u32,
        bits_per_sample: bits,
        sample_format: format,
    };
    let wrap = |e: hound::Error| match e {
        hound::Error::IoError(io) => Error::io(path, io),
        other => Error::Format(other.to_string()),
    };
    let mut writer = hound::WavWriter::create(path, spec).map_err(wrap)?;
    match encoding {
        WavEncoding::Float32 => {
            for &s in &clip.samples {
                writer.write_sample(s as f32).map_err(wrap)?;
            }
        }
        WavEncoding::Pcm16 | WavEncoding::Pcm24 => {
            let scale = (1i64 << (bits - 1)) as f64;
            let (lo, hi) = (-scale, scale - 1.0);
            for &s in &clip.samples {
                let q = (s * scale).round().clamp(lo, hi) as i32;
                writer.write_sample(q).map_err(wrap)?;
            }
        }
    }
    writer.finalize().map_err(wrap)
}

const RESAMPLE_TAPS: usize = 64;
const KAISER_BETA: f64 = 8.0;

/// Zeroth-order modified Bessel function of the first kind (power series).
fn bessel_i0(x: f64) -> f64 {
    let half = x / 2.0;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..64 {
        term *= (half / k as f64).powi(2);
        sum += term;
        if term < sum * 1e-17 {
            break;
        }
    }
    sum
}

/// Kaiser-windowed sinc low-pass with unit DC gain; `cutoff` is in cycles/sample.
fn lowpass_kernel(cutoff: f64) -> Vec<f64> {
    let centre = (RESAMPLE_TAPS - 1) as f64 / 2.0;
    let norm = bessel_i0(KAISER_BETA);
    let mut h: Vec<f64> = (0..RESAMPLE_TAPS)
        .map(|i| {
            let t = i as f64 - centre;
            let sinc = if t == 0.0 {
                2.0 * cutoff
            } else {
                (2.0 * PI * cutoff * t).sin() / (PI * t)
            };
            let r = t / centre;
            let w = bessel_i0(KAISER_BETA * (1.0 - r * r).max(0.0).sqrt()) / norm;
            sinc * w
        })
        .collect();
    let sum: f64 = h.iter().sum();
    h.iter_mut().for_each(|v| *v /= sum);
    h
}

/// Converts a clip to `target_hz`.
///
/// The signal is low-passed at `0.45 * min(source, target)` Hz with a 64-tap
/// Kaiser-windowed sinc, then read at the new sample instants by linear
/// interpolation. Output length is `round(n * target / source)`.
pub fn resample(clip: &AudioClip, target_hz: f64) -> Result<AudioClip> {
    if !(target_hz.is_finite() && target_hz > 0.0) {
        return Err(Error::Argument(format!(
            "resample target must be positive and finite, got {target_hz}"
        )));
    }
    let source_hz = clip.sample_rate_hz;
    if target_hz == source_hz {
        return Ok(clip.clone());
    }
    let n = clip.samples.len();
    let out_len = (n as f64 * target_hz / source_hz).round() as usize;
    let cutoff = 0.45 * source_hz.min(target_hz) / source_hz;
    let h = lowpass_kernel(cutoff);

    // Full convolution; filtered sample at source time t sits at index t + delay.
    let delay = (RESAMPLE_TAPS - 1) as f64 / 2.0;
    let full_len = n + RESAMPLE_TAPS - 1;
    let mut filtered = vec![0.0; full_len];
    for (i, &x) in clip.samples.iter().enumerate() {
        if x == 0.0 {
            continue;
        }
        for (j, &hj) in h.iter().enumerate() {
            filtered[i + j] += hj * x;
        }
    }

    let step = source_hz / target_hz;
    let samples = (0..out_len)
        .map(|j| {
            let pos = j as f64 * step + delay;
            let i0 = pos.floor() as usize;
            let frac = pos - i0 as f64;
            let a = filtered.get(i0).copied().unwrap_or(0.0);
            let b = filtered.get(i0 + 1).copied().unwrap_or(0.0);
            a + frac * (b - a)
        })
        .collect();
    Ok(AudioClip {
        samples,
        sample_rate_hz: target_hz,
        source_id: clip.source_id.clone(),
    })
}

/// Ground truth for a synthetic voiced recording.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthesisSpec {
    pub f0_hz: f64,
    /// Cycle-to-cycle period perturbation, percent (uniform, ±).
    #[serde(default)]
    pub f0_jitter_pct: f64,
    /// Pulse amplitude perturbation, dB (uniform, ±).
    #[serde(default)]
    pub amp_shimmer_db: f64,
    /// `(centre_hz, bandwidth_hz)` resonators, centres strictly increasing.
    #[serde(default)]
    pub formants_hz: Vec<(f64, f64)>,
    pub duration_s: f64,
    /// Additive white noise level relative to the voiced signal RMS; `None` for a clean signal.
    #[serde(default)]
    pub noise_db: Option<f64>,
    #[serde(default)]
    pub seed: u64,
}

impl SynthesisSpec {
    pub fn validate(&self, sample_rate_hz: f64) -> Result<()> {
        let nyquist = sample_rate_hz / 2.0;
        if !(sample_rate_hz.is_finite() && sample_rate_hz > 0.0) {
            return Err(Error::Argument(format!("bad sample rate {sample_rate_hz}")));
        }
        if !(self.f0_hz > 0.0 && self.f0_hz < nyquist) {
            return Err(Error::Argument(format!(
                "f0 {} Hz outside (0, {nyquist})",
                self.f0_hz
            )));
        }
        if !(self.f0_jitter_pct >= 0.0 && self.f0_jitter_pct < 100.0) {
            return Err(Error::Argument(format!(
                "jitter {}% out of range",
                self.f0_jitter_pct
            )));
        }
        if !(self.amp_shimmer_db >= 0.0 && self.amp_shimmer_db.is_finite()) {
            return Err(Error::Argument(format!(
                "shimmer {} dB out of range",
                self.amp_shimmer_db
            )));
        }
        if !(self.duration_s > 0.0 && self.duration_s.is_finite()) {
            return Err(Error::Argument(format!(
                "duration {} s must be positive",
                self.duration_s
            )));
        }
        let mut last = 0.0;
        for &(centre, bw) in &self.formants_hz {
            if !(centre > last && centre < nyquist) {
                return Err(Error::Argument(format!(
                    "formant centres must increase strictly below {nyquist} Hz (got {centre})"
                )));
            }
            if !(bw > 0.0 && bw.is_finite()) {
                return Err(Error::Argument(format!(
                    "formant bandwidth {bw} must be positive"
                )));
            }
            last = centre;
        }
        if let Some(db) = self.noise_db {
            if !db.is_finite() {
                return Err(Error::Argument("noise level must be finite".into()));
            }
        }
        Ok(())
    }
}

/// Two-pole resonator with unit gain at DC, run in place.
fn resonate(signal: &mut [f64], centre_hz: f64, bandwidth_hz: f64, sample_rate_hz: f64) {
    let r = (-PI * bandwidth_hz / sample_rate_hz).exp();
    let theta = 2.0 * PI * centre_hz / sample_rate_hz;
    let a1 = 2.0 * r * theta.cos();
    let a2 = -r * r;
    let g = 1.0 - a1 - a2;
    let (mut y1, mut y2) = (0.0, 0.0);
    for s in signal.iter_mut() {
        let y = g * *s + a1 * y1 + a2 * y2;
        y2 = y1;
        y1 = y;
        *s = y;
    }
}

/// Generates a pulse-excited voice with exactly known F0, jitter and shimmer.
///
/// Pulses are placed at integer sample positions; each period is
/// `round(fs/f0 * (1 + u * jitter/100))` with `u ~ U(-1, 1)` and each pulse
/// amplitude is `10^(v * shimmer_db / 20)` with `v ~ U(-1, 1)`. The train is
/// filtered by the resonator cascade, optional white noise is added, and the
/// result is peak-normalised to 0.9.
pub fn synthesize_voice(spec: &SynthesisSpec, sample_rate_hz: f64) -> Result<AudioClip> {
    spec.validate(sample_rate_hz)?;
    let n = (spec.duration_s * sample_rate_hz).round().max(1.0) as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let nominal = sample_rate_hz / spec.f0_hz;

    let mut signal = vec![0.0; n];
    let mut pos = 0usize;
    while pos < n {
        let u_amp: f64 = rng.random_range(-1.0..=1.0);
        let u_per: f64 = rng.random_range(-1.0..=1.0);
        signal[pos] = 10f64.powf(u_amp * spec.amp_shimmer_db / 20.0);
        let period = (nominal * (1.0 + u_per * spec.f0_jitter_pct / 100.0))
            .round()
            .max(1.0) as usize;
        pos += period;
    }

    for &(centre, bw) in &spec.formants_hz {
        resonate(&mut signal, centre, bw, sample_rate_hz);
    }

    if let Some(noise_db) = spec.noise_db {
        let rms = (signal.iter().map(|s| s * s).sum::<f64>() / n as f64).sqrt();
        let sigma = rms * 10f64.powf(noise_db / 20.0);
        for s in signal.iter_mut() {
            let z: f64 = StandardNormal.sample(&mut rng);
            *s += sigma * z;
        }
    }

    let peak = signal.iter().fold(0.0f64, |m, s| m.max(s.abs()));
    if peak > 0.0 {
        signal.iter_mut().for_each(|s| *s *= 0.9 / peak);
    }
    AudioClip::new(signal, sample_rate_hz, format!("synth-{}", spec.seed))
}

/// A pure sinusoid.
pub fn tone(freq_hz: f64, amplitude: f64, duration_s: f64, sample_rate_hz: f64) -> AudioClip {
    let n = (duration_s * sample_rate_hz).round() as usize;
    let samples = (0..n)
        .map(|i| amplitude * (2.0 * PI * freq_hz * i as f64 / sample_rate_hz).sin())
        .collect();
    AudioClip {
        samples,
        sample_rate_hz,
        source_id: format!("tone-{freq_hz}"),
    }
}

/// Gaussian white noise with standard deviation `sigma`.
pub fn white_noise(sigma: f64, duration_s: f64, sample_rate_hz: f64, seed: u64) -> AudioClip {
    let n = (duration_s * sample_rate_hz).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples = (0..n)
        .map(|_| {
            let z: f64 = StandardNormal.sample(&mut rng);
            sigma * z
        })
        .collect();
    AudioClip {
        samples,
        sample_rate_hz,
        source_id: format!("noise-{seed}"),
    }
}
