//! Excitation-source features: SRH pitch tracking on the LP residual,
//! glottal-cycle segmentation, jitter and shimmer.
//!
//! Pitch is estimated on 100 ms frames with a 10 ms shift. For every frame
//! an order-12 LP model whitens the signal; the residual's amplitude spectrum
//! `E(f)` (unit energy) is scored at each candidate `f` in the search range by
//!
//! ```text
//! SRH(f) = E(f) + sum_{k=2}^{n_harm} [ E(k f) - E((k - 1/2) f) ]
//! ```
//!
//! and the best-scoring candidate above the voicing threshold becomes the
//! frame's F0. The `-E((k-1/2) f)` term penalises sub-harmonic candidates.
//!
//! Jitter and shimmer are computed between consecutive glottal cycles: epochs
//! are located as the dominant residual peaks spaced by the local SRH period
//! inside each voiced run.

use std::f64::consts::PI;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lp::{self, LpModel};
use crate::signal_io::AudioClip;
use crate::spectral::{self, parabolic_offset};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum SrhVariant {
    /// Harmonic sum minus inter-harmonic penalty.
    #[default]
    Subtractive,
    /// Harmonic amplitude multiplied by the inter-harmonic amplitude.
    PaperLiteral,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PitchConfig {
    pub f0_min_hz: f64,
    pub f0_max_hz: f64,
    pub n_harm: usize,
    pub frame_len_s: f64,
    pub frame_shift_s: f64,
    pub lp_order: usize,
    /// Voiced iff the SRH peak, on a residual spectrum normalised to unit
    /// energy per Hz, exceeds this.
    pub voicing_threshold: f64,
    /// Local SRH maxima within this fraction of the global maximum count as
    /// tied; the lowest-frequency one wins.
    pub tie_tolerance: f64,
    /// Candidate grid spacing, Hz.
    pub candidate_step_hz: f64,
    /// Upper bound on the residual spectrum grid spacing, Hz.
    pub spectrum_resolution_hz: f64,
    pub srh_variant: SrhVariant,
}

impl Default for PitchConfig {
    fn default() -> Self {
        PitchConfig {
            f0_min_hz: 70.0,
            f0_max_hz: 400.0,
            n_harm: 5,
            frame_len_s: 0.100,
            frame_shift_s: 0.010,
            lp_order: 12,
            voicing_threshold: 0.07,
            tie_tolerance: 0.05,
            candidate_step_hz: 0.5,
            spectrum_resolution_hz: 2.5,
            srh_variant: SrhVariant::Subtractive,
        }
    }
}

impl PitchConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.f0_min_hz > 0.0 && self.f0_min_hz < self.f0_max_hz) {
            return Err(Error::Config(format!(
                "pitch range [{}, {}] is empty",
                self.f0_min_hz, self.f0_max_hz
            )));
        }
        if self.n_harm < 1 {
            return Err(Error::Config("n_harm must be >= 1".into()));
        }
        if !(self.frame_shift_s > 0.0 && self.frame_shift_s <= self.frame_len_s) {
            return Err(Error::Config(
                "pitch frame shift must be in (0, frame length]".into(),
            ));
        }
        if !(0.0..1.0).contains(&self.tie_tolerance) {
            return Err(Error::Config("tie_tolerance must be in [0, 1)".into()));
        }
        if !(self.candidate_step_hz > 0.0 && self.spectrum_resolution_hz > 0.0) {
            return Err(Error::Config("pitch grid spacings must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PitchFrame {
    pub time_s: f64,
    pub f0_hz: Option<f64>,
    pub srh_peak: f64,
    /// Residual amplitude spectrum at F0 for analysis frames; F0-component
    /// magnitude of the residual over one period for glottal cycles.
    pub amplitude: f64,
    pub voiced: bool,
}

/// Per-frame (or per-cycle) pitch records in time order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PitchTrack {
    pub frames: Vec<PitchFrame>,
    pub f0_min_hz: f64,
    pub f0_max_hz: f64,
}

impl PitchTrack {
    pub fn voiced_count(&self) -> usize {
        self.frames.iter().filter(|f| f.voiced).count()
    }

    /// Adjacent record pairs that are both voiced.
    fn voiced_pairs(&self) -> impl Iterator<Item = (&PitchFrame, &PitchFrame)> {
        self.frames
            .windows(2)
            .filter(|w| w[0].voiced && w[1].voiced)
            .map(|w| (&w[0], &w[1]))
    }
}

/// SRH output plus the residual the epochs are read from.
#[derive(Debug, Clone)]
pub struct PitchAnalysis {
    pub track: PitchTrack,
    pub residual: Vec<f64>,
    pub sample_rate_hz: f64,
    pub frame_len: usize,
    pub shift: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceStats {
    pub mean_f0_hz: f64,
    pub jitter_abs_s: Option<f64>,
    pub shimmer_db: Option<f64>,
    pub voiced_fraction: f64,
}

fn hann(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / (n - 1).max(1) as f64).cos())
        .collect()
}

/// Linear interpolation of a bin-indexed spectrum at frequency `f`.
fn interp(spec: &[f64], f: f64, hz_per_bin: f64) -> f64 {
    let pos = f / hz_per_bin;
    let i = pos.floor() as usize;
    if i + 1 >= spec.len() {
        return if i < spec.len() { spec[i] } else { 0.0 };
    }
    let frac = pos - i as f64;
    spec[i] + frac * (spec[i + 1] - spec[i])
}

fn srh_score(spec: &[f64], f: f64, hz_per_bin: f64, cfg: &PitchConfig) -> f64 {
    let mut s = interp(spec, f, hz_per_bin);
    for k in 2..=cfg.n_harm {
        let h = interp(spec, k as f64 * f, hz_per_bin);
        let between = interp(spec, (k as f64 - 0.5) * f, hz_per_bin);
        s += match cfg.srh_variant {
            SrhVariant::Subtractive => h - between,
            SrhVariant::PaperLiteral => h * between,
        };
    }
    s
}

/// Index of the lowest-frequency local maximum scoring within `tolerance`
/// of the global maximum. A flat harmonic comb scores its odd multiples
/// almost exactly like the fundamental; this resolves those near-ties
/// downward.
fn select_candidate(scores: &[f64], tolerance: f64) -> usize {
    let mut best = 0;
    for (c, &s) in scores.iter().enumerate() {
        if s > scores[best] {
            best = c;
        }
    }
    let top = scores[best];
    if !(top > 0.0) {
        return best;
    }
    let floor = top - tolerance * top.abs();
    let n = scores.len();
    (0..n)
        .find(|&c| {
            let s = scores[c];
            let left = c == 0 || scores[c - 1] < s;
            let right = c + 1 == n || scores[c + 1] <= s;
            s >= floor && left && right
        })
        .unwrap_or(best)
}

/// Block-wise inverse filtering: every `shift`-sample block is whitened with
/// the model of the frame centred nearest to it, using true signal history.
fn blockwise_residual(
    x: &[f64],
    models: &[Option<LpModel>],
    frame_len: usize,
    shift: usize,
) -> Vec<f64> {
    let mut e = vec![0.0; x.len()];
    let half = frame_len as f64 / 2.0;
    let last = models.len() - 1;
    for chunk_start in (0..x.len()).step_by(shift) {
        let centre = chunk_start as f64 + shift as f64 / 2.0;
        let j = (((centre - half) / shift as f64).round().max(0.0) as usize).min(last);
        let end = (chunk_start + shift).min(x.len());
        match &models[j] {
            Some(m) => {
                for n in chunk_start..end {
                    let mut pred = 0.0;
                    for (k, a) in m.coefficients.iter().enumerate() {
                        if n > k {
                            pred += a * x[n - k - 1];
                        }
                    }
                    e[n] = x[n] - pred;
                }
            }
            None => e[chunk_start..end].copy_from_slice(&x[chunk_start..end]),
        }
    }
    e
}

/// Runs SRH over a clip and keeps the residual for epoch detection.
pub fn srh_analyze(clip: &AudioClip, cfg: &PitchConfig) -> Result<PitchAnalysis> {
    cfg.validate()?;
    let fs = clip.sample_rate_hz;
    let frame_len = (cfg.frame_len_s * fs).round() as usize;
    let shift = ((cfg.frame_shift_s * fs).round() as usize).max(1);
    let x = &clip.samples;
    if x.len() < frame_len || frame_len < 2 {
        return Err(Error::TooShort {
            needed: frame_len.max(2),
            got: x.len(),
        });
    }
    let n_frames = (x.len() - frame_len) / shift + 1;
    let window = hann(frame_len);

    let models: Vec<Option<LpModel>> = (0..n_frames)
        .map(|i| {
            let seg: Vec<f64> = x[i * shift..i * shift + frame_len]
                .iter()
                .zip(&window)
                .map(|(s, w)| s * w)
                .collect();
            lp::fit_frame(&seg, cfg.lp_order).ok()
        })
        .collect();
    let residual = blockwise_residual(x, &models, frame_len, shift);

    let n_fft = ((fs / cfg.spectrum_resolution_hz).ceil() as usize)
        .max(frame_len)
        .next_power_of_two();
    let hz_per_bin = fs / n_fft as f64;
    let n_cand = ((cfg.f0_max_hz - cfg.f0_min_hz) / cfg.candidate_step_hz).floor() as usize + 1;

    let mut frames = Vec::with_capacity(n_frames);
    for i in 0..n_frames {
        let time_s = (i * shift) as f64 / fs + frame_len as f64 / 2.0 / fs;
        let seg: Vec<f64> = residual[i * shift..i * shift + frame_len]
            .iter()
            .zip(&window)
            .map(|(s, w)| s * w)
            .collect();
        let raw = spectral::dft(&seg, n_fft, fs)?.amplitude();
        let norm = (raw.iter().map(|v| v * v).sum::<f64>() * hz_per_bin).sqrt();
        if !(norm > 0.0) || models[i].is_none() {
            frames.push(PitchFrame {
                time_s,
                f0_hz: None,
                srh_peak: 0.0,
                amplitude: 0.0,
                voiced: false,
            });
            continue;
        }
        let unit: Vec<f64> = raw.iter().map(|v| v / norm).collect();
        let scores: Vec<f64> = (0..n_cand)
            .map(|c| {
                srh_score(
                    &unit,
                    cfg.f0_min_hz + c as f64 * cfg.candidate_step_hz,
                    hz_per_bin,
                    cfg,
                )
            })
            .collect();
        let best = select_candidate(&scores, cfg.tie_tolerance);
        let off = if best > 0 && best + 1 < n_cand {
            parabolic_offset(scores[best - 1], scores[best], scores[best + 1])
        } else {
            0.0
        };
        let f0 = (cfg.f0_min_hz + (best as f64 + off) * cfg.candidate_step_hz)
            .clamp(cfg.f0_min_hz, cfg.f0_max_hz);
        let peak = scores[best];
        let voiced = peak > cfg.voicing_threshold;
        frames.push(PitchFrame {
            time_s,
            f0_hz: voiced.then_some(f0),
            srh_peak: peak,
            amplitude: interp(&raw, f0, hz_per_bin),
            voiced,
        });
    }
    Ok(PitchAnalysis {
        track: PitchTrack {
            frames,
            f0_min_hz: cfg.f0_min_hz,
            f0_max_hz: cfg.f0_max_hz,
        },
        residual,
        sample_rate_hz: fs,
        frame_len,
        shift,
    })
}

/// Frame-level SRH pitch track.
pub fn srh_pitch(clip: &AudioClip, cfg: &PitchConfig) -> Result<PitchTrack> {
    Ok(srh_analyze(clip, cfg)?.track)
}

/// Segments voiced runs into glottal cycles.
///
/// Epochs are the dominant residual peaks (polarity chosen per run), each
/// searched within 0.75..1.25 of the local SRH period after the previous one
/// and refined to sub-sample precision. Each record carries the period to
/// the next epoch and the magnitude of the F0 component of the residual over
/// one period centred on its epoch.
/// An unvoiced record separates runs so that no pair spans a gap.
pub fn glottal_cycles(analysis: &PitchAnalysis) -> PitchTrack {
    let track = &analysis.track;
    let fs = analysis.sample_rate_hz;
    let e = &analysis.residual;
    let half = analysis.frame_len as f64 / 2.0;
    let shift = analysis.shift as f64;
    let mut out = Vec::new();

    let gap = |time_s: f64| PitchFrame {
        time_s,
        f0_hz: None,
        srh_peak: 0.0,
        amplitude: 0.0,
        voiced: false,
    };

    let mut i = 0;
    let frames = &track.frames;
    while i < frames.len() {
        if !frames[i].voiced {
            i += 1;
            continue;
        }
        let a = i;
        while i < frames.len() && frames[i].voiced {
            i += 1;
        }
        let b = i - 1;

        let start = ((a as f64 * shift + half - shift / 2.0).max(0.0)) as usize;
        let end = ((b as f64 * shift + half + shift / 2.0) as usize).min(e.len());
        if end <= start + 2 {
            continue;
        }
        let period_at = |n: usize| -> f64 {
            let j = ((n as f64 - half) / shift)
                .round()
                .clamp(a as f64, b as f64) as usize;
            fs / frames[j].f0_hz.unwrap_or(track.f0_min_hz)
        };
        let region = &e[start..end];
        let pos_peak = region.iter().cloned().fold(f64::MIN, f64::max);
        let neg_peak = region.iter().cloned().fold(f64::MAX, f64::min);
        let sign = if pos_peak >= -neg_peak { 1.0 } else { -1.0 };
        let val = |n: usize| sign * e[n];
        let argmax = |lo: usize, hi: usize| -> usize {
            let mut best = lo;
            for n in lo..hi {
                if val(n) > val(best) {
                    best = n;
                }
            }
            best
        };

        let mut epochs: Vec<usize> = Vec::new();
        let t0 = period_at(start);
        let first_hi = (start + t0.ceil() as usize).min(end);
        epochs.push(argmax(start, first_hi));
        loop {
            let prev = *epochs.last().unwrap();
            let t = period_at(prev);
            let lo = prev + (0.75 * t).floor() as usize;
            let hi = prev + (1.25 * t).ceil() as usize + 1;
            if hi > end || lo <= prev {
                break;
            }
            epochs.push(argmax(lo, hi));
        }
        if epochs.len() < 2 {
            out.push(gap(start as f64 / fs));
            continue;
        }
        let refined: Vec<f64> = epochs
            .iter()
            .map(|&n| {
                if n == 0 || n + 1 >= e.len() {
                    n as f64
                } else {
                    n as f64 + parabolic_offset(val(n - 1), val(n), val(n + 1))
                }
            })
            .collect();
        for w in 0..refined.len() - 1 {
            let period = (refined[w + 1] - refined[w]) / fs;
            let f0 = 1.0 / period;
            let t_loc = period_at(epochs[w]);
            let lo = (refined[w] - t_loc / 2.0).round().max(0.0) as usize;
            let hi = ((refined[w] + t_loc / 2.0).round() as usize).min(e.len());
            let (mut re, mut im) = (0.0, 0.0);
            for (n, v) in e.iter().enumerate().take(hi).skip(lo) {
                let ph = 2.0 * PI * (n as f64 - refined[w]) / t_loc;
                re += v * ph.cos();
                im -= v * ph.sin();
            }
            let amplitude = (re * re + im * im).sqrt();
            let voiced = (track.f0_min_hz..=track.f0_max_hz).contains(&f0);
            out.push(PitchFrame {
                time_s: refined[w] / fs,
                f0_hz: voiced.then_some(f0),
                srh_peak: 0.0,
                amplitude,
                voiced,
            });
        }
        out.push(gap(refined[refined.len() - 1] / fs));
    }
    PitchTrack {
        frames: out,
        f0_min_hz: track.f0_min_hz,
        f0_max_hz: track.f0_max_hz,
    }
}

/// Mean `|T_i - T_{i-1}|` (seconds) over adjacent voiced records.
pub fn jitter_abs(track: &PitchTrack) -> Result<f64> {
    let diffs: Vec<f64> = track
        .voiced_pairs()
        .filter_map(|(p, q)| Some((1.0 / q.f0_hz? - 1.0 / p.f0_hz?).abs()))
        .collect();
    if diffs.is_empty() {
        return Err(Error::InsufficientVoicing(
            "jitter needs two consecutive voiced records".into(),
        ));
    }
    Ok(diffs.iter().sum::<f64>() / diffs.len() as f64)
}

/// Mean `|20 log10(A_{i+1} / A_i)|` (dB) over adjacent voiced records with
/// non-zero amplitude.
pub fn shimmer_db(track: &PitchTrack) -> Result<f64> {
    let diffs: Vec<f64> = track
        .voiced_pairs()
        .filter(|(p, q)| p.amplitude > 0.0 && q.amplitude > 0.0)
        .map(|(p, q)| (20.0 * (q.amplitude / p.amplitude).log10()).abs())
        .collect();
    if diffs.is_empty() {
        return Err(Error::InsufficientVoicing(
            "shimmer needs two consecutive voiced records with non-zero amplitude".into(),
        ));
    }
    Ok(diffs.iter().sum::<f64>() / diffs.len() as f64)
}

/// Mean F0 and voiced fraction from the frame track; jitter and shimmer from
/// `cycles` when given, otherwise from the frame track itself.
pub fn aggregate_source(frames: &PitchTrack, cycles: Option<&PitchTrack>) -> Result<SourceStats> {
    let voiced: Vec<f64> = frames
        .frames
        .iter()
        .filter_map(|f| f.f0_hz.filter(|_| f.voiced))
        .collect();
    if voiced.is_empty() {
        return Err(Error::InsufficientVoicing("no voiced frames".into()));
    }
    let perturb = cycles.unwrap_or(frames);
    Ok(SourceStats {
        mean_f0_hz: voiced.iter().sum::<f64>() / voiced.len() as f64,
        jitter_abs_s: jitter_abs(perturb).ok(),
        shimmer_db: shimmer_db(perturb).ok(),
        voiced_fraction: voiced.len() as f64 / frames.frames.len() as f64,
    })
}

/// Per-frame pitch dump: `frame_index,time_s,f0_hz,srh_peak,voiced`.
pub fn write_pitch_csv(track: &PitchTrack, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::from("frame_index,time_s,f0_hz,srh_peak,voiced\n");
    for (i, f) in track.frames.iter().enumerate() {
        let f0 = f.f0_hz.map(|v| format!("{v:.4}")).unwrap_or_default();
        out.push_str(&format!(
            "{i},{:.4},{f0},{:.6},{}\n",
            f.time_s,
            f.srh_peak,
            u8::from(f.voiced)
        ));
    }
    std::fs::File::create(path)
        .and_then(|mut f| f.write_all(out.as_bytes()))
        .map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal_io::{resample, synthesize_voice, white_noise, SynthesisSpec};

    fn frame(f0: f64, amplitude: f64) -> PitchFrame {
        PitchFrame {
            time_s: 0.0,
            f0_hz: Some(f0),
            srh_peak: 1.0,
            amplitude,
            voiced: true,
        }
    }

    fn track(frames: Vec<PitchFrame>) -> PitchTrack {
        PitchTrack {
            frames,
            f0_min_hz: 70.0,
            f0_max_hz: 400.0,
        }
    }

    /// Synthesised at 16 kHz and resampled, as a recording would be.
    fn pulses(f0: f64, jitter: f64, shimmer: f64, noise: Option<f64>, seed: u64) -> AudioClip {
        resample(&synth(16000.0, f0, jitter, shimmer, noise, seed), 10000.0).unwrap()
    }

    /// Synthesised directly at the analysis rate. Linear-interpolation
    /// resampling alters band-limited pulses by a few percent depending on
    /// their fractional position, which would swamp a 0.1 dB shimmer bound.
    fn native_pulses(
        f0: f64,
        jitter: f64,
        shimmer: f64,
        noise: Option<f64>,
        seed: u64,
    ) -> AudioClip {
        synth(10000.0, f0, jitter, shimmer, noise, seed)
    }

    fn synth(
        fs: f64,
        f0: f64,
        jitter: f64,
        shimmer: f64,
        noise: Option<f64>,
        seed: u64,
    ) -> AudioClip {
        let spec = SynthesisSpec {
            f0_hz: f0,
            f0_jitter_pct: jitter,
            amp_shimmer_db: shimmer,
            formants_hz: vec![],
            duration_s: 1.0,
            noise_db: noise,
            seed,
        };
        synthesize_voice(&spec, fs).unwrap()
    }

    fn mean_f0(t: &PitchTrack) -> f64 {
        let v: Vec<f64> = t.frames.iter().filter_map(|f| f.f0_hz).collect();
        v.iter().sum::<f64>() / v.len() as f64
    }

    #[test]
    fn jitter_closed_forms() {
        let t = track(vec![frame(150.0, 1.0); 5]);
        assert_eq!(jitter_abs(&t).unwrap(), 0.0);
        let t = track(
            (0..6)
                .map(|i| frame(if i % 2 == 0 { 100.0 } else { 101.0 }, 1.0))
                .collect(),
        );
        assert!((jitter_abs(&t).unwrap() - (1.0 / 100.0 - 1.0 / 101.0)).abs() < 1e-15);
        assert!((jitter_abs(&t).unwrap() - 9.901e-5).abs() < 1e-8);
        let t = track(vec![frame(150.0, 1.0)]);
        assert!(matches!(jitter_abs(&t), Err(Error::InsufficientVoicing(_))));
    }

    #[test]
    fn shimmer_closed_forms() {
        let t = track(vec![frame(150.0, 0.3); 4]);
        assert_eq!(shimmer_db(&t).unwrap(), 0.0);
        let t = track(
            (0..6)
                .map(|i| frame(150.0, if i % 2 == 0 { 1.0 } else { 2.0 }))
                .collect(),
        );
        assert!((shimmer_db(&t).unwrap() - 6.0206).abs() < 1e-4);
        let t = track(vec![
            frame(150.0, 0.0),
            frame(150.0, 1.0),
            frame(150.0, 0.0),
        ]);
        assert!(shimmer_db(&t).is_err());
    }

    #[test]
    fn aggregate_boundaries() {
        let s = aggregate_source(&track(vec![frame(200.0, 1.0)]), None).unwrap();
        assert_eq!(s.mean_f0_hz, 200.0);
        assert!(s.jitter_abs_s.is_none() && s.shimmer_db.is_none());

        let s = aggregate_source(&track(vec![frame(150.0, 0.5); 10]), None).unwrap();
        assert_eq!(
            (
                s.mean_f0_hz,
                s.jitter_abs_s,
                s.shimmer_db,
                s.voiced_fraction
            ),
            (150.0, Some(0.0), Some(0.0), 1.0)
        );

        let mut fr = vec![frame(150.0, 0.5); 10];
        for f in fr.iter_mut().skip(5) {
            f.voiced = false;
            f.f0_hz = None;
        }
        let s = aggregate_source(&track(fr.clone()), None).unwrap();
        assert!((s.voiced_fraction - 0.5).abs() <= 0.1);
        for f in fr.iter_mut() {
            f.voiced = false;
            f.f0_hz = None;
        }
        assert!(aggregate_source(&track(fr), None).is_err());
    }

    #[test]
    fn clean_pulse_train_pitch() {
        let clip = pulses(150.0, 0.0, 0.0, None, 1);
        let t = srh_pitch(&clip, &PitchConfig::default()).unwrap();
        assert!(t.frames.iter().all(|f| f.voiced));
        assert!((mean_f0(&t) - 150.0).abs() < 5.0);
    }

    #[test]
    fn no_octave_error_at_100_hz() {
        let clip = pulses(100.0, 0.0, 0.0, None, 2);
        let t = srh_pitch(&clip, &PitchConfig::default()).unwrap();
        let v: Vec<f64> = t.frames.iter().filter_map(|f| f.f0_hz).collect();
        let good = v.iter().filter(|f| (*f - 100.0).abs() < 5.0).count();
        assert!(good as f64 >= 0.9 * v.len() as f64);
    }

    #[test]
    fn white_noise_mostly_unvoiced() {
        let clip = white_noise(0.3, 1.0, 10000.0, 17);
        let t = srh_pitch(&clip, &PitchConfig::default()).unwrap();
        let frac = t.voiced_count() as f64 / t.frames.len() as f64;
        assert!(frac < 0.2, "voiced fraction {frac}");
    }

    #[test]
    fn too_short_clip() {
        let clip = AudioClip::new(vec![0.1; 500], 10000.0, "s").unwrap();
        assert!(matches!(
            srh_pitch(&clip, &PitchConfig::default()),
            Err(Error::TooShort { .. })
        ));
    }

    #[test]
    fn pitch_inside_range_for_varied_f0() {
        for f0 in [80.0, 120.0, 180.0, 250.0, 350.0] {
            let clip = pulses(f0, 0.0, 0.0, None, 3);
            let t = srh_pitch(&clip, &PitchConfig::default()).unwrap();
            assert!(t
                .frames
                .iter()
                .filter_map(|f| f.f0_hz)
                .all(|f| (70.0..=400.0).contains(&f)));
            assert!((mean_f0(&t) - f0).abs() < 5.0, "f0 {f0}: {}", mean_f0(&t));
        }
    }

    #[test]
    fn cycle_jitter_and_shimmer_recover_injection() {
        let cfg = PitchConfig::default();
        let clean = srh_analyze(&native_pulses(150.0, 0.0, 0.0, None, 4), &cfg).unwrap();
        let cyc = glottal_cycles(&clean);
        assert!(jitter_abs(&cyc).unwrap() < 1e-4);
        assert!(shimmer_db(&cyc).unwrap() < 0.1);

        // E|dT| for i.i.d. uniform period perturbation of +-2%: T0 * 2 * 0.02 / 3
        let expected = 2.0 * 0.02 / 3.0 / 150.0;
        let jit = srh_analyze(&pulses(150.0, 2.0, 0.0, None, 5), &cfg).unwrap();
        let j = jitter_abs(&glottal_cycles(&jit)).unwrap();
        assert!(
            j >= 0.5 * expected && j <= 2.0 * expected,
            "jitter {j} vs {expected}"
        );

        let shim = srh_analyze(&pulses(150.0, 0.0, 1.0, None, 6), &cfg).unwrap();
        let s = shimmer_db(&glottal_cycles(&shim)).unwrap();
        assert!((0.5..=2.0).contains(&s), "shimmer {s}");
    }

    #[test]
    fn perturbation_measures_scale_free() {
        let cfg = PitchConfig::default();
        let clip = pulses(180.0, 1.5, 0.8, Some(-30.0), 8);
        let scaled = clip.with_samples(clip.samples.iter().map(|s| s * 0.3).collect());
        let a = glottal_cycles(&srh_analyze(&clip, &cfg).unwrap());
        let b = glottal_cycles(&srh_analyze(&scaled, &cfg).unwrap());
        assert!((jitter_abs(&a).unwrap() - jitter_abs(&b).unwrap()).abs() < 1e-6);
        assert!((shimmer_db(&a).unwrap() - shimmer_db(&b).unwrap()).abs() < 1e-6);
    }

    #[test]
    fn literal_variant_runs() {
        let cfg = PitchConfig {
            srh_variant: SrhVariant::PaperLiteral,
            voicing_threshold: 0.0,
            ..Default::default()
        };
        let t = srh_pitch(&pulses(200.0, 0.0, 0.0, None, 9), &cfg).unwrap();
        assert!(t
            .frames
            .iter()
            .filter_map(|f| f.f0_hz)
            .all(|f| (70.0..=400.0).contains(&f)));
    }
}
