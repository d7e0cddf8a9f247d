//! Two-class synthetic voice corpus: per-class F0 and formant
//! distributions, written as WAV files with JSON ground-truth sidecars and
//! a labels table.

use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::Label;
use crate::signal_io::{
    save_wav, synthesize_voice, white_noise, AudioClip, SynthesisSpec, WavEncoding,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassSpec {
    pub label: Label,
    pub count: usize,
    pub f0_mean_hz: f64,
    pub f0_sd_hz: f64,
    /// Formant centre means, strictly increasing.
    pub formant_means_hz: Vec<f64>,
    #[serde(default = "default_formant_sd")]
    pub formant_sd_hz: f64,
    /// One bandwidth per formant.
    pub bandwidths_hz: Vec<f64>,
    #[serde(default)]
    pub jitter_pct: f64,
    #[serde(default)]
    pub shimmer_db: f64,
}

fn default_formant_sd() -> f64 {
    40.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorpusSpec {
    pub seed: u64,
    pub sample_rate_hz: f64,
    pub duration_s: f64,
    /// White noise over the voiced part, dB re its RMS; `None` for clean audio.
    pub noise_db: Option<f64>,
    /// Length of a noise-only lead-in before the voice, seconds.
    pub lead_in_s: f64,
    /// Lead-in noise level, dB re the voiced part's peak.
    pub lead_in_db: f64,
    pub classes: Vec<ClassSpec>,
}

impl Default for CorpusSpec {
    fn default() -> Self {
        CorpusSpec {
            seed: 0,
            sample_rate_hz: 16_000.0,
            duration_s: 1.0,
            noise_db: Some(-35.0),
            lead_in_s: 0.15,
            lead_in_db: -60.0,
            classes: vec![
                ClassSpec {
                    label: Label::Asd,
                    count: 40,
                    f0_mean_hz: 280.0,
                    f0_sd_hz: 15.0,
                    formant_means_hz: vec![850.0, 1500.0, 2700.0, 3600.0, 4400.0],
                    formant_sd_hz: 40.0,
                    bandwidths_hz: vec![80.0, 100.0, 120.0, 150.0, 200.0],
                    jitter_pct: 1.0,
                    shimmer_db: 0.5,
                },
                ClassSpec {
                    label: Label::Td,
                    count: 40,
                    f0_mean_hz: 210.0,
                    f0_sd_hz: 15.0,
                    formant_means_hz: vec![650.0, 1200.0, 2400.0, 3300.0, 4200.0],
                    formant_sd_hz: 40.0,
                    bandwidths_hz: vec![80.0, 100.0, 120.0, 150.0, 200.0],
                    jitter_pct: 0.5,
                    shimmer_db: 0.3,
                },
            ],
        }
    }
}

impl CorpusSpec {
    pub fn from_toml(text: &str) -> Result<Self> {
        let spec: CorpusSpec =
            toml::from_str(text).map_err(|e| Error::Config(format!("corpus spec: {e}")))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let nyquist = self.sample_rate_hz / 2.0;
        if !(self.sample_rate_hz >= 8000.0 && self.sample_rate_hz.is_finite()) {
            return Err(Error::Config(format!(
                "sample_rate_hz {} must be >= 8000",
                self.sample_rate_hz
            )));
        }
        if !(self.duration_s >= 0.3 && self.duration_s.is_finite()) {
            return Err(Error::Config(format!(
                "duration_s {} must be >= 0.3",
                self.duration_s
            )));
        }
        if !(self.lead_in_s >= 0.0 && self.lead_in_s.is_finite() && self.lead_in_db.is_finite()) {
            return Err(Error::Config(
                "lead_in_s must be >= 0 and lead_in_db finite".into(),
            ));
        }
        if self.classes.is_empty() {
            return Err(Error::Config("corpus spec has no classes".into()));
        }
        for (i, c) in self.classes.iter().enumerate() {
            let at = format!("classes[{i}] ({})", c.label);
            if !(c.f0_mean_hz > 0.0 && c.f0_mean_hz < nyquist) {
                return Err(Error::Config(format!(
                    "{at}.f0_mean_hz {} must lie in (0, {nyquist})",
                    c.f0_mean_hz
                )));
            }
            if !(c.f0_sd_hz >= 0.0 && c.formant_sd_hz >= 0.0) {
                return Err(Error::Config(format!(
                    "{at}: standard deviations must be >= 0"
                )));
            }
            if c.bandwidths_hz.len() != c.formant_means_hz.len() {
                return Err(Error::Config(format!(
                    "{at}: {} bandwidths for {} formants",
                    c.bandwidths_hz.len(),
                    c.formant_means_hz.len()
                )));
            }
            if c.formant_means_hz.windows(2).any(|w| w[1] <= w[0])
                || c.formant_means_hz
                    .iter()
                    .any(|&f| !(f > 0.0 && f < nyquist))
            {
                return Err(Error::Config(format!(
                    "{at}.formant_means_hz must increase strictly within (0, {nyquist})"
                )));
            }
            if c.bandwidths_hz.iter().any(|&b| !(b > 0.0)) {
                return Err(Error::Config(format!("{at}.bandwidths_hz must be > 0")));
            }
            if !(0.0..50.0).contains(&c.jitter_pct) || !(c.shimmer_db >= 0.0) {
                return Err(Error::Config(format!(
                    "{at}: jitter_pct in [0, 50), shimmer_db >= 0"
                )));
            }
        }
        Ok(())
    }

    pub fn total(&self) -> usize {
        self.classes.iter().map(|c| c.count).sum()
    }
}

/// Ground truth for one generated recording (the JSON sidecar).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusEntry {
    pub id: String,
    pub label: Label,
    pub sample_rate_hz: f64,
    pub lead_in_s: f64,
    pub lead_in_db: f64,
    pub voice: SynthesisSpec,
}

/// Draws every recording's parameters from one seeded stream, in class order.
pub fn plan_corpus(spec: &CorpusSpec) -> Result<Vec<CorpusEntry>> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let nyquist = spec.sample_rate_hz / 2.0;
    let mut entries = Vec::with_capacity(spec.total());
    for c in &spec.classes {
        let f0_dist =
            Normal::new(c.f0_mean_hz, c.f0_sd_hz).map_err(|e| Error::Config(e.to_string()))?;
        let fdist = Normal::new(0.0, c.formant_sd_hz).map_err(|e| Error::Config(e.to_string()))?;
        for i in 0..c.count {
            let f0 = f0_dist.sample(&mut rng).clamp(50.0, nyquist * 0.9);
            let mut formants: Vec<(f64, f64)> = Vec::with_capacity(c.formant_means_hz.len());
            for (&m, &bw) in c.formant_means_hz.iter().zip(&c.bandwidths_hz) {
                let lo = formants.last().map_or(50.0, |f| f.0 + 50.0);
                let f = (m + fdist.sample(&mut rng)).max(lo).min(nyquist - 50.0);
                formants.push((f, bw));
            }
            if formants.windows(2).any(|w| w[1].0 <= w[0].0) {
                return Err(Error::Config(format!(
                    "{}: formants too crowded below Nyquist",
                    c.label
                )));
            }
            let id = format!("{}_{:03}", c.label.to_string().to_lowercase(), i + 1);
            entries.push(CorpusEntry {
                id,
                label: c.label,
                sample_rate_hz: spec.sample_rate_hz,
                lead_in_s: spec.lead_in_s,
                lead_in_db: spec.lead_in_db,
                voice: SynthesisSpec {
                    f0_hz: f0,
                    f0_jitter_pct: c.jitter_pct,
                    amp_shimmer_db: c.shimmer_db,
                    formants_hz: formants,
                    duration_s: spec.duration_s,
                    noise_db: spec.noise_db,
                    seed: rand::Rng::random(&mut rng),
                },
            });
        }
    }
    Ok(entries)
}

/// Renders one entry: optional noise-only lead-in followed by the voice.
pub fn render_entry(entry: &CorpusEntry) -> Result<AudioClip> {
    let voice = synthesize_voice(&entry.voice, entry.sample_rate_hz)?;
    let lead_n = (entry.lead_in_s * entry.sample_rate_hz).round() as usize;
    let mut samples = Vec::with_capacity(lead_n + voice.len());
    if lead_n > 0 {
        let peak = voice.samples.iter().fold(0.0f64, |m, s| m.max(s.abs()));
        let sigma = peak * 10f64.powf(entry.lead_in_db / 20.0);
        let lead = white_noise(
            sigma,
            entry.lead_in_s,
            entry.sample_rate_hz,
            entry.voice.seed ^ 0x5eed,
        );
        samples.extend_from_slice(&lead.samples[..lead_n.min(lead.len())]);
    }
    samples.extend_from_slice(&voice.samples);
    AudioClip::new(samples, entry.sample_rate_hz, entry.id.clone())
}

#[derive(Debug, Clone, PartialEq)]
pub struct WrittenCorpus {
    pub entries: Vec<CorpusEntry>,
    pub wav_paths: Vec<PathBuf>,
    pub labels_path: PathBuf,
}

/// Writes `<id>.wav`, `<id>.json` and `labels.csv` into `out_dir`.
pub fn write_corpus(spec: &CorpusSpec, out_dir: impl AsRef<Path>) -> Result<WrittenCorpus> {
    let out = out_dir.as_ref();
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let entries = plan_corpus(spec)?;
    let wav_paths = entries
        .par_iter()
        .map(|e| {
            let clip = render_entry(e)?;
            let wav = out.join(format!("{}.wav", e.id));
            save_wav(&clip, &wav, WavEncoding::Pcm16)?;
            let side = out.join(format!("{}.json", e.id));
            let text =
                serde_json::to_string_pretty(e).map_err(|err| Error::Format(err.to_string()))?;
            std::fs::write(&side, text + "\n").map_err(|err| Error::io(&side, err))?;
            Ok(wav)
        })
        .collect::<Result<Vec<_>>>()?;
    let labels_path = out.join("labels.csv");
    write_labels(
        &labels_path,
        entries.iter().map(|e| (e.id.as_str(), e.label)),
    )?;
    Ok(WrittenCorpus {
        entries,
        wav_paths,
        labels_path,
    })
}

pub fn write_labels<'a>(path: &Path, rows: impl Iterator<Item = (&'a str, Label)>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)
        .map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
    let csv_err = |e: csv::Error| Error::Format(format!("{}: {e}", path.display()));
    w.write_record(["id", "label"]).map_err(csv_err)?;
    for (id, label) in rows {
        w.write_record([id, &label.to_string()]).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Reads a two-column `id,label` table. A header row is optional.
pub fn read_labels(path: impl AsRef<Path>) -> Result<Vec<(String, Label)>> {
    let path = path.as_ref();
    let mut r = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
    let mut out = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
        if rec.len() != 2 {
            return Err(Error::Parse {
                row: i + 1,
                column: "label".into(),
                message: format!("expected 2 fields, got {}", rec.len()),
            });
        }
        if i == 0 && rec[0].eq_ignore_ascii_case("id") && rec[1].eq_ignore_ascii_case("label") {
            continue;
        }
        let label = rec[1].parse::<Label>().map_err(|e| Error::Parse {
            row: i + 1,
            column: "label".into(),
            message: e.to_string(),
        })?;
        out.push((rec[0].to_string(), label));
    }
    Ok(out)
}
