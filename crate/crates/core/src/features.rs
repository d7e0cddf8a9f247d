//! Frame energy and zero-crossing rate, per-recording aggregation into the
//! 36-attribute feature vector, labelled datasets and their CSV form.

use std::collections::HashSet;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lp::{extract_dominants, extract_formants, fit_frame, lpcc, LPCC_ORDER};
use crate::mfcc::{build_filterbank, mfcc, MFCC_N_FFT, N_COEFFS, N_FILTERS};
use crate::preprocess::{
    apply_hamming, frame_signal, gate_window_len, noise_gate, pre_emphasize, trim_bounds,
    z_normalize, FrameSequence, PreprocessConfig,
};
use crate::signal_io::{resample, AudioClip};
use crate::source::{aggregate_source, glottal_cycles, srh_analyze, PitchConfig};

pub const N_FEATURES: usize = 36;

/// Canonical column order. `mfcc_1` holds c(0).
pub const FEATURE_NAMES: [&str; N_FEATURES] = [
    "f0",
    "zcr",
    "energy",
    "f1",
    "f2",
    "f3",
    "f4",
    "f5",
    "fd1",
    "fd2",
    "mfcc_1",
    "mfcc_2",
    "mfcc_3",
    "mfcc_4",
    "mfcc_5",
    "mfcc_6",
    "mfcc_7",
    "mfcc_8",
    "mfcc_9",
    "mfcc_10",
    "mfcc_11",
    "mfcc_12",
    "lpcc_1",
    "lpcc_2",
    "lpcc_3",
    "lpcc_4",
    "lpcc_5",
    "lpcc_6",
    "lpcc_7",
    "lpcc_8",
    "lpcc_9",
    "lpcc_10",
    "lpcc_11",
    "lpcc_12",
    "shimmer_db",
    "jitter_s",
];

pub const ANALYSIS_RATE_HZ: f64 = 10_000.0;

/// Frames whose max-normalised energy is below this are silent for the
/// spectral feature families (-60 dB).
pub const SILENT_FRAME_ENERGY: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Label {
    #[serde(rename = "ASD")]
    Asd,
    #[serde(rename = "TD")]
    Td,
}

impl Label {
    pub fn is_positive(self) -> bool {
        self == Label::Asd
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Label::Asd => "ASD",
            Label::Td => "TD",
        })
    }
}

impl FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "ASD" => Ok(Label::Asd),
            "TD" => Ok(Label::Td),
            other => Err(Error::Argument(format!("unknown label {other:?}"))),
        }
    }
}

/// One recording's 36 attributes in [`FEATURE_NAMES`] order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    values: Vec<f64>,
}

impl FeatureVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() != N_FEATURES {
            return Err(Error::Schema(format!(
                "expected {N_FEATURES} attributes, got {}",
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Argument(format!(
                "attribute {} is not finite",
                FEATURE_NAMES[i]
            )));
        }
        Ok(FeatureVector { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        FEATURE_NAMES
            .iter()
            .position(|n| *n == name)
            .map(|i| self.values[i])
    }
}

/// Per-frame mean-square energy divided by its maximum over frames.
pub fn frame_energy(fs: &FrameSequence) -> Result<Vec<f64>> {
    if fs.is_empty() {
        return Err(Error::EmptyInput("no frames".into()));
    }
    let raw: Vec<f64> = fs
        .frames
        .iter()
        .map(|f| f.iter().map(|x| x * x).sum::<f64>() / f.len() as f64)
        .collect();
    let max = raw.iter().cloned().fold(0.0, f64::max);
    if !(max > 0.0) {
        return Err(Error::Degenerate("every frame has zero energy".into()));
    }
    Ok(raw.iter().map(|e| e / max).collect())
}

/// Sign changes between adjacent samples over `N - 1`; zero counts as positive.
pub fn frame_zcr(fs: &FrameSequence) -> Result<Vec<f64>> {
    if fs.is_empty() {
        return Err(Error::EmptyInput("no frames".into()));
    }
    Ok(fs
        .frames
        .iter()
        .map(|f| {
            if f.len() < 2 {
                return 0.0;
            }
            let changes = f
                .windows(2)
                .filter(|w| (w[0] >= 0.0) != (w[1] >= 0.0))
                .count();
            changes as f64 / (f.len() - 1) as f64
        })
        .collect())
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeatureConfig {
    pub preprocess: PreprocessConfig,
    pub pitch: PitchConfig,
}

impl FeatureConfig {
    pub fn validate(&self) -> Result<()> {
        self.preprocess.validate()?;
        self.pitch.validate()
    }
}

/// Frames that contributed to each feature family.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FrameCounts {
    pub total: usize,
    pub voiced: usize,
    pub glottal_cycles: usize,
    pub formant: usize,
    pub dominant: usize,
    /// Frames in which F1..F5 were individually found.
    pub formant_hits: [usize; 5],
    pub dominant_hits: [usize; 2],
    pub mfcc: usize,
    pub lpcc: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordingAnalysis {
    pub features: FeatureVector,
    pub counts: FrameCounts,
    /// False when no noise-only lead-in was long enough to profile.
    pub gate_applied: bool,
    pub voiced_fraction: f64,
}

/// Trim, gate, pre-emphasis and z-normalisation, then resampling to the
/// analysis rate. The noise profile is whatever trimming removed from the
/// start of the clip (or, failing that, the end), provided it covers at
/// least 50 ms and one gate window; otherwise gating is skipped.
pub fn condition_clip(clip: &AudioClip, cfg: &PreprocessConfig) -> Result<(AudioClip, bool)> {
    cfg.validate()?;
    let (start, end) = trim_bounds(clip, cfg.silence_threshold_db)?;
    let trimmed = clip.with_samples(clip.samples[start..end].to_vec());
    let lead = &clip.samples[..start];
    let tail = &clip.samples[end..];
    let needed =
        gate_window_len(clip.sample_rate_hz).max((0.05 * clip.sample_rate_hz).ceil() as usize);
    let profile = [lead, tail].into_iter().find(|p| p.len() >= needed);

    let (gated, applied) = match profile {
        Some(p) => (
            noise_gate(&trimmed, &trimmed.with_samples(p.to_vec()), cfg)?,
            true,
        ),
        None => (trimmed, false),
    };
    let emphasised = pre_emphasize(&gated, cfg.pre_emphasis_alpha)?;
    let normalised = z_normalize(&emphasised)?;
    Ok((resample(&normalised, ANALYSIS_RATE_HZ)?, applied))
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn require(count: usize, family: &str) -> Result<()> {
    if count == 0 {
        Err(Error::EmptyResult(format!("no usable frames for {family}")))
    } else {
        Ok(())
    }
}

/// Full chain for one recording with per-family frame counts.
pub fn analyze_recording(clip: &AudioClip, cfg: &FeatureConfig) -> Result<RecordingAnalysis> {
    let run = || -> Result<RecordingAnalysis> {
        cfg.validate()?;
        let (x, gate_applied) = condition_clip(clip, &cfg.preprocess)?;
        let fs = x.sample_rate_hz;

        let raw = frame_signal(&x, &cfg.preprocess)?;
        let windowed = apply_hamming(&raw)?;
        let energy = frame_energy(&windowed)?;
        let zcr = frame_zcr(&raw)?;

        let bank = build_filterbank(
            fs,
            MFCC_N_FFT.max(windowed.frame_len.next_power_of_two()),
            N_FILTERS,
        )?;
        let mut formants: [Vec<f64>; 5] = Default::default();
        let mut dominants: [Vec<f64>; 2] = Default::default();
        let mut mfccs: Vec<Vec<f64>> = Vec::new();
        let mut lpccs: Vec<Vec<f64>> = Vec::new();
        let mut counts = FrameCounts {
            total: windowed.len(),
            ..Default::default()
        };
        for (frame, e) in windowed.frames.iter().zip(&energy) {
            if *e < SILENT_FRAME_ENERGY {
                continue;
            }
            if let Ok(set) = extract_formants(frame, fs) {
                counts.formant += 1;
                for (acc, f) in formants.iter_mut().zip(set.formants) {
                    acc.extend(f);
                }
            }
            if let Ok(d) = extract_dominants(frame, fs) {
                counts.dominant += 1;
                dominants[0].extend(d.fd1);
                dominants[1].extend(d.fd2);
            }
            if let Some(c) = mfcc(frame, &bank, N_COEFFS)? {
                counts.mfcc += 1;
                mfccs.push(c);
            }
            if let Ok(model) = fit_frame(frame, LPCC_ORDER) {
                counts.lpcc += 1;
                lpccs.push(lpcc(&model, LPCC_ORDER)?);
            }
        }

        let analysis = srh_analyze(&x, &cfg.pitch)?;
        let cycles = glottal_cycles(&analysis);
        let source = aggregate_source(&analysis.track, Some(&cycles))?;
        counts.voiced = analysis.track.voiced_count();
        counts.glottal_cycles = cycles.voiced_count();
        let jitter = source.jitter_abs_s.ok_or_else(|| {
            Error::InsufficientVoicing("no consecutive glottal cycles for jitter".into())
        })?;
        let shimmer = source.shimmer_db.ok_or_else(|| {
            Error::InsufficientVoicing("no consecutive glottal cycles for shimmer".into())
        })?;

        require(counts.formant, "formants")?;
        require(counts.dominant, "dominant frequencies")?;
        require(counts.mfcc, "MFCC")?;
        require(counts.lpcc, "LPCC")?;

        let mut values = vec![source.mean_f0_hz, mean(&zcr), mean(&energy)];
        for (i, f) in formants.iter().enumerate() {
            counts.formant_hits[i] = f.len();
        }
        for (i, f) in dominants.iter().enumerate() {
            counts.dominant_hits[i] = f.len();
        }
        // a peak that never appears (fewer resonances than slots) is reported as 0 Hz
        for (i, f) in formants.iter().chain(&dominants).enumerate() {
            if f.is_empty() {
                log::info!(
                    "{}: no frame produced {}; reporting 0",
                    clip.source_id,
                    FEATURE_NAMES[3 + i]
                );
                values.push(0.0);
            } else {
                values.push(mean(f));
            }
        }
        for family in [&mfccs, &lpccs] {
            for j in 0..12 {
                values.push(family.iter().map(|c| c[j]).sum::<f64>() / family.len() as f64);
            }
        }
        values.push(shimmer);
        values.push(jitter);
        log::debug!(
            "{}: frame counts {:?}, gate applied {gate_applied}",
            clip.source_id,
            counts
        );

        Ok(RecordingAnalysis {
            features: FeatureVector::new(values)?,
            counts,
            gate_applied,
            voiced_fraction: source.voiced_fraction,
        })
    };
    run().map_err(|e| e.for_recording(clip.source_id.clone()))
}

pub fn extract_features(clip: &AudioClip, cfg: &FeatureConfig) -> Result<FeatureVector> {
    analyze_recording(clip, cfg).map(|a| a.features)
}

/// Rows of named numeric attributes with a class label and recording id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledDataset {
    pub names: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub labels: Vec<Label>,
    pub ids: Vec<String>,
}

impl LabeledDataset {
    pub fn new(
        names: Vec<String>,
        rows: Vec<Vec<f64>>,
        labels: Vec<Label>,
        ids: Vec<String>,
    ) -> Result<Self> {
        if rows.len() != labels.len() || rows.len() != ids.len() {
            return Err(Error::Schema(format!(
                "{} rows, {} labels, {} ids",
                rows.len(),
                labels.len(),
                ids.len()
            )));
        }
        if let Some(r) = rows.iter().position(|r| r.len() != names.len()) {
            return Err(Error::Schema(format!(
                "row {r} has {} values for {} attributes",
                rows[r].len(),
                names.len()
            )));
        }
        let mut seen = HashSet::new();
        if let Some(dup) = names.iter().find(|n| !seen.insert(n.as_str())) {
            return Err(Error::Schema(format!("duplicate attribute {dup}")));
        }
        Ok(LabeledDataset {
            names,
            rows,
            labels,
            ids,
        })
    }

    pub fn from_vectors(
        vectors: Vec<FeatureVector>,
        labels: Vec<Label>,
        ids: Vec<String>,
    ) -> Result<Self> {
        let names = FEATURE_NAMES.iter().map(|s| s.to_string()).collect();
        Self::new(
            names,
            vectors.into_iter().map(|v| v.values).collect(),
            labels,
            ids,
        )
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.names.len()
    }

    /// `(ASD, TD)` row counts.
    pub fn class_counts(&self) -> (usize, usize) {
        let asd = self.labels.iter().filter(|l| l.is_positive()).count();
        (asd, self.labels.len() - asd)
    }

    pub fn require_both_classes(&self) -> Result<()> {
        let (a, t) = self.class_counts();
        if a == 0 || t == 0 {
            return Err(Error::Argument(format!(
                "both classes required, got ASD {a}, TD {t}"
            )));
        }
        Ok(())
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r[j]).collect()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// Keeps the named attributes in the given order.
    pub fn project(&self, names: &[String]) -> Result<Self> {
        let idx: Vec<usize> = names
            .iter()
            .map(|n| {
                self.index_of(n)
                    .ok_or_else(|| Error::Schema(format!("unknown attribute {n}")))
            })
            .collect::<Result<_>>()?;
        let rows = self
            .rows
            .iter()
            .map(|r| idx.iter().map(|&j| r[j]).collect())
            .collect();
        Self::new(names.to_vec(), rows, self.labels.clone(), self.ids.clone())
    }

    /// Rows at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Self {
        LabeledDataset {
            names: self.names.clone(),
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            ids: indices.iter().map(|&i| self.ids[i].clone()).collect(),
        }
    }

    pub fn with_labels(&self, labels: Vec<Label>) -> Result<Self> {
        Self::new(
            self.names.clone(),
            self.rows.clone(),
            labels,
            self.ids.clone(),
        )
    }
}

/// Twelve significant digits.
pub fn format_value(v: f64) -> String {
    format!("{v:.11e}")
}

/// Header: attribute names, then `label`, then `id`.
pub fn write_csv(ds: &LabeledDataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    let mut header: Vec<&str> = ds.names.iter().map(String::as_str).collect();
    header.extend(["label", "id"]);
    w.write_record(&header).map_err(|e| csv_error(path, e))?;
    for ((row, label), id) in ds.rows.iter().zip(&ds.labels).zip(&ds.ids) {
        let mut rec: Vec<String> = row.iter().map(|v| format_value(*v)).collect();
        rec.push(label.to_string());
        rec.push(id.clone());
        w.write_record(&rec).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Format(format!("{}: {other:?}", path.display())),
    }
}

/// Reads a feature table. Attribute columns must be canonical feature names;
/// `label` and `id` are required.
pub fn read_csv(path: impl AsRef<Path>) -> Result<LabeledDataset> {
    let t = read_table(path.as_ref(), true)?;
    LabeledDataset::new(t.names, t.rows, t.labels.unwrap_or_default(), t.ids)
}

/// A feature table whose `label` column may be absent.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable {
    pub names: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub ids: Vec<String>,
    pub labels: Option<Vec<Label>>,
}

pub fn read_unlabeled_csv(path: impl AsRef<Path>) -> Result<FeatureTable> {
    read_table(path.as_ref(), false)
}

fn read_table(path: &Path, require_label: bool) -> Result<FeatureTable> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let header: Vec<String> = r
        .headers()
        .map_err(|e| csv_error(path, e))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let label_col = header.iter().position(|h| h == "label");
    if require_label && label_col.is_none() {
        return Err(Error::Schema("missing label column".into()));
    }
    let id_col = header
        .iter()
        .position(|h| h == "id")
        .ok_or_else(|| Error::Schema("missing id column".into()))?;
    let mut names = Vec::new();
    let mut cols = Vec::new();
    for (c, h) in header.iter().enumerate() {
        if Some(c) == label_col || c == id_col {
            continue;
        }
        if !FEATURE_NAMES.contains(&h.as_str()) {
            return Err(Error::Schema(format!("unknown column {h:?}")));
        }
        names.push(h.clone());
        cols.push(c);
    }

    let mut rows = Vec::new();
    let mut labels = Vec::new();
    let mut ids = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let row_no = i + 2;
        let rec = rec.map_err(|e| Error::Parse {
            row: row_no,
            column: String::new(),
            message: e.to_string(),
        })?;
        let cell = |c: usize| rec.get(c).unwrap_or("").trim();
        let row = cols
            .iter()
            .map(|&c| {
                cell(c).parse::<f64>().map_err(|e| Error::Parse {
                    row: row_no,
                    column: header[c].clone(),
                    message: format!("{:?}: {e}", cell(c)),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        if let Some(lc) = label_col {
            labels.push(cell(lc).parse::<Label>().map_err(|e| Error::Parse {
                row: row_no,
                column: "label".into(),
                message: e.to_string(),
            })?);
        }
        ids.push(cell(id_col).to_string());
        rows.push(row);
    }
    Ok(FeatureTable {
        names,
        rows,
        ids,
        labels: label_col.map(|_| labels),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal_io::{synthesize_voice, tone, white_noise, SynthesisSpec};
    use std::f64::consts::PI;

    fn seq(frames: Vec<Vec<f64>>) -> FrameSequence {
        FrameSequence {
            frame_len: frames[0].len(),
            frames,
            shift: 1,
            sample_rate_hz: 10000.0,
            windowed: false,
        }
    }

    #[test]
    fn energy_normalisation() {
        let e = frame_energy(&seq(vec![vec![0.5; 10]; 4])).unwrap();
        assert!(e.iter().all(|v| *v == 1.0));
        let e = frame_energy(&seq(vec![vec![0.1; 10], vec![0.9; 10], vec![0.2; 10]])).unwrap();
        assert_eq!(e.iter().filter(|v| **v == 1.0).count(), 1);
        let a = seq(vec![vec![0.1, -0.3, 0.2], vec![0.4, 0.0, -0.1]]);
        let b = seq(a
            .frames
            .iter()
            .map(|f| f.iter().map(|x| 2.0 * x).collect())
            .collect());
        for (x, y) in frame_energy(&a)
            .unwrap()
            .iter()
            .zip(frame_energy(&b).unwrap())
        {
            assert!((x - y).abs() < 1e-9);
        }
        assert!(matches!(
            frame_energy(&seq(vec![vec![0.0; 5]; 2])),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn zero_crossing_rates() {
        let alt: Vec<f64> = (0..20)
            .map(|i| if i % 2 == 0 { 1.0 } else { -1.0 })
            .collect();
        assert_eq!(frame_zcr(&seq(vec![alt])).unwrap()[0], 1.0);
        assert_eq!(frame_zcr(&seq(vec![vec![0.3; 20]])).unwrap()[0], 0.0);
        assert_eq!(frame_zcr(&seq(vec![vec![0.0, -1.0, 0.0]])).unwrap()[0], 1.0);
        let sine: Vec<f64> = (0..250)
            .map(|n| (2.0 * PI * 100.0 * n as f64 / 10000.0 + 0.3).sin())
            .collect();
        let z = frame_zcr(&seq(vec![sine])).unwrap()[0];
        assert!((z - 0.02).abs() <= 0.005, "{z}");
    }

    #[test]
    fn names_are_canonical() {
        assert_eq!(FEATURE_NAMES.len(), 36);
        let set: HashSet<_> = FEATURE_NAMES.iter().collect();
        assert_eq!(set.len(), 36);
        assert!(FeatureVector::new(vec![0.0; 35]).is_err());
        assert!(FeatureVector::new(vec![f64::NAN; 36]).is_err());
        let v = FeatureVector::new((0..36).map(f64::from).collect()).unwrap();
        assert_eq!(v.get("jitter_s"), Some(35.0));
        assert_eq!(v.get("nope"), None);
    }

    #[test]
    fn labels_order_and_parse() {
        assert!(Label::Asd < Label::Td);
        assert_eq!("td".parse::<Label>().unwrap(), Label::Td);
        assert_eq!(Label::Asd.to_string(), "ASD");
        assert!("X".parse::<Label>().is_err());
    }

    fn vowel(f0: f64, formants: Vec<(f64, f64)>, seed: u64) -> AudioClip {
        let spec = SynthesisSpec {
            f0_hz: f0,
            f0_jitter_pct: 0.5,
            amp_shimmer_db: 0.3,
            formants_hz: formants,
            duration_s: 1.0,
            noise_db: Some(-35.0),
            seed,
        };
        synthesize_voice(&spec, 16000.0).unwrap()
    }

    #[test]
    fn synthetic_vowel_features() {
        let clip = vowel(150.0, vec![(700.0, 80.0), (1200.0, 100.0)], 3);
        let a = analyze_recording(&clip, &FeatureConfig::default()).unwrap();
        let v = &a.features;
        assert!(
            (v.get("f0").unwrap() - 150.0).abs() < 5.0,
            "f0 {:?}",
            v.get("f0")
        );
        assert!(
            (v.get("f1").unwrap() - 700.0).abs() < 50.0,
            "f1 {:?}",
            v.get("f1")
        );
        assert_eq!(v.values().len(), 36);
        assert!(a.counts.mfcc > 0 && a.counts.lpcc > 0 && a.counts.voiced > 0);
        assert!(a.counts.formant_hits[0] > 0);
        let e = v.get("energy").unwrap();
        assert!(e > 0.0 && e <= 1.0);

        let again = extract_features(&clip, &FeatureConfig::default()).unwrap();
        assert_eq!(&again, v);
    }

    #[test]
    fn gate_uses_leading_noise() {
        let clip = vowel(200.0, vec![(800.0, 80.0), (1500.0, 100.0)], 4);
        let lead = white_noise(0.002, 0.1, 16000.0, 9);
        let mut samples = lead.samples.clone();
        samples.extend_from_slice(&clip.samples);
        let padded = clip.with_samples(samples);
        let (_, applied) = condition_clip(&padded, &PreprocessConfig::default()).unwrap();
        assert!(applied);
        let (_, applied) = condition_clip(&clip, &PreprocessConfig::default()).unwrap();
        assert!(!applied);
    }

    #[test]
    fn silence_and_unvoiced_fail_with_id() {
        let silent = AudioClip::new(vec![0.0; 16000], 16000.0, "quiet").unwrap();
        let err = extract_features(&silent, &FeatureConfig::default()).unwrap_err();
        assert!(err.to_string().contains("quiet"));

        let mut hum = tone(3000.0, 0.5, 1.0, 16000.0);
        hum.source_id = "hum".into();
        let err = extract_features(&hum, &FeatureConfig::default()).unwrap_err();
        assert!(err.to_string().contains("hum"), "{err}");
    }

    fn toy() -> LabeledDataset {
        let rows: Vec<FeatureVector> = (0..4)
            .map(|i| {
                FeatureVector::new(
                    (0..36)
                        .map(|j| (i * 36 + j) as f64 * 1.234567890123e-3 - 0.05)
                        .collect(),
                )
                .unwrap()
            })
            .collect();
        LabeledDataset::from_vectors(
            rows,
            vec![Label::Asd, Label::Td, Label::Asd, Label::Td],
            (0..4).map(|i| format!("rec{i}")).collect(),
        )
        .unwrap()
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.csv");
        let ds = toy();
        write_csv(&ds, &path).unwrap();
        let back = read_csv(&path).unwrap();
        assert_eq!(back.names, ds.names);
        assert_eq!(back.labels, ds.labels);
        assert_eq!(back.ids, ds.ids);
        for (a, b) in back.rows.iter().flatten().zip(ds.rows.iter().flatten()) {
            assert!((a - b).abs() <= 1e-9 * b.abs().max(1e-3));
        }
    }

    #[test]
    fn csv_schema_errors() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.csv");
        std::fs::write(&p, "f0,zcr,id\n1,2,x\n").unwrap();
        assert!(matches!(read_csv(&p), Err(Error::Schema(_))));
        std::fs::write(&p, "f0,bogus,label,id\n1,2,ASD,x\n").unwrap();
        assert!(matches!(read_csv(&p), Err(Error::Schema(_))));
        std::fs::write(&p, "f0,zcr,label,id\n1,abc,ASD,x\n").unwrap();
        match read_csv(&p) {
            Err(Error::Parse { row, column, .. }) => assert_eq!((row, column.as_str()), (2, "zcr")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn class_counts_survive_round_trip() {
        let names: Vec<String> = FEATURE_NAMES.iter().map(|s| s.to_string()).collect();
        let labels: Vec<Label> = (0..84)
            .map(|i| if i < 46 { Label::Asd } else { Label::Td })
            .collect();
        let ds = LabeledDataset::new(
            names,
            (0..84).map(|i| vec![i as f64; 36]).collect(),
            labels,
            (0..84).map(|i| i.to_string()).collect(),
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.csv");
        write_csv(&ds, &p).unwrap();
        let back = read_csv(&p).unwrap();
        assert_eq!(back.len(), 84);
        assert_eq!(back.class_counts(), (46, 38));
    }

    #[test]
    fn projection_and_subset() {
        let ds = toy();
        let p = ds
            .project(&["jitter_s".to_string(), "f0".to_string()])
            .unwrap();
        assert_eq!(p.rows[1], vec![ds.rows[1][35], ds.rows[1][0]]);
        assert!(ds.project(&["zzz".to_string()]).is_err());
        let s = ds.subset(&[3, 0]);
        assert_eq!(s.ids, vec!["rec3", "rec0"]);
    }
}
