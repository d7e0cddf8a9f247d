//! Mel filter bank, Mel spectrum and MFCC.
//!
//! Filters are triangles between integer FFT bins placed uniformly on the
//! mel scale `2595 log10(1 + f/700)`. Cepstral coefficients project the
//! base-10 log Mel spectrum onto half-sample-shifted cosines (DCT-II), so a
//! constant Mel spectrum only reaches `c(0)`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::dft;

pub const N_FILTERS: usize = 40;
pub const N_COEFFS: usize = 12;
pub const MFCC_N_FFT: usize = 512;
pub const LOG_FLOOR: f64 = 1e-10;

pub fn hz_to_mel(f: f64) -> f64 {
    2595.0 * (1.0 + f / 700.0).log10()
}

pub fn mel_to_hz(m: f64) -> f64 {
    700.0 * (10f64.powf(m / 2595.0) - 1.0)
}

/// One triangular filter, stored from its first bin onwards.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterRow {
    pub start_bin: usize,
    pub weights: Vec<f64>,
}

impl FilterRow {
    pub fn weight(&self, bin: usize) -> f64 {
        bin.checked_sub(self.start_bin)
            .and_then(|i| self.weights.get(i))
            .copied()
            .unwrap_or(0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MelFilterBank {
    pub n_filters: usize,
    pub n_fft: usize,
    /// `f(0)..f(M+1)`: filter `m` (1-based) rises from `f(m-1)`, peaks at
    /// `f(m)` and falls to `f(m+1)`.
    pub boundary_bins: Vec<usize>,
    pub rows: Vec<FilterRow>,
    pub sample_rate_hz: f64,
}

impl MelFilterBank {
    pub fn n_bins(&self) -> usize {
        self.n_fft / 2 + 1
    }

    pub fn center_bins(&self) -> &[usize] {
        &self.boundary_bins[1..=self.n_filters]
    }
}

pub fn build_filterbank(
    sample_rate_hz: f64,
    n_fft: usize,
    n_filters: usize,
) -> Result<MelFilterBank> {
    if !(4..=160).contains(&n_filters) {
        return Err(Error::Argument(format!(
            "n_filters {n_filters} outside [4, 160]"
        )));
    }
    if !(sample_rate_hz.is_finite() && sample_rate_hz > 0.0) {
        return Err(Error::Argument(format!("bad sample rate {sample_rate_hz}")));
    }
    if n_fft < 2 {
        return Err(Error::Argument(format!("n_fft {n_fft} too small")));
    }
    let top = hz_to_mel(sample_rate_hz / 2.0);
    let step = top / (n_filters + 1) as f64;
    let boundary_bins: Vec<usize> = (0..n_filters + 2)
        .map(|i| (mel_to_hz(i as f64 * step) * n_fft as f64 / sample_rate_hz).round() as usize)
        .collect();
    if boundary_bins.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Resolution(format!(
            "n_fft {n_fft} cannot separate {n_filters} mel filters at {sample_rate_hz} Hz"
        )));
    }

    let rows = (1..=n_filters)
        .map(|m| {
            let (lo, c, hi) = (boundary_bins[m - 1], boundary_bins[m], boundary_bins[m + 1]);
            let weights = (lo..=hi)
                .map(|k| {
                    if k <= c {
                        (k - lo) as f64 / (c - lo) as f64
                    } else {
                        (hi - k) as f64 / (hi - c) as f64
                    }
                })
                .collect();
            FilterRow {
                start_bin: lo,
                weights,
            }
        })
        .collect();

    Ok(MelFilterBank {
        n_filters,
        n_fft,
        boundary_bins,
        rows,
        sample_rate_hz,
    })
}

/// `s[m] = sum_k |X(k)|^2 H_m(k)`.
pub fn mel_spectrum(power_bins: &[f64], bank: &MelFilterBank) -> Result<Vec<f64>> {
    if power_bins.len() != bank.n_bins() {
        return Err(Error::Argument(format!(
            "expected {} power bins, got {}",
            bank.n_bins(),
            power_bins.len()
        )));
    }
    if let Some(k) = power_bins.iter().position(|p| !(*p >= 0.0)) {
        return Err(Error::Argument(format!("power bin {k} is negative or NaN")));
    }
    Ok(bank
        .rows
        .iter()
        .map(|row| {
            row.weights
                .iter()
                .zip(&power_bins[row.start_bin..])
                .map(|(w, p)| w * p)
                .sum()
        })
        .collect())
}

/// `c(n) = sum_{m=1}^{M} log10(s_m) cos(pi n (m - 1/2) / M)` for `n < n_coeffs`.
pub fn cepstrum_from_mel(mel: &[f64], n_coeffs: usize) -> Vec<f64> {
    let m_total = mel.len() as f64;
    let logs: Vec<f64> = mel.iter().map(|s| s.max(LOG_FLOOR).log10()).collect();
    (0..n_coeffs)
        .map(|n| {
            logs.iter()
                .enumerate()
                .map(|(m, l)| l * (PI * n as f64 * (m as f64 + 0.5) / m_total).cos())
                .sum()
        })
        .collect()
}

/// MFCC of one windowed frame, `c(0)..c(n_coeffs-1)`. `None` marks a silent
/// (all-zero) frame.
pub fn mfcc(frame: &[f64], bank: &MelFilterBank, n_coeffs: usize) -> Result<Option<Vec<f64>>> {
    if frame.iter().all(|v| *v == 0.0) {
        return Ok(None);
    }
    let power = dft(frame, bank.n_fft, bank.sample_rate_hz)?.power();
    let mel = mel_spectrum(&power, bank)?;
    Ok(Some(cepstrum_from_mel(&mel, n_coeffs)))
}
