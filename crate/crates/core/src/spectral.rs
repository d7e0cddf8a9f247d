//! Shared numerics: FFT-backed DFT, autocorrelation and peak picking.

use std::cell::RefCell;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// Complex spectrum of a zero-padded real frame.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub bins: Vec<Complex64>,
    pub freq_resolution_hz: f64,
    pub sample_rate_hz: f64,
}

impl Spectrum {
    pub fn n_fft(&self) -> usize {
        self.bins.len()
    }

    /// `|X(k)|` for k in `0..=n_fft/2`.
    pub fn amplitude(&self) -> Vec<f64> {
        self.bins[..=self.n_fft() / 2]
            .iter()
            .map(|c| c.norm())
            .collect()
    }

    /// `|X(k)|^2` for k in `0..=n_fft/2`.
    pub fn power(&self) -> Vec<f64> {
        self.bins[..=self.n_fft() / 2]
            .iter()
            .map(|c| c.norm_sqr())
            .collect()
    }

    /// Inverse transform; returns `n_fft` real samples.
    pub fn inverse(&self) -> Vec<f64> {
        let n = self.n_fft();
        let mut buf = self.bins.clone();
        PLANNER.with(|p| p.borrow_mut().plan_fft_inverse(n).process(&mut buf));
        buf.iter().map(|c| c.re / n as f64).collect()
    }
}

/// `X[k] = sum_n x[n] exp(-2 pi j n k / n_fft)` with the frame zero-padded to `n_fft`.
pub fn dft(frame: &[f64], n_fft: usize, sample_rate_hz: f64) -> Result<Spectrum> {
    if n_fft == 0 || !n_fft.is_power_of_two() {
        return Err(Error::Argument(format!(
            "n_fft {n_fft} is not a power of two"
        )));
    }
    if n_fft < frame.len() {
        return Err(Error::Argument(format!(
            "n_fft {n_fft} shorter than frame length {}",
            frame.len()
        )));
    }
    let mut buf = vec![Complex64::new(0.0, 0.0); n_fft];
    for (b, &x) in buf.iter_mut().zip(frame) {
        b.re = x;
    }
    PLANNER.with(|p| p.borrow_mut().plan_fft_forward(n_fft).process(&mut buf));
    Ok(Spectrum {
        bins: buf,
        freq_resolution_hz: sample_rate_hz / n_fft as f64,
        sample_rate_hz,
    })
}

/// Biased autocorrelation `r[l] = sum_n x[n] x[n+l]` for `l = 0..=max_lag`.
pub fn autocorrelation(frame: &[f64], max_lag: usize) -> Vec<f64> {
    (0..=max_lag)
        .map(|lag| {
            if lag >= frame.len() {
                return 0.0;
            }
            frame[..frame.len() - lag]
                .iter()
                .zip(&frame[lag..])
                .map(|(a, b)| a * b)
                .sum()
        })
        .collect()
}

/// Interior local maxima in ascending index order, at most `max_peaks`.
///
/// A flat top counts once, at its first index, and only if the values on
/// both sides of the plateau are strictly lower.
pub fn pick_peaks(values: &[f64], max_peaks: usize) -> Vec<(usize, f64)> {
    let mut peaks = Vec::new();
    let n = values.len();
    let mut i = 1;
    while i + 1 < n && peaks.len() < max_peaks {
        if values[i - 1] < values[i] {
            let mut j = i;
            while j + 1 < n && values[j + 1] == values[i] {
                j += 1;
            }
            if j + 1 < n && values[j + 1] < values[i] {
                peaks.push((i, values[i]));
            }
            i = j + 1;
        } else {
            i += 1;
        }
    }
    peaks
}

/// Vertex offset in (-0.5, 0.5) of the parabola through three equally spaced points.
pub(crate) fn parabolic_offset(left: f64, centre: f64, right: f64) -> f64 {
    let denom = left - 2.0 * centre + right;
    if denom.abs() < 1e-300 {
        0.0
    } else {
        (0.5 * (left - right) / denom).clamp(-0.5, 0.5)
    }
}
