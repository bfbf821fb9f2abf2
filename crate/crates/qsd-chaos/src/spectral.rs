//! One-sided power spectra and spectral flatness.
//!
//! Spectra are normalized so that Σ power·Δf equals the mean square of the
//! windowed, mean-removed signal (Parseval). Flatness (geometric over
//! arithmetic mean of band power) quantifies broadbandness: near 1 for
//! noise-like spectra, near 0 for line spectra.

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::series::TimeSeries;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WindowKind {
    Rectangular,
    Hann,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpectrumMethod {
    Periodogram,
    AveragedSegments,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerSpectrum {
    /// Ascending frequencies in cycles per unit scaled time; index k is
    /// k/(segment_len·dt) up to Nyquist.
    pub frequencies: Vec<f64>,
    pub power: Vec<f64>,
    pub method: SpectrumMethod,
    pub segment_len: usize,
}

impl PowerSpectrum {
    pub fn nyquist(&self) -> f64 {
        *self.frequencies.last().unwrap()
    }

    /// Frequency bin spacing.
    pub fn delta_f(&self) -> f64 {
        self.frequencies[1] - self.frequencies[0]
    }

    /// Frequency of the highest-power bin.
    pub fn peak_frequency(&self) -> f64 {
        let (k, _) = self
            .power
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap();
        self.frequencies[k]
    }
}

fn window_values(kind: WindowKind, n: usize) -> Vec<f64> {
    match kind {
        WindowKind::Rectangular => vec![1.0; n],
        // Periodic Hann, the standard choice for Welch averaging.
        WindowKind::Hann => (0..n)
            .map(|i| 0.5 * (1.0 - (2.0 * std::f64::consts::PI * i as f64 / n as f64).cos()))
            .collect(),
    }
}

/// One-sided PSD of one windowed, mean-removed segment.
fn segment_psd(values: &[f64], dt: f64, window: WindowKind) -> Vec<f64> {
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let w = window_values(window, n);
    let mut buf: Vec<Complex64> = values
        .iter()
        .zip(&w)
        .map(|(v, w)| Complex64::new((v - mean) * w, 0.0))
        .collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let n_out = n / 2 + 1;
    let scale = dt / n as f64;
    (0..n_out)
        .map(|k| {
            // DC and the Nyquist bin (even n) have no mirror partner.
            let c = if k == 0 || (n % 2 == 0 && k == n / 2) {
                1.0
            } else {
                2.0
            };
            c * buf[k].norm_sqr() * scale
        })
        .collect()
}

fn frequencies(n: usize, dt: f64) -> Vec<f64> {
    (0..n / 2 + 1).map(|k| k as f64 / (n as f64 * dt)).collect()
}

/// One-sided periodogram with mean removal.
pub fn periodogram(series: &TimeSeries, window: WindowKind) -> Result<PowerSpectrum> {
    let n = series.len();
    if n < 8 {
        return Err(Error::TooShort { need: 8, got: n });
    }
    Ok(PowerSpectrum {
        frequencies: frequencies(n, series.dt()),
        power: segment_psd(series.values(), series.dt(), window),
        method: SpectrumMethod::Periodogram,
        segment_len: n,
    })
}

/// Welch-style average of Hann periodograms over overlapping segments.
///
/// Each segment is mean-removed independently. A series exactly one segment
/// long degenerates to a single Hann periodogram; a segment that does not
/// fit at all is an error.
pub fn averaged_spectrum(
    series: &TimeSeries,
    segment_len: usize,
    overlap: f64,
) -> Result<PowerSpectrum> {
    let n = series.len();
    if segment_len < 8 {
        return Err(Error::Config(format!(
            "segment_len = {segment_len} too short; need at least 8"
        )));
    }
    if !(0.0..1.0).contains(&overlap) {
        return Err(Error::Config(format!(
            "overlap = {overlap} must lie in [0, 1)"
        )));
    }
    if segment_len > n {
        return Err(Error::Segmentation {
            segment_len,
            len: n,
        });
    }
    let hop = ((segment_len as f64 * (1.0 - overlap)).round() as usize).max(1);
    let values = series.values();
    let dt = series.dt();
    let mut power = vec![0.0; segment_len / 2 + 1];
    let mut count = 0usize;
    let mut offset = 0usize;
    while offset + segment_len <= n {
        let psd = segment_psd(&values[offset..offset + segment_len], dt, WindowKind::Hann);
        for (acc, p) in power.iter_mut().zip(&psd) {
            *acc += p;
        }
        count += 1;
        offset += hop;
    }
    debug_assert!(count >= 1);
    for p in &mut power {
        *p /= count as f64;
    }
    Ok(PowerSpectrum {
        frequencies: frequencies(segment_len, dt),
        power,
        method: SpectrumMethod::AveragedSegments,
        segment_len,
    })
}

/// Default flatness band: everything up to the 4th drive harmonic,
/// expressed in cycles per unit time for drive angular frequency ω.
pub fn default_flatness_band(omega: f64) -> (f64, f64) {
    (0.0, 4.0 * omega / (2.0 * std::f64::consts::PI))
}

/// Geometric over arithmetic mean of power within `(band.0, band.1]`.
///
/// Zero bins are floored at 1e-30 before the geometric mean so a single
/// empty bin cannot zero the statistic; an all-zero band is exactly flat by
/// convention and returns 1.
pub fn spectral_flatness(spectrum: &PowerSpectrum, band: (f64, f64)) -> Result<f64> {
    let (lo, hi) = band;
    let bins: Vec<f64> = spectrum
        .frequencies
        .iter()
        .zip(&spectrum.power)
        .filter(|(f, _)| **f > lo && **f <= hi)
        .map(|(_, p)| *p)
        .collect();
    if bins.is_empty() {
        return Err(Error::EmptyBand { lo, hi });
    }
    let n = bins.len() as f64;
    let arith = bins.iter().sum::<f64>() / n;
    let log_geo = bins.iter().map(|p| p.max(1e-30).ln()).sum::<f64>() / n;
    if arith <= 1e-30 {
        return Ok(1.0);
    }
    Ok((log_geo.exp() / arith).clamp(0.0, 1.0))
}
