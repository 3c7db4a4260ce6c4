//! Link measurements: SNR/EVM, FM-noise spectra and linewidth, FEC verdicts
//! and penalties between BER curves.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::dsp::{bin_freq, fft, wrap_phase};
use crate::error::{param, Error, Result};
use crate::sigcore::{circular_moving_average, ComplexFrame, SymbolStream};

/// Hard-decision FEC threshold.
pub const HD_FEC_LIMIT: f64 = 3.8e-3;

/// Default lower edge of the white FM-noise fit region, Hz.
pub const WHITE_REGION_LOW: f64 = 10e6;

/// Largest phase step accepted as unambiguous when differentiating a tone.
const MAX_PHASE_STEP: f64 = PI / 2.0;

/// `E|X|² / E|Y - X|²` for one aligned symbol set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SnrRecord {
    /// `+inf` when rx equals tx.
    pub snr_db: f64,
    pub evm_percent: f64,
    pub n_symbols: usize,
}

pub fn snr_estimate(tx: &SymbolStream, rx: &SymbolStream) -> Result<SnrRecord> {
    if tx.len() != rx.len() || tx.is_empty() {
        return Err(param(format!(
            "SNR needs equal, non-empty streams ({} vs {})",
            tx.len(),
            rx.len()
        )));
    }
    let sig: f64 = tx.symbols.iter().map(|x| x.norm_sqr()).sum();
    let err: f64 = tx.symbols.iter().zip(&rx.symbols).map(|(x, y)| (y - x).norm_sqr()).sum();
    let evm = (err / sig).sqrt();
    Ok(SnrRecord {
        snr_db: -20.0 * evm.log10(),
        evm_percent: 100.0 * evm,
        n_symbols: tx.len(),
    })
}

/// One-sided PSD of a tone's instantaneous frequency.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FmNoisePsd {
    /// Positive frequencies, Hz.
    pub freqs: Vec<f64>,
    /// Smoothed one-sided density, Hz²/Hz.
    pub values: Vec<f64>,
    pub smoothing_taps: usize,
    /// Mean density over the white region, Hz²/Hz.
    pub white_floor: f64,
    /// `π · white_floor`, Hz.
    pub linewidth: f64,
    pub white_region: (f64, f64),
}

impl FmNoisePsd {
    /// Largest deviation of octave-band means from the white floor inside
    /// the fit region, dB. Individual smoothed bins still scatter by a few
    /// dB over a long frame; band means expose any colouring.
    pub fn white_flatness_db(&self) -> f64 {
        let (lo, hi) = self.white_region;
        let mut worst: f64 = 0.0;
        let mut edge = lo.max(self.freqs[0]);
        while edge < hi {
            let top = (2.0 * edge).min(hi);
            let band: Vec<f64> = self
                .freqs
                .iter()
                .zip(&self.values)
                .filter(|(f, _)| **f >= edge && **f < top)
                .map(|(_, v)| *v)
                .collect();
            if !band.is_empty() {
                let mean = band.iter().sum::<f64>() / band.len() as f64;
                worst = worst.max((10.0 * (mean / self.white_floor).log10()).abs());
            }
            edge = top;
        }
        worst
    }
}

/// FM-noise spectrum with the white region `[10 MHz, fs/4]`.
pub fn fm_noise_spectrum(tone: &ComplexFrame, smoothing_taps: usize) -> Result<FmNoisePsd> {
    fm_noise_spectrum_in(tone, smoothing_taps, (WHITE_REGION_LOW, tone.sample_rate / 4.0))
}

/// Instantaneous frequency `Δφ fs / 2π` from sample-to-sample phase steps,
/// its one-sided periodogram smoothed over `smoothing_taps` bins, and the
/// Lorentzian linewidth `π ×` the mean level over `white_region`.
pub fn fm_noise_spectrum_in(tone: &ComplexFrame, smoothing_taps: usize, white_region: (f64, f64)) -> Result<FmNoisePsd> {
    if smoothing_taps == 0 || smoothing_taps % 2 == 0 {
        return Err(param("smoothing taps must be odd"));
    }
    let (lo, hi) = white_region;
    if !(lo >= 0.0 && lo < hi && hi <= tone.sample_rate / 2.0) {
        return Err(param("white region must lie inside (0, fs/2]"));
    }
    let fs = tone.sample_rate;
    let n = tone.len();
    if n < 4 {
        return Err(param("tone too short"));
    }
    let mut nu = Vec::with_capacity(n);
    for k in 0..n {
        let step = (tone.samples[(k + 1) % n] * tone.samples[k].conj()).arg();
        if k + 1 < n && step.abs() > MAX_PHASE_STEP {
            return Err(Error::SamplingTooCoarse { increment: step.abs() });
        }
        nu.push(wrap_phase(step) * fs / (2.0 * PI));
    }
    let mean = nu.iter().sum::<f64>() / n as f64;
    let centred: Vec<num_complex::Complex64> = nu.iter().map(|v| (v - mean).into()).collect();
    let spec = fft(&centred);
    let scale = 1.0 / (n as f64 * fs);
    let two_sided: Vec<f64> = spec.iter().map(|v| v.norm_sqr() * scale).collect();
    let smoothed = circular_moving_average(&two_sided, smoothing_taps);
    let half = n / 2;
    let freqs: Vec<f64> = (1..=half).map(|k| bin_freq(k, n, fs)).collect();
    let values: Vec<f64> = (1..=half).map(|k| 2.0 * smoothed[k]).collect();
    let in_region: Vec<f64> = freqs
        .iter()
        .zip(&values)
        .filter(|(f, _)| **f >= lo && **f <= hi)
        .map(|(_, v)| *v)
        .collect();
    if in_region.is_empty() {
        return Err(param("white region holds no frequency bins"));
    }
    let white_floor = in_region.iter().sum::<f64>() / in_region.len() as f64;
    Ok(FmNoisePsd {
        freqs,
        values,
        smoothing_taps,
        white_floor,
        linewidth: PI * white_floor,
        white_region,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FecVerdict {
    Pass,
    Fail,
}

/// Pass iff `ber < 3.8e-3` (strict).
pub fn fec_verdict(ber: f64) -> FecVerdict {
    if ber < HD_FEC_LIMIT {
        FecVerdict::Pass
    } else {
        FecVerdict::Fail
    }
}

/// A BER curve against a dB abscissa (squared photocurrent or SNR).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BerCurve {
    pub name: String,
    /// `(abscissa dB, BER)`, ascending abscissa.
    pub points: Vec<(f64, f64)>,
}

impl BerCurve {
    pub fn new(name: impl Into<String>, mut points: Vec<(f64, f64)>) -> Self {
        points.sort_by(|a, b| a.0.total_cmp(&b.0));
        Self { name: name.into(), points }
    }

    /// Abscissa where the curve first falls through `target`, interpolated
    /// linearly in `(dB, log10 BER)`. Zero-error points count as `floor`.
    pub fn crossing_db(&self, target: f64) -> Result<f64> {
        let floor = 1e-9;
        let lg = |b: f64| b.max(floor).log10();
        let t = target.log10();
        for w in self.points.windows(2) {
            let ((x0, b0), (x1, b1)) = (w[0], w[1]);
            if b0.is_nan() || b1.is_nan() {
                continue;
            }
            if b0 >= target && b1 < target {
                let (y0, y1) = (lg(b0), lg(b1));
                return Ok(x0 + (t - y0) * (x1 - x0) / (y1 - y0));
            }
        }
        Err(Error::NoCrossing { curve: self.name.clone(), target })
    }
}

/// Extra abscissa (dB) curve `b` needs over curve `a` to reach `target`.
pub fn penalty_db(a: &BerCurve, b: &BerCurve, target: f64) -> Result<f64> {
    Ok(b.crossing_db(target)? - a.crossing_db(target)?)
}
