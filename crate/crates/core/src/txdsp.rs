//! Transmit waveforms: single sideband with carrier (data sideband plus a
//! pilot tone at relative frequency 0), twin-SSB with two data channels on
//! mirror-image sidebands around one pilot, and the WDM channel grid.
//!
//! Sidebands are synthesised the way an IQ modulator driven by a digital
//! Hilbert pair would produce them: the shaped baseband signal is
//! up-converted to a real passband waveform, then turned into its analytic
//! (upper sideband) or anti-analytic (lower sideband) counterpart. The
//! Hilbert transform is computed over the whole, periodic frame in the
//! frequency domain.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dsp::{bin_freq, fft, fft_in_place, ifft_in_place};
use crate::error::{config, param, Result};
use crate::sigcore::{rrc_taps, shape, ComplexFrame, SymbolStream};

pub const DEFAULT_RRC_SPAN: usize = 64;
pub const DEFAULT_BIAS_PHASE: f64 = PI / 6.0;

/// Single-sideband-with-carrier settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SsbConfig {
    /// Centre of the data sideband relative to the pilot, Hz.
    pub upconversion_freq: f64,
    /// Pilot-to-signal power ratio in dB.
    pub ptspr_db: f64,
    pub rolloff: f64,
    /// Static rotation of the data relative to the pilot (modulator bias), rad.
    #[serde(default = "default_bias")]
    pub bias_phase: f64,
    #[serde(default = "default_span")]
    pub rrc_span: usize,
}

fn default_bias() -> f64 {
    DEFAULT_BIAS_PHASE
}

fn default_span() -> usize {
    DEFAULT_RRC_SPAN
}

impl SsbConfig {
    pub fn new(upconversion_freq: f64, ptspr_db: f64, rolloff: f64) -> Self {
        Self {
            upconversion_freq,
            ptspr_db,
            rolloff,
            bias_phase: DEFAULT_BIAS_PHASE,
            rrc_span: DEFAULT_RRC_SPAN,
        }
    }

    /// Occupied signal bandwidth (1 + roll-off) * baud.
    pub fn signal_bandwidth(&self, baud: f64) -> f64 {
        (1.0 + self.rolloff) * baud
    }

    /// Gap between the pilot and the lower edge of the data sideband.
    pub fn guard_band(&self, baud: f64) -> f64 {
        self.upconversion_freq - self.signal_bandwidth(baud) / 2.0
    }

    pub fn validate(&self, baud: f64) -> Result<()> {
        if !self.ptspr_db.is_finite() {
            return Err(config("PTSPR must be finite"));
        }
        let gb = self.guard_band(baud);
        if gb <= 0.0 {
            return Err(config(format!(
                "guard band {gb:.3e} Hz is not positive at {baud:.3e} Bd"
            )));
        }
        Ok(())
    }
}

/// Twin-SSB settings: channel 1 on the lower sideband, channel 2 on the upper.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwinSsbConfig {
    /// Each channel sits at ± this frequency, Hz.
    pub upconversion_freq: f64,
    pub ptspr_db: f64,
    pub rolloff: f64,
    #[serde(default = "default_bias")]
    pub bias_phase: f64,
    #[serde(default = "default_span")]
    pub rrc_span: usize,
}

impl TwinSsbConfig {
    pub fn signal_bandwidth(&self, baud: f64) -> f64 {
        (1.0 + self.rolloff) * baud
    }

    /// Guard band on each side of the pilot.
    pub fn guard_band(&self, baud: f64) -> f64 {
        self.upconversion_freq - self.signal_bandwidth(baud) / 2.0
    }

    /// Total span from the lower edge of channel 1 to the upper edge of channel 2.
    pub fn total_span(&self, baud: f64) -> f64 {
        2.0 * (self.upconversion_freq + self.signal_bandwidth(baud) / 2.0)
    }

    pub fn validate(&self, baud: f64) -> Result<()> {
        if !self.ptspr_db.is_finite() {
            return Err(config("PTSPR must be finite"));
        }
        if self.guard_band(baud) <= 0.0 {
            return Err(config(format!(
                "twin-SSB channels overlap: f_c {:.3e} Hz below half bandwidth {:.3e} Hz",
                self.upconversion_freq,
                self.signal_bandwidth(baud) / 2.0
            )));
        }
        Ok(())
    }
}

/// Uniform grid of THz carriers with one anchor channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WdmGrid {
    pub channel_count: usize,
    pub spacing: f64,
    pub anchor_freq: f64,
    /// Slot index occupied by the anchor channel.
    pub anchor_index: usize,
}

impl WdmGrid {
    pub fn channel_freqs(&self) -> Vec<f64> {
        wdm_channel_freqs(self)
    }
}

/// Carrier frequencies `anchor + (k - anchor_index) * spacing`, ascending.
pub fn wdm_channel_freqs(grid: &WdmGrid) -> Vec<f64> {
    (0..grid.channel_count)
        .map(|k| grid.anchor_freq + (k as f64 - grid.anchor_index as f64) * grid.spacing)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Sideband {
    Upper,
    Lower,
}

/// Keeps one half of the spectrum of the real signal `x` (doubling it) so the
/// output is `x ± jH{x}`.
fn single_sideband(x: &[f64], side: Sideband, fs: f64, band: (f64, f64)) -> Vec<Complex64> {
    let n = x.len();
    let mut buf: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft_in_place(&mut buf);
    for (k, v) in buf.iter_mut().enumerate() {
        // DC belongs to the pilot; the sideband carries nothing there
        if k == 0 || (n % 2 == 0 && k == n / 2) {
            *v = Complex64::new(0.0, 0.0);
            continue;
        }
        let f = bin_freq(k, n, fs);
        let keep = match side {
            Sideband::Upper => f > 0.0 && f >= band.0 && f <= band.1,
            Sideband::Lower => f < 0.0 && -f >= band.0 && -f <= band.1,
        };
        *v = if keep { *v * 2.0 } else { Complex64::new(0.0, 0.0) };
    }
    ifft_in_place(&mut buf);
    buf
}

/// Shapes `symbols` and places them on one sideband centred at
/// `side * freq`, normalised to unit power. An all-zero input stays zero.
fn sideband_signal(
    symbols: &SymbolStream,
    rolloff: f64,
    span: usize,
    sps: usize,
    freq: f64,
    side: Sideband,
) -> Result<ComplexFrame> {
    let taps = rrc_taps(rolloff, span, sps)?;
    let base = shape(symbols, &taps, sps)?;
    let fs = base.sample_rate;
    let edge = freq + (1.0 + rolloff) * symbols.symbol_rate / 2.0;
    if edge >= fs / 2.0 {
        return Err(param(format!(
            "sideband edge {edge:.3e} Hz exceeds Nyquist {:.3e} Hz; raise samples per symbol",
            fs / 2.0
        )));
    }
    let sign = match side {
        Sideband::Upper => 1.0,
        Sideband::Lower => -1.0,
    };
    let w = sign * 2.0 * PI * freq / fs;
    let real: Vec<f64> = base
        .samples
        .iter()
        .enumerate()
        .map(|(i, s)| (s * Complex64::from_polar(1.0, w * i as f64)).re)
        .collect();
    // the ideal RRC spectrum vanishes outside the occupied band; masking
    // removes the truncation floor that would otherwise leak into the guard
    // band and the pilot filter
    let half_bw = (1.0 + rolloff) * symbols.symbol_rate / 2.0;
    let mut out = single_sideband(&real, side, fs, (freq - half_bw, freq + half_bw));
    let p = crate::dsp::mean_power(&out);
    if p > 0.0 {
        let g = 1.0 / p.sqrt();
        out.iter_mut().for_each(|v| *v *= g);
    }
    Ok(base.with_samples(out))
}

/// SSB-with-carrier frame: unit total power, pilot at 0 Hz, data sideband on
/// `[f_c - B/2, f_c + B/2]`, pilot/data power ratio `ptspr_db`.
pub fn make_ssb_with_pilot(symbols: &SymbolStream, cfg: &SsbConfig, sps: usize) -> Result<ComplexFrame> {
    cfg.validate(symbols.symbol_rate)?;
    let sig = sideband_signal(symbols, cfg.rolloff, cfg.rrc_span, sps, cfg.upconversion_freq, Sideband::Upper)?;
    let r = db_to_lin(cfg.ptspr_db);
    let pilot = Complex64::new(r.sqrt(), 0.0);
    let rot = Complex64::from_polar(1.0, cfg.bias_phase);
    let g = 1.0 / (1.0 + r).sqrt();
    let samples = sig.samples.iter().map(|s| (s * rot + pilot) * g).collect();
    Ok(sig.with_samples(samples))
}

/// Carrier-suppressed SSB frame (modulator biased at null), unit power.
pub fn make_ssb_suppressed(symbols: &SymbolStream, cfg: &SsbConfig, sps: usize) -> Result<ComplexFrame> {
    let gb = cfg.guard_band(symbols.symbol_rate);
    if gb <= 0.0 {
        return Err(config(format!("guard band {gb:.3e} Hz is not positive")));
    }
    let sig = sideband_signal(symbols, cfg.rolloff, cfg.rrc_span, sps, cfg.upconversion_freq, Sideband::Upper)?;
    let rot = Complex64::from_polar(1.0, cfg.bias_phase);
    let samples = sig.samples.iter().map(|s| s * rot).collect();
    Ok(sig.with_samples(samples))
}

/// Twin-SSB frame: `ch1` on the lower sideband, `ch2` on the upper, one
/// shared pilot at 0 Hz. Scaling assumes both channels carry unit power, so
/// the construction is linear in the two channels: a silent channel simply
/// contributes nothing.
pub fn make_twin_ssb(
    ch1: &SymbolStream,
    ch2: &SymbolStream,
    cfg: &TwinSsbConfig,
    sps: usize,
) -> Result<ComplexFrame> {
    if ch1.symbol_rate != ch2.symbol_rate {
        return Err(param("twin-SSB channels must share one symbol rate"));
    }
    if ch1.len() != ch2.len() {
        return Err(param("twin-SSB channels must have equal lengths"));
    }
    cfg.validate(ch1.symbol_rate)?;
    let lower = sideband_signal(ch1, cfg.rolloff, cfg.rrc_span, sps, cfg.upconversion_freq, Sideband::Lower)?;
    let upper = sideband_signal(ch2, cfg.rolloff, cfg.rrc_span, sps, cfg.upconversion_freq, Sideband::Upper)?;
    let r = db_to_lin(cfg.ptspr_db);
    let pilot = Complex64::new((2.0 * r).sqrt(), 0.0);
    let rot = Complex64::from_polar(1.0, cfg.bias_phase);
    let g = 1.0 / (2.0 * (1.0 + r)).sqrt();
    let samples = lower
        .samples
        .iter()
        .zip(&upper.samples)
        .map(|(a, b)| ((a + b) * rot + pilot) * g)
        .collect();
    Ok(upper.with_samples(samples))
}

/// Circular delay by `delay_symbols * sps` samples. Whole-sample delays are
/// exact rotations; fractional delays use band-limited (FFT phase-ramp)
/// interpolation.
pub fn apply_decorrelation_delay(frame: &ComplexFrame, delay_symbols: f64, sps: usize) -> Result<ComplexFrame> {
    if !(delay_symbols.is_finite() && delay_symbols >= 0.0) {
        return Err(param("delay must be non-negative"));
    }
    let d = delay_symbols * sps as f64;
    let n = frame.len();
    if (d - d.round()).abs() < 1e-12 {
        let mut s = frame.samples.clone();
        s.rotate_right((d.round() as usize) % n);
        return Ok(frame.with_samples(s));
    }
    Ok(frame.with_samples(fractional_shift(&frame.samples, d)))
}

/// Circular shift by `d` samples (positive delays), any real `d`.
pub(crate) fn fractional_shift(x: &[Complex64], d: f64) -> Vec<Complex64> {
    let n = x.len();
    let mut buf = fft(x);
    for (k, v) in buf.iter_mut().enumerate() {
        let f = bin_freq(k, n, 1.0);
        *v *= Complex64::from_polar(1.0, -2.0 * PI * f * d);
    }
    ifft_in_place(&mut buf);
    buf
}

/// Pilot, upper-sideband and lower-sideband powers of a frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SidebandPowers {
    pub pilot: f64,
    pub upper: f64,
    pub lower: f64,
}

impl SidebandPowers {
    pub fn measure(frame: &ComplexFrame) -> Self {
        let n = frame.len();
        let spec = fft(&frame.samples);
        let norm = 1.0 / (n as f64 * n as f64);
        let mut out = SidebandPowers {
            pilot: spec[0].norm_sqr() * norm,
            upper: 0.0,
            lower: 0.0,
        };
        for (k, v) in spec.iter().enumerate().skip(1) {
            if bin_freq(k, n, 1.0) > 0.0 {
                out.upper += v.norm_sqr() * norm;
            } else {
                out.lower += v.norm_sqr() * norm;
            }
        }
        out
    }

    /// Pilot power over the power of the given sideband(s), dB.
    pub fn ptspr_db(&self, signal: f64) -> f64 {
        10.0 * (self.pilot / signal).log10()
    }
}

pub(crate) fn db_to_lin(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}
