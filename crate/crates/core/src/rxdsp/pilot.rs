use std::f64::consts::{LN_2, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dsp::{bin_freq, fft, filter_freq};
use crate::error::{config, param, Result};
use crate::sigcore::ComplexFrame;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum PilotFilterShape {
    #[default]
    BrickWall,
    /// Gaussian magnitude with its -3 dB points at `±bandwidth / 2`.
    Gaussian,
}

/// Narrow filter selecting the pilot tone at relative frequency 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PilotFilterCfg {
    /// Two-sided bandwidth, Hz.
    pub bandwidth: f64,
    #[serde(default)]
    pub shape: PilotFilterShape,
}

impl PilotFilterCfg {
    pub fn brick_wall(bandwidth: f64) -> Self {
        Self { bandwidth, shape: PilotFilterShape::BrickWall }
    }

    pub fn gaussian(bandwidth: f64) -> Self {
        Self { bandwidth, shape: PilotFilterShape::Gaussian }
    }

    /// The filter must sit strictly inside the guard band so no data leaks
    /// into the recovered tone.
    pub fn validate(&self, guard_band: f64) -> Result<()> {
        if !(self.bandwidth > 0.0) {
            return Err(config("pilot filter bandwidth must be positive"));
        }
        if self.bandwidth >= guard_band {
            return Err(config(format!(
                "pilot filter bandwidth {:.3e} Hz does not fit the {:.3e} Hz guard band",
                self.bandwidth, guard_band
            )));
        }
        Ok(())
    }

    pub fn response(&self, f: f64) -> f64 {
        let half = self.bandwidth / 2.0;
        match self.shape {
            PilotFilterShape::BrickWall => {
                if f.abs() <= half {
                    1.0
                } else {
                    0.0
                }
            }
            PilotFilterShape::Gaussian => (-LN_2 / 2.0 * (f / half).powi(2)).exp(),
        }
    }
}

/// Filters out the pilot and normalizes it to a unit-magnitude phasor that
/// carries the common phase/frequency trajectory.
pub fn extract_pilot(frame: &ComplexFrame, cfg: &PilotFilterCfg, guard_band: f64) -> Result<ComplexFrame> {
    cfg.validate(guard_band)?;
    let tone = filter_freq(&frame.samples, frame.sample_rate, |f| Complex64::new(cfg.response(f), 0.0));
    let unit = tone
        .into_iter()
        .map(|v| {
            let m = v.norm();
            if m > 0.0 {
                v / m
            } else {
                Complex64::new(1.0, 0.0)
            }
        })
        .collect();
    Ok(frame.with_samples(unit))
}

/// `frame · conj(tone) · exp(-j2π f_c n / fs)`: removes the common phase
/// trajectory and brings the data sideband to baseband.
pub fn pilot_downconvert(frame: &ComplexFrame, tone: &ComplexFrame, f_c: f64) -> Result<ComplexFrame> {
    if frame.len() != tone.len() || frame.sample_rate != tone.sample_rate {
        return Err(param("frame and tone must share length and sample rate"));
    }
    let w = -2.0 * PI * f_c / frame.sample_rate;
    let samples = frame
        .samples
        .iter()
        .zip(&tone.samples)
        .enumerate()
        .map(|(i, (s, t))| s * t.conj() * Complex64::from_polar(1.0, w * i as f64))
        .collect();
    Ok(frame.with_samples(samples).with_center_offset(frame.center_offset + f_c))
}

/// Moves the pilot, searched within `±search` Hz, to relative frequency 0,
/// returning the shifted frame and the removed offset.
///
/// Periodic payloads put discrete lines into the data band that can exceed a
/// weak pilot, so bins are ranked by how far they stand out from the mean of
/// their `±guard_band/2` neighbourhood (a small core around the bin excluded,
/// so the pilot's own phase-noise skirt does not count against it). Only the
/// pilot has an empty neighbourhood.
pub fn coarse_center(frame: &ComplexFrame, search: f64, guard_band: f64) -> Result<(ComplexFrame, f64)> {
    let n = frame.len();
    let df = frame.sample_rate / n as f64;
    let half = ((guard_band / 2.0 / df).floor() as usize).min(n / 2);
    let core = (half / 16).max(2);
    if half <= core {
        return Err(param("guard band too narrow for pilot search at this frequency resolution"));
    }
    let power: Vec<f64> = fft(&frame.samples).iter().map(|v| v.norm_sqr()).collect();
    // prefix sums over three periods for circular window sums
    let mut cum = Vec::with_capacity(3 * n + 1);
    cum.push(0.0);
    for k in 0..3 * n {
        cum.push(cum[k] + power[k % n]);
    }
    let window = |k: usize, h: usize| {
        let lo = k + n - h;
        cum[lo + 2 * h + 1] - cum[lo]
    };
    let ring = (2 * (half - core)) as f64;
    let best = (0..n)
        .map(|k| (k, bin_freq(k, n, frame.sample_rate)))
        .filter(|(_, f)| f.abs() <= search)
        .map(|(k, f)| {
            let surround = (window(k, half) - window(k, core)) / ring;
            (f, power[k] / surround.max(f64::MIN_POSITIVE))
        })
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .ok_or_else(|| param("empty pilot search band"))?;
    let offset = best.0;
    if offset == 0.0 {
        return Ok((frame.clone(), 0.0));
    }
    let shifted = crate::channel::apply_freq_offset(frame, -offset)?;
    Ok((shifted, offset))
}
