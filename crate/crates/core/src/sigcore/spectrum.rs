use serde::{Deserialize, Serialize};

use crate::dsp::{bin_freq, fft};
use crate::error::{param, Result};

use super::types::ComplexFrame;

/// Two-sided power spectral density on an ascending frequency grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Psd {
    /// Bin frequencies in Hz, ascending.
    pub freqs: Vec<f64>,
    /// Linear density in power units per Hz.
    pub linear: Vec<f64>,
    /// `10 log10(linear)`.
    pub values_db: Vec<f64>,
    /// Bin spacing in Hz.
    pub resolution: f64,
}

impl Psd {
    /// Integrated power over `[lo, hi]` (inclusive bin centres).
    pub fn band_power(&self, lo: f64, hi: f64) -> f64 {
        self.freqs
            .iter()
            .zip(&self.linear)
            .filter(|(f, _)| **f >= lo && **f <= hi)
            .map(|(_, p)| p)
            .sum::<f64>()
            * self.resolution
    }

    pub fn total_power(&self) -> f64 {
        self.linear.iter().sum::<f64>() * self.resolution
    }

    /// Frequency of the strongest bin.
    pub fn peak_freq(&self) -> f64 {
        let (i, _) = self
            .linear
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .expect("non-empty psd");
        self.freqs[i]
    }

    /// Width of the band holding the central `fraction` of the power, with
    /// `(1 - fraction) / 2` excluded on each side.
    pub fn occupied_bandwidth(&self, fraction: f64) -> f64 {
        let total: f64 = self.linear.iter().sum();
        let lo_target = total * (1.0 - fraction) / 2.0;
        let hi_target = total * (1.0 + fraction) / 2.0;
        let mut acc = 0.0;
        let mut lo = self.freqs[0];
        let mut hi = *self.freqs.last().unwrap();
        let mut found_lo = false;
        for (f, p) in self.freqs.iter().zip(&self.linear) {
            acc += p;
            if !found_lo && acc >= lo_target {
                lo = *f;
                found_lo = true;
            }
            if acc >= hi_target {
                hi = *f;
                break;
            }
        }
        hi - lo + self.resolution
    }

    /// Span between the outermost bins within `drop_db` of the peak.
    pub fn bandwidth_below_peak(&self, drop_db: f64) -> f64 {
        let peak = self.values_db.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let inside: Vec<f64> = self
            .freqs
            .iter()
            .zip(&self.values_db)
            .filter(|(_, v)| **v >= peak - drop_db)
            .map(|(f, _)| *f)
            .collect();
        inside.last().unwrap() - inside[0] + self.resolution
    }
}

/// Periodogram of `frame` smoothed by a circular moving average of
/// `smoothing_taps` bins. The smoothing preserves total power.
pub fn power_spectrum(frame: &ComplexFrame, smoothing_taps: usize) -> Result<Psd> {
    if smoothing_taps == 0 || smoothing_taps % 2 == 0 {
        return Err(param(format!(
            "smoothing taps must be odd, got {smoothing_taps}"
        )));
    }
    let n = frame.len();
    let fs = frame.sample_rate;
    let spec = fft(&frame.samples);
    let scale = 1.0 / (n as f64 * fs);
    let raw: Vec<f64> = spec.iter().map(|v| v.norm_sqr() * scale).collect();
    let smoothed = circular_moving_average(&raw, smoothing_taps);
    // reorder to ascending frequency
    let start = n / 2 + 1;
    let order: Vec<usize> = (start..n).chain(0..start).collect();
    let freqs: Vec<f64> = order.iter().map(|&k| bin_freq(k, n, fs)).collect();
    let linear: Vec<f64> = order.iter().map(|&k| smoothed[k]).collect();
    let values_db = linear.iter().map(|p| 10.0 * p.max(1e-300).log10()).collect();
    Ok(Psd {
        freqs,
        linear,
        values_db,
        resolution: fs / n as f64,
    })
}

pub(crate) fn circular_moving_average(x: &[f64], taps: usize) -> Vec<f64> {
    let n = x.len();
    if taps <= 1 || n == 0 {
        return x.to_vec();
    }
    let half = (taps / 2) as isize;
    let mut acc: f64 = (-half..=half)
        .map(|d| x[(d.rem_euclid(n as isize)) as usize])
        .sum();
    let mut out = Vec::with_capacity(n);
    for i in 0..n as isize {
        out.push(acc / taps as f64);
        let leaving = (i - half).rem_euclid(n as isize) as usize;
        let entering = (i + half + 1).rem_euclid(n as isize) as usize;
        acc += x[entering] - x[leaving];
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use crate::sigcore::{map_qam16, payload_bits, rrc_taps, shape, Constellation};
    use num_complex::Complex64;
    use std::f64::consts::PI;

    fn tone(f0: f64, fs: f64, n: usize) -> ComplexFrame {
        let s = (0..n)
            .map(|i| Complex64::from_polar(1.0, 2.0 * PI * f0 * i as f64 / fs))
            .collect();
        ComplexFrame::new(s, fs).unwrap()
    }

    #[test]
    fn tone_peak_and_parseval() {
        let f = tone(1.25e9, 10e9, 4096);
        let p = power_spectrum(&f, 1).unwrap();
        assert!((p.peak_freq() - 1.25e9).abs() < p.resolution);
        assert!((p.total_power() - 1.0).abs() < 1e-3);
        let p31 = power_spectrum(&f, 31).unwrap();
        assert!((p31.total_power() - 1.0).abs() < 1e-3);
    }

    #[test]
    fn even_smoothing_rejected() {
        assert!(power_spectrum(&tone(0.0, 1.0, 16), 4).is_err());
    }

    #[test]
    fn white_noise_level() {
        let mut r = rng::stream(3, "white");
        let fs = 20e9;
        let p_noise = 0.5;
        let s = (0..1 << 16).map(|_| rng::complex_gaussian(&mut r, p_noise)).collect();
        let f = ComplexFrame::new(s, fs).unwrap();
        let psd = power_spectrum(&f, 31).unwrap();
        let expect_db = 10.0 * (p_noise / fs).log10();
        let mean_db = 10.0 * (psd.linear.iter().sum::<f64>() / psd.linear.len() as f64).log10();
        assert!((mean_db - expect_db).abs() < 1.0);
        let outliers = psd.values_db.iter().filter(|v| (*v - expect_db).abs() > 3.0).count();
        assert!(outliers < psd.values_db.len() / 1000);
    }

    #[test]
    fn rrc_signal_bandwidth() {
        let c = Constellation::qam16();
        let bits = payload_bits(11, 2, 4 * 32768).unwrap();
        let s = map_qam16(&bits, &c, 5e9).unwrap();
        let taps = rrc_taps(0.1, 32, 4).unwrap();
        let f = shape(&s, &taps, 4).unwrap();
        let psd = power_spectrum(&f, 31).unwrap();
        // Raised-cosine spectrum with roll-off 0.1: the outer 1% of power sits
        // in the transition bands, ending 0.30 * 0.5 GHz-per-side inside the
        // 2.75 GHz edge (integral of cos^2 over the roll-off region).
        let bw99 = psd.occupied_bandwidth(0.99);
        assert!((bw99 / 5.10e9 - 1.0).abs() < 0.05, "99% bandwidth {bw99}");
        // The full occupied width (1 + roll-off) * baud shows at -30 dB.
        let bw30 = psd.bandwidth_below_peak(30.0);
        assert!((bw30 / 5.5e9 - 1.0).abs() < 0.05, "-30 dB bandwidth {bw30}");
    }
}
