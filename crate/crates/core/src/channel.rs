//! Link impairments and link-budget helpers.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dsp::{bin_freq, fft_in_place, ifft_in_place};
use crate::error::{param, Result};
use crate::rng;
use crate::sigcore::ComplexFrame;

const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Aggregate laser phase noise of the link.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LaserSpec {
    /// Lorentzian linewidth summed over all free-running lasers, Hz.
    pub lorentzian_linewidth: f64,
    /// Static carrier frequency offset, Hz.
    #[serde(default)]
    pub freq_offset: f64,
    #[serde(default)]
    pub seed: u64,
}

/// Wiener phase trajectory starting at 0 with increment variance
/// `2π Δν / fs`.
///
/// Frames are processed circularly, so the path is closed: the `len`
/// increments (including the wrap from the last sample back to the first)
/// have their mean removed. That is the same process plus a static
/// frequency offset of order `sqrt(Δν / T)`, and it keeps block filters free
/// of a phase step at the frame boundary.
pub fn wiener_phase(len: usize, linewidth: f64, sample_rate: f64, seed: u64) -> Vec<f64> {
    let sigma = (2.0 * PI * linewidth / sample_rate).sqrt();
    let mut r = rng::stream(seed, "phase-noise");
    let inc: Vec<f64> = (0..len).map(|_| sigma * rng::gaussian(&mut r)).collect();
    let mean = inc.iter().sum::<f64>() / len.max(1) as f64;
    let mut phi = 0.0;
    let mut out = Vec::with_capacity(len);
    for d in inc.iter().take(len) {
        out.push(phi);
        phi += d - mean;
    }
    out
}

/// Multiplies every sample by `exp(jφ[n])`, φ a Wiener process for the
/// laser's linewidth. Magnitudes are untouched.
pub fn apply_phase_noise(frame: &ComplexFrame, laser: &LaserSpec) -> Result<ComplexFrame> {
    if !(laser.lorentzian_linewidth >= 0.0) {
        return Err(param("linewidth must be non-negative"));
    }
    if laser.lorentzian_linewidth == 0.0 {
        return Ok(frame.clone());
    }
    let phi = wiener_phase(frame.len(), laser.lorentzian_linewidth, frame.sample_rate, laser.seed);
    Ok(rotate_by(frame, &phi))
}

pub(crate) fn rotate_by(frame: &ComplexFrame, phase: &[f64]) -> ComplexFrame {
    frame.with_samples(
        frame
            .samples
            .iter()
            .zip(phase)
            .map(|(s, p)| s * Complex64::from_polar(1.0, *p))
            .collect(),
    )
}

/// Phase ramp `2π offset n / fs` of a frequency offset.
pub fn offset_phase(len: usize, offset: f64, sample_rate: f64) -> Vec<f64> {
    let w = 2.0 * PI * offset / sample_rate;
    (0..len).map(|i| w * i as f64).collect()
}

pub fn apply_freq_offset(frame: &ComplexFrame, offset: f64) -> Result<ComplexFrame> {
    if !(offset.abs() < frame.sample_rate / 2.0) {
        return Err(param(format!(
            "offset {offset:.3e} Hz aliases at {:.3e} Sa/s",
            frame.sample_rate
        )));
    }
    if offset == 0.0 {
        return Ok(frame.clone());
    }
    Ok(rotate_by(frame, &offset_phase(frame.len(), offset, frame.sample_rate)))
}

/// Adds circular white Gaussian noise of two-sided density `n0` (power per
/// Hz), i.e. per-sample variance `n0 * fs`.
pub fn add_white_noise(frame: &ComplexFrame, n0: f64, seed: u64) -> ComplexFrame {
    let var = n0 * frame.sample_rate;
    let mut r = rng::stream(seed, "awgn");
    frame.with_samples(
        frame
            .samples
            .iter()
            .map(|s| s + rng::complex_gaussian(&mut r, var))
            .collect(),
    )
}

/// Adds white noise so that frame power over the noise power inside
/// `signal_band` Hz equals `target_snr_db`. `+inf` leaves the frame alone.
pub fn apply_awgn(frame: &ComplexFrame, target_snr_db: f64, signal_band: f64, seed: u64) -> Result<ComplexFrame> {
    if target_snr_db == f64::INFINITY {
        return Ok(frame.clone());
    }
    if !target_snr_db.is_finite() {
        return Err(param("target SNR must be finite or +inf"));
    }
    if !(signal_band > 0.0) {
        return Err(param("signal band must be positive"));
    }
    let snr = 10f64.powf(target_snr_db / 10.0);
    let n0 = frame.power() / (snr * signal_band);
    Ok(add_white_noise(frame, n0, seed))
}

/// Additive noise floor concentrated at low IF frequencies: a first-order
/// low-pass density shape around IF 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LowFreqNoise {
    /// Density at IF 0, relative to the white noise density, dB.
    pub level_db: f64,
    /// Corner frequency of the density, Hz.
    #[serde(default = "default_lf_corner")]
    pub corner: f64,
}

fn default_lf_corner() -> f64 {
    2e9
}

/// Adds the low-frequency floor on top of white density `n0`; the frame's
/// `center_offset` gives the IF of relative frequency 0.
pub fn add_low_freq_noise(frame: &ComplexFrame, n0: f64, floor: &LowFreqNoise, seed: u64) -> ComplexFrame {
    let white = add_white_noise(
        &frame.with_samples(vec![Complex64::new(0.0, 0.0); frame.len()]),
        n0 * 10f64.powf(floor.level_db / 10.0),
        seed,
    );
    let n = frame.len();
    let mut buf = white.samples;
    fft_in_place(&mut buf);
    for (k, v) in buf.iter_mut().enumerate() {
        let f_if = bin_freq(k, n, frame.sample_rate) + frame.center_offset;
        let g = 1.0 / (1.0 + (f_if / floor.corner).powi(2)).sqrt();
        *v *= g;
    }
    ifft_in_place(&mut buf);
    frame.with_samples(frame.samples.iter().zip(&buf).map(|(a, b)| a + b).collect())
}

/// Photocurrent-referenced power model: received power scales with the
/// photocurrent squared against a fixed receiver noise floor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerModel {
    /// Operating photocurrent, A.
    pub photocurrent: f64,
    /// Calibration photocurrent, A.
    pub ref_photocurrent: f64,
    /// Total-power SNR (in one symbol-rate bandwidth) at the calibration
    /// current, dB.
    pub snr_at_ref: f64,
    /// Current at which the receiver compresses, A.
    pub saturation_current: f64,
}

impl PowerModel {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("photocurrent", self.photocurrent),
            ("reference photocurrent", self.ref_photocurrent),
            ("saturation current", self.saturation_current),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(param(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    /// Amplitude gain relative to the calibration point.
    pub fn amplitude_gain(&self) -> f64 {
        self.photocurrent / self.ref_photocurrent
    }

    /// Saturation input power in units of the received power at the
    /// calibration current.
    pub fn saturation_power(&self) -> f64 {
        (self.saturation_current / self.ref_photocurrent).powi(2)
    }
}

/// `snr_at_ref + 20 log10(I / I_ref)`.
pub fn photocurrent_to_snr(model: &PowerModel) -> Result<f64> {
    model.validate()?;
    Ok(model.snr_at_ref + 20.0 * (model.photocurrent / model.ref_photocurrent).log10())
}

/// IF chain response: first-order high-pass at `low_cut` cascaded with a
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IfResponse {
    pub low_cut: f64,
    pub high_cut: f64,
    /// Largest magnitude variation tolerated across the occupied band, dB.
    pub passband_ripple_db: f64,
}

impl Default for IfResponse {
    fn default() -> Self {
        Self {
            low_cut: 0.3e9,
            high_cut: 14e9,
            passband_ripple_db: 5.0,
        }
    }
}

impl IfResponse {
    pub fn validate(&self) -> Result<()> {
        if !(self.low_cut >= 0.0 && self.low_cut < self.high_cut) {
            return Err(param(format!(
                "IF corners must satisfy 0 <= low ({}) < high ({})",
                self.low_cut, self.high_cut
            )));
        }
        Ok(())
    }

    /// Complex response at signed IF frequency `f`.
    pub fn at(&self, f: f64) -> Complex64 {
        let s = Complex64::new(0.0, 2.0 * PI * f);
        let hp = if self.low_cut > 0.0 {
            let wl = 2.0 * PI * self.low_cut;
            s / (s + wl)
        } else {
            Complex64::new(1.0, 0.0)
        };
        let wh = 2.0 * PI * self.high_cut;
        let x = s / wh;
        let lp = 1.0 / (1.0 + x * std::f64::consts::SQRT_2 + x * x);
        hp * lp
    }

    pub fn magnitude_db(&self, f: f64) -> f64 {
        20.0 * self.at(f).norm().log10()
    }

    /// Max minus min of |H| in dB over `[lo, hi]`.
    pub fn variation_db(&self, lo: f64, hi: f64) -> f64 {
        let steps = 1000;
        let (mut min, mut max) = (f64::INFINITY, f64::NEG_INFINITY);
        for i in 0..=steps {
            let m = self.magnitude_db(lo + (hi - lo) * i as f64 / steps as f64);
            min = min.min(m);
            max = max.max(m);
        }
        max - min
    }

    /// Whether the variation over `[lo, hi]` fits the ripple budget.
    pub fn within_budget(&self, lo: f64, hi: f64) -> bool {
        self.variation_db(lo, hi) <= self.passband_ripple_db
    }
}

/// Filters the frame by the IF response evaluated at
/// `relative frequency + frame.center_offset`.
pub fn apply_if_response(frame: &ComplexFrame, resp: &IfResponse) -> Result<ComplexFrame> {
    resp.validate()?;
    let top = frame.center_offset.abs() + frame.sample_rate / 2.0;
    if resp.low_cut > top {
        return Err(param("IF low corner lies outside the frame bandwidth"));
    }
    let c = frame.center_offset;
    Ok(frame.with_samples(crate::dsp::filter_freq(&frame.samples, frame.sample_rate, |f| resp.at(f + c))))
}

/// Memoryless Rapp compression: `x / (1 + (|x|²/P_sat)^p)^(1/(2p))`.
pub fn apply_saturation(frame: &ComplexFrame, sat_input_power: f64, knee: f64) -> Result<ComplexFrame> {
    if !(sat_input_power > 0.0 && knee > 0.0) {
        return Err(param("saturation power and knee must be positive"));
    }
    Ok(frame.with_samples(
        frame
            .samples
            .iter()
            .map(|&x| x * rapp_gain(x.norm_sqr(), sat_input_power, knee))
            .collect(),
    ))
}

fn rapp_gain(power: f64, sat: f64, knee: f64) -> f64 {
    (1.0 + (power / sat).powf(knee)).powf(-1.0 / (2.0 * knee))
}

/// Diffraction-limited gain `4πS/λ²` of a circular aperture, dB.
pub fn antenna_gain_db(lens_diameter: f64, carrier_freq: f64) -> Result<f64> {
    if !(lens_diameter > 0.0 && carrier_freq > 0.0) {
        return Err(param("lens diameter and carrier frequency must be positive"));
    }
    let lambda = SPEED_OF_LIGHT / carrier_freq;
    let area = PI * lens_diameter * lens_diameter / 4.0;
    Ok(10.0 * (4.0 * PI * area / (lambda * lambda)).log10())
}

/// THz system response against carrier frequency, piecewise linear in dB.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponseProfile {
    /// `(frequency Hz, response dB)` points, ascending in frequency.
    pub points: Vec<(f64, f64)>,
}

impl ResponseProfile {
    pub fn validate(&self) -> Result<()> {
        if self.points.is_empty() {
            return Err(param("response profile needs at least one point"));
        }
        if self.points.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(param("response profile frequencies must increase"));
        }
        Ok(())
    }

    /// Interpolated response; flat extrapolation beyond the ends.
    pub fn gain_db(&self, freq: f64) -> f64 {
        let p = &self.points;
        if freq <= p[0].0 {
            return p[0].1;
        }
        if freq >= p[p.len() - 1].0 {
            return p[p.len() - 1].1;
        }
        let i = p.iter().position(|q| q.0 > freq).unwrap();
        let (f0, g0) = p[i - 1];
        let (f1, g1) = p[i];
        g0 + (g1 - g0) * (freq - f0) / (f1 - f0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sigcore::power_spectrum;
    use proptest::prelude::*;

    fn noise_frame(n: usize, seed: u64, fs: f64) -> ComplexFrame {
        let mut r = rng::stream(seed, "test");
        ComplexFrame::new((0..n).map(|_| rng::complex_gaussian(&mut r, 1.0)).collect(), fs).unwrap()
    }

    fn dc_tone(n: usize, fs: f64) -> ComplexFrame {
        ComplexFrame::new(vec![Complex64::new(1.0, 0.0); n], fs).unwrap()
    }

    #[test]
    fn zero_linewidth_is_identity() {
        let f = noise_frame(256, 1, 1e9);
        let l = LaserSpec { lorentzian_linewidth: 0.0, freq_offset: 0.0, seed: 1 };
        assert_eq!(apply_phase_noise(&f, &l).unwrap(), f);
    }

    #[test]
    fn wiener_increment_std() {
        let fs = 50e9;
        let phi = wiener_phase(500_000, 67e3, fs, 4);
        let inc: Vec<f64> = phi.windows(2).map(|w| w[1] - w[0]).collect();
        let var = inc.iter().map(|d| d * d).sum::<f64>() / inc.len() as f64;
        let expect = (2.0 * PI * 67e3 / fs).sqrt();
        assert!((expect - 2.902e-3).abs() < 1e-6);
        assert!((var.sqrt() / expect - 1.0).abs() < 0.01);
        // the wrap-around step is an ordinary increment
        assert!((phi[0] - phi[phi.len() - 1]).abs() < 6.0 * expect);
    }

    #[test]
    fn phase_noise_keeps_magnitude() {
        let f = noise_frame(4096, 2, 50e9);
        let l = LaserSpec { lorentzian_linewidth: 359e3, freq_offset: 0.0, seed: 9 };
        let g = apply_phase_noise(&f, &l).unwrap();
        for (a, b) in f.samples.iter().zip(&g.samples) {
            assert!((a.norm() - b.norm()).abs() < 1e-12);
        }
        assert_eq!(g, apply_phase_noise(&f, &l).unwrap());
    }

    #[test]
    fn frequency_offset() {
        let fs = 10e9;
        let f = dc_tone(1000, fs);
        assert_eq!(apply_freq_offset(&f, 0.0).unwrap(), f);
        let up = apply_freq_offset(&f, 1e9).unwrap();
        let psd = power_spectrum(&up, 1).unwrap();
        assert!((psd.peak_freq() - 1e9).abs() < psd.resolution);
        let back = apply_freq_offset(&up, -1e9).unwrap();
        for (a, b) in back.samples.iter().zip(&f.samples) {
            assert!((a - b).norm() < 1e-12);
        }
        assert!(apply_freq_offset(&f, 6e9).is_err());
    }

    #[test]
    fn awgn_full_band() {
        let fs = 10e9;
        let f = dc_tone(400_000, fs);
        let y = apply_awgn(&f, 16.0, fs, 3).unwrap();
        let noise_p = y.samples.iter().map(|v| (v - 1.0).norm_sqr()).sum::<f64>() / y.len() as f64;
        assert!((noise_p / 10f64.powf(-1.6) - 1.0).abs() < 0.01);
        assert_eq!(apply_awgn(&f, f64::INFINITY, fs, 3).unwrap(), f);
        assert_eq!(y, apply_awgn(&f, 16.0, fs, 3).unwrap());
    }

    #[test]
    fn awgn_in_band_snr() {
        // unit tone plus noise at 20 dB in a 1 GHz band; integrate the noise
        // periodogram over the band
        let fs = 16e9;
        let f = dc_tone(1 << 18, fs);
        let y = apply_awgn(&f, 20.0, 1e9, 5).unwrap();
        let noise = y.with_samples(y.samples.iter().map(|v| v - 1.0).collect());
        let psd = power_spectrum(&noise, 1).unwrap();
        let snr = 10.0 * (1.0 / psd.band_power(-0.5e9, 0.5e9)).log10();
        assert!((snr - 20.0).abs() < 0.1, "{snr}");
    }

    #[test]
    fn photocurrent_scaling() {
        let mut m = PowerModel { photocurrent: 2.15e-3, ref_photocurrent: 2.15e-3, snr_at_ref: 18.0, saturation_current: 3e-3 };
        assert_eq!(photocurrent_to_snr(&m).unwrap(), 18.0);
        m.photocurrent = 4.3e-3;
        assert!((photocurrent_to_snr(&m).unwrap() - 18.0 - 6.0206).abs() < 1e-3);
        m.photocurrent = 0.0;
        assert!(photocurrent_to_snr(&m).is_err());
    }

    #[test]
    fn if_response_shapes() {
        let r = IfResponse::default();
        assert!(r.variation_db(1e9, 10e9) < 5.0);
        assert!(r.within_budget(1e9, 10e9));
        assert!(r.magnitude_db(r.low_cut / 10.0) <= -20.0);
        let flat = IfResponse { low_cut: 0.0, high_cut: 25e9, passband_ripple_db: 0.1 };
        assert!(flat.variation_db(0.0, 7.5e9) <= 0.1);
    }

    #[test]
    fn if_response_attenuates_dc() {
        let fs = 10e9;
        let f = dc_tone(1024, fs);
        let r = IfResponse { low_cut: 0.3e9, high_cut: 4e9, passband_ripple_db: 5.0 };
        let y = apply_if_response(&f, &r).unwrap();
        assert!(y.power() < 1e-6);
        let near = apply_if_response(&f, &IfResponse { low_cut: 0.0, high_cut: 5e9, passband_ripple_db: 0.1 }).unwrap();
        assert!((near.power() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn rapp_values() {
        let f = ComplexFrame::new(vec![Complex64::from_polar(1e-3, 0.7)], 1.0).unwrap();
        let y = apply_saturation(&f, 1.0, 2.0).unwrap();
        assert!((y.samples[0].norm() / 1e-3 - 1.0).abs() < 1e-3);
        let at_sat = ComplexFrame::new(vec![Complex64::from_polar(1.0, -0.4)], 1.0).unwrap();
        let y = apply_saturation(&at_sat, 1.0, 2.0).unwrap();
        assert!((y.samples[0].norm() - 2f64.powf(-0.25)).abs() < 1e-12);
        assert!((y.samples[0].norm() - 0.84).abs() < 0.005);
    }

    #[test]
    fn antenna_gain() {
        let g = antenna_gain_db(0.05, 250e9).unwrap();
        assert!((g - 42.3).abs() < 0.2, "{g}");
        assert!((2.0 * g - 84.0).abs() < 1.0);
        let g2 = antenna_gain_db(0.05, 500e9).unwrap();
        assert!((g2 - g - 6.0206).abs() < 1e-3);
        assert!(antenna_gain_db(0.0, 250e9).is_err());
    }

    #[test]
    fn response_profile_interpolates() {
        let p = ResponseProfile { points: vec![(200e9, -2.0), (240e9, 0.0), (300e9, -6.0)] };
        assert_eq!(p.gain_db(240e9), 0.0);
        assert!((p.gain_db(270e9) + 3.0).abs() < 1e-12);
        assert_eq!(p.gain_db(100e9), -2.0);
    }

    proptest! {
        #[test]
        fn saturation_monotone_phase_preserving(a in 0.0f64..10.0, b in 0.0f64..10.0, ph in -3.1f64..3.1, knee in 0.5f64..5.0) {
            let f = ComplexFrame::new(vec![Complex64::from_polar(a, ph), Complex64::from_polar(b, ph)], 1.0).unwrap();
            let y = apply_saturation(&f, 1.5, knee).unwrap();
            if a < b { prop_assert!(y.samples[0].norm() <= y.samples[1].norm()); }
            if a > 0.0 { prop_assert!((y.samples[0].arg() - ph).abs() < 1e-12); }
        }

        #[test]
        fn snr_is_20_db_per_decade(i in 1e-4f64..1e-2) {
            let m = PowerModel { photocurrent: i, ref_photocurrent: 2.15e-3, snr_at_ref: 17.0, saturation_current: 3e-3 };
            let m10 = PowerModel { photocurrent: 10.0 * i, ..m.clone() };
            let d = photocurrent_to_snr(&m10).unwrap() - photocurrent_to_snr(&m).unwrap();
            prop_assert!((d - 20.0).abs() < 1e-9);
        }
    }
}
