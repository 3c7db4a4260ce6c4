use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{config, param, Error, Result};
use crate::sigcore::{ComplexFrame, Constellation, SymbolStream};

const CONVERGENCE_BLOCK: usize = 256;
const CONVERGED_DRIFT: f64 = 1e-4;
/// The radius-directed stage starts slowly from the centre spike; its
/// drift says nothing about convergence before a few blocks have passed.
const MIN_RDE_BLOCKS: usize = 8;
const DIVERGENCE_RATIO: f64 = 10.0;

/// T/2-spaced adaptive equalizer settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EqualizerCfg {
    pub taps: usize,
    pub step_rde: f64,
    pub step_dd: f64,
    /// Symbols used to adapt the taps before they are frozen for the output
    /// pass.
    pub training_symbols: usize,
    /// Gain of the first-order decision-directed phase tracker that lets the
    /// DD stage run ahead of carrier recovery.
    #[serde(default = "default_tracker_gain")]
    pub tracker_gain: f64,
}

// Slower trackers let the taps take over the rotation and the DD stage
// wanders off.
fn default_tracker_gain() -> f64 {
    0.2
}

impl Default for EqualizerCfg {
    fn default() -> Self {
        Self {
            taps: 21,
            step_rde: 1e-3,
            step_dd: 5e-4,
            training_symbols: 16384,
            tracker_gain: default_tracker_gain(),
        }
    }
}

impl EqualizerCfg {
    pub fn validate(&self) -> Result<()> {
        if self.taps == 0 || self.taps % 2 == 0 {
            return Err(config(format!("equalizer taps must be odd, got {}", self.taps)));
        }
        if !(self.step_rde > 0.0 && self.step_dd > 0.0) {
            return Err(config("equalizer step sizes must be positive"));
        }
        if !(self.tracker_gain >= 0.0 && self.tracker_gain < 1.0) {
            return Err(config("tracker gain must be in [0, 1)"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Equalized {
    pub symbols: SymbolStream,
    pub taps: Vec<Complex64>,
    /// Symbol index at which the radius-directed stage handed over to
    /// decision-directed adaptation.
    pub switch_symbol: usize,
}

/// Adapts a T/2-spaced FIR on the first `training_symbols` symbols —
/// radius-directed until the taps settle, then decision-directed LMS — and
/// filters the whole frame with the converged taps.
///
/// `frame` carries two samples per symbol with symbol instants on the even
/// samples, scaled to roughly unit symbol energy.
pub fn equalize(frame: &ComplexFrame, cfg: &EqualizerCfg, constellation: &Constellation) -> Result<Equalized> {
    cfg.validate()?;
    let x = &frame.samples;
    if x.len() < 2 * cfg.taps || x.len() % 2 != 0 {
        return Err(param("equalizer input must hold an even number of samples, several taps long"));
    }
    let n_sym = x.len() / 2;
    let len = x.len() as isize;
    let centre = cfg.taps / 2;
    let mut w = vec![Complex64::new(0.0, 0.0); cfg.taps];
    w[centre] = Complex64::new(1.0, 0.0);
    let radii = constellation.radii();
    let tap_input = |k: usize, buf: &mut Vec<Complex64>| {
        buf.clear();
        for i in 0..cfg.taps {
            let idx = (2 * k as isize + centre as isize - i as isize).rem_euclid(len) as usize;
            buf.push(x[idx]);
        }
    };
    let mut xv = Vec::with_capacity(cfg.taps);
    let mut dd = false;
    let mut switch_symbol = cfg.training_symbols.min(n_sym);
    let mut phase = Complex64::new(1.0, 0.0);
    let mut block_start = w.clone();
    let mut switch_taps = w.clone();
    let train = cfg.training_symbols.min(n_sym);
    for k in 0..train {
        tap_input(k, &mut xv);
        let y: Complex64 = w.iter().zip(&xv).map(|(a, b)| a * b).sum();
        if !y.is_finite() {
            return Err(Error::EqualizerDiverged { ratio: f64::INFINITY });
        }
        let z = y * phase.conj();
        let d = constellation.decide(z);
        let turn = (z * d.conj()).im;
        phase *= Complex64::from_polar(1.0, cfg.tracker_gain * turn);
        phase /= phase.norm();
        let (mu, e) = if dd {
            (cfg.step_dd, d * phase - y)
        } else {
            let r2 = y.norm_sqr();
            let target = radii
                .iter()
                .copied()
                .min_by(|a, b| (a - r2.sqrt()).abs().total_cmp(&(b - r2.sqrt()).abs()))
                .unwrap();
            (cfg.step_rde, y * (target * target - r2))
        };
        for (wi, xi) in w.iter_mut().zip(&xv) {
            *wi += mu * e * xi.conj();
        }
        if !dd && (k + 1) % CONVERGENCE_BLOCK == 0 {
            let drift = w.iter().zip(&block_start).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt()
                / CONVERGENCE_BLOCK as f64;
            if drift < CONVERGED_DRIFT && k + 1 >= MIN_RDE_BLOCKS * CONVERGENCE_BLOCK {
                dd = true;
                switch_symbol = k + 1;
                switch_taps.clone_from(&w);
            }
            block_start.clone_from(&w);
        }
    }
    if !dd {
        switch_taps.clone_from(&w);
    }
    // The DD stage and its phase tracker share one degree of freedom, a
    // common rotation of the taps. Refer it back to the radius-directed
    // solution so carrier recovery downstream sees the channel's own phase.
    let drift: Complex64 = w.iter().zip(&switch_taps).map(|(a, b)| a * b.conj()).sum();
    if drift.norm() > 0.0 {
        let back = drift.conj() / drift.norm();
        w.iter_mut().for_each(|t| *t *= back);
    }
    let mut out = Vec::with_capacity(n_sym);
    for k in 0..n_sym {
        tap_input(k, &mut xv);
        out.push(w.iter().zip(&xv).map(|(a, b)| a * b).sum::<Complex64>());
    }
    let p_in = x.iter().step_by(2).map(|v| v.norm_sqr()).sum::<f64>() / n_sym as f64;
    let p_out = out.iter().map(|v| v.norm_sqr()).sum::<f64>() / n_sym as f64;
    let ratio = p_out / p_in;
    if !ratio.is_finite() || ratio > DIVERGENCE_RATIO {
        return Err(Error::EqualizerDiverged { ratio });
    }
    let mut symbols = SymbolStream::new(out, constellation.bits_per_symbol(), frame.sample_rate / 2.0);
    symbols.source_bits = None;
    Ok(Equalized { symbols, taps: w, switch_symbol })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{apply_awgn, apply_if_response, IfResponse};
    use crate::metrics::snr_estimate;
    use crate::sigcore::{decimate, map_qam16, matched_filter, payload_bits, rrc_taps, shape};

    fn setup(n: usize, seed: u64) -> (SymbolStream, ComplexFrame, Vec<f64>) {
        let bits = payload_bits(11, seed, 4 * n).unwrap();
        let s = map_qam16(&bits, &Constellation::qam16(), 5e9).unwrap();
        let taps = rrc_taps(0.1, 64, 10).unwrap();
        let f = shape(&s, &taps, 10).unwrap();
        (s, f, taps)
    }

    fn to_two_sps(f: &ComplexFrame, taps: &[f64]) -> ComplexFrame {
        let m = decimate(&matched_filter(f, taps, 10), 5, 0).unwrap();
        let p = m.samples.iter().step_by(2).map(|v| v.norm_sqr()).sum::<f64>() / (m.len() / 2) as f64;
        m.scaled(1.0 / p.sqrt())
    }

    #[test]
    fn identity_channel_keeps_centre_spike() {
        let c = Constellation::qam16();
        let (_, f, taps) = setup(8192, 1);
        let eq = equalize(&to_two_sps(&f, &taps), &EqualizerCfg::default(), &c).unwrap();
        let centre = eq.taps[10].norm_sqr();
        let off: f64 = eq.taps.iter().map(|t| t.norm_sqr()).sum::<f64>() - centre;
        assert!(off / centre < 0.01, "off-centre energy {}", off / centre);
    }

    fn run(cfg: &EqualizerCfg) -> (f64, f64, usize) {
        let c = Constellation::qam16();
        let (s, f, taps) = setup(32768, 2);
        let up = f.clone().with_center_offset(7.25e9);
        let dist = apply_if_response(&up, &IfResponse::default()).unwrap();
        let noisy = apply_awgn(&dist, 20.0, 5e9, 3).unwrap();
        let two = to_two_sps(&noisy, &taps);
        let plain = s.with_symbols(two.samples.iter().step_by(2).copied().collect());
        let eq = equalize(&two, cfg, &c).unwrap();
        // best complex gain; the IF response also rotates the band
        let gain = |r: &SymbolStream| {
            let num: Complex64 = r.symbols.iter().zip(&s.symbols).map(|(y, x)| y.conj() * x).sum();
            let den: f64 = r.symbols.iter().map(|y| y.norm_sqr()).sum();
            let g = num / den;
            r.with_symbols(r.symbols.iter().map(|v| v * g).collect())
        };
        let before = snr_estimate(&s, &gain(&plain)).unwrap().snr_db;
        let after = snr_estimate(&s, &gain(&eq.symbols)).unwrap().snr_db;
        (before, after, eq.switch_symbol)
    }

    #[test]
    fn improves_evm_through_if_response() {
        // the default IF response, data band at 4.5-10 GHz IF
        let (before, after, switch) = run(&EqualizerCfg::default());
        assert!(after - before >= 2.0, "before {before:.2} after {after:.2} switch {switch}");
    }

    #[test]
    fn rejects_even_taps() {
        let cfg = EqualizerCfg { taps: 20, ..EqualizerCfg::default() };
        assert!(cfg.validate().is_err());
    }
}
