//! Root-raised-cosine pulse shaping and matched filtering.
//!
//! Filtering is circular over the whole frame and the taps are centre
//! referenced, so symbol `k` lands exactly on sample `k * sps` and the
//! recorded group delay is zero.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use num_complex::Complex64;

use crate::dsp::circular_fir;
use crate::error::{param, Result};

use super::types::{ComplexFrame, SymbolStream};

/// Unit-energy RRC impulse response spanning `span_symbols` symbols at
/// `samples_per_symbol`; `span * sps + 1` taps, symmetric about the centre.
pub fn rrc_taps(rolloff: f64, span_symbols: usize, samples_per_symbol: usize) -> Result<Vec<f64>> {
    if !(rolloff > 0.0 && rolloff <= 1.0) {
        return Err(param(format!("roll-off must be in (0, 1], got {rolloff}")));
    }
    if span_symbols < 8 {
        return Err(param(format!("RRC span must be >= 8 symbols, got {span_symbols}")));
    }
    if samples_per_symbol < 2 {
        return Err(param(format!(
            "samples per symbol must be >= 2, got {samples_per_symbol}"
        )));
    }
    let n = span_symbols * samples_per_symbol + 1;
    let centre = (n / 2) as isize;
    let b = rolloff;
    let mut taps: Vec<f64> = (0..n as isize)
        .map(|i| {
            let t = (i - centre) as f64 / samples_per_symbol as f64;
            rrc_at(t, b)
        })
        .collect();
    let energy: f64 = taps.iter().map(|v| v * v).sum();
    let norm = energy.sqrt();
    taps.iter_mut().for_each(|v| *v /= norm);
    // exact symmetry regardless of rounding in the formula
    for k in 0..n / 2 {
        let avg = 0.5 * (taps[k] + taps[n - 1 - k]);
        taps[k] = avg;
        taps[n - 1 - k] = avg;
    }
    Ok(taps)
}

/// RRC impulse response at `t` symbol periods (unnormalized).
fn rrc_at(t: f64, b: f64) -> f64 {
    if t.abs() < 1e-12 {
        return 1.0 - b + 4.0 * b / PI;
    }
    let x = 4.0 * b * t;
    if (1.0 - x * x).abs() < 1e-9 {
        let a = PI / (4.0 * b);
        return b * FRAC_1_SQRT_2 * ((1.0 + 2.0 / PI) * a.sin() + (1.0 - 2.0 / PI) * a.cos());
    }
    ((PI * t * (1.0 - b)).sin() + x * (PI * t * (1.0 + b)).cos()) / (PI * t * (1.0 - x * x))
}

/// Upsamples by `samples_per_symbol` and filters with `taps` scaled by
/// √sps, so frame power equals mean symbol energy.
pub fn shape(symbols: &SymbolStream, taps: &[f64], samples_per_symbol: usize) -> Result<ComplexFrame> {
    if samples_per_symbol < 2 {
        return Err(param("samples per symbol must be >= 2"));
    }
    if taps.is_empty() || taps.len() % 2 == 0 {
        return Err(param("taps must be a non-empty odd-length sequence"));
    }
    if symbols.is_empty() {
        return Err(param("no symbols to shape"));
    }
    let n = symbols.len() * samples_per_symbol;
    let mut up = vec![Complex64::new(0.0, 0.0); n];
    for (i, &s) in symbols.symbols.iter().enumerate() {
        up[i * samples_per_symbol] = s;
    }
    let g = (samples_per_symbol as f64).sqrt();
    let scaled: Vec<f64> = taps.iter().map(|t| t * g).collect();
    let out = circular_fir(&up, &scaled);
    ComplexFrame::new(out, symbols.symbol_rate * samples_per_symbol as f64)
}

/// Filters with `taps` / √sps, the matched counterpart of [`shape`]: the
/// cascade has unit gain at symbol instants.
pub fn matched_filter(frame: &ComplexFrame, taps: &[f64], samples_per_symbol: usize) -> ComplexFrame {
    let g = 1.0 / (samples_per_symbol as f64).sqrt();
    let scaled: Vec<f64> = taps.iter().map(|t| t * g).collect();
    frame.with_samples(circular_fir(&frame.samples, &scaled))
}

/// Keeps every `factor`-th sample starting at `phase`.
pub fn decimate(frame: &ComplexFrame, factor: usize, phase: usize) -> Result<ComplexFrame> {
    if factor == 0 || phase >= factor {
        return Err(param("decimation phase must be below a positive factor"));
    }
    let samples: Vec<Complex64> = frame.samples.iter().skip(phase).step_by(factor).copied().collect();
    let mut out = ComplexFrame::new(samples, frame.sample_rate / factor as f64)?;
    out.center_offset = frame.center_offset;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sigcore::{map_qam16, payload_bits, Constellation};

    #[test]
    fn taps_symmetric_and_unit_energy() {
        for &b in &[0.1, 0.35, 1.0] {
            let t = rrc_taps(b, 32, 10).unwrap();
            assert_eq!(t.len(), 321);
            let e: f64 = t.iter().map(|v| v * v).sum();
            assert!((e - 1.0).abs() < 1e-9);
            for k in 0..t.len() {
                assert_eq!(t[k], t[t.len() - 1 - k]);
            }
        }
    }

    #[test]
    fn singular_points_are_finite() {
        // t = ±1/(4β) falls on a sample for β = 0.25, sps = 4
        let t = rrc_taps(0.25, 8, 4).unwrap();
        assert!(t.iter().all(|v| v.is_finite()));
        let direct = rrc_at(1.0 + 1e-7, 0.25);
        let limit = rrc_at(1.0, 0.25);
        assert!((direct - limit).abs() < 1e-5);
    }

    #[test]
    fn invalid_parameters() {
        assert!(rrc_taps(0.0, 32, 10).is_err());
        assert!(rrc_taps(1.5, 32, 10).is_err());
        assert!(rrc_taps(0.1, 4, 10).is_err());
        assert!(rrc_taps(0.1, 32, 1).is_err());
    }

    #[test]
    fn raised_cosine_cascade_is_nyquist() {
        for &b in &[0.1, 0.35, 1.0] {
            let sps = 10;
            let t = rrc_taps(b, 64, sps).unwrap();
            let n = t.len();
            // full linear self-convolution
            let mut rc = vec![0.0; 2 * n - 1];
            for i in 0..n {
                for j in 0..n {
                    rc[i + j] += t[i] * t[j];
                }
            }
            let centre = n - 1;
            assert!((rc[centre] - 1.0).abs() < 1e-9);
            let mut k = 1;
            while centre + k * sps < rc.len() {
                assert!(rc[centre + k * sps].abs() < 1e-3, "beta {b}, lag {k}: {}", rc[centre + k * sps]);
                assert!(rc[centre - k * sps].abs() < 1e-3);
                k += 1;
            }
        }
    }

    #[test]
    fn impulse_response_is_scaled_taps() {
        let sps = 4;
        let taps = rrc_taps(0.1, 8, sps).unwrap();
        let mut sym = vec![Complex64::new(0.0, 0.0); 64];
        sym[20] = Complex64::new(1.0, 0.0);
        let s = SymbolStream::new(sym, 4, 1.0);
        let f = shape(&s, &taps, sps).unwrap();
        let centre = 20 * sps;
        let g = (sps as f64).sqrt();
        for (i, &t) in taps.iter().enumerate() {
            let idx = centre + i - taps.len() / 2;
            assert!((f.samples[idx].re - t * g).abs() < 1e-12);
        }
    }

    #[test]
    fn frame_rate_and_power() {
        let c = Constellation::qam16();
        let bits = payload_bits(11, 1, 8192).unwrap();
        let s = map_qam16(&bits, &c, 5e9).unwrap();
        let taps = rrc_taps(0.1, 32, 10).unwrap();
        let f = shape(&s, &taps, 10).unwrap();
        assert_eq!(f.sample_rate, 50e9);
        assert_eq!(f.len(), 20480);
        assert!((f.power() / s.mean_energy() - 1.0).abs() < 0.01);
    }

    #[test]
    fn shape_and_match_recovers_symbols() {
        let c = Constellation::qam16();
        let bits = payload_bits(11, 4, 8192).unwrap();
        let s = map_qam16(&bits, &c, 5e9).unwrap();
        let taps = rrc_taps(0.1, 64, 10).unwrap();
        let f = shape(&s, &taps, 10).unwrap();
        let m = matched_filter(&f, &taps, 10);
        let r = decimate(&m, 10, 0).unwrap();
        let err: f64 = r.samples.iter().zip(&s.symbols).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>()
            / s.len() as f64;
        let evm = err.sqrt() / s.mean_energy().sqrt();
        assert!(evm < 0.005, "evm {evm}");
    }
}
