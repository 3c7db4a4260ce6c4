use std::f64::consts::PI;

use num_complex::Complex64;

use crate::dsp::{bin_freq, fft};
use crate::error::{param, Error, Result};
use crate::sigcore::SymbolStream;

const MIN_SYMBOLS: usize = 1 << 12;
const MIN_PEAK_TO_MEDIAN_DB: f64 = 6.0;
/// Fraction of the ±baud/8 range beyond which the 4th-power line is too
/// close to its alias to be trusted.
const EDGE_FRACTION: f64 = 0.9;

/// Frequency offset from the spectral line of `s^4`: the peak of
/// `|FFT(s^4)|`, refined by parabolic interpolation, divided by four.
/// Unambiguous for offsets inside `±baud/8`.
pub fn fft_foe(symbols: &SymbolStream) -> Result<f64> {
    let n = symbols.len();
    if n < MIN_SYMBOLS {
        return Err(param(format!("FFT FOE needs at least {MIN_SYMBOLS} symbols, got {n}")));
    }
    let p4: Vec<Complex64> = symbols.symbols.iter().map(|s| s.powi(4)).collect();
    let mag: Vec<f64> = fft(&p4).iter().map(|v| v.norm()).collect();
    let (k, peak) = mag
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(k, v)| (k, *v))
        .expect("non-empty");
    let mut sorted = mag.clone();
    let mid = n / 2;
    let median = *sorted.select_nth_unstable_by(mid, f64::total_cmp).1;
    let ratio_db = 20.0 * (peak / median.max(f64::MIN_POSITIVE)).log10();
    if ratio_db < MIN_PEAK_TO_MEDIAN_DB {
        return Err(Error::EstimationFailure(format!(
            "no dominant 4th-power line: peak/median {ratio_db:.1} dB"
        )));
    }
    let (a, b, c) = (mag[(k + n - 1) % n], mag[k], mag[(k + 1) % n]);
    let denom = a - 2.0 * b + c;
    let delta = if denom.abs() > 0.0 { 0.5 * (a - c) / denom } else { 0.0 };
    let rate = symbols.symbol_rate;
    let f4 = bin_freq(k, n, rate) + delta * rate / n as f64;
    let est = f4 / 4.0;
    if est.abs() > EDGE_FRACTION * rate / 8.0 {
        return Err(Error::EstimationFailure(format!(
            "offset estimate {est:.3e} Hz sits at the ±baud/8 ambiguity limit"
        )));
    }
    Ok(est)
}

/// Removes a frequency offset from symbol-rate samples.
pub fn compensate_offset(symbols: &SymbolStream, offset: f64) -> SymbolStream {
    let w = -2.0 * PI * offset / symbols.symbol_rate;
    symbols.with_symbols(
        symbols
            .symbols
            .iter()
            .enumerate()
            .map(|(i, s)| s * Complex64::from_polar(1.0, w * i as f64))
            .collect(),
    )
}
