use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dsp::{fft, ifft_in_place};
use crate::error::{param, Error, Result};
use crate::sigcore::{map_symbols, BitStream, Constellation, SymbolStream};

const SYNC_THRESHOLD: f64 = 0.5;
const Z_95: f64 = 1.959_963_984_540_054;

/// Bit-error count of one aligned frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BerRecord {
    pub ber: f64,
    pub errors: u64,
    pub bits: u64,
    /// Wilson 95% interval on the BER.
    pub ci_low: f64,
    pub ci_high: f64,
    /// Alignment lag in symbols.
    pub lag: usize,
    /// Normalized correlation at the chosen lag.
    pub peak: f64,
}

/// Wilson score interval at 95% confidence.
pub fn wilson_interval(errors: u64, bits: u64) -> (f64, f64) {
    if bits == 0 {
        return (0.0, 1.0);
    }
    let n = bits as f64;
    let p = errors as f64 / n;
    let z2 = Z_95 * Z_95;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = Z_95 * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

/// Aligns `rx` to the reference bits by circular cross-correlation, then
/// counts hard-decision bit errors. `reference` holds the transmitted bits
/// of the whole frame, `bits_per_symbol` per symbol.
pub fn sync_and_count(rx: &SymbolStream, reference: &BitStream, constellation: &Constellation) -> Result<BerRecord> {
    let bps = constellation.bits_per_symbol();
    let n = rx.len();
    if reference.len() != n * bps {
        return Err(param(format!(
            "reference holds {} bits, frame needs {}",
            reference.len(),
            n * bps
        )));
    }
    let tx = map_symbols(reference, constellation, rx.symbol_rate)?;
    let decided: Vec<Complex64> = rx.symbols.iter().map(|z| constellation.decide(*z)).collect();

    // corr[d] = Σ_k decided[k] · conj(tx[k - d])
    let a = fft(&decided);
    let b = fft(&tx.symbols);
    let mut c: Vec<Complex64> = a.iter().zip(&b).map(|(x, y)| x * y.conj()).collect();
    ifft_in_place(&mut c);
    let norm = (crate::dsp::mean_power(&decided) * crate::dsp::mean_power(&tx.symbols)).sqrt() * n as f64;
    // a periodic payload correlates equally at every period; keep the
    // smallest such lag
    let mut lag = 0;
    let mut peak = f64::NEG_INFINITY;
    for (d, v) in c.iter().enumerate() {
        let r = v.re / norm;
        if r > peak + 1e-9 {
            lag = d;
            peak = r;
        }
    }
    if !(peak >= SYNC_THRESHOLD) {
        return Err(Error::SyncFailure { peak });
    }

    let ref_bits = reference.bits();
    let mut decided_bits = Vec::with_capacity(bps);
    let mut errors = 0u64;
    for (k, z) in rx.symbols.iter().enumerate() {
        decided_bits.clear();
        constellation.demap_bits(*z, &mut decided_bits);
        let src = (k + n - lag) % n;
        errors += decided_bits
            .iter()
            .zip(&ref_bits[src * bps..(src + 1) * bps])
            .filter(|(x, y)| x != y)
            .count() as u64;
    }
    let bits = (n * bps) as u64;
    let (ci_low, ci_high) = wilson_interval(errors, bits);
    Ok(BerRecord {
        ber: errors as f64 / bits as f64,
        errors,
        bits,
        ci_low,
        ci_high,
        lag,
        peak,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use crate::sigcore::{map_qam16, payload_bits};

    fn frame(n: usize, seed: u64) -> (BitStream, SymbolStream) {
        let bits = payload_bits(11, seed, 4 * n).unwrap();
        let s = map_qam16(&bits, &Constellation::qam16(), 5e9).unwrap();
        (bits, s)
    }

    #[test]
    fn loopback_is_error_free() {
        let c = Constellation::qam16();
        let (bits, s) = frame(4096, 1);
        let r = sync_and_count(&s, &bits, &c).unwrap();
        assert_eq!(r.errors, 0);
        assert_eq!(r.ber, 0.0);
        assert_eq!(r.lag, 0);
        assert!((r.peak - 1.0).abs() < 1e-9);
    }

    #[test]
    fn recovers_circular_lag() {
        let c = Constellation::qam16();
        let (bits, s) = frame(4096, 2);
        let mut shifted = s.symbols.clone();
        shifted.rotate_right(37);
        let r = sync_and_count(&s.with_symbols(shifted), &bits, &c).unwrap();
        assert_eq!(r.lag, 37);
        assert_eq!(r.errors, 0);
    }

    #[test]
    fn wilson_at_fec_limit() {
        let (lo, hi) = wilson_interval(760, 200_000);
        let rel = (hi - lo) / 2.0 / 3.8e-3;
        assert!((rel - 0.07).abs() < 0.01, "{rel}");
        assert!(lo < 3.8e-3 && hi > 3.8e-3);
    }

    #[test]
    fn quadrant_slip_fails_sync() {
        let c = Constellation::qam16();
        let (bits, s) = frame(4096, 3);
        let turned = s.with_symbols(s.symbols.iter().map(|v| v * Complex64::i()).collect());
        match sync_and_count(&turned, &bits, &c) {
            Err(Error::SyncFailure { .. }) => {}
            other => panic!("expected sync failure, got {other:?}"),
        }
    }

    #[test]
    fn noisy_count_matches_bits() {
        let c = Constellation::qam16();
        let (bits, s) = frame(8192, 4);
        let mut r = rng::stream(4, "sync");
        let noisy = s.with_symbols(s.symbols.iter().map(|v| v + rng::complex_gaussian(&mut r, 0.05)).collect());
        let rec = sync_and_count(&noisy, &bits, &c).unwrap();
        assert_eq!(rec.bits, 32768);
        assert!(rec.ber > 0.0 && rec.ber < 0.05);
        assert!(rec.ci_low <= rec.ber && rec.ber <= rec.ci_high);
    }
}
