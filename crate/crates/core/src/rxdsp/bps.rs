use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{config, param, Result};
use crate::sigcore::{Constellation, SymbolStream};

/// Blind phase search settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BpsCfg {
    /// Candidate phases spread evenly over `[0, π/2)`.
    pub test_phases: usize,
    /// Length of the averaging window, symbols.
    pub block_length: usize,
}

impl Default for BpsCfg {
    fn default() -> Self {
        Self { test_phases: 32, block_length: 64 }
    }
}

impl BpsCfg {
    pub fn validate(&self) -> Result<()> {
        if self.test_phases < 4 || self.test_phases % 4 != 0 {
            return Err(config(format!(
                "BPS test phases must be a multiple of 4 and at least 4, got {}",
                self.test_phases
            )));
        }
        if self.block_length < 8 {
            return Err(config(format!("BPS block must be >= 8 symbols, got {}", self.block_length)));
        }
        Ok(())
    }
}

/// Blind phase search. For every symbol the test phase minimising the
/// summed squared decision distance over a centred window of
/// `block_length` symbols is chosen; the estimates are unwrapped in π/2 steps
/// and the remaining quadrant ambiguity is resolved against `preamble`, the
/// known leading symbols.
pub fn bps_recover(
    symbols: &SymbolStream,
    cfg: &BpsCfg,
    constellation: &Constellation,
    preamble: &[Complex64],
) -> Result<SymbolStream> {
    cfg.validate()?;
    if preamble.is_empty() || preamble.len() > symbols.len() {
        return Err(param("BPS preamble must be non-empty and fit in the frame"));
    }
    let phases = bps_phase(&symbols.symbols, cfg, constellation);
    let mut out: Vec<Complex64> = symbols
        .symbols
        .iter()
        .zip(&phases)
        .map(|(s, p)| s * Complex64::from_polar(1.0, *p))
        .collect();
    let quadrant = (0..4)
        .min_by(|&a, &b| {
            preamble_distance(&out, preamble, a).total_cmp(&preamble_distance(&out, preamble, b))
        })
        .unwrap();
    let q = Complex64::from_polar(1.0, quadrant as f64 * FRAC_PI_2);
    out.iter_mut().for_each(|v| *v *= q);
    Ok(symbols.with_symbols(out))
}

fn preamble_distance(out: &[Complex64], preamble: &[Complex64], quadrant: usize) -> f64 {
    let q = Complex64::from_polar(1.0, quadrant as f64 * FRAC_PI_2);
    out.iter().zip(preamble).map(|(s, p)| (s * q - p).norm_sqr()).sum()
}

/// Unwrapped per-symbol phase correction (to be applied as `exp(+jφ)`).
pub(crate) fn bps_phase(symbols: &[Complex64], cfg: &BpsCfg, constellation: &Constellation) -> Vec<f64> {
    let n = symbols.len();
    let p = cfg.test_phases;
    let step = FRAC_PI_2 / p as f64;
    // prefix sums of decision distances, one row per test phase
    let mut prefix = vec![0.0; p * (n + 1)];
    for k in 0..p {
        let rot = Complex64::from_polar(1.0, k as f64 * step);
        let row = &mut prefix[k * (n + 1)..(k + 1) * (n + 1)];
        for (i, s) in symbols.iter().enumerate() {
            let z = s * rot;
            row[i + 1] = row[i] + (z - constellation.decide(z)).norm_sqr();
        }
    }
    let half = cfg.block_length / 2;
    let mut out = Vec::with_capacity(n);
    let mut prev: Option<f64> = None;
    for i in 0..n {
        let lo = i.saturating_sub(half);
        let hi = (i + cfg.block_length - half).min(n);
        let best = (0..p)
            .min_by(|&a, &b| {
                let da = prefix[a * (n + 1) + hi] - prefix[a * (n + 1) + lo];
                let db = prefix[b * (n + 1) + hi] - prefix[b * (n + 1) + lo];
                da.total_cmp(&db)
            })
            .unwrap();
        let raw = best as f64 * step;
        let phase = match prev {
            None => raw,
            Some(q) => raw + ((q - raw) / FRAC_PI_2).round() * FRAC_PI_2,
        };
        prev = Some(phase);
        out.push(phase);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::wiener_phase;
    use crate::sigcore::{map_qam16, payload_bits};

    fn stream(n: usize, seed: u64) -> SymbolStream {
        let bits = payload_bits(11, seed, 4 * n).unwrap();
        map_qam16(&bits, &Constellation::qam16(), 5e9).unwrap()
    }

    fn rotate(s: &SymbolStream, phase: &[f64]) -> SymbolStream {
        s.with_symbols(s.symbols.iter().zip(phase).map(|(v, p)| v * Complex64::from_polar(1.0, *p)).collect())
    }

    #[test]
    fn static_rotation_noiseless() {
        let c = Constellation::qam16();
        let s = stream(4096, 1);
        let r = rotate(&s, &vec![0.3; s.len()]);
        let out = bps_recover(&r, &BpsCfg::default(), &c, &s.symbols[..64]).unwrap();
        for (a, b) in out.symbols.iter().zip(&s.symbols) {
            assert_eq!(c.decide(*a), *b);
        }
    }

    #[test]
    fn quadrant_equivariance() {
        let c = Constellation::qam16();
        let s = stream(4096, 2);
        let phi = wiener_phase(s.len(), 67e3, 5e9, 3);
        let base = rotate(&s, &phi);
        let cfg = BpsCfg::default();
        let ref_out = bps_recover(&base, &cfg, &c, &s.symbols[..64]).unwrap();
        for k in 1..4 {
            let turned = rotate(&base, &vec![k as f64 * FRAC_PI_2; s.len()]);
            let out = bps_recover(&turned, &cfg, &c, &s.symbols[..64]).unwrap();
            for (a, b) in out.symbols.iter().zip(&ref_out.symbols).skip(64) {
                assert_eq!(c.demap(*a), c.demap(*b));
            }
        }
    }

    #[test]
    fn tracks_wiener_phase() {
        let c = Constellation::qam16();
        let s = stream(16384, 5);
        let phi = wiener_phase(s.len(), 359e3, 5e9, 7);
        let out = bps_recover(&rotate(&s, &phi), &BpsCfg::default(), &c, &s.symbols[..64]).unwrap();
        let wrong = out.symbols.iter().zip(&s.symbols).filter(|(a, b)| c.decide(**a) != **b).count();
        assert_eq!(wrong, 0);
    }

    #[test]
    fn invalid_config() {
        assert!(BpsCfg { test_phases: 30, block_length: 64 }.validate().is_err());
        assert!(BpsCfg { test_phases: 32, block_length: 4 }.validate().is_err());
    }
}
