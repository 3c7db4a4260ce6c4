use std::f64::consts::FRAC_PI_4;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::sigcore::SymbolStream;

const MIN_CLASS_ONE: usize = 100;

// Ring radii of unit-energy 16-QAM are √0.2, 1 and √1.8; the thresholds
// sit halfway between neighbouring rings.
const INNER_LIMIT: f64 = 0.723_606_797_749_979;
const OUTER_LIMIT: f64 = 1.170_820_393_249_937;

/// Class-I symbols: inner and outer ring, whose ideal phases are all
/// π/4 + kπ/2. The middle ring is excluded.
pub fn class_one_mask(symbols: &[Complex64]) -> Vec<bool> {
    symbols
        .iter()
        .map(|s| {
            let r = s.norm();
            r < INNER_LIMIT || r > OUTER_LIMIT
        })
        .collect()
}

/// Static phase offset by QAM-adapted Viterbi-Viterbi over the whole frame:
/// `θ = arg(-Σ s⁴) / 4` over the Class-I symbols, in `(-π/4, π/4]`.
/// Expects unit average symbol energy.
pub fn vv_fixed_offset(symbols: &SymbolStream) -> Result<f64> {
    let mask = class_one_mask(&symbols.symbols);
    let count = mask.iter().filter(|m| **m).count();
    if count < MIN_CLASS_ONE {
        return Err(Error::EstimationFailure(format!(
            "only {count} class-I symbols, need {MIN_CLASS_ONE}"
        )));
    }
    let acc: Complex64 = symbols
        .symbols
        .iter()
        .zip(&mask)
        .filter(|(_, m)| **m)
        .map(|(s, _)| s.powi(4))
        .sum();
    let theta = (-acc).arg() / 4.0;
    Ok(theta.clamp(-FRAC_PI_4, FRAC_PI_4))
}
