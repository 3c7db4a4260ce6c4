use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{param, Result};

use super::types::{BitStream, SymbolStream};

/// Gray-labelled square QAM constellation with unit average energy.
///
/// Labels are `bits_per_symbol`-bit integers, MSB first. The upper half of the
/// label selects the in-phase level and the lower half the quadrature level,
/// each through a binary-reflected Gray code over levels `{-(L-1), .., L-1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Constellation {
    points: Vec<Complex64>,
    bits_per_symbol: usize,
    levels_per_axis: usize,
    scale: f64,
    // axis level index -> Gray code
    axis_gray: Vec<usize>,
}

impl Constellation {
    /// 16-QAM on {±1, ±3}² / √10.
    pub fn qam16() -> Self {
        Self::square(4)
    }

    /// QPSK on {±1}² / √2.
    pub fn qpsk() -> Self {
        Self::square(2)
    }

    fn square(bits_per_symbol: usize) -> Self {
        let half = bits_per_symbol / 2;
        let levels = 1usize << half;
        // mean |s|^2 of the unscaled grid is 2 (L^2 - 1) / 3
        let scale = (2.0 * ((levels * levels) as f64 - 1.0) / 3.0).sqrt();
        let axis_gray: Vec<usize> = (0..levels).map(|i| i ^ (i >> 1)).collect();
        let mut gray_to_index = vec![0; levels];
        for (i, &g) in axis_gray.iter().enumerate() {
            gray_to_index[g] = i;
        }
        let level = |i: usize| (2 * i) as f64 - (levels - 1) as f64;
        let points = (0..1usize << bits_per_symbol)
            .map(|label| {
                let gi = label >> half;
                let gq = label & (levels - 1);
                Complex64::new(level(gray_to_index[gi]), level(gray_to_index[gq])) / scale
            })
            .collect();
        Self {
            points,
            bits_per_symbol,
            levels_per_axis: levels,
            scale,
            axis_gray,
        }
    }

    /// Points indexed by label.
    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    pub fn bits_per_symbol(&self) -> usize {
        self.bits_per_symbol
    }

    pub fn point(&self, label: usize) -> Complex64 {
        self.points[label]
    }

    /// Distinct magnitudes, ascending.
    pub fn radii(&self) -> Vec<f64> {
        let mut r: Vec<f64> = self.points.iter().map(|p| p.norm()).collect();
        r.sort_by(f64::total_cmp);
        r.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
        r
    }

    fn axis_index(&self, v: f64) -> usize {
        let l = self.levels_per_axis as f64;
        let i = ((v * self.scale + l - 1.0) / 2.0).round();
        i.clamp(0.0, l - 1.0) as usize
    }

    /// Hard-decision label of the nearest point.
    pub fn demap(&self, z: Complex64) -> usize {
        let gi = self.axis_gray[self.axis_index(z.re)];
        let gq = self.axis_gray[self.axis_index(z.im)];
        (gi << (self.bits_per_symbol / 2)) | gq
    }

    /// Nearest constellation point.
    pub fn decide(&self, z: Complex64) -> Complex64 {
        let l = self.levels_per_axis;
        let level = |i: usize| ((2 * i) as f64 - (l - 1) as f64) / self.scale;
        Complex64::new(level(self.axis_index(z.re)), level(self.axis_index(z.im)))
    }

    /// Appends the label bits of `z`'s hard decision to `out`, MSB first.
    pub fn demap_bits(&self, z: Complex64, out: &mut Vec<u8>) {
        let label = self.demap(z);
        for b in (0..self.bits_per_symbol).rev() {
            out.push(((label >> b) & 1) as u8);
        }
    }
}

/// Maps bits onto `constellation`, `bits_per_symbol` at a time, MSB first.
pub fn map_symbols(
    bits: &BitStream,
    constellation: &Constellation,
    symbol_rate: f64,
) -> Result<SymbolStream> {
    let k = constellation.bits_per_symbol();
    if bits.len() % k != 0 {
        return Err(param(format!(
            "bit count {} is not a multiple of {k}",
            bits.len()
        )));
    }
    let symbols = bits
        .bits()
        .chunks_exact(k)
        .map(|c| {
            let label = c.iter().fold(0usize, |acc, &b| (acc << 1) | b as usize);
            constellation.point(label)
        })
        .collect();
    Ok(SymbolStream {
        symbols,
        bits_per_symbol: k,
        symbol_rate,
        source_bits: Some(Arc::new(bits.clone())),
    })
}

/// 16-QAM mapping; the constellation must carry 4 bits per symbol.
pub fn map_qam16(
    bits: &BitStream,
    constellation: &Constellation,
    symbol_rate: f64,
) -> Result<SymbolStream> {
    if constellation.bits_per_symbol() != 4 {
        return Err(param("map_qam16 needs a 16-point constellation"));
    }
    map_symbols(bits, constellation, symbol_rate)
}
