use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{param, Result};

/// How a [`BitStream`] was produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum BitOrigin {
    DeBruijn { order: u32, seed: u64 },
    /// Several de Bruijn sequences concatenated and repeated to a length.
    Payload { order: u32, seed: u64 },
    Random { seed: u64 },
    Explicit,
}

/// Ordered binary sequence. Each element is 0 or 1.
#[derive(Debug, Clone, PartialEq)]
pub struct BitStream {
    bits: Vec<u8>,
    origin: BitOrigin,
}

impl BitStream {
    pub fn new(bits: Vec<u8>, origin: BitOrigin) -> Result<Self> {
        if bits.is_empty() {
            return Err(param("bit stream must be non-empty"));
        }
        if bits.iter().any(|&b| b > 1) {
            return Err(param("bit values must be 0 or 1"));
        }
        Ok(Self { bits, origin })
    }

    pub fn from_bits(bits: Vec<u8>) -> Result<Self> {
        Self::new(bits, BitOrigin::Explicit)
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    pub fn origin(&self) -> &BitOrigin {
        &self.origin
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }
}

/// Constellation symbols at one sample per symbol.
#[derive(Debug, Clone)]
pub struct SymbolStream {
    pub symbols: Vec<Complex64>,
    pub bits_per_symbol: usize,
    /// Symbol rate in Bd.
    pub symbol_rate: f64,
    /// Bits the symbols were mapped from, when known.
    pub source_bits: Option<Arc<BitStream>>,
}

impl SymbolStream {
    pub fn new(symbols: Vec<Complex64>, bits_per_symbol: usize, symbol_rate: f64) -> Self {
        Self {
            symbols,
            bits_per_symbol,
            symbol_rate,
            source_bits: None,
        }
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn mean_energy(&self) -> f64 {
        crate::dsp::mean_power(&self.symbols)
    }

    /// Same metadata, new symbol values.
    pub fn with_symbols(&self, symbols: Vec<Complex64>) -> Self {
        Self {
            symbols,
            bits_per_symbol: self.bits_per_symbol,
            symbol_rate: self.symbol_rate,
            source_bits: self.source_bits.clone(),
        }
    }
}

/// Uniformly sampled complex baseband waveform.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexFrame {
    pub samples: Vec<Complex64>,
    /// Sample rate in Sa/s.
    pub sample_rate: f64,
    /// Frequency (Hz) that relative frequency 0 of this frame maps to in the
    /// analog IF chain.
    pub center_offset: f64,
    /// Delay in samples between symbol k and sample k * sps.
    pub group_delay: usize,
}

impl ComplexFrame {
    pub fn new(samples: Vec<Complex64>, sample_rate: f64) -> Result<Self> {
        if samples.is_empty() {
            return Err(param("frame must be non-empty"));
        }
        if !(sample_rate > 0.0 && sample_rate.is_finite()) {
            return Err(param(format!("sample rate must be positive, got {sample_rate}")));
        }
        Ok(Self {
            samples,
            sample_rate,
            center_offset: 0.0,
            group_delay: 0,
        })
    }

    pub fn with_samples(&self, samples: Vec<Complex64>) -> Self {
        Self {
            samples,
            sample_rate: self.sample_rate,
            center_offset: self.center_offset,
            group_delay: self.group_delay,
        }
    }

    pub fn with_center_offset(mut self, center_offset: f64) -> Self {
        self.center_offset = center_offset;
        self
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Mean of |x|^2.
    pub fn power(&self) -> f64 {
        crate::dsp::mean_power(&self.samples)
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate
    }

    pub fn scaled(&self, gain: f64) -> Self {
        self.with_samples(self.samples.iter().map(|v| v * gain).collect())
    }
}
