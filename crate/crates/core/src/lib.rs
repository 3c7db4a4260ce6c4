//! Link-level simulator for pilot-tone assisted 16-QAM photonic wireless
//! bridges.
//!
//! The crate is organised as a transmit / channel / receive pipeline:
//!
//! - [`sigcore`]: bit sources, 16-QAM mapping, RRC pulse shaping, spectra.
//! - [`txdsp`]: single-sideband-with-carrier and twin-SSB waveform synthesis,
//!   WDM channel grids.
//! - [`channel`]: laser phase noise, frequency offset, AWGN, IF response,
//!   receiver compression, antenna gain.
//! - [`rxdsp`]: pilot-tone carrier recovery, blind phase search, FFT
//!   frequency offset estimation, Viterbi-Viterbi offset removal,
//!   equalization and bit-error counting.
//! - [`metrics`]: SNR/EVM, FM-noise spectra and linewidth, FEC verdicts,
//!   BER-curve penalties.
//! - [`scenario`], [`pipeline`], [`sweep`]: experiment descriptions, the
//!   end-to-end link and reproducible sweeps with file output.

pub mod channel;
mod dsp;
pub mod error;
pub mod metrics;
pub mod pipeline;
pub mod rng;
pub mod rxdsp;
pub mod scenario;
pub mod sigcore;
pub mod sweep;
pub mod txdsp;

pub use error::{Error, Result};
pub use num_complex::Complex64;
