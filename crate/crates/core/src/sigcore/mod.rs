//! Foundational signal types and primitives.

mod constellation;
mod debruijn;
mod pulse;
mod spectrum;
mod types;

pub use constellation::{map_qam16, map_symbols, Constellation};
pub use debruijn::{generate_de_bruijn, payload_bits};
pub use pulse::{decimate, matched_filter, rrc_taps, shape};
pub use spectrum::{power_spectrum, Psd};
pub(crate) use spectrum::circular_moving_average;
pub use types::{BitOrigin, BitStream, ComplexFrame, SymbolStream};
