//! Receiver DSP: carrier recovery, equalization, synchronization and error
//! counting.

mod bps;
mod equalizer;
mod foe;
mod gain;
mod pilot;
mod sync;
mod vv;

pub use bps::{bps_recover, BpsCfg};
pub use equalizer::{equalize, Equalized, EqualizerCfg};
pub use foe::{compensate_offset, fft_foe};
pub use gain::normalize_amplitude;
pub use pilot::{coarse_center, extract_pilot, pilot_downconvert, PilotFilterCfg, PilotFilterShape};
pub use sync::{sync_and_count, wilson_interval, BerRecord};
pub use vv::{class_one_mask, vv_fixed_offset};
