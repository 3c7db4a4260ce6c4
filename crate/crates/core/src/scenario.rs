//! Experiment descriptions.
//!
//! A [`LinkScenario`] is a TOML document carrying a `schema_version`. Every
//! field not marked required has a default, so a scenario file only states
//! what differs from the baseline link (5 GBd 16-QAM, 10 µs frame, SSB with
//! a 3.25 GHz upconversion, pilot-tone recovery).

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::channel::{IfResponse, LaserSpec, LowFreqNoise, PowerModel, ResponseProfile};
use crate::error::{config, Error, Result};
use crate::rxdsp::{BpsCfg, EqualizerCfg, PilotFilterCfg};
use crate::txdsp::{SsbConfig, TwinSsbConfig, DEFAULT_BIAS_PHASE, DEFAULT_RRC_SPAN};

pub const SCHEMA_VERSION: u32 = 1;

/// Scenarios shipped with the crate, as `(name, TOML)`.
pub const CANONICAL: &[(&str, &str)] = &[
    ("fig6-ecl-pilot", include_str!("../scenarios/fig6-ecl-pilot.toml")),
    ("fig6-dfb-pilot", include_str!("../scenarios/fig6-dfb-pilot.toml")),
    ("fig6-ecl-bps", include_str!("../scenarios/fig6-ecl-bps.toml")),
    ("fig6-dfb-bps", include_str!("../scenarios/fig6-dfb-bps.toml")),
    ("fig6b-ptspr", include_str!("../scenarios/fig6b-ptspr.toml")),
    ("fig8-wdm", include_str!("../scenarios/fig8-wdm.toml")),
    ("fig10-twinssb", include_str!("../scenarios/fig10-twinssb.toml")),
];

/// Parses a shipped scenario by name.
pub fn canonical(name: &str) -> Result<LinkScenario> {
    let (_, text) = CANONICAL
        .iter()
        .find(|(n, _)| *n == name)
        .ok_or_else(|| config(format!("no canonical scenario named '{name}'")))?;
    LinkScenario::from_toml(text)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Qam16,
}

/// Transmit waveform.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Waveform {
    Ssb(SsbConfig),
    TwinSsb(TwinSsbConfig),
}

impl Waveform {
    pub fn ptspr_db(&self) -> f64 {
        match self {
            Waveform::Ssb(c) => c.ptspr_db,
            Waveform::TwinSsb(c) => c.ptspr_db,
        }
    }

    pub fn set_ptspr_db(&mut self, v: f64) {
        match self {
            Waveform::Ssb(c) => c.ptspr_db = v,
            Waveform::TwinSsb(c) => c.ptspr_db = v,
        }
    }

    pub fn guard_band(&self, baud: f64) -> f64 {
        match self {
            Waveform::Ssb(c) => c.guard_band(baud),
            Waveform::TwinSsb(c) => c.guard_band(baud),
        }
    }

    /// Highest baseband frequency occupied, Hz.
    pub fn max_freq(&self, baud: f64) -> f64 {
        match self {
            Waveform::Ssb(c) => c.upconversion_freq + c.signal_bandwidth(baud) / 2.0,
            Waveform::TwinSsb(c) => c.total_span(baud) / 2.0,
        }
    }
}

/// One channel impairment; they are applied in list order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Impairment {
    /// Wiener phase noise with the scenario laser's linewidth.
    PhaseNoise,
    /// The scenario laser's static frequency offset.
    FreqOffset,
    /// THz system response at the scenario's carrier frequency, applied as a
    /// power loss.
    ThzResponse(ResponseProfile),
    /// Rapp compression at the power model's saturation current.
    Saturation {
        #[serde(default = "default_knee")]
        knee: f64,
    },
    IfResponse(IfResponse),
    /// White noise at the power model's fixed density.
    Awgn,
    LowFreqNoise(LowFreqNoise),
}

fn default_knee() -> f64 {
    2.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum RecoveryMethod {
    #[default]
    Pilot,
    Bps,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Recovery {
    #[serde(default)]
    pub method: RecoveryMethod,
    #[serde(default = "default_pilot_filter")]
    pub pilot_filter: PilotFilterCfg,
    #[serde(default)]
    pub bps: BpsCfg,
    #[serde(default)]
    pub equalizer: EqualizerCfg,
    /// Symbols at the frame start known to the receiver; they fix the
    /// quarter-turn ambiguity of blind equalization and BPS.
    #[serde(default = "default_preamble")]
    pub preamble_symbols: usize,
}

fn default_pilot_filter() -> PilotFilterCfg {
    PilotFilterCfg::brick_wall(50e6)
}

fn default_preamble() -> usize {
    64
}

impl Default for Recovery {
    fn default() -> Self {
        Self {
            method: RecoveryMethod::Pilot,
            pilot_filter: default_pilot_filter(),
            bps: BpsCfg::default(),
            equalizer: EqualizerCfg::default(),
            preamble_symbols: default_preamble(),
        }
    }
}

/// Scenario parameter a sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    /// Operating photocurrent, A.
    Photocurrent,
    PtsprDb,
    /// THz carrier (WDM channel) frequency, Hz.
    ChannelFreq,
    /// Two-sided pilot filter bandwidth, Hz.
    PilotBandwidth,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::Photocurrent => "photocurrent",
            SweepAxis::PtsprDb => "ptspr_db",
            SweepAxis::ChannelFreq => "channel_freq",
            SweepAxis::PilotBandwidth => "pilot_bandwidth",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        [Self::Photocurrent, Self::PtsprDb, Self::ChannelFreq, Self::PilotBandwidth]
            .into_iter()
            .find(|a| a.name() == name)
            .ok_or_else(|| config(format!("unknown sweep axis '{name}'")))
    }
}

/// Sweep stored with a scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
}

impl SweepSpec {
    /// Inclusive `start:stop:step` range.
    pub fn range(axis: SweepAxis, start: f64, stop: f64, step: f64) -> Result<Self> {
        if !(step != 0.0 && (stop - start) / step >= 0.0) || !start.is_finite() || !stop.is_finite() {
            return Err(config(format!("bad sweep range {start}:{stop}:{step}")));
        }
        let n = ((stop - start) / step + 1e-9).floor() as usize + 1;
        Ok(Self {
            axis,
            values: (0..n).map(|i| start + i as f64 * step).collect(),
        })
    }

    /// Parses `axis=start:stop:step`.
    pub fn parse(text: &str) -> Result<Self> {
        let (axis, range) = text
            .split_once('=')
            .ok_or_else(|| config(format!("sweep '{text}' is not axis=start:stop:step")))?;
        let parts: Vec<f64> = range
            .split(':')
            .map(|p| p.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| config(format!("sweep '{text}': {e}")))?;
        match parts[..] {
            [start, stop, step] => Self::range(SweepAxis::parse(axis.trim())?, start, stop, step),
            _ => Err(config(format!("sweep '{text}' is not axis=start:stop:step"))),
        }
    }
}

/// Full description of one link experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkScenario {
    pub schema_version: u32,
    pub name: String,
    #[serde(default)]
    pub description: String,
    #[serde(default = "default_baud")]
    pub baud: f64,
    #[serde(default)]
    pub format: Format,
    #[serde(default = "default_frame_duration")]
    pub frame_duration: f64,
    #[serde(default = "default_sps")]
    pub samples_per_symbol: usize,
    #[serde(default = "default_waveform")]
    pub waveform: Waveform,
    /// IF of the pilot after the receiver's downconversion, Hz. Positions
    /// the frame inside the IF response and the low-frequency noise floor.
    #[serde(default = "default_pilot_if")]
    pub pilot_if: f64,
    /// THz carrier frequency, Hz (WDM channel).
    #[serde(default = "default_carrier")]
    pub carrier_freq: f64,
    /// Circular delay of the transmitted frame, symbols.
    #[serde(default)]
    pub tx_delay_symbols: f64,
    pub laser: LaserSpec,
    pub power: PowerModel,
    #[serde(default)]
    pub impairments: Vec<Impairment>,
    #[serde(default)]
    pub recovery: Recovery,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSpec>,
}

fn default_baud() -> f64 {
    5e9
}

fn default_frame_duration() -> f64 {
    10e-6
}

fn default_sps() -> usize {
    10
}

fn default_waveform() -> Waveform {
    Waveform::Ssb(SsbConfig {
        upconversion_freq: 3.25e9,
        ptspr_db: -11.0,
        rolloff: 0.1,
        bias_phase: DEFAULT_BIAS_PHASE,
        rrc_span: DEFAULT_RRC_SPAN,
    })
}

fn default_pilot_if() -> f64 {
    4e9
}

fn default_carrier() -> f64 {
    241.57e9
}

impl LinkScenario {
    pub fn from_toml(text: &str) -> Result<Self> {
        let s: LinkScenario = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Parse(m) => Error::Parse(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Parse(e.to_string()))
    }

    /// Symbols per frame.
    pub fn n_symbols(&self) -> usize {
        (self.frame_duration * self.baud).round() as usize
    }

    pub fn sample_rate(&self) -> f64 {
        self.baud * self.samples_per_symbol as f64
    }

    /// Data channels in the frame.
    pub fn channel_count(&self) -> usize {
        match self.waveform {
            Waveform::Ssb(_) => 1,
            Waveform::TwinSsb(_) => 2,
        }
    }

    /// Payload bits carried by one frame.
    pub fn bits_per_frame(&self) -> u64 {
        (self.n_symbols() * 4 * self.channel_count()) as u64
    }

    /// Resizes the frame to carry at least `bits` payload bits.
    pub fn set_bits_per_frame(&mut self, bits: u64) {
        let per_symbol = (4 * self.channel_count()) as u64;
        let n = bits.div_ceil(per_symbol);
        self.frame_duration = n as f64 / self.baud;
    }

    /// Returns a copy with `axis` set to `value`.
    pub fn with_axis(&self, axis: SweepAxis, value: f64) -> Self {
        let mut s = self.clone();
        match axis {
            SweepAxis::Photocurrent => s.power.photocurrent = value,
            SweepAxis::PtsprDb => s.waveform.set_ptspr_db(value),
            SweepAxis::ChannelFreq => s.carrier_freq = value,
            SweepAxis::PilotBandwidth => s.recovery.pilot_filter.bandwidth = value,
        }
        s
    }

    pub fn is_loopback(&self) -> bool {
        self.impairments.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(config(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if self.name.trim().is_empty() {
            return Err(config("scenario name is empty"));
        }
        if !(self.baud > 0.0 && self.frame_duration > 0.0) {
            return Err(config("baud and frame duration must be positive"));
        }
        if self.samples_per_symbol < 2 || self.samples_per_symbol % 2 != 0 {
            return Err(config("samples per symbol must be even and >= 2"));
        }
        let n = self.n_symbols();
        let rec = &self.recovery;
        if n < rec.equalizer.taps * 4 || n < rec.preamble_symbols {
            return Err(config(format!("frame of {n} symbols is too short")));
        }
        if self.waveform.max_freq(self.baud) >= self.sample_rate() / 2.0 {
            return Err(config("waveform exceeds the simulation bandwidth; raise samples_per_symbol"));
        }
        match &self.waveform {
            Waveform::Ssb(c) => c.validate(self.baud)?,
            Waveform::TwinSsb(c) => {
                c.validate(self.baud)?;
                if rec.method == RecoveryMethod::Bps {
                    return Err(config("twin-SSB scenarios use pilot recovery"));
                }
            }
        }
        if !(self.laser.lorentzian_linewidth >= 0.0) {
            return Err(config("laser linewidth must be non-negative"));
        }
        self.power.validate()?;
        rec.equalizer.validate()?;
        rec.bps.validate()?;
        if rec.method == RecoveryMethod::Pilot {
            rec.pilot_filter.validate(self.waveform.guard_band(self.baud))?;
        }
        if rec.preamble_symbols == 0 {
            return Err(config("phase recovery needs a preamble to fix the quadrant"));
        }
        for imp in &self.impairments {
            match imp {
                Impairment::IfResponse(r) => r.validate()?,
                Impairment::ThzResponse(p) => p.validate()?,
                Impairment::Saturation { knee } if !(*knee > 0.0) => {
                    return Err(config("saturation knee must be positive"));
                }
                _ => {}
            }
        }
        if !(self.tx_delay_symbols >= 0.0) {
            return Err(config("tx delay must be non-negative"));
        }
        if let Some(sw) = &self.sweep {
            if sw.values.len() < 2 || sw.values.iter().any(|v| !v.is_finite()) {
                return Err(config("a sweep needs at least two finite values"));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
schema_version = 1
name = "minimal"

[laser]
lorentzian_linewidth = 67e3

[power]
photocurrent = 2.15e-3
ref_photocurrent = 2.15e-3
snr_at_ref = 20.0
saturation_current = 3e-3
"#;

    #[test]
    fn minimal_defaults() {
        let s = LinkScenario::from_toml(MINIMAL).unwrap();
        assert_eq!(s.n_symbols(), 50_000);
        assert_eq!(s.sample_rate(), 50e9);
        assert!(s.is_loopback());
        assert_eq!(s.recovery.method, RecoveryMethod::Pilot);
        assert_eq!(s.recovery.bps.test_phases, 32);
        assert_eq!(s.recovery.equalizer.taps, 21);
    }

    #[test]
    fn toml_round_trip() {
        let mut s = LinkScenario::from_toml(MINIMAL).unwrap();
        s.impairments = vec![
            Impairment::PhaseNoise,
            Impairment::Saturation { knee: 2.0 },
            Impairment::IfResponse(IfResponse::default()),
            Impairment::Awgn,
        ];
        let text = s.to_toml().unwrap();
        assert_eq!(LinkScenario::from_toml(&text).unwrap(), s);
    }

    #[test]
    fn rejects_bad_versions_and_fields() {
        let v2 = MINIMAL.replace("schema_version = 1", "schema_version = 2");
        assert!(matches!(LinkScenario::from_toml(&v2), Err(Error::Config(_))));
        let extra = MINIMAL.replace("[laser]", "bogus = 3\n[laser]");
        assert!(matches!(LinkScenario::from_toml(&extra), Err(Error::Parse(_))));
        assert!(matches!(LinkScenario::from_toml("not toml ["), Err(Error::Parse(_))));
    }

    #[test]
    fn canonical_scenarios_parse_and_carry_their_names() {
        for (name, _) in CANONICAL {
            let s = canonical(name).unwrap();
            assert_eq!(&s.name, name);
            assert!(!s.is_loopback());
            let text = s.to_toml().unwrap();
            assert_eq!(LinkScenario::from_toml(&text).unwrap(), s);
        }
        assert!(canonical("fig99").is_err());
    }

    #[test]
    fn sweep_ranges() {
        let sw = SweepSpec::parse("ptspr_db=-25:0:1").unwrap();
        assert_eq!(sw.axis, SweepAxis::PtsprDb);
        assert_eq!(sw.values.len(), 26);
        assert_eq!(sw.values[25], 0.0);
        let sw = SweepSpec::parse("photocurrent=1e-3:2e-3:0.25e-3").unwrap();
        assert_eq!(sw.values.len(), 5);
        assert!(SweepSpec::parse("voltage=1:2:1").is_err());
        assert!(SweepSpec::parse("photocurrent=2:1:1").is_err());
        assert!(SweepSpec::parse("photocurrent=1:2").is_err());
    }

    #[test]
    fn bit_budget_sets_frame_length() {
        let mut s = LinkScenario::from_toml(MINIMAL).unwrap();
        s.set_bits_per_frame(100_000);
        assert_eq!(s.n_symbols(), 25_000);
        assert_eq!(s.bits_per_frame(), 100_000);
    }

    #[test]
    fn rejects_wide_pilot_filter() {
        let text = format!("{MINIMAL}\n[recovery.pilot_filter]\nbandwidth = 900e6\n");
        assert!(matches!(LinkScenario::from_toml(&text), Err(Error::Config(_))));
    }
}
