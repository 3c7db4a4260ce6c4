//! End-to-end link: transmitter, channel and receiver for one scenario.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::{
    add_low_freq_noise, add_white_noise, apply_freq_offset, apply_if_response, apply_saturation, offset_phase,
    rotate_by, wiener_phase,
};
use crate::error::Result;
use crate::metrics::{snr_estimate, SnrRecord};
use crate::rng::derive_seed;
use crate::rxdsp::{
    bps_recover, coarse_center, equalize, extract_pilot, fft_foe, normalize_amplitude, pilot_downconvert,
    sync_and_count, vv_fixed_offset, BerRecord, Equalized,
};
use crate::scenario::{Impairment, LinkScenario, RecoveryMethod, Waveform};
use crate::sigcore::{
    decimate, map_qam16, matched_filter, payload_bits, rrc_taps, BitStream, ComplexFrame, Constellation,
    SymbolStream,
};
use crate::txdsp::{apply_decorrelation_delay, make_ssb_with_pilot, make_twin_ssb};

const DE_BRUIJN_ORDER: u32 = 11;

/// Independent randomness for each part of one link realisation.
#[derive(Debug, Clone, Copy)]
struct Seeds {
    payload: [u64; 2],
    laser: u64,
    awgn: u64,
    low_freq: u64,
}

impl Seeds {
    fn new(master: u64) -> Self {
        Self {
            payload: [derive_seed(master, 0), derive_seed(master, 4)],
            laser: derive_seed(master, 1),
            awgn: derive_seed(master, 2),
            low_freq: derive_seed(master, 3),
        }
    }
}

/// One data channel of the transmitted frame.
#[derive(Debug, Clone)]
pub struct TxChannel {
    pub bits: BitStream,
    pub symbols: SymbolStream,
}

#[derive(Debug, Clone)]
pub struct Transmitted {
    /// Unit-power frame, pilot at relative frequency 0.
    pub frame: ComplexFrame,
    /// One entry for SSB, two (lower, upper sideband) for twin-SSB.
    pub channels: Vec<TxChannel>,
}

#[derive(Debug, Clone)]
pub struct Received {
    pub frame: ComplexFrame,
    /// Carrier phase the channel imposed on every sample, rad.
    pub carrier_phase: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelResult {
    pub ber: BerRecord,
    pub snr: SnrRecord,
}

/// Outcome of one scenario run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkResult {
    pub ber: f64,
    pub errors: u64,
    pub bits: u64,
    pub snr_db: f64,
    pub evm_percent: f64,
    /// Per data channel; twin-SSB lists the lower-IF channel first.
    pub channels: Vec<ChannelResult>,
    /// Std of the recovered-tone phase against the true carrier phase at
    /// the symbol instants (pilot recovery only), rad.
    pub phase_error_std: Option<f64>,
    /// Static offset removed by Viterbi-Viterbi, rad.
    pub vv_offset: Option<f64>,
    /// Frequency offset found by the FFT estimator, Hz.
    pub foe_estimate: Option<f64>,
    pub seed: u64,
}

/// Runs the complete link once. Deterministic in the scenario (including
/// its seed).
pub fn run_scenario(s: &LinkScenario) -> Result<LinkResult> {
    run(s).map_err(|e| e.in_scenario(&s.name))
}

fn run(s: &LinkScenario) -> Result<LinkResult> {
    s.validate()?;
    let tx = transmit(s)?;
    let rx = apply_channel(s, &tx.frame)?;
    receive(s, &tx, &rx)
}

/// Builds the transmitted frame and its payloads.
pub fn transmit(s: &LinkScenario) -> Result<Transmitted> {
    let seeds = Seeds::new(s.seed);
    let c = Constellation::qam16();
    let n = s.n_symbols();
    let make = |seed: u64| -> Result<TxChannel> {
        let bits = payload_bits(DE_BRUIJN_ORDER, seed, 4 * n)?;
        let symbols = map_qam16(&bits, &c, s.baud)?;
        Ok(TxChannel { bits, symbols })
    };
    let sps = s.samples_per_symbol;
    let (frame, channels) = match &s.waveform {
        Waveform::Ssb(cfg) => {
            let ch = make(seeds.payload[0])?;
            (make_ssb_with_pilot(&ch.symbols, cfg, sps)?, vec![ch])
        }
        Waveform::TwinSsb(cfg) => {
            let lower = make(seeds.payload[0])?;
            let upper = make(seeds.payload[1])?;
            (make_twin_ssb(&lower.symbols, &upper.symbols, cfg, sps)?, vec![lower, upper])
        }
    };
    let frame = if s.tx_delay_symbols > 0.0 {
        apply_decorrelation_delay(&frame, s.tx_delay_symbols, sps)?
    } else {
        frame
    };
    Ok(Transmitted { frame, channels })
}

/// Scales the frame to the operating photocurrent and applies the
/// scenario's impairments in order. Noise density is fixed by the power
/// model: unit frame power at the reference current gives `snr_at_ref` in
/// one symbol-rate bandwidth.
pub fn apply_channel(s: &LinkScenario, frame: &ComplexFrame) -> Result<Received> {
    let seeds = Seeds::new(s.seed);
    let p = &s.power;
    let n0 = 10f64.powf(-p.snr_at_ref / 10.0) / s.baud;
    let mut f = frame.scaled(p.amplitude_gain()).with_center_offset(s.pilot_if);
    let mut carrier_phase = vec![0.0; f.len()];
    for imp in &s.impairments {
        f = match imp {
            Impairment::PhaseNoise => {
                let phi = wiener_phase(f.len(), s.laser.lorentzian_linewidth, f.sample_rate, seeds.laser);
                carrier_phase.iter_mut().zip(&phi).for_each(|(a, b)| *a += b);
                rotate_by(&f, &phi)
            }
            Impairment::FreqOffset => {
                let ramp = offset_phase(f.len(), s.laser.freq_offset, f.sample_rate);
                carrier_phase.iter_mut().zip(&ramp).for_each(|(a, b)| *a += b);
                apply_freq_offset(&f, s.laser.freq_offset)?
            }
            Impairment::ThzResponse(profile) => f.scaled(10f64.powf(profile.gain_db(s.carrier_freq) / 20.0)),
            Impairment::Saturation { knee } => apply_saturation(&f, p.saturation_power(), *knee)?,
            Impairment::IfResponse(r) => apply_if_response(&f, r)?,
            Impairment::Awgn => add_white_noise(&f, n0, seeds.awgn),
            Impairment::LowFreqNoise(floor) => add_low_freq_noise(&f, n0, floor, seeds.low_freq),
        };
    }
    Ok(Received { frame: f, carrier_phase })
}

fn receive(s: &LinkScenario, tx: &Transmitted, rx: &Received) -> Result<LinkResult> {
    let c = Constellation::qam16();
    let taps = match &s.waveform {
        Waveform::Ssb(cfg) => rrc_taps(cfg.rolloff, cfg.rrc_span, s.samples_per_symbol)?,
        Waveform::TwinSsb(cfg) => rrc_taps(cfg.rolloff, cfg.rrc_span, s.samples_per_symbol)?,
    };
    let mut out = Partial::default();
    match (&s.waveform, s.recovery.method) {
        (Waveform::Ssb(cfg), RecoveryMethod::Pilot) => {
            let (centred, tone, phase_err) = pilot_stage(s, rx)?;
            out.phase_error_std = Some(phase_err);
            let bb = pilot_downconvert(&centred, &tone, cfg.upconversion_freq)?;
            let ch = pilot_channel(s, &bb, &taps, &tx.channels[0], &c, &mut out.vv)?;
            out.push(ch);
        }
        (Waveform::TwinSsb(cfg), _) => {
            let (centred, tone, phase_err) = pilot_stage(s, rx)?;
            out.phase_error_std = Some(phase_err);
            for (ch, sign) in tx.channels.iter().zip([-1.0, 1.0]) {
                let bb = pilot_downconvert(&centred, &tone, sign * cfg.upconversion_freq)?;
                let r = pilot_channel(s, &bb, &taps, ch, &c, &mut out.vv)?;
                out.push(r);
            }
        }
        (Waveform::Ssb(cfg), RecoveryMethod::Bps) => {
            let bb = apply_freq_offset(&rx.frame, -cfg.upconversion_freq)?;
            let two = to_two_sps(&bb, &taps, s.samples_per_symbol)?;
            let even = SymbolStream::new(two.samples.iter().step_by(2).copied().collect(), 4, s.baud);
            let foe = fft_foe(&even)?;
            out.foe = Some(foe);
            let two = apply_freq_offset(&two, -foe)?;
            let eq = equalize(&two, &s.recovery.equalizer, &c)?;
            let preamble = known_preamble(s, &tx.channels[0].symbols);
            let rec = bps_recover(&eq.symbols, &s.recovery.bps, &c, &preamble)?;
            out.push(score(&rec, &tx.channels[0], &c)?);
        }
    }
    Ok(out.finish(s.seed))
}

#[derive(Default)]
struct Partial {
    channels: Vec<ChannelResult>,
    phase_error_std: Option<f64>,
    vv: Option<f64>,
    foe: Option<f64>,
}

impl Partial {
    fn push(&mut self, ch: ChannelResult) {
        self.channels.push(ch);
    }

    fn finish(self, seed: u64) -> LinkResult {
        let errors: u64 = self.channels.iter().map(|c| c.ber.errors).sum();
        let bits: u64 = self.channels.iter().map(|c| c.ber.bits).sum();
        // average the error power over channels of equal size
        let err_pow = self
            .channels
            .iter()
            .map(|c| 10f64.powf(-c.snr.snr_db / 10.0))
            .sum::<f64>()
            / self.channels.len() as f64;
        LinkResult {
            ber: errors as f64 / bits as f64,
            errors,
            bits,
            snr_db: -10.0 * err_pow.log10(),
            evm_percent: 100.0 * err_pow.sqrt(),
            channels: self.channels,
            phase_error_std: self.phase_error_std,
            vv_offset: self.vv,
            foe_estimate: self.foe,
            seed,
        }
    }
}

/// Centres the pilot, extracts it and measures its phase error against the
/// carrier phase the channel applied.
fn pilot_stage(s: &LinkScenario, rx: &Received) -> Result<(ComplexFrame, ComplexFrame, f64)> {
    let fs = rx.frame.sample_rate;
    let guard = s.waveform.guard_band(s.baud);
    let (centred, coarse) = coarse_center(&rx.frame, fs / 2.0, guard)?;
    let tone = extract_pilot(&centred, &s.recovery.pilot_filter, guard)?;
    let sps = s.samples_per_symbol;
    let ramp = -2.0 * PI * coarse / fs;
    let errs: Vec<f64> = (0..tone.len())
        .step_by(sps)
        .map(|n| tone.samples[n].arg() - rx.carrier_phase[n] - ramp * n as f64)
        .collect();
    Ok((centred, tone, circular_std(&errs)))
}

/// Standard deviation of phases about their circular mean.
fn circular_std(phases: &[f64]) -> f64 {
    let mean = phases.iter().map(|p| Complex64::from_polar(1.0, *p)).sum::<Complex64>().arg();
    let var = phases
        .iter()
        .map(|p| crate::dsp::wrap_phase(p - mean).powi(2))
        .sum::<f64>()
        / phases.len() as f64;
    var.sqrt()
}

/// Matched filter and decimation to two samples per symbol, scaled to unit
/// power at the symbol instants.
fn to_two_sps(frame: &ComplexFrame, taps: &[f64], sps: usize) -> Result<ComplexFrame> {
    let m = decimate(&matched_filter(frame, taps, sps), sps / 2, 0)?;
    let p = m.samples.iter().step_by(2).map(|v| v.norm_sqr()).sum::<f64>() / (m.len() / 2) as f64;
    Ok(m.scaled(1.0 / p.sqrt()))
}

fn pilot_channel(
    s: &LinkScenario,
    bb: &ComplexFrame,
    taps: &[f64],
    ch: &TxChannel,
    c: &Constellation,
    vv_out: &mut Option<f64>,
) -> Result<ChannelResult> {
    let two = to_two_sps(bb, taps, s.samples_per_symbol)?;
    let Equalized { symbols, .. } = equalize(&two, &s.recovery.equalizer, c)?;
    let theta = vv_fixed_offset(&symbols)?;
    vv_out.get_or_insert(theta);
    let preamble = known_preamble(s, &ch.symbols);
    let rot = Complex64::from_polar(1.0, -theta) * quadrant(&symbols.symbols, &preamble, theta);
    let fixed = symbols.with_symbols(symbols.symbols.iter().map(|v| v * rot).collect());
    score(&fixed, ch, c)
}

/// Quarter-turn rotation that best aligns the frame start with the
/// preamble after removing `theta`. The blind equalizer may settle in any of
/// the four 16-QAM symmetric positions.
fn quadrant(symbols: &[Complex64], preamble: &[Complex64], theta: f64) -> Complex64 {
    let corr: Complex64 = symbols.iter().zip(preamble).map(|(y, p)| y * p.conj()).sum::<Complex64>()
        * Complex64::from_polar(1.0, -theta);
    [Complex64::new(1.0, 0.0), Complex64::i(), Complex64::new(-1.0, 0.0), -Complex64::i()]
        .into_iter()
        .max_by(|a, b| (corr * a).re.total_cmp(&(corr * b).re))
        .unwrap_or(Complex64::new(1.0, 0.0))
}

/// The receiver's copy of the leading transmitted symbols, at the position
/// the transmit delay puts them.
fn known_preamble(s: &LinkScenario, tx: &SymbolStream) -> Vec<Complex64> {
    let n = tx.len();
    let d = (s.tx_delay_symbols.round() as usize) % n;
    (0..s.recovery.preamble_symbols).map(|k| tx.symbols[(k + n - d) % n]).collect()
}

/// Rescales to the constellation, counts errors and measures the SNR
/// against the aligned transmitted symbols after the unbiased complex gain.
fn score(rx: &SymbolStream, ch: &TxChannel, c: &Constellation) -> Result<ChannelResult> {
    let rx = normalize_amplitude(rx, c)?;
    let ber = sync_and_count(&rx, &ch.bits, c)?;
    let n = rx.len();
    let aligned = ch
        .symbols
        .with_symbols((0..n).map(|k| ch.symbols.symbols[(k + n - ber.lag) % n]).collect());
    let num: Complex64 = rx.symbols.iter().zip(&aligned.symbols).map(|(y, x)| y * x.conj()).sum();
    let den: f64 = aligned.symbols.iter().map(|x| x.norm_sqr()).sum();
    let g = den / num;
    let scaled = rx.with_symbols(rx.symbols.iter().map(|v| v * g).collect());
    let snr = snr_estimate(&aligned, &scaled)?;
    Ok(ChannelResult { ber, snr })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base(extra: &str) -> LinkScenario {
        let text = format!(
            r#"
schema_version = 1
name = "unit"
frame_duration = 4e-6
seed = 7
{extra}
[laser]
lorentzian_linewidth = 359e3

[power]
photocurrent = 2.15e-3
ref_photocurrent = 2.15e-3
snr_at_ref = 20.0
saturation_current = 3e-3
"#
        );
        LinkScenario::from_toml(&text).unwrap()
    }

    #[test]
    fn loopback_is_error_free() {
        let r = run_scenario(&base("")).unwrap();
        assert_eq!(r.errors, 0);
        assert!(r.evm_percent < 1.0, "evm {}", r.evm_percent);
        assert_eq!(r.bits, 80_000);
    }

    #[test]
    fn noisy_link_runs_and_is_deterministic() {
        let imp = r#"impairments = [{ kind = "phase-noise" }, { kind = "awgn" }]"#;
        let s = base(imp);
        let a = run_scenario(&s).unwrap();
        let b = run_scenario(&s).unwrap();
        assert_eq!(a, b);
        eprintln!("{a:?}");
        assert!(a.ber < 1e-2, "ber {}", a.ber);
        assert!(a.phase_error_std.unwrap() < 0.1);
    }
}
