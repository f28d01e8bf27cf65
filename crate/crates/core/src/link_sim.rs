//! Baseband PAM4 link through a photovoltaic receiver.
//!
//! Pipeline: bits -> Gray-mapped PAM4 levels -> NRZ illuminance waveform ->
//! additive DC light (compensation LED, ambient) -> module voltage with
//! optional single-pole low-pass and Gaussian noise -> AC coupling ->
//! training-based slicer -> bits.

use std::io::Write;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::device_model::{DerivativeForm, ModuleSpec, ELEMENTARY_CHARGE};
use crate::error::{Error, Result};
use crate::seed::{stream_rng, STREAM_NOISE, STREAM_PAYLOAD, STREAM_TRAINING};

/// Pre-FEC BER limit for error-free post-FEC operation.
pub const FEC_THRESHOLD: f64 = 2.0e-2;

pub const MIN_TRAINING_SYMBOLS: usize = 64;

/// One of the four PAM4 amplitude levels, indexed from the bottom.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Pam4Level(u8);

impl Pam4Level {
    pub const ALL: [Pam4Level; 4] = [Pam4Level(0), Pam4Level(1), Pam4Level(2), Pam4Level(3)];

    // Gray code per level, bottom to top: 00, 01, 11, 10.
    const GRAY: [(bool, bool); 4] = [(false, false), (false, true), (true, true), (true, false)];

    pub fn new(index: u8) -> Option<Self> {
        (index < 4).then_some(Self(index))
    }

    pub fn index(self) -> usize {
        usize::from(self.0)
    }

    /// Normalized amplitude in {-1, -1/3, 1/3, 1}.
    pub fn amplitude(self) -> f64 {
        (2.0 * f64::from(self.0) - 3.0) / 3.0
    }

    pub fn bits(self) -> (bool, bool) {
        Self::GRAY[self.index()]
    }

    pub fn from_bits(first: bool, second: bool) -> Self {
        let index = Self::GRAY
            .iter()
            .position(|&g| g == (first, second))
            .expect("every bit pair has a level");
        Self(index as u8)
    }
}

pub fn encode_pam4(bits: &[bool]) -> Result<Vec<Pam4Level>> {
    if !bits.len().is_multiple_of(2) {
        return Err(Error::invalid(format!(
            "PAM4 needs an even number of bits, got {}",
            bits.len()
        )));
    }
    Ok(bits
        .chunks_exact(2)
        .map(|pair| Pam4Level::from_bits(pair[0], pair[1]))
        .collect())
}

pub fn decode_pam4(levels: &[Pam4Level]) -> Vec<bool> {
    levels
        .iter()
        .flat_map(|level| {
            let (a, b) = level.bits();
            [a, b]
        })
        .collect()
}

/// Transmitter, channel and receiver settings for one link run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinkConfig {
    /// Line rate in bits per second; the symbol rate is half of it.
    pub bit_rate: f64,
    pub samples_per_symbol: usize,
    /// Peak AC illuminance over transmitter DC illuminance.
    pub mod_index: f64,
    pub tx_dc_lux: f64,
    /// DC illuminance from the local distortion-compensating LED.
    pub dcl_lux: f64,
    pub ambient_lux: f64,
    /// RMS of the illuminance-independent voltage noise, per sample.
    pub thermal_sigma_v: f64,
    pub shot_noise_enabled: bool,
    /// Bandwidth entering the shot-noise variance `2 q I_ph B`.
    pub noise_bandwidth_hz: f64,
    /// Cutoff of the optional receiver low-pass.
    pub lpf_cutoff_hz: Option<f64>,
    pub training_symbols: usize,
    pub seed: u64,
}

impl Default for LinkConfig {
    /// 1 Mbit/s PAM4 at 425 lux with the committed noise calibration
    /// (see [`crate::calibrated`]).
    fn default() -> Self {
        Self {
            bit_rate: 1e6,
            samples_per_symbol: 8,
            mod_index: 0.3,
            tx_dc_lux: 425.0,
            dcl_lux: 0.0,
            ambient_lux: 0.0,
            thermal_sigma_v: crate::calibrated::THERMAL_SIGMA_V,
            shot_noise_enabled: true,
            noise_bandwidth_hz: crate::calibrated::NOISE_BANDWIDTH_HZ,
            lpf_cutoff_hz: crate::calibrated::LPF_CUTOFF_HZ,
            training_symbols: 256,
            seed: 0,
        }
    }
}

impl LinkConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::validation(format!("{name} must be > 0, got {v}")))
            }
        };
        let nonnegative = |name: &str, v: f64| {
            if v.is_finite() && v >= 0.0 {
                Ok(())
            } else {
                Err(Error::validation(format!("{name} must be >= 0, got {v}")))
            }
        };
        positive("bit_rate", self.bit_rate)?;
        if self.samples_per_symbol < 2 {
            return Err(Error::validation(format!(
                "samples_per_symbol must be >= 2, got {}",
                self.samples_per_symbol
            )));
        }
        if !(self.mod_index > 0.0 && self.mod_index <= 1.0) {
            return Err(Error::validation(format!(
                "mod_index must be in (0, 1], got {}",
                self.mod_index
            )));
        }
        positive("tx_dc_lux", self.tx_dc_lux)?;
        nonnegative("dcl_lux", self.dcl_lux)?;
        nonnegative("ambient_lux", self.ambient_lux)?;
        nonnegative("thermal_sigma_v", self.thermal_sigma_v)?;
        nonnegative("noise_bandwidth_hz", self.noise_bandwidth_hz)?;
        if let Some(fc) = self.lpf_cutoff_hz {
            positive("lpf_cutoff_hz", fc)?;
        }
        if self.training_symbols < MIN_TRAINING_SYMBOLS {
            return Err(Error::validation(format!(
                "training_symbols must be >= {MIN_TRAINING_SYMBOLS}, got {}",
                self.training_symbols
            )));
        }
        Ok(())
    }

    pub fn symbol_rate(&self) -> f64 {
        self.bit_rate / 2.0
    }

    pub fn sample_rate(&self) -> f64 {
        self.symbol_rate() * self.samples_per_symbol as f64
    }

    /// Mean illuminance at the receiver.
    pub fn receiver_dc_lux(&self) -> f64 {
        self.tx_dc_lux + self.dcl_lux + self.ambient_lux
    }

    /// The same link with both noise sources switched off.
    pub fn noiseless(&self) -> Self {
        Self {
            thermal_sigma_v: 0.0,
            shot_noise_enabled: false,
            ..self.clone()
        }
    }

    pub fn has_noise(&self) -> bool {
        self.thermal_sigma_v > 0.0 || (self.shot_noise_enabled && self.noise_bandwidth_hz > 0.0)
    }
}

/// Rectangular NRZ illuminance: `L_dc (1 + m s)` held for one symbol.
pub fn tx_waveform(symbols: &[Pam4Level], config: &LinkConfig) -> Vec<f64> {
    let sps = config.samples_per_symbol;
    let mut out = Vec::with_capacity(symbols.len() * sps);
    for s in symbols {
        let lux = config.tx_dc_lux * (1.0 + config.mod_index * s.amplitude());
        out.extend(std::iter::repeat_n(lux, sps));
    }
    out
}

/// Adds the DC illuminance of the compensation LED and the ambient light.
pub fn channel(tx: &[f64], config: &LinkConfig) -> Vec<f64> {
    let mut out = tx.to_vec();
    channel_in_place(&mut out, config);
    out
}

fn channel_in_place(light: &mut [f64], config: &LinkConfig) {
    let offset = config.dcl_lux + config.ambient_lux;
    for l in light {
        *l += offset;
    }
}

/// RMS shot-noise voltage at illuminance `lux`: the photocurrent shot noise
/// `sqrt(2 q eta L B)` times the small-signal slope `dV/dI_ph`.
pub fn shot_sigma(lux: f64, spec: &ModuleSpec, bandwidth_hz: f64) -> f64 {
    let p = &spec.params;
    let current_rms = (2.0 * ELEMENTARY_CHARGE * p.eta * lux * bandwidth_hz).sqrt();
    current_rms * spec.voltage_scale() / (p.eta * lux + p.i0)
}

/// Total per-sample noise RMS at illuminance `lux`.
pub fn noise_sigma(lux: f64, spec: &ModuleSpec, config: &LinkConfig) -> f64 {
    let shot = if config.shot_noise_enabled {
        shot_sigma(lux, spec, config.noise_bandwidth_hz)
    } else {
        0.0
    };
    config.thermal_sigma_v.hypot(shot)
}

/// Module voltage for every illuminance sample, low-passed if configured,
/// plus zero-mean Gaussian noise whose variance follows the instantaneous
/// illuminance.
pub fn receive<R: Rng + ?Sized>(l_rx: &[f64], spec: &ModuleSpec, config: &LinkConfig, rng: &mut R) -> Result<Vec<f64>> {
    if let Some(bad) = l_rx.iter().find(|l| !(**l >= 0.0)) {
        return Err(Error::domain(format!("negative illuminance {bad} at receiver")));
    }

    let mut voltage = cached(|lux| spec.module_voltage_unchecked(lux));
    let mut clean: Vec<f64> = l_rx.iter().map(|&lux| voltage(lux)).collect();

    if let Some(fc) = config.lpf_cutoff_hz {
        low_pass_in_place(&mut clean, fc, config.sample_rate());
    }

    if config.has_noise() {
        let mut sigma = cached(|lux| noise_sigma(lux, spec, config));
        for (v, &lux) in clean.iter_mut().zip(l_rx) {
            let z: f64 = rng.sample(StandardNormal);
            *v += sigma(lux) * z;
        }
    }
    Ok(clean)
}

/// Memoises `f` on its last argument. NRZ waveforms are piecewise constant,
/// so this skips almost every evaluation.
fn cached(f: impl Fn(f64) -> f64) -> impl FnMut(f64) -> f64 {
    let mut last_lux = f64::NAN;
    let mut last = 0.0;
    move |lux| {
        if lux != last_lux {
            last = f(lux);
            last_lux = lux;
        }
        last
    }
}

/// Single-pole IIR low-pass, state initialized to the first sample.
pub fn low_pass_in_place(signal: &mut [f64], cutoff_hz: f64, sample_rate: f64) {
    let alpha = -(-2.0 * std::f64::consts::PI * cutoff_hz / sample_rate).exp_m1();
    let Some(&first) = signal.first() else {
        return;
    };
    let mut state = first;
    for x in signal.iter_mut() {
        state += alpha * (*x - state);
        *x = state;
    }
}

/// Removes the waveform mean.
pub fn ac_couple(v: &[f64]) -> Result<Vec<f64>> {
    let mut out = v.to_vec();
    ac_couple_in_place(&mut out)?;
    Ok(out)
}

fn ac_couple_in_place(v: &mut [f64]) -> Result<()> {
    if v.is_empty() {
        return Err(Error::invalid("cannot AC-couple an empty waveform"));
    }
    let mean = mean(v);
    for x in v {
        *x -= mean;
    }
    Ok(())
}

pub(crate) fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Per-symbol decision statistic: the mean over the middle half of each
/// symbol interval.
pub fn decision_statistics(v: &[f64], samples_per_symbol: usize) -> Result<Vec<f64>> {
    let sps = samples_per_symbol;
    if sps == 0 || !v.len().is_multiple_of(sps) {
        return Err(Error::invalid(format!(
            "waveform length {} is not a multiple of {sps} samples per symbol",
            v.len()
        )));
    }
    let count = (sps / 2).max(1);
    let start = (sps - count) / 2;
    Ok(v.chunks_exact(sps)
        .map(|sym| sym[start..start + count].iter().sum::<f64>() / count as f64)
        .collect())
}

/// Four-level slicer trained on known symbols.
#[derive(Debug, Clone, PartialEq)]
pub struct Slicer {
    /// Mean decision statistic per level, bottom to top.
    pub centroids: [f64; 4],
    /// Midpoints between adjacent centroids.
    pub thresholds: [f64; 3],
}

impl Slicer {
    pub fn train(stats: &[f64], known: &[Pam4Level]) -> Result<Self> {
        let mut sum = [0.0; 4];
        let mut count = [0usize; 4];
        for (&s, level) in stats.iter().zip(known) {
            sum[level.index()] += s;
            count[level.index()] += 1;
        }
        if let Some(missing) = count.iter().position(|&c| c == 0) {
            return Err(Error::Detection(format!(
                "training sequence never visits level {missing}"
            )));
        }
        let centroids: [f64; 4] = std::array::from_fn(|k| sum[k] / count[k] as f64);
        if centroids.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Detection(format!(
                "trained centroids are not increasing: {centroids:?}"
            )));
        }
        let thresholds = std::array::from_fn(|k| 0.5 * (centroids[k] + centroids[k + 1]));
        Ok(Self { centroids, thresholds })
    }

    pub fn slice(&self, stat: f64) -> Pam4Level {
        let index = self.thresholds.iter().filter(|&&t| stat > t).count();
        Pam4Level(index as u8)
    }

    /// Spacing between adjacent centroids, bottom to top.
    pub fn gaps(&self) -> [f64; 3] {
        std::array::from_fn(|k| self.centroids[k + 1] - self.centroids[k])
    }
}

/// Slices an AC-coupled waveform whose first `training.len()` symbols are
/// known, returning only the bits of the remaining symbols.
pub fn detect_pam4(v: &[f64], config: &LinkConfig, training: &[Pam4Level]) -> Result<Vec<bool>> {
    let stats = decision_statistics(v, config.samples_per_symbol)?;
    if stats.len() < training.len() {
        return Err(Error::invalid("waveform shorter than the training sequence"));
    }
    let slicer = Slicer::train(&stats[..training.len()], training)?;
    let decided: Vec<Pam4Level> = stats[training.len()..].iter().map(|&s| slicer.slice(s)).collect();
    Ok(decode_pam4(&decided))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BerReport {
    pub bits_total: u64,
    pub bits_errored: u64,
    pub ber: f64,
    pub pass_fec: bool,
}

impl BerReport {
    pub fn from_counts(bits_total: u64, bits_errored: u64) -> Self {
        let ber = if bits_total == 0 {
            0.0
        } else {
            bits_errored as f64 / bits_total as f64
        };
        Self {
            bits_total,
            bits_errored,
            ber,
            pass_fec: ber < FEC_THRESHOLD,
        }
    }

    pub fn compare(sent: &[bool], received: &[bool]) -> Self {
        let errors = sent.iter().zip(received).filter(|(a, b)| a != b).count() + sent.len().abs_diff(received.len());
        Self::from_counts(sent.len() as u64, errors as u64)
    }
}

/// Known training sequence for `config.seed`: one pass over all four levels,
/// then uniformly random levels.
pub fn training_sequence(config: &LinkConfig) -> Vec<Pam4Level> {
    let mut rng = stream_rng(config.seed, STREAM_TRAINING);
    (0..config.training_symbols)
        .map(|i| {
            if i < 4 {
                Pam4Level(i as u8)
            } else {
                Pam4Level(rng.random_range(0..4u8))
            }
        })
        .collect()
}

/// Uniformly random payload of `count` bits drawn from `seed`.
pub fn random_payload(seed: u64, count: usize) -> Vec<bool> {
    let mut rng = stream_rng(seed, STREAM_PAYLOAD);
    (0..count).map(|_| rng.random()).collect()
}

/// Everything the receiver DSP sees after AC coupling.
#[derive(Debug, Clone)]
pub struct ReceivedFrame {
    pub training: Vec<Pam4Level>,
    pub payload_symbols: Vec<Pam4Level>,
    /// AC-coupled voltage, training first.
    pub waveform: Vec<f64>,
}

/// Runs the analog part of the link (encode, transmit, channel, receive, AC
/// coupling) for `payload_bits`.
pub fn transmit_frame(config: &LinkConfig, spec: &ModuleSpec, payload_bits: &[bool]) -> Result<ReceivedFrame> {
    config.validate()?;
    spec.validate()?;
    let payload_symbols = encode_pam4(payload_bits)?;
    let training = training_sequence(config);
    let mut symbols = training.clone();
    symbols.extend_from_slice(&payload_symbols);

    let mut light = tx_waveform(&symbols, config);
    channel_in_place(&mut light, config);
    let mut rng = stream_rng(config.seed, STREAM_NOISE);
    let mut waveform = receive(&light, spec, config, &mut rng)?;
    drop(light);
    ac_couple_in_place(&mut waveform)?;
    Ok(ReceivedFrame {
        training,
        payload_symbols,
        waveform,
    })
}

/// Full link: returns the payload bit-error count.
pub fn run_link(config: &LinkConfig, spec: &ModuleSpec, payload_bits: &[bool]) -> Result<BerReport> {
    let frame = transmit_frame(config, spec, payload_bits)?;
    let decided = detect_pam4(&frame.waveform, config, &frame.training)?;
    Ok(BerReport::compare(payload_bits, &decided))
}

/// Noiseless decision-statistic centroids of the four levels.
pub fn noiseless_centroids(config: &LinkConfig, spec: &ModuleSpec) -> Result<[f64; 4]> {
    let quiet = config.noiseless();
    let frame = transmit_frame(&quiet, spec, &[])?;
    let stats = decision_statistics(&frame.waveform, quiet.samples_per_symbol)?;
    Ok(Slicer::train(&stats, &frame.training)?.centroids)
}

/// Small-signal conversion slope at the receiver operating point, V/lux.
pub fn operating_slope(config: &LinkConfig, spec: &ModuleSpec) -> f64 {
    spec.slope_unchecked(config.receiver_dc_lux(), DerivativeForm::Exact)
}

/// Writes `sample_index,value` rows.
pub fn write_waveform_csv<W: Write>(out: W, waveform: &[f64]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["sample_index", "value"])?;
    for (i, v) in waveform.iter().enumerate() {
        w.write_record([i.to_string(), format!("{v:.16e}")])?;
    }
    w.flush()?;
    Ok(())
}
