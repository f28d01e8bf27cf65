//! Distortion mitigation: receiver-side inverse of the module response
//! (post-distortion) and the choice of DC light from a local compensation
//! LED.

use serde::{Deserialize, Serialize};

use crate::device_model::{DerivativeForm, ModuleSpec};
use crate::error::{Error, Result};
use crate::exec::{self, ExecMode};
use crate::link_sim::{detect_pam4, transmit_frame, BerReport, LinkConfig};
use crate::seed::mix_words;

pub const DEFAULT_GAIN_CAP: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PostDistortionConfig {
    /// Receiver DC illuminance, assumed known.
    pub operating_lux: f64,
    /// Largest allowed small-signal gain of the inverse, relative to its gain
    /// at the operating point. `f64::INFINITY` disables the cap.
    pub gain_cap: f64,
}

impl PostDistortionConfig {
    pub fn new(operating_lux: f64, gain_cap: f64) -> Result<Self> {
        let cfg = Self {
            operating_lux,
            gain_cap,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Operating point taken from the link configuration.
    pub fn for_link(config: &LinkConfig, gain_cap: f64) -> Result<Self> {
        Self::new(config.receiver_dc_lux(), gain_cap)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.operating_lux.is_finite() && self.operating_lux > 0.0) {
            return Err(Error::validation(format!(
                "operating_lux must be > 0, got {}",
                self.operating_lux
            )));
        }
        if !(self.gain_cap >= 1.0) {
            return Err(Error::validation(format!(
                "gain_cap must be >= 1, got {}",
                self.gain_cap
            )));
        }
        Ok(())
    }
}

/// Inverts the module response around the known operating point.
///
/// The AC-coupled input is shifted back up by the operating-point voltage,
/// clamped to `[0, v_dc + N n v_t ln(gain_cap)]` (above that the inverse
/// would exceed `gain_cap` times its operating-point gain), mapped to
/// illuminance, re-centered and scaled by the operating-point slope so the
/// output is again in volts.
pub fn post_distort(v_ac: &[f64], spec: &ModuleSpec, cfg: &PostDistortionConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    spec.validate()?;
    if v_ac.is_empty() {
        return Err(Error::invalid("empty waveform"));
    }
    let n = v_ac.len() as f64;
    let mean = v_ac.iter().sum::<f64>() / n;
    let rms = (v_ac.iter().map(|x| x * x).sum::<f64>() / n).sqrt();
    if mean.abs() > 1e-6 * rms {
        return Err(Error::invalid(format!(
            "waveform is not AC-coupled: mean {mean:e} V, rms {rms:e} V"
        )));
    }
    if rms == 0.0 {
        return Ok(vec![0.0; v_ac.len()]);
    }

    let v_dc = spec.module_voltage_unchecked(cfg.operating_lux);
    let upper = v_dc + spec.voltage_scale() * cfg.gain_cap.ln();
    let lux: Vec<f64> = v_ac
        .iter()
        .map(|&v| spec.inverse_voltage_unchecked((v + v_dc).clamp(0.0, upper)))
        .collect();
    let lux_mean = lux.iter().sum::<f64>() / n;
    let slope = spec.slope_unchecked(cfg.operating_lux, DerivativeForm::Exact);
    Ok(lux.into_iter().map(|l| (l - lux_mean) * slope).collect())
}

/// Receiver processing applied between AC coupling and slicing.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum RxProcessing {
    #[default]
    Plain,
    PostDistortion {
        gain_cap: f64,
    },
}

/// [`crate::link_sim::run_link`] with optional post-distortion before the slicer.
pub fn run_link_with(
    config: &LinkConfig,
    spec: &ModuleSpec,
    payload_bits: &[bool],
    processing: RxProcessing,
) -> Result<BerReport> {
    let frame = transmit_frame(config, spec, payload_bits)?;
    let waveform = match processing {
        RxProcessing::Plain => frame.waveform,
        RxProcessing::PostDistortion { gain_cap } => {
            let cfg = PostDistortionConfig::for_link(config, gain_cap)?;
            post_distort(&frame.waveform, spec, &cfg)?
        }
    };
    let decided = detect_pam4(&waveform, config, &frame.training)?;
    Ok(BerReport::compare(payload_bits, &decided))
}

/// Seed for the link run at one DC-light setting.
pub fn dcl_point_seed(base_seed: u64, dcl_lux: f64) -> u64 {
    mix_words(base_seed, [dcl_lux.to_bits()])
}

#[derive(Debug, Clone, PartialEq)]
pub struct DclOptimum {
    pub best_dcl: f64,
    /// `(dcl_lux, ber)` for every grid point, in grid order.
    pub ber_curve: Vec<(f64, f64)>,
}

/// Runs the link at every compensation-LED illuminance in `dcl_grid` with a
/// fixed payload and per-point seeds, and returns the BER curve with its
/// argmin (ties go to the dimmer setting).
pub fn optimize_dcl(
    base_config: &LinkConfig,
    spec: &ModuleSpec,
    dcl_grid: &[f64],
    payload_bits: &[bool],
    mode: ExecMode,
) -> Result<DclOptimum> {
    if dcl_grid.is_empty() {
        return Err(Error::invalid("DCL grid is empty"));
    }
    if dcl_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::invalid("DCL grid must be strictly ascending"));
    }
    let reports = exec::try_map(mode, dcl_grid, |&dcl_lux| {
        let config = LinkConfig {
            dcl_lux,
            seed: dcl_point_seed(base_config.seed, dcl_lux),
            ..base_config.clone()
        };
        crate::link_sim::run_link(&config, spec, payload_bits)
    })?;
    let ber_curve: Vec<(f64, f64)> = dcl_grid.iter().copied().zip(reports.iter().map(|r| r.ber)).collect();
    let best_dcl = ber_curve
        .iter()
        .fold(None, |best: Option<(f64, f64)>, &(lux, ber)| match best {
            Some((_, b)) if b <= ber => best,
            _ => Some((lux, ber)),
        })
        .map(|(lux, _)| lux)
        .expect("grid is non-empty");
    Ok(DclOptimum { best_dcl, ber_curve })
}
