//! Command-line flags and their JSON config-file equivalents.
//!
//! Every flag has a config key with the same name in snake case
//! (`--tx-lux` is `tx_lux`). A flag given on the command line wins over the
//! file. Switch flags (`--no-shot`, `--serial`, `--postdist`) can only turn a
//! behaviour on; set them to `false` in the file to keep them off.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use pvvlc_core::experiments::SweepKind;
use pvvlc_core::{DerivativeForm, LinkConfig};
use serde::{Deserialize, Serialize};

use crate::Failure;

/// Contents of a `--config` file. All keys are optional.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub model: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub jobs: Option<usize>,
    pub serial: Option<bool>,

    pub cells: Option<u32>,
    pub temp: Option<f64>,
    pub eta: Option<f64>,

    pub bit_rate: Option<f64>,
    pub samples_per_symbol: Option<usize>,
    pub mod_index: Option<f64>,
    pub tx_lux: Option<f64>,
    pub dcl_lux: Option<f64>,
    pub ambient_lux: Option<f64>,
    pub thermal_sigma: Option<f64>,
    pub no_shot: Option<bool>,
    pub noise_bandwidth: Option<f64>,
    pub lpf_cutoff: Option<Cutoff>,
    pub training: Option<usize>,

    pub payload_bits: Option<usize>,
    pub reps: Option<usize>,
    pub postdist: Option<bool>,
    pub gain_cap: Option<f64>,

    pub m_grid: Option<Vec<f64>>,
    pub illuminances: Option<Vec<f64>>,
    pub dcl_grid: Option<Vec<f64>>,
    pub mod_indices: Option<Vec<f64>>,
    pub lux_grid: Option<Vec<f64>>,
    pub cell_counts: Option<Vec<u32>>,
    pub derivative_form: Option<DerivativeForm>,
    pub traces: Option<usize>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, Failure> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = fs::read_to_string(path)
            .map_err(|e| Failure::Usage(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| Failure::Usage(format!("config {}: {e}", path.display())))
    }
}

/// Receiver low-pass cutoff: a frequency in hertz or `none`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Cutoff {
    Hz(f64),
    Off(Off),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Off {
    None,
}

impl Cutoff {
    fn as_option(self) -> Option<f64> {
        match self {
            Cutoff::Hz(hz) => Some(hz),
            Cutoff::Off(Off::None) => None,
        }
    }
}

impl std::str::FromStr for Cutoff {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.eq_ignore_ascii_case("none") {
            return Ok(Cutoff::Off(Off::None));
        }
        s.parse()
            .map(Cutoff::Hz)
            .map_err(|_| format!("expected a frequency in Hz or `none`, got `{s}`"))
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct LinkArgs {
    /// Bit rate, bit/s.
    #[arg(long)]
    pub bit_rate: Option<f64>,
    #[arg(long)]
    pub samples_per_symbol: Option<usize>,
    /// Modulation index m, peak AC over DC illuminance.
    #[arg(long)]
    pub mod_index: Option<f64>,
    /// Transmitter DC illuminance at the receiver, lux.
    #[arg(long)]
    pub tx_lux: Option<f64>,
    /// Compensation-LED illuminance, lux.
    #[arg(long)]
    pub dcl_lux: Option<f64>,
    #[arg(long)]
    pub ambient_lux: Option<f64>,
    /// Thermal noise, volts RMS.
    #[arg(long)]
    pub thermal_sigma: Option<f64>,
    /// Disable shot noise.
    #[arg(long)]
    pub no_shot: bool,
    /// Shot-noise bandwidth, Hz.
    #[arg(long)]
    pub noise_bandwidth: Option<f64>,
    /// Receiver low-pass cutoff in Hz, or `none`.
    #[arg(long, value_name = "HZ|none")]
    pub lpf_cutoff: Option<Cutoff>,
    /// Training symbols per frame.
    #[arg(long)]
    pub training: Option<usize>,
}

impl LinkArgs {
    /// Applies flags, then the file, on top of `base`.
    pub fn resolve(&self, file: &FileConfig, mut base: LinkConfig) -> LinkConfig {
        macro_rules! pick {
            ($field:ident, $flag:ident) => {
                if let Some(v) = self.$flag.or(file.$flag) {
                    base.$field = v;
                }
            };
        }
        pick!(bit_rate, bit_rate);
        pick!(samples_per_symbol, samples_per_symbol);
        pick!(mod_index, mod_index);
        pick!(tx_dc_lux, tx_lux);
        pick!(dcl_lux, dcl_lux);
        pick!(ambient_lux, ambient_lux);
        pick!(thermal_sigma_v, thermal_sigma);
        pick!(noise_bandwidth_hz, noise_bandwidth);
        pick!(training_symbols, training);
        if let Some(c) = self.lpf_cutoff.or(file.lpf_cutoff) {
            base.lpf_cutoff_hz = c.as_option();
        }
        if self.no_shot || file.no_shot == Some(true) {
            base.shot_noise_enabled = false;
        }
        base
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct GridArgs {
    /// Modulation indices (ber_vs_m, postdist), comma separated.
    #[arg(long, value_delimiter = ',')]
    pub m_grid: Option<Vec<f64>>,
    /// Transmitter illuminances, one BER curve each (ber_vs_m).
    #[arg(long, value_delimiter = ',')]
    pub illuminances: Option<Vec<f64>>,
    /// Compensation-LED illuminances (ber_vs_dcl).
    #[arg(long, value_delimiter = ',')]
    pub dcl_grid: Option<Vec<f64>>,
    /// Modulation indices, one curve each (ber_vs_dcl).
    #[arg(long, value_delimiter = ',')]
    pub mod_indices: Option<Vec<f64>>,
    /// Illuminance grid (response, derivatives).
    #[arg(long, value_delimiter = ',')]
    pub lux_grid: Option<Vec<f64>>,
    /// Cell counts (response, derivatives).
    #[arg(long, value_delimiter = ',')]
    pub cell_counts: Option<Vec<u32>>,
    #[arg(long, value_enum)]
    pub derivative_form: Option<FormArg>,
    /// Number of eye traces (eye).
    #[arg(long)]
    pub traces: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormArg {
    Exact,
    Asymptotic,
}

impl From<FormArg> for DerivativeForm {
    fn from(f: FormArg) -> Self {
        match f {
            FormArg::Exact => DerivativeForm::Exact,
            FormArg::Asymptotic => DerivativeForm::Asymptotic,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    #[value(name = "response")]
    Response,
    #[value(name = "derivatives")]
    Derivatives,
    #[value(name = "ber_vs_m")]
    BerVsM,
    #[value(name = "ber_vs_dcl")]
    BerVsDcl,
    #[value(name = "postdist")]
    Postdist,
    #[value(name = "eye")]
    Eye,
}

impl From<KindArg> for SweepKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Response => SweepKind::Response,
            KindArg::Derivatives => SweepKind::Derivatives,
            KindArg::BerVsM => SweepKind::BerVsM,
            KindArg::BerVsDcl => SweepKind::BerVsDcl,
            KindArg::Postdist => SweepKind::Postdist,
            KindArg::Eye => SweepKind::Eye,
        }
    }
}
