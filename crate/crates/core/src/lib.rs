//! Photovoltaic-module receivers for visible light communication.
//!
//! * [`device_model`]: the logarithmic optical-to-electrical response of a
//!   serial PV module, its derivatives and its inverse.
//! * [`calibration`]: fitting that response to measured data, model cards.
//! * [`link_sim`]: a PAM4 link through the module with thermal and shot noise.
//! * [`compensation`]: post-distortion and compensation-LED optimization.
//! * [`experiments`]: sweep drivers writing CSV datasets.

// `!(x >= 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod calibrated;
pub mod calibration;
pub mod compensation;
pub mod device_model;
pub mod error;
pub mod exec;
pub mod experiments;
pub mod link_sim;
pub mod seed;

pub use calibration::{fit_response, FitResult, ModelCard, ResponseSample};
pub use compensation::{post_distort, PostDistortionConfig, RxProcessing};
pub use device_model::{CellElectrical, DerivativeForm, ModuleSpec, PvCellParams};
pub use error::{Error, Result};
pub use exec::ExecMode;
pub use link_sim::{run_link, BerReport, LinkConfig, Pam4Level};
