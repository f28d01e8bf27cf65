//! Committed noise calibration and the illuminance presets of the
//! reproduction sweeps.
//!
//! The receiver noise floor is not a measured quantity here. The values
//! below were picked once by `cargo run --release --example noise_calibration`
//! and are what every default [`crate::link_sim::LinkConfig`] uses.
//!
//! The receiver is shot-noise limited. The bandwidth is an effective value
//! that sets the noise level: at 200 lux and m = 0.2 the BER sits near the
//! FEC threshold and it falls with illuminance. The receiver low-pass is off,
//! so the link is the static model and a noiseless run is error-free.

pub const THERMAL_SIGMA_V: f64 = 0.0;
pub const NOISE_BANDWIDTH_HZ: f64 = 1.0e10;
pub const LPF_CUTOFF_HZ: Option<f64> = None;

pub const REPETITIONS: usize = 5;
pub const PAYLOAD_BITS: usize = 500_000;

/// Transmitter illuminance presets, lux.
pub const TX_PRESETS: [f64; 5] = [200.0, 350.0, 425.0, 500.0, 650.0];
/// Rows of the BER-versus-modulation-index sweep.
pub const BER_VS_M_ILLUMINANCES: [f64; 4] = [200.0, 350.0, 500.0, 650.0];
pub const BER_VS_M_GRID: [f64; 7] = [0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.4];
/// Transmitter illuminance of the compensation-LED sweep.
pub const DCL_TX_LUX: f64 = 425.0;
pub const DCL_MOD_INDICES: [f64; 3] = [0.2, 0.3, 0.4];
pub const POSTDIST_TX_LUX: f64 = 350.0;
pub const POSTDIST_GRID: [f64; 5] = [0.2, 0.25, 0.3, 0.35, 0.4];
pub const GAIN_CAP: f64 = crate::compensation::DEFAULT_GAIN_CAP;

/// Compensation-LED grid: 0 to 1500 lux in 50-lux steps.
pub fn dcl_grid() -> Vec<f64> {
    (0..=30).map(|i| 50.0 * f64::from(i)).collect()
}

/// Response grid: 0 to 2000 lux in 10-lux steps.
pub fn response_grid() -> Vec<f64> {
    (0..=200).map(|i| 10.0 * f64::from(i)).collect()
}

pub const RESPONSE_CELLS: [u32; 4] = [1, 2, 4, 8];
