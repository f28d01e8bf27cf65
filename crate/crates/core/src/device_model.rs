//! Static optical-to-electrical model of a photovoltaic cell and of a
//! serial string of identical cells.
//!
//! A cell under illuminance `L` sources a photocurrent `I_ph = eta * L`. With
//! no reverse bias the open-circuit voltage follows the diode law
//!
//! ```text
//! V = n * v_t * ln(I_ph / I0 + 1),    v_t = k_B * T / q
//! ```
//!
//! and `N` cells in series produce `N * V`. Everything here is a pure
//! function of its arguments; there is no junction-capacitance memory.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Boltzmann constant, J/K (exact SI value).
pub const BOLTZMANN: f64 = 1.380649e-23;

/// Elementary charge, C (exact SI value).
pub const ELEMENTARY_CHARGE: f64 = 1.602176634e-19;

pub const DEFAULT_TEMPERATURE: f64 = 300.0;

/// Physics of a single cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PvCellParams {
    /// Diode ideality factor.
    pub n: f64,
    /// Reverse saturation current, A.
    pub i0: f64,
    /// Illuminance-to-photocurrent conversion factor, A/lux.
    pub eta: f64,
    /// Cell temperature, K.
    pub temperature: f64,
}

impl PvCellParams {
    pub fn new(n: f64, i0: f64, eta: f64, temperature: f64) -> Result<Self> {
        let params = Self {
            n,
            i0,
            eta,
            temperature,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        let checks = [
            ("n", self.n),
            ("i0", self.i0),
            ("eta", self.eta),
            ("temperature", self.temperature),
        ];
        for (name, value) in checks {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::validation(format!("{name} must be finite and > 0, got {value}")));
            }
        }
        Ok(())
    }

    /// `k_B * T / q`, volts.
    pub fn thermal_voltage(&self) -> f64 {
        BOLTZMANN * self.temperature / ELEMENTARY_CHARGE
    }

    /// Ratio `eta / i0`, per lux. This is the only combination of the two
    /// that an (illuminance, voltage) curve can observe.
    pub fn gain_ratio(&self) -> f64 {
        self.eta / self.i0
    }

    pub fn photocurrent(&self, lux: f64) -> Result<f64> {
        check_lux(lux)?;
        Ok(self.eta * lux)
    }

    pub fn cell_voltage(&self, lux: f64) -> Result<f64> {
        check_lux(lux)?;
        Ok(self.cell_voltage_unchecked(lux))
    }

    #[inline]
    pub(crate) fn cell_voltage_unchecked(&self, lux: f64) -> f64 {
        self.n * self.thermal_voltage() * (self.eta * lux / self.i0).ln_1p()
    }
}

impl Default for PvCellParams {
    /// Representative indoor-cell parameters: n = 1.5, I0 = 0.1 nA,
    /// eta = 2 nA/lux at 300 K.
    fn default() -> Self {
        Self {
            n: 1.5,
            i0: 1e-10,
            eta: 2e-9,
            temperature: DEFAULT_TEMPERATURE,
        }
    }
}

/// A serial string of `cell_count` identical, uniformly illuminated cells.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModuleSpec {
    pub cell_count: u32,
    pub params: PvCellParams,
}

impl Default for ModuleSpec {
    fn default() -> Self {
        Self {
            cell_count: 1,
            params: PvCellParams::default(),
        }
    }
}

/// Which closed form to use for the response derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DerivativeForm {
    /// Differentiates the full logarithm, including `I0`.
    #[default]
    Exact,
    /// The `eta * L >> I0` limit, `N n v_t / L` and `-N n v_t / L^2`.
    Asymptotic,
}

impl ModuleSpec {
    pub fn new(cell_count: u32, params: PvCellParams) -> Result<Self> {
        let spec = Self { cell_count, params };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.cell_count == 0 {
            return Err(Error::validation("cell_count must be >= 1"));
        }
        self.params.validate()
    }

    /// Same cell physics, different number of cells.
    pub fn with_cells(&self, cell_count: u32) -> Self {
        Self {
            cell_count,
            params: self.params,
        }
    }

    /// `N * n * v_t`: the voltage scale of the whole module.
    #[inline]
    pub fn voltage_scale(&self) -> f64 {
        f64::from(self.cell_count) * self.params.n * self.params.thermal_voltage()
    }

    /// Open-circuit module voltage at illuminance `lux`.
    pub fn module_voltage(&self, lux: f64) -> Result<f64> {
        check_lux(lux)?;
        Ok(self.module_voltage_unchecked(lux))
    }

    // Kept as N times the single-cell value so scaling in N is exact.
    #[inline]
    pub(crate) fn module_voltage_unchecked(&self, lux: f64) -> f64 {
        f64::from(self.cell_count) * self.params.cell_voltage_unchecked(lux)
    }

    /// dV/dL in volts per lux.
    pub fn first_derivative(&self, lux: f64, form: DerivativeForm) -> Result<f64> {
        check_derivative_lux(lux, form)?;
        Ok(self.slope_unchecked(lux, form))
    }

    #[inline]
    pub(crate) fn slope_unchecked(&self, lux: f64, form: DerivativeForm) -> f64 {
        let p = &self.params;
        match form {
            DerivativeForm::Exact => self.voltage_scale() * p.eta / (p.eta * lux + p.i0),
            DerivativeForm::Asymptotic => self.voltage_scale() / lux,
        }
    }

    /// d²V/dL² in volts per lux².
    pub fn second_derivative(&self, lux: f64, form: DerivativeForm) -> Result<f64> {
        check_derivative_lux(lux, form)?;
        let p = &self.params;
        let value = match form {
            DerivativeForm::Exact => {
                let denom = p.eta * lux + p.i0;
                -self.voltage_scale() * p.eta * p.eta / (denom * denom)
            }
            DerivativeForm::Asymptotic => -self.voltage_scale() / (lux * lux),
        };
        Ok(value)
    }

    /// Illuminance that produces `volts` at the module terminals; the exact
    /// inverse of [`ModuleSpec::module_voltage`].
    pub fn inverse_voltage(&self, volts: f64) -> Result<f64> {
        if !(volts >= 0.0) || !volts.is_finite() {
            return Err(Error::domain(format!("voltage must be >= 0, got {volts}")));
        }
        Ok(self.inverse_voltage_unchecked(volts))
    }

    #[inline]
    pub(crate) fn inverse_voltage_unchecked(&self, volts: f64) -> f64 {
        let p = &self.params;
        (p.i0 / p.eta) * (volts / self.voltage_scale()).exp_m1()
    }
}

/// Electrical state of one cell inside a serial string: an ideal current
/// source in parallel with its shunt resistance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellElectrical {
    /// Photocurrent, A.
    pub i_ph: f64,
    /// Shunt resistance, ohms.
    pub r_shunt: f64,
}

/// Short-circuit current of a serial string: the sum of the per-cell Norton
/// voltages divided by the total shunt resistance.
pub fn short_circuit_current(cells: &[CellElectrical]) -> Result<f64> {
    if cells.is_empty() {
        return Err(Error::domain("cell list is empty"));
    }
    let mut weighted = 0.0;
    let mut total_r = 0.0;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for (i, cell) in cells.iter().enumerate() {
        if !(cell.r_shunt > 0.0) || !cell.r_shunt.is_finite() {
            return Err(Error::domain(format!(
                "cell {i}: shunt resistance must be > 0, got {}",
                cell.r_shunt
            )));
        }
        if !(cell.i_ph >= 0.0) {
            return Err(Error::domain(format!(
                "cell {i}: photocurrent must be >= 0, got {}",
                cell.i_ph
            )));
        }
        weighted += cell.i_ph * cell.r_shunt;
        total_r += cell.r_shunt;
        lo = lo.min(cell.i_ph);
        hi = hi.max(cell.i_ph);
    }
    // A weighted mean lies in [lo, hi]; the clamp only absorbs rounding, and
    // makes the uniform case return exactly I_ph.
    Ok((weighted / total_r).clamp(lo, hi))
}

fn check_lux(lux: f64) -> Result<()> {
    if lux >= 0.0 && lux.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!("illuminance must be >= 0, got {lux}")))
    }
}

fn check_derivative_lux(lux: f64, form: DerivativeForm) -> Result<()> {
    check_lux(lux)?;
    if form == DerivativeForm::Asymptotic && lux == 0.0 {
        return Err(Error::domain("asymptotic derivative is undefined at 0 lux"));
    }
    Ok(())
}
