//! Fitting the module response to measured (illuminance, voltage) pairs.
//!
//! The curve `V(L) = N n v_t ln(eta L / I0 + 1)` only sees `eta` and `I0`
//! through their ratio `a = eta / I0`, so the fitter estimates `(n, a)`.
//! `I0` can be backed out afterwards with [`to_i0`] once `eta` is known from
//! an independent measurement.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::device_model::{ModuleSpec, PvCellParams, BOLTZMANN, ELEMENTARY_CHARGE};
use crate::error::{Error, Result};

pub const N_BOUNDS: (f64, f64) = (0.5, 5.0);
pub const A_BOUNDS: (f64, f64) = (1e-4, 1e6);
pub const MAX_ITERATIONS: usize = 200;
/// Convergence threshold on the relative change of `n` and `a`.
pub const PARAM_TOLERANCE: f64 = 1e-8;
/// A dark-reading above this suggests stray light during calibration.
pub const DARK_OFFSET_WARN_V: f64 = 1e-3;

const INIT_GRID: [f64; 6] = [1e-2, 1e-1, 1e0, 1e1, 1e2, 1e3];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResponseSample {
    pub lux: f64,
    pub volts: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub n_hat: f64,
    /// Estimated `eta / I0`, per lux.
    pub a_hat: f64,
    pub rmse: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl FitResult {
    /// Module described by this fit, given the conversion factor `eta`.
    pub fn module_spec(&self, cell_count: u32, eta: f64, temperature: f64) -> Result<ModuleSpec> {
        let i0 = to_i0(self, eta)?;
        ModuleSpec::new(cell_count, PvCellParams::new(self.n_hat, i0, eta, temperature)?)
    }
}

/// Reads `lux,volts` CSV. Lines are numbered from 1 with the header on line 1.
pub fn load_samples<R: Read>(source: R) -> Result<Vec<ResponseSample>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(source);

    let header = reader.headers().map_err(|e| Error::Parse {
        line: 1,
        message: e.to_string(),
    })?;
    if header.len() != 2 || &header[0] != "lux" || &header[1] != "volts" {
        return Err(Error::Parse {
            line: 1,
            message: format!(
                "expected header `lux,volts`, got `{}`",
                header.iter().collect::<Vec<_>>().join(",")
            ),
        });
    }

    let mut samples = Vec::new();
    let mut record = csv::StringRecord::new();
    loop {
        let more = reader.read_record(&mut record).map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        if !more {
            break;
        }
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != 2 {
            return Err(Error::Parse {
                line,
                message: format!("expected 2 fields, found {}", record.len()),
            });
        }
        let field = |i: usize, name: &str| -> Result<f64> {
            record[i].parse::<f64>().map_err(|e| Error::Parse {
                line,
                message: format!("{name} `{}`: {e}", &record[i]),
            })
        };
        let lux = field(0, "lux")?;
        let volts = field(1, "volts")?;
        for (name, v) in [("lux", lux), ("volts", volts)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::RowValidation {
                    line,
                    message: format!("{name} must be finite and >= 0, got {v}"),
                });
            }
        }
        samples.push(ResponseSample { lux, volts });
    }
    Ok(samples)
}

/// Indices of dark samples (0 lux) whose reading exceeds
/// [`DARK_OFFSET_WARN_V`].
pub fn dark_offset_rows(samples: &[ResponseSample]) -> Vec<usize> {
    samples
        .iter()
        .enumerate()
        .filter(|(_, s)| s.lux == 0.0 && s.volts > DARK_OFFSET_WARN_V)
        .map(|(i, _)| i)
        .collect()
}

/// Least-squares fit of `(n, a)` for a module of `cell_count` cells.
pub fn fit_response(samples: &[ResponseSample], cell_count: u32, temperature: f64) -> Result<FitResult> {
    fit_response_traced(samples, cell_count, temperature).map(|(fit, _)| fit)
}

/// As [`fit_response`], also returning the residual sum of squares after the
/// initial guess and after every accepted step.
pub fn fit_response_traced(
    samples: &[ResponseSample],
    cell_count: u32,
    temperature: f64,
) -> Result<(FitResult, Vec<f64>)> {
    if samples.len() < 4 {
        return Err(Error::invalid(format!(
            "need at least 4 samples, got {}",
            samples.len()
        )));
    }
    if cell_count == 0 {
        return Err(Error::validation("cell_count must be >= 1"));
    }
    if !(temperature.is_finite() && temperature > 0.0) {
        return Err(Error::validation(format!("temperature must be > 0, got {temperature}")));
    }
    check_design(samples)?;
    for row in dark_offset_rows(samples) {
        log::warn!(
            "sample {row}: {} V at 0 lux, ambient light during calibration?",
            samples[row].volts
        );
    }

    // Canonical order makes the result independent of input order.
    let mut data: Vec<ResponseSample> = samples.to_vec();
    data.sort_by(|x, y| x.lux.total_cmp(&y.lux).then(x.volts.total_cmp(&y.volts)));

    let problem = Problem {
        data: &data,
        scale: f64::from(cell_count) * BOLTZMANN * temperature / ELEMENTARY_CHARGE,
    };
    Ok(problem.solve())
}

/// `I0 = eta / a`.
pub fn to_i0(fit: &FitResult, eta: f64) -> Result<f64> {
    if !(eta.is_finite() && eta > 0.0) {
        return Err(Error::domain(format!("eta must be > 0, got {eta}")));
    }
    Ok(eta / fit.a_hat)
}

fn check_design(samples: &[ResponseSample]) -> Result<()> {
    let mut lit: Vec<f64> = samples.iter().map(|s| s.lux).filter(|&l| l > 0.0).collect();
    lit.sort_by(f64::total_cmp);
    lit.dedup();
    match (lit.first(), lit.last()) {
        (Some(lo), Some(hi)) if lit.len() >= 2 => {
            if hi / lo < 10.0 {
                Err(Error::Unidentifiable(format!(
                    "illuminance spans {lo}..{hi} lux; need at least one decade"
                )))
            } else {
                Ok(())
            }
        }
        _ => Err(Error::Unidentifiable(format!(
            "need at least two distinct nonzero illuminance values, got {}",
            lit.len()
        ))),
    }
}

struct Problem<'a> {
    data: &'a [ResponseSample],
    /// `N k_B T / q`; the model is `scale * n * ln(1 + a L)`.
    scale: f64,
}

#[derive(Clone, Copy)]
struct Params {
    log_n: f64,
    log_a: f64,
}

impl Params {
    fn clamped(self) -> Self {
        Self {
            log_n: self.log_n.clamp(N_BOUNDS.0.ln(), N_BOUNDS.1.ln()),
            log_a: self.log_a.clamp(A_BOUNDS.0.ln(), A_BOUNDS.1.ln()),
        }
    }
}

impl Problem<'_> {
    fn cost(&self, p: Params) -> f64 {
        let prefactor = self.scale * p.log_n.exp();
        let a = p.log_a.exp();
        self.data
            .iter()
            .map(|s| {
                let r = prefactor * (a * s.lux).ln_1p() - s.volts;
                r * r
            })
            .sum()
    }

    /// Normal equations `J^T J` and `J^T r` in log-parameter coordinates.
    fn normal_equations(&self, p: Params) -> ([[f64; 2]; 2], [f64; 2]) {
        let prefactor = self.scale * p.log_n.exp();
        let a = p.log_a.exp();
        let mut jtj = [[0.0; 2]; 2];
        let mut jtr = [0.0; 2];
        for s in self.data {
            let x = a * s.lux;
            let model = prefactor * x.ln_1p();
            let r = model - s.volts;
            let j = [model, prefactor * x / (1.0 + x)];
            for row in 0..2 {
                jtr[row] += j[row] * r;
                for col in 0..2 {
                    jtj[row][col] += j[row] * j[col];
                }
            }
        }
        (jtj, jtr)
    }

    /// Start from the grid point in `a` with the lowest residual, taking the
    /// best prefactor for each (the model is linear in it).
    fn initial_guess(&self) -> Params {
        let n_lo = N_BOUNDS.0;
        let n_hi = N_BOUNDS.1;
        INIT_GRID
            .iter()
            .map(|&a| {
                let (sxy, sxx) = self.data.iter().fold((0.0, 0.0), |(sxy, sxx), s| {
                    let x = self.scale * (a * s.lux).ln_1p();
                    (sxy + x * s.volts, sxx + x * x)
                });
                let n = if sxx > 0.0 { (sxy / sxx).clamp(n_lo, n_hi) } else { n_lo };
                let p = Params {
                    log_n: n.ln(),
                    log_a: a.ln(),
                };
                (p, self.cost(p))
            })
            .min_by(|x, y| x.1.total_cmp(&y.1))
            .map(|(p, _)| p)
            .expect("non-empty grid")
    }

    fn solve(&self) -> (FitResult, Vec<f64>) {
        let mut p = self.initial_guess();
        let mut cost = self.cost(p);
        let mut trace = vec![cost];
        let mut lambda = 1e-3;
        let mut converged = false;
        let mut iterations = 0;

        while iterations < MAX_ITERATIONS {
            iterations += 1;
            let (jtj, jtr) = self.normal_equations(p);
            let a11 = jtj[0][0] * (1.0 + lambda);
            let a22 = jtj[1][1] * (1.0 + lambda);
            let a12 = jtj[0][1];
            let det = a11 * a22 - a12 * a12;
            if !(det.is_finite() && det > 0.0) {
                lambda *= 10.0;
                if lambda > 1e20 {
                    break;
                }
                continue;
            }
            let step_n = -(a22 * jtr[0] - a12 * jtr[1]) / det;
            let step_a = -(a11 * jtr[1] - a12 * jtr[0]) / det;
            let candidate = Params {
                log_n: p.log_n + step_n,
                log_a: p.log_a + step_a,
            }
            .clamped();
            let candidate_cost = self.cost(candidate);

            if candidate_cost <= cost {
                let change = (candidate.log_n - p.log_n).abs().max((candidate.log_a - p.log_a).abs());
                p = candidate;
                cost = candidate_cost;
                trace.push(cost);
                lambda = (lambda * 0.3).max(1e-12);
                // |d ln x| is the relative change of x to first order.
                if change < PARAM_TOLERANCE {
                    converged = true;
                    break;
                }
            } else {
                lambda *= 4.0;
                if lambda > 1e20 {
                    break;
                }
            }
        }

        let fit = FitResult {
            n_hat: p.log_n.exp(),
            a_hat: p.log_a.exp(),
            rmse: (cost / self.data.len() as f64).sqrt(),
            iterations,
            converged,
        };
        (fit, trace)
    }
}

/// Persisted module description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelCard {
    pub cell_count: u32,
    pub n: f64,
    pub i0: f64,
    pub eta: f64,
    pub temperature: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fit: Option<FitSummary>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitSummary {
    pub rmse: f64,
    pub converged: bool,
}

impl ModelCard {
    pub fn new(spec: &ModuleSpec, fit: Option<&FitResult>) -> Self {
        Self {
            cell_count: spec.cell_count,
            n: spec.params.n,
            i0: spec.params.i0,
            eta: spec.params.eta,
            temperature: spec.params.temperature,
            fit: fit.map(|f| FitSummary {
                rmse: f.rmse,
                converged: f.converged,
            }),
        }
    }

    pub fn spec(&self) -> Result<ModuleSpec> {
        ModuleSpec::new(
            self.cell_count,
            PvCellParams::new(self.n, self.i0, self.eta, self.temperature)?,
        )
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model card serializes")
    }

    /// Parses and validates a card; schema problems and invariant violations
    /// are reported separately.
    pub fn from_json(text: &str) -> Result<Self> {
        let card: ModelCard = serde_json::from_str(text).map_err(|e| Error::Schema(e.to_string()))?;
        card.spec()?;
        Ok(card)
    }
}

/// Writes the card via a temporary file in the destination directory and
/// renames it into place.
pub fn save_model_card(destination: impl AsRef<Path>, spec: &ModuleSpec, fit: Option<&FitResult>) -> Result<()> {
    spec.validate()?;
    let destination = destination.as_ref();
    let dir = match destination.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(ModelCard::new(spec, fit).to_json().as_bytes())?;
    tmp.write_all(b"\n")?;
    tmp.as_file().sync_all()?;
    tmp.persist(destination).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

pub fn load_model_card(source: impl AsRef<Path>) -> Result<ModuleSpec> {
    let text = fs::read_to_string(source)?;
    ModelCard::from_json(&text)?.spec()
}
