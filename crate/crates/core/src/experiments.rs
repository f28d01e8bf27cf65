//! Sweep harness producing the response, derivative, BER and eye-diagram
//! datasets as CSV tables.
//!
//! Seeding: a BER point's seed is derived from the base seed and the bit
//! patterns of the point's own link parameters (`tx_dc_lux`, `mod_index`,
//! `dcl_lux`, `ambient_lux`), and repetition `r` uses `mix64(point_seed, r)`.
//! A point therefore gets the same noise no matter which sweep or grid it
//! appears in, and growing a grid never perturbs existing points. The
//! payload of repetition `r` is drawn from `mix64(base_seed, r)` and shared by
//! every point of the sweep.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::compensation::{run_link_with, RxProcessing};
use crate::device_model::{DerivativeForm, ModuleSpec};
use crate::error::{Error, Result};
use crate::exec::{self, ExecMode};
use crate::link_sim::{random_payload, BerReport, LinkConfig, Pam4Level, FEC_THRESHOLD};
use crate::seed::{mix64, mix_words};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepKind {
    Response,
    Derivatives,
    BerVsM,
    BerVsDcl,
    Postdist,
    Eye,
}

impl SweepKind {
    pub const ALL: [SweepKind; 6] = [
        SweepKind::Response,
        SweepKind::Derivatives,
        SweepKind::BerVsM,
        SweepKind::BerVsDcl,
        SweepKind::Postdist,
        SweepKind::Eye,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SweepKind::Response => "response",
            SweepKind::Derivatives => "derivatives",
            SweepKind::BerVsM => "ber_vs_m",
            SweepKind::BerVsDcl => "ber_vs_dcl",
            SweepKind::Postdist => "postdist",
            SweepKind::Eye => "eye",
        }
    }

    pub fn file_name(self) -> String {
        format!("{}.csv", self.name())
    }
}

/// Shared settings of the Monte-Carlo sweeps.
#[derive(Debug, Clone, PartialEq)]
pub struct BerSweep {
    pub base: LinkConfig,
    pub spec: ModuleSpec,
    pub repetitions: usize,
    pub payload_bits: usize,
    pub base_seed: u64,
    pub mode: ExecMode,
}

impl BerSweep {
    pub fn new(base: LinkConfig, spec: ModuleSpec, base_seed: u64) -> Self {
        Self {
            base,
            spec,
            repetitions: crate::calibrated::REPETITIONS,
            payload_bits: crate::calibrated::PAYLOAD_BITS,
            base_seed,
            mode: ExecMode::default(),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.repetitions == 0 {
            return Err(Error::invalid("repetitions must be >= 1"));
        }
        if self.payload_bits == 0 || !self.payload_bits.is_multiple_of(2) {
            return Err(Error::invalid("payload_bits must be a positive even number"));
        }
        self.base.validate()?;
        self.spec.validate()
    }

    /// Seed of the point described by `config` (its own `seed` is ignored).
    pub fn point_seed(&self, config: &LinkConfig) -> u64 {
        mix_words(
            self.base_seed,
            [
                config.tx_dc_lux.to_bits(),
                config.mod_index.to_bits(),
                config.dcl_lux.to_bits(),
                config.ambient_lux.to_bits(),
            ],
        )
    }

    /// Link configuration of repetition `rep` at a point.
    pub fn repetition_config(&self, point: &LinkConfig, rep: usize) -> LinkConfig {
        LinkConfig {
            seed: mix64(self.point_seed(point), rep as u64),
            ..point.clone()
        }
    }

    pub fn payload(&self, rep: usize) -> Vec<bool> {
        random_payload(mix64(self.base_seed, rep as u64), self.payload_bits)
    }

    fn payloads(&self) -> Vec<Vec<bool>> {
        (0..self.repetitions).map(|r| self.payload(r)).collect()
    }

    /// Runs every `(point, repetition)` pair and returns per-point vectors of
    /// per-repetition results for each processing variant.
    fn run_points(&self, points: &[LinkConfig], variants: &[RxProcessing]) -> Result<Vec<Vec<Vec<BerReport>>>> {
        self.validate()?;
        for p in points {
            p.validate()?;
        }
        let payloads = self.payloads();
        let jobs: Vec<(usize, usize)> = (0..points.len())
            .flat_map(|p| (0..self.repetitions).map(move |r| (p, r)))
            .collect();
        let results = exec::try_map(self.mode, &jobs, |&(p, r)| {
            let cfg = self.repetition_config(&points[p], r);
            variants
                .iter()
                .map(|&v| run_link_with(&cfg, &self.spec, &payloads[r], v))
                .collect::<Result<Vec<_>>>()
        })?;
        let mut grouped = vec![vec![Vec::with_capacity(self.repetitions); variants.len()]; points.len()];
        for (&(p, _), per_variant) in jobs.iter().zip(results) {
            for (v, report) in per_variant.into_iter().enumerate() {
                grouped[p][v].push(report);
            }
        }
        Ok(grouped)
    }
}

/// Median BER over repetitions.
pub fn median_ber(reports: &[BerReport]) -> f64 {
    let mut bers: Vec<f64> = reports.iter().map(|r| r.ber).collect();
    median(&mut bers)
}

pub fn median(values: &mut [f64]) -> f64 {
    assert!(!values.is_empty(), "median of nothing");
    values.sort_by(f64::total_cmp);
    let mid = values.len() / 2;
    if values.len() % 2 == 1 {
        values[mid]
    } else {
        0.5 * (values[mid - 1] + values[mid])
    }
}

fn check_grid(name: &str, grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::invalid(format!("{name} grid is empty")));
    }
    if grid.iter().any(|x| !x.is_finite()) || grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::invalid(format!(
            "{name} grid must be finite and strictly ascending"
        )));
    }
    Ok(())
}

fn check_cells(cells: &[u32]) -> Result<()> {
    if cells.is_empty() || cells.contains(&0) {
        return Err(Error::invalid("cell counts must be non-empty and >= 1"));
    }
    if cells.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("cell counts must be strictly ascending"));
    }
    Ok(())
}

fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

/// A table that serializes to one of the sweep CSV files.
pub trait CsvTable {
    const HEADER: &'static [&'static str];
    fn fields(&self) -> Vec<String>;
}

pub fn write_csv<W: Write, T: CsvTable>(out: W, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(T::HEADER)?;
    for row in rows {
        w.write_record(row.fields())?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResponseRow {
    pub lux: f64,
    pub cells: u32,
    pub volts: f64,
}

impl CsvTable for ResponseRow {
    const HEADER: &'static [&'static str] = &["lux", "cells", "volts"];
    fn fields(&self) -> Vec<String> {
        vec![fmt(self.lux), self.cells.to_string(), fmt(self.volts)]
    }
}

/// Module voltage over `lux_grid` for each cell count.
pub fn sweep_response(lux_grid: &[f64], cell_counts: &[u32], spec: &ModuleSpec) -> Result<Vec<ResponseRow>> {
    check_grid("lux", lux_grid)?;
    check_cells(cell_counts)?;
    let mut rows = Vec::with_capacity(lux_grid.len() * cell_counts.len());
    for &cells in cell_counts {
        let s = spec.with_cells(cells);
        for &lux in lux_grid {
            rows.push(ResponseRow {
                lux,
                cells,
                volts: s.module_voltage(lux)?,
            });
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivativeRow {
    pub lux: f64,
    pub cells: u32,
    pub dv: f64,
    pub d2v: f64,
}

impl CsvTable for DerivativeRow {
    const HEADER: &'static [&'static str] = &["lux", "cells", "dv", "d2v"];
    fn fields(&self) -> Vec<String> {
        vec![fmt(self.lux), self.cells.to_string(), fmt(self.dv), fmt(self.d2v)]
    }
}

pub fn sweep_derivatives(
    lux_grid: &[f64],
    cell_counts: &[u32],
    spec: &ModuleSpec,
    form: DerivativeForm,
) -> Result<Vec<DerivativeRow>> {
    check_grid("lux", lux_grid)?;
    check_cells(cell_counts)?;
    let mut rows = Vec::with_capacity(lux_grid.len() * cell_counts.len());
    for &cells in cell_counts {
        let s = spec.with_cells(cells);
        for &lux in lux_grid {
            rows.push(DerivativeRow {
                lux,
                cells,
                dv: s.first_derivative(lux, form)?,
                d2v: s.second_derivative(lux, form)?,
            });
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BerVsMRow {
    pub tx_dc_lux: f64,
    pub mod_index: f64,
    pub ber: f64,
    pub pass_fec: bool,
}

impl CsvTable for BerVsMRow {
    const HEADER: &'static [&'static str] = &["tx_dc_lux", "mod_index", "ber", "pass_fec"];
    fn fields(&self) -> Vec<String> {
        vec![
            fmt(self.tx_dc_lux),
            fmt(self.mod_index),
            fmt(self.ber),
            self.pass_fec.to_string(),
        ]
    }
}

fn check_mod_grid(m_grid: &[f64]) -> Result<()> {
    check_grid("modulation index", m_grid)?;
    if m_grid.iter().any(|&m| !(m > 0.0 && m <= 1.0)) {
        return Err(Error::invalid("modulation indices must lie in (0, 1]"));
    }
    Ok(())
}

/// BER against modulation index for each transmitter illuminance. Rows are
/// illuminance-major.
pub fn sweep_ber_vs_m(m_grid: &[f64], illuminances: &[f64], sweep: &BerSweep) -> Result<Vec<BerVsMRow>> {
    check_mod_grid(m_grid)?;
    check_grid("illuminance", illuminances)?;
    let points: Vec<LinkConfig> = illuminances
        .iter()
        .flat_map(|&tx_dc_lux| {
            m_grid.iter().map(move |&mod_index| LinkConfig {
                tx_dc_lux,
                mod_index,
                ..sweep.base.clone()
            })
        })
        .collect();
    let results = sweep.run_points(&points, &[RxProcessing::Plain])?;
    Ok(points
        .iter()
        .zip(results)
        .map(|(p, r)| {
            let ber = median_ber(&r[0]);
            BerVsMRow {
                tx_dc_lux: p.tx_dc_lux,
                mod_index: p.mod_index,
                ber,
                pass_fec: ber < FEC_THRESHOLD,
            }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BerVsDclRow {
    pub mod_index: f64,
    pub dcl_lux: f64,
    pub ber: f64,
}

impl CsvTable for BerVsDclRow {
    const HEADER: &'static [&'static str] = &["mod_index", "dcl_lux", "ber"];
    fn fields(&self) -> Vec<String> {
        vec![fmt(self.mod_index), fmt(self.dcl_lux), fmt(self.ber)]
    }
}

/// BER against compensation-LED illuminance at the base transmitter
/// illuminance, one slice per modulation index. Rows are index-major.
pub fn sweep_ber_vs_dcl(dcl_grid: &[f64], m_list: &[f64], sweep: &BerSweep) -> Result<Vec<BerVsDclRow>> {
    check_grid("DCL", dcl_grid)?;
    if dcl_grid[0] < 0.0 {
        return Err(Error::invalid("DCL illuminance must be >= 0"));
    }
    check_mod_grid(m_list)?;
    let points: Vec<LinkConfig> = m_list
        .iter()
        .flat_map(|&mod_index| {
            dcl_grid.iter().map(move |&dcl_lux| LinkConfig {
                mod_index,
                dcl_lux,
                ..sweep.base.clone()
            })
        })
        .collect();
    let results = sweep.run_points(&points, &[RxProcessing::Plain])?;
    Ok(points
        .iter()
        .zip(results)
        .map(|(p, r)| BerVsDclRow {
            mod_index: p.mod_index,
            dcl_lux: p.dcl_lux,
            ber: median_ber(&r[0]),
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PostdistRow {
    pub mod_index: f64,
    pub ber_plain: f64,
    pub ber_compensated: f64,
}

impl CsvTable for PostdistRow {
    const HEADER: &'static [&'static str] = &["mod_index", "ber_plain", "ber_compensated"];
    fn fields(&self) -> Vec<String> {
        vec![fmt(self.mod_index), fmt(self.ber_plain), fmt(self.ber_compensated)]
    }
}

/// Plain and post-distorted BER on identical noise realizations.
pub fn sweep_postdistortion(m_grid: &[f64], gain_cap: f64, sweep: &BerSweep) -> Result<Vec<PostdistRow>> {
    check_mod_grid(m_grid)?;
    crate::compensation::PostDistortionConfig::for_link(&sweep.base, gain_cap)?;
    let points: Vec<LinkConfig> = m_grid
        .iter()
        .map(|&mod_index| LinkConfig {
            mod_index,
            ..sweep.base.clone()
        })
        .collect();
    let variants = [RxProcessing::Plain, RxProcessing::PostDistortion { gain_cap }];
    let results = sweep.run_points(&points, &variants)?;
    Ok(points
        .iter()
        .zip(results)
        .map(|(p, r)| PostdistRow {
            mod_index: p.mod_index,
            ber_plain: median_ber(&r[0]),
            ber_compensated: median_ber(&r[1]),
        })
        .collect())
}

/// Cuts `traces` consecutive two-symbol segments out of `v` for overlaying
/// as an eye diagram.
pub fn export_eye(v: &[f64], samples_per_symbol: usize, traces: usize) -> Result<Vec<Vec<f64>>> {
    let width = 2 * samples_per_symbol;
    if samples_per_symbol == 0 || traces == 0 {
        return Err(Error::invalid("need at least one trace of at least one sample"));
    }
    if v.len() < traces * width {
        return Err(Error::invalid(format!(
            "{} samples cannot fill {traces} traces of {width}",
            v.len()
        )));
    }
    Ok(v.chunks_exact(width).take(traces).map(<[f64]>::to_vec).collect())
}

/// Writes eye traces as `trace,t0,t1,...` rows.
pub fn write_eye_csv<W: Write>(out: W, traces: &[Vec<f64>]) -> Result<()> {
    let width = traces.first().map_or(0, Vec::len);
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["trace".to_string()];
    header.extend((0..width).map(|i| format!("t{i}")));
    w.write_record(&header)?;
    for (i, t) in traces.iter().enumerate() {
        let mut record = vec![i.to_string()];
        record.extend(t.iter().map(|&x| fmt(x)));
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}

/// Vertical eye openings between adjacent levels, bottom to top: the lowest
/// statistic of the upper level minus the highest of the lower one.
pub fn eye_openings(stats: &[f64], symbols: &[Pam4Level]) -> Result<[f64; 3]> {
    let mut lo = [f64::INFINITY; 4];
    let mut hi = [f64::NEG_INFINITY; 4];
    for (&s, level) in stats.iter().zip(symbols) {
        let k = level.index();
        lo[k] = lo[k].min(s);
        hi[k] = hi[k].max(s);
    }
    if lo.iter().any(|x| x.is_infinite()) {
        return Err(Error::invalid("every level must occur at least once"));
    }
    Ok(std::array::from_fn(|k| lo[k + 1] - hi[k]))
}
