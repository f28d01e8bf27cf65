use std::fs::{self, File};
use std::io::Write;
use std::path::{Path, PathBuf};

use pvvlc_core::calibrated as cal;
use pvvlc_core::calibration::{fit_response, load_model_card, load_samples, save_model_card, ModelCard};
use pvvlc_core::compensation::run_link_with;
use pvvlc_core::exec::with_jobs;
use pvvlc_core::experiments::{
    export_eye, sweep_ber_vs_dcl, sweep_ber_vs_m, sweep_derivatives, sweep_postdistortion, sweep_response, write_csv,
    write_eye_csv, BerSweep, CsvTable, SweepKind,
};
use pvvlc_core::link_sim::{random_payload, transmit_frame};
use pvvlc_core::{DerivativeForm, ExecMode, LinkConfig, ModuleSpec, PvCellParams, RxProcessing};
use serde_json::{json, Value};

use crate::config::FileConfig;
use crate::{Failure, FitArgs, SimulateArgs, SweepArgs};

const DEFAULT_EYE_TRACES: usize = 200;

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn load_model(path: Option<&PathBuf>) -> Result<ModuleSpec, Failure> {
    match path {
        None => Ok(ModuleSpec::default()),
        Some(p) => load_model_card(p).map_err(|e| usage(format!("model card {}: {e}", p.display()))),
    }
}

fn require_seed(flag: Option<u64>, file: &FileConfig) -> Result<u64, Failure> {
    flag.or(file.seed)
        .ok_or_else(|| usage("this command needs a seed: pass --seed or set `seed` in the config file"))
}

/// Writes `bytes` to `path` through a temporary file in the same directory.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let fail = |e: std::io::Error| usage(format!("cannot write {}: {e}", path.display()));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(fail)?;
    tmp.write_all(bytes).map_err(fail)?;
    tmp.persist(path).map_err(|e| fail(e.error))?;
    Ok(())
}

fn write_manifest(dir: &Path, manifest: &Value) -> Result<(), Failure> {
    let mut text = serde_json::to_string_pretty(manifest).expect("manifest serializes");
    text.push('\n');
    write_atomic(&dir.join("run_manifest.json"), text.as_bytes())
}

fn output_dir(path: &Path) -> Result<(), Failure> {
    fs::create_dir_all(path).map_err(|e| usage(format!("cannot create {}: {e}", path.display())))?;
    tempfile::NamedTempFile::new_in(path)
        .map(drop)
        .map_err(|e| usage(format!("output directory {} is not writable: {e}", path.display())))
}

pub fn fit(args: &FitArgs, file: &FileConfig) -> Result<(), Failure> {
    let defaults = PvCellParams::default();
    let cells = args.cells.or(file.cells).unwrap_or(1);
    let temperature = args.temp.or(file.temp).unwrap_or(defaults.temperature);
    let eta = args.eta.or(file.eta).unwrap_or(defaults.eta);
    let out = args
        .out
        .clone()
        .or_else(|| file.out.clone())
        .ok_or_else(|| usage("--out is required"))?;
    let out_dir = match out.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    if !out_dir.is_dir() {
        return Err(usage(format!("directory {} does not exist", out_dir.display())));
    }

    let reader =
        File::open(&args.samples).map_err(|e| usage(format!("cannot open {}: {e}", args.samples.display())))?;
    let samples = load_samples(reader).map_err(|e| usage(format!("{}: {e}", args.samples.display())))?;
    let fit = fit_response(&samples, cells, temperature)?;
    if !fit.converged {
        return Err(Failure::Compute(format!(
            "fit did not converge after {} iterations (rmse {:.3e} V, n {:.4}, a {:.4e}/lux)",
            fit.iterations, fit.rmse, fit.n_hat, fit.a_hat
        )));
    }
    let spec = fit.module_spec(cells, eta, temperature)?;
    save_model_card(&out, &spec, Some(&fit))?;
    write_manifest(
        &out_dir,
        &json!({
            "command": "fit",
            "version": env!("CARGO_PKG_VERSION"),
            "samples": args.samples,
            "cells": cells,
            "temperature": temperature,
            "eta": eta,
            "out": out,
            "fit": fit,
        }),
    )?;
    println!(
        "{}",
        serde_json::to_string(&ModelCard::new(&spec, Some(&fit))).expect("card serializes")
    );
    Ok(())
}

pub fn simulate(args: &SimulateArgs, file: &FileConfig) -> Result<(), Failure> {
    let spec = load_model(args.model.as_ref().or(file.model.as_ref()))?;
    let seed = require_seed(args.seed, file)?;
    let mut link = args.link.resolve(file, LinkConfig::default());
    link.seed = seed;
    let bits = args.payload_bits.or(file.payload_bits).unwrap_or(cal::PAYLOAD_BITS);
    let processing = if args.postdist || file.postdist == Some(true) {
        RxProcessing::PostDistortion {
            gain_cap: args.gain_cap.or(file.gain_cap).unwrap_or(cal::GAIN_CAP),
        }
    } else {
        RxProcessing::Plain
    };
    let report = run_link_with(&link, &spec, &random_payload(seed, bits), processing)?;
    println!("{}", serde_json::to_string(&report).expect("report serializes"));
    Ok(())
}

fn csv_bytes<T: CsvTable>(rows: &[T]) -> Result<Vec<u8>, Failure> {
    let mut bytes = Vec::new();
    write_csv(&mut bytes, rows)?;
    Ok(bytes)
}

pub fn sweep(args: &SweepArgs, file: &FileConfig) -> Result<(), Failure> {
    let kind = SweepKind::from(args.kind);
    let model_path = args.model.as_ref().or(file.model.as_ref());
    let spec = load_model(model_path)?;
    let out = args
        .out
        .clone()
        .or_else(|| file.out.clone())
        .ok_or_else(|| usage("--out is required"))?;
    let randomized = !matches!(kind, SweepKind::Response | SweepKind::Derivatives);
    let seed = if randomized {
        Some(require_seed(args.seed, file)?)
    } else {
        args.seed.or(file.seed)
    };
    output_dir(&out)?;

    let g = &args.grids;
    let serial = args.serial || file.serial == Some(true);
    let jobs = args.jobs.or(file.jobs);
    let reps = args.reps.or(file.reps).unwrap_or(cal::REPETITIONS);
    let payload_bits = args.payload_bits.or(file.payload_bits).unwrap_or(cal::PAYLOAD_BITS);
    let gain_cap = args.gain_cap.or(file.gain_cap).unwrap_or(cal::GAIN_CAP);

    let tx_default = match kind {
        SweepKind::BerVsDcl => cal::DCL_TX_LUX,
        SweepKind::Postdist => cal::POSTDIST_TX_LUX,
        _ => LinkConfig::default().tx_dc_lux,
    };
    let mut link = args.link.resolve(
        file,
        LinkConfig {
            tx_dc_lux: tx_default,
            ..LinkConfig::default()
        },
    );
    link.seed = seed.unwrap_or(0);
    let ber_sweep = BerSweep {
        repetitions: reps,
        payload_bits,
        mode: if serial { ExecMode::Serial } else { ExecMode::Parallel },
        ..BerSweep::new(link.clone(), spec, link.seed)
    };

    let pick = |flag: &Option<Vec<f64>>, key: &Option<Vec<f64>>, default: Vec<f64>| {
        flag.clone().or_else(|| key.clone()).unwrap_or(default)
    };
    let cells = g.cell_counts.clone().or_else(|| file.cell_counts.clone());
    let cells = cells.unwrap_or_else(|| cal::RESPONSE_CELLS.to_vec());
    let form: DerivativeForm = g
        .derivative_form
        .map(Into::into)
        .or(file.derivative_form)
        .unwrap_or_default();

    let compute = || -> Result<(Vec<u8>, Value), Failure> {
        Ok(match kind {
            SweepKind::Response => {
                let lux = pick(&g.lux_grid, &file.lux_grid, cal::response_grid());
                let rows = sweep_response(&lux, &cells, &spec)?;
                (csv_bytes(&rows)?, json!({ "lux_grid": lux, "cell_counts": cells }))
            }
            SweepKind::Derivatives => {
                let default: Vec<f64> = cal::response_grid().into_iter().filter(|&l| l > 0.0).collect();
                let lux = pick(&g.lux_grid, &file.lux_grid, default);
                let rows = sweep_derivatives(&lux, &cells, &spec, form)?;
                (
                    csv_bytes(&rows)?,
                    json!({ "lux_grid": lux, "cell_counts": cells, "derivative_form": form }),
                )
            }
            SweepKind::BerVsM => {
                let m = pick(&g.m_grid, &file.m_grid, cal::BER_VS_M_GRID.to_vec());
                let lux = pick(&g.illuminances, &file.illuminances, cal::BER_VS_M_ILLUMINANCES.to_vec());
                let rows = sweep_ber_vs_m(&m, &lux, &ber_sweep)?;
                (csv_bytes(&rows)?, json!({ "m_grid": m, "illuminances": lux }))
            }
            SweepKind::BerVsDcl => {
                let dcl = pick(&g.dcl_grid, &file.dcl_grid, cal::dcl_grid());
                let m = pick(&g.mod_indices, &file.mod_indices, cal::DCL_MOD_INDICES.to_vec());
                let rows = sweep_ber_vs_dcl(&dcl, &m, &ber_sweep)?;
                (csv_bytes(&rows)?, json!({ "dcl_grid": dcl, "mod_indices": m }))
            }
            SweepKind::Postdist => {
                let m = pick(&g.m_grid, &file.m_grid, cal::POSTDIST_GRID.to_vec());
                let rows = sweep_postdistortion(&m, gain_cap, &ber_sweep)?;
                (csv_bytes(&rows)?, json!({ "m_grid": m, "gain_cap": gain_cap }))
            }
            SweepKind::Eye => {
                let traces = g.traces.or(file.traces).unwrap_or(DEFAULT_EYE_TRACES);
                let sps = link.samples_per_symbol;
                let frame = transmit_frame(&link, &spec, &random_payload(link.seed, 4 * traces))?;
                let payload = &frame.waveform[frame.training.len() * sps..];
                let eye = export_eye(payload, sps, traces)?;
                let mut bytes = Vec::new();
                write_eye_csv(&mut bytes, &eye)?;
                (bytes, json!({ "traces": traces }))
            }
        })
    };
    let (bytes, grids) = match jobs {
        Some(n) => with_jobs(n, compute)?,
        None => compute()?,
    };

    let file_name = kind.file_name();
    write_atomic(&out.join(&file_name), &bytes)?;
    let mut manifest = json!({
        "command": "sweep",
        "kind": kind.name(),
        "version": env!("CARGO_PKG_VERSION"),
        "model": model_path,
        "module": ModelCard::new(&spec, None),
        "seed": seed,
        "outputs": [file_name],
        "grids": grids,
    });
    if randomized {
        manifest["link"] = serde_json::to_value(&link).expect("link config serializes");
        manifest["repetitions"] = json!(reps);
        manifest["payload_bits"] = json!(payload_bits);
        manifest["serial"] = json!(serial);
        manifest["jobs"] = json!(jobs);
    }
    write_manifest(&out, &manifest)?;
    log::info!("wrote {}", out.join(kind.file_name()).display());
    Ok(())
}
