//! Scores a candidate receiver-noise setting against the BER curve shapes
//! the default configuration is expected to produce.
//!
//! ```text
//! cargo run --release --example noise_calibration -- \
//!     [--lpf HZ|none] [--bandwidth HZ] [--thermal V] [--bits N] [--reps N] [--gain-cap X]
//! ```
//!
//! Without arguments the committed defaults are scored at full size.

use std::env;
use std::process::ExitCode;

use pvvlc_core::calibrated as cal;
use pvvlc_core::experiments::{sweep_ber_vs_dcl, sweep_ber_vs_m, sweep_postdistortion, BerSweep};
use pvvlc_core::{LinkConfig, ModuleSpec};

fn interior_minimum(curve: &[f64], factor: f64) -> bool {
    let min = curve.iter().copied().fold(f64::INFINITY, f64::min);
    let first = curve[0];
    let last = *curve.last().unwrap();
    first >= factor * min && last >= factor * min && first > min && last > min
}

fn non_increasing(curve: &[f64]) -> bool {
    curve.windows(2).all(|w| w[1] <= w[0])
}

fn main() -> ExitCode {
    let mut base = LinkConfig::default();
    let mut bits = cal::PAYLOAD_BITS;
    let mut reps = cal::REPETITIONS;
    let mut post_reps = 20;
    let mut gain_cap = cal::GAIN_CAP;

    let args: Vec<String> = env::args().skip(1).collect();
    for pair in args.chunks(2) {
        let [flag, value] = pair else {
            eprintln!("flags take a value");
            return ExitCode::from(2);
        };
        let num = || value.parse::<f64>().expect("numeric flag value");
        match flag.as_str() {
            "--lpf" => base.lpf_cutoff_hz = (value != "none").then(num),
            "--bandwidth" => base.noise_bandwidth_hz = num(),
            "--thermal" => base.thermal_sigma_v = num(),
            "--bits" => bits = num() as usize,
            "--reps" => reps = num() as usize,
            "--post-reps" => post_reps = num() as usize,
            "--gain-cap" => gain_cap = num(),
            other => {
                eprintln!("unknown flag {other}");
                return ExitCode::from(2);
            }
        }
    }

    let spec = ModuleSpec::default();
    let mut sweep = BerSweep::new(base.clone(), spec, 2024);
    sweep.payload_bits = bits;
    sweep.repetitions = reps;
    println!(
        "lpf={:?} bandwidth={:e} thermal={:e} bits={bits} reps={reps}",
        base.lpf_cutoff_hz, base.noise_bandwidth_hz, base.thermal_sigma_v
    );

    let rows = sweep_ber_vs_m(&cal::BER_VS_M_GRID, &cal::BER_VS_M_ILLUMINANCES, &sweep).unwrap();
    let mut ok_m = true;
    for (i, chunk) in rows.chunks(cal::BER_VS_M_GRID.len()).enumerate() {
        let curve: Vec<f64> = chunk.iter().map(|r| r.ber).collect();
        println!("ber_vs_m {:>4} lux: {:?}", cal::BER_VS_M_ILLUMINANCES[i], fmt(&curve));
        if i == 0 {
            ok_m &= interior_minimum(&curve, 2.0);
        }
        if i == cal::BER_VS_M_ILLUMINANCES.len() - 1 {
            ok_m &= non_increasing(&curve);
        }
    }

    let dcl_sweep = BerSweep {
        base: LinkConfig {
            tx_dc_lux: cal::DCL_TX_LUX,
            ..base.clone()
        },
        ..sweep.clone()
    };
    let grid = cal::dcl_grid();
    let rows = sweep_ber_vs_dcl(&grid, &cal::DCL_MOD_INDICES, &dcl_sweep).unwrap();
    let mut ok_dcl = true;
    let mut big_gain = false;
    for (i, chunk) in rows.chunks(grid.len()).enumerate() {
        let curve: Vec<f64> = chunk.iter().map(|r| r.ber).collect();
        println!("ber_vs_dcl m={}: {:?}", cal::DCL_MOD_INDICES[i], fmt(&curve));
        ok_dcl &= interior_minimum(&curve, 1.0);
        let min = curve.iter().copied().fold(f64::INFINITY, f64::min);
        big_gain |= curve[0] >= 5.0 * min && curve[0] > 0.0;
    }
    ok_dcl &= big_gain;

    let post_sweep = BerSweep {
        base: LinkConfig {
            tx_dc_lux: cal::POSTDIST_TX_LUX,
            ..base.clone()
        },
        repetitions: post_reps,
        ..sweep.clone()
    };
    let rows = sweep_postdistortion(&cal::POSTDIST_GRID, gain_cap, &post_sweep).unwrap();
    let plain: Vec<f64> = rows.iter().map(|r| r.ber_plain).collect();
    let comp: Vec<f64> = rows.iter().map(|r| r.ber_compensated).collect();
    println!("postdist plain: {:?}", fmt(&plain));
    println!("postdist comp : {:?}", fmt(&comp));
    let n = comp.len();
    let ok_post = rows.iter().all(|r| r.ber_compensated <= r.ber_plain) && comp[n - 1] > comp[n - 2];

    println!("ber_vs_m={ok_m} ber_vs_dcl={ok_dcl} postdist={ok_post}");
    ExitCode::SUCCESS
}

fn fmt(v: &[f64]) -> Vec<String> {
    v.iter().map(|x| format!("{x:.2e}")).collect()
}
