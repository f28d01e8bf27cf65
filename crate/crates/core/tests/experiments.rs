use pvvlc_core::experiments::*;
use pvvlc_core::*;

fn lux_grid() -> Vec<f64> {
    (0..=200).map(|i| 10.0 * f64::from(i)).collect()
}

#[test]
fn response_table() {
    let spec = ModuleSpec::default();
    let rows = sweep_response(&lux_grid(), &[1, 2, 4, 8], &spec).unwrap();
    assert_eq!(rows.len(), 201 * 4);
    assert!(rows.iter().filter(|r| r.lux == 0.0).all(|r| r.volts == 0.0));
    for r in &rows {
        let one = spec.module_voltage(r.lux).unwrap();
        assert_eq!(r.volts, f64::from(r.cells) * one);
    }
    for slice in rows.chunks(201) {
        for w in slice.windows(3) {
            assert!(w[2].volts - 2.0 * w[1].volts + w[0].volts < 0.0);
        }
    }
}

#[test]
fn derivative_table() {
    let spec = ModuleSpec::default();
    let grid = lux_grid();
    let rows = sweep_derivatives(&grid, &[1, 2, 4, 8], &spec, DerivativeForm::Exact).unwrap();
    for r in rows.iter().filter(|r| r.lux > 0.0) {
        assert!(r.dv > 0.0 && r.d2v < 0.0);
    }
    // More cells: larger response and larger curvature at the same light.
    let at = |cells: u32, lux: f64| rows.iter().find(|r| r.cells == cells && r.lux == lux).unwrap();
    assert!(at(8, 300.0).dv > at(4, 300.0).dv);
    assert!(at(8, 300.0).d2v.abs() > at(4, 300.0).d2v.abs());
    // Central differences on a 1-lux grid: truncation error (h/L)^2 / 3
    // stays below 1e-4 from 100 lux up.
    let fine: Vec<f64> = (0..=2000).map(f64::from).collect();
    let volts = sweep_response(&fine, &[2], &spec).unwrap();
    let dvs = sweep_derivatives(&fine, &[2], &spec, DerivativeForm::Exact).unwrap();
    for i in 100..fine.len() - 1 {
        let fd = (volts[i + 1].volts - volts[i - 1].volts) / 2.0;
        assert!(((fd - dvs[i].dv) / dvs[i].dv).abs() < 1e-4, "{}", fine[i]);
    }
}

#[test]
fn grid_validation() {
    let spec = ModuleSpec::default();
    assert!(sweep_response(&[], &[1], &spec).is_err());
    assert!(sweep_response(&[1.0, 1.0], &[1], &spec).is_err());
    assert!(sweep_response(&[1.0], &[0], &spec).is_err());
    let sweep = BerSweep::new(LinkConfig::default(), spec, 1);
    assert!(sweep_ber_vs_m(&[0.0, 0.5], &[200.0], &sweep).is_err());
    assert!(sweep_ber_vs_m(&[0.5, 1.5], &[200.0], &sweep).is_err());
    let no_reps = BerSweep {
        repetitions: 0,
        ..sweep
    };
    assert!(sweep_ber_vs_m(&[0.5], &[200.0], &no_reps).is_err());
}

#[test]
fn median_handles_even_and_odd() {
    assert_eq!(median(&mut [3.0, 1.0, 2.0]), 2.0);
    assert_eq!(median(&mut [4.0, 1.0, 2.0, 3.0]), 2.5);
}

#[test]
fn point_seeds_ignore_grid_position() {
    let sweep = BerSweep::new(LinkConfig::default(), ModuleSpec::default(), 11);
    let a = LinkConfig {
        mod_index: 0.2,
        seed: 5,
        ..LinkConfig::default()
    };
    let b = LinkConfig { seed: 99, ..a.clone() };
    assert_eq!(sweep.point_seed(&a), sweep.point_seed(&b));
    let c = LinkConfig {
        mod_index: 0.25,
        ..a.clone()
    };
    assert_ne!(sweep.point_seed(&a), sweep.point_seed(&c));
}

#[test]
fn noise_free_ber_sweeps_are_zero() {
    let base = LinkConfig {
        lpf_cutoff_hz: None,
        ..LinkConfig::default().noiseless()
    };
    let sweep = BerSweep {
        repetitions: 2,
        payload_bits: 2000,
        ..BerSweep::new(base, ModuleSpec::default(), 3)
    };
    let rows = sweep_postdistortion(&[0.2, 0.4], 4.0, &sweep).unwrap();
    assert!(rows.iter().all(|r| r.ber_plain == 0.0 && r.ber_compensated == 0.0));
    let rows = sweep_ber_vs_m(&[0.1, 0.9], &[200.0, 650.0], &sweep).unwrap();
    assert!(rows.iter().all(|r| r.ber == 0.0 && r.pass_fec));
}

#[test]
fn eye_export() {
    let flat = vec![0.25; 64];
    let traces = export_eye(&flat, 8, 4).unwrap();
    assert_eq!(traces.len(), 4);
    assert!(traces.iter().all(|t| t == &traces[0] && t.len() == 16));
    assert!(export_eye(&flat, 8, 5).is_err());

    let mut buf = Vec::new();
    write_eye_csv(&mut buf, &export_eye(&[1.0, 2.0, 3.0, 4.0], 1, 2).unwrap()).unwrap();
    assert_eq!(
        String::from_utf8(buf).unwrap(),
        "trace,t0,t1\n0,1.0000000000000000e0,2.0000000000000000e0\n1,3.0000000000000000e0,4.0000000000000000e0\n"
    );
}

#[test]
fn csv_headers() {
    let mut buf = Vec::new();
    write_csv(
        &mut buf,
        &[BerVsMRow {
            tx_dc_lux: 200.0,
            mod_index: 0.3,
            ber: 1e-3,
            pass_fec: true,
        }],
    )
    .unwrap();
    assert_eq!(
        String::from_utf8(buf).unwrap(),
        "tx_dc_lux,mod_index,ber,pass_fec\n2.0000000000000000e2,2.9999999999999999e-1,1.0000000000000000e-3,true\n"
    );
}
