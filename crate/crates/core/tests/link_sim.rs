use pvvlc_core::link_sim::*;
use pvvlc_core::seed::{stream_rng, STREAM_NOISE};
use pvvlc_core::*;

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn quiet() -> LinkConfig {
    LinkConfig {
        lpf_cutoff_hz: None,
        ..LinkConfig::default().noiseless()
    }
}

#[test]
fn gray_mapping() {
    assert_eq!(encode_pam4(&[false, false]).unwrap()[0].amplitude(), -1.0);
    assert_eq!(encode_pam4(&[true, false]).unwrap()[0].amplitude(), 1.0);
    assert_eq!(encode_pam4(&[false, true]).unwrap()[0].amplitude(), -1.0 / 3.0);
    assert_eq!(encode_pam4(&[true, true]).unwrap()[0].amplitude(), 1.0 / 3.0);
    for pair in [[false, false], [false, true], [true, false], [true, true]] {
        assert_eq!(decode_pam4(&encode_pam4(&pair).unwrap()), pair.to_vec());
    }
    for w in Pam4Level::ALL.windows(2) {
        let (a, b) = (w[0].bits(), w[1].bits());
        assert_eq!(u8::from(a.0 != b.0) + u8::from(a.1 != b.1), 1);
    }
    assert!(encode_pam4(&[true]).is_err());
}

#[test]
fn nrz_levels() {
    let cfg = LinkConfig {
        mod_index: 0.3,
        tx_dc_lux: 425.0,
        ..quiet()
    };
    let top = tx_waveform(&[Pam4Level::ALL[3]], &cfg);
    assert_eq!(top.len(), cfg.samples_per_symbol);
    assert!(top.iter().all(|&l| (l - 552.5).abs() < 1e-9));
    let bottom = tx_waveform(&[Pam4Level::ALL[0]], &cfg);
    assert!(bottom.iter().all(|&l| (l - 297.5).abs() < 1e-9));
    let tiny = LinkConfig {
        mod_index: 1e-12,
        ..cfg
    };
    assert!(tx_waveform(&Pam4Level::ALL, &tiny)
        .iter()
        .all(|&l| (l - 425.0).abs() < 1e-6));
}

#[test]
fn channel_adds_dc_light() {
    let cfg = LinkConfig {
        dcl_lux: 300.0,
        ..quiet()
    };
    let tx = tx_waveform(&Pam4Level::ALL, &cfg);
    let rx = channel(&tx, &cfg);
    assert!(tx.iter().zip(&rx).all(|(t, r)| (r - t - 300.0).abs() < 1e-12));
    assert!((mean(&rx) - 725.0).abs() < 1e-9);
    assert_eq!(channel(&tx, &quiet()), tx);
}

#[test]
fn noiseless_receive_is_deterministic_voltage() {
    let spec = ModuleSpec::default();
    let l = vec![600.0; 32];
    let mut rng = stream_rng(1, STREAM_NOISE);
    let v = receive(&l, &spec, &quiet(), &mut rng).unwrap();
    let expected = spec.module_voltage(600.0).unwrap();
    assert!(v.iter().all(|&x| x == expected));
}

#[test]
fn shot_sigma_falls_as_inverse_sqrt_at_high_light() {
    let spec = ModuleSpec::default();
    let a = shot_sigma(1e4, &spec, 1e6);
    let b = shot_sigma(4e4, &spec, 1e6);
    assert!((a / b - 2.0).abs() < 1e-3);
}

#[test]
fn ac_coupling() {
    assert!(ac_couple(&[]).is_err());
    assert!(ac_couple(&[3.0; 10]).unwrap().iter().all(|&x| x == 0.0));
    let v: Vec<f64> = (0..1000).map(|i| 0.3 + (f64::from(i) * 0.37).sin()).collect();
    let once = ac_couple(&v).unwrap();
    let rms = (v.iter().map(|x| x * x).sum::<f64>() / v.len() as f64).sqrt();
    assert!(mean(&once).abs() < 1e-12 * rms);
    let twice = ac_couple(&once).unwrap();
    assert!(once.iter().zip(&twice).all(|(a, b)| (a - b).abs() < 1e-15));
}

#[test]
fn decision_window_is_centered() {
    let v: Vec<f64> = (0..8).map(f64::from).collect();
    assert_eq!(decision_statistics(&v, 8).unwrap(), vec![3.5]);
    assert_eq!(decision_statistics(&[0.0, 1.0, 2.0], 3).unwrap(), vec![1.0]);
    assert!(decision_statistics(&v, 3).is_err());
}

#[test]
fn training_must_cover_all_levels() {
    let stats = [0.0, 1.0, 2.0, 0.0];
    let known = [
        Pam4Level::ALL[0],
        Pam4Level::ALL[1],
        Pam4Level::ALL[2],
        Pam4Level::ALL[0],
    ];
    assert!(matches!(Slicer::train(&stats, &known), Err(Error::Detection(_))));
}

#[test]
fn training_sequence_visits_every_level() {
    let seq = training_sequence(&LinkConfig::default());
    assert_eq!(seq.len(), 256);
    for level in Pam4Level::ALL {
        assert!(seq.contains(&level));
    }
}

#[test]
fn noiseless_linear_and_pv_links_are_error_free() {
    let spec = ModuleSpec::default();
    let payload = random_payload(3, 4000);
    for tx_dc_lux in [50.0, 250.0, 1250.0] {
        for mod_index in [0.05, 0.5, 1.0] {
            let cfg = LinkConfig {
                tx_dc_lux,
                mod_index,
                ..quiet()
            };
            let report = run_link(&cfg, &spec, &payload).unwrap();
            assert_eq!(report.bits_errored, 0, "{tx_dc_lux} lux, m = {mod_index}");
        }
    }
}

#[test]
fn top_levels_are_compressed() {
    let spec = ModuleSpec::default();
    let cfg = LinkConfig {
        tx_dc_lux: 250.0,
        mod_index: 0.3,
        ..quiet()
    };
    let c = noiseless_centroids(&cfg, &spec).unwrap();
    assert!(c[3] - c[2] < c[1] - c[0]);
}

#[test]
fn reports_are_consistent() {
    let r = BerReport::from_counts(1000, 30);
    assert_eq!(r.ber, 0.03);
    assert!(!r.pass_fec);
    assert!(BerReport::from_counts(1000, 19).pass_fec);
    let guess = BerReport::compare(&random_payload(1, 100_000), &random_payload(2, 100_000));
    assert!((guess.ber - 0.5).abs() < 0.01);
}

#[test]
fn config_validation() {
    assert!(LinkConfig::default().validate().is_ok());
    for bad in [
        LinkConfig {
            mod_index: 1.5,
            ..LinkConfig::default()
        },
        LinkConfig {
            mod_index: 0.0,
            ..LinkConfig::default()
        },
        LinkConfig {
            tx_dc_lux: 0.0,
            ..LinkConfig::default()
        },
        LinkConfig {
            training_symbols: 10,
            ..LinkConfig::default()
        },
        LinkConfig {
            samples_per_symbol: 1,
            ..LinkConfig::default()
        },
        LinkConfig {
            dcl_lux: -1.0,
            ..LinkConfig::default()
        },
    ] {
        assert!(bad.validate().is_err(), "{bad:?}");
    }
}

#[test]
fn waveform_csv() {
    let mut buf = Vec::new();
    write_waveform_csv(&mut buf, &[0.5, -1.0]).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(
        text,
        "sample_index,value\n0,5.0000000000000000e-1\n1,-1.0000000000000000e0\n"
    );
}
