use pvvlc_core::calibration::*;
use pvvlc_core::device_model::{BOLTZMANN, ELEMENTARY_CHARGE};
use pvvlc_core::*;
use std::fs;

fn synthetic(n: f64, a: f64, cells: u32) -> Vec<ResponseSample> {
    let scale = f64::from(cells) * n * BOLTZMANN * 300.0 / ELEMENTARY_CHARGE;
    (0..50)
        .map(|i| {
            let lux = 10.0 + 990.0 * f64::from(i) / 49.0;
            ResponseSample {
                lux,
                volts: scale * (a * lux).ln_1p(),
            }
        })
        .collect()
}

#[test]
fn parses_csv() {
    let one = load_samples("lux,volts\n0,0\n".as_bytes()).unwrap();
    assert_eq!(one, vec![ResponseSample { lux: 0.0, volts: 0.0 }]);
    let two = load_samples("lux,volts\r\n250,0.3303\r\n1000,0.3840\r\n".as_bytes()).unwrap();
    assert_eq!(
        two,
        vec![
            ResponseSample {
                lux: 250.0,
                volts: 0.3303
            },
            ResponseSample {
                lux: 1000.0,
                volts: 0.3840
            }
        ]
    );
}

#[test]
fn csv_errors_carry_line_numbers() {
    match load_samples("lux,volts\n-5,0.1\n".as_bytes()) {
        Err(Error::RowValidation { line, .. }) => assert_eq!(line, 2),
        other => panic!("{other:?}"),
    }
    match load_samples("lux,volts\n1,2\n3,abc\n".as_bytes()) {
        Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
        other => panic!("{other:?}"),
    }
    match load_samples("lux,volts\n1,2\n3\n".as_bytes()) {
        Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
        other => panic!("{other:?}"),
    }
    assert!(matches!(
        load_samples("volts,lux\n1,2\n".as_bytes()),
        Err(Error::Parse { line: 1, .. })
    ));
}

#[test]
fn recovers_noiseless_parameters() {
    let fit = fit_response(&synthetic(1.5, 20.0, 1), 1, 300.0).unwrap();
    assert!(fit.converged);
    assert!(((fit.n_hat - 1.5) / 1.5).abs() < 1e-6, "{fit:?}");
    assert!(((fit.a_hat - 20.0) / 20.0).abs() < 1e-5, "{fit:?}");
    assert!(fit.rmse < 1e-9);
}

#[test]
fn recovers_multi_cell_parameters() {
    let fit = fit_response(&synthetic(2.1, 0.5, 4), 4, 300.0).unwrap();
    assert!(((fit.n_hat - 2.1) / 2.1).abs() < 1e-6, "{fit:?}");
    assert!(((fit.a_hat - 0.5) / 0.5).abs() < 1e-5, "{fit:?}");
}

#[test]
fn residual_never_increases() {
    let mut data = synthetic(1.2, 300.0, 1);
    for (i, s) in data.iter_mut().enumerate() {
        s.volts += if i % 2 == 0 { 2e-3 } else { -2e-3 };
    }
    let (_, trace) = fit_response_traced(&data, 1, 300.0).unwrap();
    assert!(trace.len() >= 2);
    assert!(trace.windows(2).all(|w| w[1] <= w[0]));
}

#[test]
fn order_does_not_matter() {
    let mut data = synthetic(1.5, 20.0, 1);
    for (i, s) in data.iter_mut().enumerate() {
        s.volts += 1e-3 * ((i * 7919) % 13) as f64 / 13.0;
    }
    let a = fit_response(&data, 1, 300.0).unwrap();
    data.reverse();
    data.swap(3, 17);
    let b = fit_response(&data, 1, 300.0).unwrap();
    assert_eq!(a, b);
}

#[test]
fn degenerate_designs_are_rejected() {
    let few = &synthetic(1.5, 20.0, 1)[..3];
    assert!(matches!(fit_response(few, 1, 300.0), Err(Error::InvalidInput(_))));
    let flat = vec![
        ResponseSample {
            lux: 500.0,
            volts: 0.35
        };
        10
    ];
    assert!(matches!(fit_response(&flat, 1, 300.0), Err(Error::Unidentifiable(_))));
    let narrow: Vec<_> = (0..10)
        .map(|i| ResponseSample {
            lux: 500.0 + f64::from(i),
            volts: 0.35,
        })
        .collect();
    assert!(matches!(fit_response(&narrow, 1, 300.0), Err(Error::Unidentifiable(_))));
}

#[test]
fn flags_dark_offsets() {
    let data = [
        ResponseSample { lux: 0.0, volts: 0.0 },
        ResponseSample { lux: 0.0, volts: 0.01 },
        ResponseSample { lux: 5.0, volts: 0.02 },
    ];
    assert_eq!(dark_offset_rows(&data), vec![1]);
}

#[test]
fn i0_from_eta() {
    let fit = FitResult {
        n_hat: 1.5,
        a_hat: 20.0,
        rmse: 0.0,
        iterations: 1,
        converged: true,
    };
    assert!((to_i0(&fit, 2e-9).unwrap() - 1e-10).abs() < 1e-25);
    assert!((to_i0(&fit, 4e-9).unwrap() - 2e-10).abs() < 1e-25);
    assert!(to_i0(&fit, 0.0).is_err());
}

#[test]
fn model_card_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.json");
    let spec = ModuleSpec::new(
        3,
        PvCellParams::new(1.234_567_890_123, 3.3e-11, 1.7e-9, 301.15).unwrap(),
    )
    .unwrap();
    let fit = FitResult {
        n_hat: 1.234_567_890_123,
        a_hat: 51.5,
        rmse: 1e-4,
        iterations: 9,
        converged: true,
    };
    save_model_card(&path, &spec, Some(&fit)).unwrap();
    assert_eq!(load_model_card(&path).unwrap(), spec);
    let text = fs::read_to_string(&path).unwrap();
    let card = ModelCard::from_json(&text).unwrap();
    assert_eq!(
        card.fit,
        Some(FitSummary {
            rmse: 1e-4,
            converged: true
        })
    );
}

#[test]
fn model_card_schema_and_validation() {
    let missing_n = r#"{"cell_count":1,"i0":1e-10,"eta":2e-9,"temperature":300}"#;
    assert!(matches!(ModelCard::from_json(missing_n), Err(Error::Schema(_))));
    let extra = r#"{"cell_count":1,"n":1.5,"i0":1e-10,"eta":2e-9,"temperature":300,"color":"red"}"#;
    assert!(matches!(ModelCard::from_json(extra), Err(Error::Schema(_))));
    let negative = r#"{"cell_count":1,"n":-1,"i0":1e-10,"eta":2e-9,"temperature":300}"#;
    assert!(matches!(ModelCard::from_json(negative), Err(Error::Validation(_))));
}
