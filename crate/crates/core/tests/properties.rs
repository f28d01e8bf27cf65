//! Invariants of the device model, calibration and link primitives over
//! randomly drawn parameters.

use proptest::prelude::*;
use pvvlc_core::calibration::fit_response;
use pvvlc_core::device_model::short_circuit_current;
use pvvlc_core::link_sim::{ac_couple, decode_pam4, encode_pam4};
use pvvlc_core::*;

fn params() -> impl Strategy<Value = PvCellParams> {
    (1.0..2.0f64, -12.0..-8.0f64, -10.0..-7.0f64, 250.0..350.0f64)
        .prop_map(|(n, log_i0, log_eta, t)| PvCellParams::new(n, 10f64.powf(log_i0), 10f64.powf(log_eta), t).unwrap())
}

fn lux() -> impl Strategy<Value = f64> {
    (-2.0..4.5f64).prop_map(|e| 10f64.powf(e))
}

proptest! {
    #[test]
    fn voltage_rises_with_light(p in params(), a in lux(), b in lux()) {
        prop_assume!(a < b);
        let spec = ModuleSpec::new(1, p).unwrap();
        prop_assert!(spec.module_voltage(a).unwrap() < spec.module_voltage(b).unwrap());
    }

    #[test]
    fn response_is_concave(p in params(), l in lux(), cells in 1u32..32) {
        let spec = ModuleSpec::new(cells, p).unwrap();
        for form in [DerivativeForm::Exact, DerivativeForm::Asymptotic] {
            prop_assert!(spec.first_derivative(l, form).unwrap() > 0.0);
            prop_assert!(spec.second_derivative(l, form).unwrap() < 0.0);
        }
    }

    #[test]
    fn voltage_is_linear_in_cell_count(p in params(), l in lux(), cells in 1u32..64) {
        let one = ModuleSpec::new(1, p).unwrap();
        let many = one.with_cells(cells);
        prop_assert_eq!(
            many.module_voltage(l).unwrap(),
            f64::from(cells) * one.module_voltage(l).unwrap()
        );
    }

    #[test]
    fn inverse_round_trips(p in params(), l in lux(), cells in 1u32..16) {
        let spec = ModuleSpec::new(cells, p).unwrap();
        let back = spec.inverse_voltage(spec.module_voltage(l).unwrap()).unwrap();
        prop_assert!(((back - l) / l).abs() < 1e-9, "{} -> {}", l, back);
    }

    #[test]
    fn short_circuit_current_is_bounded(
        cells in prop::collection::vec((0.0..1e-3f64, 1e2..1e6f64), 1..40)
    ) {
        let cells: Vec<CellElectrical> = cells
            .into_iter()
            .map(|(i_ph, r_shunt)| CellElectrical { i_ph, r_shunt })
            .collect();
        let isc = short_circuit_current(&cells).unwrap();
        let lo = cells.iter().map(|c| c.i_ph).fold(f64::INFINITY, f64::min);
        let hi = cells.iter().map(|c| c.i_ph).fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(lo <= isc && isc <= hi);
    }

    #[test]
    fn fit_ignores_sample_order(
        n in 1.1..1.9f64,
        log_a in 0.0..3.0f64,
        shuffle_seed in any::<u64>()
    ) {
        let spec = ModuleSpec::new(2, PvCellParams::new(n, 1e-9 / 10f64.powf(log_a), 1e-9, 300.0).unwrap()).unwrap();
        let mut samples: Vec<ResponseSample> = (0..40)
            .map(|i| {
                let lux = 10f64.powf(1.0 + 2.0 * f64::from(i) / 39.0);
                ResponseSample { lux, volts: spec.module_voltage(lux).unwrap() }
            })
            .collect();
        let sorted = fit_response(&samples, 2, 300.0).unwrap();
        let mut state = shuffle_seed | 1;
        for i in (1..samples.len()).rev() {
            state = pvvlc_core::seed::mix64(state, i as u64);
            samples.swap(i, (state % (i as u64 + 1)) as usize);
        }
        let shuffled = fit_response(&samples, 2, 300.0).unwrap();
        prop_assert!(sorted.converged && shuffled.converged);
        prop_assert!(((sorted.n_hat - n) / n).abs() < 1e-6);
        prop_assert!(((shuffled.n_hat - sorted.n_hat) / sorted.n_hat).abs() < 1e-9);
        prop_assert!(((shuffled.a_hat - sorted.a_hat) / sorted.a_hat).abs() < 1e-8);
    }

    #[test]
    fn pam4_round_trips(bits in prop::collection::vec(any::<bool>(), 0..200)) {
        let even = &bits[..bits.len() / 2 * 2];
        prop_assert_eq!(decode_pam4(&encode_pam4(even).unwrap()), even.to_vec());
    }

    #[test]
    fn ac_coupled_waveform_has_zero_mean(v in prop::collection::vec(-5.0..5.0f64, 1..300)) {
        let out = ac_couple(&v).unwrap();
        let mean = out.iter().sum::<f64>() / out.len() as f64;
        prop_assert!(mean.abs() < 1e-12);
    }

    #[test]
    fn ber_report_is_a_fraction(
        a in prop::collection::vec(any::<bool>(), 0..100),
        b in prop::collection::vec(any::<bool>(), 0..100)
    ) {
        let r = BerReport::compare(&a, &b);
        prop_assert!(r.bits_errored <= r.bits_total.max(b.len() as u64));
        prop_assert!(r.ber >= 0.0);
        prop_assert_eq!(r.pass_fec, r.ber < pvvlc_core::link_sim::FEC_THRESHOLD);
    }
}
