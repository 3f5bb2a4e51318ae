mod support;

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI, TAU};

use hardy::hna::{hardy_q, is_no_signaling};
use hardy::quantum::{
    born_joint, config_to_distribution, hardy_values, maximize_q, Complex, HardyConfiguration, MeasurementSetting,
    OptimizerConfig, TwoQubitState,
};
use num_complex::Complex64;
use proptest::prelude::*;
use proptest::test_runner::RngSeed;

fn seeded(cases: u32) -> ProptestConfig {
    ProptestConfig {
        cases,
        rng_seed: RngSeed::Fixed(20_160_822),
        failure_persistence: None,
        ..ProptestConfig::default()
    }
}

fn to_lib(psi: &[Complex64; 4]) -> TwoQubitState {
    TwoQubitState::normalized(psi.map(|a| Complex::new(a.re, a.im))).unwrap()
}

fn amplitudes() -> impl Strategy<Value = [Complex64; 4]> {
    prop::array::uniform8(-1.0f64..1.0)
        .prop_filter("non-zero vector", |v| v.iter().map(|x| x * x).sum::<f64>() > 1e-6)
        .prop_map(|v| {
            let psi = [0, 2, 4, 6].map(|i| Complex64::new(v[i], v[i + 1]));
            let norm = psi.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
            psi.map(|a| a / norm)
        })
}

fn setting() -> impl Strategy<Value = MeasurementSetting> {
    (0.0..=PI, 0.0..TAU).prop_map(|(p, a)| MeasurementSetting::new(p, a).unwrap())
}

fn configuration() -> impl Strategy<Value = HardyConfiguration> {
    (amplitudes(), setting(), setting(), setting(), setting()).prop_map(|(psi, a1, a2, b1, b2)| HardyConfiguration {
        state: to_lib(&psi),
        alice: [a1, a2],
        bob: [b1, b2],
    })
}

/// Schmidt-form configuration, as used by the optimizer.
fn schmidt_configuration() -> impl Strategy<Value = HardyConfiguration> {
    (0.0..=FRAC_PI_2, setting(), setting(), setting(), setting()).prop_map(|(theta, a1, a2, b1, b2)| {
        HardyConfiguration { state: TwoQubitState::schmidt(theta), alice: [a1, a2], bob: [b1, b2] }
    })
}

proptest! {
    #![proptest_config(seeded(1000))]

    #[test]
    fn born_rule_is_normalized_and_matches_dense_projectors(
        psi in amplitudes(),
        a in setting(),
        b in setting(),
    ) {
        let p = born_joint(&to_lib(&psi), &a, &b).unwrap();
        prop_assert!(p.0.iter().all(|&x| x >= 0.0));
        prop_assert!((p.0.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        let reference = support::dense_joint(&psi, a.bloch_vector(), b.bloch_vector());
        for (lib, dense) in p.0.iter().zip(reference) {
            prop_assert!((lib - dense).abs() <= 1e-12, "{lib} vs {dense}");
        }
    }

    #[test]
    fn quantum_distributions_are_no_signaling(config in configuration()) {
        let ns = is_no_signaling(&config_to_distribution(&config).unwrap(), 1e-10);
        prop_assert!(ns.holds, "max deviation {}", ns.max_deviation);
    }

    #[test]
    fn hardy_values_commute_with_distribution(config in configuration()) {
        let direct = hardy_values(&config).unwrap();
        let via = hardy_q(&config_to_distribution(&config).unwrap(), 1e-9).unwrap();
        for (x, y) in [(direct.p1, via.p1), (direct.p2, via.p2), (direct.p3, via.p3), (direct.q, via.q)] {
            prop_assert!((x - y).abs() <= 1e-12);
        }
    }

    #[test]
    fn common_azimuth_rotation_with_state_phase_is_a_gauge(
        psi in amplitudes(),
        a1 in setting(), a2 in setting(), b1 in setting(), b2 in setting(),
        phi in 0.0..TAU,
    ) {
        let config = HardyConfiguration { state: to_lib(&psi), alice: [a1, a2], bob: [b1, b2] };
        // Rotating each eigenbasis by diag(1, e^{i phi}) is undone by the same
        // phase on every |1> of the state: c_jk -> e^{i (j + k) phi} c_jk.
        let rotated_psi: [Complex64; 4] =
            std::array::from_fn(|idx| psi[idx] * Complex64::from_polar(1.0, ((idx >> 1) + (idx & 1)) as f64 * phi));
        let rotated = HardyConfiguration {
            state: to_lib(&rotated_psi),
            alice: config.alice.map(|s| s.rotated_about_z(phi)),
            bob: config.bob.map(|s| s.rotated_about_z(phi)),
        };
        let before = hardy_values(&config).unwrap();
        let after = hardy_values(&rotated).unwrap();
        for (x, y) in [(before.p1, after.p1), (before.p2, after.p2), (before.p3, after.p3), (before.q, after.q)] {
            prop_assert!((x - y).abs() <= 1e-10);
        }
    }

    #[test]
    fn schmidt_states_obey_the_same_laws(config in schmidt_configuration()) {
        let v = hardy_values(&config).unwrap();
        for x in [v.p1, v.p2, v.p3, v.q] {
            prop_assert!((0.0..=1.0 + 1e-12).contains(&x));
        }
        prop_assert!(is_no_signaling(&config_to_distribution(&config).unwrap(), 1e-10).holds);
    }
}

#[test]
fn bell_state_along_z() {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let psi = [Complex64::new(s, 0.0), Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0), Complex64::new(s, 0.0)];
    let dense = support::dense_joint(&psi, support::bloch(0.0, 0.0), support::bloch(0.0, 0.0));
    let lib =
        born_joint(&TwoQubitState::schmidt(FRAC_PI_4), &MeasurementSetting::z(), &MeasurementSetting::z()).unwrap();
    for (x, y) in lib.0.iter().zip(dense) {
        assert!((x - y).abs() <= 1e-15);
    }
    for (x, y) in dense.iter().zip([0.5, 0.0, 0.0, 0.5]) {
        assert!((x - y).abs() <= 1e-15);
    }
}

#[test]
fn product_state_with_alice_along_x() {
    let psi = [Complex64::new(1.0, 0.0), Complex64::default(), Complex64::default(), Complex64::default()];
    let dense = support::dense_joint(&psi, support::bloch(FRAC_PI_2, 0.0), support::bloch(0.0, 0.0));
    let lib = born_joint(
        &TwoQubitState::schmidt(0.0),
        &MeasurementSetting::new(FRAC_PI_2, 0.0).unwrap(),
        &MeasurementSetting::z(),
    )
    .unwrap();
    for (k, expected) in [0.5, 0.0, 0.5, 0.0].into_iter().enumerate() {
        assert!((dense[k] - expected).abs() <= 1e-15);
        assert!((lib.0[k] - expected).abs() <= 1e-15);
    }
}

#[test]
fn maximally_entangled_all_z_gives_half_on_first_constraint() {
    let z = MeasurementSetting::z();
    let config = HardyConfiguration { state: TwoQubitState::schmidt(FRAC_PI_4), alice: [z, z], bob: [z, z] };
    assert!((hardy_values(&config).unwrap().p1 - 0.5).abs() <= 1e-15);
}

#[test]
fn grid_oracle_reproduces_the_closed_form_maximum() {
    let analytic = (5.0 * 5f64.sqrt() - 11.0) / 2.0;
    let best = support::grid_oracle(0.002, None);
    assert!((best.q - analytic).abs() <= 1e-9, "oracle {} vs {analytic}", best.q);
}

#[test]
fn grid_oracle_points_are_feasible_in_the_library_model() {
    let best = support::grid_oracle(0.01, None);
    let [a1, a2, b1, b2] = best.angles.map(MeasurementSetting::in_xz_plane);
    let config = HardyConfiguration { state: TwoQubitState::schmidt(best.theta), alice: [a1, a2], bob: [b1, b2] };
    let v = hardy_values(&config).unwrap();
    assert!(v.max_residual() <= 1e-20, "{v:?}");
    assert!((v.q - best.q).abs() <= 1e-12);
}

#[test]
fn maximal_entanglement_admits_no_hardy_violation() {
    assert!(support::grid_oracle(0.002, Some(FRAC_PI_4)).q <= 1e-12);
}

#[test]
fn optimizer_agrees_with_oracle_across_seeds() {
    let oracle = support::grid_oracle(0.002, None).q;
    for seed in [1, 2] {
        let best = maximize_q(&OptimizerConfig { restarts: 8, seed, ..OptimizerConfig::default() }).unwrap();
        assert!((best.q - oracle).abs() <= 1e-4, "seed {seed}: {} vs {oracle}", best.q);
        assert!(best.residuals.iter().all(|&r| r <= 1e-8));
        assert!(best.q <= 0.0902 + 1e-6);
    }
}

#[test]
fn optimizer_is_deterministic() {
    let opt = OptimizerConfig { restarts: 3, seed: 9, ..OptimizerConfig::default() };
    assert_eq!(maximize_q(&opt).unwrap(), maximize_q(&opt).unwrap());
}
