use depthpilot::l1aug::{
    build_desired_model, check_l1_condition, default_c_filter, default_desired_tf, FDelta, L1Constants,
    SampleTimeBenchmark,
};
use depthpilot::lti::TransferFunction;
use depthpilot::Error;
use nalgebra::DMatrix;

fn harness_constants() -> L1Constants {
    L1Constants {
        rho0: 0.5,
        rho_r: 1e4,
        f_delta: FDelta::Constant(0.01),
        l0: 0.3,
        m_r: 50.0,
        gamma0: 1e-3,
        k: DMatrix::from_row_slice(1, 2, &[0.002, 0.05]),
    }
}

#[test]
fn default_configuration_regression() {
    let model = build_desired_model(&default_desired_tf()).unwrap();
    let plant = SampleTimeBenchmark::default().plant().unwrap();
    let r = check_l1_condition(&plant, &model, &default_c_filter(), &harness_constants()).unwrap();
    assert!(r.failure.is_none());
    // ‖H0‖: the first row is t·e^{-0.08t}, whose integral is 1/0.0064
    assert!((r.rho_2 / (50.0 / 0.0064) - 1.0).abs() < 1e-4, "{}", r.rho_2);
    assert!((r.l_rho_r - (1e4 + 1e-3) / 1e4 * 0.062).abs() < 1e-15);
    let close = |got: f64, want: f64| (got / want - 1.0).abs() < 1e-6;
    assert!(close(r.g_l1, 301.8596495170033), "{}", r.g_l1);
    assert!(close(r.rho_1, 6.017289830717156), "{}", r.rho_1);
    assert!(close(r.bound_rhs, 3.5168195118008665), "{}", r.bound_rhs);
    assert!(close(r.rho_ur, 670.3027687049357), "{}", r.rho_ur);
    // these constants do not certify the loop; recorded, not required
    assert!(!r.satisfied);
}

#[test]
fn relative_degree_one_filter_is_rejected() {
    let model = build_desired_model(&default_desired_tf()).unwrap();
    let plant = SampleTimeBenchmark::default().plant().unwrap();
    let c = TransferFunction::new(vec![0.01], vec![1.0, 0.01]).unwrap();
    let err = check_l1_condition(&plant, &model, &c, &harness_constants()).unwrap_err();
    assert!(matches!(err, Error::Properness { .. }), "{err}");
}
