use gkdv_core::par::Execution;
use gkdv_core::stability::{self, StabilityConfig};

#[test]
fn short_run_at_p_one_and_a_half_conserves_mass() {
    let config = StabilityConfig {
        p: 1.5,
        half_length: 200.0,
        n: 4096,
        t_end: 20.0,
        width: 10.0,
        dt: 0.01,
        ..StabilityConfig::default()
    };
    let run = stability::run(&config, Execution::Parallel).unwrap();
    let s = &run.summary;
    assert!(s.q_drift <= 1e-9, "{}", s.q_drift);
    assert!(s.truncated_at.is_none());
    assert!(s.tube_held, "{}", s.tube_max);
    assert!(s.tube_over_delta < 5.0, "{}", s.tube_over_delta);
}

#[test]
fn unperturbed_soliton_stays_put() {
    let config = StabilityConfig {
        delta: 0.0,
        half_length: 100.0,
        n: 2048,
        t_end: 2.0,
        dt: 0.005,
        ..StabilityConfig::default()
    };
    let run = stability::run(&config, Execution::Sequential).unwrap();
    let s = &run.summary;
    assert!(s.tube_max <= 1e-8, "{}", s.tube_max);
    assert!((s.c_full - 1.0).abs() <= 1e-10);
    assert!(s.tube_over_delta.is_nan());
}

#[test]
fn negative_delta_is_rejected() {
    let config = StabilityConfig { delta: -1e-3, ..StabilityConfig::default() };
    assert!(config.validate().is_err());
}
