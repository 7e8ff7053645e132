use gkdv_core::diagnostics::{CutoffFamily, WeightConfig};
use gkdv_core::evolver::{self, EvolverConfig, Scheme};
use gkdv_core::modulation::{ModulationConfig, Modulator};
use gkdv_core::profiles::{self, Nonlinearity, SolitonParams};
use gkdv_core::{Error, Grid, RealField};
use proptest::prelude::*;
use std::sync::OnceLock;

fn modulator() -> &'static Modulator {
    static CELL: OnceLock<Modulator> = OnceLock::new();
    CELL.get_or_init(|| {
        let grid = Grid::with_points(40.0, 1024).unwrap();
        Modulator::new(&grid, 2.0, ModulationConfig::default()).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]
    #[test]
    fn exact_solitons_are_fixed_points(c in 0.8f64..1.25, d in -3.0f64..3.0) {
        let m = modulator();
        let target = SolitonParams::new(2.0, c).unwrap();
        let u = RealField::from_fn(m.grid, |x| profiles::phi(x - d, &target));
        let s = m.decompose(&u, (1.0, d.round())).unwrap();
        prop_assert!((s.c - c).abs() <= 1e-8, "c {} vs {}", s.c, c);
        prop_assert!((s.d - d).abs() <= 1e-8, "D {} vs {}", s.d, d);
        prop_assert!(s.tube_distance <= 1e-8);
    }
}

#[test]
fn jacobian_has_the_sigma3_structure() {
    let m = modulator();
    let params = SolitonParams::unit(2.0).unwrap();
    let u = RealField::from_fn(m.grid, |x| profiles::phi(x, &params) + 0.01 * (-(x * x) / 4.0).exp());
    let j = m.decompose(&u, (1.0, 0.0)).unwrap().jacobian_scaled;
    let dev = (j[0][0] - 1.0)
        .abs()
        .max((j[1][1] + 1.0).abs())
        .max(j[0][1].abs())
        .max(j[1][0].abs());
    assert!(dev <= 0.3, "{j:?}");
}

#[test]
fn leaving_the_tube_is_an_error() {
    let m = modulator();
    let params = SolitonParams::unit(2.0).unwrap();
    let u = RealField::from_fn(m.grid, |x| profiles::phi(x, &params) + 0.5 * (-((x - 10.0) / 2.0).powi(2)).exp());
    assert!(matches!(m.decompose(&u, (1.0, 0.0)), Err(Error::TubeExit { .. })));
}

#[test]
fn tracking_a_pure_soliton_keeps_its_parameters() {
    let m = modulator();
    let cfg = EvolverConfig {
        half_length: 40.0,
        n: 1024,
        dt: 0.01,
        p: 2.0,
        nonlinearity: Nonlinearity::Unsigned,
        scheme: Scheme::Gauss,
        t_end: 3.0,
        frame_speed: 1.0,
        record_every: 0.25,
        wrap_tolerance: None,
    };
    let params = SolitonParams::unit(2.0).unwrap();
    let u0 = RealField::from_fn(m.grid, |x| profiles::phi(x, &params));
    let traj = evolver::evolve(&u0, cfg).unwrap();
    let frames: Vec<(f64, RealField)> = traj.frames.into_iter().map(|f| (f.t, f.u)).collect();
    let family = CutoffFamily::new(&m.grid, &WeightConfig::for_p(2.0));
    let states = m.track(&frames, (1.0, 0.0), 1.0, &family).unwrap();
    assert_eq!(states.len(), frames.len());
    for s in &states {
        assert!((s.c - 1.0).abs() <= 1e-9, "t = {}: c = {}", s.t, s.c);
        // The shift picks up the O(dt⁴) phase error of the time stepper.
        assert!(s.d.abs() <= 1e-7, "t = {}: D = {}", s.t, s.d);
        assert!(s.cdot.abs() <= 1e-7 && s.ddot_minus_c.abs() <= 1e-7);
    }
    let again = m.reverify(&frames, &states, gkdv_core::par::Execution::Parallel).unwrap();
    let scale = gkdv_core::grid::norm_l2(&u0.values, m.grid.h);
    assert!(again.iter().all(|r| r[0].abs().max(r[1].abs()) <= 1e-10 * scale));
}

#[test]
fn small_b_is_rejected() {
    let grid = Grid::with_points(40.0, 1024).unwrap();
    let cfg = ModulationConfig { b: 0.5, ..ModulationConfig::default() };
    assert!(Modulator::new(&grid, 2.0, cfg).is_err());
}
