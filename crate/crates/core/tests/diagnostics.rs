use gkdv_core::diagnostics::{self, CutoffFamily, WeightConfig};
use gkdv_core::par::Execution;
use gkdv_core::{Grid, Spectral};
use proptest::prelude::*;

proptest! {
    #[test]
    fn thetas_partition_unity(x in -50.0f64..50.0) {
        prop_assert!((diagnostics::theta1(x) + diagnostics::theta2(x) - 1.0).abs() <= 1e-15);
        let c = diagnostics::chi(x);
        prop_assert!((0.0..=1.0).contains(&c));
        prop_assert!(x * diagnostics::chi_prime(x) <= 0.0);
        if x.abs() <= 1.0 { prop_assert_eq!(c, 1.0); }
        if x.abs() >= 2.0 { prop_assert_eq!(c, 0.0); }
    }

    #[test]
    fn zeta_derivative_matches_difference_quotient(x in -30.0f64..30.0, c in 2.0f64..50.0) {
        let h = 1e-6;
        let fd = (diagnostics::zeta(x + h, c) - diagnostics::zeta(x - h, c)) / (2.0 * h);
        prop_assert!((fd - diagnostics::zeta_prime(x, c)).abs() <= 1e-6);
    }

    #[test]
    fn sech_norm_decreases_with_kappa(k in 0.05f64..1.0, dk in 0.01f64..1.0) {
        let g = Grid::with_points(40.0, 512).unwrap();
        let v = g.sample(|x| (x / 5.0).cos() * (-(x * x) / 200.0).exp());
        prop_assert!(diagnostics::sech_norm(&v, &g, k + dk) <= diagnostics::sech_norm(&v, &g, k));
    }
}

#[test]
fn phi_c_has_derivative_zeta_squared() {
    let g = Grid::with_points(100.0, 4096).unwrap();
    let c = 20.0;
    let phi = CutoffFamily::phi_c(&g, c);
    let mid = g.index_of(0.0);
    assert_eq!(phi[mid], 0.0);
    let mut err: f64 = 0.0;
    for i in 1..g.n - 1 {
        let d = (phi[i + 1] - phi[i - 1]) / (2.0 * g.h);
        err = err.max((d - diagnostics::zeta(g.x(i), c).powi(2)).abs());
        if i != mid {
            assert_eq!(phi[2 * mid - i.min(2 * mid)], -phi[i.min(2 * mid)]);
        }
    }
    assert!(err <= 1e-3, "{err}");
}

#[test]
fn zero_field_has_zero_norms() {
    let g = Grid::with_points(100.0, 2048).unwrap();
    let family = CutoffFamily::new(&g, &WeightConfig::for_p(2.0));
    let (a, b) = diagnostics::sigma_norms(&vec![0.0; g.n], &family, &Spectral::new(g));
    assert_eq!((a, b), (0.0, 0.0));
    let vals = diagnostics::virial_functionals(&vec![0.0; g.n], &family);
    assert_eq!(vals.i1, 0.0);
    assert!(vals.bound_holds);
}

#[test]
fn sigma2_ignores_the_left() {
    let g = Grid::with_points(200.0, 4096).unwrap();
    let family = CutoffFamily::new(&g, &WeightConfig::for_p(2.0));
    // ϑ₂ vanishes on x ≤ A₁.
    let v = g.sample(|x| (-((x + 20.0) / 2.0).powi(2)).exp());
    let (s1, s2) = diagnostics::sigma_norms(&v, &family, &Spectral::new(g));
    assert!(s1 > 0.0);
    assert!(s2 <= 1e-12 * s1, "{s2}");
}

#[test]
fn virial_bound_holds_for_random_like_fields() {
    let g = Grid::with_points(200.0, 4096).unwrap();
    let family = CutoffFamily::new(&g, &WeightConfig::for_p(3.0));
    for k in 1..6 {
        let v = g.sample(|x| ((k as f64) * x / 7.0).sin() * (-(x / 60.0).powi(2)).exp());
        assert!(diagnostics::virial_functionals(&v, &family).bound_holds);
    }
}

#[test]
fn smoothing_integral_of_zero_is_zero_and_execution_invariant() {
    let g = Grid::with_points(50.0, 1024).unwrap();
    let zero: Vec<(f64, Vec<f64>)> = (0..5).map(|k| (k as f64, vec![0.0; g.n])).collect();
    assert_eq!(diagnostics::smoothing_integral(&zero, &g, 0.125, Execution::Parallel).value, 0.0);

    let frames: Vec<(f64, Vec<f64>)> = (0..12)
        .map(|k| {
            let t = 0.5 * k as f64;
            (t, g.sample(|x| (-((x - t) / 3.0).powi(2)).exp()))
        })
        .collect();
    let a = diagnostics::smoothing_integral(&frames, &g, 0.125, Execution::Sequential);
    let b = diagnostics::smoothing_integral(&frames, &g, 0.125, Execution::Parallel);
    assert_eq!(a, b);
    assert!(a.value > 0.0);
    assert!((a.value_until(5.5) - a.value).abs() <= 1e-15 * a.value);
}

#[test]
fn working_weights_are_admissible() {
    for p in [1.5, 2.0, 3.0, 4.0] {
        WeightConfig::for_p(p).validate(p).unwrap();
    }
    let mut bad = WeightConfig::for_p(2.0);
    bad.big_a = 100.0;
    assert!(bad.validate(2.0).is_err());
}
