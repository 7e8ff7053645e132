use approx::assert_relative_eq;
use gkdv_core::profiles::{self, Nonlinearity, SolitonParams};
use gkdv_core::{Error, Grid};
use proptest::prelude::*;

proptest! {
    #[test]
    fn first_integral_holds_pointwise(p in 1.1f64..4.9, c in 0.3f64..3.0, x in -20.0f64..20.0) {
        let params = SolitonParams::new(p, c).unwrap();
        let (u, du) = (profiles::phi(x, &params), profiles::phi_prime(x, &params));
        // (φ')² = cφ² - 2φ^{p+1}/(p+1)
        let r = du * du - c * u * u + 2.0 / (p + 1.0) * u.powf(p + 1.0);
        prop_assert!(r.abs() <= 1e-12 * (c * u * u).max(1.0), "{r}");
    }

    #[test]
    fn profile_is_even_and_scales(p in 1.1f64..4.9, c in 0.3f64..3.0, x in 0.0f64..15.0) {
        let params = SolitonParams::new(p, c).unwrap();
        let unit = SolitonParams::unit(p).unwrap();
        prop_assert_eq!(profiles::phi(x, &params), profiles::phi(-x, &params));
        let scaled = c.powf(1.0 / (p - 1.0)) * profiles::phi(c.sqrt() * x, &unit);
        prop_assert!((profiles::phi(x, &params) - scaled).abs() <= 1e-12 * scaled.max(1.0));
    }

    #[test]
    fn profile_equation_holds(p in 1.5f64..4.5, x in -10.0f64..10.0) {
        let params = SolitonParams::unit(p).unwrap();
        let u = profiles::phi(x, &params);
        // φ'' = φ - φ^p
        let r = profiles::phi_second(x, &params) - u + Nonlinearity::Signed.f(u, p);
        prop_assert!(r.abs() < 1e-12, "{r}");
    }
}

#[test]
fn nonlinearities_agree_on_positive_values() {
    for p in [1.5, 2.0, 3.0] {
        for u in [0.1, 1.0, 2.5] {
            let (s, un) = (Nonlinearity::Signed.f(u, p), Nonlinearity::Unsigned.f(u, p));
            assert_relative_eq!(s, un, max_relative = 1e-15);
            assert_eq!(Nonlinearity::Signed.f(-u, p), -s);
            assert_eq!(Nonlinearity::Unsigned.f(-u, p), un);
        }
        assert_eq!(Nonlinearity::Signed.f(0.0, p), 0.0);
    }
}

#[test]
fn mass_derivative_matches_difference_quotient() {
    for p in [1.5, 2.0, 3.0, 4.0] {
        let q = |c: f64| profiles::mass_q(&SolitonParams::new(p, c).unwrap());
        let fd = (q(1.0 + 1e-4) - q(1.0 - 1e-4)) / 2e-4;
        let exact = profiles::mass_q_prime(&SolitonParams::unit(p).unwrap());
        assert!((fd - exact).abs() < 1e-7 * exact.abs(), "p={p}: {fd} vs {exact}");
    }
}

#[test]
fn kernel_functions_are_biorthogonal() {
    let grid = Grid::symmetric(40.0, 0.01).unwrap();
    for p in [1.5, 2.0, 3.0, 4.0] {
        let k = profiles::kernel_functions(&grid, &SolitonParams::unit(p).unwrap()).unwrap();
        assert!(k.biorthogonality_residual() < 1e-7, "p={p}");
    }
}

#[test]
fn out_of_range_exponent_is_rejected() {
    for p in [1.0, 5.0, 6.0, f64::NAN] {
        assert!(matches!(SolitonParams::unit(p), Err(Error::InvalidParameter(_))));
    }
    assert!(SolitonParams::new(2.0, -1.0).is_err());
}

#[test]
fn short_grid_is_rejected() {
    let grid = Grid::symmetric(5.0, 0.01).unwrap();
    let err = profiles::phi_derivatives(&grid, &SolitonParams::unit(2.0).unwrap()).unwrap_err();
    assert!(err.is_config());
}
