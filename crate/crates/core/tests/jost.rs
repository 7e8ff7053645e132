use gkdv_core::jost::{self, jost_grid, JostBundle};
use gkdv_core::linop::apply_l_local;
use gkdv_core::par::Execution;
use gkdv_core::profiles::SolitonParams;
use num_complex::Complex64 as C;

fn setup(p: f64) -> (gkdv_core::Grid, SolitonParams) {
    (jost_grid(p, 0.01).unwrap(), SolitonParams::unit(p).unwrap())
}

#[test]
fn m1_settles_to_one_on_the_right() {
    let (grid, params) = setup(2.0);
    let m1 = jost::solve_m1(C::new(0.0, 0.0), &grid, &params).unwrap();
    let worst = (0..grid.n)
        .filter(|&i| grid.x(i) >= 35.0)
        .map(|i| (m1.at(i).0 - 1.0).norm())
        .fold(0.0, f64::max);
    assert!(worst < 1e-10, "{worst}");
}

#[test]
fn m3_limit_is_the_evans_function_at_minus_lambda() {
    let (grid, params) = setup(2.0);
    for l in [C::new(0.0, 0.0), C::new(0.0, 0.7), C::new(0.1, -2.0)] {
        let m3 = jost::solve_m3(l, &grid, &params).unwrap();
        let d = jost::evans_on(-l, &grid, &params).unwrap();
        assert!((m3.m.last().unwrap() - d).norm() < 1e-8, "lambda = {l}");
    }
}

#[test]
fn evans_is_conjugate_symmetric() {
    let (grid, params) = setup(3.0);
    for l in [C::new(0.0, 0.3), C::new(0.2, 1.5), C::new(-0.1, 7.0)] {
        let a = jost::evans_on(l, &grid, &params).unwrap();
        let b = jost::evans_on(l.conj(), &grid, &params).unwrap();
        assert!((a.conj() - b).norm() < 1e-12, "lambda = {l}");
    }
}

#[test]
fn evans_scan_is_identical_sequential_and_parallel() {
    let (grid, params) = setup(2.0);
    let ls: Vec<C> = (1..=8).map(|k| C::new(0.0, 0.5 * k as f64)).collect();
    let a = jost::evans_scan(&ls, &params, &grid, Execution::Sequential);
    let b = jost::evans_scan(&ls, &params, &grid, Execution::Parallel);
    for (x, y) in a.into_iter().zip(b) {
        assert_eq!(x.unwrap(), y.unwrap());
    }
}

#[test]
fn m2tilde_is_normalised_and_bounded() {
    let (grid, params) = setup(2.0);
    let m = jost::solve_m2tilde(C::new(0.1, 0.0), &grid, &params, None).unwrap();
    let i = grid.index_of(-35.0);
    assert!((m.at(i).0 - 1.0).norm() < 1e-8);

    let x0 = jost::m2tilde_threshold(C::new(0.0, 0.0), &grid, &params).unwrap();
    let m0 = jost::solve_m2tilde(C::new(0.0, 0.0), &grid, &params, None).unwrap();
    let sup = (m0.lo..=grid.index_of(x0))
        .map(|i| m0.at(i).0.norm())
        .fold(0.0, f64::max);
    assert!(sup <= 2.0, "{sup}");
}

#[test]
fn f2tilde_at_zero_is_in_the_kernel() {
    let (grid, params) = setup(2.0);
    let m0 = jost::solve_m2tilde(C::new(0.0, 0.0), &grid, &params, None).unwrap();
    // f̃₂(·, 0) = m̃₂ lives on x ≤ 0; the local stencil only reads nearby nodes.
    let mut f = vec![C::new(0.0, 0.0); grid.n];
    for i in m0.lo..=m0.hi {
        f[i] = m0.at(i).0;
    }
    let lf = apply_l_local(&f, &grid, &params, 2);
    let worst = (grid.index_of(-20.0)..grid.index_of(-1.0))
        .map(|i| lf[i].norm())
        .fold(0.0, f64::max);
    assert!(worst < 1e-6, "{worst}");
}

#[test]
fn connection_coefficients_near_zero() {
    let (grid, params) = setup(2.0);
    let l = C::new(0.0, 0.2);
    let b = JostBundle::new(l, &grid, &params).unwrap();
    let d_minus = jost::evans_on(-l, &grid, &params).unwrap();
    assert!((b.connection.c33 - d_minus).norm() < 1e-6);
    assert!(b.f2_f3_coefficient.norm() < 1e-8);
    let sup = b.m2.m.iter().map(|z| z.norm()).fold(0.0, f64::max);
    assert!(sup.is_finite() && sup < 1e3, "{sup}");

    let c23: Vec<f64> = [0.2, 0.1, 0.05]
        .iter()
        .map(|&t| {
            JostBundle::new(C::new(0.0, t), &grid, &params)
                .unwrap()
                .connection
                .c23
                .norm()
        })
        .collect();
    assert!(c23[2] < c23[1] && c23[1] < c23[0], "{c23:?}");
}

#[test]
fn wronskian_identity_near_the_double_zero() {
    let (grid, params) = setup(2.0);
    for (t, tol) in [(0.3, 1e-4), (0.05, 1e-3)] {
        let b = JostBundle::new(C::new(0.0, t), &grid, &params).unwrap();
        let chk = jost::wronskian_identity_check(&b, &[-5.0, 5.0]);
        assert!(chk.residual <= tol, "tau = {t}: {}", chk.residual);
        assert!(chk.x_constancy <= 1e-6, "tau = {t}: {}", chk.x_constancy);
    }
}

#[test]
fn jost_solutions_solve_the_ode() {
    let (grid, params) = setup(2.0);
    let l = C::new(0.0, 0.8);
    let b = JostBundle::new(l, &grid, &params).unwrap();
    for sol in [&b.m1, &b.m3, &b.m2] {
        let mut f = vec![C::new(0.0, 0.0); grid.n];
        for i in sol.lo..=sol.hi {
            f[i] = sol.f_at(&grid, i)[0];
        }
        let lf = apply_l_local(&f, &grid, &params, 2);
        let window = grid.index_of(-10.0)..grid.index_of(10.0);
        let scale = window.clone().map(|i| f[i].norm()).fold(0.0, f64::max);
        let worst = window.map(|i| (lf[i] - l * f[i]).norm()).fold(0.0, f64::max);
        assert!(worst <= 1e-5 * scale, "{worst} vs {scale}");
    }
}

#[test]
fn invalid_auxiliary_index_is_rejected() {
    let (grid, params) = setup(2.0);
    assert!(jost::solve_F(4, C::new(0.0, 1.0), &grid, &params).is_err());
}
