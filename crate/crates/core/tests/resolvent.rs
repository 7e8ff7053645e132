use gkdv_core::par::Execution;
use gkdv_core::profiles::SolitonParams;
use gkdv_core::resolvent::{self, apply_resolvent, ProjectionPair, Resolvent};
use gkdv_core::{Error, Grid};
use num_complex::Complex64 as C;
use proptest::prelude::*;
use std::sync::OnceLock;

fn shared() -> &'static (Grid, SolitonParams, Resolvent) {
    static CELL: OnceLock<(Grid, SolitonParams, Resolvent)> = OnceLock::new();
    CELL.get_or_init(|| {
        let params = SolitonParams::unit(2.0).unwrap();
        let grid = resolvent::resolvent_grid(2.0).unwrap();
        let res = Resolvent::new(&grid, &params).unwrap();
        (grid, params, res)
    })
}

fn bump(grid: &Grid, x0: f64, w: f64) -> Vec<C> {
    grid.sample(|x| C::new((-((x - x0) / w).powi(2)).exp(), 0.0))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]
    #[test]
    fn projections_are_complementary(x0 in -4.0f64..4.0, w in 0.3f64..3.0, a in -2.0f64..2.0) {
        let (grid, _, res) = shared();
        let proj: &ProjectionPair = res.cache.projection();
        let g: Vec<C> = bump(grid, x0, w).into_iter().map(|z| z * a).collect();
        let pg = proj.apply_p_c(&g);
        let ppg = proj.apply_p_c(&pg);
        let qg = proj.apply_q_c(&g);
        let scale = g.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1e-300);
        let idem = pg.iter().zip(&ppg).map(|(u, v)| (u - v).norm()).fold(0.0, f64::max);
        prop_assert!(idem <= 1e-7 * scale, "{idem}");
        let pq = proj.apply_p_c(&qg).iter().map(|z| z.norm()).fold(0.0, f64::max);
        prop_assert!(pq <= 1e-8 * scale, "{pq}");
    }
}

#[test]
fn zero_maps_to_zero() {
    let (grid, _, res) = shared();
    let zero = vec![C::new(0.0, 0.0); grid.n];
    for t in [0.005, 0.5] {
        let (u, _) = res.apply(C::new(0.0, t), &zero).unwrap();
        assert!(u.iter().all(|z| z.norm() == 0.0));
    }
}

#[test]
fn recovers_a_crafted_solution_up_to_the_kernel() {
    use gkdv_core::linop::LinearizedOperator;
    let (grid, params, res) = shared();
    let op = LinearizedOperator::new(grid, params).unwrap();
    let lambda = C::new(0.0, 0.4);
    let w = grid.sample(|x| C::new((-(x * x)).exp() * (1.0 + 0.3 * x), 0.0));
    let g: Vec<C> = op.apply_l_c(&w).iter().zip(&w).map(|(a, b)| a - lambda * b).collect();
    let (u, _) = res.apply(lambda, &g).unwrap();
    let proj = res.cache.projection();
    let (qu, qw) = (proj.apply_q_c(&u), proj.apply_q_c(&w));
    let err = qu.iter().zip(&qw).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    assert!(err <= 1e-4, "{err}");
}

#[test]
fn conjugate_symmetry_for_real_data() {
    let (grid, _, res) = shared();
    let g = bump(grid, 0.5, 1.0);
    for t in [0.01, 0.3, 2.0] {
        let (a, _) = res.apply_q(C::new(0.0, t), &g).unwrap();
        let (b, _) = res.apply_q(C::new(0.0, -t), &g).unwrap();
        let err = a.iter().zip(&b).map(|(u, v)| (u.conj() - v).norm()).fold(0.0, f64::max);
        let scale = a.iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(err <= 1e-8 * scale, "tau = {t}: {err}");
    }
}

#[test]
fn regularized_path_stays_bounded_towards_zero() {
    let (grid, _, res) = shared();
    let kappa = resolvent::default_kappa(2.0);
    let qg = res.cache.projection().apply_q_c(&bump(grid, -0.4, 0.8));
    let n3 = resolvent::sech_weighted_norm(&res.cache.apply(C::new(0.0, 1e-3), &qg).unwrap(), grid, kappa);
    let n4 = resolvent::sech_weighted_norm(&res.cache.apply(C::new(0.0, 1e-4), &qg).unwrap(), grid, kappa);
    assert!(n4 <= 2.0 * n3 && n3 <= 2.0 * n4, "{n3} vs {n4}");
    assert!(res.cache.annihilation_residual(&qg, kappa) <= 1e-5);
}

#[test]
fn regularized_path_requires_projected_input() {
    let (grid, _, res) = shared();
    let err = res.cache.apply(C::new(0.0, 0.01), &bump(grid, 0.0, 1.0)).unwrap_err();
    assert!(matches!(err, Error::NotProjected { .. }));
}

#[test]
fn direct_path_refuses_lambda_zero() {
    let (grid, params, _) = shared();
    let b = gkdv_core::jost::JostBundle::new(C::new(0.0, 0.0), grid, params).unwrap();
    let err = apply_resolvent(&b, &bump(grid, 0.0, 1.0)).unwrap_err();
    assert!(matches!(err, Error::NearSingular { .. }));
}

#[test]
fn kernel_directions_are_annihilated() {
    let (grid, _, res) = shared();
    let proj = res.cache.projection();
    let xi1: Vec<C> = proj.kernel.xi1.values.iter().map(|&v| C::new(v, 0.0)).collect();
    let q = proj.apply_q_c(&xi1);
    let ratio = gkdv_core::grid::norm_l2_c(&q, grid.h) / gkdv_core::grid::norm_l2_c(&xi1, grid.h);
    assert!(ratio < 1e-7, "{ratio}");
}

#[test]
fn smoothing_scan_is_stable_under_refinement_and_kappa() {
    let (grid, _, res) = shared();
    let probes = resolvent::default_probes(grid);
    let coarse = resolvent::log_grid(0.01, 30.0, 9);
    let fine = resolvent::log_grid(0.01, 30.0, 17);
    let k = resolvent::default_kappa(2.0);
    let a = resolvent::smoothing_norm_scan(res, &coarse, &probes, k, Execution::Parallel).unwrap();
    let b = resolvent::smoothing_norm_scan(res, &fine, &probes, k, Execution::Parallel).unwrap();
    assert!(((a.sup() - b.sup()) / b.sup()).abs() <= 1e-2, "{} vs {}", a.sup(), b.sup());
    let half = resolvent::smoothing_norm_scan(res, &coarse, &probes, k / 2.0, Execution::Sequential).unwrap();
    assert!(half.is_finite() && half.sup() >= a.sup());
}
