use gkdv_core::cubic_spectrum::{self, solve_cubic, STRIP};
use gkdv_core::Error;
use num_complex::Complex64 as C;
use proptest::prelude::*;

fn vandermonde_det(mu: [C; 3]) -> C {
    let row = |m: C| [C::new(1.0, 0.0), m, m * m];
    let [a, b, c] = [row(mu[0]), row(mu[1]), row(mu[2])];
    a[0] * (b[1] * c[2] - b[2] * c[1]) - a[1] * (b[0] * c[2] - b[2] * c[0])
        + a[2] * (b[0] * c[1] - b[1] * c[0])
}

proptest! {
    #[test]
    fn roots_solve_the_cubic(re in -STRIP..STRIP, im in -20.0f64..20.0) {
        let l = C::new(re, im);
        let sp = solve_cubic(l).unwrap();
        for m in sp.mu {
            prop_assert!((m * m * m - m + l).norm() <= 1e-12 * (1.0 + l.norm()));
        }
        prop_assert!((sp.mu[0] + sp.mu[1] + sp.mu[2]).norm() <= 1e-12 * (1.0 + l.norm()));
        prop_assert!((sp.a[0] + sp.a[1] + sp.a[2]).norm() <= 1e-13);
        prop_assert!(cubic_spectrum::ordering_holds(&sp));
    }

    #[test]
    fn w0_is_the_vandermonde_determinant(re in -STRIP..STRIP, im in -10.0f64..10.0) {
        let sp = solve_cubic(C::new(re, im)).unwrap();
        let det = vandermonde_det(sp.mu);
        prop_assert!((sp.w0 - det).norm() <= 1e-12 * det.norm().max(1.0));
    }

    #[test]
    fn conjugate_symmetry(re in -STRIP..STRIP, im in -10.0f64..10.0) {
        let a = solve_cubic(C::new(re, im)).unwrap();
        let b = solve_cubic(C::new(re, -im)).unwrap();
        prop_assert!((a.w0.conj() - b.w0).norm() <= 1e-12 * a.w0.norm().max(1.0));
    }
}

#[test]
fn mu2_is_lambda_to_third_order() {
    for t in [1e-3, 1e-2] {
        let l = C::new(0.0, t);
        let m2 = cubic_spectrum::mu2(l).unwrap();
        assert!((m2 - l).norm() <= 2.0 * t * t * t, "{m2}");
    }
}

#[test]
fn w0_at_two_i() {
    let sp = solve_cubic(C::new(0.0, 2.0)).unwrap();
    assert!(sp.w0.norm() > 0.0);
    assert!((sp.w0 - vandermonde_det(sp.mu)).norm() < 1e-12);
}

#[test]
fn branch_points_are_reported() {
    let bp = 2.0 / (3.0 * 3f64.sqrt());
    let err = solve_cubic(C::new(bp, 0.0)).unwrap_err();
    assert!(matches!(err, Error::DegenerateRoots { .. } | Error::BranchAmbiguity { .. }), "{err:?}");
}

#[test]
fn partial_fractions_solve_the_forced_equation() {
    // y = Σ aⱼ ∫ e^{μⱼ(x-y)} F(y) dy (each integral towards its decaying side)
    // solves y''' - y' + λy = F; compared with a Fourier solve on a wide cell.
    // Re λ ≠ 0 keeps every root off the imaginary axis.
    use gkdv_core::{Grid, Spectral};
    let grid = Grid::with_points(150.0, 8192).unwrap();
    let spectral = Spectral::new(grid);
    let f = grid.sample(|x| (-(x / 0.7).powi(2)).exp());
    for l in [C::new(0.3, 0.7), C::new(-0.3, -1.3)] {
        let sp = solve_cubic(l).unwrap();
        let y: Vec<C> = (0..grid.n)
            .map(|i| {
                let x = grid.x(i);
                (0..3)
                    .map(|j| {
                        let right_side = sp.mu[j].re > 0.0;
                        let s: C = (0..grid.n)
                            .filter(|&k| if right_side { grid.x(k) >= x } else { grid.x(k) <= x })
                            .map(|k| {
                                let w = if k == i { 0.5 } else { 1.0 };
                                w * f[k] * (sp.mu[j] * (x - grid.x(k))).exp()
                            })
                            .sum();
                        let sign = if right_side { -1.0 } else { 1.0 };
                        sign * sp.a[j] * s * grid.h
                    })
                    .sum()
            })
            .collect();
        let mut fhat: Vec<C> = f.iter().map(|&v| C::new(v, 0.0)).collect();
        spectral.fft(&mut fhat);
        for (z, &k) in fhat.iter_mut().zip(spectral.wavenumbers()) {
            let ik = C::new(0.0, k);
            *z /= ik * ik * ik - ik + l;
        }
        spectral.ifft(&mut fhat);
        let err = y
            .iter()
            .zip(&fhat)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        let scale = fhat.iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(err < 1e-3 * scale, "lambda = {l}: {err} of {scale}");
    }
}
