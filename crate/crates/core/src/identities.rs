//! Closed-form identity battery for the profiles and the linearized operator.
//!
//! Each check reports a residual next to the tolerance it is held to, so the
//! same report serves the command-line front-end and the test suites.

use serde::Serialize;

use crate::error::Result;
use crate::grid::{inner, sup_norm, Grid, Spectral};
use crate::linop::{self, LinearizedOperator};
use crate::profiles::{self, SolitonParams};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IdentityCheck {
    pub name: &'static str,
    pub residual: f64,
    pub tolerance: f64,
    /// Computed value, for checks that compare against a number.
    pub value: Option<f64>,
}

impl IdentityCheck {
    pub fn passed(&self) -> bool {
        self.residual.is_finite() && self.residual <= self.tolerance
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IdentityReport {
    pub p: f64,
    pub grid: Grid,
    pub checks: Vec<IdentityCheck>,
}

impl IdentityReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(IdentityCheck::passed)
    }

    pub fn get(&self, name: &str) -> Option<&IdentityCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// The default verification grid, [-40, 40) with h = 0.01.
pub fn default_grid() -> Result<Grid> {
    Grid::symmetric(40.0, 0.01)
}

fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

/// Run every check at c = 1 on `grid`.
pub fn run(p: f64, grid: &Grid) -> Result<IdentityReport> {
    let params = SolitonParams::unit(p)?;
    let prof = profiles::phi_derivatives(grid, &params)?;
    let (phi, dphi, d2phi) = (&prof.phi.values, &prof.dphi.values, &prof.d2phi.values);
    let h = grid.h;
    let mut checks = Vec::new();
    let mut push = |name, residual, tolerance, value| {
        checks.push(IdentityCheck { name, residual, tolerance, value })
    };

    let first_integral = (0..grid.n)
        .map(|i| {
            (dphi[i] * dphi[i] - phi[i] * phi[i] + 2.0 / (p + 1.0) * phi[i].powf(p + 1.0)).abs()
        })
        .fold(0.0, f64::max);
    push("profile_first_integral", first_integral, 1e-10, None);

    let second = (0..grid.n)
        .map(|i| {
            (-phi[i] * d2phi[i] + dphi[i] * dphi[i]
                - (p - 1.0) / (p + 1.0) * phi[i].powf(p + 1.0))
            .abs()
        })
        .fold(0.0, f64::max);
    push("profile_second_form", second, 1e-10, None);

    let evenness = (1..grid.n)
        .map(|i| (phi[i] - profiles::phi(-grid.x(i), &params)).abs())
        .fold(0.0, f64::max);
    push("evenness", evenness, 1e-14, None);

    // q'(1) three ways: closed form, central difference of q, ⟨∂_cφ, φ⟩.
    let qp = profiles::mass_q_prime(&params);
    let dc = 1e-4;
    let q = |c: f64| profiles::mass_q(&SolitonParams { p, c });
    let qp_fd = (q(1.0 + dc) - q(1.0 - dc)) / (2.0 * dc);
    let qp_inner = inner(&prof.dcphi.values, phi, h);
    push("q_prime_difference", (qp_fd - qp_inner).abs() / qp.abs(), 1e-6, Some(qp_fd));

    let spectral = Spectral::new(*grid);
    let lambda_phi = profiles::lambda_p_apply(&prof.phi, p, &spectral);
    let lambda_inner = inner(&lambda_phi.values, phi, h);
    push("lambda_p_pairing", (lambda_inner - qp).abs() / qp.abs(), 1e-8, Some(lambda_inner));

    // ∂_c(c^{1/(p-1)}φ(√c x)) = c^{(2-p)/(p-1)}(Λ_pφ)(√c x), tested at c = 1.21.
    let c = 1.21;
    let pc = SolitonParams { p, c };
    let lhs: Vec<f64> = grid.sample(|x| profiles::dc_phi(x, &pc));
    let rhs: Vec<f64> = grid.sample(|x| {
        let y = c.sqrt() * x;
        let lp = 0.5 * y * profiles::phi_prime(y, &params) + profiles::phi(y, &params) / (p - 1.0);
        c.powf((2.0 - p) / (p - 1.0)) * lp
    });
    push("dc_phi_scaling", sup_diff(&lhs, &rhs), 1e-8, None);

    let kernel = profiles::kernel_functions(grid, &params)?;
    push("biorthogonality", kernel.biorthogonality_residual(), 1e-7, None);

    // The η carry the factor 1/q'(c), which grows without bound as p → 5; the
    // residuals are measured against max(1, ‖input‖∞) so they stay comparable.
    let op = LinearizedOperator::new(grid, &params)?;
    let scaled = |r: f64, input: &[f64]| r / sup_norm(input).max(1.0);
    let (xi1, xi2) = (&kernel.xi1.values, &kernel.xi2.values);
    let (eta1, eta2) = (&kernel.eta1.values, &kernel.eta2.values);
    push("L_xi1", scaled(sup_norm(&op.apply_l(xi1)), xi1), 1e-7, None);
    let minus_xi1: Vec<f64> = xi1.iter().map(|v| -v).collect();
    push("L_xi2_plus_xi1", scaled(sup_diff(&op.apply_l(xi2), &minus_xi1), xi2), 1e-7, None);
    let minus_eta2: Vec<f64> = eta2.iter().map(|v| -v).collect();
    let r = sup_diff(&op.apply_l_adjoint(eta1), &minus_eta2);
    push("Lstar_eta1_plus_eta2", scaled(r, eta1), 1e-7, None);
    push("Lstar_eta2", scaled(sup_norm(&op.apply_l_adjoint(eta2)), eta2), 1e-7, None);

    let lplus_dphi = op.apply_lplus(dphi);
    push("Lplus_translation_mode", sup_norm(&lplus_dphi) / sup_norm(dphi), 1e-8, None);

    let virial_phi = linop::virial_mm08_functional_real(phi, grid, p)?;
    push("virial_on_phi", virial_phi.abs(), 1e-10, Some(virial_phi));

    Ok(IdentityReport {
        p,
        grid: *grid,
        checks,
    })
}
