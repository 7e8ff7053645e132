//! L₊ = -∂² + c - pφ_c^{p-1}, 𝓛 = ∂L₊ and 𝓛* = -L₊∂ on a grid, and the
//! weighted virial functional that rules out embedded eigenvalues.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{Grid, RealField, Spectral};
use crate::profiles::{self, SolitonParams};

#[derive(Clone, Debug)]
pub struct LinearizedOperator {
    pub params: SolitonParams,
    pub grid: Grid,
    pub potential: RealField,
    spectral: Spectral,
}

impl LinearizedOperator {
    pub fn new(grid: &Grid, params: &SolitonParams) -> Result<Self> {
        params.validate()?;
        profiles::check_tails(grid, params)?;
        Ok(Self {
            params: *params,
            grid: *grid,
            potential: RealField::from_fn(*grid, |x| profiles::potential(x, params)),
            spectral: Spectral::new(*grid),
        })
    }

    pub fn spectral(&self) -> &Spectral {
        &self.spectral
    }

    pub fn apply_lplus(&self, u: &[f64]) -> Vec<f64> {
        let d2 = self.spectral.second_derivative_line(u);
        let c = self.params.c;
        (0..u.len())
            .map(|i| -d2[i] + (c - self.potential.values[i]) * u[i])
            .collect()
    }

    pub fn apply_l(&self, u: &[f64]) -> Vec<f64> {
        self.spectral.derivative_line(&self.apply_lplus(u))
    }

    pub fn apply_l_adjoint(&self, u: &[f64]) -> Vec<f64> {
        let du = self.spectral.derivative_line(u);
        self.apply_lplus(&du).into_iter().map(|v| -v).collect()
    }

    pub fn apply_lplus_c(&self, u: &[Complex64]) -> Vec<Complex64> {
        let d2 = self.spectral.second_derivative_line_c(u);
        let c = self.params.c;
        (0..u.len())
            .map(|i| -d2[i] + u[i] * (c - self.potential.values[i]))
            .collect()
    }

    pub fn apply_l_c(&self, u: &[Complex64]) -> Vec<Complex64> {
        self.spectral.derivative_line_c(&self.apply_lplus_c(u))
    }

    pub fn apply_l_adjoint_c(&self, u: &[Complex64]) -> Vec<Complex64> {
        let du = self.spectral.derivative_line_c(u);
        self.apply_lplus_c(&du).into_iter().map(|v| -v).collect()
    }
}

/// 𝓛u = ∂(-u'' + c u - V u) by sixth-order central differences with spacing
/// `stride`·h (zero where the stencil leaves the grid). Suited to outputs that do
/// not decay, such as R(iτ)g; a stride above 1 keeps grid-scale quadrature noise
/// from being amplified by the third derivative.
pub fn apply_l_local(
    u: &[Complex64],
    grid: &Grid,
    params: &SolitonParams,
    stride: usize,
) -> Vec<Complex64> {
    let n = u.len();
    let s = stride.max(1);
    let h = grid.h * s as f64;
    let zero = Complex64::new(0.0, 0.0);
    let d2 = [2.0, -27.0, 270.0, -490.0, 270.0, -27.0, 2.0];
    let d1 = [-1.0, 9.0, -45.0, 0.0, 45.0, -9.0, 1.0];
    let mut w = vec![zero; n];
    for i in 3 * s..n.saturating_sub(3 * s) {
        let lap: Complex64 =
            (0..7).map(|k| u[i + k * s - 3 * s] * d2[k]).sum::<Complex64>() / (180.0 * h * h);
        let v = profiles::potential(grid.x(i), params);
        w[i] = -lap + u[i] * (params.c - v);
    }
    let mut out = vec![zero; n];
    for i in 6 * s..n.saturating_sub(6 * s) {
        out[i] = (0..7).map(|k| w[i + k * s - 3 * s] * d1[k]).sum::<Complex64>() / (60.0 * h);
    }
    out
}

/// μ = -φ'/φ in closed form, for c = 1.
pub fn virial_weight(x: f64, p: f64) -> f64 {
    0.5 * (p - 1.0) * (0.5 * (p - 1.0) * x).tanh()
}

/// (3(p-1)/(2(p+1))) ∫ |(ψ/φ)'|² φ^{p+1} over the sub-grid where φ > 1e-10 (c = 1).
pub fn virial_mm08_functional(psi: &[Complex64], grid: &Grid, p: f64) -> Result<f64> {
    let params = SolitonParams::unit(p)?;
    if psi.len() != grid.n {
        return Err(Error::InvalidParameter(
            "psi does not match the grid".into(),
        ));
    }
    let spectral = Spectral::new(*grid);
    let dpsi = spectral.derivative_line_c(psi);
    let mut acc = 0.0;
    for i in 0..grid.n {
        let x = grid.x(i);
        let ph = profiles::phi(x, &params);
        if ph <= 1e-10 {
            continue;
        }
        let ratio = psi[i].norm() / ph;
        if ratio > 1e8 {
            return Err(Error::RatioOverflow { ratio, x });
        }
        let dph = profiles::phi_prime(x, &params);
        // |(ψ/φ)'|² φ^{p+1} = |ψ'φ - ψφ'|² φ^{p-3}
        let w = dpsi[i] * ph - psi[i] * dph;
        acc += w.norm_sqr() * ph.powf(p - 3.0);
    }
    Ok(3.0 * (p - 1.0) / (2.0 * (p + 1.0)) * acc * grid.h)
}

pub fn virial_mm08_functional_real(psi: &[f64], grid: &Grid, p: f64) -> Result<f64> {
    let c: Vec<Complex64> = psi.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    virial_mm08_functional(&c, grid, p)
}
