//! Soliton profiles, their parameter derivatives and the generalized kernel of
//! the linearization.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{cumulative, inner, integrate, Grid, RealField, Spectral};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolitonParams {
    pub p: f64,
    pub c: f64,
}

impl SolitonParams {
    pub fn new(p: f64, c: f64) -> Result<Self> {
        let s = Self { p, c };
        s.validate()?;
        Ok(s)
    }

    pub fn unit(p: f64) -> Result<Self> {
        Self::new(p, 1.0)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p > 1.0 && self.p < 5.0) {
            return Err(Error::InvalidParameter(format!(
                "p = {} outside (1, 5)",
                self.p
            )));
        }
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "c = {} must be positive",
                self.c
            )));
        }
        Ok(())
    }

    /// Amplitude c^{1/(p-1)} ((p+1)/2)^{1/(p-1)}.
    pub fn amplitude(&self) -> f64 {
        (self.c * (self.p + 1.0) / 2.0).powf(1.0 / (self.p - 1.0))
    }

    fn rate(&self) -> f64 {
        0.5 * (self.p - 1.0) * self.c.sqrt()
    }
}

/// The two pure-power nonlinearities.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Nonlinearity {
    /// f(u) = |u|^{p-1} u
    #[default]
    Signed,
    /// f(u) = |u|^p
    Unsigned,
}

impl Nonlinearity {
    #[inline]
    fn abs_pow(u: f64, q: f64) -> f64 {
        (q * u.abs().max(1e-300).ln()).exp()
    }

    #[inline]
    pub fn f(self, u: f64, p: f64) -> f64 {
        match self {
            Nonlinearity::Signed => Self::abs_pow(u, p - 1.0) * u,
            Nonlinearity::Unsigned => Self::abs_pow(u, p),
        }
    }

    /// F with F' = f and F(0) = 0.
    #[inline]
    pub fn primitive(self, u: f64, p: f64) -> f64 {
        match self {
            Nonlinearity::Signed => Self::abs_pow(u, p + 1.0) / (p + 1.0),
            Nonlinearity::Unsigned => Self::abs_pow(u, p) * u / (p + 1.0),
        }
    }
}

/// sech(z) without overflow.
#[inline]
pub(crate) fn sech(z: f64) -> f64 {
    let e = (-z.abs()).exp();
    2.0 * e / (1.0 + e * e)
}

pub fn phi(x: f64, params: &SolitonParams) -> f64 {
    let s = sech(params.rate() * x);
    params.amplitude() * (2.0 / (params.p - 1.0) * s.max(1e-300).ln()).exp()
}

pub fn phi_prime(x: f64, params: &SolitonParams) -> f64 {
    -params.c.sqrt() * (params.rate() * x).tanh() * phi(x, params)
}

pub fn phi_second(x: f64, params: &SolitonParams) -> f64 {
    let s = sech(params.rate() * x);
    let SolitonParams { p, c } = *params;
    phi(x, params) * (c - c * (p + 1.0) / 2.0 * s * s)
}

pub fn dc_phi(x: f64, params: &SolitonParams) -> f64 {
    let SolitonParams { p, c } = *params;
    phi(x, params) / (c * (p - 1.0)) + x * phi_prime(x, params) / (2.0 * c)
}

/// V = p φ_c^{p-1}, the potential of the linearization, and its derivative.
pub fn potential(x: f64, params: &SolitonParams) -> f64 {
    let s = sech(params.rate() * x);
    params.p * params.c * (params.p + 1.0) / 2.0 * s * s
}

pub fn potential_prime(x: f64, params: &SolitonParams) -> f64 {
    let z = params.rate() * x;
    let s = sech(z);
    -2.0 * params.rate() * z.tanh() * params.p * params.c * (params.p + 1.0) / 2.0 * s * s
}

/// β(p) = (2(p+1))^{1/(p-1)}, the e^{-|x|} coefficient of φ.
pub fn beta(p: f64) -> f64 {
    (2.0 * (p + 1.0)).powf(1.0 / (p - 1.0))
}

#[derive(Clone, Debug)]
pub struct ProfileSet {
    pub phi: RealField,
    pub dphi: RealField,
    pub d2phi: RealField,
    pub dcphi: RealField,
}

pub fn check_tails(grid: &Grid, params: &SolitonParams) -> Result<()> {
    let peak = phi(0.0, params);
    let tail = phi(grid.xmin, params).max(phi(grid.xmax(), params));
    if tail > 1e-12 * peak {
        return Err(Error::GridTooSmall(format!(
            "profile tail {tail:.3e} at the boundary exceeds 1e-12 of the peak"
        )));
    }
    Ok(())
}

pub fn phi_derivatives(grid: &Grid, params: &SolitonParams) -> Result<ProfileSet> {
    params.validate()?;
    check_tails(grid, params)?;
    Ok(ProfileSet {
        phi: RealField::from_fn(*grid, |x| phi(x, params)),
        dphi: RealField::from_fn(*grid, |x| phi_prime(x, params)),
        d2phi: RealField::from_fn(*grid, |x| phi_second(x, params)),
        dcphi: RealField::from_fn(*grid, |x| dc_phi(x, params)),
    })
}

/// ∫ φ^k for the c = 1 profile, by the trapezoid rule on a wide fine grid.
fn unit_profile_moment(p: f64, k: i32) -> f64 {
    let params = SolitonParams { p, c: 1.0 };
    let (l, h) = (60.0, 0.005);
    let n = (2.0 * l / h) as usize;
    h * (0..=n)
        .map(|i| phi(-l + i as f64 * h, &params).powi(k))
        .sum::<f64>()
}

pub fn unit_l2_norm_sq(p: f64) -> f64 {
    unit_profile_moment(p, 2)
}

pub fn unit_l1_norm(p: f64) -> f64 {
    unit_profile_moment(p, 1)
}

fn mass_exponent(p: f64) -> f64 {
    (5.0 - p) / (2.0 * (p - 1.0))
}

/// q(c) = ½ c^{(5-p)/(2(p-1))} ‖φ‖².
pub fn mass_q(params: &SolitonParams) -> f64 {
    0.5 * params.c.powf(mass_exponent(params.p)) * unit_l2_norm_sq(params.p)
}

pub fn mass_q_prime(params: &SolitonParams) -> f64 {
    let g = mass_exponent(params.p);
    0.5 * g * params.c.powf(g - 1.0) * unit_l2_norm_sq(params.p)
}

/// ∫ ∂_c φ_c = c^{(5-3p)/(2(p-1))} (3-p)/(2(p-1)) ‖φ‖_{L¹}, from ∫ Λ_pφ.
pub fn dc_phi_integral(params: &SolitonParams) -> f64 {
    let SolitonParams { p, c } = *params;
    c.powf((5.0 - 3.0 * p) / (2.0 * (p - 1.0))) * (3.0 - p) / (2.0 * (p - 1.0)) * unit_l1_norm(p)
}

/// Λ_p u = ½ x u' + u/(p-1).
pub fn lambda_p_apply(u: &RealField, p: f64, spectral: &Spectral) -> RealField {
    let du = spectral.derivative_line(&u.values);
    let g = u.grid;
    let values = (0..g.n)
        .map(|i| 0.5 * g.x(i) * du[i] + u.values[i] / (p - 1.0))
        .collect();
    RealField { grid: g, values }
}

/// Choice of the constant θ₂ in η₁.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ThetaConvention {
    /// θ₂ = (∫∂_cφ_c)² / (2 q'(c)²), which makes ⟨ξ₂, η₁⟩ = 0.
    #[default]
    Biorthogonal,
    /// θ₂ = ‖∂_cφ_c‖²_{L¹} / q'(c).
    Literal,
}

#[derive(Clone, Debug)]
pub struct KernelFunctions {
    pub params: SolitonParams,
    pub xi1: RealField,
    pub xi2: RealField,
    pub eta1: RealField,
    pub eta2: RealField,
    pub theta1: f64,
    pub theta2: f64,
    pub theta3: f64,
    /// θ₂ of the other convention, with the ⟨ξ₂, η₁⟩ it would produce.
    pub theta2_alternative: f64,
    pub xi2_eta1_alternative: f64,
    /// gram[i][j] = ⟨ξ_{i+1}, η_{j+1}⟩.
    pub gram: [[f64; 2]; 2],
    pub convention: ThetaConvention,
}

impl KernelFunctions {
    pub fn biorthogonality_residual(&self) -> f64 {
        let mut r: f64 = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                let d = if i == j { 1.0 } else { 0.0 };
                r = r.max((self.gram[i][j] - d).abs());
            }
        }
        r
    }
}

pub fn kernel_functions(grid: &Grid, params: &SolitonParams) -> Result<KernelFunctions> {
    kernel_functions_with(grid, params, ThetaConvention::Biorthogonal)
}

pub fn kernel_functions_with(
    grid: &Grid,
    params: &SolitonParams,
    convention: ThetaConvention,
) -> Result<KernelFunctions> {
    if grid.h > 0.05 + 1e-12 || grid.xmin > -40.0 || grid.xmax() < 40.0 - grid.h - 1e-9 {
        return Err(Error::GridTooSmall(format!(
            "kernel functions need h <= 0.05 and |x| up to 40 (h = {}, xmin = {})",
            grid.h, grid.xmin
        )));
    }
    let prof = phi_derivatives(grid, params)?;
    let SolitonParams { p, c } = *params;
    let h = grid.h;
    let qp = mass_q_prime(params);
    let theta1 = -1.0 / qp;
    let theta3 = 1.0 / qp;

    // ∫_{-∞}^x ∂_cφ_c = (1/(p-1) - 1/2) Φ(x)/c + x φ_c(x)/(2c), Φ the primitive of φ_c.
    let prim = cumulative(&prof.phi.values, h);
    let psi: Vec<f64> = (0..grid.n)
        .map(|i| ((1.0 / (p - 1.0) - 0.5) * prim[i] + grid.x(i) * prof.phi.values[i] / 2.0) / c)
        .collect();

    let int_xi2 = dc_phi_integral(params);
    let l1_xi2 = integrate(
        &prof
            .dcphi
            .values
            .iter()
            .map(|v| v.abs())
            .collect::<Vec<_>>(),
        h,
    );
    let theta2_bio = int_xi2 * int_xi2 / (2.0 * qp * qp);
    let theta2_lit = l1_xi2 * l1_xi2 / qp;
    let (theta2, theta2_alt) = match convention {
        ThetaConvention::Biorthogonal => (theta2_bio, theta2_lit),
        ThetaConvention::Literal => (theta2_lit, theta2_bio),
    };

    let eta1: Vec<f64> = (0..grid.n)
        .map(|i| theta1 * psi[i] + theta2 * prof.phi.values[i])
        .collect();
    let eta2: Vec<f64> = prof.phi.values.iter().map(|v| theta3 * v).collect();
    let xi1 = prof.dphi.values.clone();
    let xi2 = prof.dcphi.values.clone();

    let gram = [
        [inner(&xi1, &eta1, h), inner(&xi1, &eta2, h)],
        [inner(&xi2, &eta1, h), inner(&xi2, &eta2, h)],
    ];
    let xi2_eta1_alt = gram[1][0] + (theta2_alt - theta2) * inner(&xi2, &prof.phi.values, h);

    let k = KernelFunctions {
        params: *params,
        xi1: RealField {
            grid: *grid,
            values: xi1,
        },
        xi2: RealField {
            grid: *grid,
            values: xi2,
        },
        eta1: RealField {
            grid: *grid,
            values: eta1,
        },
        eta2: RealField {
            grid: *grid,
            values: eta2,
        },
        theta1,
        theta2,
        theta3,
        theta2_alternative: theta2_alt,
        xi2_eta1_alternative: xi2_eta1_alt,
        gram,
        convention,
    };
    let r = k.biorthogonality_residual();
    if r > 1e-6 {
        return Err(Error::BiorthogonalityFailure { residual: r });
    }
    Ok(k)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn peak_values() {
        assert!((phi(0.0, &SolitonParams::unit(2.0).unwrap()) - 1.5).abs() < 1e-14);
        assert!((phi(0.0, &SolitonParams::unit(3.0).unwrap()) - 2f64.sqrt()).abs() < 1e-14);
        assert!((phi(0.0, &SolitonParams::new(2.0, 4.0).unwrap()) - 6.0).abs() < 1e-13);
    }

    #[test]
    fn mass_at_p2() {
        let p = SolitonParams::unit(2.0).unwrap();
        assert!((mass_q(&p) - 3.0).abs() < 1e-12);
        assert!((mass_q_prime(&p) - 4.5).abs() < 1e-12);
        assert!((mass_q(&SolitonParams::new(2.0, 4.0).unwrap()) - 24.0).abs() < 1e-10);
    }

    #[test]
    fn literal_theta_is_rejected() {
        let g = Grid::symmetric(40.0, 0.01).unwrap();
        for p in [2.0, 3.0] {
            let params = SolitonParams::unit(p).unwrap();
            assert!(matches!(
                kernel_functions_with(&g, &params, ThetaConvention::Literal),
                Err(Error::BiorthogonalityFailure { .. })
            ));
        }
    }
}
