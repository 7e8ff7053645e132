//! Cutoffs, weights, norms and virial functionals used to monitor the
//! perturbation v along a trajectory.
//!
//! Every cutoff is built from one C^∞ transition s: ℝ → [0, 1], s(t) = 0 for
//! t ≤ 0 and 1 for t ≥ 1, the quotient of e^{-1/t} and e^{-1/t} + e^{-1/(1-t)}.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{cumulative, Grid, Spectral};
use crate::par::{self, Execution};

/// Name of the transition used by every cutoff, recorded in output metadata.
pub const MOLLIFIER: &str = "exp-quotient transition on [1,2]";

fn psi(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else {
        (-1.0 / t).exp()
    }
}

fn dpsi(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else {
        psi(t) / (t * t)
    }
}

/// The smooth step s(t).
pub fn transition(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if t >= 1.0 {
        1.0
    } else {
        let (a, b) = (psi(t), psi(1.0 - t));
        a / (a + b)
    }
}

pub fn transition_prime(t: f64) -> f64 {
    if t <= 0.0 || t >= 1.0 {
        return 0.0;
    }
    let (a, b) = (psi(t), psi(1.0 - t));
    let (da, db) = (dpsi(t), dpsi(1.0 - t));
    (da * b + a * db) / ((a + b) * (a + b))
}

/// Even cutoff with 1_{[-1,1]} ≤ χ ≤ 1_{[-2,2]} and xχ'(x) ≤ 0.
pub fn chi(x: f64) -> f64 {
    1.0 - transition(x.abs() - 1.0)
}

pub fn chi_prime(x: f64) -> f64 {
    -x.signum() * transition_prime(x.abs() - 1.0)
}

/// χ_C = χ(·/C).
pub fn chi_scaled(x: f64, c: f64) -> f64 {
    chi(x / c)
}

/// Decreasing, 1 on (-∞, 1] and 0 on [2, ∞).
pub fn theta1(x: f64) -> f64 {
    1.0 - transition(x - 1.0)
}

pub fn theta2(x: f64) -> f64 {
    1.0 - theta1(x)
}

/// ζ_C(x) = exp(-|x|(1 - χ(x))/C).
pub fn zeta(x: f64, c: f64) -> f64 {
    (-x.abs() * (1.0 - chi(x)) / c).exp()
}

pub fn zeta_prime(x: f64, c: f64) -> f64 {
    let g = (x.signum() * (1.0 - chi(x)) - x.abs() * chi_prime(x)) / c;
    -g * zeta(x, c)
}

/// χ̃ with support [1/2, 4], equal to 1 on [1, 2].
pub fn chi_tilde(x: f64) -> f64 {
    if x <= 2.0 {
        transition(2.0 * (x - 0.5))
    } else {
        1.0 - transition(0.5 * (x - 2.0))
    }
}

/// A, B, A₁ of the virial hierarchy, the κ of the sech weight and the decay
/// rate a of the local norms.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightConfig {
    pub big_a: f64,
    pub b: f64,
    pub a1: f64,
    pub kappa: f64,
    pub decay: f64,
}

impl WeightConfig {
    /// A = 400, B = 20, A₁ = B^{1/3}, κ = (p-1)/4 and a = κ/2.
    pub fn for_p(p: f64) -> Self {
        let b: f64 = 20.0;
        let kappa = (p - 1.0) / 4.0;
        Self {
            big_a: 400.0,
            b,
            a1: b.cbrt(),
            kappa,
            decay: kappa / 2.0,
        }
    }

    /// A ≥ B² > B > 1 (the working tuple has A = B²), A₁ = B^{1/3},
    /// 0 < κ < p - 1 and 0 < a ≤ κ/2.
    pub fn validate(&self, p: f64) -> Result<()> {
        let WeightConfig {
            big_a,
            b,
            a1,
            kappa,
            decay,
        } = *self;
        if !(big_a >= b * b && b > 1.0) {
            return Err(Error::InvalidParameter(format!(
                "need A >= B^2 > B > 1 (A = {big_a}, B = {b})"
            )));
        }
        if (a1 - b.cbrt()).abs() > 1e-9 * a1.abs().max(1.0) {
            return Err(Error::InvalidParameter(format!("A1 = {a1} is not B^(1/3)")));
        }
        if !(kappa > 0.0 && kappa < p - 1.0) {
            return Err(Error::InvalidParameter(format!("kappa = {kappa} outside (0, p-1)")));
        }
        if !(decay > 0.0 && decay <= kappa / 2.0 + 1e-15) {
            return Err(Error::InvalidParameter(format!("a = {decay} outside (0, kappa/2]")));
        }
        Ok(())
    }
}

/// ∫₀ˣ f on the grid (x = 0 must be a node).
fn primitive_from_zero(f: &[f64], grid: &Grid) -> Vec<f64> {
    let c = cumulative(f, grid.h);
    let zero = c[grid.index_of(0.0)];
    c.into_iter().map(|v| v - zero).collect()
}

/// Exactly odd version of a primitive of an even function on a symmetric grid.
fn odd_part(f: &mut [f64], grid: &Grid) {
    let mid = grid.index_of(0.0);
    for i in mid + 1..grid.n {
        let j = 2 * mid - i;
        let v = 0.5 * (f[i] - f[j]);
        f[i] = v;
        f[j] = -v;
    }
    f[mid] = 0.0;
}

/// All cutoffs for one weight configuration on one grid.
#[derive(Clone, Debug)]
pub struct CutoffFamily {
    pub grid: Grid,
    pub chi: Vec<f64>,
    pub theta1: Vec<f64>,
    pub theta2: Vec<f64>,
    pub zeta_a: Vec<f64>,
    pub zeta_b: Vec<f64>,
    /// φ_{iAA₁} = ∫₀ˣ ζ_A² ϑ_{iA₁}².
    pub phi_a: [Vec<f64>; 2],
    /// φ̃_{nA₁} for n = 1..=19.
    pub phi_tilde: Vec<Vec<f64>>,
    /// (ϑ_{iA₁}ζ_A)'.
    weight_prime: [Vec<f64>; 2],
    pub config: WeightConfig,
}

/// Highest n of 𝐈_n, the sum of A₁^{-2l} 𝓘̃_l over l < n.
pub const BOLD_I_ORDER: usize = 20;

impl CutoffFamily {
    pub fn new(grid: &Grid, config: &WeightConfig) -> Self {
        let g = *grid;
        let WeightConfig { big_a, b, a1, .. } = *config;
        let th1 = g.sample(|x| theta1(x / a1));
        let th2: Vec<f64> = th1.iter().map(|t| 1.0 - t).collect();
        let za = g.sample(|x| zeta(x, big_a));
        let phi_a = std::array::from_fn(|k| {
            let th = if k == 0 { &th1 } else { &th2 };
            let f: Vec<f64> = (0..g.n).map(|i| (za[i] * th[i]).powi(2)).collect();
            primitive_from_zero(&f, &g)
        });
        let weight_prime = std::array::from_fn(|k| {
            g.sample(|x| {
                let (t, dt) = if k == 0 {
                    (theta1(x / a1), -transition_prime(x / a1 - 1.0) / a1)
                } else {
                    (theta2(x / a1), transition_prime(x / a1 - 1.0) / a1)
                };
                dt * zeta(x, big_a) + t * zeta_prime(x, big_a)
            })
        });
        let phi_tilde = (1..BOLD_I_ORDER)
            .map(|n| {
                let scale = 2f64.powi(n as i32 - 1) * a1;
                let f = g.sample(|x| chi_tilde(x / scale));
                primitive_from_zero(&f, &g)
            })
            .collect();
        Self {
            grid: g,
            chi: g.sample(chi),
            theta1: th1,
            theta2: th2,
            zeta_a: za,
            zeta_b: g.sample(|x| zeta(x, b)),
            phi_a,
            phi_tilde,
            weight_prime,
            config: *config,
        }
    }

    /// φ_C = ∫₀ˣ ζ_C², exactly odd when the grid is symmetric about 0.
    pub fn phi_c(grid: &Grid, c: f64) -> Vec<f64> {
        let f = grid.sample(|x| zeta(x, c).powi(2));
        let mut out = primitive_from_zero(&f, grid);
        if grid.index_of(0.0) * 2 == grid.n {
            odd_part(&mut out, grid);
        }
        out
    }

    /// ϑ_{iA₁} for i = 1, 2.
    pub fn theta(&self, i: usize) -> &[f64] {
        if i == 1 {
            &self.theta1
        } else {
            &self.theta2
        }
    }
}

/// (‖v‖_{Σ₁}, ‖v‖_{Σ₂}) with ‖v‖_{Σᵢ} = ‖(ϑ_{iA₁}ζ_A v)'‖ + ‖ϑ_{iA₁}ζ_A v‖, for a
/// periodic field v.
pub fn sigma_norms(v: &[f64], family: &CutoffFamily, spectral: &Spectral) -> (f64, f64) {
    let g = family.grid;
    let dv = spectral.derivative_periodic(v, 1);
    let norm = |i: usize| -> f64 {
        let th = family.theta(i + 1);
        let wp = &family.weight_prime[i];
        let mut a = 0.0;
        let mut b = 0.0;
        for j in 0..g.n {
            let w = th[j] * family.zeta_a[j];
            let d = wp[j] * v[j] + w * dv[j];
            a += d * d;
            b += (w * v[j]).powi(2);
        }
        (a * g.h).sqrt() + (b * g.h).sqrt()
    };
    (norm(0), norm(1))
}

/// ‖sech(κx) v‖_{L²}.
pub fn sech_norm(v: &[f64], grid: &Grid, kappa: f64) -> f64 {
    let s: f64 = (0..grid.n)
        .map(|i| (v[i] * crate::profiles::sech(kappa * grid.x(i))).powi(2))
        .sum();
    (s * grid.h).sqrt()
}

#[derive(Clone, Debug, PartialEq)]
pub struct VirialValues {
    pub i1: f64,
    pub i2: f64,
    /// 𝓘̃_n for n = 1..=19.
    pub tilde: Vec<f64>,
    /// 𝐈₂₀ = Σ_{l<20} A₁^{-2l} 𝓘̃_l.
    pub bold_i20: f64,
    /// |𝓘ᵢ| ≤ ½‖φ_{iAA₁}‖∞‖v‖² for both i.
    pub bound_holds: bool,
}

/// 𝓘ᵢ = ½⟨v, φ_{iAA₁} v⟩ and 𝓘̃_n = ½⟨v, φ̃_{nA₁} v⟩.
pub fn virial_functionals(v: &[f64], family: &CutoffFamily) -> VirialValues {
    let h = family.grid.h;
    let form = |w: &[f64]| 0.5 * h * v.iter().zip(w).map(|(a, b)| a * a * b).sum::<f64>();
    let i1 = form(&family.phi_a[0]);
    let i2 = form(&family.phi_a[1]);
    let tilde: Vec<f64> = family.phi_tilde.iter().map(|w| form(w)).collect();
    let a1 = family.config.a1;
    let bold_i20 = tilde
        .iter()
        .enumerate()
        .map(|(k, t)| a1.powi(-2 * (k as i32 + 1)) * t)
        .sum();
    let vv = h * v.iter().map(|a| a * a).sum::<f64>();
    let bound = |w: &[f64], val: f64| val.abs() <= 0.5 * crate::grid::sup_norm(w) * vv * (1.0 + 1e-12);
    VirialValues {
        i1,
        i2,
        bound_holds: bound(&family.phi_a[0], i1) && bound(&family.phi_a[1], i2),
        tilde,
        bold_i20,
    }
}

/// B sup|ζ_B'/ζ_B|, the constant in |ζ_B'| ≲ B⁻¹ζ_B.
pub fn zeta_derivative_constant(grid: &Grid, b: f64) -> f64 {
    (0..grid.n)
        .map(|i| {
            let x = grid.x(i);
            (zeta_prime(x, b) / zeta(x, b)).abs()
        })
        .fold(0.0, f64::max)
        * b
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SmoothingIntegral {
    /// ∫ ‖e^{-a|x|} v(t)‖²_{H¹} dt by the trapezoid rule.
    pub value: f64,
    /// (t, ‖e^{-a⟨x⟩} v(t)‖_{L²}).
    pub curve: Vec<(f64, f64)>,
    /// The integrand at each t.
    pub integrand: Vec<f64>,
}

impl SmoothingIntegral {
    /// Integral over the frames with t ≤ t_max.
    pub fn value_until(&self, t_max: f64) -> f64 {
        let pts: Vec<(f64, f64)> = self
            .curve
            .iter()
            .zip(&self.integrand)
            .filter(|((t, _), _)| *t <= t_max + 1e-9)
            .map(|((t, _), f)| (*t, *f))
            .collect();
        pts.windows(2)
            .map(|w| 0.5 * (w[1].0 - w[0].0) * (w[0].1 + w[1].1))
            .sum()
    }

    /// Mean of the pointwise curve over frames with t in [t0, t1].
    pub fn curve_mean(&self, t0: f64, t1: f64) -> f64 {
        let sel: Vec<f64> = self
            .curve
            .iter()
            .filter(|(t, _)| *t >= t0 - 1e-9 && *t <= t1 + 1e-9)
            .map(|(_, y)| *y)
            .collect();
        sel.iter().sum::<f64>() / sel.len().max(1) as f64
    }
}

/// Local norms of a sequence of periodic fields v(t), evaluated in parallel over frames.
pub fn smoothing_integral(
    frames: &[(f64, Vec<f64>)],
    grid: &Grid,
    decay: f64,
    exec: Execution,
) -> SmoothingIntegral {
    let spectral = Spectral::new(*grid);
    let w_abs = grid.sample(|x| (-decay * x.abs()).exp());
    let dw_abs = grid.sample(|x| -decay * x.signum() * (-decay * x.abs()).exp());
    let w_br = grid.sample(|x| (-decay * (1.0 + x * x).sqrt()).exp());
    let per_frame = par::map(exec, frames, |(t, v)| {
        let dv = spectral.derivative_periodic(v, 1);
        let mut h1 = 0.0;
        let mut l2 = 0.0;
        for i in 0..grid.n {
            let a = w_abs[i] * v[i];
            let d = dw_abs[i] * v[i] + w_abs[i] * dv[i];
            h1 += a * a + d * d;
            l2 += (w_br[i] * v[i]).powi(2);
        }
        (*t, h1 * grid.h, (l2 * grid.h).sqrt())
    });
    let mut out = SmoothingIntegral::default();
    for (t, f, c) in per_frame {
        out.curve.push((t, c));
        out.integrand.push(f);
    }
    out.value = out.value_until(f64::INFINITY);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partition_of_unity_is_exact() {
        let g = Grid::with_points(40.0, 1024).unwrap();
        let fam = CutoffFamily::new(&g, &WeightConfig::for_p(2.0));
        let worst = (0..g.n)
            .map(|i| (fam.theta1[i] + fam.theta2[i] - 1.0).abs())
            .fold(0.0, f64::max);
        assert_eq!(worst, 0.0);
    }

    #[test]
    fn chi_bounds() {
        for k in 0..=400 {
            let x = -4.0 + 0.02 * k as f64;
            let c = chi(x);
            assert!((0.0..=1.0).contains(&c));
            if x.abs() <= 1.0 {
                assert_eq!(c, 1.0);
            }
            if x.abs() >= 2.0 {
                assert_eq!(c, 0.0);
            }
            assert!(x * chi_prime(x) <= 0.0);
        }
    }
}
