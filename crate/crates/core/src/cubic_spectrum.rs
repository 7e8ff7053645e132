//! Roots of μ³ - μ + λ = 0, partial-fraction coefficients and the Vandermonde
//! product W₀(λ).

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Half-width of the strip |Re λ| ≤ STRIP in which the root ordering is asserted.
pub const STRIP: f64 = 0.3;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectralPoint {
    pub lambda: Complex64,
    pub mu: [Complex64; 3],
    pub a: [Complex64; 3],
    pub w0: Complex64,
}

impl SpectralPoint {
    /// Σ aⱼ μⱼ e^{(μⱼ-μₖ) s}, the Volterra kernel normalised at root k.
    pub fn kernel(&self, k: usize, s: f64) -> Complex64 {
        (0..3)
            .map(|j| self.a[j] * self.mu[j] * ((self.mu[j] - self.mu[k]) * s).exp())
            .sum()
    }
}

fn cubic(mu: Complex64, lambda: Complex64) -> Complex64 {
    mu * mu * mu - mu + lambda
}

fn newton(mut mu: Complex64, lambda: Complex64) -> Option<Complex64> {
    for _ in 0..60 {
        let d = 3.0 * mu * mu - 1.0;
        if d.norm() < 1e-14 {
            return None;
        }
        let step = cubic(mu, lambda) / d;
        mu -= step;
        if step.norm() <= 1e-16 * (1.0 + mu.norm()) {
            return Some(mu);
        }
    }
    (cubic(mu, lambda).norm() <= 1e-13 * (1.0 + lambda.norm())).then_some(mu)
}

/// The root μ₂ continuous with μ₂(0) = 0, tracked along the segment [0, λ].
pub fn mu2(lambda: Complex64) -> Result<Complex64> {
    let steps = (8.0 * lambda.norm()).ceil().max(1.0) as usize;
    let mut mu = Complex64::new(0.0, 0.0);
    for s in 1..=steps {
        let l = lambda * (s as f64 / steps as f64);
        let predictor = mu - (lambda / steps as f64) / (3.0 * mu * mu - 1.0);
        mu = newton(predictor, l).ok_or(Error::DegenerateRoots { lambda })?;
    }
    Ok(mu)
}

pub fn solve_cubic(lambda: Complex64) -> Result<SpectralPoint> {
    let m2 = mu2(lambda)?;
    let r = (1.0 - 0.75 * m2 * m2).sqrt();
    let (mut m1, mut m3) = (-0.5 * m2 - r, -0.5 * m2 + r);
    if m1.re > m3.re {
        std::mem::swap(&mut m1, &mut m3);
    }
    // Real parts of the outer roots separate by 2 Re r; equality only away from the strip.
    if (m3.re - m1.re).abs() <= 1e-12 * (1.0 + m3.norm()) {
        return Err(Error::BranchAmbiguity { lambda });
    }
    let mu = [m1, m2, m3];
    let d12 = m1 - m2;
    let d13 = m1 - m3;
    let d23 = m2 - m3;
    // Wronskian of e^{μ₁x}, e^{μ₂x}, e^{μ₃x}, i.e. ∏_{i<j}(μⱼ-μᵢ).
    let w0 = -(d12 * d13 * d23);
    // Near a branch point two roots separate like √|λ - λ*|, so roundoff alone
    // leaves a gap of order √ε there.
    if d12.norm().min(d13.norm()).min(d23.norm()) < 1e-6 {
        return Err(Error::DegenerateRoots { lambda });
    }
    let a = [1.0 / (d12 * d13), -1.0 / (d12 * d23), 1.0 / (d13 * d23)];
    Ok(SpectralPoint { lambda, mu, a, w0 })
}

pub fn w0(point: &SpectralPoint) -> Complex64 {
    point.w0
}

/// Check Re μ₁ < 0 ≤ Re μ₂·sign(Re λ) ordering of the labelled roots.
pub fn ordering_holds(point: &SpectralPoint) -> bool {
    let [m1, m2, m3] = point.mu;
    m1.re < 0.0 && m3.re > 0.0 && m1.re < m2.re && m2.re < m3.re
}
