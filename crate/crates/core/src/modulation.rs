//! Decomposition u = φ_c(· - D) + v(· - D) with
//! ⟨v, ζ_B η₁[c]⟩ = ⟨v, η₂[c]⟩ = 0, and tracking of (c, D) along a trajectory.
//!
//! Translations act on the periodic grid through Fourier phases, so the
//! decomposition is exactly equivariant up to the Newton tolerance.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::diagnostics::{self, CutoffFamily};
use crate::error::{Error, Result};
use crate::grid::{cumulative, inner, Grid, RealField, Spectral};
use crate::par::{self, Execution};
use crate::profiles::{self, SolitonParams};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModulationConfig {
    pub b: f64,
    /// Newton stops when both pairings are below tol·‖u‖.
    pub tol: f64,
    pub max_iter: usize,
    /// Largest admissible ‖v‖_{H¹}.
    pub tube_radius: f64,
}

impl Default for ModulationConfig {
    fn default() -> Self {
        Self {
            b: 20.0,
            tol: 1e-10,
            max_iter: 50,
            tube_radius: 0.2,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModulationState {
    pub t: f64,
    pub c: f64,
    pub d: f64,
    pub v: RealField,
    /// (⟨v, ζ_B η₁[c]⟩, ⟨v, η₂[c]⟩).
    pub ortho_residuals: [f64; 2],
    pub cdot: f64,
    pub ddot_minus_c: f64,
    /// ∂G/∂(D̃, c) with G₁ = B^{-1/2}F₁, G₂ = F₂ and D̃ = B^{-1/2}D.
    pub jacobian_scaled: [[f64; 2]; 2],
    pub iterations: usize,
    /// ‖v‖_{H¹}.
    pub tube_distance: f64,
    /// (|ċ| + |Ḋ - c|) / (B⁻¹(‖v‖_{Σ₁} + ‖v‖_{Σ₂})), filled in by [`Modulator::track`].
    pub bound_ratio: f64,
}

/// ζ_B η₁[c] and η₂[c] on the grid.
#[derive(Clone, Debug)]
struct Weights {
    w1: Vec<f64>,
    w2: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct Modulator {
    pub grid: Grid,
    pub p: f64,
    pub config: ModulationConfig,
    spectral: Spectral,
    zeta_b: Vec<f64>,
}

impl Modulator {
    pub fn new(grid: &Grid, p: f64, config: ModulationConfig) -> Result<Self> {
        SolitonParams::unit(p)?;
        if !(config.b > 1.0) {
            return Err(Error::InvalidParameter(format!("B = {} must exceed 1", config.b)));
        }
        if grid.index_of(0.0) * 2 != grid.n {
            return Err(Error::InvalidParameter("grid must be symmetric about 0".into()));
        }
        Ok(Self {
            grid: *grid,
            p,
            config,
            spectral: Spectral::new(*grid),
            zeta_b: grid.sample(|x| diagnostics::zeta(x, config.b)),
        })
    }

    fn params(&self, c: f64) -> Result<SolitonParams> {
        SolitonParams::new(self.p, c)
    }

    pub fn soliton(&self, c: f64) -> Result<Vec<f64>> {
        let params = self.params(c)?;
        Ok(self.grid.sample(|x| profiles::phi(x, &params)))
    }

    fn weights(&self, c: f64) -> Result<Weights> {
        let params = self.params(c)?;
        let g = &self.grid;
        let p = self.p;
        let phi = g.sample(|x| profiles::phi(x, &params));
        let prim = cumulative(&phi, g.h);
        let qp = profiles::mass_q_prime(&params);
        let int_xi2 = profiles::dc_phi_integral(&params);
        let (theta1, theta2, theta3) = (-1.0 / qp, int_xi2 * int_xi2 / (2.0 * qp * qp), 1.0 / qp);
        let w1 = (0..g.n)
            .map(|i| {
                let psi = ((1.0 / (p - 1.0) - 0.5) * prim[i] + g.x(i) * phi[i] / 2.0) / c;
                self.zeta_b[i] * (theta1 * psi + theta2 * phi[i])
            })
            .collect();
        let w2 = phi.iter().map(|v| theta3 * v).collect();
        Ok(Weights { w1, w2 })
    }

    /// u(· + d).
    pub fn shift_back(&self, u: &[f64], d: f64) -> Vec<f64> {
        self.spectral.translate(u, -d)
    }

    fn residual(&self, u: &[f64], c: f64, d: f64) -> Result<(Vec<f64>, [f64; 2], Weights)> {
        let phi = self.soliton(c)?;
        let v: Vec<f64> = self.shift_back(u, d).iter().zip(&phi).map(|(a, b)| a - b).collect();
        let w = self.weights(c)?;
        let h = self.grid.h;
        let f = [inner(&v, &w.w1, h), inner(&v, &w.w2, h)];
        Ok((v, f, w))
    }

    fn jacobian(&self, u: &[f64], v: &[f64], c: f64, d: f64, w: &Weights) -> Result<[[f64; 2]; 2]> {
        let h = self.grid.h;
        let du = self.shift_back(&self.spectral.derivative_periodic(u, 1), d);
        let params = self.params(c)?;
        let dc_phi = self.grid.sample(|x| profiles::dc_phi(x, &params));
        let dc = 1e-6 * c;
        let (wp, wm) = (self.weights(c + dc)?, self.weights(c - dc)?);
        let dw = |a: &[f64], b: &[f64]| -> Vec<f64> {
            a.iter().zip(b).map(|(x, y)| (x - y) / (2.0 * dc)).collect()
        };
        let (dw1, dw2) = (dw(&wp.w1, &wm.w1), dw(&wp.w2, &wm.w2));
        Ok([
            [inner(&du, &w.w1, h), -inner(&dc_phi, &w.w1, h) + inner(v, &dw1, h)],
            [inner(&du, &w.w2, h), -inner(&dc_phi, &w.w2, h) + inner(v, &dw2, h)],
        ])
    }

    fn h1_norm(&self, v: &[f64]) -> f64 {
        let dv = self.spectral.derivative_periodic(v, 1);
        let s: f64 = v.iter().zip(&dv).map(|(a, b)| a * a + b * b).sum();
        (s * self.grid.h).sqrt()
    }

    /// Newton iteration for (c, D) from `guess` = (c₀, D₀).
    pub fn decompose(&self, u: &RealField, guess: (f64, f64)) -> Result<ModulationState> {
        let (mut c, mut d) = guess;
        let scale = crate::grid::norm_l2(&u.values, self.grid.h).max(1e-300);
        let tol = self.config.tol * scale;
        let sb = self.config.b.sqrt();
        let mut last = f64::INFINITY;
        for it in 0..=self.config.max_iter {
            let (v, f, w) = self.residual(&u.values, c, d)?;
            let jac = self.jacobian(&u.values, &v, c, d, &w)?;
            let res = f[0].abs().max(f[1].abs());
            last = res;
            if res <= tol {
                let tube = self.h1_norm(&v);
                if tube > self.config.tube_radius {
                    return Err(Error::TubeExit { distance: tube });
                }
                return Ok(ModulationState {
                    t: 0.0,
                    c,
                    d,
                    v: RealField {
                        grid: self.grid,
                        values: v,
                    },
                    ortho_residuals: f,
                    cdot: 0.0,
                    ddot_minus_c: 0.0,
                    jacobian_scaled: [
                        [jac[0][0], jac[0][1] / sb],
                        [jac[1][0] * sb, jac[1][1]],
                    ],
                    iterations: it,
                    tube_distance: tube,
                    bound_ratio: f64::NAN,
                });
            }
            let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
            if !det.is_finite() || det.abs() < 1e-14 {
                break;
            }
            let dd = (jac[1][1] * f[0] - jac[0][1] * f[1]) / det;
            let dcs = (-jac[1][0] * f[0] + jac[0][0] * f[1]) / det;
            d -= dd;
            c -= dcs;
            if !(c > 0.0) || !d.is_finite() {
                break;
            }
        }
        Err(Error::NewtonDivergence {
            iterations: self.config.max_iter,
            residual: last,
        })
    }

    /// Decompose every frame, warm-starting from the previous one. `frame_speed`
    /// is the speed of the frame the fields are given in; ċ and Ḋ - c come from
    /// centred differences (one-sided at the ends).
    pub fn track(
        &self,
        frames: &[(f64, RealField)],
        guess: (f64, f64),
        frame_speed: f64,
        family: &CutoffFamily,
    ) -> Result<Vec<ModulationState>> {
        let mut out: Vec<ModulationState> = Vec::with_capacity(frames.len());
        let mut g = guess;
        for (k, (t, u)) in frames.iter().enumerate() {
            if let Some(prev) = out.last() {
                let dt = t - frames[k - 1].0;
                g = (prev.c, prev.d + (prev.c - frame_speed) * dt);
            }
            let mut s = self.decompose(u, g)?;
            s.t = *t;
            out.push(s);
        }
        let n = out.len();
        if n >= 2 {
            for k in 0..n {
                let (a, b) = if k == 0 {
                    (0, 1)
                } else if k == n - 1 {
                    (n - 2, n - 1)
                } else {
                    (k - 1, k + 1)
                };
                let dt = out[b].t - out[a].t;
                let cdot = (out[b].c - out[a].c) / dt;
                let ddot = (out[b].d - out[a].d) / dt + frame_speed;
                out[k].cdot = cdot;
                out[k].ddot_minus_c = ddot - out[k].c;
            }
        }
        for s in out.iter_mut() {
            let (s1, s2) = diagnostics::sigma_norms(&s.v.values, family, &self.spectral);
            let rhs = (s1 + s2) / self.config.b;
            s.bound_ratio = (s.cdot.abs() + s.ddot_minus_c.abs()) / rhs.max(1e-300);
        }
        Ok(out)
    }

    /// Recompute the orthogonality pairings of tracked states, in parallel over frames.
    pub fn reverify(
        &self,
        frames: &[(f64, RealField)],
        states: &[ModulationState],
        exec: Execution,
    ) -> Result<Vec<[f64; 2]>> {
        let pairs: Vec<(&RealField, &ModulationState)> =
            frames.iter().map(|(_, u)| u).zip(states).collect();
        par::map(exec, &pairs, |(u, s)| {
            self.residual(&u.values, s.c, s.d).map(|(_, f, _)| f)
        })
        .into_iter()
        .collect()
    }

    /// φ_c(· - D) + v(· - D).
    pub fn recompose(&self, state: &ModulationState) -> Result<Vec<f64>> {
        let phi = self.soliton(state.c)?;
        let sum: Vec<f64> = phi.iter().zip(&state.v.values).map(|(a, b)| a + b).collect();
        Ok(self.spectral.translate(&sum, state.d))
    }
}

/// Rows `t,c,D,r1,r2,cdot,Ddot_minus_c,bound_ratio`.
pub fn write_track_csv<W: Write>(mut w: W, states: &[ModulationState]) -> io::Result<()> {
    writeln!(w, "t,c,D,r1,r2,cdot,Ddot_minus_c,bound_ratio")?;
    for s in states {
        writeln!(
            w,
            "{:.10},{:.14e},{:.14e},{:.3e},{:.3e},{:.6e},{:.6e},{:.6e}",
            s.t,
            s.c,
            s.d,
            s.ortho_residuals[0],
            s.ortho_residuals[1],
            s.cdot,
            s.ddot_minus_c,
            s.bound_ratio
        )?;
    }
    Ok(())
}
