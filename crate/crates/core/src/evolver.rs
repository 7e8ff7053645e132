//! Fourier evolver for ∂ₜu = -∂ₓ(u'' + f(u)) on a periodic surrogate of the line.
//!
//! The linear part is integrated exactly: in the interaction picture
//! ũ(t) = e^{t∂ₓ³}u(t) only the nonlinear term remains, and it is advanced with
//! the classical fourth-order Runge–Kutta scheme (Lawson's method) or with the
//! two-stage Gauss collocation method, which is also fourth order and keeps the
//! quadratic invariant Q exactly. The nonlinearity is evaluated on the 2/3
//! truncated field and its flux truncated again, so ⟨u, ∂ₓf(u)⟩ vanishes at the
//! discrete level; without dealiasing the quadratic product feeds an aliasing
//! instability on long runs. An optional
//! frame speed s moves the computation to y = x - st, which keeps a soliton of
//! speed c = s in place.

use std::io::{self, Read, Write};

use num_complex::Complex64 as C;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Grid, RealField, Spectral};
use crate::par::{self, Execution};
use crate::profiles::Nonlinearity;

pub const SNAPSHOT_MAGIC: &[u8; 8] = b"GKDVSNAP";

/// Time stepper for the interaction-picture equation.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    /// Explicit Lawson–RK4.
    #[default]
    Rk4,
    /// Implicit two-stage Gauss collocation, solved by fixed-point iteration.
    /// Conserves Q to the iteration tolerance.
    Gauss,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvolverConfig {
    /// The periodic cell is [-half_length, half_length).
    pub half_length: f64,
    /// Number of Fourier modes, a power of two ≥ 256.
    pub n: usize,
    pub dt: f64,
    pub p: f64,
    pub nonlinearity: Nonlinearity,
    pub scheme: Scheme,
    /// Final time; negative values run the equation backwards.
    pub t_end: f64,
    /// Speed of the computational frame.
    pub frame_speed: f64,
    /// Time between stored frames.
    pub record_every: f64,
    /// Stop the run once the boundary-window mass fraction exceeds this.
    pub wrap_tolerance: Option<f64>,
}

impl Default for EvolverConfig {
    fn default() -> Self {
        Self {
            half_length: 40.0,
            n: 1024,
            dt: 1e-3,
            p: 2.0,
            nonlinearity: Nonlinearity::Signed,
            scheme: Scheme::Rk4,
            t_end: 10.0,
            frame_speed: 0.0,
            record_every: 0.1,
            wrap_tolerance: Some(1e-6),
        }
    }
}

impl EvolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.n.is_power_of_two() || self.n < 256 {
            return Err(Error::InvalidParameter(format!(
                "n = {} must be a power of two >= 256",
                self.n
            )));
        }
        if !(self.p > 1.0 && self.p < 5.0) {
            return Err(Error::InvalidParameter(format!("p = {} outside (1, 5)", self.p)));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidParameter(format!("dt = {} must be positive", self.dt)));
        }
        if !(self.half_length > 0.0 && self.t_end.is_finite() && self.record_every > 0.0) {
            return Err(Error::InvalidParameter(
                "half_length and record_every must be positive, t_end finite".into(),
            ));
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::with_points(self.half_length, self.n)
    }
}

/// Q = ½‖u‖² and E = ½‖u'‖² - ∫F(u) at the recorded times, with the fraction of
/// mass in the outer tenth of the cell on each side.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConservedDiagnostics {
    pub t: Vec<f64>,
    pub q: Vec<f64>,
    pub e: Vec<f64>,
    pub wrap: Vec<f64>,
}

impl ConservedDiagnostics {
    /// max_t |Q(t) - Q(0)| / |Q(0)|.
    pub fn q_drift(&self) -> f64 {
        relative_drift(&self.q)
    }

    pub fn e_drift(&self) -> f64 {
        relative_drift(&self.e)
    }

    fn push(&mut self, t: f64, q: f64, e: f64, wrap: f64) {
        self.t.push(t);
        self.q.push(q);
        self.e.push(e);
        self.wrap.push(wrap);
    }
}

fn relative_drift(v: &[f64]) -> f64 {
    match v.first() {
        Some(&v0) => {
            let scale = v0.abs().max(1e-300);
            v.iter().fold(0.0f64, |m, x| m.max((x - v0).abs())) / scale
        }
        None => 0.0,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Frame {
    pub t: f64,
    pub u: RealField,
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub config: EvolverConfig,
    pub frames: Vec<Frame>,
    pub diagnostics: ConservedDiagnostics,
    /// Time at which the wrap gauge stopped the run, if it did.
    pub truncated_at: Option<f64>,
}

impl Trajectory {
    pub fn last(&self) -> &Frame {
        self.frames.last().expect("a trajectory holds at least the initial frame")
    }
}

/// e^{-t∂ₓ³}u: mode k is multiplied by e^{ik³t}.
pub fn free_propagator(u: &RealField, t: f64) -> RealField {
    let spectral = Spectral::new(u.grid);
    let values = spectral.apply_symbol(&u.values, |k| C::from_polar(1.0, k * k * k * t), true);
    RealField {
        grid: u.grid,
        values,
    }
}

/// Largest Fourier amplitude beyond half the Nyquist wavenumber, relative to the
/// largest amplitude. The band covers the upper part of the dealiased range, so a
/// cascade towards the grid scale shows up before it is cut off.
pub fn spectral_tail(u: &[f64], spectral: &Spectral) -> f64 {
    let mut buf: Vec<C> = u.iter().map(|&v| C::new(v, 0.0)).collect();
    spectral.fft(&mut buf);
    tail_of(&buf, spectral.wavenumbers())
}

fn tail_of(uhat: &[C], k: &[f64]) -> f64 {
    let kmax = k.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut peak: f64 = 0.0;
    let mut tail: f64 = 0.0;
    for (z, &kk) in uhat.iter().zip(k) {
        let a = z.norm();
        peak = peak.max(a);
        if kk.abs() >= 0.5 * kmax {
            tail = tail.max(a);
        }
    }
    tail / peak.max(1e-300)
}

/// One configured integrator; holds the FFT plans and the linear propagators.
#[derive(Clone, Debug)]
pub struct Evolver {
    pub config: EvolverConfig,
    pub grid: Grid,
    spectral: Spectral,
    /// e^{Λ dt/2} and e^{Λ dt} with Λ(k) = ik³ + iks.
    half: Vec<C>,
    full: Vec<C>,
    /// -ik on the lower two thirds of the spectrum, 0 above (dealiasing).
    flux: Vec<C>,
    retained: Vec<bool>,
    /// e^{±Λ c_i dt} at the two Gauss nodes.
    gauss: [[Vec<C>; 2]; 2],
    dt: f64,
}

const GAUSS_MAX_ITER: usize = 100;

impl Evolver {
    pub fn new(config: EvolverConfig) -> Result<Self> {
        config.validate()?;
        let grid = config.grid()?;
        let spectral = Spectral::new(grid);
        let dt = if config.t_end < 0.0 { -config.dt } else { config.dt };
        let s = config.frame_speed;
        // The Nyquist mode has no sign for k; leaving it unrotated keeps u real.
        let nyq = spectral.wavenumbers()[grid.n / 2];
        let lam = |k: f64| {
            if k == nyq {
                C::new(0.0, 0.0)
            } else {
                C::new(0.0, k * k * k + k * s)
            }
        };
        let half = spectral.wavenumbers().iter().map(|&k| (lam(k) * (0.5 * dt)).exp()).collect();
        let full = spectral.wavenumbers().iter().map(|&k| (lam(k) * dt).exp()).collect();
        let r = 3f64.sqrt() / 6.0;
        let prop = |tau: f64| -> Vec<C> {
            spectral.wavenumbers().iter().map(|&k| (lam(k) * tau).exp()).collect()
        };
        let gauss = [
            [prop((0.5 - r) * dt), prop(-(0.5 - r) * dt)],
            [prop((0.5 + r) * dt), prop(-(0.5 + r) * dt)],
        ];
        let kmax = nyq.abs();
        let retained: Vec<bool> =
            spectral.wavenumbers().iter().map(|&k| k.abs() <= 2.0 / 3.0 * kmax).collect();
        let flux = spectral
            .wavenumbers()
            .iter()
            .zip(&retained)
            .map(|(&k, &keep)| if keep { C::new(0.0, -k) } else { C::new(0.0, 0.0) })
            .collect();
        Ok(Self {
            config,
            grid,
            spectral,
            half,
            full,
            flux,
            retained,
            gauss,
            dt,
        })
    }

    pub fn spectral(&self) -> &Spectral {
        &self.spectral
    }

    /// Signed step actually taken.
    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// -P∂ₓ f(Pu) in Fourier variables, P the 2/3 truncation.
    fn nonlinear(&self, uhat: &[C]) -> Vec<C> {
        let mut buf: Vec<C> = uhat
            .iter()
            .zip(&self.retained)
            .map(|(z, &keep)| if keep { *z } else { C::new(0.0, 0.0) })
            .collect();
        self.spectral.ifft(&mut buf);
        let (p, nl) = (self.config.p, self.config.nonlinearity);
        for z in buf.iter_mut() {
            *z = C::new(nl.f(z.re, p), 0.0);
        }
        self.spectral.fft(&mut buf);
        for (z, m) in buf.iter_mut().zip(&self.flux) {
            *z *= m;
        }
        buf
    }

    /// One step of the configured scheme on the Fourier coefficients.
    pub fn step(&self, uhat: &mut [C]) {
        match self.config.scheme {
            Scheme::Rk4 => self.step_rk4(uhat),
            Scheme::Gauss => self.step_gauss(uhat),
        }
    }

    /// Gauss collocation for w' = e^{-Λτ}N(e^{Λτ}w), w(0) = û(t_n).
    fn step_gauss(&self, uhat: &mut [C]) {
        let dt = self.dt;
        let n = uhat.len();
        let r = 3f64.sqrt() / 6.0;
        let a = [[0.25, 0.25 - r], [0.25 + r, 0.25]];
        let scale = uhat.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1e-300);
        let stage = |i: usize, w: &[C]| -> Vec<C> {
            let [fwd, back] = &self.gauss[i];
            let v: Vec<C> = w.iter().zip(fwd).map(|(z, e)| z * e).collect();
            self.nonlinear(&v).iter().zip(back).map(|(z, e)| z * e).collect()
        };
        let k0 = self.nonlinear(uhat);
        let mut k = [k0.clone(), k0];
        for _ in 0..GAUSS_MAX_ITER {
            let next: Vec<Vec<C>> = (0..2)
                .map(|i| {
                    let w: Vec<C> = (0..n)
                        .map(|j| uhat[j] + (k[0][j] * a[i][0] + k[1][j] * a[i][1]) * dt)
                        .collect();
                    stage(i, &w)
                })
                .collect();
            let change = (0..2)
                .flat_map(|i| (0..n).map(move |j| (i, j)))
                .map(|(i, j)| (next[i][j] - k[i][j]).norm())
                .fold(0.0, f64::max);
            let [k1, k2]: [Vec<C>; 2] = next.try_into().expect("two stages");
            k = [k1, k2];
            if change * dt.abs() <= 1e-15 * scale {
                break;
            }
        }
        for j in 0..n {
            uhat[j] = self.full[j] * (uhat[j] + (k[0][j] + k[1][j]) * (0.5 * dt));
        }
    }

    /// One Lawson–RK4 step.
    fn step_rk4(&self, uhat: &mut [C]) {
        let dt = self.dt;
        let (e, e2) = (&self.half, &self.full);
        let n = uhat.len();
        let k1 = self.nonlinear(uhat);
        let a: Vec<C> = (0..n).map(|j| e[j] * (uhat[j] + k1[j] * (0.5 * dt))).collect();
        let k2 = self.nonlinear(&a);
        let b: Vec<C> = (0..n).map(|j| e[j] * uhat[j] + k2[j] * (0.5 * dt)).collect();
        let k3 = self.nonlinear(&b);
        let c: Vec<C> = (0..n).map(|j| e2[j] * uhat[j] + e[j] * k3[j] * dt).collect();
        let k4 = self.nonlinear(&c);
        for j in 0..n {
            uhat[j] = e2[j] * uhat[j]
                + (e2[j] * k1[j] + e[j] * (k2[j] + k3[j]) * 2.0 + k4[j]) * (dt / 6.0);
        }
    }

    pub fn to_fourier(&self, u: &[f64]) -> Vec<C> {
        let mut buf: Vec<C> = u.iter().map(|&v| C::new(v, 0.0)).collect();
        self.spectral.fft(&mut buf);
        buf
    }

    pub fn to_physical(&self, uhat: &[C]) -> Vec<f64> {
        let mut buf = uhat.to_vec();
        self.spectral.ifft(&mut buf);
        buf.into_iter().map(|z| z.re).collect()
    }

    pub fn mass(&self, u: &[f64]) -> f64 {
        0.5 * u.iter().map(|v| v * v).sum::<f64>() * self.grid.h
    }

    pub fn energy(&self, u: &[f64]) -> f64 {
        let du = self.spectral.derivative_periodic(u, 1);
        let (p, nl) = (self.config.p, self.config.nonlinearity);
        let kinetic: f64 = du.iter().map(|v| v * v).sum();
        let potential: f64 = u.iter().map(|&v| nl.primitive(v, p)).sum();
        (0.5 * kinetic - potential) * self.grid.h
    }

    /// Fraction of ‖u‖² in the outer tenth of the cell at either end.
    pub fn wrap_gauge(&self, u: &[f64]) -> f64 {
        let edge = 0.9 * self.config.half_length;
        let mut outer = 0.0;
        let mut total = 0.0;
        for (i, v) in u.iter().enumerate() {
            let w = v * v;
            total += w;
            if self.grid.x(i).abs() >= edge {
                outer += w;
            }
        }
        outer / total.max(1e-300)
    }

    /// Run to `config.t_end`, storing frames every `record_every`.
    pub fn evolve(&self, u0: &RealField) -> Result<Trajectory> {
        if u0.grid.n != self.grid.n || (u0.grid.h - self.grid.h).abs() > 1e-12 * self.grid.h {
            return Err(Error::InvalidParameter("u0 does not live on the evolver grid".into()));
        }
        let tail0 = spectral_tail(&u0.values, &self.spectral);
        if tail0 > 1e-10 {
            return Err(Error::ResolutionLoss { t: 0.0, tail: tail0 });
        }
        let cfg = &self.config;
        let steps = (cfg.t_end.abs() / cfg.dt).round() as usize;
        let every = ((cfg.record_every / cfg.dt).round() as usize).max(1);
        let sup0 = crate::grid::sup_norm(&u0.values).max(1e-300);

        let mut uhat = self.to_fourier(&u0.values);
        let mut frames = vec![Frame { t: 0.0, u: u0.clone() }];
        let mut diag = ConservedDiagnostics::default();
        diag.push(0.0, self.mass(&u0.values), self.energy(&u0.values), self.wrap_gauge(&u0.values));
        let mut truncated_at = None;

        for s in 1..=steps {
            self.step(&mut uhat);
            if s % every != 0 && s != steps {
                continue;
            }
            let t = s as f64 * self.dt;
            let u = self.to_physical(&uhat);
            if !u.iter().all(|v| v.is_finite()) {
                return Err(Error::BlowupDetected { t, sup: f64::INFINITY });
            }
            let sup = crate::grid::sup_norm(&u);
            if sup > 1e3 * sup0 {
                return Err(Error::BlowupDetected { t, sup });
            }
            let tail = tail_of(&uhat, self.spectral.wavenumbers());
            if tail > 1e-6 {
                return Err(Error::ResolutionLoss { t, tail });
            }
            let wrap = self.wrap_gauge(&u);
            diag.push(t, self.mass(&u), self.energy(&u), wrap);
            frames.push(Frame {
                t,
                u: RealField {
                    grid: self.grid,
                    values: u,
                },
            });
            if cfg.wrap_tolerance.is_some_and(|tol| wrap > tol) {
                truncated_at = Some(t);
                break;
            }
        }
        Ok(Trajectory {
            config: *cfg,
            frames,
            diagnostics: diag,
            truncated_at,
        })
    }

    /// Final state only, for convergence studies.
    pub fn advance(&self, u0: &[f64]) -> Vec<f64> {
        let steps = (self.config.t_end.abs() / self.config.dt).round() as usize;
        let mut uhat = self.to_fourier(u0);
        for _ in 0..steps {
            self.step(&mut uhat);
        }
        self.to_physical(&uhat)
    }
}

/// Convenience wrapper around [`Evolver::evolve`].
pub fn evolve(u0: &RealField, config: EvolverConfig) -> Result<Trajectory> {
    Evolver::new(config)?.evolve(u0)
}

/// Independent runs, concurrently when `exec` allows.
pub fn evolve_many(
    runs: &[(RealField, EvolverConfig)],
    exec: Execution,
) -> Vec<Result<Trajectory>> {
    par::map(exec, runs, |(u0, cfg)| evolve(u0, *cfg))
}

/// log₂ of the ratio of successive errors when dt is halved twice, each error
/// measured against a run at dt/8.
pub fn observed_order(u0: &RealField, config: EvolverConfig) -> Result<f64> {
    let run = |dt: f64| -> Result<Vec<f64>> {
        Ok(Evolver::new(EvolverConfig { dt, ..config })?.advance(&u0.values))
    };
    let reference = run(config.dt / 8.0)?;
    let err = |u: &[f64]| -> f64 {
        u.iter()
            .zip(&reference)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    };
    let e1 = err(&run(config.dt)?);
    let e2 = err(&run(config.dt / 2.0)?);
    Ok((e1 / e2).log2())
}

// ---------------------------------------------------------------------------
// Output.

/// Field snapshot: the 8-byte magic, n as u64, the half-length and t as f64, then
/// n values, all little-endian.
pub fn write_snapshot<W: Write>(mut w: W, u: &RealField, t: f64) -> io::Result<()> {
    w.write_all(SNAPSHOT_MAGIC)?;
    w.write_all(&(u.grid.n as u64).to_le_bytes())?;
    w.write_all(&(0.5 * u.grid.length()).to_le_bytes())?;
    w.write_all(&t.to_le_bytes())?;
    for v in &u.values {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_snapshot<R: Read>(mut r: R) -> io::Result<(RealField, f64)> {
    let mut header = [0u8; 32];
    r.read_exact(&mut header)?;
    if &header[..8] != SNAPSHOT_MAGIC {
        return Err(io::Error::new(io::ErrorKind::InvalidData, "bad snapshot magic"));
    }
    let word = |k: usize| -> [u8; 8] { header[8 * k..8 * k + 8].try_into().unwrap() };
    let n = u64::from_le_bytes(word(1)) as usize;
    let l = f64::from_le_bytes(word(2));
    let t = f64::from_le_bytes(word(3));
    let grid = Grid::with_points(l, n)
        .map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e.to_string()))?;
    let mut bytes = vec![0u8; 8 * n];
    r.read_exact(&mut bytes)?;
    let values = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok((RealField { grid, values }, t))
}

/// Rows `t,Q,E,wrap`.
pub fn write_diagnostics_csv<W: Write>(mut w: W, d: &ConservedDiagnostics) -> io::Result<()> {
    writeln!(w, "t,Q,E,wrap")?;
    for i in 0..d.t.len() {
        writeln!(w, "{:.10},{:.16e},{:.16e},{:.6e}", d.t[i], d.q[i], d.e[i], d.wrap[i])?;
    }
    Ok(())
}
