//! Uniform grids on [xmin, xmin + n h), Fourier differentiation and quadrature.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub xmin: f64,
    pub h: f64,
    pub n: usize,
}

impl Grid {
    pub fn new(xmin: f64, h: f64, n: usize) -> Result<Self> {
        if n < 16 {
            return Err(Error::GridTooSmall(format!("n = {n} < 16")));
        }
        if !(h > 0.0 && h.is_finite() && xmin.is_finite()) {
            return Err(Error::InvalidParameter(format!("grid spacing h = {h}")));
        }
        Ok(Self { xmin, h, n })
    }

    /// Grid on [-l, l) with spacing close to `h`; n is even so x = 0 is a node.
    pub fn symmetric(l: f64, h: f64) -> Result<Self> {
        if !(l > 0.0 && h > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "half-length {l}, spacing {h}"
            )));
        }
        let mut n = (2.0 * l / h).round() as usize;
        n += n % 2;
        Self::new(-l, 2.0 * l / n as f64, n)
    }

    /// Grid on [-l, l) with exactly `n` points (n even).
    pub fn with_points(l: f64, n: usize) -> Result<Self> {
        if !n.is_multiple_of(2) {
            return Err(Error::InvalidParameter(format!("n = {n} must be even")));
        }
        Self::new(-l, 2.0 * l / n as f64, n)
    }

    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        self.xmin + i as f64 * self.h
    }

    pub fn xs(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.x(i)).collect()
    }

    pub fn length(&self) -> f64 {
        self.n as f64 * self.h
    }

    pub fn xmax(&self) -> f64 {
        self.x(self.n - 1)
    }

    /// Index of the node closest to `x`, clamped to the grid.
    pub fn index_of(&self, x: f64) -> usize {
        let i = ((x - self.xmin) / self.h).round();
        i.clamp(0.0, (self.n - 1) as f64) as usize
    }

    pub fn sample<T>(&self, f: impl Fn(f64) -> T) -> Vec<T> {
        (0..self.n).map(|i| f(self.x(i))).collect()
    }
}

/// Samples of a function on a [`Grid`].
#[derive(Clone, Debug, PartialEq)]
pub struct FieldGrid<T> {
    pub grid: Grid,
    pub values: Vec<T>,
}

pub type RealField = FieldGrid<f64>;
pub type ComplexField = FieldGrid<Complex64>;

impl<T: Copy> FieldGrid<T> {
    pub fn new(grid: Grid, values: Vec<T>) -> Result<Self> {
        if values.len() != grid.n {
            return Err(Error::InvalidParameter(format!(
                "{} samples for a grid of {} points",
                values.len(),
                grid.n
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> T) -> Self {
        Self {
            grid,
            values: grid.sample(f),
        }
    }

    pub fn map<S>(&self, f: impl Fn(T) -> S) -> FieldGrid<S> {
        FieldGrid {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }
}

impl RealField {
    pub fn to_complex(&self) -> ComplexField {
        self.map(|v| Complex64::new(v, 0.0))
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

/// Trapezoid rule on a uniform grid with negligible end values.
pub fn integrate(values: &[f64], h: f64) -> f64 {
    h * values.iter().sum::<f64>()
}

pub fn integrate_c(values: &[Complex64], h: f64) -> Complex64 {
    values.iter().sum::<Complex64>() * h
}

pub fn inner(u: &[f64], v: &[f64], h: f64) -> f64 {
    h * u.iter().zip(v).map(|(a, b)| a * b).sum::<f64>()
}

/// Bilinear (non-conjugating) pairing.
pub fn inner_c(u: &[Complex64], v: &[Complex64], h: f64) -> Complex64 {
    u.iter().zip(v).map(|(a, b)| a * b).sum::<Complex64>() * h
}

pub fn norm_l2(u: &[f64], h: f64) -> f64 {
    inner(u, u, h).sqrt()
}

pub fn norm_l2_c(u: &[Complex64], h: f64) -> f64 {
    (h * u.iter().map(|z| z.norm_sqr()).sum::<f64>()).sqrt()
}

pub fn sup_norm(u: &[f64]) -> f64 {
    u.iter().fold(0.0, |m, v| m.max(v.abs()))
}

pub fn sup_norm_c(u: &[Complex64]) -> f64 {
    u.iter().fold(0.0, |m, v| m.max(v.norm()))
}

/// Fourth-order cumulative integral, F[0] = 0.
pub fn cumulative<T>(f: &[T], h: f64) -> Vec<T>
where
    T: Copy + Default + std::ops::Add<Output = T> + std::ops::Mul<f64, Output = T>,
{
    let n = f.len();
    let mut out = vec![T::default(); n];
    if n < 4 {
        for i in 1..n {
            out[i] = out[i - 1] + (f[i - 1] + f[i]) * (0.5 * h);
        }
        return out;
    }
    let w = h / 24.0;
    for i in 0..n - 1 {
        let cell = if i == 0 {
            f[0] * 9.0 + f[1] * 19.0 + f[2] * -5.0 + f[3]
        } else if i == n - 2 {
            f[n - 4] + f[n - 3] * -5.0 + f[n - 2] * 19.0 + f[n - 1] * 9.0
        } else {
            f[i - 1] * -1.0 + f[i] * 13.0 + f[i + 1] * 13.0 + f[i + 2] * -1.0
        };
        out[i + 1] = out[i] + cell * w;
    }
    out
}

/// FFT plans and wavenumbers for one grid size.
#[derive(Clone)]
pub struct Spectral {
    pub grid: Grid,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    k: Vec<f64>,
}

impl std::fmt::Debug for Spectral {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Spectral")
            .field("grid", &self.grid)
            .finish()
    }
}

impl Spectral {
    pub fn new(grid: Grid) -> Self {
        let mut planner = FftPlanner::new();
        let n = grid.n;
        let dk = 2.0 * std::f64::consts::PI / grid.length();
        let k = (0..n)
            .map(|j| {
                let m = if j < n / 2 {
                    j as f64
                } else {
                    j as f64 - n as f64
                };
                m * dk
            })
            .collect();
        Self {
            grid,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
            k,
        }
    }

    pub fn wavenumbers(&self) -> &[f64] {
        &self.k
    }

    pub fn n(&self) -> usize {
        self.grid.n
    }

    pub fn fft(&self, buf: &mut [Complex64]) {
        self.forward.process(buf);
    }

    /// Inverse transform including the 1/n normalisation.
    pub fn ifft(&self, buf: &mut [Complex64]) {
        self.inverse.process(buf);
        let s = 1.0 / buf.len() as f64;
        buf.iter_mut().for_each(|z| *z *= s);
    }

    /// Multiply the spectrum by `symbol(k)`; the Nyquist mode is zeroed when `kill_nyquist`.
    pub fn apply_symbol_c(
        &self,
        u: &[Complex64],
        symbol: impl Fn(f64) -> Complex64,
        kill_nyquist: bool,
    ) -> Vec<Complex64> {
        let mut buf = u.to_vec();
        self.fft(&mut buf);
        let n = buf.len();
        for (j, z) in buf.iter_mut().enumerate() {
            *z *= if kill_nyquist && j == n / 2 {
                Complex64::new(0.0, 0.0)
            } else {
                symbol(self.k[j])
            };
        }
        self.ifft(&mut buf);
        buf
    }

    pub fn apply_symbol(
        &self,
        u: &[f64],
        symbol: impl Fn(f64) -> Complex64,
        kill_nyquist: bool,
    ) -> Vec<f64> {
        let buf: Vec<Complex64> = u.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.apply_symbol_c(&buf, symbol, kill_nyquist)
            .into_iter()
            .map(|z| z.re)
            .collect()
    }

    /// Derivative of order `m` of a periodic function.
    pub fn derivative_periodic(&self, u: &[f64], m: u32) -> Vec<f64> {
        self.apply_symbol(u, |k| Complex64::new(0.0, k).powu(m), m % 2 == 1)
    }

    pub fn derivative_periodic_c(&self, u: &[Complex64], m: u32) -> Vec<Complex64> {
        self.apply_symbol_c(u, |k| Complex64::new(0.0, k).powu(m), m % 2 == 1)
    }

    /// First derivative of a function tending to (possibly different) constants at
    /// both ends. The jump between the ends is carried by a smooth tanh step whose
    /// derivative is added back analytically.
    pub fn derivative_line(&self, u: &[f64]) -> Vec<f64> {
        let c: Vec<Complex64> = u.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.derivative_line_c(&c)
            .into_iter()
            .map(|z| z.re)
            .collect()
    }

    pub fn derivative_line_c(&self, u: &[Complex64]) -> Vec<Complex64> {
        let n = u.len();
        let jump = u[n - 1] - u[0];
        let scale = u.iter().fold(0.0f64, |m, z| m.max(z.norm()));
        if jump.norm() <= 1e-15 * scale.max(1e-300) {
            return self.derivative_periodic_c(u, 1);
        }
        let g = self.grid;
        let x0 = g.xmin + 0.5 * g.length();
        let w = g.length() / 40.0;
        let step = |x: f64| 0.5 * (1.0 + ((x - x0) / w).tanh());
        let dstep = |x: f64| {
            let s = 1.0 / ((x - x0) / w).cosh();
            0.5 * s * s / w
        };
        let rest: Vec<Complex64> = (0..n).map(|i| u[i] - jump * step(g.x(i))).collect();
        let mut d = self.derivative_periodic_c(&rest, 1);
        for (i, di) in d.iter_mut().enumerate() {
            *di += jump * dstep(g.x(i));
        }
        d
    }

    /// Second derivative of a function tending to constants at both ends.
    pub fn second_derivative_line(&self, u: &[f64]) -> Vec<f64> {
        let d = self.derivative_line(u);
        self.derivative_periodic(&d, 1)
    }

    pub fn second_derivative_line_c(&self, u: &[Complex64]) -> Vec<Complex64> {
        let d = self.derivative_line_c(u);
        self.derivative_periodic_c(&d, 1)
    }

    /// Periodic translation `u(x - d)` by a Fourier phase.
    pub fn translate(&self, u: &[f64], d: f64) -> Vec<f64> {
        self.apply_symbol(u, |k| Complex64::from_polar(1.0, -k * d), true)
    }
}
