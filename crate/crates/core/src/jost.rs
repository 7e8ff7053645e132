//! Jost and auxiliary solutions of u''' - u' + λu + (V u)' = 0, V = pφ^{p-1} (c = 1),
//! the Evans function, connection coefficients and Wronskians.
//!
//! A solution f = e^{μ_k x} M is stored through its normalised factor M together
//! with M' and M''. Each M solves
//!
//! M(x) = 1 + Σⱼ σⱼ aⱼμⱼ ∫ e^{(μⱼ-μ_k)(x-y)} V(y) M(y) dy,
//!
//! where every integral runs towards the side on which its exponential decays
//! (σ = +1 for ∫ₓ, σ = -1 for ∫^x). The kernels are products of an exponential and
//! a smooth factor; cell integrals use exact exponential moments against cubic
//! interpolants, so all sweeps are O(n) and fourth-order accurate.

use num_complex::Complex64 as C;

use crate::cubic_spectrum::{solve_cubic, SpectralPoint};
use crate::error::{Error, Result};
use crate::grid::{ComplexField, Grid};
use crate::par::{self, Execution};
use crate::profiles::{self, SolitonParams};

const ZERO: C = C { re: 0.0, im: 0.0 };
const ONE: C = C { re: 1.0, im: 0.0 };

/// Radius of the circle used for removable singularities at λ = 0.
pub const CONTOUR_RADIUS: f64 = 0.2;
/// Nodes on that circle.
pub const CONTOUR_NODES: usize = 32;
/// Below this |λ|, c₀ is evaluated by the Cauchy formula.
pub const C0_DIRECT_THRESHOLD: f64 = 0.1;

/// Symmetric grid wide enough that V = pφ^{p-1} is below 1e-14 at the ends.
pub fn jost_grid(p: f64, h: f64) -> Result<Grid> {
    let l = (36.0 / (p - 1.0)).max(40.0);
    Grid::symmetric(l, h)
}

// ---------------------------------------------------------------------------
// Exponential product-integration weights.

/// ∫₀¹ e^{-zu} u^k du for k = 0..3.
fn moments(z: C) -> [C; 4] {
    if z.norm() < 0.5 {
        let mut out = [ZERO; 4];
        for (k, o) in out.iter_mut().enumerate() {
            let mut term = ONE;
            for n in 0..30 {
                if n > 0 {
                    term *= -z / n as f64;
                }
                *o += term / (n + k + 1) as f64;
            }
        }
        out
    } else {
        let e = (-z).exp();
        let e0 = (1.0 - e) / z;
        let e1 = (e0 - e) / z;
        let e2 = (2.0 * e1 - e) / z;
        let e3 = (3.0 * e2 - e) / z;
        [e0, e1, e2, e3]
    }
}

/// ∫₀¹ e^{-zu} ℓ_m(u) du for the Lagrange basis on `nodes`.
fn lagrange_weights(nodes: [f64; 4], mom: &[C; 4]) -> [C; 4] {
    let mut out = [ZERO; 4];
    for m in 0..4 {
        // Expand Π_{l≠m} (u - n_l)/(n_m - n_l) into monomial coefficients.
        let mut poly = [1.0, 0.0, 0.0, 0.0];
        let mut denom = 1.0;
        for l in 0..4 {
            if l == m {
                continue;
            }
            let mut next = [0.0; 4];
            for k in 0..4 {
                if k + 1 < 4 {
                    next[k + 1] += poly[k];
                }
                next[k] -= nodes[l] * poly[k];
            }
            poly = next;
            denom *= nodes[m] - nodes[l];
        }
        out[m] = (0..4).map(|k| mom[k] * (poly[k] / denom)).sum();
    }
    out
}

#[derive(Clone, Copy, Debug)]
struct Weights {
    decay: C,
    fwd: [C; 4],
    mid: [C; 4],
    back: [C; 4],
    linear: [C; 2],
}

impl Weights {
    fn new(z: C) -> Self {
        let mom = moments(z);
        Self {
            decay: (-z).exp(),
            fwd: lagrange_weights([0.0, 1.0, 2.0, 3.0], &mom),
            mid: lagrange_weights([-1.0, 0.0, 1.0, 2.0], &mom),
            back: lagrange_weights([-2.0, -1.0, 0.0, 1.0], &mom),
            linear: [mom[0] - mom[1], mom[1]],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Dir {
    /// ∫_{left end}^{x}
    Left,
    /// ∫_{x}^{right end}
    Right,
}

/// I(x_i) = ∫ e^{κ(x_i - y)} g(y) dy over [x_lo, x_i] (Left) or [x_i, x_hi] (Right),
/// for i in lo..=hi. Output is indexed from lo.
pub(crate) fn sweep(g: &[C], lo: usize, hi: usize, kappa: C, h: f64, dir: Dir) -> Vec<C> {
    let len = hi - lo + 1;
    let mut out = vec![ZERO; len];
    let z = match dir {
        Dir::Right => kappa * h,
        Dir::Left => -kappa * h,
    };
    let w = Weights::new(z);
    // `at(i, u)` is g at offset u from node i, in the direction of integration.
    match dir {
        Dir::Right => {
            for i in (lo..hi).rev() {
                let local = cell(&w, |u: isize| g[(i as isize + u) as usize], i - lo, hi - i);
                out[i - lo] = w.decay * out[i + 1 - lo] + h * local;
            }
        }
        Dir::Left => {
            for i in lo + 1..=hi {
                let local = cell(&w, |u: isize| g[(i as isize - u) as usize], hi - i, i - lo);
                out[i - lo] = w.decay * out[i - 1 - lo] + h * local;
            }
        }
    }
    out
}

/// Cell integral with a cubic interpolant chosen from the nodes available:
/// `behind` nodes exist at negative offsets, `ahead` at positive offsets (≥ 1).
#[inline]
fn cell(w: &Weights, at: impl Fn(isize) -> C, behind: usize, ahead: usize) -> C {
    if behind >= 1 && ahead >= 2 {
        w.mid[0] * at(-1) + w.mid[1] * at(0) + w.mid[2] * at(1) + w.mid[3] * at(2)
    } else if ahead >= 3 {
        w.fwd[0] * at(0) + w.fwd[1] * at(1) + w.fwd[2] * at(2) + w.fwd[3] * at(3)
    } else if behind >= 2 {
        w.back[0] * at(-2) + w.back[1] * at(-1) + w.back[2] * at(0) + w.back[3] * at(1)
    } else {
        w.linear[0] * at(0) + w.linear[1] * at(1)
    }
}

// ---------------------------------------------------------------------------
// Normalised solutions.

/// f = e^{μx} M on grid indices lo..=hi, with M, M', M''.
#[derive(Clone, Debug)]
pub struct Normalized {
    pub mu: C,
    pub lo: usize,
    pub hi: usize,
    pub m: Vec<C>,
    pub dm: Vec<C>,
    pub d2m: Vec<C>,
}

impl Normalized {
    pub fn contains(&self, i: usize) -> bool {
        i >= self.lo && i <= self.hi
    }

    #[inline]
    pub fn at(&self, i: usize) -> (C, C, C) {
        let j = i - self.lo;
        (self.m[j], self.dm[j], self.d2m[j])
    }

    /// (f, f', f'') at node i, exponential factor included.
    pub fn f_at(&self, grid: &Grid, i: usize) -> [C; 3] {
        let (m, dm, d2m) = self.at(i);
        let e = (self.mu * grid.x(i)).exp();
        let mu = self.mu;
        [
            e * m,
            e * (mu * m + dm),
            e * (mu * mu * m + 2.0 * mu * dm + d2m),
        ]
    }

    /// (f, f', f'') divided by e^{μx}.
    pub fn jet_at(&self, i: usize) -> [C; 3] {
        let (m, dm, d2m) = self.at(i);
        let mu = self.mu;
        [m, mu * m + dm, mu * mu * m + 2.0 * mu * dm + d2m]
    }

    /// Samples of f on lo..=hi (exponential factor applied).
    pub fn f_values(&self, grid: &Grid) -> Vec<C> {
        (self.lo..=self.hi)
            .map(|i| (self.mu * grid.x(i)).exp() * self.m[i - self.lo])
            .collect()
    }
}

/// e^{-(μ_a+μ_b)x} b_ab(x) at node i, from the normalised factors.
pub fn wronskian_normalized(a: &Normalized, b: &Normalized, i: usize) -> C {
    let (ma, dma, _) = a.at(i);
    let (mb, dmb, _) = b.at(i);
    (b.mu - a.mu) * ma * mb + ma * dmb - dma * mb
}

/// b_ij = f_i f_j' - f_i' f_j on the common index range.
pub fn wronskian_b(fi: &Normalized, fj: &Normalized, grid: &Grid) -> ComplexField {
    let lo = fi.lo.max(fj.lo);
    let hi = fi.hi.min(fj.hi);
    let mut values = vec![ZERO; grid.n];
    for (i, v) in values.iter_mut().enumerate().take(hi + 1).skip(lo) {
        *v = ((fi.mu + fj.mu) * grid.x(i)).exp() * wronskian_normalized(fi, fj, i);
    }
    ComplexField {
        grid: *grid,
        values,
    }
}

/// Potential samples on the grid.
#[derive(Clone, Debug)]
struct Potential {
    v: Vec<f64>,
}

impl Potential {
    fn new(grid: &Grid, params: &SolitonParams) -> Self {
        Self {
            v: grid.sample(|x| profiles::potential(x, params)),
        }
    }
}

struct Problem<'a> {
    sp: &'a SpectralPoint,
    grid: &'a Grid,
    params: &'a SolitonParams,
    pot: &'a Potential,
}

impl Problem<'_> {
    fn coeff(&self, j: usize, dir: Dir) -> C {
        let c = self.sp.a[j] * self.sp.mu[j];
        match dir {
            Dir::Right => c,
            Dir::Left => -c,
        }
    }

    fn kappa(&self, j: usize, k: usize) -> C {
        self.sp.mu[j] - self.sp.mu[k]
    }

    /// M, M', M'' from the three integrals I_j of the representation.
    fn assemble(
        &self,
        k: usize,
        dirs: [Dir; 3],
        ints: &[Vec<C>; 3],
        g: &[C],
        lo: usize,
        hi: usize,
    ) -> Normalized {
        let len = hi - lo + 1;
        let mut m = vec![ONE; len];
        let mut dm = vec![ZERO; len];
        let mut d2m = vec![ZERO; len];
        for j in 0..3 {
            let cj = self.coeff(j, dirs[j]);
            let kj = self.kappa(j, k);
            for t in 0..len {
                let v = cj * ints[j][t];
                m[t] += v;
                dm[t] += kj * v;
                d2m[t] += kj * kj * v;
            }
        }
        // Σ aⱼμⱼ = 0 and Σ aⱼμⱼ(μⱼ-μ_k) = 1 give M' = Σ σcκI and M'' = Σ σcκ²I - VM.
        for t in 0..len {
            d2m[t] -= g[lo + t];
        }
        Normalized {
            mu: self.sp.mu[k],
            lo,
            hi,
            m,
            dm,
            d2m,
        }
    }

    /// Implicit marching for a representation with all integrals in one direction.
    fn march(&self, k: usize, dir: Dir) -> Normalized {
        let n = self.grid.n;
        let h = self.grid.h;
        let v = &self.pot.v;
        let w: Vec<Weights> = (0..3)
            .map(|j| {
                let kap = self.kappa(j, k);
                Weights::new(match dir {
                    Dir::Right => kap * h,
                    Dir::Left => -kap * h,
                })
            })
            .collect();
        let cj: Vec<C> = (0..3).map(|j| self.coeff(j, dir)).collect();
        let mut ints = [vec![ZERO; n], vec![ZERO; n], vec![ZERO; n]];
        let mut m = vec![ONE; n];
        let mut g = vec![ZERO; n];
        let order: Vec<usize> = match dir {
            Dir::Right => (0..n).rev().collect(),
            Dir::Left => (0..n).collect(),
        };
        let first = order[0];
        g[first] = C::new(v[first], 0.0);
        for step in 1..n {
            let i = order[step];
            let prev = order[step - 1];
            let at = |u: usize| order[step - u];
            let mut known = [ZERO; 3];
            let mut diag = ZERO;
            for j in 0..3 {
                let local = if step >= 3 {
                    w[j].fwd[1] * g[at(1)] + w[j].fwd[2] * g[at(2)] + w[j].fwd[3] * g[at(3)]
                } else {
                    w[j].linear[1] * g[prev]
                };
                let w0 = if step >= 3 {
                    w[j].fwd[0]
                } else {
                    w[j].linear[0]
                };
                known[j] = w[j].decay * ints[j][prev] + h * local;
                diag += cj[j] * h * w0;
            }
            let rhs: C = ONE + (0..3).map(|j| cj[j] * known[j]).sum::<C>();
            let mi = rhs / (ONE - diag * v[i]);
            m[i] = mi;
            g[i] = mi * v[i];
            for j in 0..3 {
                let w0 = if step >= 3 {
                    w[j].fwd[0]
                } else {
                    w[j].linear[0]
                };
                ints[j][i] = known[j] + h * w0 * g[i];
            }
        }
        self.assemble(k, [dir; 3], &ints, &g, 0, n - 1)
    }

    /// Measured sup-norm of the integral operator on lo..=hi.
    fn operator_norm(&self, k: usize, dirs: [Dir; 3], lo: usize, hi: usize) -> f64 {
        let g: Vec<C> = self.pot.v.iter().map(|&v| C::new(v, 0.0)).collect();
        let mut total = vec![0.0; hi - lo + 1];
        for j in 0..3 {
            let kap = C::new(self.kappa(j, k).re, 0.0);
            let cj = self.coeff(j, dirs[j]).norm();
            let s = sweep(&g, lo, hi, kap, self.grid.h, dirs[j]);
            for (t, v) in s.iter().enumerate() {
                total[t] += cj * v.re;
            }
        }
        total.into_iter().fold(0.0, f64::max)
    }

    fn fixed_point(&self, k: usize, dirs: [Dir; 3], lo: usize, hi: usize) -> Result<Normalized> {
        let h = self.grid.h;
        let n = self.grid.n;
        let v = &self.pot.v;
        let mut m = vec![ONE; hi - lo + 1];
        let mut g = vec![ZERO; n];
        for _ in 0..400 {
            for t in 0..m.len() {
                g[lo + t] = m[t] * v[lo + t];
            }
            let ints: [Vec<C>; 3] =
                std::array::from_fn(|j| sweep(&g, lo, hi, self.kappa(j, k), h, dirs[j]));
            let next = self.assemble(k, dirs, &ints, &g, lo, hi);
            let diff = next
                .m
                .iter()
                .zip(&m)
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max);
            m = next.m.clone();
            if diff <= 1e-13 {
                for t in 0..m.len() {
                    g[lo + t] = m[t] * v[lo + t];
                }
                let ints: [Vec<C>; 3] =
                    std::array::from_fn(|j| sweep(&g, lo, hi, self.kappa(j, k), h, dirs[j]));
                return Ok(self.assemble(k, dirs, &ints, &g, lo, hi));
            }
        }
        Err(Error::NonConvergence(
            "fixed-point iteration for an auxiliary Jost solution".into(),
        ))
    }

    /// Largest threshold index in [lo_bound, hi_bound] (for a left region) or smallest
    /// (for a right region) where the operator norm is at most ½.
    fn threshold(
        &self,
        k: usize,
        dirs: [Dir; 3],
        left_region: bool,
        limit: usize,
    ) -> Result<usize> {
        let n = self.grid.n;
        let norm_at = |idx: usize| {
            if left_region {
                self.operator_norm(k, dirs, 0, idx)
            } else {
                self.operator_norm(k, dirs, idx, n - 1)
            }
        };
        // Region must leave at least 10% of the grid.
        let (mut a, mut b) = if left_region {
            (n / 10, limit)
        } else {
            (limit, n - 1 - n / 10)
        };
        let edge = if left_region { a } else { b };
        let base = norm_at(edge);
        if base > 0.9 {
            return Err(Error::ContractionFailure { norm: base });
        }
        if left_region {
            if norm_at(b) <= 0.5 {
                return Ok(b);
            }
            if base > 0.5 {
                return Ok(a);
            }
            while b - a > 1 {
                let mid = (a + b) / 2;
                if norm_at(mid) <= 0.5 {
                    a = mid
                } else {
                    b = mid
                }
            }
            Ok(a)
        } else {
            if norm_at(a) <= 0.5 {
                return Ok(a);
            }
            if base > 0.5 {
                return Ok(b);
            }
            while b - a > 1 {
                let mid = (a + b) / 2;
                if norm_at(mid) <= 0.5 {
                    b = mid
                } else {
                    a = mid
                }
            }
            Ok(b)
        }
    }

    /// Extend a solution by RK4 on the third-order ODE for M up to (or down to) `target`.
    fn continue_to(&self, sol: &mut Normalized, target: usize) {
        let mu = sol.mu;
        let params = *self.params;
        let rhs = |x: f64, y: [C; 3]| -> [C; 3] {
            let v = profiles::potential(x, &params);
            let dv = profiles::potential_prime(x, &params);
            [
                y[1],
                y[2],
                -3.0 * mu * y[2] - (3.0 * mu * mu + v - 1.0) * y[1] - (mu * v + dv) * y[0],
            ]
        };
        let rk4 = |x: f64, y: [C; 3], h: f64| -> [C; 3] {
            let add =
                |a: [C; 3], b: [C; 3], s: f64| [a[0] + b[0] * s, a[1] + b[1] * s, a[2] + b[2] * s];
            let k1 = rhs(x, y);
            let k2 = rhs(x + 0.5 * h, add(y, k1, 0.5 * h));
            let k3 = rhs(x + 0.5 * h, add(y, k2, 0.5 * h));
            let k4 = rhs(x + h, add(y, k3, h));
            std::array::from_fn(|c| y[c] + (k1[c] + 2.0 * k2[c] + 2.0 * k3[c] + k4[c]) * (h / 6.0))
        };
        let g = self.grid;
        if target > sol.hi {
            let (m, dm, d2m) = sol.at(sol.hi);
            let mut y = [m, dm, d2m];
            for i in sol.hi..target {
                y = rk4(g.x(i), y, g.h);
                sol.m.push(y[0]);
                sol.dm.push(y[1]);
                sol.d2m.push(y[2]);
            }
            sol.hi = target;
        } else if target < sol.lo {
            let (m, dm, d2m) = sol.at(sol.lo);
            let mut y = [m, dm, d2m];
            let mut front = Vec::with_capacity(sol.lo - target);
            for i in (target + 1..=sol.lo).rev() {
                y = rk4(g.x(i), y, -g.h);
                front.push(y);
            }
            front.reverse();
            let count = front.len();
            sol.m.splice(0..0, front.iter().map(|y| y[0]));
            sol.dm.splice(0..0, front.iter().map(|y| y[1]));
            sol.d2m.splice(0..0, front.iter().map(|y| y[2]));
            sol.lo -= count;
        }
    }
}

fn check_params(grid: &Grid, params: &SolitonParams) -> Result<()> {
    params.validate()?;
    if (params.c - 1.0).abs() > 1e-15 {
        return Err(Error::InvalidParameter(
            "Jost solutions are built for c = 1".into(),
        ));
    }
    if grid.xmax() < 40.0 - grid.h - 1e-9 || grid.xmin > -40.0 {
        return Err(Error::GridTooSmall("Jost grid must cover [-40, 40]".into()));
    }
    if !grid.n.is_multiple_of(2) || grid.x(grid.n / 2).abs() > 1e-9 {
        return Err(Error::InvalidParameter(
            "Jost grid must be symmetric with a node at 0".into(),
        ));
    }
    Ok(())
}

fn with_problem<T>(
    lambda: C,
    grid: &Grid,
    params: &SolitonParams,
    f: impl FnOnce(&Problem) -> Result<T>,
) -> Result<T> {
    check_params(grid, params)?;
    let sp = solve_cubic(lambda)?;
    let pot = Potential::new(grid, params);
    f(&Problem {
        sp: &sp,
        grid,
        params,
        pot: &pot,
    })
}

/// m₁(·, λ), normalised so that m₁ → 1 as x → +∞.
pub fn solve_m1(lambda: C, grid: &Grid, params: &SolitonParams) -> Result<Normalized> {
    with_problem(lambda, grid, params, |pr| Ok(pr.march(0, Dir::Right)))
}

/// m₃(·, λ), normalised so that m₃ → 1 as x → -∞.
pub fn solve_m3(lambda: C, grid: &Grid, params: &SolitonParams) -> Result<Normalized> {
    with_problem(lambda, grid, params, |pr| Ok(pr.march(2, Dir::Left)))
}

const M2_DIRS: [Dir; 3] = [Dir::Left, Dir::Left, Dir::Right];
const F_DIRS: [[Dir; 3]; 3] = [
    [Dir::Left, Dir::Right, Dir::Right],
    [Dir::Left, Dir::Right, Dir::Right],
    [Dir::Left, Dir::Left, Dir::Right],
];

/// Threshold x₀ for m̃₂ at λ: the largest node ≤ 0 where the operator norm on (-∞, x₀] is ≤ ½.
pub fn m2tilde_threshold(lambda: C, grid: &Grid, params: &SolitonParams) -> Result<f64> {
    with_problem(lambda, grid, params, |pr| {
        Ok(grid.x(pr.threshold(1, M2_DIRS, true, grid.n / 2)?))
    })
}

fn m2tilde_in(pr: &Problem, x0: Option<f64>) -> Result<(Normalized, f64)> {
    let grid = pr.grid;
    let mid = grid.n / 2;
    let i0 = match x0 {
        Some(x) => {
            let i = grid.index_of(x).min(mid);
            let norm = pr.operator_norm(1, M2_DIRS, 0, i);
            if norm > 0.9 {
                return Err(Error::ContractionFailure { norm });
            }
            i
        }
        None => pr.threshold(1, M2_DIRS, true, mid)?,
    };
    let mut sol = pr.fixed_point(1, M2_DIRS, 0, i0)?;
    pr.continue_to(&mut sol, mid);
    Ok((sol, grid.x(i0)))
}

/// m̃₂(·, λ) on x ≤ 0: fixed point on (-∞, x₀], ODE continuation on [x₀, 0].
pub fn solve_m2tilde(
    lambda: C,
    grid: &Grid,
    params: &SolitonParams,
    x0: Option<f64>,
) -> Result<Normalized> {
    with_problem(lambda, grid, params, |pr| m2tilde_in(pr, x0).map(|r| r.0))
}

fn solve_f_in(pr: &Problem, j: usize) -> Result<Normalized> {
    let grid = pr.grid;
    let mid = grid.n / 2;
    let k = j - 1;
    let dirs = F_DIRS[k];
    if j == 1 {
        let i1 = pr.threshold(k, dirs, true, mid)?;
        let mut sol = pr.fixed_point(k, dirs, 0, i1)?;
        pr.continue_to(&mut sol, mid);
        Ok(sol)
    } else {
        let i2 = pr.threshold(k, dirs, false, mid)?;
        let mut sol = pr.fixed_point(k, dirs, i2, grid.n - 1)?;
        pr.continue_to(&mut sol, mid);
        Ok(sol)
    }
}

/// Auxiliary solution Fⱼ = e^{μⱼx} Mⱼ: F₁ on x ≤ 0 with M₁ → 1 at -∞; F₂, F₃ on
/// x ≥ 0 with M₂, M₃ → 1 at +∞.
#[allow(non_snake_case)]
pub fn solve_F(j: usize, lambda: C, grid: &Grid, params: &SolitonParams) -> Result<Normalized> {
    if !(1..=3).contains(&j) {
        return Err(Error::InvalidParameter(format!("auxiliary index {j}")));
    }
    with_problem(lambda, grid, params, |pr| solve_f_in(pr, j))
}

/// D(λ) = lim_{x→-∞} m₁(x, λ), with the spread over the outer 10% of the grid.
pub fn evans_from_m1(m1: &Normalized) -> (C, f64) {
    let tail = (m1.m.len() / 10).max(2);
    let d = m1.m[0];
    let var = m1.m[..tail]
        .iter()
        .map(|z| (z - d).norm())
        .fold(0.0, f64::max);
    (d, var)
}

fn settled(d: C, var: f64) -> Result<C> {
    if var > 1e-6 * d.norm().max(1.0) {
        return Err(Error::LimitNotSettled { variation: var });
    }
    Ok(d)
}

/// Evans function on an explicit grid.
pub fn evans_on(lambda: C, grid: &Grid, params: &SolitonParams) -> Result<C> {
    let m1 = solve_m1(lambda, grid, params)?;
    let (d, var) = evans_from_m1(&m1);
    settled(d, var)
}

/// Evans function with the default grid (h = 0.01).
pub fn evans(lambda: C, params: &SolitonParams) -> Result<C> {
    evans_on(lambda, &jost_grid(params.p, 0.01)?, params)
}

/// Evans values on a list of points.
pub fn evans_scan(
    lambdas: &[C],
    params: &SolitonParams,
    grid: &Grid,
    exec: Execution,
) -> Vec<Result<C>> {
    par::map(exec, lambdas, |&l| evans_on(l, grid, params))
}

/// D''(0) from symmetric second differences of D along iℝ at steps τ and τ/2,
/// Richardson-extrapolated to remove the τ² term.
pub fn evans_second_derivative_fit(tau: f64, grid: &Grid, params: &SolitonParams) -> Result<f64> {
    let d0 = evans_on(ZERO, grid, params)?;
    let second = |t: f64| -> Result<f64> {
        let dp = evans_on(C::new(0.0, t), grid, params)?;
        let dm = evans_on(C::new(0.0, -t), grid, params)?;
        Ok(-(dp + dm - 2.0 * d0).re / (t * t))
    };
    let (coarse, fine) = (second(tau)?, second(0.5 * tau)?);
    Ok((4.0 * fine - coarse) / 3.0)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Connection {
    pub c21: C,
    pub c22: C,
    pub c23: C,
    pub c31: C,
    pub c32: C,
    pub c33: C,
    pub cond: f64,
}

fn det3(m: &[[C; 3]; 3]) -> C {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

fn inv3(m: &[[C; 3]; 3]) -> Option<[[C; 3]; 3]> {
    let d = det3(m);
    if d.norm() == 0.0 {
        return None;
    }
    let cof = |r: usize, c: usize| {
        let rs: Vec<usize> = (0..3).filter(|&x| x != r).collect();
        let cs: Vec<usize> = (0..3).filter(|&x| x != c).collect();
        let minor = m[rs[0]][cs[0]] * m[rs[1]][cs[1]] - m[rs[0]][cs[1]] * m[rs[1]][cs[0]];
        if (r + c).is_multiple_of(2) {
            minor
        } else {
            -minor
        }
    };
    Some(std::array::from_fn(|i| {
        std::array::from_fn(|j| cof(j, i) / d)
    }))
}

fn norm1(m: &[[C; 3]; 3]) -> f64 {
    (0..3)
        .map(|c| (0..3).map(|r| m[r][c].norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// 3×3 Wronskian matrix: columns are the jets (f, f', f'') at node i divided by e^{μx}.
fn jet_matrix(cols: [&Normalized; 3], i: usize) -> [[C; 3]; 3] {
    let jets = cols.map(|s| s.jet_at(i));
    std::array::from_fn(|r| std::array::from_fn(|c| jets[c][r]))
}

/// The Jost bundle at one λ.
#[derive(Clone, Debug)]
pub struct JostBundle {
    pub lambda: C,
    pub point: SpectralPoint,
    pub grid: Grid,
    pub params: SolitonParams,
    pub m1: Normalized,
    pub m3: Normalized,
    /// m̃₂ on x ≤ 0.
    pub m2tilde: Normalized,
    pub x0: f64,
    /// M₂, M₃ of the auxiliary solutions F₂, F₃ on x ≥ 0.
    pub aux2: Normalized,
    pub aux3: Normalized,
    /// f₂ normalised by e^{μ₂x}, on the full grid.
    pub m2: Normalized,
    /// D(λ) from m₁ at -∞, and D(-λ) from m₃ at +∞.
    pub evans: C,
    pub evans_minus: C,
    pub evans_variation: f64,
    pub connection: Connection,
    pub c0: C,
    /// F₃-coefficient of f₂ in the matching system.
    pub f2_f3_coefficient: C,
}

#[derive(Clone, Copy, Debug, Default)]
pub struct BundleOptions {
    /// Fixed threshold for m̃₂ (adaptive when `None`).
    pub x0: Option<f64>,
    /// Use this c₀ instead of computing one.
    pub c0: Option<C>,
    /// Take c₀ = λc₂₃/c₃₃ at every λ ≠ 0, so that f₂ matches its two one-sided
    /// representations exactly (at the price of relative accuracy ~ |λ|⁻² in c₀).
    pub direct_c0: bool,
}

struct Pieces {
    point: SpectralPoint,
    m1: Normalized,
    m3: Normalized,
    m2tilde: Normalized,
    x0: f64,
    aux2: Normalized,
    aux3: Normalized,
    evans: C,
    evans_minus: C,
    evans_variation: f64,
    connection: Connection,
}

fn pieces(lambda: C, grid: &Grid, params: &SolitonParams, x0: Option<f64>) -> Result<Pieces> {
    with_problem(lambda, grid, params, |pr| {
        let m1 = pr.march(0, Dir::Right);
        let m3 = pr.march(2, Dir::Left);
        let (m2tilde, x0) = m2tilde_in(pr, x0)?;
        let aux2 = solve_f_in(pr, 2)?;
        let aux3 = solve_f_in(pr, 3)?;
        let (evans, var) = evans_from_m1(&m1);
        let evans_minus = *m3.m.last().unwrap();
        let mid = grid.n / 2;
        let a = jet_matrix([&m1, &aux2, &aux3], mid);
        let inv = inv3(&a).ok_or(Error::IllConditionedMatch {
            cond: f64::INFINITY,
        })?;
        let cond = norm1(&a) * norm1(&inv);
        if cond > 1e10 {
            return Err(Error::IllConditionedMatch { cond });
        }
        let solve = |b: [C; 3]| -> [C; 3] {
            std::array::from_fn(|r| (0..3).map(|c| inv[r][c] * b[c]).sum())
        };
        let t2 = solve(m2tilde.jet_at(mid));
        let t3 = solve(m3.jet_at(mid));
        let connection = Connection {
            c21: t2[0],
            c22: t2[1],
            c23: t2[2],
            c31: t3[0],
            c32: t3[1],
            c33: t3[2],
            cond,
        };
        Ok(Pieces {
            point: *pr.sp,
            m1,
            m3,
            m2tilde,
            x0,
            aux2,
            aux3,
            evans,
            evans_minus,
            evans_variation: var,
            connection,
        })
    })
}

impl JostBundle {
    pub fn new(lambda: C, grid: &Grid, params: &SolitonParams) -> Result<Self> {
        Self::with_options(lambda, grid, params, BundleOptions::default())
    }

    pub fn with_options(
        lambda: C,
        grid: &Grid,
        params: &SolitonParams,
        opts: BundleOptions,
    ) -> Result<Self> {
        let x0 = match opts.x0 {
            Some(x) => Some(x),
            None if lambda.norm() < C0_DIRECT_THRESHOLD && opts.c0.is_none() && !opts.direct_c0 => {
                Some(contour_threshold(grid, params)?)
            }
            None => None,
        };
        let pc = pieces(lambda, grid, params, x0)?;
        let c0 = match opts.c0 {
            Some(c) => c,
            // c₃₃ = D(-λ); dividing by the matched c₃₃ removes the F₃ part of f₂ exactly.
            None if lambda.norm() >= C0_DIRECT_THRESHOLD || (opts.direct_c0 && lambda.norm() > 0.0) => {
                lambda * pc.connection.c23 / pc.connection.c33
            }
            None => c0_contour(lambda, grid, params, pc.x0)?,
        };
        Ok(Self::assemble(lambda, *grid, *params, pc, c0))
    }

    fn assemble(lambda: C, grid: Grid, params: SolitonParams, pc: Pieces, c0: C) -> Self {
        let n = grid.n;
        let mid = n / 2;
        let mu = pc.point.mu;
        let cn = pc.connection;
        let a = lambda * cn.c21 - c0 * cn.c31;
        let b = lambda * cn.c22 - c0 * cn.c32;
        let f3coef = lambda * cn.c23 - c0 * cn.c33;
        let mut m = vec![ZERO; n];
        let mut dm = vec![ZERO; n];
        let mut d2m = vec![ZERO; n];
        let shifted = |s: &Normalized, kap: C, x: f64, i: usize| -> (C, C, C) {
            let (u, du, d2u) = s.at(i);
            let e = (kap * x).exp();
            (
                e * u,
                e * (kap * u + du),
                e * (kap * kap * u + 2.0 * kap * du + d2u),
            )
        };
        for i in 0..n {
            let x = grid.x(i);
            let (v, dv, d2v) = if i <= mid {
                let (t, dt, d2t) = pc.m2tilde.at(i);
                let (s, ds, d2s) = shifted(&pc.m3, mu[2] - mu[1], x, i);
                (
                    lambda * t - c0 * s,
                    lambda * dt - c0 * ds,
                    lambda * d2t - c0 * d2s,
                )
            } else {
                let (s, ds, d2s) = shifted(&pc.m1, mu[0] - mu[1], x, i);
                let (t, dt, d2t) = pc.aux2.at(i);
                (a * s + b * t, a * ds + b * dt, a * d2s + b * d2t)
            };
            m[i] = v;
            dm[i] = dv;
            d2m[i] = d2v;
        }
        let m2 = Normalized {
            mu: mu[1],
            lo: 0,
            hi: n - 1,
            m,
            dm,
            d2m,
        };
        Self {
            lambda,
            point: pc.point,
            grid,
            params,
            m1: pc.m1,
            m3: pc.m3,
            m2tilde: pc.m2tilde,
            x0: pc.x0,
            aux2: pc.aux2,
            aux3: pc.aux3,
            m2,
            evans: pc.evans,
            evans_minus: pc.evans_minus,
            evans_variation: pc.evans_variation,
            connection: cn,
            c0,
            f2_f3_coefficient: f3coef,
        }
    }

    /// 3×3 Wronskian W[f₁, f₂, f₃] at node i.
    pub fn wronskian_at(&self, i: usize) -> C {
        det3(&jet_matrix([&self.m1, &self.m2, &self.m3], i))
    }

    /// b₁₃ e^{μ₂x}, b₂₃ e^{μ₁x} and b₁₂ e^{μ₃x} at node i.
    pub fn normalized_wronskians(&self, i: usize) -> (C, C, C) {
        (
            wronskian_normalized(&self.m1, &self.m3, i),
            wronskian_normalized(&self.m2, &self.m3, i),
            wronskian_normalized(&self.m1, &self.m2, i),
        )
    }

    /// b̃₃₂ = f₃ f̃₂' - f₃' f̃₂ on x ≤ 0.
    pub fn b32_tilde(&self) -> ComplexField {
        wronskian_b(&self.m3, &self.m2tilde, &self.grid)
    }

    pub fn b12_tilde(&self) -> ComplexField {
        wronskian_b(&self.m1, &self.m2tilde, &self.grid)
    }
}

/// c₀ near λ = 0 through the Cauchy integral over |w| = CONTOUR_RADIUS, with one
/// fixed threshold x₀ so that c₀(w) is analytic in w.
fn c0_contour(lambda: C, grid: &Grid, params: &SolitonParams, x0: f64) -> Result<C> {
    let nodes = contour_nodes();
    let vals = par::map(Execution::Parallel, &nodes, |&w| -> Result<C> {
        let pc = pieces(w, grid, params, Some(x0))?;
        Ok(w * pc.connection.c23 / pc.connection.c33)
    });
    let mut acc = ZERO;
    for (w, v) in nodes.iter().zip(vals) {
        acc += v? * w / (w - lambda);
    }
    Ok(acc / nodes.len() as f64)
}

/// One m̃₂ threshold valid on the whole contour (and inside it): the smallest of the
/// thresholds at the contour nodes.
pub fn contour_threshold(grid: &Grid, params: &SolitonParams) -> Result<f64> {
    let nodes = contour_nodes();
    let xs = par::map(Execution::Parallel, &nodes, |&w| m2tilde_threshold(w, grid, params));
    xs.into_iter()
        .try_fold(f64::INFINITY, |acc, x| x.map(|x| acc.min(x)))
}

pub fn contour_nodes() -> Vec<C> {
    (0..CONTOUR_NODES)
        .map(|k| {
            C::from_polar(
                CONTOUR_RADIUS,
                2.0 * std::f64::consts::PI * (k as f64 + 0.5) / CONTOUR_NODES as f64,
            )
        })
        .collect()
}

/// Connection coefficients, c₀ and f₂ (as a complex field, on the full grid).
pub fn connection_and_f2(
    lambda: C,
    grid: &Grid,
    params: &SolitonParams,
) -> Result<(Connection, C, ComplexField)> {
    let b = JostBundle::new(lambda, grid, params)?;
    let f2 = ComplexField {
        grid: *grid,
        values: b.m2.f_values(grid),
    };
    Ok((b.connection, b.c0, f2))
}

#[derive(Clone, Copy, Debug)]
pub struct WronskianCheck {
    pub w: C,
    pub expected: C,
    pub residual: f64,
    /// max relative spread of W over the sample points.
    pub x_constancy: f64,
}

pub fn wronskian_identity_check(bundle: &JostBundle, xs: &[f64]) -> WronskianCheck {
    let g = bundle.grid;
    let mid = g.n / 2;
    let w = bundle.wronskian_at(mid);
    let expected = bundle.lambda * bundle.evans * bundle.point.w0;
    let spread = xs
        .iter()
        .map(|&x| (bundle.wronskian_at(g.index_of(x)) - w).norm() / w.norm().max(1e-300))
        .fold(0.0, f64::max);
    WronskianCheck {
        w,
        expected,
        residual: (w - expected).norm() / (expected.norm() + 1e-30),
        x_constancy: spread,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_weights_integrate_cubics_exactly() {
        for z in [C::new(0.1, 0.2), C::new(2.0, -1.0), C::new(0.0, 0.0)] {
            let w = Weights::new(z);
            // ∫₀¹ e^{-zu} u³ du against the fwd weights on nodes 0..3
            let approx: C = (0..4).map(|m| w.fwd[m] * (m as f64).powi(3)).sum();
            let exact = moments(z)[3];
            assert!((approx - exact).norm() < 1e-14, "{z}");
        }
    }

    #[test]
    fn sweep_matches_closed_form() {
        let g = Grid::symmetric(10.0, 0.01).unwrap();
        let f: Vec<C> = g.sample(|x| C::new((-x * x).exp(), 0.0));
        let kap = C::new(1.0, 0.5);
        let s = sweep(&f, 0, g.n - 1, kap, g.h, Dir::Right);
        // I(0) = ∫_0^∞ e^{-κy} e^{-y²} dy, reference by fine trapezoid with end correction
        let i0 = g.n / 2;
        let hh = 1e-4;
        let reference: C = -kap * hh * hh / 12.0
            + (0..200000)
                .map(|k| {
                    let y = k as f64 * hh;
                    let wgt = if k == 0 { 0.5 } else { 1.0 };
                    (-kap * y).exp() * (-y * y).exp() * wgt * hh
                })
                .sum::<C>();
        assert!(
            (s[i0] - reference).norm() < 1e-9,
            "{} vs {}",
            s[i0],
            reference
        );
    }
}
