//! The resolvent R(λ) = (𝓛 - λ)⁻¹ on the imaginary axis, the projections P and Q
//! onto and away from the generalized kernel, and a sampler for the weighted
//! smoothing bound sup_τ ‖sech(κx) R(iτ) Q g‖.
//!
//! Away from λ = 0 the resolvent is assembled from the Jost bundle by variation of
//! parameters:
//!
//! W R(λ)g = -f₂ ∫ₓ^∞ g b₁₃ - f₁ ∫^x g b₂₃ + f₃ ∫ₓ^∞ g b₁₂.
//!
//! Close to 0 the numerator N(λ)g vanishes to third order for g ∈ ker P and
//! D(λ) to second order, so both quotients N/λ³ and D/λ² are recovered from
//! their values on a fixed circle by the Cauchy formula. The bundles on that
//! circle are computed once and shared by every λ and g.

use num_complex::Complex64 as C;

use crate::cubic_spectrum::solve_cubic;
use crate::error::{Error, Result};
use crate::grid::{cumulative, inner, integrate, ComplexField, Grid};
use crate::jost::{
    self, contour_nodes, contour_threshold, BundleOptions, Dir, JostBundle, CONTOUR_RADIUS,
    C0_DIRECT_THRESHOLD,
};
use crate::par::{self, Execution};
use crate::profiles::{self, KernelFunctions, SolitonParams};

/// Below this |λ| the regularized path is used.
pub const REGULARIZED_THRESHOLD: f64 = 0.02;

/// Grid spacing for resolvent work. The direct path loses accuracy like h⁴/|W(λ)|
/// and |W| ~ |λ|³ near the origin, so it needs a finer grid than the Evans scans.
pub const RESOLVENT_H: f64 = 0.005;

/// The Jost grid at [`RESOLVENT_H`].
pub fn resolvent_grid(p: f64) -> Result<Grid> {
    jost::jost_grid(p, RESOLVENT_H)
}

/// Default κ of the sech weight for exponent p.
pub fn default_kappa(p: f64) -> f64 {
    (p - 1.0) / 4.0
}

// ---------------------------------------------------------------------------
// Projections.

/// P g = Σ ξᵢ⟨ηᵢ, g⟩ and Q = 1 - P.
#[derive(Clone, Debug)]
pub struct ProjectionPair {
    pub kernel: KernelFunctions,
}

impl ProjectionPair {
    pub fn new(grid: &Grid, params: &SolitonParams) -> Result<Self> {
        Ok(Self {
            kernel: profiles::kernel_functions(grid, params)?,
        })
    }

    fn h(&self) -> f64 {
        self.kernel.xi1.grid.h
    }

    /// (⟨η₁, g⟩, ⟨η₂, g⟩).
    pub fn coefficients(&self, g: &[f64]) -> [f64; 2] {
        let h = self.h();
        [
            inner(&self.kernel.eta1.values, g, h),
            inner(&self.kernel.eta2.values, g, h),
        ]
    }

    pub fn apply_p(&self, g: &[f64]) -> Vec<f64> {
        let [a, b] = self.coefficients(g);
        self.kernel
            .xi1
            .values
            .iter()
            .zip(&self.kernel.xi2.values)
            .map(|(x1, x2)| a * x1 + b * x2)
            .collect()
    }

    pub fn apply_q(&self, g: &[f64]) -> Vec<f64> {
        let pg = self.apply_p(g);
        g.iter().zip(pg).map(|(a, b)| a - b).collect()
    }

    pub fn apply_p_c(&self, g: &[C]) -> Vec<C> {
        let re: Vec<f64> = g.iter().map(|z| z.re).collect();
        let im: Vec<f64> = g.iter().map(|z| z.im).collect();
        let (pr, pi) = (self.apply_p(&re), self.apply_p(&im));
        pr.into_iter().zip(pi).map(|(a, b)| C::new(a, b)).collect()
    }

    pub fn apply_q_c(&self, g: &[C]) -> Vec<C> {
        let pg = self.apply_p_c(g);
        g.iter().zip(pg).map(|(a, b)| a - b).collect()
    }

    /// ‖P g‖_{L²} / ‖g‖_{L²}.
    pub fn kernel_ratio(&self, g: &[C]) -> f64 {
        let h = self.h();
        let pg = self.apply_p_c(g);
        let num = crate::grid::norm_l2_c(&pg, h);
        let den = crate::grid::norm_l2_c(g, h);
        if den == 0.0 {
            0.0
        } else {
            num / den
        }
    }
}

// ---------------------------------------------------------------------------
// Norms.

/// ‖sech(κx) u‖_{L²}.
pub fn sech_weighted_norm(u: &[C], grid: &Grid, kappa: f64) -> f64 {
    let w: Vec<f64> = (0..grid.n)
        .map(|i| (u[i] * profiles::sech(kappa * grid.x(i))).norm_sqr())
        .collect();
    integrate(&w, grid.h).sqrt()
}

/// ‖⟨x⟩ g‖_{L¹}.
pub fn l11_norm(g: &[C], grid: &Grid) -> f64 {
    let w: Vec<f64> = (0..grid.n)
        .map(|i| (1.0 + grid.x(i).powi(2)).sqrt() * g[i].norm())
        .collect();
    integrate(&w, grid.h)
}

pub fn l1_norm(g: &[C], grid: &Grid) -> f64 {
    let w: Vec<f64> = g.iter().map(|z| z.norm()).collect();
    integrate(&w, grid.h)
}

// ---------------------------------------------------------------------------
// Direct path.

/// W(λ) R(λ) g.
fn numerator(bundle: &JostBundle, g: &[C]) -> Vec<C> {
    let grid = &bundle.grid;
    let n = grid.n;
    let mu = bundle.point.mu;
    let mut g13 = vec![C::new(0.0, 0.0); n];
    let mut g23 = vec![C::new(0.0, 0.0); n];
    let mut g12 = vec![C::new(0.0, 0.0); n];
    for i in 0..n {
        let (b13, b23, b12) = bundle.normalized_wronskians(i);
        g13[i] = g[i] * b13;
        g23[i] = g[i] * b23;
        g12[i] = g[i] * b12;
    }
    let h = grid.h;
    let i1 = jost::sweep(&g13, 0, n - 1, mu[1], h, Dir::Right);
    let i23 = jost::sweep(&g23, 0, n - 1, mu[0], h, Dir::Left);
    let i21 = jost::sweep(&g12, 0, n - 1, mu[2], h, Dir::Right);
    (0..n)
        .map(|i| {
            -bundle.m2.m[i] * i1[i] - bundle.m1.m[i] * i23[i] + bundle.m3.m[i] * i21[i]
        })
        .collect()
}

/// R(λ)g from the Jost bundle at λ.
pub fn apply_resolvent(bundle: &JostBundle, g: &[C]) -> Result<Vec<C>> {
    if g.len() != bundle.grid.n {
        return Err(Error::InvalidParameter("g does not match the Jost grid".into()));
    }
    let w = bundle.wronskian_at(bundle.grid.n / 2);
    if w.norm() < 1e-10 {
        return Err(Error::NearSingular {
            lambda: bundle.lambda,
            w_abs: w.norm(),
        });
    }
    Ok(numerator(bundle, g).into_iter().map(|v| v / w).collect())
}

// ---------------------------------------------------------------------------
// Regularized path.

/// Jost bundles on the circle |w| = CONTOUR_RADIUS, all with one m̃₂ threshold.
#[derive(Clone, Debug)]
pub struct ContourCache {
    pub grid: Grid,
    pub params: SolitonParams,
    pub x0: f64,
    pub nodes: Vec<C>,
    pub bundles: Vec<JostBundle>,
    projection: ProjectionPair,
}

impl ContourCache {
    pub fn new(grid: &Grid, params: &SolitonParams) -> Result<Self> {
        let x0 = contour_threshold(grid, params)?;
        let nodes = contour_nodes();
        let opts = BundleOptions {
            x0: Some(x0),
            direct_c0: true,
            ..Default::default()
        };
        let bundles = par::map(Execution::Parallel, &nodes, |&w| {
            JostBundle::with_options(w, grid, params, opts)
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            grid: *grid,
            params: *params,
            x0,
            nodes,
            bundles,
            projection: ProjectionPair::new(grid, params)?,
        })
    }

    pub fn projection(&self) -> &ProjectionPair {
        &self.projection
    }

    fn cauchy<T, F>(&self, lambda: C, order: i32, value: F) -> T
    where
        T: Default + std::ops::AddAssign + std::ops::Mul<C, Output = T>,
        F: Fn(usize) -> T,
    {
        let mut acc = T::default();
        for (k, &w) in self.nodes.iter().enumerate() {
            acc += value(k) * (w / (w.powi(order) * (w - lambda) * self.nodes.len() as f64));
        }
        acc
    }

    /// D(λ)/λ² inside the circle.
    pub fn evans_quotient(&self, lambda: C) -> C {
        self.cauchy(lambda, 2, |k| self.bundles[k].evans)
    }

    /// D(λ) inside the circle.
    pub fn evans(&self, lambda: C) -> C {
        lambda * lambda * self.evans_quotient(lambda)
    }

    /// c₀(λ) inside the circle, as an analytic function.
    pub fn c0(&self, lambda: C) -> C {
        self.cauchy(lambda, 0, |k| self.bundles[k].c0)
    }

    /// Taylor coefficients at λ = 0 of e^{-μ₂x}N(λ)g, orders 0 to 2. They vanish
    /// together with those of N.
    pub fn numerator_taylor(&self, g: &[C]) -> [Vec<C>; 3] {
        let nums = self.numerators(g);
        let n = self.grid.n;
        std::array::from_fn(|j| {
            let mut out = vec![C::new(0.0, 0.0); n];
            for (k, &w) in self.nodes.iter().enumerate() {
                let s = w.powi(-(j as i32)) / self.nodes.len() as f64;
                for (o, v) in out.iter_mut().zip(&nums[k]) {
                    *o += v * s;
                }
            }
            out
        })
    }

    /// e^{-μ₂(w)x} N(w)g at the nodes. The factor removes the e^{μ₂x} radiation
    /// tail, which would otherwise grow like e^{r|x|} around the circle.
    fn numerators(&self, g: &[C]) -> Vec<Vec<C>> {
        let grid = self.grid;
        par::map(Execution::Parallel, &self.bundles, |b| {
            let mu2 = b.point.mu[1];
            numerator(b, g)
                .into_iter()
                .enumerate()
                .map(|(i, v)| v * (-mu2 * grid.x(i)).exp())
                .collect()
        })
    }

    /// Regularized resolvent for g ∈ ker P and |λ| ≤ C0_DIRECT_THRESHOLD.
    pub fn apply(&self, lambda: C, g: &[C]) -> Result<Vec<C>> {
        self.check_projected(g)?;
        if lambda.norm() > C0_DIRECT_THRESHOLD + 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "regularized resolvent is for |λ| ≤ {C0_DIRECT_THRESHOLD}"
            )));
        }
        let nums = self.numerators(g);
        let n = self.grid.n;
        let mut q = vec![C::new(0.0, 0.0); n];
        for (k, &w) in self.nodes.iter().enumerate() {
            let s = w / (w.powi(3) * (w - lambda) * self.nodes.len() as f64);
            for (o, v) in q.iter_mut().zip(&nums[k]) {
                *o += v * s;
            }
        }
        let sp = solve_cubic(lambda)?;
        let den = sp.w0 * self.evans_quotient(lambda);
        let grid = self.grid;
        Ok(q.into_iter()
            .enumerate()
            .map(|(i, v)| v * (sp.mu[1] * grid.x(i)).exp() / den)
            .collect())
    }

    fn check_projected(&self, g: &[C]) -> Result<()> {
        let ratio = self.projection.kernel_ratio(g);
        if ratio > 1e-8 {
            return Err(Error::NotProjected { ratio });
        }
        Ok(())
    }

    /// Scale-free size of the truncated expansion Σ_{i≤2} λⁱ Nᵢ g on the circle:
    /// max_i rⁱ‖sech(κx) Nᵢ g‖ / ‖g‖_{L^{1,1}}. Vanishes for g ∈ ker P.
    pub fn annihilation_residual(&self, g: &[C], kappa: f64) -> f64 {
        let coeffs = self.numerator_taylor(g);
        let scale = l11_norm(g, &self.grid).max(1e-300);
        coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| CONTOUR_RADIUS.powi(i as i32) * sech_weighted_norm(c, &self.grid, kappa))
            .fold(0.0, f64::max)
            / scale
    }

    /// Bundle at λ for the direct path: the circle's x₀ and c₀ = λc₂₃/c₃₃.
    pub fn bundle(&self, lambda: C) -> Result<JostBundle> {
        let opts = BundleOptions {
            x0: Some(self.x0),
            direct_c0: true,
            ..Default::default()
        };
        JostBundle::with_options(lambda, &self.grid, &self.params, opts)
    }

    /// R̂₁⁽¹³⁾(λ)g = -D''(0)c₀(0) λ/(2DW₀) f₃(x,0) ∫ g (e^{-μ₂y} - 1) φ̃ dy, the part
    /// of the resolvent that needs the weight ⟨y⟩ on g.
    pub fn hat_correction(&self, lambda: C, g: &[C]) -> Result<Vec<C>> {
        let grid = &self.grid;
        let params = &self.params;
        let sp = solve_cubic(lambda)?;
        let d2 = evans_second_derivative(params);
        let phi = grid.sample(|x| profiles::phi(x, params));
        let prim = cumulative(&phi, grid.h);
        let total = *prim.last().unwrap();
        let integrand: Vec<C> = (0..grid.n)
            .map(|i| g[i] * ((-sp.mu[1] * grid.x(i)).exp() - 1.0) * (prim[i] / total))
            .collect();
        let s = crate::grid::integrate_c(&integrand, grid.h);
        let pref = -d2 * self.c0(C::new(0.0, 0.0)) * lambda
            / (2.0 * self.evans(lambda) * sp.w0);
        let b = profiles::beta(params.p);
        Ok((0..grid.n)
            .map(|i| pref * (profiles::phi_prime(grid.x(i), params) / b) * s)
            .collect())
    }
}

/// D''(0) = β(p)⁻² ⟨Λ_pφ, φ⟩, for c = 1.
pub fn evans_second_derivative(params: &SolitonParams) -> f64 {
    let unit = SolitonParams {
        p: params.p,
        c: 1.0,
    };
    profiles::mass_q_prime(&unit) / profiles::beta(params.p).powi(2)
}

/// Which formula produced a resolvent value.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Path {
    Direct,
    Regularized,
}

/// Resolvent with automatic routing between the direct and regularized paths.
#[derive(Clone, Debug)]
pub struct Resolvent {
    pub cache: ContourCache,
}

impl Resolvent {
    pub fn new(grid: &Grid, params: &SolitonParams) -> Result<Self> {
        Ok(Self {
            cache: ContourCache::new(grid, params)?,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.cache.grid
    }

    pub fn path_for(lambda: C) -> Path {
        if lambda.norm() < REGULARIZED_THRESHOLD {
            Path::Regularized
        } else {
            Path::Direct
        }
    }

    /// R(λ)g; g must lie in ker P on the regularized path.
    pub fn apply(&self, lambda: C, g: &[C]) -> Result<(Vec<C>, Path)> {
        match Self::path_for(lambda) {
            Path::Regularized => Ok((self.cache.apply(lambda, g)?, Path::Regularized)),
            Path::Direct => {
                let b = self.cache.bundle(lambda)?;
                Ok((apply_resolvent(&b, g)?, Path::Direct))
            }
        }
    }

    /// R(λ)Q g.
    pub fn apply_q(&self, lambda: C, g: &[C]) -> Result<(Vec<C>, Path)> {
        let qg = self.cache.projection.apply_q_c(g);
        self.apply(lambda, &qg)
    }
}

/// Regularized resolvent built from scratch (prefer `ContourCache` for repeated use).
pub fn apply_resolvent_regularized(
    lambda: C,
    g: &[C],
    grid: &Grid,
    params: &SolitonParams,
) -> Result<Vec<C>> {
    ContourCache::new(grid, params)?.apply(lambda, g)
}

/// sup over the interior (|x| ≤ xmax - margin) of |(𝓛 - λ)u - g| / sup|g|, using
/// sixth-order finite differences with spacing close to 0.02.
pub fn resolvent_residual(
    u: &[C],
    g: &[C],
    lambda: C,
    grid: &Grid,
    params: &SolitonParams,
    margin: f64,
) -> f64 {
    let stride = (0.02 / grid.h).round().max(1.0) as usize;
    let lu = crate::linop::apply_l_local(u, grid, params, stride);
    let lim = grid.xmax() - margin;
    let mut num: f64 = 0.0;
    let mut den: f64 = 0.0;
    for i in 0..grid.n {
        den = den.max(g[i].norm());
        if grid.x(i).abs() <= lim {
            num = num.max((lu[i] - lambda * u[i] - g[i]).norm());
        }
    }
    num / den.max(1e-300)
}

// ---------------------------------------------------------------------------
// Smoothing scan.

#[derive(Clone, Debug)]
pub struct ScanRow {
    pub tau: f64,
    /// sup over probes of ‖sech(κx) R(iτ) Q g‖ / ‖g‖_{L^{1,1}}.
    pub sup: f64,
    /// sup over probes of ‖sech(κx) R(iτ) Q ∂ₓg‖ / ‖g‖_{L¹}.
    pub sup_dx: f64,
    pub path: Path,
}

#[derive(Clone, Debug)]
pub struct ScanTable {
    pub kappa: f64,
    pub rows: Vec<ScanRow>,
}

impl ScanTable {
    pub fn sup(&self) -> f64 {
        self.rows.iter().map(|r| r.sup).fold(0.0, f64::max)
    }

    pub fn sup_dx(&self) -> f64 {
        self.rows.iter().map(|r| r.sup_dx).fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.rows
            .iter()
            .all(|r| r.sup.is_finite() && r.sup_dx.is_finite())
    }

    /// For the first and last decade of τ: max S over the decade divided by S at
    /// the inner edge of the decade. Values ≤ 1.1 mean no growth towards the end.
    pub fn end_plateaus(&self) -> (f64, f64) {
        let rows = &self.rows;
        if rows.len() < 2 {
            return (1.0, 1.0);
        }
        let t0 = rows.first().unwrap().tau;
        let t1 = rows.last().unwrap().tau;
        let low: Vec<&ScanRow> = rows.iter().filter(|r| r.tau <= 10.0 * t0).collect();
        let high: Vec<&ScanRow> = rows.iter().filter(|r| r.tau >= t1 / 10.0).collect();
        let ratio = |set: &[&ScanRow], inner: f64| {
            set.iter().map(|r| r.sup).fold(0.0, f64::max) / inner
        };
        (
            ratio(&low, low.last().unwrap().sup),
            ratio(&high, high.first().unwrap().sup),
        )
    }
}

/// Log-spaced τ grid on [a, b] with `n` points.
pub fn log_grid(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![a];
    }
    (0..n)
        .map(|k| a * (b / a).powf(k as f64 / (n - 1) as f64))
        .collect()
}

/// Samples of the smoothing bound over τ, parallel over τ.
pub fn smoothing_norm_scan(
    resolvent: &Resolvent,
    taus: &[f64],
    probes: &[Vec<f64>],
    kappa: f64,
    exec: Execution,
) -> Result<ScanTable> {
    let grid = *resolvent.grid();
    let spectral = crate::grid::Spectral::new(grid);
    let proj = &resolvent.cache.projection;
    let prepared: Vec<(Vec<C>, f64, Vec<C>, f64)> = probes
        .iter()
        .map(|g| {
            let gc: Vec<C> = g.iter().map(|&v| C::new(v, 0.0)).collect();
            let dg: Vec<C> = spectral
                .derivative_line(g)
                .into_iter()
                .map(|v| C::new(v, 0.0))
                .collect();
            let s11 = l11_norm(&gc, &grid);
            let s1 = l1_norm(&gc, &grid);
            (proj.apply_q_c(&gc), s11, proj.apply_q_c(&dg), s1)
        })
        .collect();
    let rows = par::map(exec, taus, |&tau| -> Result<ScanRow> {
        let lambda = C::new(0.0, tau);
        let path = Resolvent::path_for(lambda);
        let bundle = match path {
            Path::Direct => Some(resolvent.cache.bundle(lambda)?),
            Path::Regularized => None,
        };
        let apply = |g: &[C]| -> Result<Vec<C>> {
            match &bundle {
                Some(b) => apply_resolvent(b, g),
                None => resolvent.cache.apply(lambda, g),
            }
        };
        let mut sup: f64 = 0.0;
        let mut sup_dx: f64 = 0.0;
        for (qg, s11, qdg, s1) in &prepared {
            let u = apply(qg)?;
            sup = sup.max(sech_weighted_norm(&u, &grid, kappa) / s11);
            let v = apply(qdg)?;
            sup_dx = sup_dx.max(sech_weighted_norm(&v, &grid, kappa) / s1);
        }
        Ok(ScanRow {
            tau,
            sup,
            sup_dx,
            path,
        })
    });
    Ok(ScanTable {
        kappa,
        rows: rows.into_iter().collect::<Result<Vec<_>>>()?,
    })
}

/// Twelve Gaussian-type probes: bumps and derivative bumps at a few centres and widths.
pub fn default_probes(grid: &Grid) -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    for &(x0, s) in &[(0.0, 0.5), (0.0, 1.0), (-2.0, 1.0), (2.0, 1.0), (-5.0, 2.0), (5.0, 2.0)] {
        out.push(grid.sample(|x| (-((x - x0) / s).powi(2)).exp()));
        out.push(grid.sample(|x| ((x - x0) / s) * (-((x - x0) / s).powi(2)).exp()));
    }
    out
}

/// Complex field wrapper for results on the Jost grid.
pub fn to_field(grid: &Grid, values: Vec<C>) -> ComplexField {
    ComplexField {
        grid: *grid,
        values,
    }
}
