//! One function per subcommand. Each writes its data files into the output
//! directory and returns whether its checks passed.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::{Context, Result};
use gkdv_core::diagnostics::MOLLIFIER;
use gkdv_core::evolver::{self, Evolver};
use gkdv_core::jost::{self, JostBundle};
use gkdv_core::par::Execution;
use gkdv_core::resolvent::{self, Path as ResolventPath, Resolvent};
use gkdv_core::{identities, modulation, profiles, stability, Grid, RealField, SolitonParams};
use num_complex::Complex64 as C;

use crate::config::RunConfig;

/// Whether the checks a command makes held.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
}

impl Verdict {
    fn from(ok: bool) -> Self {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }
}

pub struct Session<'a> {
    pub config: &'a RunConfig,
    pub out_dir: &'a Path,
    pub exec: Execution,
    pub command: &'a str,
}

impl Session<'_> {
    /// A text file opened with the resolved configuration as a `#` block.
    fn create(&self, name: &str) -> Result<BufWriter<File>> {
        let path = self.out_dir.join(name);
        let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        let mut w = BufWriter::new(file);
        writeln!(w, "# gkdv {}", self.command)?;
        writeln!(w, "# mollifier: {MOLLIFIER}")?;
        for line in self.config.to_toml().lines() {
            writeln!(w, "# {line}")?;
        }
        Ok(w)
    }
}

pub fn identities(ctx: &Session) -> Result<Verdict> {
    let cfg = &ctx.config.identities;
    let grid = Grid::symmetric(cfg.half_length, cfg.h)?;
    let mut w = ctx.create("identities.csv")?;
    writeln!(w, "p,name,residual,tolerance,value,passed")?;
    let mut ok = true;
    for &p in &cfg.ps {
        let report = identities::run(p, &grid)?;
        for c in &report.checks {
            let value = c.value.map_or(String::new(), |v| format!("{v:.12e}"));
            writeln!(
                w,
                "{p},{},{:.3e},{:.0e},{value},{}",
                c.name,
                c.residual,
                c.tolerance,
                c.passed()
            )?;
            println!(
                "p = {p:<5} {:<24} {:.3e} (tol {:.0e}) {}",
                c.name,
                c.residual,
                c.tolerance,
                if c.passed() { "ok" } else { "FAILED" }
            );
        }
        ok &= report.all_passed();
    }
    w.flush()?;
    Ok(Verdict::from(ok))
}

pub fn evans_scan(ctx: &Session) -> Result<Verdict> {
    let cfg = &ctx.config.evans_scan;
    let params = SolitonParams::unit(cfg.p)?;
    let grid = jost::jost_grid(cfg.p, cfg.h)?;
    let taus = resolvent::log_grid(cfg.tau_min, cfg.tau_max, cfg.points);
    let lambdas: Vec<C> = taus.iter().map(|&t| C::new(0.0, t)).collect();
    let values = jost::evans_scan(&lambdas, &params, &grid, ctx.exec);

    let mut w = ctx.create("evans_scan.csv")?;
    writeln!(w, "tau,re_D,im_D,abs_D,flag")?;
    let mut best: Option<(f64, f64)> = None;
    for (tau, v) in taus.iter().zip(&values) {
        match v {
            Ok(d) => {
                writeln!(w, "{tau:.10e},{:.14e},{:.14e},{:.14e},ok", d.re, d.im, d.norm())?;
                if best.is_none_or(|(m, _)| d.norm() < m) {
                    best = Some((d.norm(), *tau));
                }
            }
            Err(e) => writeln!(w, "{tau:.10e},NaN,NaN,NaN,\"{e}\"")?,
        }
    }

    let d0 = jost::evans_on(C::new(0.0, 0.0), &grid, &params)?;
    let fit = jost::evans_second_derivative_fit(cfg.fit_tau, &grid, &params)?;
    let closed = resolvent::evans_second_derivative(&params);
    writeln!(w, "# D(0) = {:.6e} {:+.6e}i", d0.re, d0.im)?;
    writeln!(w, "# D''(0) fit = {fit:.10e}, closed form = {closed:.10e}")?;
    let failed = values.iter().filter(|v| v.is_err()).count();
    match best {
        Some((m, at)) => {
            writeln!(w, "# min |D| = {m:.6e} at tau = {at:.6e}")?;
            println!("min |D(i tau)| = {m:.6e} at tau = {at:.4e} ({failed} points flagged)");
        }
        None => println!("no Evans value could be computed"),
    }
    println!("D''(0): fit {fit:.8e}, closed form {closed:.8e}");
    w.flush()?;
    match best {
        Some((m, _)) => Ok(Verdict::from(m > 0.0 && (fit - closed).abs() <= 1e-2 * closed.abs())),
        None => Err(anyhow::anyhow!("every Evans evaluation failed")),
    }
}

pub fn jost(ctx: &Session) -> Result<Verdict> {
    let cfg = &ctx.config.jost;
    let params = SolitonParams::unit(cfg.p)?;
    let grid = jost::jost_grid(cfg.p, cfg.h)?;
    let lambda = C::new(cfg.lambda_re, cfg.lambda_im);
    let b = JostBundle::new(lambda, &grid, &params)?;
    let check = jost::wronskian_identity_check(&b, &[-5.0, -1.0, 1.0, 5.0]);

    let mut w = ctx.create("jost.csv")?;
    writeln!(w, "# mu = {:.12e} / {:.12e} / {:.12e}", b.point.mu[0], b.point.mu[1], b.point.mu[2])?;
    writeln!(w, "# D(lambda) = {:.12e}, D(-lambda) = {:.12e}", b.evans, b.evans_minus)?;
    writeln!(
        w,
        "# W = {:.12e}, lambda D W0 = {:.12e}, relative residual {:.3e}, x-spread {:.3e}",
        check.w, check.expected, check.residual, check.x_constancy
    )?;
    writeln!(w, "x,re_M1,im_M1,re_M2,im_M2,re_M3,im_M3")?;
    let cell = |f: &jost::Normalized, i: usize| -> String {
        if f.contains(i) {
            let m = f.at(i).0;
            format!("{:.14e},{:.14e}", m.re, m.im)
        } else {
            "NaN,NaN".into()
        }
    };
    for i in 0..grid.n {
        writeln!(w, "{:.6},{},{},{}", grid.x(i), cell(&b.m1, i), cell(&b.m2, i), cell(&b.m3, i))?;
    }
    w.flush()?;
    println!("D({lambda}) = {:.10e}", b.evans);
    println!(
        "Wronskian identity residual {:.3e}, x-constancy {:.3e}",
        check.residual, check.x_constancy
    );
    Ok(Verdict::from(check.residual <= 1e-4 && check.x_constancy <= 1e-6))
}

pub fn resolvent_scan(ctx: &Session) -> Result<Verdict> {
    let cfg = &ctx.config.resolvent_scan;
    let params = SolitonParams::unit(cfg.p)?;
    let grid = jost::jost_grid(cfg.p, cfg.h)?;
    let kappa = cfg.kappa.unwrap_or_else(|| resolvent::default_kappa(cfg.p));
    let res = Resolvent::new(&grid, &params)?;
    let taus = resolvent::log_grid(cfg.tau_min, cfg.tau_max, cfg.points);
    let probes = resolvent::default_probes(&grid);
    let table = resolvent::smoothing_norm_scan(&res, &taus, &probes, kappa, ctx.exec)?;

    let mut w = ctx.create("resolvent_scan.csv")?;
    writeln!(w, "tau,sup,sup_dx,path")?;
    for r in &table.rows {
        let path = match r.path {
            ResolventPath::Direct => "direct",
            ResolventPath::Regularized => "regularized",
        };
        writeln!(w, "{:.10e},{:.10e},{:.10e},{path}", r.tau, r.sup, r.sup_dx)?;
    }
    let (low, high) = table.end_plateaus();
    writeln!(w, "# sup = {:.6e}, sup_dx = {:.6e}", table.sup(), table.sup_dx())?;
    writeln!(w, "# end-decade plateau ratios: {low:.4} (low), {high:.4} (high)")?;
    w.flush()?;
    println!(
        "kappa = {kappa}: sup {:.6e}, sup_dx {:.6e}, plateau ratios {low:.4} / {high:.4}",
        table.sup(),
        table.sup_dx()
    );
    Ok(Verdict::from(table.is_finite() && low <= 1.1 && high <= 1.1))
}

pub fn evolve(ctx: &Session) -> Result<Verdict> {
    let cfg = &ctx.config.evolve;
    let ev = Evolver::new(cfg.solver)?;
    let params = SolitonParams::new(cfg.solver.p, cfg.c)?;
    let (a, x0, wd) = (cfg.amplitude, cfg.center, cfg.width);
    let u0 = RealField::from_fn(ev.grid, |x| {
        profiles::phi(x, &params) + a * (-((x - x0) / wd).powi(2)).exp()
    });
    let traj = ev.evolve(&u0)?;

    let mut w = ctx.create("trajectory.csv")?;
    evolver::write_diagnostics_csv(&mut w, &traj.diagnostics)?;
    if let Some(t) = traj.truncated_at {
        writeln!(w, "# truncated at t = {t}: boundary-window mass above tolerance")?;
    }
    w.flush()?;
    let last = traj.last();
    let snap = ctx.out_dir.join("final.snap");
    let file = File::create(&snap).with_context(|| format!("creating {}", snap.display()))?;
    let mut sw = BufWriter::new(file);
    evolver::write_snapshot(&mut sw, &last.u, last.t)?;
    sw.flush()?;
    // The snapshot layout is fixed, so its configuration goes next to it.
    let mut side = ctx.create("final.snap.toml")?;
    writeln!(side, "t = {}", last.t)?;
    side.flush()?;
    println!(
        "reached t = {} ; Q drift {:.3e}, E drift {:.3e}",
        last.t,
        traj.diagnostics.q_drift(),
        traj.diagnostics.e_drift()
    );
    Ok(Verdict::Pass)
}

pub fn stability_run(ctx: &Session) -> Result<Verdict> {
    let cfg = &ctx.config.stability;
    let run = stability::run(cfg, ctx.exec)?;

    let mut w = ctx.create("trajectory.csv")?;
    writeln!(w, "t,Q,E,wrap,local_norm,h1_integrand")?;
    let d = &run.diagnostics;
    for (k, t) in d.t.iter().enumerate() {
        let (local, integrand) = match run.smoothing.curve.get(k) {
            Some(&(_, c)) => (c, run.smoothing.integrand[k]),
            None => (f64::NAN, f64::NAN),
        };
        writeln!(
            w,
            "{t:.10},{:.16e},{:.16e},{:.6e},{local:.10e},{integrand:.10e}",
            d.q[k], d.e[k], d.wrap[k]
        )?;
    }
    w.flush()?;

    let mut m = ctx.create("modulation.csv")?;
    modulation::write_track_csv(&mut m, &run.states)?;
    m.flush()?;

    let s = &run.summary;
    let mut sw = ctx.create("summary.toml")?;
    write!(sw, "{}", toml::to_string(s)?)?;
    sw.flush()?;

    let mark = |b: bool| if b { "holds" } else { "FAILS" };
    println!("tube: sup ||v||_H1 = {:.4e} ({:.3} delta) {}", s.tube_max, s.tube_over_delta, mark(s.tube_held));
    println!(
        "local decay: first quarter {:.4e}, last quarter {:.4e} {}",
        s.first_quarter_mean,
        s.last_quarter_mean,
        mark(s.local_decay)
    );
    println!(
        "smoothing integral: T/2 {:.6e}, T {:.6e}, predicted tail {:.3e} {}",
        s.integral_half,
        s.integral_full,
        s.tail_estimate,
        mark(s.integral_converges)
    );
    println!(
        "c: |c(T)-c(T/2)| = {:.3e}, |c(T/2)-c(T/4)| = {:.3e} {}; c+ ~ {:.12}",
        (s.c_full - s.c_half).abs(),
        (s.c_half - s.c_quarter).abs(),
        mark(s.c_cauchy),
        s.c_full
    );
    Ok(Verdict::from(s.all_hold()))
}
