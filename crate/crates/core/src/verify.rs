//! Analytic-versus-simulation acceptance checks.
//!
//! [`VerifyContext::build`] runs the two reference simulations (η = 3,
//! σ = 8 and 12 dB) once; each `criterion_*` function then evaluates one
//! check against them. Reports contain no timings, so a fixed seed gives
//! byte-identical output for any worker count.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::attachment::attach_probability;
use crate::dimensioning::{
    cdma_bs_power, fit_lognormal, max_bs_power, power_density, rate_density, CdmaUser,
    CoverageModel, SystemConstants,
};
use crate::error::{ModelError, Result};
use crate::geometry::build_grid;
use crate::interference::ocif_spatial_distribution;
use crate::iopr::iopr_spatial_stats;
use crate::montecarlo::{empirical_coverage, simulate, SimResult, SimSpec};
use crate::numerics::{
    integrate, normal_pdf, q_function, q_inverse, truncated_ln_partial_moment, QuadratureSpec,
};
use crate::NetworkConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifySpec {
    pub eta: f64,
    pub cell_radius: f64,
    pub samples: u64,
    pub seed: u64,
    pub workers: usize,
    pub tiers: usize,
    pub bins: usize,
}

impl Default for VerifySpec {
    fn default() -> Self {
        VerifySpec {
            eta: 3.0,
            cell_radius: 1000.0,
            samples: 1_000_000,
            seed: 1,
            workers: 0,
            tiers: 3,
            bins: 40,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub id: u32,
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl CheckResult {
    fn new(id: u32, name: &str, passed: bool, detail: String) -> Self {
        CheckResult {
            id,
            name: name.to_owned(),
            passed,
            detail,
        }
    }

    /// `PASS`/`FAIL` line used by the table and the test harness.
    pub fn line(&self) -> String {
        format!(
            "[{}] criterion {:>2} {:<22} {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.detail
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub spec: VerifySpec,
    pub checks: Vec<CheckResult>,
}

impl VerifyReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "# verify eta={} rc={} samples={} seed={} tiers={} bins={}",
            self.spec.eta,
            self.spec.cell_radius,
            self.spec.samples,
            self.spec.seed,
            self.spec.tiers,
            self.spec.bins
        );
        for c in &self.checks {
            let _ = writeln!(s, "{}", c.line());
        }
        let passed = self.checks.iter().filter(|c| c.passed).count();
        let _ = writeln!(s, "# {passed}/{} passed", self.checks.len());
        s
    }
}

/// Shared simulations and configuration for the simulation-backed checks.
pub struct VerifyContext {
    pub spec: VerifySpec,
    pub cfg8: NetworkConfig,
    pub cfg12: NetworkConfig,
    pub sim8: SimResult,
    pub sim12: SimResult,
    /// Equivalent-area radius of the simulated layout, used as `r_∞` so the
    /// analytic far field covers the same network as the simulator.
    pub r_inf: f64,
}

impl VerifyContext {
    pub fn build(spec: &VerifySpec) -> Result<Self> {
        let cfg8 = NetworkConfig::new(spec.eta, 8.0, spec.cell_radius)?;
        let cfg12 = NetworkConfig::new(spec.eta, 12.0, spec.cell_radius)?;
        let run = |cfg: &NetworkConfig| {
            let mut s = SimSpec::new(cfg.clone(), spec.samples, spec.seed);
            s.workers = spec.workers;
            s.tiers = spec.tiers;
            s.bins = spec.bins;
            simulate(&s)
        };
        let sim8 = run(&cfg8)?;
        let sim12 = run(&cfg12)?;
        let r_inf = build_grid(spec.cell_radius, spec.tiers)?.equivalent_radius();
        Ok(VerifyContext {
            spec: spec.clone(),
            cfg8,
            cfg12,
            sim8,
            sim12,
            r_inf,
        })
    }

    fn pairs(&self) -> [(f64, &NetworkConfig, &SimResult); 2] {
        [
            (8.0, &self.cfg8, &self.sim8),
            (12.0, &self.cfg12, &self.sim12),
        ]
    }
}

/// Runs every check and collects the report.
pub fn run(spec: &VerifySpec) -> Result<VerifyReport> {
    let ctx = VerifyContext::build(spec)?;
    let checks = vec![
        criterion_attachment(&ctx)?,
        criterion_scale_invariance(spec.eta)?,
        criterion_ocif_bound(&ctx)?,
        criterion_ocif_trends(spec.eta)?,
        criterion_iopr_moments(&ctx)?,
        criterion_coverage(&ctx)?,
        criterion_pmax_scaling(spec.eta)?,
        criterion_rate_density(spec.eta)?,
        criterion_identities()?,
    ];
    Ok(VerifyReport {
        spec: spec.clone(),
        checks,
    })
}

/// Averages analytic grid values over each simulator bin.
fn bin_average(r_b: &[f64], values: &[f64], sim: &SimResult) -> Vec<f64> {
    sim.bins
        .iter()
        .map(|b| {
            let (mut sum, mut n) = (0.0, 0usize);
            for (&r, &v) in r_b.iter().zip(values) {
                if r >= b.r_lo && r < b.r_hi {
                    sum += v;
                    n += 1;
                }
            }
            if n == 0 {
                f64::NAN
            } else {
                sum / n as f64
            }
        })
        .collect()
}

fn max_rel(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| {
            let m = x.abs().max(y.abs());
            if m == 0.0 {
                0.0
            } else {
                (x - y).abs() / m
            }
        })
        .fold(0.0, f64::max)
}

pub fn criterion_attachment(ctx: &VerifyContext) -> Result<CheckResult> {
    let rc = ctx.spec.cell_radius;
    let mut passed = true;
    let mut parts = Vec::new();
    for (sigma, cfg, sim) in ctx.pairs() {
        let profile = crate::attachment::AttachmentProfile::build(cfg);
        let an = bin_average(&profile.r_b, &profile.p_attach, sim);
        let (mut worst, mut at) = (0.0f64, 0.0);
        for (b, a) in sim.bins.iter().zip(&an) {
            if b.r_lo < 0.1 * rc - 1e-9 || b.r_hi > 1.9 * rc + 1e-9 {
                continue;
            }
            let d = (a - b.attach_freq.mean).abs();
            if d > worst {
                worst = d;
                at = b.center() / rc;
            }
        }
        passed &= worst <= 0.03;
        parts.push(format!("sigma={sigma}: max|dP|={worst:.4} at r/Rc={at:.3}"));
    }
    Ok(CheckResult::new(
        1,
        "attachment",
        passed,
        format!("{} (tol 0.03)", parts.join("; ")),
    ))
}

pub fn criterion_scale_invariance(eta: f64) -> Result<CheckResult> {
    const TOL: f64 = 1e-6;
    let xs = [0.1, 0.5, 1.0, 1.5, 1.9];
    let gammas: Vec<f64> = (-10..=20).map(f64::from).collect();
    let mut worst = 0.0f64;
    for sigma in [8.0, 12.0] {
        // attach_probability, f̄, f̄², μ_f, σ_f², cell outage and coverage,
        // concatenated
        let mut reference: Option<Vec<f64>> = None;
        for rc in [250.0, 1000.0, 4000.0] {
            let cfg = NetworkConfig::new(eta, sigma, rc)?;
            let mut values = xs
                .iter()
                .map(|&x| attach_probability(x * rc, &cfg))
                .collect::<Result<Vec<_>>>()?;
            let model = CoverageModel::new(&cfg, f64::INFINITY, true)?;
            let io = &model.iopr;
            values.extend(&io.mean);
            values.extend(&io.second);
            values.extend([io.mu_f, io.var_f, model.cell_outage(1.0)?]);
            values.extend(model.coverage_curve(&gammas)?.iter().map(|p| p.coverage));
            match &reference {
                Some(r) => worst = worst.max(max_rel(r, &values)),
                None => reference = Some(values),
            }
        }
    }
    Ok(CheckResult::new(
        2,
        "scale invariance",
        worst <= TOL,
        format!("max relative spread over Rc in {{250,1000,4000}}: {worst:.3e} (tol 1e-6)"),
    ))
}

pub fn criterion_ocif_bound(ctx: &VerifyContext) -> Result<CheckResult> {
    let mut passed = true;
    let mut gaps = Vec::new();
    let mut parts = Vec::new();
    for (sigma, cfg, sim) in ctx.pairs() {
        let curve = ocif_spatial_distribution(cfg, ctx.r_inf)?;
        let an = bin_average(&curve.profile.r_b, &curve.density, sim);
        let (mut violations, mut gap, mut n) = (0, 0.0, 0);
        for (i, a) in an.iter().enumerate() {
            if sim.bins[i].attached < 2 {
                continue;
            }
            let mc = sim.bin_density(i, sim.bins[i].ocif);
            if *a > mc.mean + 2.0 * mc.se {
                violations += 1;
            }
            gap += (mc.mean - a) / mc.mean;
            n += 1;
        }
        let gap = gap / n as f64;
        passed &= violations == 0;
        gaps.push(gap);
        parts.push(format!(
            "sigma={sigma}: {violations}/{n} bins above MC+2SE, mean gap {gap:.3}"
        ));
    }
    passed &= gaps[0] <= 0.20;
    Ok(CheckResult::new(
        3,
        "OCIF lower bound",
        passed,
        format!("{} (gap tol 0.20 at sigma=8)", parts.join("; ")),
    ))
}

pub fn criterion_ocif_trends(eta: f64) -> Result<CheckResult> {
    let mu = |sigma: f64, rc: f64| -> Result<f64> {
        Ok(ocif_spatial_distribution(&NetworkConfig::new(eta, sigma, rc)?, f64::INFINITY)?.mu_g)
    };
    let radii = [250.0, 500.0, 1000.0, 2000.0];
    let series = radii
        .iter()
        .map(|&rc| mu(8.0, rc))
        .collect::<Result<Vec<_>>>()?;
    let decreasing = series.windows(2).all(|w| w[1] < w[0]);
    let (m8, m12) = (mu(8.0, 1000.0)?, mu(12.0, 1000.0)?);
    let detail = format!(
        "mu_G(Rc) = [{}]; mu_G(sigma=12)={m12:.4e} vs mu_G(sigma=8)={m8:.4e} at Rc=1000",
        series
            .iter()
            .map(|v| format!("{v:.4e}"))
            .collect::<Vec<_>>()
            .join(", ")
    );
    Ok(CheckResult::new(
        4,
        "OCIF trends",
        decreasing && m12 > m8,
        detail,
    ))
}

fn peak(v: &[f64]) -> f64 {
    v.iter()
        .copied()
        .filter(|x| x.is_finite())
        .fold(f64::MIN, f64::max)
}

pub fn criterion_iopr_moments(ctx: &VerifyContext) -> Result<CheckResult> {
    let c8 = iopr_spatial_stats(&ctx.cfg8, ctx.r_inf)?;
    let c12 = iopr_spatial_stats(&ctx.cfg12, ctx.r_inf)?;
    let sim = &ctx.sim8;
    let mc_peak = |pick: fn(&crate::montecarlo::BinStats) -> crate::montecarlo::Estimate| {
        peak(
            &(0..sim.bins.len())
                .map(|i| sim.bin_density(i, pick(&sim.bins[i])).mean)
                .collect::<Vec<_>>(),
        )
    };
    let f_an = peak(&bin_average(&c8.profile.r_b, &c8.mean_density, sim));
    let f2_an = peak(&bin_average(&c8.profile.r_b, &c8.second_density, sim));
    let f_mc = mc_peak(|b| b.f);
    let f2_mc = mc_peak(|b| b.f_sq);
    let f12_an = peak(&bin_average(
        &c12.profile.r_b,
        &c12.mean_density,
        &ctx.sim12,
    ));
    let e1 = (f_an - f_mc).abs() / f_mc;
    let e2 = (f2_an - f2_mc).abs() / f2_mc;
    let passed = e1 <= 0.10 && e2 <= 0.20 && f12_an < f_an;
    Ok(CheckResult::new(
        5,
        "IOPR moments",
        passed,
        format!(
            "f peak {f_an:.4e} vs MC {f_mc:.4e} (err {e1:.3}, tol 0.10); f^2 peak {f2_an:.4e} vs MC {f2_mc:.4e} (err {e2:.3}, tol 0.20); sigma=12 f peak {f12_an:.4e}"
        ),
    ))
}

pub fn criterion_coverage(ctx: &VerifyContext) -> Result<CheckResult> {
    let grid: Vec<f64> = (-10..=20).map(f64::from).collect();
    let an8 = CoverageModel::new(&ctx.cfg8, ctx.r_inf, true)?.coverage_curve(&grid)?;
    let an12 = CoverageModel::new(&ctx.cfg12, ctx.r_inf, true)?.coverage_curve(&grid)?;
    let mc8 = empirical_coverage(&ctx.sim8, &grid);
    let mc12 = empirical_coverage(&ctx.sim12, &grid);
    let (mut worst, mut at) = (0.0f64, 0.0);
    for (a, m) in an8.iter().zip(&mc8) {
        let d = (a.coverage - m.coverage).abs();
        if d > worst {
            worst = d;
            at = a.gamma_db;
        }
    }
    let mut ordered = true;
    for g in [-5.0, 0.0, 5.0] {
        let i = grid
            .iter()
            .position(|&x| x == g)
            .expect("grid covers ordering points");
        ordered &= an12[i].coverage >= an8[i].coverage - 0.02;
        ordered &= mc12[i].coverage >= mc8[i].coverage - 0.02;
    }
    let attached_ok = ctx.sim8.attached >= 100_000;
    Ok(CheckResult::new(
        6,
        "coverage",
        worst <= 0.05 && ordered && attached_ok,
        format!(
            "max|dC|={worst:.4} at {at} dB over [-10,20] dB (tol 0.05, {} attached); sigma ordering at -5/0/5 dB {}",
            ctx.sim8.attached,
            if ordered { "holds" } else { "violated" }
        ),
    ))
}

pub fn criterion_pmax_scaling(eta: f64) -> Result<CheckResult> {
    let cfg = NetworkConfig::new(eta, 8.0, 1000.0)?;
    let sys = SystemConstants::default();
    let radii = [250.0, 500.0, 1000.0, 2000.0, 4000.0];
    let p = radii
        .iter()
        .map(|&rc| max_bs_power(rc, &cfg, &sys))
        .collect::<Result<Vec<_>>>()?;
    let d = radii
        .iter()
        .map(|&rc| power_density(rc, &cfg, &sys))
        .collect::<Result<Vec<_>>>()?;
    let mut worst = 0.0f64;
    for i in 0..radii.len() - 1 {
        worst = worst
            .max(((p[i + 1] / p[i]) / 2f64.powf(eta) - 1.0).abs())
            .max(((d[i + 1] / d[i]) / 2f64.powf(eta - 2.0) - 1.0).abs());
    }
    let monotone = p.windows(2).all(|w| w[1] > w[0]) && d.windows(2).all(|w| w[1] > w[0]);
    Ok(CheckResult::new(
        7,
        "P_max scaling",
        worst <= 1e-6 && monotone,
        format!(
            "max relative error of doubling ratios {worst:.3e} (tol 1e-6); monotone {monotone}"
        ),
    ))
}

pub fn criterion_rate_density(eta: f64) -> Result<CheckResult> {
    let radii = [250.0, 500.0, 1000.0, 2000.0];
    let mut gamma_spread = 0.0f64;
    let mut scale_err = 0.0f64;
    for target in [0.5, 0.8, 0.95] {
        let mut gammas = Vec::new();
        let mut rates = Vec::new();
        for &rc in &radii {
            let cfg = NetworkConfig::new(eta, 8.0, rc)?;
            let curve = rate_density(target, &[rc], &cfg, f64::INFINITY)?;
            gammas.push(curve.gamma_db);
            rates.push(curve.points[0].rate_density);
        }
        let (lo, hi) = gammas
            .iter()
            .fold((f64::MAX, f64::MIN), |(l, h), &g| (l.min(g), h.max(g)));
        gamma_spread = gamma_spread.max(hi - lo);
        for i in 0..radii.len() - 1 {
            let expected = (radii[i + 1] / radii[i]).powi(-2);
            scale_err = scale_err.max(((rates[i + 1] / rates[i]) / expected - 1.0).abs());
        }
    }
    Ok(CheckResult::new(
        8,
        "rate-density mapping",
        gamma_spread <= 0.01 && scale_err <= 1e-6,
        format!("gamma* spread {gamma_spread:.4} dB (tol 0.01); Rc^-2 scaling error {scale_err:.3e} (tol 1e-6)"),
    ))
}

pub fn criterion_identities() -> Result<CheckResult> {
    let mut fails: Vec<String> = Vec::new();

    // Q round trip, measured against the tail mass min(p, 1 − p)
    let (mut q_err, mut x_err) = (0.0f64, 0.0f64);
    for i in 0..=1200 {
        let x = -6.0 + f64::from(i) * 0.01;
        let p = q_function(x);
        let y = q_inverse(p)?;
        q_err = q_err.max((q_function(y) - p).abs() / p.min(1.0 - p));
        x_err = x_err.max((y - x).abs());
    }
    if q_err > 1e-9 {
        fails.push(format!("Q round trip {q_err:.2e}"));
    }

    // truncated log-normal moment against direct quadrature
    let a = crate::numerics::LN10_OVER_10;
    let spec = QuadratureSpec::default();
    let mut m_err = 0.0f64;
    for sigma in [4.0, 8.0, 12.0] {
        for xi_max in [-10.0, 0.0, 5.0, 20.0] {
            for k in 1..=2u32 {
                let closed = truncated_ln_partial_moment(a, sigma, xi_max, k);
                let t_max: f64 = xi_max / sigma;
                let oracle = integrate(
                    |t| (-(f64::from(k)) * a * sigma * t).exp() * normal_pdf(t),
                    -12.0 - 2.0 * a * sigma,
                    t_max,
                    &spec,
                )?;
                m_err = m_err.max((closed - oracle).abs() / oracle);
            }
        }
    }
    if m_err > 1e-6 {
        fails.push(format!("LN moment {m_err:.2e}"));
    }

    // log-normal fit reproduces its own moments
    let mut fit_err = 0.0f64;
    for (m, v) in [(1.0, 0.5), (0.3, 2.0), (2.5, 0.01), (1e-3, 1e-5)] {
        let f = fit_lognormal(m, v, false)?;
        let m2 = (f.mu + 0.5 * f.sigma * f.sigma).exp();
        let v2 = f.sigma.powi(2).exp_m1() * (2.0 * f.mu + f.sigma.powi(2)).exp();
        fit_err = fit_err.max((m2 / m - 1.0).abs()).max((v2 / v - 1.0).abs());
    }
    if fit_err > 1e-12 {
        fails.push(format!("LN fit {fit_err:.2e}"));
    }

    // CDMA power: empty cell and the load pole
    let sys = SystemConstants {
        gamma_target: 0.5,
        orthogonality: 0.4,
        ..SystemConstants::default()
    };
    let no_users = cdma_bs_power(&[], &sys)? == sys.control_power;
    let pole_f =
        (1.0 + sys.orthogonality * sys.gamma_target) / sys.gamma_target - sys.orthogonality;
    let at_pole = matches!(
        cdma_bs_power(
            &[CdmaUser {
                r_b: 500.0,
                f: pole_f,
                h: 1e10
            }],
            &sys
        ),
        Err(ModelError::InfeasibleLoad { .. })
    );
    let below_pole = cdma_bs_power(
        &[CdmaUser {
            r_b: 500.0,
            f: pole_f * 0.999,
            h: 1e10,
        }],
        &sys,
    )
    .is_ok();
    if !no_users {
        fails.push("no-user power".into());
    }
    if !(at_pole && below_pole) {
        fails.push("pole detection".into());
    }

    Ok(CheckResult::new(
        9,
        "unit identities",
        fails.is_empty(),
        format!(
            "Q round trip {q_err:.2e} (max |dx| {x_err:.2e}); LN moment {m_err:.2e}; LN fit {fit_err:.2e}; CDMA empty cell {no_users}, pole {}{}",
            at_pole && below_pole,
            if fails.is_empty() { String::new() } else { format!("; failing: {}", fails.join(", ")) }
        ),
    ))
}
