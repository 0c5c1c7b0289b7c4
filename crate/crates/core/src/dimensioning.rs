//! Network dimensioning on top of the interference model: maximum BS power
//! for an interference-limited cell, area power density, log-normal outage
//! and coverage, Shannon rate density, and the CDMA base-station power
//! equation.

use serde::{Deserialize, Serialize};

use crate::config::NetworkConfig;
use crate::error::{ModelError, Result};
use crate::geometry::bs_density;
use crate::interference::ocif_spatial_distribution;
use crate::iopr::{iopr_spatial_stats, IoprCurve};
use crate::numerics::q_function;

/// Noise, bandwidth and link-level constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemConstants {
    /// Noise spectral density `N0`, W/Hz.
    pub noise_density: f64,
    /// System bandwidth `B_w`, Hz.
    pub bandwidth: f64,
    /// Required interference-to-noise margin for an interference-limited
    /// cell.
    pub interference_ratio: f64,
    pub subcarriers: u32,
    /// SINR target `γ*` (linear).
    pub gamma_target: f64,
    /// Intra-cell orthogonality factor `α ∈ [0, 1]`.
    pub orthogonality: f64,
    /// AWGN power `σ_n²` for the CDMA power equation, W.
    pub noise_power: f64,
    /// Common control channel power `P_cch`, W.
    pub control_power: f64,
}

impl Default for SystemConstants {
    fn default() -> Self {
        SystemConstants {
            noise_density: 4e-21,
            bandwidth: 5e6,
            interference_ratio: 1e5,
            subcarriers: 512,
            gamma_target: 1.0,
            orthogonality: 0.0,
            noise_power: 2e-14,
            control_power: 1.0,
        }
    }
}

impl SystemConstants {
    /// `N0·B_w`, equal to `N_s·σ_s²`.
    pub fn total_noise(&self) -> f64 {
        self.noise_density * self.bandwidth
    }

    /// Per-subcarrier noise `σ_s²`.
    pub fn subcarrier_noise(&self) -> f64 {
        self.total_noise() / f64::from(self.subcarriers)
    }

    pub fn validate(&self) -> Result<()> {
        for (field, v) in [
            ("noise_density", self.noise_density),
            ("bandwidth", self.bandwidth),
            ("gamma_target", self.gamma_target),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(ModelError::config(field, format!("{v} must be positive")));
            }
        }
        if !(self.interference_ratio >= 0.0) {
            return Err(ModelError::config(
                "interference_ratio",
                "must be non-negative",
            ));
        }
        if self.subcarriers == 0 {
            return Err(ModelError::config("subcarriers", "must be positive"));
        }
        if !(0.0..=1.0).contains(&self.orthogonality) {
            return Err(ModelError::config("orthogonality", "must lie in [0, 1]"));
        }
        if !(self.noise_power >= 0.0 && self.control_power >= 0.0) {
            return Err(ModelError::config(
                "noise_power/control_power",
                "must be non-negative",
            ));
        }
        Ok(())
    }
}

/// Largest BS power for which other-cell interference still exceeds noise
/// by the configured ratio: `ratio·N0·B_w/μ_G(R_c)`.
pub fn max_bs_power(cell_radius: f64, cfg: &NetworkConfig, sys: &SystemConstants) -> Result<f64> {
    let cfg = cfg.clone().with_cell_radius(cell_radius)?;
    let mu_g = ocif_spatial_distribution(&cfg, f64::INFINITY)?.mu_g;
    if !(mu_g > 0.0) {
        return Err(ModelError::ModelDomain(format!(
            "mean OCIF gain {mu_g} is not positive"
        )));
    }
    Ok(sys.interference_ratio * sys.total_noise() / mu_g)
}

/// `P_max·ρ_BS`, W/m².
pub fn power_density(cell_radius: f64, cfg: &NetworkConfig, sys: &SystemConstants) -> Result<f64> {
    Ok(max_bs_power(cell_radius, cfg, sys)? * bs_density(cell_radius))
}

/// Moment-matched log-normal surrogate for `f`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LognormalFit {
    pub m: f64,
    pub v: f64,
    pub mu: f64,
    /// Log-scale spread, already multiplied by √2 when `compensated`.
    pub sigma: f64,
    pub compensated: bool,
}

impl LognormalFit {
    /// `P[X > t]` under the fitted law.
    pub fn exceedance(&self, t: f64) -> f64 {
        let z = t.ln() - self.mu;
        if self.sigma == 0.0 {
            return if z > 0.0 {
                0.0
            } else if z < 0.0 {
                1.0
            } else {
                0.5
            };
        }
        q_function(z / self.sigma)
    }
}

/// `μ = ln(m/√(1+v/m²))`, `σ = √ln(1+v/m²)`; `σ` is scaled by √2 when
/// `compensate` is set, widening the surrogate for the truncated
/// near-neighbour terms.
pub fn fit_lognormal(m: f64, v: f64, compensate: bool) -> Result<LognormalFit> {
    if !(m > 0.0) || !m.is_finite() {
        return Err(ModelError::domain(
            "fit_lognormal",
            format!("mean {m} must be positive"),
        ));
    }
    if !(v >= 0.0) || !v.is_finite() {
        return Err(ModelError::domain(
            "fit_lognormal",
            format!("variance {v} must be non-negative"),
        ));
    }
    let spread = (v / (m * m)).ln_1p();
    let mut sigma = spread.sqrt();
    if compensate {
        sigma *= std::f64::consts::SQRT_2;
    }
    Ok(LognormalFit {
        m,
        v,
        mu: m.ln() - 0.5 * spread,
        sigma,
        compensated: compensate,
    })
}

/// Log-normal outage model built once from the IOPR curve and reused across
/// SIR thresholds.
#[derive(Debug, Clone)]
pub struct CoverageModel {
    pub iopr: IoprCurve,
    fits: Vec<Option<LognormalFit>>,
    pub compensate: bool,
}

/// Lower end of the SIR search range, dB.
pub const GAMMA_SEARCH_MIN_DB: f64 = -40.0;
/// Upper end of the SIR search range, dB.
pub const GAMMA_SEARCH_MAX_DB: f64 = 40.0;
/// Bisection stops once the bracket is this narrow, dB.
pub const GAMMA_RESOLUTION_DB: f64 = 0.01;

impl CoverageModel {
    pub fn new(cfg: &NetworkConfig, r_inf: f64, compensate: bool) -> Result<Self> {
        let iopr = iopr_spatial_stats(cfg, r_inf)?;
        let fits = iopr
            .points
            .iter()
            .map(|p| fit_point(p.mean, p.second, compensate))
            .collect::<Result<_>>()?;
        Ok(CoverageModel {
            iopr,
            fits,
            compensate,
        })
    }

    /// Outage at grid point `i`.
    fn outage_index(&self, i: usize, gamma: f64) -> f64 {
        match &self.fits[i] {
            Some(fit) => fit.exceedance(1.0 / gamma),
            // f̄ = 0: no interference, never in outage
            None => 0.0,
        }
    }

    /// Cell-average outage `∫O(r_b)p(r_b)dr_b / ∫p(r_b)dr_b`.
    pub fn cell_outage(&self, gamma: f64) -> Result<f64> {
        check_gamma(gamma)?;
        let o: Vec<f64> = (0..self.fits.len())
            .map(|i| self.outage_index(i, gamma))
            .collect();
        Ok(self.iopr.profile.weighted_mean(&o))
    }

    pub fn coverage(&self, gamma: f64) -> Result<f64> {
        Ok(1.0 - self.cell_outage(gamma)?)
    }

    pub fn coverage_curve(&self, gamma_grid_db: &[f64]) -> Result<Vec<CoveragePoint>> {
        if gamma_grid_db.is_empty() {
            return Err(ModelError::domain("coverage_curve", "empty SIR grid"));
        }
        gamma_grid_db
            .iter()
            .map(|&g| {
                Ok(CoveragePoint {
                    gamma_db: g,
                    coverage: self.coverage(db_to_linear(g))?,
                })
            })
            .collect()
    }

    /// Largest SIR threshold (dB) on the search range whose coverage still
    /// meets `target`, to within [`GAMMA_RESOLUTION_DB`].
    pub fn gamma_for_coverage(&self, target: f64) -> Result<f64> {
        if !(target > 0.0 && target < 1.0) {
            return Err(ModelError::domain(
                "gamma_for_coverage",
                format!("coverage target {target} is outside (0, 1)"),
            ));
        }
        let cov = |db: f64| self.coverage(db_to_linear(db));
        let (mut lo, mut hi) = (GAMMA_SEARCH_MIN_DB, GAMMA_SEARCH_MAX_DB);
        if cov(lo)? < target {
            return Err(ModelError::Range(format!(
                "coverage {target} is not reached even at {lo} dB"
            )));
        }
        if cov(hi)? >= target {
            return Err(ModelError::Range(format!(
                "coverage {target} still holds at {hi} dB; threshold lies above the search range"
            )));
        }
        while hi - lo > GAMMA_RESOLUTION_DB {
            let mid = 0.5 * (lo + hi);
            if cov(mid)? >= target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(lo)
    }
}

fn fit_point(mean: f64, second: f64, compensate: bool) -> Result<Option<LognormalFit>> {
    if mean == 0.0 {
        return Ok(None);
    }
    let v = second - mean * mean;
    if v < 0.0 {
        return Err(ModelError::Convergence {
            what: String::from("IOPR variance at a grid point"),
            estimate: v,
            error: v.abs(),
        });
    }
    fit_lognormal(mean, v, compensate).map(Some)
}

fn check_gamma(gamma: f64) -> Result<()> {
    if gamma > 0.0 {
        Ok(())
    } else {
        Err(ModelError::domain(
            "outage",
            format!("SIR target {gamma} must be positive"),
        ))
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(v: f64) -> f64 {
    10.0 * v.log10()
}

/// Outage probability `P[f > 1/γ*]` at one serving distance under the
/// √2-compensated log-normal fit.
pub fn outage_at(r_b: f64, gamma: f64, cfg: &NetworkConfig, r_inf: f64) -> Result<f64> {
    outage_at_with(r_b, gamma, cfg, r_inf, true)
}

pub fn outage_at_with(
    r_b: f64,
    gamma: f64,
    cfg: &NetworkConfig,
    r_inf: f64,
    compensate: bool,
) -> Result<f64> {
    check_gamma(gamma)?;
    let p = crate::iopr::iopr_point(r_b, cfg, r_inf)?;
    Ok(match fit_point(p.mean, p.second, compensate)? {
        Some(fit) => fit.exceedance(1.0 / gamma),
        None => 0.0,
    })
}

pub fn cell_outage(gamma: f64, cfg: &NetworkConfig, r_inf: f64) -> Result<f64> {
    CoverageModel::new(cfg, r_inf, true)?.cell_outage(gamma)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoveragePoint {
    pub gamma_db: f64,
    pub coverage: f64,
}

pub fn coverage_curve(
    gamma_grid_db: &[f64],
    cfg: &NetworkConfig,
    r_inf: f64,
) -> Result<Vec<CoveragePoint>> {
    CoverageModel::new(cfg, r_inf, true)?.coverage_curve(gamma_grid_db)
}

/// Shannon spectral efficiency `log2(1 + γ)`, bits/s/Hz.
pub fn shannon_capacity(gamma: f64) -> f64 {
    gamma.ln_1p() / std::f64::consts::LN_2
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateDensityPoint {
    pub cell_radius: f64,
    /// Cells per m².
    pub cell_density: f64,
    /// bits/s/Hz per m².
    pub rate_density: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateDensityCurve {
    pub coverage_target: f64,
    pub gamma_db: f64,
    /// bits/s/Hz per cell.
    pub capacity: f64,
    pub points: Vec<RateDensityPoint>,
}

/// Rate per unit area when every cell runs at the SIR threshold that meets
/// `coverage_target`. The threshold is solved separately at each cell size.
pub fn rate_density(
    coverage_target: f64,
    rc_grid: &[f64],
    cfg: &NetworkConfig,
    r_inf: f64,
) -> Result<RateDensityCurve> {
    if rc_grid.is_empty() {
        return Err(ModelError::domain("rate_density", "empty cell-size grid"));
    }
    let mut points = Vec::with_capacity(rc_grid.len());
    let mut first: Option<(f64, f64)> = None;
    for &rc in rc_grid {
        let c = cfg.clone().with_cell_radius(rc)?;
        let model = CoverageModel::new(&c, r_inf, true)?;
        let gamma_db = model.gamma_for_coverage(coverage_target)?;
        let capacity = shannon_capacity(db_to_linear(gamma_db));
        first.get_or_insert((gamma_db, capacity));
        let density = bs_density(rc);
        points.push(RateDensityPoint {
            cell_radius: rc,
            cell_density: density,
            rate_density: capacity * density,
        });
    }
    let (gamma_db, capacity) = first.expect("non-empty grid");
    Ok(RateDensityCurve {
        coverage_target,
        gamma_db,
        capacity,
        points,
    })
}

/// One mobile's inputs to the CDMA power equation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CdmaUser {
    pub r_b: f64,
    /// Interference-to-own-power ratio `f_u`.
    pub f: f64,
    /// Inverse serving gain `h_u = 1/G_{b,u}`.
    pub h: f64,
}

/// Base-station power under perfect power control:
/// `(P_cch + γσ_n²/(1+αγ)·Σh) / (1 − γ/(1+αγ)·Σ(α+f))`.
///
/// A non-positive denominator means the load cannot be served.
pub fn cdma_bs_power(users: &[CdmaUser], sys: &SystemConstants) -> Result<f64> {
    let g = sys.gamma_target;
    let alpha = sys.orthogonality;
    let k = g / (1.0 + alpha * g);
    let sum_h: f64 = users.iter().map(|u| u.h).sum();
    let sum_load: f64 = users.iter().map(|u| alpha + u.f).sum();
    let denominator = 1.0 - k * sum_load;
    if !(denominator > 0.0) {
        return Err(ModelError::InfeasibleLoad { denominator });
    }
    Ok((sys.control_power + k * sys.noise_power * sum_h) / denominator)
}

/// Figure-ready bundle of the dimensioning outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensioningResult {
    /// `(R_c, P_max)` in metres and watts.
    pub pmax: Vec<(f64, f64)>,
    /// `(R_c, P_max·ρ_BS)` in metres and W/m².
    pub power_density: Vec<(f64, f64)>,
    pub coverage: Vec<CoveragePoint>,
    pub rate_density: RateDensityCurve,
}

pub fn dimension(
    cfg: &NetworkConfig,
    sys: &SystemConstants,
    rc_grid: &[f64],
    gamma_grid_db: &[f64],
    coverage_target: f64,
    r_inf: f64,
) -> Result<DimensioningResult> {
    sys.validate()?;
    let mut pmax = Vec::new();
    let mut density = Vec::new();
    for &rc in rc_grid {
        let p = max_bs_power(rc, cfg, sys)?;
        pmax.push((rc, p));
        density.push((rc, p * bs_density(rc)));
    }
    Ok(DimensioningResult {
        pmax,
        power_density: density,
        coverage: coverage_curve(gamma_grid_db, cfg, r_inf)?,
        rate_density: rate_density(coverage_target, rc_grid, cfg, r_inf)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(sigma: f64) -> NetworkConfig {
        NetworkConfig::new(3.0, sigma, 1000.0).unwrap()
    }

    #[test]
    fn total_noise() {
        let sys = SystemConstants::default();
        assert!((sys.total_noise() - 2e-14).abs() < 1e-28);
        assert!((sys.subcarrier_noise() * 512.0 - 2e-14).abs() < 1e-28);
    }

    #[test]
    fn pmax_scaling_and_closure() {
        let c = cfg(8.0);
        let sys = SystemConstants::default();
        let p1 = max_bs_power(1000.0, &c, &sys).unwrap();
        let p2 = max_bs_power(2000.0, &c, &sys).unwrap();
        assert!(((p2 / p1) - 8.0).abs() < 8e-6);
        let mu_g = ocif_spatial_distribution(&c, f64::INFINITY).unwrap().mu_g;
        assert!(((p1 * mu_g) / (1e5 * 2e-14) - 1.0).abs() < 1e-12);
        let zero = SystemConstants {
            interference_ratio: 0.0,
            ..sys
        };
        assert_eq!(max_bs_power(1000.0, &c, &zero).unwrap(), 0.0);
    }

    #[test]
    fn power_density_scaling() {
        let sys = SystemConstants::default();
        let c = cfg(8.0);
        let d1 = power_density(500.0, &c, &sys).unwrap();
        let d2 = power_density(1000.0, &c, &sys).unwrap();
        assert!((d2 / d1 - 2.0).abs() < 2e-6);
        let mut last = 0.0;
        for rc in [125.0, 250.0, 500.0, 1000.0, 2000.0] {
            let d = power_density(rc, &c, &sys).unwrap();
            assert!(d > last);
            last = d;
        }
        let flat = c.with_eta(2.01).unwrap();
        let r = power_density(1000.0, &flat, &sys).unwrap()
            / power_density(500.0, &flat, &sys).unwrap();
        assert!((r - 2f64.powf(0.01)).abs() < 1e-6, "{r}");
    }

    #[test]
    fn lognormal_fit_examples() {
        let f = fit_lognormal(1.0, 0.0, false).unwrap();
        assert_eq!((f.mu, f.sigma), (0.0, 0.0));
        let f = fit_lognormal(2.0, 4.0, false).unwrap();
        assert!((f.mu - 0.5 * 2f64.ln()).abs() < 1e-15);
        assert!((f.sigma - 2f64.ln().sqrt()).abs() < 1e-15);
        let c = fit_lognormal(2.0, 4.0, true).unwrap();
        assert!((c.sigma - f.sigma * std::f64::consts::SQRT_2).abs() < 1e-15);
        assert_eq!(c.mu, f.mu);
        assert!(fit_lognormal(0.0, 1.0, false).is_err());
        assert!(fit_lognormal(1.0, -1.0, false).is_err());
    }

    #[test]
    fn degenerate_fit_steps() {
        let fit = fit_lognormal(0.5, 0.0, true).unwrap();
        // threshold 1/γ at the median m
        assert_eq!(fit.exceedance(0.5), 0.5);
        assert_eq!(fit.exceedance(0.6), 0.0);
        assert_eq!(fit.exceedance(0.4), 1.0);
    }

    #[test]
    fn outage_and_coverage_limits() {
        let c = cfg(8.0);
        assert!(cell_outage(1e-6, &c, f64::INFINITY).unwrap() < 1e-6);
        let curve = coverage_curve(&[-40.0, -10.0, 0.0, 10.0, 40.0], &c, f64::INFINITY).unwrap();
        assert!(curve[0].coverage > 0.999);
        assert!(curve[4].coverage < 0.05, "{}", curve[4].coverage);
        for w in curve.windows(2) {
            assert!(w[1].coverage <= w[0].coverage);
        }
        assert!(coverage_curve(&[], &c, f64::INFINITY).is_err());
        assert!(outage_at(1000.0, 0.0, &c, f64::INFINITY).is_err());
        let o = outage_at(1000.0, 1.0, &c, f64::INFINITY).unwrap();
        assert!((0.0..=1.0).contains(&o));
    }

    #[test]
    fn cell_outage_ignores_cell_size_and_k0() {
        let base = cell_outage(1.0, &cfg(8.0), f64::INFINITY).unwrap();
        let other = cell_outage(
            1.0,
            &cfg(8.0).with_cell_radius(250.0).unwrap(),
            f64::INFINITY,
        )
        .unwrap();
        assert!((base - other).abs() < 1e-12);
        let k = cell_outage(
            1.0,
            &cfg(8.0).with_k0(3.0).unwrap().with_r0(2.0).unwrap(),
            f64::INFINITY,
        )
        .unwrap();
        assert_eq!(base, k);
    }

    #[test]
    fn rate_density_examples() {
        assert_eq!(shannon_capacity(1.0), 1.0);
        let c = cfg(8.0);
        let curve = rate_density(0.7, &[250.0, 500.0, 1000.0], &c, f64::INFINITY).unwrap();
        let p = &curve.points;
        assert!((p[0].rate_density / p[1].rate_density - 4.0).abs() < 4e-6);
        assert!((p[1].rate_density / p[2].rate_density - 4.0).abs() < 4e-6);
        let model = CoverageModel::new(&c, f64::INFINITY, true).unwrap();
        let g = model.gamma_for_coverage(0.7).unwrap();
        assert!(model.coverage(db_to_linear(g)).unwrap() >= 0.7);
        assert!(model.coverage(db_to_linear(g + 0.01)).unwrap() < 0.7);
        let strict = rate_density(0.995, &[1000.0], &c, f64::INFINITY).unwrap();
        assert!(strict.capacity < curve.capacity && strict.capacity < 0.2);
        assert!(matches!(
            model.gamma_for_coverage(1.0 - 1e-15),
            Err(ModelError::Range(_)) | Err(ModelError::Domain { .. })
        ));
        assert!(model.gamma_for_coverage(0.0).is_err());
    }

    #[test]
    fn cdma_power_examples() {
        let sys = SystemConstants {
            gamma_target: 0.1,
            orthogonality: 0.0,
            noise_power: 2e-14,
            control_power: 1.0,
            ..SystemConstants::default()
        };
        assert_eq!(cdma_bs_power(&[], &sys).unwrap(), 1.0);
        let one = [CdmaUser {
            r_b: 500.0,
            f: 1.0,
            h: 1e10,
        }];
        let p = cdma_bs_power(&one, &sys).unwrap();
        assert!((p - (1.0 + 2e-5) / 0.9).abs() < 1e-12, "{p}");
        // Σ(α + f) = (1 + αγ)/γ puts the denominator at zero.
        let pole = [CdmaUser {
            r_b: 500.0,
            f: 10.0,
            h: 1e10,
        }];
        assert!(matches!(
            cdma_bs_power(&pole, &sys),
            Err(ModelError::InfeasibleLoad { .. })
        ));
        let near = [CdmaUser {
            r_b: 500.0,
            f: 9.999_999,
            h: 1e10,
        }];
        assert!(cdma_bs_power(&near, &sys).unwrap() > 1e6);
    }
}
