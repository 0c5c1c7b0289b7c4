//! Best-cell attachment: marginal and joint attachment probabilities, the
//! attached-mobile radial density, the shadowing truncation point and the
//! conditional mean own-cell gain.
//!
//! Everything that depends on geometry only through `r_b/R_c` is computed
//! from the normalized distance `x = r_b/R_c`, so rescaling the network
//! leaves these quantities bit-identical.

use std::f64::consts::SQRT_2;

use serde::{Deserialize, Serialize};

use crate::config::NetworkConfig;
use crate::error::{ModelError, Result};
use crate::geometry::{check_serving_distance, normalized_nearest};
use crate::numerics::{q_function, q_inverse, truncated_ln_partial_moment};

/// `(η/(√2·a·σ))·ln(ratio)`, the standardized cell-selection margin against
/// one neighbour when the shadowing difference has variance `2σ²`.
pub(crate) fn selection_margin(cfg: &NetworkConfig, ratio: f64) -> f64 {
    cfg.eta() / (SQRT_2 * cfg.a_sigma()) * ratio.ln()
}

/// Probability that the mobile is not captured by a neighbour at `r_j`.
pub fn marginal_not_in_cell(r_b: f64, r_j: f64, cfg: &NetworkConfig) -> Result<f64> {
    if !(r_b > 0.0 && r_j > 0.0) {
        return Err(ModelError::domain(
            "marginal_not_in_cell",
            format!("distances must be positive (r_b = {r_b}, r_j = {r_j})"),
        ));
    }
    Ok(q_function(selection_margin(cfg, r_b / r_j)))
}

pub(crate) fn attach_probability_normalized(cfg: &NetworkConfig, x: f64) -> f64 {
    let near = normalized_nearest(x);
    (1..=cfg.marginal_count())
        .map(|j| q_function(selection_margin(cfg, x / near.get(j))))
        .product()
}

/// Probability that the serving BS is the strongest, approximated by the
/// product of the marginals against the nearest 2 or 3 neighbours.
pub fn attach_probability(r_b: f64, cfg: &NetworkConfig) -> Result<f64> {
    check_serving_distance("attach_probability", r_b, cfg.cell_radius())?;
    Ok(attach_probability_normalized(cfg, r_b / cfg.cell_radius()))
}

/// Radial density of attached mobiles over the `2R_c` disc,
/// `p(r_b) = r_b/(2R_c²)·P_attach(r_b)`.
pub fn mobile_density(r_b: f64, cfg: &NetworkConfig) -> Result<f64> {
    let rc = cfg.cell_radius();
    Ok(r_b / (2.0 * rc * rc) * attach_probability(r_b, cfg)?)
}

/// Truncation point of the serving-BS shadowing given the attachment
/// probability: the normal CDF at `ξ_max/σ` equals `p_attach`. Certain
/// attachment maps to `+cutoff·σ`, impossible attachment to `-cutoff·σ`.
pub fn xi_b_max_from_probability(p_attach: f64, cfg: &NetworkConfig) -> f64 {
    let sigma = cfg.sigma_db();
    let cutoff = cfg.quadrature().tail_cutoff * sigma;
    if p_attach >= 1.0 {
        return cutoff;
    }
    if p_attach <= 0.0 {
        return -cutoff;
    }
    match q_inverse(1.0 - p_attach) {
        Ok(z) => (z * sigma).clamp(-cutoff, cutoff),
        // 1 - p rounded to 0 or 1
        Err(_) => cutoff,
    }
}

pub fn xi_b_max(r_b: f64, cfg: &NetworkConfig) -> Result<f64> {
    Ok(xi_b_max_from_probability(
        attach_probability(r_b, cfg)?,
        cfg,
    ))
}

/// Mean serving-BS propagation gain conditioned on attachment:
/// `k0·(r0/r_b)^η · E[e^{-aξ_b}; ξ_b < ξ_max] / P_attach`.
pub fn mean_owncell_gain(r_b: f64, cfg: &NetworkConfig) -> Result<f64> {
    if r_b <= cfg.r0() {
        return Err(ModelError::domain(
            "mean_owncell_gain",
            format!("r_b = {r_b} is inside the near field r0 = {}", cfg.r0()),
        ));
    }
    let p = attach_probability(r_b, cfg)?;
    if p <= 0.0 {
        return Err(ModelError::domain(
            "mean_owncell_gain",
            format!("attachment probability underflows at r_b = {r_b}"),
        ));
    }
    let xi_max = xi_b_max_from_probability(p, cfg);
    let path = cfg.k0() * (cfg.r0() / r_b).powf(cfg.eta());
    Ok(path * truncated_ln_partial_moment(cfg.a(), cfg.sigma_db(), xi_max, 1) / p)
}

/// Attachment quantities tabulated on the midpoint grid
/// `x_i = (i + ½)·2/N`, `r_b = x·R_c`, which is open at both ends of
/// `(0, 2R_c)` and scales exactly with `R_c`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttachmentProfile {
    pub cell_radius: f64,
    /// `r_b/R_c` per grid point.
    pub x: Vec<f64>,
    pub r_b: Vec<f64>,
    pub p_attach: Vec<f64>,
    /// `p(r_b)` per metre.
    pub density: Vec<f64>,
    /// `ξ_max` in dB.
    pub xi_max: Vec<f64>,
    /// Grid spacing in metres.
    pub step: f64,
}

impl AttachmentProfile {
    pub fn build(cfg: &NetworkConfig) -> Self {
        let n = cfg.grid_points();
        let rc = cfg.cell_radius();
        let x: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) * 2.0 / n as f64).collect();
        let p_attach: Vec<f64> = x
            .iter()
            .map(|&xi| attach_probability_normalized(cfg, xi))
            .collect();
        // p(r_b) = x/(2R_c)·P_attach
        let density = x
            .iter()
            .zip(&p_attach)
            .map(|(&xi, &p)| xi / (2.0 * rc) * p)
            .collect();
        let xi_max = p_attach
            .iter()
            .map(|&p| xi_b_max_from_probability(p, cfg))
            .collect();
        AttachmentProfile {
            cell_radius: rc,
            r_b: x.iter().map(|&xi| xi * rc).collect(),
            x,
            p_attach,
            density,
            xi_max,
            step: 2.0 * rc / n as f64,
        }
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// `∫ p(r_b) dr_b` over `(0, 2R_c)`: the fraction of the disc attached
    /// to the serving BS.
    pub fn mass(&self) -> f64 {
        self.density.iter().sum::<f64>() * self.step
    }

    /// `∫ v·p / ∫ p` for values tabulated on this grid.
    pub fn weighted_mean(&self, values: &[f64]) -> f64 {
        assert_eq!(values.len(), self.len());
        let num: f64 = values.iter().zip(&self.density).map(|(v, p)| v * p).sum();
        num / self.density.iter().sum::<f64>()
    }

    /// Normalized spatial density `v·p/∫p` per grid point.
    pub fn spatial_density(&self, values: &[f64]) -> Vec<f64> {
        let mass = self.mass();
        values
            .iter()
            .zip(&self.density)
            .map(|(v, p)| v * p / mass)
            .collect()
    }
}
