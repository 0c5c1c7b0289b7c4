//! First and second moments of the interference-to-own-power ratio
//! `f = Σ_{i≠b} G_i / G_b` under best-cell attachment.
//!
//! Each near-neighbour term is normalized by its own marginal
//! `P_{u∉Ψ(j)}`, and the far ring by the third-neighbour marginal, with the
//! shift `δ_j = (Q⁻¹(P_attach) − margin_j)/σ` moving the conditioning from
//! the marginal event to joint attachment. The OCIF module instead
//! normalizes by the joint probability; both follow their closed forms.
//!
//! Cross terms in `f̄²` multiply conditional means, i.e. neighbour shadowing
//! is treated as independent given attachment.

use std::f64::consts::SQRT_2;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::attachment::{attach_probability_normalized, selection_margin, AttachmentProfile};
use crate::config::NetworkConfig;
use crate::error::{ModelError, Result};
use crate::geometry::{check_serving_distance, normalized_nearest};
use crate::interference::{check_r_inf, normalized_ring};
use crate::numerics::{q_function, q_inverse};

/// Clamp applied to `P_attach` before inverting it for `δ_j`.
pub const ATTACH_CLAMP: f64 = 1e-12;

/// `ln Q(x)`, using the Mills-ratio expansion where `Q` would underflow.
fn ln_q(x: f64) -> f64 {
    if x < 30.0 {
        q_function(x).ln()
    } else {
        // Q(x) ~ φ(x)/x·(1 − 1/x² + 3/x⁴)
        let series = (1.0 - 1.0 / (x * x) + 3.0 / x.powi(4)) / x;
        -0.5 * x * x - 0.5 * (2.0 * std::f64::consts::PI).ln() + series.ln()
    }
}

/// `Q(a)/Q(b)` without underflow in the upper tail.
fn q_ratio(a: f64, b: f64) -> f64 {
    if b < 30.0 && a < 30.0 {
        return q_function(a) / q_function(b);
    }
    (ln_q(a) - ln_q(b)).exp()
}

/// All per-neighbour IOPR quantities at one serving distance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IoprPoint {
    /// `f̄_1, f̄_2, f̄_{3+}`
    pub mean_terms: [f64; 3],
    /// `f̄_1², f̄_2², f̄_{3+}²` (second moments, not squared means)
    pub second_terms: [f64; 3],
    /// `δ_1, δ_2, δ_3`
    pub delta: [f64; 3],
    pub mean: f64,
    pub second: f64,
}

impl IoprPoint {
    /// `f̄² − (f̄)²`
    pub fn variance(&self) -> f64 {
        self.second - self.mean * self.mean
    }
}

/// Closed form for one neighbour: `e^{k²s²}/P_j · R^{k} · Q(L + k√2·s + δ)`
/// with `s = aσ`, `P_j = Q(L)`, order `k`, and `R` the path-loss ratio
/// already raised to `η`.
pub(crate) fn neighbour_moment(
    cfg: &NetworkConfig,
    margin: f64,
    delta: f64,
    weight: f64,
    order: u32,
) -> f64 {
    let k = f64::from(order);
    let s = cfg.a_sigma();
    if weight == 0.0 {
        return 0.0;
    }
    (k * k * s * s).exp()
        * weight.powi(order as i32)
        * q_ratio(margin + k * SQRT_2 * s + delta, margin)
}

pub(crate) fn point_normalized(cfg: &NetworkConfig, x: f64, r_inf_norm: f64) -> Result<IoprPoint> {
    let near = normalized_nearest(x);
    check_r_inf("iopr", r_inf_norm, near.rd)?;
    let p = attach_probability_normalized(cfg, x).clamp(ATTACH_CLAMP, 1.0 - ATTACH_CLAMP);
    let q_inv_p = q_inverse(p)?;
    let eta = cfg.eta();
    let sigma = cfg.sigma_db();

    let mut margin = [0.0; 3];
    let mut delta = [0.0; 3];
    for j in 0..3 {
        margin[j] = selection_margin(cfg, x / near.get(j + 1));
        delta[j] = (q_inv_p - margin[j]) / sigma;
    }
    let weight = [
        (x / near.r1).powf(eta),
        (x / near.r2).powf(eta),
        // 2πρ_BS·r_b^η·(r̄_d^{2−η} − r_∞^{2−η})/(η−2), all in units of R_c
        x.powf(eta) * normalized_ring(cfg, near.rd, r_inf_norm),
    ];
    let mut mean_terms = [0.0; 3];
    let mut second_terms = [0.0; 3];
    for j in 0..3 {
        mean_terms[j] = neighbour_moment(cfg, margin[j], delta[j], weight[j], 1);
        second_terms[j] = neighbour_moment(cfg, margin[j], delta[j], weight[j], 2);
    }
    Ok(combine(mean_terms, second_terms, delta))
}

/// Sums the per-neighbour moments, adding the pairwise cross terms
/// `2·f̄_i·f̄_j` to the second moment.
pub fn combine(mean_terms: [f64; 3], second_terms: [f64; 3], delta: [f64; 3]) -> IoprPoint {
    let [m1, m2, m3] = mean_terms;
    let mean = m1 + m2 + m3;
    let second = second_terms.iter().sum::<f64>() + 2.0 * (m1 * m2 + m1 * m3 + m2 * m3);
    IoprPoint {
        mean_terms,
        second_terms,
        delta,
        mean,
        second,
    }
}

fn at(op: &'static str, r_b: f64, cfg: &NetworkConfig, r_inf: f64) -> Result<IoprPoint> {
    check_serving_distance(op, r_b, cfg.cell_radius())?;
    let rc = cfg.cell_radius();
    point_normalized(cfg, r_b / rc, r_inf / rc)
}

/// `f̄_j` for the nearest (`j = 1`) or second-nearest (`j = 2`) neighbour.
pub fn iopr_near_mean(r_b: f64, j: usize, cfg: &NetworkConfig) -> Result<f64> {
    if j != 1 && j != 2 {
        return Err(ModelError::domain(
            "iopr_near_mean",
            format!("neighbour index {j} must be 1 or 2"),
        ));
    }
    Ok(at("iopr_near_mean", r_b, cfg, f64::INFINITY)?.mean_terms[j - 1])
}

/// `f̄_{3+}`: the fluid-ring contribution out to `r_inf` metres.
pub fn iopr_far_mean(r_b: f64, cfg: &NetworkConfig, r_inf: f64) -> Result<f64> {
    Ok(at("iopr_far_mean", r_b, cfg, r_inf)?.mean_terms[2])
}

/// `[f̄_1², f̄_2², f̄_{3+}²]`.
pub fn iopr_second_moments(r_b: f64, cfg: &NetworkConfig, r_inf: f64) -> Result<[f64; 3]> {
    Ok(at("iopr_second_moments", r_b, cfg, r_inf)?.second_terms)
}

/// `(f̄, f̄²)` including cross terms.
pub fn iopr_total(r_b: f64, cfg: &NetworkConfig, r_inf: f64) -> Result<(f64, f64)> {
    let p = at("iopr_total", r_b, cfg, r_inf)?;
    Ok((p.mean, p.second))
}

pub fn iopr_point(r_b: f64, cfg: &NetworkConfig, r_inf: f64) -> Result<IoprPoint> {
    at("iopr_point", r_b, cfg, r_inf)
}

/// IOPR moments over the serving-distance grid with their spatial
/// densities, spatial mean `μ_f` and spatial variance `σ_f²`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IoprCurve {
    pub profile: AttachmentProfile,
    pub points: Vec<IoprPoint>,
    pub mean: Vec<f64>,
    pub second: Vec<f64>,
    /// `f̄·p/∫p`
    pub mean_density: Vec<f64>,
    /// `f̄²·p/∫p`
    pub second_density: Vec<f64>,
    pub mu_f: f64,
    pub var_f: f64,
    pub r_inf: f64,
}

pub fn iopr_spatial_stats(cfg: &NetworkConfig, r_inf: f64) -> Result<IoprCurve> {
    let profile = AttachmentProfile::build(cfg);
    let r_inf_norm = r_inf / cfg.cell_radius();
    let points: Vec<IoprPoint> = profile
        .x
        .par_iter()
        .map(|&x| point_normalized(cfg, x, r_inf_norm))
        .collect::<Result<_>>()?;
    let mean: Vec<f64> = points.iter().map(|p| p.mean).collect();
    let second: Vec<f64> = points.iter().map(|p| p.second).collect();
    let mu_f = profile.weighted_mean(&mean);
    let var_f = profile.weighted_mean(&second) - mu_f * mu_f;
    if !(var_f >= 0.0) {
        return Err(ModelError::Convergence {
            what: String::from("IOPR spatial variance"),
            estimate: var_f,
            error: var_f.abs(),
        });
    }
    Ok(IoprCurve {
        mean_density: profile.spatial_density(&mean),
        second_density: profile.spatial_density(&second),
        profile,
        points,
        mean,
        second,
        mu_f,
        var_f,
        r_inf,
    })
}
