//! Mean other-cell interference (OCIF) propagation gain conditioned on
//! best-cell attachment.
//!
//! The two nearest neighbours are treated individually; everything beyond
//! is folded into a fluid ring of base-station density `ρ_BS` starting at
//! `r̄_d = (r̄_2 + r̄_3)/2`. The ring term is a lower bound on the true
//! far-field sum, and the closed form is used as the model value.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::attachment::{
    attach_probability_normalized, xi_b_max_from_probability, AttachmentProfile,
};
use crate::config::NetworkConfig;
use crate::error::{ModelError, Result};
use crate::geometry::{check_serving_distance, normalized_nearest};
use crate::numerics::{integrate, normal_pdf, q_function};

/// `∫_{-∞}^{h} Q(shift + t) φ(t) dt` with the lower tail cut at
/// `-tail_cutoff`.
pub(crate) fn conditioned_q_integral(cfg: &NetworkConfig, shift: f64, h: f64) -> Result<f64> {
    let spec = cfg.quadrature();
    let c = spec.tail_cutoff;
    let upper = h.min(c);
    if upper <= -c {
        return Ok(0.0);
    }
    integrate(|t| q_function(shift + t) * normal_pdf(t), -c, upper, spec)
}

/// Per-point conditioning shared by all neighbour terms.
struct Conditioning {
    p_attach: f64,
    /// `ξ_max/σ`
    h: f64,
}

fn conditioning(cfg: &NetworkConfig, x: f64) -> Conditioning {
    let p_attach = attach_probability_normalized(cfg, x);
    Conditioning {
        p_attach,
        h: xi_b_max_from_probability(p_attach, cfg) / cfg.sigma_db(),
    }
}

/// `k0·(r0/R_c)^η`: the path-loss constant with distances in units of R_c.
fn path_scale(cfg: &NetworkConfig) -> f64 {
    cfg.k0() * (cfg.r0() / cfg.cell_radius()).powf(cfg.eta())
}

/// `(η/(aσ))·ln(x/n) + aσ`, the standardized shift of the inner integral.
fn inner_shift(cfg: &NetworkConfig, ratio: f64) -> f64 {
    cfg.eta() / cfg.a_sigma() * ratio.ln() + cfg.a_sigma()
}

/// Fluid ring factor in units of `R_c^{-η}` (multiplied by `k0·(r0/R_c)^η`
/// elsewhere): `2π/(2√3·(η−2))·(n_d^{2−η} − n_∞^{2−η})`.
pub(crate) fn normalized_ring(cfg: &NetworkConfig, rd: f64, r_inf_norm: f64) -> f64 {
    let e = 2.0 - cfg.eta();
    2.0 * PI / (2.0 * 3f64.sqrt() * (cfg.eta() - 2.0)) * (rd.powf(e) - r_inf_norm.powf(e))
}

pub(crate) fn check_r_inf(op: &'static str, r_inf_norm: f64, rd: f64) -> Result<()> {
    if r_inf_norm >= rd {
        Ok(())
    } else {
        Err(ModelError::domain(
            op,
            format!("r_inf/R_c = {r_inf_norm} lies inside the ring start r̄_d/R_c = {rd}"),
        ))
    }
}

fn near_term_normalized(cfg: &NetworkConfig, x: f64, j: usize, cond: &Conditioning) -> Result<f64> {
    if cond.p_attach <= 0.0 {
        return Ok(0.0);
    }
    let n = normalized_nearest(x).get(j);
    let integral = conditioned_q_integral(cfg, inner_shift(cfg, x / n), cond.h)
        .map_err(|e| e.in_integral(format!("OCIF near term j={j} at r_b/R_c={x}")))?;
    let ln_mean = (0.5 * cfg.a_sigma().powi(2)).exp();
    Ok(path_scale(cfg) * n.powf(-cfg.eta()) * ln_mean / cond.p_attach * integral)
}

fn far_term_normalized(
    cfg: &NetworkConfig,
    x: f64,
    r_inf_norm: f64,
    cond: &Conditioning,
) -> Result<f64> {
    let near = normalized_nearest(x);
    check_r_inf("ocif_far_term", r_inf_norm, near.rd)?;
    if cond.p_attach <= 0.0 {
        return Ok(0.0);
    }
    let ring = normalized_ring(cfg, near.rd, r_inf_norm);
    if ring == 0.0 {
        return Ok(0.0);
    }
    let integral = conditioned_q_integral(cfg, inner_shift(cfg, x / near.r3), cond.h)
        .map_err(|e| e.in_integral(format!("OCIF far term at r_b/R_c={x}")))?;
    let ln_mean = (0.5 * cfg.a_sigma().powi(2)).exp();
    Ok(path_scale(cfg) * ring * ln_mean / cond.p_attach * integral)
}

fn check_j(j: usize) -> Result<()> {
    if j == 1 || j == 2 {
        Ok(())
    } else {
        Err(ModelError::domain(
            "near term",
            format!("neighbour index {j} must be 1 or 2"),
        ))
    }
}

/// Mean interference gain from the `j`-th nearest neighbour (`j ∈ {1, 2}`)
/// given attachment to the serving BS.
pub fn ocif_near_term(r_b: f64, j: usize, cfg: &NetworkConfig) -> Result<f64> {
    check_j(j)?;
    check_serving_distance("ocif_near_term", r_b, cfg.cell_radius())?;
    let x = r_b / cfg.cell_radius();
    near_term_normalized(cfg, x, j, &conditioning(cfg, x))
}

/// Fluid-ring interference gain from the third neighbour onwards, out to
/// `r_inf` metres (`f64::INFINITY` for an unbounded network).
pub fn ocif_far_term(r_b: f64, cfg: &NetworkConfig, r_inf: f64) -> Result<f64> {
    check_serving_distance("ocif_far_term", r_b, cfg.cell_radius())?;
    let x = r_b / cfg.cell_radius();
    far_term_normalized(cfg, x, r_inf / cfg.cell_radius(), &conditioning(cfg, x))
}

/// `(Ḡ_1, Ḡ_2, Ḡ_{3+})` at one serving distance.
pub fn ocif_terms(r_b: f64, cfg: &NetworkConfig, r_inf: f64) -> Result<[f64; 3]> {
    check_serving_distance("ocif_terms", r_b, cfg.cell_radius())?;
    terms_normalized(cfg, r_b / cfg.cell_radius(), r_inf / cfg.cell_radius())
}

fn terms_normalized(cfg: &NetworkConfig, x: f64, r_inf_norm: f64) -> Result<[f64; 3]> {
    let cond = conditioning(cfg, x);
    Ok([
        near_term_normalized(cfg, x, 1, &cond)?,
        near_term_normalized(cfg, x, 2, &cond)?,
        far_term_normalized(cfg, x, r_inf_norm, &cond)?,
    ])
}

/// OCIF gain tabulated over the serving-distance grid, with its spatial
/// density and spatial mean `μ_G`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OcifCurve {
    pub profile: AttachmentProfile,
    pub g1: Vec<f64>,
    pub g2: Vec<f64>,
    pub g3_plus: Vec<f64>,
    pub total: Vec<f64>,
    /// `p(r_b)·ΣḠ/∫p` per metre.
    pub density: Vec<f64>,
    pub mu_g: f64,
    pub r_inf: f64,
}

pub fn ocif_spatial_distribution(cfg: &NetworkConfig, r_inf: f64) -> Result<OcifCurve> {
    let profile = AttachmentProfile::build(cfg);
    let r_inf_norm = r_inf / cfg.cell_radius();
    let terms: Vec<[f64; 3]> = profile
        .x
        .par_iter()
        .map(|&x| terms_normalized(cfg, x, r_inf_norm))
        .collect::<Result<_>>()?;
    let g1: Vec<f64> = terms.iter().map(|t| t[0]).collect();
    let g2: Vec<f64> = terms.iter().map(|t| t[1]).collect();
    let g3_plus: Vec<f64> = terms.iter().map(|t| t[2]).collect();
    let total: Vec<f64> = terms.iter().map(|t| t[0] + t[1] + t[2]).collect();
    let density = profile.spatial_density(&total);
    let mu_g = profile.weighted_mean(&total);
    Ok(OcifCurve {
        profile,
        g1,
        g2,
        g3_plus,
        total,
        density,
        mu_g,
        r_inf,
    })
}
