//! Scalar model parameters shared by every analytical module.

use serde::{Deserialize, Serialize};

use crate::error::{ModelError, Result};
use crate::numerics::{QuadratureSpec, LN10_OVER_10};

/// How many nearest co-channel cells enter the attachment product.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MarginalTerms {
    /// Two terms for σ ≤ 10 dB, three above.
    Auto,
    Two,
    Three,
}

impl MarginalTerms {
    pub fn resolve(self, sigma_db: f64) -> usize {
        match self {
            MarginalTerms::Auto if sigma_db <= 10.0 => 2,
            MarginalTerms::Auto => 3,
            MarginalTerms::Two => 2,
            MarginalTerms::Three => 3,
        }
    }
}

/// Default number of r_b evaluation points on `(0, 2R_c)`.
pub const DEFAULT_GRID_POINTS: usize = 400;

/// Path-loss, shadowing and cell-size parameters.
///
/// Built through [`NetworkConfig::new`] and the `with_*` setters, each of
/// which validates, so a value of this type always satisfies the model's
/// invariants (`η > 2`, `σ > 0`, `k0 > 0`, `r0 > 0`, `R_c > 0`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkConfig {
    eta: f64,
    sigma_db: f64,
    k0: f64,
    r0: f64,
    cell_radius: f64,
    marginal_terms: MarginalTerms,
    grid_points: usize,
    quadrature: QuadratureSpec,
}

impl NetworkConfig {
    /// `k0 = -10 dB` at `r0 = 1 m`, automatic marginal-term count.
    pub fn new(eta: f64, sigma_db: f64, cell_radius: f64) -> Result<Self> {
        let cfg = NetworkConfig {
            eta,
            sigma_db,
            k0: 0.1,
            r0: 1.0,
            cell_radius,
            marginal_terms: MarginalTerms::Auto,
            grid_points: DEFAULT_GRID_POINTS,
            quadrature: QuadratureSpec::default(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        if !(self.eta > 2.0) || !self.eta.is_finite() {
            return Err(ModelError::ModelDomain(format!(
                "path-loss exponent {} must exceed 2 for the far-field interference to converge",
                self.eta
            )));
        }
        positive("sigma_db", self.sigma_db)?;
        positive("k0", self.k0)?;
        positive("r0", self.r0)?;
        positive("cell_radius", self.cell_radius)?;
        if self.grid_points < 2 {
            return Err(ModelError::config("grid_points", "need at least 2 points"));
        }
        self.quadrature.validate()
    }

    fn with(mut self, f: impl FnOnce(&mut Self)) -> Result<Self> {
        f(&mut self);
        self.validate()?;
        Ok(self)
    }

    pub fn with_eta(self, eta: f64) -> Result<Self> {
        self.with(|c| c.eta = eta)
    }
    pub fn with_sigma_db(self, sigma_db: f64) -> Result<Self> {
        self.with(|c| c.sigma_db = sigma_db)
    }
    pub fn with_k0(self, k0: f64) -> Result<Self> {
        self.with(|c| c.k0 = k0)
    }
    pub fn with_r0(self, r0: f64) -> Result<Self> {
        self.with(|c| c.r0 = r0)
    }
    pub fn with_cell_radius(self, cell_radius: f64) -> Result<Self> {
        self.with(|c| c.cell_radius = cell_radius)
    }
    pub fn with_marginal_terms(self, terms: MarginalTerms) -> Result<Self> {
        self.with(|c| c.marginal_terms = terms)
    }
    pub fn with_grid_points(self, n: usize) -> Result<Self> {
        self.with(|c| c.grid_points = n)
    }
    pub fn with_quadrature(self, q: QuadratureSpec) -> Result<Self> {
        self.with(|c| c.quadrature = q)
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }
    pub fn sigma_db(&self) -> f64 {
        self.sigma_db
    }
    pub fn k0(&self) -> f64 {
        self.k0
    }
    pub fn r0(&self) -> f64 {
        self.r0
    }
    /// Half the inter-site distance.
    pub fn cell_radius(&self) -> f64 {
        self.cell_radius
    }
    pub fn marginal_terms(&self) -> MarginalTerms {
        self.marginal_terms
    }
    /// Number of nearest cells in the attachment product (2 or 3).
    pub fn marginal_count(&self) -> usize {
        self.marginal_terms.resolve(self.sigma_db)
    }
    pub fn grid_points(&self) -> usize {
        self.grid_points
    }
    pub fn quadrature(&self) -> &QuadratureSpec {
        &self.quadrature
    }

    /// `a = ln(10)/10`.
    pub fn a(&self) -> f64 {
        LN10_OVER_10
    }

    /// `a·σ`, the shadowing spread in nepers.
    pub fn a_sigma(&self) -> f64 {
        LN10_OVER_10 * self.sigma_db
    }

    /// Diagnostics for configurations outside the calibrated 8–12 dB range.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.marginal_terms == MarginalTerms::Auto && !(8.0..=12.0).contains(&self.sigma_db) {
            out.push(format!(
                "sigma {} dB is outside the 8-12 dB range the attachment approximation was \
                 calibrated for; using {} marginal terms",
                self.sigma_db,
                self.marginal_count()
            ));
        }
        out
    }
}

fn positive(field: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(ModelError::config(
            field,
            format!("{v} must be positive and finite"),
        ))
    }
}
