//! Hexagonal base-station lattice and the nearest-neighbour distance model.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{ModelError, Result};

/// Triangular lattice of base stations with spacing `2·R_c`, serving BS at
/// the origin, listed ring by ring.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridLayout {
    pub cell_radius: f64,
    pub tiers: usize,
    pub positions: Vec<[f64; 2]>,
}

impl GridLayout {
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// Radius of the disc with the same area as the hexagonal region the
    /// layout covers, `R_c·sqrt(2√3·N/π)`.
    pub fn equivalent_radius(&self) -> f64 {
        self.cell_radius * (2.0 * 3f64.sqrt() * self.len() as f64 / PI).sqrt()
    }
}

// Axial neighbour directions, counter-clockwise.
const AXIAL_DIRS: [(i64, i64); 6] = [(1, 0), (0, 1), (-1, 1), (-1, 0), (0, -1), (1, -1)];

/// Serving BS plus every lattice site within `tiers` hexagonal rings.
///
/// Ring `k` holds `6k` sites, so `tiers = 3` gives the 37-cell layout.
pub fn build_grid(cell_radius: f64, tiers: usize) -> Result<GridLayout> {
    if !(cell_radius > 0.0 && cell_radius.is_finite()) {
        return Err(ModelError::domain(
            "build_grid",
            format!("cell radius {cell_radius} must be positive"),
        ));
    }
    if tiers == 0 {
        return Err(ModelError::domain("build_grid", "need at least one tier"));
    }
    let spacing = 2.0 * cell_radius;
    let half_sqrt3 = 3f64.sqrt() / 2.0;
    let mut positions = vec![[0.0, 0.0]];
    for ring in 1..=tiers as i64 {
        // Start at ring·dir[4] and walk the six sides.
        let (mut q, mut r) = (AXIAL_DIRS[4].0 * ring, AXIAL_DIRS[4].1 * ring);
        for &(dq, dr) in &AXIAL_DIRS {
            for _ in 0..ring {
                let x = spacing * (q as f64 + 0.5 * r as f64);
                let y = spacing * half_sqrt3 * r as f64;
                positions.push([x, y]);
                q += dq;
                r += dr;
            }
        }
    }
    Ok(GridLayout {
        cell_radius,
        tiers,
        positions,
    })
}

/// Median-angle approximations of the distances from a mobile at `r_b` to
/// its three nearest co-channel base stations, plus the inner radius
/// `r̄_d = (r̄_2 + r̄_3)/2` of the far-field ring.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NearestDistances {
    pub r1: f64,
    pub r2: f64,
    pub r3: f64,
    pub rd: f64,
}

impl NearestDistances {
    pub fn get(&self, j: usize) -> f64 {
        match j {
            1 => self.r1,
            2 => self.r2,
            3 => self.r3,
            _ => panic!("nearest-cell index {j} out of 1..=3"),
        }
    }
}

/// Angles opposite the interferer distance: the median of each neighbour's
/// angular range.
pub(crate) const MEDIAN_ANGLES: [f64; 3] = [PI / 12.0, PI / 3.0 - PI / 12.0, PI / 3.0 + PI / 12.0];

/// Distances in units of `R_c` for a mobile at `x = r_b/R_c`.
pub(crate) fn normalized_nearest(x: f64) -> NearestDistances {
    let d = |theta: f64| (x * x + 4.0 - 4.0 * x * theta.cos()).sqrt();
    let (r1, r2, r3) = (
        d(MEDIAN_ANGLES[0]),
        d(MEDIAN_ANGLES[1]),
        d(MEDIAN_ANGLES[2]),
    );
    NearestDistances {
        r1,
        r2,
        r3,
        rd: 0.5 * (r2 + r3),
    }
}

pub fn nearest_distances(r_b: f64, cell_radius: f64) -> Result<NearestDistances> {
    check_serving_distance("nearest_distances", r_b, cell_radius)?;
    let n = normalized_nearest(r_b / cell_radius);
    Ok(NearestDistances {
        r1: n.r1 * cell_radius,
        r2: n.r2 * cell_radius,
        r3: n.r3 * cell_radius,
        rd: n.rd * cell_radius,
    })
}

pub(crate) fn check_serving_distance(op: &'static str, r_b: f64, cell_radius: f64) -> Result<()> {
    if r_b > 0.0 && r_b < 2.0 * cell_radius {
        Ok(())
    } else {
        Err(ModelError::domain(
            op,
            format!(
                "r_b = {r_b} is outside (0, 2R_c) = (0, {})",
                2.0 * cell_radius
            ),
        ))
    }
}

/// Base-station density of the hexagonal grid, `1/(2√3·R_c²)` per m².
pub fn bs_density(cell_radius: f64) -> f64 {
    1.0 / (2.0 * 3f64.sqrt() * cell_radius * cell_radius)
}
