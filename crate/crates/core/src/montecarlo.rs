//! Grid simulator used as the oracle for the analytical model.
//!
//! Mobiles are dropped uniformly on the disc of radius `2R_c` around the
//! centre BS of a finite hexagonal layout. Every BS gets an independent
//! shadowing draw and the mobile attaches to the strongest received
//! signal; only mobiles attached to the centre BS enter the conditional
//! statistics. Interference uses exact distances to every other site.
//!
//! Samples are generated in fixed-size batches, each with its own ChaCha
//! stream selected by batch index, and batch results are merged in index
//! order. The output is therefore a function of the seed and sample count
//! only, whatever the worker count.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::NetworkConfig;
use crate::error::{ModelError, Result};
use crate::geometry::build_grid;

const BATCH: u64 = 4096;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimSpec {
    pub cfg: NetworkConfig,
    pub tiers: usize,
    pub samples: u64,
    pub seed: u64,
    /// Rayon threads; 0 uses the global pool. Results do not depend on it,
    /// so it is left out of serialized output.
    #[serde(skip)]
    pub workers: usize,
    pub bins: usize,
}

impl SimSpec {
    pub fn new(cfg: NetworkConfig, samples: u64, seed: u64) -> Self {
        SimSpec {
            cfg,
            tiers: 3,
            samples,
            seed,
            workers: 0,
            bins: 40,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.samples == 0 {
            return Err(ModelError::config("samples", "need at least one sample"));
        }
        if self.tiers == 0 {
            return Err(ModelError::config("tiers", "need at least one tier"));
        }
        if self.bins == 0 {
            return Err(ModelError::config("bins", "need at least one bin"));
        }
        Ok(())
    }
}

/// Running sums for a sample mean and its standard error.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
struct Moments {
    n: u64,
    sum: f64,
    sum_sq: f64,
}

impl Moments {
    fn push(&mut self, v: f64) {
        self.n += 1;
        self.sum += v;
        self.sum_sq += v * v;
    }

    fn merge(&mut self, o: &Moments) {
        self.n += o.n;
        self.sum += o.sum;
        self.sum_sq += o.sum_sq;
    }

    fn estimate(&self) -> Estimate {
        if self.n == 0 {
            return Estimate {
                mean: f64::NAN,
                se: f64::NAN,
            };
        }
        let n = self.n as f64;
        let mean = self.sum / n;
        let se = if self.n >= 2 {
            let var = ((self.sum_sq - n * mean * mean) / (n - 1.0)).max(0.0);
            (var / n).sqrt()
        } else {
            f64::NAN
        };
        Estimate { mean, se }
    }
}

/// A sample mean with its standard error (`NaN` when undefined).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub se: f64,
}

#[derive(Debug, Clone, Default)]
struct BinAcc {
    total: u64,
    r_b: Moments,
    own_gain: Moments,
    ocif: Moments,
    ocif_near: [Moments; 2],
    ocif_far: Moments,
    f: Moments,
    f_sq: Moments,
    f_near: [Moments; 2],
    f_far: Moments,
}

impl BinAcc {
    fn merge(&mut self, o: &BinAcc) {
        self.total += o.total;
        self.r_b.merge(&o.r_b);
        self.own_gain.merge(&o.own_gain);
        self.ocif.merge(&o.ocif);
        self.ocif_far.merge(&o.ocif_far);
        self.f.merge(&o.f);
        self.f_sq.merge(&o.f_sq);
        self.f_far.merge(&o.f_far);
        for k in 0..2 {
            self.ocif_near[k].merge(&o.ocif_near[k]);
            self.f_near[k].merge(&o.f_near[k]);
        }
    }
}

/// One mobile attached to the centre BS.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttachedSample {
    pub r_b: f64,
    /// Serving-BS shadowing in dB.
    pub xi_b: f64,
    pub own_gain: f64,
    pub ocif: f64,
    pub f: f64,
}

/// Conditional statistics for one `r_b` bin. Interferers are ranked by
/// exact distance: `near[0]` is the closest other site, `near[1]` the
/// second closest, `far` everything else.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinStats {
    pub r_lo: f64,
    pub r_hi: f64,
    /// Mobiles dropped in the bin.
    pub total: u64,
    /// Of those, attached to the centre BS.
    pub attached: u64,
    pub attach_freq: Estimate,
    pub r_b: Estimate,
    pub own_gain: Estimate,
    pub ocif: Estimate,
    pub ocif_near: [Estimate; 2],
    pub ocif_far: Estimate,
    pub f: Estimate,
    /// Mean of `f²`.
    pub f_sq: Estimate,
    pub f_near: [Estimate; 2],
    pub f_far: Estimate,
}

impl BinStats {
    pub fn center(&self) -> f64 {
        0.5 * (self.r_lo + self.r_hi)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    pub spec: SimSpec,
    pub bins: Vec<BinStats>,
    pub total_samples: u64,
    pub attached: u64,
    pub attached_fraction: f64,
    /// Mean of `f` over attached mobiles.
    pub mu_f: f64,
    /// Variance of `f` over attached mobiles.
    pub var_f: f64,
    pub shadowing_draws: u64,
    pub shadowing_mean: f64,
    pub shadowing_std: f64,
    /// Per-mobile records, in generation order. Not serialized.
    #[serde(skip)]
    pub samples: Vec<AttachedSample>,
}

struct BatchOut {
    bins: Vec<BinAcc>,
    samples: Vec<AttachedSample>,
    xi: Moments,
}

struct Geometry {
    sites: Vec<[f64; 2]>,
    disc: f64,
    eta: f64,
    a: f64,
    sigma: f64,
    gain_scale: f64,
    bins: usize,
}

fn run_batch(geo: &Geometry, seed: u64, batch: u64, count: u64) -> BatchOut {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(batch);
    let n_sites = geo.sites.len();
    let mut bins = vec![BinAcc::default(); geo.bins];
    let mut samples = Vec::new();
    let mut xi_stats = Moments::default();
    let mut xi = vec![0.0; n_sites];
    let mut log_d = vec![0.0; n_sites];
    for _ in 0..count {
        // 1 - u lies in (0, 1], keeping the mobile off the centre site.
        let u: f64 = rng.random();
        let r = geo.disc * (1.0 - u).sqrt();
        let theta = 2.0 * PI * rng.random::<f64>();
        let (px, py) = (r * theta.cos(), r * theta.sin());

        let mut best = 0;
        let mut best_score = f64::NEG_INFINITY;
        for i in 0..n_sites {
            let z: f64 = rng.sample(StandardNormal);
            xi[i] = geo.sigma * z;
            xi_stats.push(xi[i]);
            let [sx, sy] = geo.sites[i];
            let d2 = (px - sx).powi(2) + (py - sy).powi(2);
            log_d[i] = 0.5 * d2.ln();
            let score = -geo.eta * log_d[i] - geo.a * xi[i];
            if score > best_score {
                best_score = score;
                best = i;
            }
        }
        let bin = ((r / geo.disc * geo.bins as f64) as usize).min(geo.bins - 1);
        let acc = &mut bins[bin];
        acc.total += 1;
        if best != 0 {
            continue;
        }
        let gain = |i: usize| geo.gain_scale * (-geo.eta * log_d[i] - geo.a * xi[i]).exp();
        // Two closest interferers by exact distance.
        let (mut n1, mut n2) = (usize::MAX, usize::MAX);
        for i in 1..n_sites {
            if n1 == usize::MAX || log_d[i] < log_d[n1] {
                n2 = n1;
                n1 = i;
            } else if n2 == usize::MAX || log_d[i] < log_d[n2] {
                n2 = i;
            }
        }
        let own = gain(0);
        let (g1, g2) = (gain(n1), gain(n2));
        let far: f64 = (1..n_sites).filter(|&i| i != n1 && i != n2).map(gain).sum();
        let ocif = g1 + g2 + far;
        let f = ocif / own;
        acc.r_b.push(r);
        acc.own_gain.push(own);
        acc.ocif.push(ocif);
        acc.ocif_near[0].push(g1);
        acc.ocif_near[1].push(g2);
        acc.ocif_far.push(far);
        acc.f.push(f);
        acc.f_sq.push(f * f);
        acc.f_near[0].push(g1 / own);
        acc.f_near[1].push(g2 / own);
        acc.f_far.push(far / own);
        samples.push(AttachedSample {
            r_b: r,
            xi_b: xi[0],
            own_gain: own,
            ocif,
            f,
        });
    }
    BatchOut {
        bins,
        samples,
        xi: xi_stats,
    }
}

pub fn simulate(spec: &SimSpec) -> Result<SimResult> {
    spec.validate()?;
    let cfg = &spec.cfg;
    let layout = build_grid(cfg.cell_radius(), spec.tiers)?;
    let geo = Geometry {
        sites: layout.positions,
        disc: 2.0 * cfg.cell_radius(),
        eta: cfg.eta(),
        a: cfg.a(),
        sigma: cfg.sigma_db(),
        gain_scale: cfg.k0() * cfg.r0().powf(cfg.eta()),
        bins: spec.bins,
    };
    let n_batches = spec.samples.div_ceil(BATCH);
    let work = |b: u64| {
        let count = BATCH.min(spec.samples - b * BATCH);
        run_batch(&geo, spec.seed, b, count)
    };
    let batches: Vec<BatchOut> = if spec.workers == 0 {
        (0..n_batches).into_par_iter().map(work).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(spec.workers)
            .build()
            .map_err(|e| ModelError::config("workers", e.to_string()))?;
        pool.install(|| (0..n_batches).into_par_iter().map(work).collect())
    };

    let mut bins = vec![BinAcc::default(); spec.bins];
    let mut samples = Vec::new();
    let mut xi = Moments::default();
    for b in batches {
        for (acc, part) in bins.iter_mut().zip(&b.bins) {
            acc.merge(part);
        }
        samples.extend(b.samples);
        xi.merge(&b.xi);
    }

    let attached = samples.len() as u64;
    let (mut f_all, mut f_sq_all) = (0.0, 0.0);
    for s in &samples {
        f_all += s.f;
        f_sq_all += s.f * s.f;
    }
    let mu_f = f_all / attached as f64;
    let var_f = f_sq_all / attached as f64 - mu_f * mu_f;
    let xi_est = xi.estimate();
    let width = geo.disc / spec.bins as f64;
    let bins = bins
        .into_iter()
        .enumerate()
        .map(|(i, acc)| {
            let att = acc.f.n;
            let freq = if acc.total > 0 {
                att as f64 / acc.total as f64
            } else {
                f64::NAN
            };
            BinStats {
                r_lo: width * i as f64,
                r_hi: width * (i + 1) as f64,
                total: acc.total,
                attached: att,
                attach_freq: Estimate {
                    mean: freq,
                    se: (freq * (1.0 - freq) / acc.total as f64).sqrt(),
                },
                r_b: acc.r_b.estimate(),
                own_gain: acc.own_gain.estimate(),
                ocif: acc.ocif.estimate(),
                ocif_near: [acc.ocif_near[0].estimate(), acc.ocif_near[1].estimate()],
                ocif_far: acc.ocif_far.estimate(),
                f: acc.f.estimate(),
                f_sq: acc.f_sq.estimate(),
                f_near: [acc.f_near[0].estimate(), acc.f_near[1].estimate()],
                f_far: acc.f_far.estimate(),
            }
        })
        .collect();
    Ok(SimResult {
        spec: spec.clone(),
        bins,
        total_samples: spec.samples,
        attached,
        attached_fraction: attached as f64 / spec.samples as f64,
        mu_f,
        var_f,
        shadowing_draws: xi.n,
        shadowing_mean: xi_est.mean,
        shadowing_std: (xi.sum_sq / xi.n as f64 - xi_est.mean * xi_est.mean).sqrt(),
        samples,
    })
}

/// Empirical coverage `P[f ≤ 1/γ*]` at one threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoverageEstimate {
    pub gamma_db: f64,
    pub coverage: f64,
    pub se: f64,
}

fn binomial(hits: usize, n: usize) -> Estimate {
    let p = hits as f64 / n as f64;
    Estimate {
        mean: p,
        se: (p * (1.0 - p) / n as f64).sqrt(),
    }
}

/// Fraction of attached mobiles meeting each SIR threshold, with binomial
/// standard errors.
pub fn empirical_coverage(result: &SimResult, gamma_grid_db: &[f64]) -> Vec<CoverageEstimate> {
    let mut f: Vec<f64> = result.samples.iter().map(|s| s.f).collect();
    f.sort_by(f64::total_cmp);
    gamma_grid_db
        .iter()
        .map(|&g_db| {
            let limit = 10f64.powf(-g_db / 10.0);
            let covered = f.partition_point(|&v| v <= limit);
            let est = binomial(covered, f.len());
            CoverageEstimate {
                gamma_db: g_db,
                coverage: est.mean,
                se: est.se,
            }
        })
        .collect()
}

impl SimResult {
    /// Width of each `r_b` bin in metres.
    pub fn bin_width(&self) -> f64 {
        2.0 * self.spec.cfg.cell_radius() / self.spec.bins as f64
    }

    /// Index of the bin containing `r_b`.
    pub fn bin_of(&self, r_b: f64) -> Option<usize> {
        let i = (r_b / self.bin_width()).floor();
        (i >= 0.0 && (i as usize) < self.bins.len()).then_some(i as usize)
    }

    fn in_bin(&self, bin: usize) -> impl Iterator<Item = &AttachedSample> {
        let (lo, hi) = (self.bins[bin].r_lo, self.bins[bin].r_hi);
        self.samples
            .iter()
            .filter(move |s| s.r_b >= lo && s.r_b < hi)
    }

    /// Empirical outage `P[f > 1/γ*]` among attached mobiles in one bin.
    pub fn bin_outage(&self, bin: usize, gamma: f64) -> Option<Estimate> {
        let (mut n, mut out) = (0usize, 0usize);
        for s in self.in_bin(bin) {
            n += 1;
            if s.f > 1.0 / gamma {
                out += 1;
            }
        }
        (n > 0).then(|| binomial(out, n))
    }

    /// Empirical `q`-quantile of the serving-BS shadowing among attached
    /// mobiles in one bin.
    pub fn bin_xi_quantile(&self, bin: usize, q: f64) -> Option<f64> {
        let mut xi: Vec<f64> = self.in_bin(bin).map(|s| s.xi_b).collect();
        if xi.is_empty() {
            return None;
        }
        xi.sort_by(f64::total_cmp);
        let idx = ((q * xi.len() as f64).ceil() as usize).clamp(1, xi.len()) - 1;
        Some(xi[idx])
    }

    /// Spatial density `n_bin·mean/(N_attached·Δr)`, the empirical
    /// counterpart of `v(r_b)·p(r_b)/∫p`, for a conditional mean `mean` of
    /// the given bin.
    pub fn bin_density(&self, bin: usize, mean: Estimate) -> Estimate {
        let scale = self.bins[bin].attached as f64 / (self.attached as f64 * self.bin_width());
        Estimate {
            mean: scale * mean.mean,
            se: scale * mean.se,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(sigma: f64, samples: u64) -> SimSpec {
        SimSpec::new(NetworkConfig::new(3.0, sigma, 1000.0).unwrap(), samples, 7)
    }

    #[test]
    fn deterministic_across_workers() {
        let mut a = spec(8.0, 20_000);
        a.workers = 1;
        let mut b = a.clone();
        b.workers = 8;
        let (ra, rb) = (simulate(&a).unwrap(), simulate(&b).unwrap());
        assert_eq!(ra.bins, rb.bins);
        assert_eq!(ra.samples, rb.samples);
        assert_eq!(ra.mu_f.to_bits(), rb.mu_f.to_bits());
        assert_eq!(ra.shadowing_mean.to_bits(), rb.shadowing_mean.to_bits());
    }

    #[test]
    fn different_seeds_differ() {
        let a = spec(8.0, 5_000);
        let mut b = a.clone();
        b.seed = 8;
        assert_ne!(simulate(&a).unwrap().samples, simulate(&b).unwrap().samples);
    }

    #[test]
    fn counts_are_consistent() {
        let r = simulate(&spec(10.0, 30_000)).unwrap();
        assert_eq!(r.bins.iter().map(|b| b.total).sum::<u64>(), 30_000);
        assert_eq!(r.bins.iter().map(|b| b.attached).sum::<u64>(), r.attached);
        assert_eq!(r.shadowing_draws, 30_000 * 37);
        for b in &r.bins {
            assert!((0.0..=1.0).contains(&b.attach_freq.mean));
            if b.attached >= 2 {
                assert!(b.f.se > 0.0);
            }
        }
        let s: u64 = (0..r.bins.len()).map(|i| r.in_bin(i).count() as u64).sum();
        assert_eq!(s, r.attached);
    }

    #[test]
    fn no_shadowing_attaches_to_nearest() {
        // Inside the inscribed circle (r < R_c) the centre is always nearest;
        // beyond 2R_c/√3 (the hexagon's circumradius) it never is.
        let r = simulate(&spec(1e-6, 40_000)).unwrap();
        for b in &r.bins {
            if b.r_hi <= 1000.0 {
                assert_eq!(b.attach_freq.mean, 1.0);
            }
            if b.r_lo >= 2000.0 / 3f64.sqrt() {
                assert_eq!(b.attach_freq.mean, 0.0);
            }
        }
    }

    #[test]
    fn coverage_is_monotone() {
        let r = simulate(&spec(8.0, 20_000)).unwrap();
        let grid: Vec<f64> = (-40..=40).map(|g| g as f64).collect();
        let cov = empirical_coverage(&r, &grid);
        assert!(cov[0].coverage > 0.999);
        for w in cov.windows(2) {
            assert!(w[1].coverage <= w[0].coverage);
        }
        let at_zero = empirical_coverage(&r, &[-400.0]);
        assert_eq!(at_zero[0].coverage, 1.0);
    }

    #[test]
    fn rejects_empty_spec() {
        let mut s = spec(8.0, 0);
        assert!(simulate(&s).is_err());
        s.samples = 10;
        s.bins = 0;
        assert!(simulate(&s).is_err());
    }
}
