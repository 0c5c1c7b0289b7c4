//! Single-point analytic values checked against the grid simulator at
//! η = 3, σ = 8 dB. With 41 bins over (0, 2R_c) the middle bin is centred
//! on r_b = R_c; analytic values are averaged over that bin with weight
//! p(r_b) so both sides describe the same population.

use std::sync::OnceLock;

use bestcell::attachment::{mean_owncell_gain, mobile_density, AttachmentProfile};
use bestcell::dimensioning::outage_at;
use bestcell::geometry::build_grid;
use bestcell::interference::{ocif_near_term, ocif_terms};
use bestcell::iopr::{iopr_near_mean, iopr_spatial_stats, iopr_total};
use bestcell::montecarlo::{simulate, BinStats, SimResult, SimSpec};
use bestcell::NetworkConfig;

const RC: f64 = 1000.0;

fn cfg() -> NetworkConfig {
    NetworkConfig::new(3.0, 8.0, RC).unwrap()
}

fn sim() -> &'static SimResult {
    static SIM: OnceLock<SimResult> = OnceLock::new();
    SIM.get_or_init(|| {
        let mut spec = SimSpec::new(cfg(), 1_000_000, 42);
        spec.bins = 41;
        simulate(&spec).unwrap()
    })
}

fn edge_bin() -> &'static BinStats {
    let s = sim();
    let b = &s.bins[s.bin_of(RC).unwrap()];
    assert!((b.center() - RC).abs() < 1e-9);
    b
}

fn grid_radius() -> f64 {
    build_grid(RC, 3).unwrap().equivalent_radius()
}

/// `∫v·p / ∫p` over the edge bin.
fn bin_mean(v: impl Fn(f64) -> f64) -> f64 {
    let b = edge_bin();
    let cfg = cfg();
    let n = 64;
    let (mut s, mut w) = (0.0, 0.0);
    for i in 0..n {
        let r = b.r_lo + (i as f64 + 0.5) * (b.r_hi - b.r_lo) / n as f64;
        let p = mobile_density(r, &cfg).unwrap();
        s += v(r) * p;
        w += p;
    }
    s / w
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

#[test]
fn owncell_gain_at_cell_edge() {
    let c = cfg();
    let an = bin_mean(|r| mean_owncell_gain(r, &c).unwrap());
    let mc = edge_bin().own_gain.mean;
    println!("own-cell gain: analytic {an:.5e}, simulated {mc:.5e}");
    assert!(rel(an, mc) <= 0.02, "relative error {}", rel(an, mc));
}

#[test]
fn attached_mass() {
    let an = AttachmentProfile::build(&cfg()).mass();
    let mc = sim().attached_fraction;
    println!("attached fraction: analytic {an:.5}, simulated {mc:.5}");
    assert!(an < 1.0);
    assert!(rel(an, mc) <= 0.02, "relative error {}", rel(an, mc));
}

#[test]
fn nearest_interferer_gain() {
    let c = cfg();
    let an = bin_mean(|r| ocif_near_term(r, 1, &c).unwrap());
    let mc = edge_bin().ocif_near[0].mean;
    println!("nearest interferer gain: analytic {an:.5e}, simulated {mc:.5e}");
    assert!(rel(an, mc) <= 0.05, "relative error {}", rel(an, mc));
}

fn total_ocif_check(r_inf: f64) {
    let c = cfg();
    let an = bin_mean(|r| ocif_terms(r, &c, r_inf).unwrap().iter().sum());
    let mc = edge_bin().ocif.mean;
    println!("total OCIF (r_inf = {r_inf:.0}): analytic {an:.5e}, simulated {mc:.5e}");
    assert!(an <= mc, "analytic exceeds simulation");
    assert!(rel(an, mc) <= 0.15, "relative gap {}", rel(an, mc));
}

#[test]
fn total_ocif_bound_unbounded_network() {
    total_ocif_check(f64::INFINITY);
}

#[test]
fn total_ocif_bound_matched_network() {
    total_ocif_check(grid_radius());
}

#[test]
fn nearest_interferer_iopr() {
    let c = cfg();
    let an = bin_mean(|r| iopr_near_mean(r, 1, &c).unwrap());
    let mc = edge_bin().f_near[0].mean;
    println!("nearest interferer IOPR: analytic {an:.5}, simulated {mc:.5}");
    assert!(rel(an, mc) <= 0.10, "relative error {}", rel(an, mc));
}

fn total_iopr_check(r_inf: f64) {
    let c = cfg();
    let an = bin_mean(|r| iopr_total(r, &c, r_inf).unwrap().0);
    let mc = edge_bin().f;
    println!(
        "total IOPR (r_inf = {r_inf:.0}): analytic {an:.5}, simulated {:.5} ± {:.5}",
        mc.mean, mc.se
    );
    assert!(an <= mc.mean + 2.0 * mc.se);
}

#[test]
fn total_iopr_bound_unbounded_network() {
    total_iopr_check(f64::INFINITY);
}

#[test]
fn total_iopr_bound_matched_network() {
    total_iopr_check(grid_radius());
}

#[test]
fn mean_iopr_over_cell() {
    let an = iopr_spatial_stats(&cfg(), grid_radius()).unwrap().mu_f;
    let mc = sim().mu_f;
    println!("mu_f: analytic {an:.5}, simulated {mc:.5}");
    assert!(rel(an, mc) <= 0.10, "relative error {}", rel(an, mc));
}

#[test]
fn outage_at_cell_edge() {
    let c = cfg();
    let r_inf = grid_radius();
    let an = bin_mean(|r| outage_at(r, 1.0, &c, r_inf).unwrap());
    let s = sim();
    let mc = s.bin_outage(s.bin_of(RC).unwrap(), 1.0).unwrap();
    println!("outage at 0 dB: analytic {an:.4}, simulated {:.4}", mc.mean);
    assert!((an - mc.mean).abs() <= 0.05);
}
