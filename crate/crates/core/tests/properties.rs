use bestcell::attachment::attach_probability;
use bestcell::dimensioning::{
    cdma_bs_power, fit_lognormal, CdmaUser, CoverageModel, SystemConstants,
};
use bestcell::numerics::{q_function, q_inverse};
use bestcell::NetworkConfig;
use proptest::prelude::*;

proptest! {
    #[test]
    fn q_is_decreasing(x in -8.0f64..8.0, dx in 1e-6f64..1.0) {
        prop_assert!(q_function(x + dx) < q_function(x));
        prop_assert!((q_function(x) + q_function(-x) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn q_inverse_inverts(p in 1e-15f64..0.999_999) {
        let x = q_inverse(p).unwrap();
        prop_assert!(((q_function(x) - p) / p.min(1.0 - p)).abs() < 1e-9);
    }

    #[test]
    fn lognormal_fit_matches_moments(m in 1e-4f64..1e3, cv in 0.0f64..5.0) {
        let v = (cv * m).powi(2);
        let f = fit_lognormal(m, v, false).unwrap();
        let s2 = f.sigma * f.sigma;
        prop_assert!(((f.mu + 0.5 * s2).exp() / m - 1.0).abs() < 1e-12);
        if v > 0.0 {
            prop_assert!((s2.exp_m1() * (2.0 * f.mu + s2).exp() / v - 1.0).abs() < 1e-10);
        }
        let c = fit_lognormal(m, v, true).unwrap();
        prop_assert!((c.sigma / std::f64::consts::SQRT_2 - f.sigma).abs() <= 1e-15 * f.sigma.max(1.0));
    }

    #[test]
    fn attachment_is_a_probability_and_scale_free(x in 0.01f64..1.99, sigma in 4.0f64..14.0, rc in 50.0f64..5000.0) {
        let a = NetworkConfig::new(3.0, sigma, 1000.0).unwrap();
        let b = NetworkConfig::new(3.0, sigma, rc).unwrap();
        let pa = attach_probability(x * 1000.0, &a).unwrap();
        let pb = attach_probability(x * rc, &b).unwrap();
        prop_assert!((0.0..=1.0).contains(&pa));
        prop_assert!((pa - pb).abs() <= 1e-12);
    }

    #[test]
    fn cdma_power_grows_with_load(f1 in 0.0f64..3.0, extra in 0.0f64..3.0, gamma in 0.01f64..0.2) {
        let sys = SystemConstants { gamma_target: gamma, ..SystemConstants::default() };
        let u = |f| CdmaUser { r_b: 500.0, f, h: 1e9 };
        if let (Ok(p1), Ok(p2)) = (cdma_bs_power(&[u(f1)], &sys), cdma_bs_power(&[u(f1 + extra)], &sys)) {
            prop_assert!(p1 >= sys.control_power);
            prop_assert!(p2 >= p1);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]
    #[test]
    fn coverage_is_monotone_and_bounded(sigma in 6.0f64..12.0, mut grid in prop::collection::vec(-40.0f64..40.0, 2..12)) {
        grid.sort_by(f64::total_cmp);
        let cfg = NetworkConfig::new(3.0, sigma, 1000.0).unwrap().with_grid_points(100).unwrap();
        let curve = CoverageModel::new(&cfg, f64::INFINITY, true).unwrap().coverage_curve(&grid).unwrap();
        for w in curve.windows(2) {
            prop_assert!(w[1].coverage <= w[0].coverage);
        }
        prop_assert!(curve.iter().all(|p| (0.0..=1.0).contains(&p.coverage)));
    }
}
