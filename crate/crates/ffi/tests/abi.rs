use std::ptr;

use bestcell_ffi::*;

fn model(eta: f64, sigma: f64, rc: f64) -> *mut BcModel {
    let mut m = ptr::null_mut();
    assert_eq!(
        unsafe { bc_model_new(eta, sigma, rc, &mut m) },
        BcStatus::Ok
    );
    assert!(!m.is_null());
    m
}

fn last_error() -> String {
    let mut buf = vec![0 as std::ffi::c_char; 256];
    let n = unsafe { bc_last_error_message(buf.as_mut_ptr(), buf.len()) };
    let bytes: Vec<u8> = buf.iter().take(n.min(255)).map(|&c| c as u8).collect();
    String::from_utf8(bytes).unwrap()
}

#[test]
fn q_functions() {
    assert_eq!(bc_q_function(0.0), 0.5);
    let mut x = 0.0;
    assert_eq!(
        unsafe { bc_q_inverse(bc_q_function(1.5), &mut x) },
        BcStatus::Ok
    );
    assert!((x - 1.5).abs() < 1e-12);
    assert_eq!(unsafe { bc_q_inverse(1.5, &mut x) }, BcStatus::Domain);
    assert!(last_error().contains("q_inverse"));
    assert_eq!(
        unsafe { bc_q_inverse(0.5, ptr::null_mut()) },
        BcStatus::NullPointer
    );
}

#[test]
fn model_errors_map_to_status() {
    let mut m = ptr::null_mut();
    assert_eq!(
        unsafe { bc_model_new(2.0, 8.0, 1000.0, &mut m) },
        BcStatus::ModelDomain
    );
    assert!(m.is_null());
    assert_eq!(
        unsafe { bc_model_new(3.0, 8.0, -1.0, &mut m) },
        BcStatus::Config
    );
    let m = model(3.0, 8.0, 1000.0);
    assert_eq!(
        unsafe { bc_model_set_marginal_terms(m, 5) },
        BcStatus::Config
    );
    assert_eq!(unsafe { bc_model_set_marginal_terms(m, 3) }, BcStatus::Ok);
    let mut out = 0.0;
    assert_eq!(
        unsafe { bc_cell_outage(m, 0.0, f64::INFINITY, &mut out) },
        BcStatus::Domain
    );
    assert_eq!(
        unsafe { bc_attach_probability(ptr::null(), 500.0, &mut out) },
        BcStatus::NullPointer
    );
    unsafe { bc_model_free(m) };
    unsafe { bc_model_free(ptr::null_mut()) };
}

#[test]
fn analytic_calls_match_library() {
    let m = model(3.0, 8.0, 1000.0);
    let cfg = bestcell::NetworkConfig::new(3.0, 8.0, 1000.0).unwrap();

    let mut p = 0.0;
    assert_eq!(
        unsafe { bc_attach_probability(m, 1000.0, &mut p) },
        BcStatus::Ok
    );
    assert_eq!(
        p,
        bestcell::attachment::attach_probability(1000.0, &cfg).unwrap()
    );

    let mut terms = [0.0; 3];
    assert_eq!(
        unsafe { bc_ocif_terms(m, 1000.0, f64::INFINITY, terms.as_mut_ptr()) },
        BcStatus::Ok
    );
    assert_eq!(
        terms,
        bestcell::interference::ocif_terms(1000.0, &cfg, f64::INFINITY).unwrap()
    );

    let (mut mean, mut second) = (0.0, 0.0);
    assert_eq!(
        unsafe { bc_iopr_moments(m, 1000.0, f64::INFINITY, &mut mean, &mut second) },
        BcStatus::Ok
    );
    assert!(mean > 0.0 && second >= mean * mean);

    let (mut mu_g, mut mu_f, mut var_f) = (0.0, 0.0, 0.0);
    assert_eq!(
        unsafe { bc_spatial_stats(m, f64::INFINITY, &mut mu_g, &mut mu_f, &mut var_f) },
        BcStatus::Ok
    );
    assert!(mu_g > 0.0 && mu_f > 0.0 && var_f > 0.0);

    let mut o = 0.0;
    assert_eq!(
        unsafe { bc_cell_outage(m, 1.0, f64::INFINITY, &mut o) },
        BcStatus::Ok
    );
    assert!(o > 0.0 && o < 1.0);

    let (mut p1, mut p2) = (0.0, 0.0);
    assert_eq!(unsafe { bc_max_bs_power(m, 500.0, &mut p1) }, BcStatus::Ok);
    assert_eq!(unsafe { bc_max_bs_power(m, 1000.0, &mut p2) }, BcStatus::Ok);
    assert!((p2 / p1 / 8.0 - 1.0).abs() < 1e-6);
    unsafe { bc_model_free(m) };
}

#[test]
fn simulation_handle() {
    let m = model(3.0, 8.0, 1000.0);
    let run = |workers| {
        let mut r = ptr::null_mut();
        assert_eq!(
            unsafe { bc_simulate(m, 20_000, 9, workers, &mut r) },
            BcStatus::Ok
        );
        r
    };
    let (a, b) = (run(1), run(4));
    let n = unsafe { bc_sim_bin_count(a) };
    assert_eq!(n, 40);
    assert_eq!(unsafe { bc_sim_bin_count(ptr::null()) }, 0);
    let mut total = 0;
    for i in 0..n {
        let (mut x, mut y) = (BcBin::default(), BcBin::default());
        assert_eq!(unsafe { bc_sim_bin(a, i, &mut x) }, BcStatus::Ok);
        assert_eq!(unsafe { bc_sim_bin(b, i, &mut y) }, BcStatus::Ok);
        assert_eq!(x, y);
        total += x.dropped;
    }
    assert_eq!(total, 20_000);
    let mut bin = BcBin::default();
    assert_eq!(unsafe { bc_sim_bin(a, n, &mut bin) }, BcStatus::Domain);
    let (mut frac, mut mu_f, mut var_f) = (0.0, 0.0, 0.0);
    assert_eq!(
        unsafe { bc_sim_summary(a, &mut frac, &mut mu_f, &mut var_f) },
        BcStatus::Ok
    );
    assert!(frac > 0.1 && frac < 0.5 && mu_f > 0.0 && var_f > 0.0);
    unsafe {
        bc_sim_free(a);
        bc_sim_free(b);
        bc_model_free(m);
    }
}

#[test]
fn error_message_truncates() {
    let mut x = 0.0;
    let _ = unsafe { bc_q_inverse(2.0, &mut x) };
    let full = unsafe { bc_last_error_message(ptr::null_mut(), 0) };
    let mut small = [1 as std::ffi::c_char; 4];
    assert_eq!(
        unsafe { bc_last_error_message(small.as_mut_ptr(), 4) },
        full
    );
    assert_eq!(small[3], 0);
}

#[test]
fn header_declares_every_export() {
    let header =
        std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/bestcell.h"))
            .unwrap();
    let src = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/src/lib.rs")).unwrap();
    let exports: Vec<&str> = src
        .split("extern \"C\" fn ")
        .skip(1)
        .map(|s| s.split('(').next().unwrap())
        .collect();
    assert!(exports.len() >= 18, "{exports:?}");
    for f in exports {
        assert!(header.contains(&format!("{f}(")), "{f} missing from header");
    }
    assert!(header.contains("BC_STATUS_INFEASIBLE_LOAD"));
}
