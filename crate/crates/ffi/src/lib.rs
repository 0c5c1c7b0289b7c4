//! C interface to the `bestcell` model.
//!
//! Functions return a [`BcStatus`] and write results through out-pointers.
//! Handles are opaque and must be released with the matching `*_free`
//! function. After a failure, [`bc_last_error_message`] describes the most
//! recent error on the calling thread.

use std::cell::RefCell;
use std::ffi::c_char;
use std::panic::{catch_unwind, AssertUnwindSafe};

use bestcell::dimensioning::{cell_outage, max_bs_power, SystemConstants};
use bestcell::interference::{ocif_spatial_distribution, ocif_terms};
use bestcell::iopr::{iopr_spatial_stats, iopr_total};
use bestcell::montecarlo::{simulate, SimResult, SimSpec};
use bestcell::{MarginalTerms, ModelError, NetworkConfig};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BcStatus {
    Ok = 0,
    NullPointer = 1,
    Domain = 2,
    ModelDomain = 3,
    Convergence = 4,
    InfeasibleLoad = 5,
    Range = 6,
    Config = 7,
    Panic = 8,
}

/// Network configuration handle.
pub struct BcModel {
    cfg: NetworkConfig,
}

/// Simulation result handle.
pub struct BcSimResult {
    result: SimResult,
}

/// Per-bin simulation statistics.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct BcBin {
    pub r_lo: f64,
    pub r_hi: f64,
    pub dropped: u64,
    pub attached: u64,
    pub attach_freq: f64,
    pub attach_freq_se: f64,
    pub own_gain: f64,
    pub ocif: f64,
    pub ocif_se: f64,
    pub f_mean: f64,
    pub f_mean_se: f64,
    pub f_sq_mean: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(e: &ModelError) -> BcStatus {
    match e {
        ModelError::Domain { .. } => BcStatus::Domain,
        ModelError::ModelDomain(_) => BcStatus::ModelDomain,
        ModelError::Convergence { .. } => BcStatus::Convergence,
        ModelError::InfeasibleLoad { .. } => BcStatus::InfeasibleLoad,
        ModelError::Range(_) => BcStatus::Range,
        ModelError::Config { .. } => BcStatus::Config,
    }
}

/// Runs `f`, converting errors and panics to a status code.
fn guard(f: impl FnOnce() -> Result<(), BcFail>) -> BcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => BcStatus::Ok,
        Ok(Err(BcFail::Null(what))) => {
            set_error(format!("null pointer: {what}"));
            BcStatus::NullPointer
        }
        Ok(Err(BcFail::Model(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_error("internal panic".into());
            BcStatus::Panic
        }
    }
}

enum BcFail {
    Null(&'static str),
    Model(ModelError),
}

impl From<ModelError> for BcFail {
    fn from(e: ModelError) -> Self {
        BcFail::Model(e)
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, BcFail> {
    // SAFETY: caller guarantees a non-null `p` points to a live `T`.
    unsafe { p.as_ref() }.ok_or(BcFail::Null(what))
}

unsafe fn deref_mut<'a, T>(p: *mut T, what: &'static str) -> Result<&'a mut T, BcFail> {
    // SAFETY: caller guarantees a non-null `p` points to a writable `T`.
    unsafe { p.as_mut() }.ok_or(BcFail::Null(what))
}

/// Copies the last error message into `buf` (NUL-terminated, truncated to
/// `len`) and returns the full message length in bytes.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn bc_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            // SAFETY: `buf` has room for `len` bytes and `n < len`.
            unsafe {
                std::ptr::copy_nonoverlapping(msg.as_ptr().cast::<c_char>(), buf, n);
                *buf.add(n) = 0;
            }
        }
        msg.len()
    })
}

/// Creates a model with default `k0`, `r0`, term count and grid.
///
/// # Safety
/// `out` must be null or a valid pointer to write the handle to.
#[no_mangle]
pub unsafe extern "C" fn bc_model_new(
    eta: f64,
    sigma_db: f64,
    cell_radius: f64,
    out: *mut *mut BcModel,
) -> BcStatus {
    guard(|| {
        let out = unsafe { deref_mut(out, "out") }?;
        let cfg = NetworkConfig::new(eta, sigma_db, cell_radius)?;
        *out = Box::into_raw(Box::new(BcModel { cfg }));
        Ok(())
    })
}

/// # Safety
/// `model` must be null or a handle from [`bc_model_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn bc_model_free(model: *mut BcModel) {
    if !model.is_null() {
        // SAFETY: the handle came from `Box::into_raw` in `bc_model_new`.
        drop(unsafe { Box::from_raw(model) });
    }
}

unsafe fn update(
    model: *mut BcModel,
    f: impl FnOnce(NetworkConfig) -> bestcell::Result<NetworkConfig>,
) -> BcStatus {
    guard(|| {
        let m = unsafe { deref_mut(model, "model") }?;
        m.cfg = f(m.cfg.clone())?;
        Ok(())
    })
}

/// # Safety
/// `model` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn bc_model_set_k0(model: *mut BcModel, k0: f64) -> BcStatus {
    unsafe { update(model, |c| c.with_k0(k0)) }
}

/// # Safety
/// `model` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn bc_model_set_r0(model: *mut BcModel, r0: f64) -> BcStatus {
    unsafe { update(model, |c| c.with_r0(r0)) }
}

/// `terms` is 0 for automatic selection, otherwise 2 or 3.
///
/// # Safety
/// `model` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn bc_model_set_marginal_terms(model: *mut BcModel, terms: u32) -> BcStatus {
    let t = match terms {
        0 => MarginalTerms::Auto,
        2 => MarginalTerms::Two,
        3 => MarginalTerms::Three,
        _ => {
            set_error(format!("marginal term count {terms} is not 0, 2 or 3"));
            return BcStatus::Config;
        }
    };
    unsafe { update(model, |c| c.with_marginal_terms(t)) }
}

/// # Safety
/// `model` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn bc_model_set_grid_points(model: *mut BcModel, n: usize) -> BcStatus {
    unsafe { update(model, |c| c.with_grid_points(n)) }
}

#[no_mangle]
pub extern "C" fn bc_q_function(x: f64) -> f64 {
    bestcell::numerics::q_function(x)
}

/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bc_q_inverse(p: f64, out: *mut f64) -> BcStatus {
    guard(|| {
        let out = unsafe { deref_mut(out, "out") }?;
        *out = bestcell::numerics::q_inverse(p)?;
        Ok(())
    })
}

/// # Safety
/// `model` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bc_attach_probability(
    model: *const BcModel,
    r_b: f64,
    out: *mut f64,
) -> BcStatus {
    guard(|| {
        let m = unsafe { deref(model, "model") }?;
        let out = unsafe { deref_mut(out, "out") }?;
        *out = bestcell::attachment::attach_probability(r_b, &m.cfg)?;
        Ok(())
    })
}

/// Writes the two near-neighbour OCIF terms and the far-field term.
/// Pass `INFINITY` for an unbounded network.
///
/// # Safety
/// `model` must be a live handle and `out` must point to 3 doubles.
#[no_mangle]
pub unsafe extern "C" fn bc_ocif_terms(
    model: *const BcModel,
    r_b: f64,
    r_inf: f64,
    out: *mut f64,
) -> BcStatus {
    guard(|| {
        let m = unsafe { deref(model, "model") }?;
        if out.is_null() {
            return Err(BcFail::Null("out"));
        }
        let t = ocif_terms(r_b, &m.cfg, r_inf)?;
        // SAFETY: `out` points to 3 writable doubles.
        unsafe { std::ptr::copy_nonoverlapping(t.as_ptr(), out, 3) };
        Ok(())
    })
}

/// Conditional mean and second moment of the interference-to-own-power
/// ratio at `r_b`.
///
/// # Safety
/// `model` must be a live handle; `mean` and `second` valid pointers.
#[no_mangle]
pub unsafe extern "C" fn bc_iopr_moments(
    model: *const BcModel,
    r_b: f64,
    r_inf: f64,
    mean: *mut f64,
    second: *mut f64,
) -> BcStatus {
    guard(|| {
        let m = unsafe { deref(model, "model") }?;
        let mean = unsafe { deref_mut(mean, "mean") }?;
        let second = unsafe { deref_mut(second, "second") }?;
        let (a, b) = iopr_total(r_b, &m.cfg, r_inf)?;
        *mean = a;
        *second = b;
        Ok(())
    })
}

/// Cell-wide mean OCIF gain and mean and variance of the IOPR.
///
/// # Safety
/// `model` must be a live handle; out-pointers valid.
#[no_mangle]
pub unsafe extern "C" fn bc_spatial_stats(
    model: *const BcModel,
    r_inf: f64,
    mu_g: *mut f64,
    mu_f: *mut f64,
    var_f: *mut f64,
) -> BcStatus {
    guard(|| {
        let m = unsafe { deref(model, "model") }?;
        let mu_g = unsafe { deref_mut(mu_g, "mu_g") }?;
        let mu_f = unsafe { deref_mut(mu_f, "mu_f") }?;
        let var_f = unsafe { deref_mut(var_f, "var_f") }?;
        *mu_g = ocif_spatial_distribution(&m.cfg, r_inf)?.mu_g;
        let io = iopr_spatial_stats(&m.cfg, r_inf)?;
        *mu_f = io.mu_f;
        *var_f = io.var_f;
        Ok(())
    })
}

/// Cell-average outage at a linear SIR threshold.
///
/// # Safety
/// `model` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bc_cell_outage(
    model: *const BcModel,
    gamma: f64,
    r_inf: f64,
    out: *mut f64,
) -> BcStatus {
    guard(|| {
        let m = unsafe { deref(model, "model") }?;
        let out = unsafe { deref_mut(out, "out") }?;
        *out = cell_outage(gamma, &m.cfg, r_inf)?;
        Ok(())
    })
}

/// Maximum BS power at `cell_radius` with the default noise constants.
///
/// # Safety
/// `model` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bc_max_bs_power(
    model: *const BcModel,
    cell_radius: f64,
    out: *mut f64,
) -> BcStatus {
    guard(|| {
        let m = unsafe { deref(model, "model") }?;
        let out = unsafe { deref_mut(out, "out") }?;
        *out = max_bs_power(cell_radius, &m.cfg, &SystemConstants::default())?;
        Ok(())
    })
}

/// Runs the grid simulation. `workers = 0` uses all cores; results do not
/// depend on `workers`.
///
/// # Safety
/// `model` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bc_simulate(
    model: *const BcModel,
    samples: u64,
    seed: u64,
    workers: usize,
    out: *mut *mut BcSimResult,
) -> BcStatus {
    guard(|| {
        let m = unsafe { deref(model, "model") }?;
        let out = unsafe { deref_mut(out, "out") }?;
        let mut spec = SimSpec::new(m.cfg.clone(), samples, seed);
        spec.workers = workers;
        let result = simulate(&spec)?;
        *out = Box::into_raw(Box::new(BcSimResult { result }));
        Ok(())
    })
}

/// # Safety
/// `res` must be null or a handle from [`bc_simulate`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn bc_sim_free(res: *mut BcSimResult) {
    if !res.is_null() {
        // SAFETY: the handle came from `Box::into_raw` in `bc_simulate`.
        drop(unsafe { Box::from_raw(res) });
    }
}

/// Number of distance bins, or 0 for a null handle.
///
/// # Safety
/// `res` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn bc_sim_bin_count(res: *const BcSimResult) -> usize {
    unsafe { res.as_ref() }.map_or(0, |r| r.result.bins.len())
}

/// Attached fraction, mean IOPR and IOPR variance over attached mobiles.
///
/// # Safety
/// `res` must be a live handle; out-pointers valid.
#[no_mangle]
pub unsafe extern "C" fn bc_sim_summary(
    res: *const BcSimResult,
    attached_fraction: *mut f64,
    mu_f: *mut f64,
    var_f: *mut f64,
) -> BcStatus {
    guard(|| {
        let r = &unsafe { deref(res, "res") }?.result;
        *unsafe { deref_mut(attached_fraction, "attached_fraction") }? = r.attached_fraction;
        *unsafe { deref_mut(mu_f, "mu_f") }? = r.mu_f;
        *unsafe { deref_mut(var_f, "var_f") }? = r.var_f;
        Ok(())
    })
}

/// # Safety
/// `res` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bc_sim_bin(
    res: *const BcSimResult,
    index: usize,
    out: *mut BcBin,
) -> BcStatus {
    guard(|| {
        let r = &unsafe { deref(res, "res") }?.result;
        let out = unsafe { deref_mut(out, "out") }?;
        let b = r.bins.get(index).ok_or_else(|| {
            ModelError::domain(
                "bc_sim_bin",
                format!("bin {index} out of range 0..{}", r.bins.len()),
            )
        })?;
        *out = BcBin {
            r_lo: b.r_lo,
            r_hi: b.r_hi,
            dropped: b.total,
            attached: b.attached,
            attach_freq: b.attach_freq.mean,
            attach_freq_se: b.attach_freq.se,
            own_gain: b.own_gain.mean,
            ocif: b.ocif.mean,
            ocif_se: b.ocif.se,
            f_mean: b.f.mean,
            f_mean_se: b.f.se,
            f_sq_mean: b.f_sq.mean,
        };
        Ok(())
    })
}
