use std::f64::consts::{PI, SQRT_2};

use crate::error::{ModelError, Result};

/// `a = ln(10)/10`, converting a dB-valued shadowing variable to nepers.
pub const LN10_OVER_10: f64 = std::f64::consts::LN_10 / 10.0;

/// Standard normal density.
#[inline]
pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// Gaussian tail probability `Q(x) = P[Z > x]` for a standard normal `Z`.
///
/// Evaluated through `erfc`, which keeps full relative accuracy deep into
/// the upper tail; `Q(x)` underflows to zero only past `x ≈ 38`.
#[inline]
pub fn q_function(x: f64) -> f64 {
    0.5 * libm::erfc(x / SQRT_2)
}

// Acklam's rational approximation of the lower-tail normal quantile.
const A: [f64; 6] = [
    -3.969_683_028_665_376e1,
    2.209_460_984_245_205e2,
    -2.759_285_104_469_687e2,
    1.383_577_518_672_69e2,
    -3.066_479_806_614_716e1,
    2.506_628_277_459_239,
];
const B: [f64; 5] = [
    -5.447_609_879_822_406e1,
    1.615_858_368_580_409e2,
    -1.556_989_798_598_866e2,
    6.680_131_188_771_972e1,
    -1.328_068_155_288_572e1,
];
const C: [f64; 6] = [
    -7.784_894_002_430_293e-3,
    -3.223_964_580_411_365e-1,
    -2.400_758_277_161_838,
    -2.549_732_539_343_734,
    4.374_664_141_464_968,
    2.938_163_982_698_783,
];
const D: [f64; 4] = [
    7.784_695_709_041_462e-3,
    3.224_671_290_700_398e-1,
    2.445_134_137_142_996,
    3.754_408_661_907_416,
];

fn acklam_lower_quantile(p: f64) -> f64 {
    const P_LOW: f64 = 0.024_25;
    if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = (-2.0 * (1.0 - p).ln()).sqrt();
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    }
}

/// Inverse of [`q_function`]: the `x` with `Q(x) = p`.
///
/// Starts from Acklam's approximation (relative error ~1e-9) and polishes
/// with Halley steps against `erfc`, working on whichever tail keeps `p`
/// representable without cancellation.
pub fn q_inverse(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(ModelError::domain(
            "q_inverse",
            format!("probability {p} is outside (0, 1)"),
        ));
    }
    if p == 0.5 {
        return Ok(0.0);
    }
    // Solve in the tail where p is small: Q(x) = p for p < 1/2, otherwise
    // use Q(-x) = 1 - p.
    let (tail_p, sign) = if p < 0.5 { (p, 1.0) } else { (1.0 - p, -1.0) };
    // Q(x) = tail_p  <=>  Phi(-x) = tail_p
    let mut z = acklam_lower_quantile(tail_p);
    for _ in 0..3 {
        let e = q_function(-z) - tail_p;
        let u = e * (2.0 * PI).sqrt() * (0.5 * z * z).exp();
        let step = u / (1.0 + 0.5 * z * u);
        if !step.is_finite() {
            break;
        }
        z -= step;
        if step.abs() <= 1e-16 * z.abs().max(1.0) {
            break;
        }
    }
    Ok(-sign * z)
}

/// Partial moment of a truncated log-normal shadowing factor,
/// `∫_{-∞}^{xi_max} e^{-k·a·ξ} N(ξ; 0, σ²) dξ`, for `k = order`.
///
/// Closed form: `e^{k²σ²a²/2} · (1 − Q(xi_max/σ + k·a·σ))`. Passing
/// `xi_max = +∞` gives the untruncated log-normal moment.
pub fn truncated_ln_partial_moment(a_coeff: f64, sigma_db: f64, xi_max: f64, order: u32) -> f64 {
    let k = f64::from(order);
    let ka_sigma = k * a_coeff * sigma_db;
    let scale = (0.5 * ka_sigma * ka_sigma).exp();
    // 1 - Q(t) = Q(-t), evaluated on the side that does not cancel.
    scale * q_function(-(xi_max / sigma_db + ka_sigma))
}
