use serde::{Deserialize, Serialize};

use crate::error::{ModelError, Result};

/// How [`integrate`] partitions the interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QuadratureScheme {
    /// Globally adaptive Gauss–Kronrod bisection.
    Adaptive,
    /// `max_subdivisions` equal panels, each integrated with Gauss–Kronrod.
    FixedPanel,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub scheme: QuadratureScheme,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
    /// Gaussian integrals over `(-∞, x]` are cut at `-tail_cutoff·σ`.
    pub tail_cutoff: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            scheme: QuadratureScheme::Adaptive,
            rel_tol: 1e-10,
            max_subdivisions: 256,
            tail_cutoff: 10.0,
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.rel_tol <= 1e-2) {
            return Err(ModelError::config(
                "rel_tol",
                format!("{} is outside (0, 1e-2]", self.rel_tol),
            ));
        }
        if !(self.tail_cutoff >= 8.0) {
            return Err(ModelError::config(
                "tail_cutoff",
                format!("{} must be at least 8", self.tail_cutoff),
            ));
        }
        if self.max_subdivisions == 0 {
            return Err(ModelError::config("max_subdivisions", "must be positive"));
        }
        Ok(())
    }
}

// 15-point Kronrod extension of the 7-point Gauss rule (QUADPACK qk15),
// tabulated to full published precision.
#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[derive(Debug, Clone, Copy)]
struct Panel {
    lo: f64,
    hi: f64,
    value: f64,
    error: f64,
    abs_value: f64,
}

fn gauss_kronrod<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64) -> Panel {
    let center = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let fc = f(center);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    let mut abs_value = WGK[7] * fc.abs();
    for j in 0..7 {
        let dx = half * XGK[j];
        let (f1, f2) = (f(center - dx), f(center + dx));
        kronrod += WGK[j] * (f1 + f2);
        abs_value += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    Panel {
        lo,
        hi,
        value: kronrod * half,
        error: ((kronrod - gauss) * half).abs(),
        abs_value: abs_value * half.abs(),
    }
}

fn converged(value: f64, error: f64, abs_value: f64, rel_tol: f64) -> bool {
    error <= rel_tol * value.abs() || error <= 50.0 * f64::EPSILON * abs_value || error < 1e-300
}

/// Integrates `f` over `[lower, upper]` to the relative tolerance in `spec`.
///
/// On failure the returned [`ModelError::Convergence`] carries the best
/// estimate reached and its error bound.
pub fn integrate<F: Fn(f64) -> f64>(
    f: F,
    lower: f64,
    upper: f64,
    spec: &QuadratureSpec,
) -> Result<f64> {
    if !(lower < upper) || !lower.is_finite() || !upper.is_finite() {
        return Err(ModelError::domain(
            "integrate",
            format!("invalid interval [{lower}, {upper}]"),
        ));
    }
    match spec.scheme {
        QuadratureScheme::Adaptive => adaptive(&f, lower, upper, spec),
        QuadratureScheme::FixedPanel => fixed_panel(&f, lower, upper, spec),
    }
}

fn adaptive<F: Fn(f64) -> f64>(
    f: &F,
    lower: f64,
    upper: f64,
    spec: &QuadratureSpec,
) -> Result<f64> {
    let mut panels = vec![gauss_kronrod(f, lower, upper)];
    loop {
        let value: f64 = panels.iter().map(|p| p.value).sum();
        let error: f64 = panels.iter().map(|p| p.error).sum();
        let abs_value: f64 = panels.iter().map(|p| p.abs_value).sum();
        if !value.is_finite() {
            return Err(non_finite(value, error));
        }
        if converged(value, error, abs_value, spec.rel_tol) {
            return Ok(value);
        }
        if panels.len() >= spec.max_subdivisions {
            return Err(ModelError::Convergence {
                what: String::from("integrate"),
                estimate: value,
                error,
            });
        }
        let (worst, _) = panels
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.error.total_cmp(&b.1.error))
            .expect("at least one panel");
        let p = panels.swap_remove(worst);
        let mid = 0.5 * (p.lo + p.hi);
        if !(mid > p.lo && mid < p.hi) {
            // Panel is at floating-point resolution; nothing left to split.
            return Err(ModelError::Convergence {
                what: String::from("integrate"),
                estimate: value,
                error,
            });
        }
        panels.push(gauss_kronrod(f, p.lo, mid));
        panels.push(gauss_kronrod(f, mid, p.hi));
    }
}

fn fixed_panel<F: Fn(f64) -> f64>(
    f: &F,
    lower: f64,
    upper: f64,
    spec: &QuadratureSpec,
) -> Result<f64> {
    let n = spec.max_subdivisions;
    let width = (upper - lower) / n as f64;
    let (mut value, mut error, mut abs_value) = (0.0, 0.0, 0.0);
    for i in 0..n {
        let lo = lower + width * i as f64;
        let hi = if i + 1 == n { upper } else { lo + width };
        let p = gauss_kronrod(f, lo, hi);
        value += p.value;
        error += p.error;
        abs_value += p.abs_value;
    }
    if !value.is_finite() {
        return Err(non_finite(value, error));
    }
    if converged(value, error, abs_value, spec.rel_tol) {
        Ok(value)
    } else {
        Err(ModelError::Convergence {
            what: String::from("integrate"),
            estimate: value,
            error,
        })
    }
}

fn non_finite(value: f64, error: f64) -> ModelError {
    ModelError::Convergence {
        what: String::from("integrate (non-finite integrand)"),
        estimate: value,
        error,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{normal_pdf, LN10_OVER_10};

    fn both_schemes() -> [QuadratureSpec; 2] {
        [
            QuadratureSpec::default(),
            QuadratureSpec {
                scheme: QuadratureScheme::FixedPanel,
                max_subdivisions: 64,
                ..QuadratureSpec::default()
            },
        ]
    }

    #[test]
    fn gaussian_normalization() {
        for spec in both_schemes() {
            let v = integrate(normal_pdf, -8.0, 8.0, &spec).unwrap();
            assert!((v - 1.0).abs() < 1e-10, "{v}");
        }
    }

    #[test]
    fn polynomial_exactness() {
        for spec in both_schemes() {
            let v = integrate(|x| x * x, 0.0, 1.0, &spec).unwrap();
            assert!((v - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn gaussian_moments() {
        // E[Z^k] for k = 0..4: 1, 0, 1, 0, 3
        let expected = [1.0, 0.0, 1.0, 0.0, 3.0];
        for (k, &want) in expected.iter().enumerate() {
            let v = integrate(
                |x| x.powi(k as i32) * normal_pdf(x),
                -10.0,
                10.0,
                &QuadratureSpec::default(),
            )
            .unwrap();
            assert!((v - want).abs() < 1e-10 * want.max(1.0), "k={k}: {v}");
        }
    }

    #[test]
    fn lognormal_mean_sigma_12() {
        let sigma = 12.0;
        let a = LN10_OVER_10;
        let v = integrate(
            |xi| (-a * xi).exp() * normal_pdf(xi / sigma) / sigma,
            -20.0 * sigma,
            20.0 * sigma,
            &QuadratureSpec::default(),
        )
        .unwrap();
        let closed = (0.5 * (a * sigma).powi(2)).exp();
        assert!(((v - closed) / closed).abs() < 1e-9);
        assert!((closed - 45.484).abs() < 1e-3);
    }

    #[test]
    fn subdivision_limit_reports_best_estimate() {
        let spec = QuadratureSpec {
            max_subdivisions: 2,
            rel_tol: 1e-12,
            ..QuadratureSpec::default()
        };
        match integrate(|x: f64| x.abs().sqrt(), -1.0, 1.0, &spec) {
            Err(ModelError::Convergence { estimate, .. }) => {
                assert!((estimate - 4.0 / 3.0).abs() < 1e-2)
            }
            other => panic!("expected convergence error, got {other:?}"),
        }
    }

    #[test]
    fn rejects_bad_intervals_and_specs() {
        let spec = QuadratureSpec::default();
        assert!(integrate(|x| x, 1.0, 0.0, &spec).is_err());
        assert!(integrate(|x| x, 0.0, f64::INFINITY, &spec).is_err());
        let bad = QuadratureSpec {
            tail_cutoff: 5.0,
            ..spec
        };
        assert!(bad.validate().is_err());
        let bad = QuadratureSpec {
            rel_tol: 0.5,
            ..spec
        };
        assert!(bad.validate().is_err());
    }
}
