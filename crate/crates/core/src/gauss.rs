//! Standard normal special functions.
//!
//! The upper tail `cdf_bar(x) = 1 - Phi(x)` is the primitive; every other
//! function is derived from it so that tail probabilities keep *relative*
//! accuracy. Products of thousands of `Phi` factors and `n * (1 - Phi(u))`
//! calibrations only work if the tail is accurate relative to its own size.
//!
//! Arguments beyond `|x| = 38` saturate: `cdf_bar` returns 0 or 1 there.

use crate::error::{Error, Result};
use std::f64::consts::FRAC_1_SQRT_2;

/// 1/sqrt(2*pi)
const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;
/// ln(sqrt(2*pi))
const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Beyond this magnitude `cdf_bar` saturates to 0 / 1.
pub const SATURATION: f64 = 38.0;

/// A probability in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Probability(f64);

impl Probability {
    pub fn new(value: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&value) {
            Ok(Probability(value))
        } else {
            Err(Error::domain(format!(
                "probability must lie in [0, 1], got {value}"
            )))
        }
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }
}

impl From<Probability> for f64 {
    fn from(p: Probability) -> f64 {
        p.0
    }
}

fn check_finite(x: f64, what: &str) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!("{what}: argument must be finite, got {x}")))
    }
}

/// Standard normal density.
pub fn pdf(x: f64) -> Result<f64> {
    check_finite(x, "pdf")?;
    Ok(raw::pdf(x))
}

/// Standard normal distribution function `Phi(x)`.
pub fn cdf(x: f64) -> Result<Probability> {
    check_finite(x, "cdf")?;
    Ok(Probability(raw::cdf(x)))
}

/// Upper tail `1 - Phi(x)` with relative accuracy.
pub fn cdf_bar(x: f64) -> Result<Probability> {
    check_finite(x, "cdf_bar")?;
    Ok(Probability(raw::cdf_bar(x)))
}

/// `ln Phi(x)`. Finite for every finite `x`.
pub fn log_cdf(x: f64) -> Result<f64> {
    check_finite(x, "log_cdf")?;
    Ok(raw::log_cdf(x))
}

/// `ln(1 - Phi(x))`. Finite for every finite `x`.
pub fn log_cdf_bar(x: f64) -> Result<f64> {
    check_finite(x, "log_cdf_bar")?;
    Ok(raw::log_cdf(-x))
}

/// Inverse of `cdf`: the `x` with `Phi(x) = p`, `p` in `(0, 1)`.
pub fn quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::domain(format!(
            "quantile: p must lie in (0, 1), got {p}"
        )));
    }
    Ok(raw::quantile(p))
}

/// Inverse of `cdf_bar`: the `x` with `1 - Phi(x) = q`, `q` in `(0, 1)`.
///
/// Prefer this over `quantile(1 - q)` when `q` is a small tail probability;
/// forming `1 - q` in floating point throws away most of its digits.
pub fn upper_quantile(q: f64) -> Result<f64> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::domain(format!(
            "upper_quantile: q must lie in (0, 1), got {q}"
        )));
    }
    Ok(raw::upper_quantile(q))
}

/// Unchecked kernels for hot loops. Callers guarantee finite arguments;
/// non-finite input propagates as NaN or saturates.
pub mod raw {
    use super::*;

    #[inline]
    pub fn pdf(x: f64) -> f64 {
        INV_SQRT_2PI * (-0.5 * x * x).exp()
    }

    #[inline]
    pub fn cdf_bar(x: f64) -> f64 {
        if x > SATURATION {
            0.0
        } else if x < -SATURATION {
            1.0
        } else {
            0.5 * libm::erfc(x * FRAC_1_SQRT_2)
        }
    }

    /// Same code path as `cdf_bar`, so `cdf(x) == cdf_bar(-x)` bitwise.
    #[inline]
    pub fn cdf(x: f64) -> f64 {
        cdf_bar(-x)
    }

    #[inline]
    pub fn log_cdf(x: f64) -> f64 {
        if x >= 0.0 {
            (-cdf_bar(x)).ln_1p()
        } else if x >= -37.0 {
            cdf_bar(-x).ln()
        } else {
            log_tail_asymptotic(-x)
        }
    }

    /// `ln(1 - Phi(t))` for `t >= 37` via the Mills-ratio continued fraction.
    fn log_tail_asymptotic(t: f64) -> f64 {
        // 1 - Phi(t) = pdf(t) / (t + 1/(t + 2/(t + 3/(t + ...))))
        let mut tail = t;
        for j in (1..=24).rev() {
            tail = t + j as f64 / tail;
        }
        -0.5 * t * t - LN_SQRT_2PI - tail.ln()
    }

    /// `ln P(lo < eps <= hi)` for standard normal `eps`, `lo <= hi`.
    ///
    /// Picks the subtraction that keeps relative accuracy on whichever side
    /// of the distribution the interval sits.
    #[inline]
    pub fn log_interval(lo: f64, hi: f64) -> f64 {
        if hi <= 0.0 {
            // both in the lower tail
            let a = cdf(hi);
            let b = cdf(lo);
            if a > 0.0 {
                (a - b).ln()
            } else {
                log_cdf(hi)
            }
        } else if lo >= 0.0 {
            let a = cdf_bar(lo);
            let b = cdf_bar(hi);
            if a > 0.0 {
                (a - b).ln()
            } else {
                log_cdf(-lo)
            }
        } else {
            (-(cdf_bar(hi) + cdf(lo))).ln_1p()
        }
    }

    pub fn quantile(p: f64) -> f64 {
        if p >= 0.5 {
            upper_quantile(1.0 - p)
        } else {
            -upper_quantile(p)
        }
    }

    pub fn upper_quantile(q: f64) -> f64 {
        if q > 0.5 {
            // 1 - q is exact here
            return -upper_quantile(1.0 - q);
        }
        let ln_q = q.ln();
        let mut x = -acklam(q);
        // Newton on ln(1 - Phi(x)) = ln q; quadratic convergence from a
        // 1e-9 start needs one or two steps.
        for _ in 0..6 {
            let tail = cdf_bar(x);
            let density = pdf(x);
            if tail <= 0.0 || density <= 0.0 {
                break;
            }
            let step = (log_cdf(-x) - ln_q) * tail / density;
            x += step;
            if step.abs() <= 4.0 * f64::EPSILON * x.abs().max(1.0) {
                break;
            }
        }
        x
    }

    /// Acklam's rational approximation to `Phi^{-1}(p)`, relative error ~1e-9.
    fn acklam(p: f64) -> f64 {
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
        const P_LOW: f64 = 0.02425;

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
}
