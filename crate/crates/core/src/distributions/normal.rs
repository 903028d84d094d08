//! Standard normal density, distribution and quantile functions.

use crate::error::{domain, Result};
use std::f64::consts::{PI, SQRT_2};

/// `1 / sqrt(2π)`
pub const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;
/// `ln(2π) / 2`
pub const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Below this argument `ln Φ` is evaluated through the Mills ratio instead of
/// taking the log of a tiny (possibly underflowing) probability.
const LOG_CDF_TAIL: f64 = -8.0;

pub fn std_normal_pdf(z: f64) -> f64 {
    FRAC_1_SQRT_2PI * (-0.5 * z * z).exp()
}

pub fn std_normal_log_pdf(z: f64) -> f64 {
    -0.5 * z * z - LN_SQRT_2PI
}

pub fn std_normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / SQRT_2)
}

/// Upper tail `1 − Φ(z)` without cancellation.
pub fn std_normal_sf(z: f64) -> f64 {
    0.5 * libm::erfc(z / SQRT_2)
}

/// Mills ratio `(1 − Φ(x)) / φ(x)` for large positive `x`, by continued fraction.
fn mills_ratio_tail(x: f64) -> f64 {
    debug_assert!(x > 5.0);
    let mut frac = 0.0;
    for k in (1..=80).rev() {
        frac = k as f64 / (x + frac);
    }
    1.0 / (x + frac)
}

pub fn std_normal_log_cdf(z: f64) -> f64 {
    if z < LOG_CDF_TAIL {
        std_normal_log_pdf(z) + mills_ratio_tail(-z).ln()
    } else {
        std_normal_cdf(z).ln()
    }
}

/// Inverse Mills ratio `φ(z) / Φ(z)`, stable for very negative `z`.
pub fn inverse_mills(z: f64) -> f64 {
    if z < LOG_CDF_TAIL {
        1.0 / mills_ratio_tail(-z)
    } else {
        std_normal_pdf(z) / std_normal_cdf(z)
    }
}

/// Standard normal quantile `Φ⁻¹(p)` (Wichura's AS 241, PPND16), with one
/// Newton step against the erfc-based CDF.
pub fn std_normal_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return domain(format!("normal quantile requires 0 < p < 1, got {p}"));
    }
    Ok(quantile_unchecked(p))
}

pub(crate) fn quantile_unchecked(p: f64) -> f64 {
    let z = ppnd16(p);
    // One Halley step: the cdf is accurate to a few ulps, the rational approximation to ~1e-16.
    if z.is_finite() && z.abs() < 37.0 {
        let err = if z < 0.0 {
            std_normal_cdf(z) - p
        } else {
            (1.0 - p) - std_normal_sf(z)
        };
        let pdf = std_normal_pdf(z);
        if pdf > 0.0 {
            let u = err / pdf;
            return z - u / (1.0 + 0.5 * z * u);
        }
    }
    z
}

fn ppnd16(p: f64) -> f64 {
    let q = p - 0.5;
    if q.abs() <= 0.425 {
        let r = 0.180625 - q * q;
        return q
            * (((((((2509.080_928_730_122_7 * r + 33430.575_583_588_128) * r
                + 67265.770_927_008_7)
                * r
                + 45921.953_931_549_87)
                * r
                + 13731.693_765_509_461)
                * r
                + 1971.590_950_306_551_3)
                * r
                + 133.141_667_891_784_38)
                * r
                + 3.387_132_872_796_366_5)
            / (((((((5226.495_278_852_545 * r + 28729.085_735_721_943) * r
                + 39307.895_800_092_71)
                * r
                + 21213.794_301_586_597)
                * r
                + 5394.196_021_424_751)
                * r
                + 687.187_007_492_057_9)
                * r
                + 42.313_330_701_600_91)
                * r
                + 1.0);
    }
    let mut r = if q < 0.0 { p } else { 1.0 - p };
    r = (-r.ln()).sqrt();
    let val = if r <= 5.0 {
        let r = r - 1.6;
        (((((((7.745_450_142_783_414e-4 * r + 0.022_723_844_989_269_184) * r
            + 0.241_780_725_177_450_6)
            * r
            + 1.270_458_252_452_368_4)
            * r
            + 3.647_848_324_763_204_5)
            * r
            + 5.769_497_221_460_691)
            * r
            + 4.630_337_846_156_546)
            * r
            + 1.423_437_110_749_683_5)
            / (((((((1.050_750_071_644_416_9e-9 * r + 5.475_938_084_995_345e-4) * r
                + 0.015_198_666_563_616_457)
                * r
                + 0.148_103_976_427_480_08)
                * r
                + 0.689_767_334_985_1)
                * r
                + 1.676_384_830_183_803_8)
                * r
                + 2.053_191_626_637_759)
                * r
                + 1.0)
    } else {
        let r = r - 5.0;
        (((((((2.010_334_399_292_288_1e-7 * r + 2.711_555_568_743_487_6e-5) * r
            + 0.001_242_660_947_388_078_4)
            * r
            + 0.026_532_189_526_576_124)
            * r
            + 0.296_560_571_828_504_9)
            * r
            + 1.784_826_539_917_291_3)
            * r
            + 5.463_784_911_164_114)
            * r
            + 6.657_904_643_501_103)
            / (((((((2.044_263_103_389_939_7e-15 * r + 1.421_511_758_316_446e-7) * r
                + 1.846_318_317_510_054_8e-5)
                * r
                + 7.868_691_311_456_133e-4)
                * r
                + 0.014_875_361_290_850_615)
                * r
                + 0.136_929_880_922_735_8)
                * r
                + 0.599_832_206_555_888)
                * r
                + 1.0)
    };
    if q < 0.0 {
        -val
    } else {
        val
    }
}

/// `1/sqrt(π)`
pub(crate) fn frac_1_sqrt_pi() -> f64 {
    1.0 / PI.sqrt()
}
