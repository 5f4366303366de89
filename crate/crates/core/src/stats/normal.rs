//! Standard normal distribution functions.

use crate::error::{Error, Result};
use libm::erfc;
use std::f64::consts::{FRAC_1_SQRT_2, PI};

/// Density of the standard normal.
#[inline]
pub fn norm_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// Φ(x). Infinite arguments map to 0 and 1.
#[inline]
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * erfc(-x * FRAC_1_SQRT_2)
}

/// 1 − Φ(x), evaluated without cancellation in the upper tail.
#[inline]
pub fn norm_sf(x: f64) -> f64 {
    0.5 * erfc(x * FRAC_1_SQRT_2)
}

/// Checked Φ(x).
pub fn std_normal_cdf(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::domain(format!("normal cdf of non-finite value {x}")));
    }
    Ok(norm_cdf(x))
}

/// Checked Φ⁻¹(p) for p in (0, 1).
pub fn std_normal_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::domain(format!("normal quantile needs p in (0,1), got {p}")));
    }
    Ok(norm_quantile(p))
}

/// Φ⁻¹(p), unchecked. Returns ±∞ at the endpoints.
///
/// Wichura's AS241 rational approximation followed by two Newton steps
/// against [`norm_cdf`] (or [`norm_sf`] in the upper half so the residual is
/// computed on the small tail).
pub fn norm_quantile(p: f64) -> f64 {
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    let mut x = as241(p);
    for _ in 0..2 {
        let dens = norm_pdf(x);
        if dens <= 0.0 || !dens.is_finite() {
            break;
        }
        let resid = if p < 0.5 {
            norm_cdf(x) - p
        } else {
            (1.0 - p) - norm_sf(x)
        };
        x -= resid / dens;
    }
    x
}

fn poly(coeffs: &[f64; 8], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

#[allow(clippy::excessive_precision)]
fn as241(p: f64) -> f64 {
    const A: [f64; 8] = [
        3.387_132_872_796_366_608,
        133.141_667_891_784_377_45,
        1_971.590_950_306_551_442_7,
        13_731.693_765_509_461_125,
        45_921.953_931_549_871_457,
        67_265.770_927_008_700_853,
        33_430.575_583_588_128_105,
        2_509.080_928_730_122_672_7,
    ];
    const B: [f64; 8] = [
        1.0,
        42.313_330_701_600_911_252,
        687.187_007_492_057_908_3,
        5_394.196_021_424_751_107_7,
        21_213.794_301_586_595_867,
        39_307.895_800_092_710_61,
        28_729.085_735_721_942_674,
        5_226.495_278_852_545_925,
    ];
    const C: [f64; 8] = [
        1.423_437_110_749_683_577_34,
        4.630_337_846_156_545_295_9,
        5.769_497_221_460_691_405_5,
        3.647_848_324_763_204_605_04,
        1.270_458_252_452_368_382_58,
        0.241_780_725_177_450_611_77,
        0.022_723_844_989_269_184_583_3,
        7.745_450_142_783_414_076_4e-4,
    ];
    const D: [f64; 8] = [
        1.0,
        2.053_191_626_637_758_821_87,
        1.676_384_830_183_803_849_4,
        0.689_767_334_985_100_004_55,
        0.148_103_976_427_480_074_59,
        0.015_198_666_563_616_457_196_6,
        5.475_938_084_995_344_946e-4,
        1.050_750_071_644_416_843_24e-9,
    ];
    const E: [f64; 8] = [
        6.657_904_643_501_103_777_2,
        5.463_784_911_164_114_369_9,
        1.784_826_539_917_291_335_8,
        0.296_560_571_828_504_891_23,
        0.026_532_189_526_576_123_093,
        0.001_242_660_947_388_078_438_6,
        2.711_555_568_743_487_578_15e-5,
        2.010_334_399_292_288_132_65e-7,
    ];
    const F: [f64; 8] = [
        1.0,
        0.599_832_206_555_887_937_69,
        0.136_929_880_922_735_805_31,
        0.014_875_361_290_850_614_852_5,
        7.868_691_311_456_132_591e-4,
        1.846_318_317_510_054_681_8e-5,
        1.421_511_758_316_445_888_7e-7,
        2.044_263_103_389_939_785_64e-15,
    ];

    let q = p - 0.5;
    if q.abs() <= 0.425 {
        let r = 0.180625 - q * q;
        return q * poly(&A, r) / poly(&B, r);
    }
    let tail = if q < 0.0 { p } else { 1.0 - p };
    let mut r = (-tail.ln()).sqrt();
    let x = if r <= 5.0 {
        r -= 1.6;
        poly(&C, r) / poly(&D, r)
    } else {
        r -= 5.0;
        poly(&E, r) / poly(&F, r)
    };
    if q < 0.0 {
        -x
    } else {
        x
    }
}

const GL_NODES: [f64; 10] = [
    0.076_526_521_133_497_33,
    0.227_785_851_141_645_1,
    0.373_706_088_715_419_6,
    0.510_867_001_950_827_1,
    0.636_053_680_726_515,
    0.746_331_906_460_150_8,
    0.839_116_971_822_218_8,
    0.912_234_428_251_325_9,
    0.963_971_927_277_913_8,
    0.993_128_599_185_094_9,
];
const GL_WEIGHTS: [f64; 10] = [
    0.152_753_387_130_725_9,
    0.149_172_986_472_603_7,
    0.142_096_109_318_382_1,
    0.131_688_638_449_176_6,
    0.118_194_531_961_518_4,
    0.101_930_119_817_240_4,
    0.083_276_741_576_704_8,
    0.062_672_048_334_109_1,
    0.040_601_429_800_386_9,
    0.017_614_007_139_152_1,
];

/// P(X ≤ x, Y ≤ y) for a standard bivariate normal with correlation `rho`.
///
/// Genz's refinement of the Drezner–Wesolowsky method with 20-point
/// Gauss–Legendre quadrature; absolute error around 1e-15.
pub fn bivariate_norm_cdf(x: f64, y: f64, rho: f64) -> f64 {
    if x == f64::NEG_INFINITY || y == f64::NEG_INFINITY {
        return 0.0;
    }
    if x == f64::INFINITY {
        return norm_cdf(y);
    }
    if y == f64::INFINITY {
        return norm_cdf(x);
    }
    upper_orthant(-x, -y, rho).clamp(0.0, 1.0)
}

/// P(X > h, Y > k).
fn upper_orthant(h: f64, k: f64, r: f64) -> f64 {
    let two_pi = 2.0 * PI;
    let mut hk = h * k;
    if r.abs() < 0.925 {
        let hs = 0.5 * (h * h + k * k);
        let asr = 0.5 * r.asin();
        let mut acc = 0.0;
        for (&x, &w) in GL_NODES.iter().zip(&GL_WEIGHTS) {
            for sn in [(asr * (1.0 - x)).sin(), (asr * (1.0 + x)).sin()] {
                acc += w * ((sn * hk - hs) / (1.0 - sn * sn)).exp();
            }
        }
        return acc * asr / two_pi + norm_cdf(-h) * norm_cdf(-k);
    }
    let k = if r < 0.0 {
        hk = -hk;
        -k
    } else {
        k
    };
    let mut bvn = 0.0;
    if r.abs() < 1.0 {
        let a_sq = (1.0 - r) * (1.0 + r);
        let mut a = a_sq.sqrt();
        let bs = (h - k) * (h - k);
        let c = (4.0 - hk) / 8.0;
        let d = (12.0 - hk) / 16.0;
        let asr = -0.5 * (bs / a_sq + hk);
        if asr > -100.0 {
            bvn = a * asr.exp() * (1.0 - c * (bs - a_sq) * (1.0 - d * bs / 5.0) / 3.0 + c * d * a_sq * a_sq / 5.0);
        }
        if hk > -100.0 {
            let b = bs.sqrt();
            let sp = two_pi.sqrt() * norm_cdf(-b / a);
            bvn -= (-0.5 * hk).exp() * sp * b * (1.0 - c * bs * (1.0 - d * bs / 5.0) / 3.0);
        }
        a *= 0.5;
        let mut acc = 0.0;
        for (&x, &w) in GL_NODES.iter().zip(&GL_WEIGHTS) {
            for s in [-x, x] {
                let xs = (a * s + a).powi(2);
                let asr = -0.5 * (bs / xs + hk);
                if asr > -100.0 {
                    let rs = (1.0 - xs).sqrt();
                    let sp = 1.0 + c * xs * (1.0 + d * xs);
                    let ep = (-(hk / 2.0) * xs / (1.0 + rs).powi(2)).exp() / rs;
                    acc += w * asr.exp() * (sp - ep);
                }
            }
        }
        bvn = (a * acc - bvn) / two_pi;
    }
    if r > 0.0 {
        bvn + norm_cdf(-h.max(k))
    } else {
        -bvn + (norm_cdf(-h) - norm_cdf(-k)).max(0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Maclaurin series of erf, summed until terms vanish.
    fn cdf_by_series(x: f64) -> f64 {
        let z = x / std::f64::consts::SQRT_2;
        let mut term = z;
        let mut sum = z;
        let mut n = 0.0;
        while term.abs() > 1e-18 {
            n += 1.0;
            term *= -z * z / n;
            sum += term / (2.0 * n + 1.0);
        }
        0.5 + sum / std::f64::consts::PI.sqrt()
    }

    /// Bisection against the series cdf.
    fn quantile_by_bisection(p: f64) -> f64 {
        let (mut lo, mut hi) = (0.0, 5.0);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if cdf_by_series(mid) < p {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn cdf_examples() {
        assert_eq!(std_normal_cdf(0.0).unwrap(), 0.5);
        assert!(std_normal_cdf(8.0).unwrap() > 1.0 - 1e-14);
        let oracle = cdf_by_series(1.959964);
        assert!((oracle - 0.975).abs() < 1e-6);
        let diff = (norm_cdf(1.959964) - oracle).abs();
        assert!(diff < 1e-14, "diff {diff:e}");
    }

    #[test]
    fn cdf_rejects_non_finite() {
        assert!(std_normal_cdf(f64::NAN).is_err());
        assert!(std_normal_cdf(f64::INFINITY).is_err());
    }

    #[test]
    fn cdf_symmetry() {
        for i in -800..=800 {
            let x = i as f64 / 100.0;
            assert!((norm_cdf(x) + norm_cdf(-x) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn quantile_examples() {
        assert_eq!(std_normal_quantile(0.5).unwrap(), 0.0);
        let x = std_normal_quantile(norm_cdf(1.3)).unwrap();
        assert!((x - 1.3).abs() < 1e-9);
        let oracle = quantile_by_bisection(0.975);
        assert!((oracle - 1.959964).abs() < 1e-6);
        assert!((std_normal_quantile(0.975).unwrap() - oracle).abs() < 1e-9);
    }

    #[test]
    fn quantile_rejects_out_of_range() {
        for p in [0.0, 1.0, -0.1, 1.5, f64::NAN] {
            assert!(std_normal_quantile(p).is_err());
        }
    }

    #[test]
    fn round_trip_grid() {
        for i in 1..1000 {
            let p = i as f64 / 1000.0;
            let x = norm_quantile(p);
            assert!((norm_cdf(x) - p).abs() < 1e-9, "p={p}");
        }
    }

    #[test]
    fn extreme_tails_round_trip() {
        for p in [1e-300, 1e-100, 1e-20, 1e-12, 1e-8] {
            let x = norm_quantile(p);
            assert!(((norm_cdf(x) - p) / p).abs() < 1e-9, "p={p}");
            let y = norm_quantile(1.0 - p.max(1e-15));
            assert!(y > 0.0 && y.is_finite());
        }
    }
    #[test]
    fn bivariate_cdf_against_high_precision_quadrature() {
        // Reference values from 30-digit quadrature of φ(t)Φ((y−ρt)/√(1−ρ²)).
        let cases = [
            (0.3, -0.2, 0.5, 0.336_198_437_015_518_77),
            (1.0, 0.5, 0.95, 0.689_139_561_783_927_98),
            (-0.4, 0.7, -0.97, 0.107_109_147_041_308_91),
            (0.2, 0.2, 0.999, 0.572_282_464_176_020_92),
            (-1.5, -2.0, 0.3, 0.004_678_716_322_641_055_8),
            (0.5, -0.5, -0.6, 0.128_977_205_695_007_52),
            (2.0, 1.0, -0.99, 0.818_594_614_120_363_74),
            (-0.3, -0.1, 0.93, 0.354_432_448_845_336_81),
        ];
        for (x, y, r, want) in cases {
            let got = bivariate_norm_cdf(x, y, r);
            assert!((got - want).abs() < 1e-13, "({x},{y},{r}): {got} vs {want}");
        }
    }

    #[test]
    fn bivariate_cdf_limits() {
        assert_eq!(bivariate_norm_cdf(0.4, f64::INFINITY, 0.3), norm_cdf(0.4));
        assert_eq!(bivariate_norm_cdf(f64::NEG_INFINITY, 1.0, 0.3), 0.0);
        let x = 0.37;
        let y = -0.81;
        assert!((bivariate_norm_cdf(x, y, 0.0) - norm_cdf(x) * norm_cdf(y)).abs() < 1e-15);
    }
}
