//! Scalar special functions used by the outage analysis.
//!
//! Everything here is pure and deterministic. The modified Bessel function
//! `K1` is evaluated in two regimes: a convergent power series for `x <= 2`
//! and Steed's continued fraction (Temme's CF2) above. The standard normal
//! distribution is built on `libm::erfc`.

use core::f64::consts::{FRAC_1_SQRT_2, PI};

use crate::error::{Error, Result};

/// Euler–Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_86;

/// Boundary between the series and continued-fraction regimes of `K1`.
pub(crate) const K1_SEAM: f64 = 2.0;

const SQRT_2PI: f64 = 2.506_628_274_631_000_5;

/// Zero-order spherical Bessel function of the first kind, `sin(x)/x`.
///
/// Even in `x`; the removable singularity at 0 evaluates to 1.
pub fn spherical_bessel_j0(x: f64) -> f64 {
    let ax = x.abs();
    if ax < 1e-4 {
        let x2 = ax * ax;
        1.0 - x2 / 6.0 * (1.0 - x2 / 20.0)
    } else {
        libm::sin(ax) / ax
    }
}

/// Modified Bessel function of the second kind, order 1.
///
/// Behaves like `1/x` as `x -> 0+` (overflowing to `+inf` below ~1e-308)
/// and underflows to 0 beyond roughly `x = 745`.
pub fn bessel_k1(x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::Domain {
            function: "bessel_k1",
            value: x,
            domain: "x > 0",
        });
    }
    if x == f64::INFINITY {
        return Ok(0.0);
    }
    if x <= K1_SEAM {
        let r = 0.25 * x * x;
        let (cdf, _) = product_exp_series(r);
        Ok((1.0 - cdf) / x)
    } else {
        Ok(bessel_k0_k1_cf(x).1)
    }
}

/// `1 - 2 sqrt(r) K1(2 sqrt(r))` and its derivative `2 K0(2 sqrt(r))`,
/// summed directly from the power series so small `r` keeps full relative
/// precision. Intended for `r <= 1`.
///
/// With `x = 2 sqrt(r)`, the classical series for `K1` rearranges to
/// `1 - x K1(x) = r (S1 - ln(r) S0)`, where `S0 = sum r^k / (k!(k+1)!)`
/// and `S1 = sum (psi(k+1) + psi(k+2)) r^k / (k!(k+1)!)`.
pub(crate) fn product_exp_series(r: f64) -> (f64, f64) {
    if r == 0.0 {
        return (0.0, f64::INFINITY);
    }
    let ln_r = libm::log(r);
    // psi(1) = -gamma, psi(2) = 1 - gamma
    let mut psi_lo = -EULER_GAMMA;
    let mut psi_hi = 1.0 - EULER_GAMMA;
    let mut b = 1.0; // r^k / (k!(k+1)!)
    let mut s0 = 0.0;
    let mut s1 = 0.0;
    let mut pdf = 0.0;
    let mut k = 0u32;
    loop {
        let a = (psi_lo + psi_hi) * b;
        s0 += b;
        s1 += a;
        pdf += f64::from(k + 1) * (a - b * ln_r) - b;
        let kf = f64::from(k + 1);
        psi_lo += 1.0 / kf;
        psi_hi += 1.0 / (kf + 1.0);
        b *= r / (kf * (kf + 1.0));
        k += 1;
        if b < 1e-17 * s0 || k > 60 {
            break;
        }
    }
    (r * (s1 - ln_r * s0), pdf)
}

/// `(K0(x), K1(x))` by Steed's method for the second continued fraction.
/// Accurate for `x >= 2`.
pub(crate) fn bessel_k0_k1_cf(x: f64) -> (f64, f64) {
    let a1 = 0.25;
    let mut b = 2.0 * (1.0 + x);
    let mut d = 1.0 / b;
    let mut h = d;
    let mut delh = d;
    let mut q1 = 0.0;
    let mut q2 = 1.0;
    let mut q = a1;
    let mut c = a1;
    let mut a = -a1;
    let mut s = 1.0 + q * delh;
    for i in 2..10_000u32 {
        let fi = f64::from(i);
        a -= 2.0 * (fi - 1.0);
        c = -a * c / fi;
        let qnew = (q1 - b * q2) / a;
        q1 = q2;
        q2 = qnew;
        q += c * qnew;
        b += 2.0;
        d = 1.0 / (b + a * d);
        delh *= b * d - 1.0;
        h += delh;
        let dels = q * delh;
        s += dels;
        if (dels / s).abs() < 0.5 * f64::EPSILON {
            break;
        }
    }
    h *= a1;
    let k0 = libm::exp(-x + 0.5 * libm::log(PI / (2.0 * x)) - libm::log(s));
    let k1 = k0 * (x + 0.5 - h) / x;
    (k0, k1)
}

/// Standard normal density.
pub fn std_normal_pdf(x: f64) -> f64 {
    libm::exp(-0.5 * x * x) / SQRT_2PI
}

/// Standard normal CDF `Phi(x)`.
pub fn std_normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

/// Standard normal survival function `1 - Phi(x)`, accurate in the upper tail.
pub fn std_normal_sf(x: f64) -> f64 {
    0.5 * libm::erfc(x * FRAC_1_SQRT_2)
}

/// Standard normal quantile `Phi^{-1}(p)` for `0 < p < 1`.
///
/// A rational approximation (relative error ~1e-9) is polished by one
/// Halley step against `erfc`, which lands at double precision across the
/// whole open interval, including the deep tails.
pub fn std_normal_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Domain {
            function: "std_normal_quantile",
            value: p,
            domain: "0 < p < 1",
        });
    }
    if p > 0.5 {
        Ok(-refined_lower_quantile(1.0 - p))
    } else {
        Ok(refined_lower_quantile(p))
    }
}

fn refined_lower_quantile(p: f64) -> f64 {
    let x = rational_quantile(p);
    let e = std_normal_cdf(x) - p;
    let u = e * SQRT_2PI * libm::exp(0.5 * x * x);
    if u.is_finite() {
        x - u / (1.0 + 0.5 * x * u)
    } else {
        x
    }
}

/// Unpolished quantile with the argument clamped into the open interval.
/// Used inside integrands where 1e-9 relative accuracy is ample.
pub(crate) fn quantile_fast(p: f64) -> f64 {
    let p = p.clamp(1e-300, 1.0 - f64::EPSILON / 2.0);
    rational_quantile(p)
}

// Acklam's rational approximation with a dedicated tail form in
// sqrt(-2 ln p).
fn rational_quantile(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_690e2,
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

    let tail = |q: f64| {
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };
    if p < P_LOW {
        tail(libm::sqrt(-2.0 * libm::log(p)))
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        -tail(libm::sqrt(-2.0 * libm::log1p(-p)))
    }
}
