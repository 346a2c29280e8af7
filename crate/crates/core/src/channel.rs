//! Link parameters, the equivalent-gain distribution of the cascaded
//! energy/information link, and the NOMA SINR algebra.

use crate::error::{Error, Result};
use crate::specfun::{self, EULER_GAMMA};

/// `10^(db/10)`.
pub fn db_to_linear(db: f64) -> f64 {
    libm::pow(10.0, db / 10.0)
}

/// Scalar link and NOMA parameters, all in linear units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams {
    /// Average transmit SNR `P_p / sigma^2`.
    pub snr_avg: f64,
    /// Power fraction of the strong (near) user.
    pub p_u1: f64,
    /// Power fraction of the weak (far) user.
    pub p_u2: f64,
    /// Path-loss exponent.
    pub alpha: f64,
    /// Propagation constant.
    pub lp: f64,
    /// Beacon to transmitter distance (m).
    pub d_t: f64,
    pub d_u1: f64,
    pub d_u2: f64,
    /// SIC decoding threshold.
    pub thr_sic: f64,
    pub thr_u1: f64,
    pub thr_u2: f64,
}

impl SystemParams {
    /// The reference deployment:
    /// `p = (0.3, 0.7)`, `alpha = 2.5`, `L_p = 1`, `d_t = d_u2 = 10 m`,
    /// `d_u1 = 5 m` and all thresholds at 0 dB.
    pub fn reference(snr_avg: f64) -> Self {
        Self {
            snr_avg,
            p_u1: 0.3,
            p_u2: 0.7,
            alpha: 2.5,
            lp: 1.0,
            d_t: 10.0,
            d_u1: 5.0,
            d_u2: 10.0,
            thr_sic: 1.0,
            thr_u1: 1.0,
            thr_u2: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("snr_avg", self.snr_avg),
            ("lp", self.lp),
            ("d_t", self.d_t),
            ("d_u1", self.d_u1),
            ("d_u2", self.d_u2),
            ("thr_sic", self.thr_sic),
            ("thr_u1", self.thr_u1),
            ("thr_u2", self.thr_u2),
        ];
        for (field, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParams { field, reason: "must be positive and finite" });
            }
        }
        for (field, v) in [("p_u1", self.p_u1), ("p_u2", self.p_u2)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::InvalidParams { field, reason: "must lie in (0, 1)" });
            }
        }
        if (self.p_u1 + self.p_u2 - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParams { field: "p_u2", reason: "power fractions must sum to 1" });
        }
        if !(self.alpha.is_finite() && self.alpha > 2.0) {
            return Err(Error::InvalidParams { field: "alpha", reason: "must exceed 2" });
        }
        Ok(())
    }

    /// Large-scale gain `L_p d_t^-alpha d_i^-alpha` toward a user at `d_i`.
    pub fn path_loss(&self, d_i: f64) -> f64 {
        self.lp * libm::pow(self.d_t, -self.alpha) * libm::pow(d_i, -self.alpha)
    }

    fn rx_u1(&self) -> f64 {
        self.snr_avg * self.path_loss(self.d_u1)
    }

    fn rx_u2(&self) -> f64 {
        self.snr_avg * self.path_loss(self.d_u2)
    }
}

/// Outage boundaries mapped into the FAS-gain domain.
///
/// A threshold is `None` when its power split is infeasible, in which case
/// the corresponding user is always in outage.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Thresholds {
    pub g_sic: Option<f64>,
    pub g_u1: f64,
    pub g_u2: Option<f64>,
    pub g_max: Option<f64>,
    pub feasible_u1: bool,
    pub feasible_u2: bool,
}

pub fn compute_thresholds(p: &SystemParams) -> Thresholds {
    let margin_sic = p.p_u2 - p.thr_sic * p.p_u1;
    let margin_u2 = p.p_u2 - p.thr_u2 * p.p_u1;
    let feasible_u1 = margin_sic > 0.0;
    let feasible_u2 = margin_u2 > 0.0;
    // snr_avg leads every product so scaling it by 2 scales the result exactly
    let g_sic = feasible_u1.then(|| p.thr_sic / (p.snr_avg * p.path_loss(p.d_u1) * margin_sic));
    let g_u1 = p.thr_u1 / (p.snr_avg * p.path_loss(p.d_u1) * p.p_u1);
    let g_u2 = feasible_u2.then(|| p.thr_u2 / (p.snr_avg * p.path_loss(p.d_u2) * margin_u2));
    Thresholds {
        g_sic,
        g_u1,
        g_u2,
        g_max: g_sic.map(|s| s.max(g_u1)),
        feasible_u1,
        feasible_u2,
    }
}

/// SINR when the strong user decodes the weak user's message.
pub fn sinr_sic(g_fas: f64, p: &SystemParams) -> f64 {
    let s = p.rx_u1() * g_fas;
    p.p_u2 * s / (p.p_u1 * s + 1.0)
}

/// SNR of the strong user's own message after SIC.
pub fn sinr_u1(g_fas: f64, p: &SystemParams) -> f64 {
    p.p_u1 * p.rx_u1() * g_fas
}

/// SINR at the weak user, treating the strong user's signal as noise.
pub fn sinr_u2(g_fas: f64, p: &SystemParams) -> f64 {
    let s = p.rx_u2() * g_fas;
    p.p_u2 * s / (p.p_u1 * s + 1.0)
}

/// CDF of the product of two independent unit-mean exponentials,
/// `1 - 2 sqrt(r) K1(2 sqrt(r))`.
pub fn equiv_gain_cdf(r: f64) -> Result<f64> {
    if !(r >= 0.0) {
        return Err(Error::Domain { function: "equiv_gain_cdf", value: r, domain: "r >= 0" });
    }
    Ok(equiv_gain_cdf_unchecked(r))
}

pub(crate) fn equiv_gain_cdf_unchecked(r: f64) -> f64 {
    if r <= 1.0 {
        specfun::product_exp_series(r).0
    } else if r == f64::INFINITY {
        1.0
    } else {
        1.0 - equiv_gain_sf(r)
    }
}

/// Survival function `2 sqrt(r) K1(2 sqrt(r))`, accurate in the upper tail.
pub(crate) fn equiv_gain_sf(r: f64) -> f64 {
    if r <= 1.0 {
        1.0 - specfun::product_exp_series(r).0
    } else {
        let x = 2.0 * libm::sqrt(r);
        x * specfun::bessel_k0_k1_cf(x).1
    }
}

/// Small-argument form `r (1 - 2 gamma - ln r)`, clamped to `[0, 1]`.
pub fn equiv_gain_cdf_asymptotic(r: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::Domain {
            function: "equiv_gain_cdf_asymptotic",
            value: r,
            domain: "r > 0",
        });
    }
    Ok((r * (1.0 - 2.0 * EULER_GAMMA - libm::log(r))).clamp(0.0, 1.0))
}

/// Inverts the equivalent-gain distribution given both tail masses
/// `p = F(r)` and `q = 1 - p` (pass whichever is known accurately; the
/// smaller one drives the solve). Newton iteration in `ln r`.
pub(crate) fn equiv_gain_inverse(p: f64, q: f64) -> f64 {
    if p <= 0.0 {
        return 0.0;
    }
    if q <= 0.0 {
        return f64::INFINITY;
    }
    let lower = p <= q;
    let target = if lower { libm::log(p) } else { libm::log(q) };
    // starting points from the leading small-r and large-r behaviour
    let mut t = if lower {
        let r0 = p / (1.0 - 2.0 * EULER_GAMMA - libm::log(p)).max(1.0);
        libm::log(r0)
    } else {
        let s = -libm::log(q);
        libm::log((0.25 * s * s).max(0.5))
    };
    let mut lo = -745.0f64;
    let mut hi = 16.0f64;
    for _ in 0..100 {
        let r = libm::exp(t);
        let (val, slope) = if lower {
            let (f, pdf) = cdf_and_pdf(r);
            (libm::log(f) - target, r * pdf / f)
        } else {
            let (s, pdf) = sf_and_pdf(r);
            (libm::log(s) - target, -r * pdf / s)
        };
        if val == 0.0 {
            return r;
        }
        // the lower residual increases with t, the upper one decreases
        if (val > 0.0) == lower {
            hi = hi.min(t);
        } else {
            lo = lo.max(t);
        }
        let step = val / slope;
        // tested before bracketing: at rounding level the residual's sign is noise
        if step.abs() <= 1e-13 * t.abs().max(1.0) {
            return libm::exp(t - step);
        }
        let mut next = t - step.clamp(-4.0, 4.0);
        if !next.is_finite() || next <= lo || next >= hi {
            next = 0.5 * (lo + hi);
        }
        t = next;
    }
    libm::exp(t)
}

fn cdf_and_pdf(r: f64) -> (f64, f64) {
    if r <= 1.0 {
        specfun::product_exp_series(r)
    } else {
        let x = 2.0 * libm::sqrt(r);
        let (k0, k1) = specfun::bessel_k0_k1_cf(x);
        (1.0 - x * k1, 2.0 * k0)
    }
}

fn sf_and_pdf(r: f64) -> (f64, f64) {
    if r <= 1.0 {
        let (f, pdf) = specfun::product_exp_series(r);
        (1.0 - f, pdf)
    } else {
        let x = 2.0 * libm::sqrt(r);
        let (k0, k1) = specfun::bessel_k0_k1_cf(x);
        (x * k1, 2.0 * k0)
    }
}
