//! Outage probability of both NOMA users.
//!
//! The FAS gain is the maximum of `N` correlated equivalent gains whose
//! dependence is a Gaussian copula with the port correlation matrix, so
//! `P(g_fas <= r) = Phi_R(x*, ..., x*)` with `x* = Phi^{-1}(F(r))` and `F`
//! the single-port marginal. Each user's outage event is `g_fas` falling
//! below its gain-domain threshold.

use crate::channel::{self, SystemParams, Thresholds};
use crate::error::{Error, Result};
use crate::mvncdf::{mvn_cdf_equicoordinate, MvnMethod, MvnOptions, MvnResult};
use crate::portgrid::CorrelationMatrix;
use crate::specfun::std_normal_quantile;

/// Marginal probabilities are clamped to `[PROB_FLOOR, 1 - 2^-53]` before
/// the normal quantile.
pub const PROB_FLOOR: f64 = 1e-300;
const PROB_CEIL: f64 = 1.0 - f64::EPSILON / 2.0;

/// Which single-port marginal to feed the copula.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Marginal {
    Exact,
    /// High-SNR form `r (1 - 2 gamma - ln r)`.
    Asymptotic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum User {
    /// Strong (near) user performing SIC.
    U1,
    /// Weak (far) user.
    U2,
}

impl User {
    pub fn threshold(self, t: &Thresholds) -> Option<f64> {
        match self {
            User::U1 => t.g_max,
            User::U2 => t.g_u2,
        }
    }
}

pub fn marginal_cdf(r: f64, marginal: Marginal) -> Result<f64> {
    match marginal {
        Marginal::Exact => channel::equiv_gain_cdf(r),
        Marginal::Asymptotic if r == 0.0 => Ok(0.0),
        Marginal::Asymptotic => channel::equiv_gain_cdf_asymptotic(r),
    }
}

/// Equicoordinate point `Phi^{-1}(clamp(u))` for a marginal value `u`.
pub fn copula_point(u: f64) -> f64 {
    // the clamp keeps the quantile inside its open domain
    std_normal_quantile(u.clamp(PROB_FLOOR, PROB_CEIL)).unwrap_or(f64::NAN)
}

/// CDF of the FAS gain at `r`.
pub fn fas_gain_cdf(
    corr: &CorrelationMatrix,
    r: f64,
    marginal: Marginal,
    opts: &MvnOptions,
    seed: u64,
) -> Result<MvnResult> {
    if !(r >= 0.0) {
        return Err(Error::Domain { function: "fas_gain_cdf", value: r, domain: "r >= 0" });
    }
    let u = marginal_cdf(r, marginal)?;
    mvn_cdf_equicoordinate(corr, copula_point(u), opts, seed)
}

/// One user's outage probability with the intermediate quantities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutagePoint {
    pub value: f64,
    pub error_estimate: f64,
    /// Gain-domain threshold; `None` for an infeasible power split.
    pub threshold: Option<f64>,
    pub marginal_cdf: Option<f64>,
    pub equicoordinate: Option<f64>,
    pub method: Option<MvnMethod>,
}

impl OutagePoint {
    fn certain() -> Self {
        Self {
            value: 1.0,
            error_estimate: 0.0,
            threshold: None,
            marginal_cdf: None,
            equicoordinate: None,
            method: None,
        }
    }
}

pub fn outage_probability(
    corr: &CorrelationMatrix,
    params: &SystemParams,
    user: User,
    marginal: Marginal,
    opts: &MvnOptions,
    seed: u64,
) -> Result<OutagePoint> {
    params.validate()?;
    let thresholds = channel::compute_thresholds(params);
    let Some(r) = user.threshold(&thresholds) else {
        return Ok(OutagePoint::certain());
    };
    let u = marginal_cdf(r, marginal)?;
    let x = copula_point(u);
    let mvn = mvn_cdf_equicoordinate(corr, x, opts, seed)?;
    Ok(OutagePoint {
        value: mvn.value,
        error_estimate: mvn.error_estimate,
        threshold: Some(r),
        marginal_cdf: Some(u),
        equicoordinate: Some(x),
        method: Some(mvn.method),
    })
}

/// Strong user: outage unless `g_fas` clears both the SIC and own-signal
/// thresholds.
pub fn outage_u1(corr: &CorrelationMatrix, params: &SystemParams, opts: &MvnOptions, seed: u64) -> Result<OutagePoint> {
    outage_probability(corr, params, User::U1, Marginal::Exact, opts, seed)
}

pub fn outage_u2(corr: &CorrelationMatrix, params: &SystemParams, opts: &MvnOptions, seed: u64) -> Result<OutagePoint> {
    outage_probability(corr, params, User::U2, Marginal::Exact, opts, seed)
}

pub fn outage_asymptotic(
    corr: &CorrelationMatrix,
    params: &SystemParams,
    user: User,
    opts: &MvnOptions,
    seed: u64,
) -> Result<OutagePoint> {
    outage_probability(corr, params, user, Marginal::Asymptotic, opts, seed)
}

/// Exact and asymptotic outage for both users at one parameter point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutageResult {
    pub op_u1: f64,
    pub op_u2: f64,
    pub op_u1_asymptotic: f64,
    pub op_u2_asymptotic: f64,
    pub mvn_error_u1: f64,
    pub mvn_error_u2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutageReport {
    pub thresholds: Thresholds,
    pub u1: OutagePoint,
    pub u2: OutagePoint,
    pub u1_asymptotic: OutagePoint,
    pub u2_asymptotic: OutagePoint,
}

impl OutageReport {
    pub fn result(&self) -> OutageResult {
        OutageResult {
            op_u1: self.u1.value,
            op_u2: self.u2.value,
            op_u1_asymptotic: self.u1_asymptotic.value,
            op_u2_asymptotic: self.u2_asymptotic.value,
            mvn_error_u1: self.u1.error_estimate,
            mvn_error_u2: self.u2.error_estimate,
        }
    }
}

/// Evaluates all four quantities. The same `seed` drives every integral;
/// exact and asymptotic forms therefore share lattice shifts.
pub fn evaluate(
    corr_u1: &CorrelationMatrix,
    corr_u2: &CorrelationMatrix,
    params: &SystemParams,
    opts: &MvnOptions,
    seed: u64,
) -> Result<OutageReport> {
    Ok(OutageReport {
        thresholds: channel::compute_thresholds(params),
        u1: outage_probability(corr_u1, params, User::U1, Marginal::Exact, opts, seed)?,
        u2: outage_probability(corr_u2, params, User::U2, Marginal::Exact, opts, seed)?,
        u1_asymptotic: outage_probability(corr_u1, params, User::U1, Marginal::Asymptotic, opts, seed)?,
        u2_asymptotic: outage_probability(corr_u2, params, User::U2, Marginal::Asymptotic, opts, seed)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::db_to_linear;
    use crate::portgrid::PortGrid;

    fn reference_at(snr_db: f64) -> SystemParams {
        SystemParams::reference(db_to_linear(snr_db))
    }

    fn opts() -> MvnOptions {
        MvnOptions::default()
    }

    #[test]
    fn single_port_collapses_to_marginal() {
        let c = PortGrid::single().correlation_matrix().unwrap();
        for r in [1e-6, 0.01, 0.25, 1.0, 4.0] {
            let got = fas_gain_cdf(&c, r, Marginal::Exact, &opts(), 0).unwrap().value;
            let want = channel::equiv_gain_cdf(r).unwrap();
            assert!((got - want).abs() < 1e-12, "r={r}");
        }
    }

    #[test]
    fn zero_threshold_gives_zero() {
        let c = PortGrid::square(2, 1.0).unwrap().correlation_matrix().unwrap();
        let v = fas_gain_cdf(&c, 0.0, Marginal::Exact, &opts(), 0).unwrap().value;
        assert!(v < 1e-290);
        assert!(fas_gain_cdf(&c, -1.0, Marginal::Exact, &opts(), 0).is_err());
    }

    #[test]
    fn independence_oracle() {
        let c = CorrelationMatrix::identity(4).unwrap();
        for r in [0.05, 0.3, 1.2] {
            let got = fas_gain_cdf(&c, r, Marginal::Exact, &opts(), 2).unwrap();
            let want = libm::pow(channel::equiv_gain_cdf(r).unwrap(), 4.0);
            assert!((got.value - want).abs() <= 1e-6, "r={r}");
        }
    }

    #[test]
    fn max_dominates_single_port() {
        for side in [2, 3, 4] {
            let c = PortGrid::square(side, 1.0).unwrap().correlation_matrix().unwrap();
            for r in [0.01, 0.1, 0.5] {
                let got = fas_gain_cdf(&c, r, Marginal::Exact, &opts(), 4).unwrap().value;
                assert!(got <= channel::equiv_gain_cdf(r).unwrap());
            }
        }
    }

    #[test]
    fn infeasible_split_is_certain_outage() {
        let c = PortGrid::square(2, 1.0).unwrap().correlation_matrix().unwrap();
        let mut p = reference_at(60.0);
        p.thr_sic = 3.0;
        p.thr_u2 = 3.0;
        for m in [Marginal::Exact, Marginal::Asymptotic] {
            let a = outage_probability(&c, &p, User::U1, m, &opts(), 0).unwrap();
            let b = outage_probability(&c, &p, User::U2, m, &opts(), 0).unwrap();
            assert_eq!((a.value, a.error_estimate), (1.0, 0.0));
            assert_eq!((b.value, b.error_estimate), (1.0, 0.0));
        }
    }

    #[test]
    fn single_antenna_reference_values() {
        let c = PortGrid::single().correlation_matrix().unwrap();
        let p = reference_at(60.0);
        let u1 = outage_u1(&c, &p, &opts(), 0).unwrap();
        let want = channel::equiv_gain_cdf(0.058_925_565_098_878_96).unwrap();
        assert!((u1.value - want).abs() < 1e-12);
        assert!((u1.value - 0.165).abs() < 1e-3);
        let u2 = outage_u2(&c, &p, &opts(), 0).unwrap();
        assert!((u2.value - 0.398_092_77).abs() < 1e-8);
    }

    #[test]
    fn asymptotic_gap_shrinks_with_snr() {
        let c = PortGrid::single().correlation_matrix().unwrap();
        let mut last = f64::INFINITY;
        for db in [50.0, 60.0, 70.0, 80.0] {
            let p = reference_at(db);
            let e = outage_u1(&c, &p, &opts(), 0).unwrap().value;
            let a = outage_asymptotic(&c, &p, User::U1, &opts(), 0).unwrap().value;
            let gap = ((a - e) / e).abs();
            assert!(gap < last, "db={db}");
            last = gap;
        }
        assert!(last <= 0.02);
    }
}
