//! Monte Carlo outage estimation.
//!
//! Two gain models are sampled:
//!
//! * [`GainModel::Copula`] draws the FAS gain from the copula model used by
//!   the analytic results: per-port equivalent gains with exact marginals
//!   and a Gaussian copula with the port correlation. Since the copula is
//!   monotone in every coordinate, the maximum gain is the marginal inverse
//!   of `Phi(max z)`.
//! * [`GainModel::Physical`] draws a correlated complex Gaussian channel
//!   for information and an independent exponential energy gain.
//!
//! Work is split into a fixed number of partitions, each with its own
//! ChaCha stream, so merged results do not depend on how partitions are
//! scheduled.

use alloc::vec;
use alloc::vec::Vec;

use rand_chacha::ChaCha8Rng;
use rand_core::RngCore;
use rand_distr::{Distribution, StandardNormal};

use crate::channel::{compute_thresholds, equiv_gain_cdf_unchecked, equiv_gain_inverse, equiv_gain_sf, SystemParams};
use crate::error::{Error, Result};
use crate::linalg::lower_mul;
use crate::outage::User;
use crate::portgrid::CorrelationMatrix;
use crate::rng::{derive_seed, stream_rng, unit_exponential};
use crate::specfun::{std_normal_cdf, std_normal_quantile, std_normal_sf};

pub const MIN_TRIALS: u64 = 10_000;
pub const DEFAULT_PARTITIONS: u64 = 64;
/// Fewer observed events than this marks an estimate as unresolved.
pub const MIN_EVENTS: u64 = 10;

const Z95: f64 = 1.959_963_984_540_054;
const OUTAGE_TAG: u64 = 0x6f75_7461_6765;

/// Proportion estimate with a 95% normal-approximation interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub estimate: f64,
    pub trials: u64,
    pub events: u64,
    pub standard_error: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub seed: u64,
    pub resolved: bool,
}

impl McEstimate {
    pub fn from_counts(events: u64, trials: u64, seed: u64) -> Self {
        let n = trials as f64;
        let p = events as f64 / n;
        let se = libm::sqrt(p * (1.0 - p) / n);
        Self {
            estimate: p,
            trials,
            events,
            standard_error: se,
            ci_low: (p - Z95 * se).max(0.0),
            ci_high: (p + Z95 * se).min(1.0),
            seed,
            resolved: events >= MIN_EVENTS,
        }
    }

    /// `|reference - estimate| / SE`; infinite when SE is zero and the two
    /// differ.
    pub fn z_score(&self, reference: f64) -> f64 {
        let d = libm::fabs(reference - self.estimate);
        if d == 0.0 {
            0.0
        } else {
            d / self.standard_error
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum GainModel {
    #[default]
    Copula,
    Physical,
}

/// Reusable FAS-gain sampler for one correlation matrix.
#[derive(Debug, Clone)]
pub struct GainSampler<'a> {
    corr: &'a CorrelationMatrix,
    model: GainModel,
    w: Vec<f64>,
    z: Vec<f64>,
    v: Vec<f64>,
}

impl<'a> GainSampler<'a> {
    pub fn new(corr: &'a CorrelationMatrix, model: GainModel) -> Self {
        let n = corr.dim();
        Self { corr, model, w: vec![0.0; n], z: vec![0.0; n], v: vec![0.0; n] }
    }

    pub fn model(&self) -> GainModel {
        self.model
    }

    pub fn sample<R: RngCore + ?Sized>(&mut self, rng: &mut R) -> f64 {
        match self.model {
            GainModel::Copula => {
                let m = self.max_copula_normal(rng);
                equiv_gain_inverse(std_normal_cdf(m), std_normal_sf(m))
            }
            GainModel::Physical => self.physical(rng),
        }
    }

    /// Largest coordinate of one `N(0, R)` draw.
    pub fn max_copula_normal<R: RngCore + ?Sized>(&mut self, rng: &mut R) -> f64 {
        let n = self.w.len();
        fill_normal(rng, &mut self.w);
        lower_mul(self.corr.cholesky_factor(), n, &self.w, &mut self.z);
        self.z.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    fn physical<R: RngCore + ?Sized>(&mut self, rng: &mut R) -> f64 {
        let n = self.w.len();
        let l = self.corr.cholesky_factor();
        fill_normal(rng, &mut self.w);
        lower_mul(l, n, &self.w, &mut self.z);
        fill_normal(rng, &mut self.w);
        lower_mul(l, n, &self.w, &mut self.v);
        let best = self
            .z
            .iter()
            .zip(&self.v)
            .map(|(&re, &im)| 0.5 * (re * re + im * im))
            .fold(0.0, f64::max);
        unit_exponential(rng) * best
    }

    /// Per-port information gains of the physical model, without the
    /// energy factor.
    pub fn physical_port_gains<R: RngCore + ?Sized>(&mut self, rng: &mut R, out: &mut [f64]) {
        let n = self.w.len();
        let l = self.corr.cholesky_factor();
        fill_normal(rng, &mut self.w);
        lower_mul(l, n, &self.w, &mut self.z);
        fill_normal(rng, &mut self.w);
        lower_mul(l, n, &self.w, &mut self.v);
        for ((o, &re), &im) in out.iter_mut().zip(&self.z).zip(&self.v) {
            *o = 0.5 * (re * re + im * im);
        }
    }
}

fn fill_normal<R: RngCore + ?Sized>(rng: &mut R, out: &mut [f64]) {
    for v in out.iter_mut() {
        *v = StandardNormal.sample(rng);
    }
}

/// One draw of the FAS gain under the copula model.
pub fn sample_fas_gain_copula<R: RngCore + ?Sized>(corr: &CorrelationMatrix, rng: &mut R) -> f64 {
    GainSampler::new(corr, GainModel::Copula).sample(rng)
}

/// One draw of the FAS gain under the physical channel model.
pub fn sample_fas_gain_physical<R: RngCore + ?Sized>(corr: &CorrelationMatrix, rng: &mut R) -> f64 {
    GainSampler::new(corr, GainModel::Physical).sample(rng)
}

/// Trials assigned to partition `index` of `partitions`.
pub fn partition_trials(trials: u64, partitions: u64, index: u64) -> u64 {
    trials / partitions + u64::from(index < trials % partitions)
}

/// A configured outage simulation that can be run partition by partition.
#[derive(Debug, Clone)]
pub struct OutageSimulation<'a> {
    corr: &'a CorrelationMatrix,
    model: GainModel,
    threshold: Option<f64>,
    // copula threshold moved to the normal domain
    z_threshold: f64,
    trials: u64,
    partitions: u64,
    seed: u64,
}

impl<'a> OutageSimulation<'a> {
    pub fn new(
        corr: &'a CorrelationMatrix,
        params: &SystemParams,
        user: User,
        model: GainModel,
        trials: u64,
        seed: u64,
    ) -> Result<Self> {
        if trials < MIN_TRIALS {
            return Err(Error::TooFewTrials { got: trials, min: MIN_TRIALS });
        }
        params.validate()?;
        let threshold = user.threshold(&compute_thresholds(params));
        let z_threshold = threshold.map_or(f64::NAN, copula_z_threshold);
        Ok(Self { corr, model, threshold, z_threshold, trials, partitions: DEFAULT_PARTITIONS, seed })
    }

    pub fn with_partitions(mut self, partitions: u64) -> Self {
        self.partitions = partitions.clamp(1, self.trials);
        self
    }

    pub fn partitions(&self) -> u64 {
        self.partitions
    }

    pub fn trials(&self) -> u64 {
        self.trials
    }

    pub fn threshold(&self) -> Option<f64> {
        self.threshold
    }

    /// Outage events observed in one partition.
    pub fn run_partition(&self, index: u64) -> u64 {
        let n = partition_trials(self.trials, self.partitions, index);
        let Some(r) = self.threshold else {
            return n;
        };
        let mut rng: ChaCha8Rng = stream_rng(derive_seed(self.seed, OUTAGE_TAG), index);
        let mut sampler = GainSampler::new(self.corr, self.model);
        let mut events = 0;
        match self.model {
            // g_fas <= r exactly when Phi(max z) <= F(r)
            GainModel::Copula => {
                for _ in 0..n {
                    if sampler.max_copula_normal(&mut rng) <= self.z_threshold {
                        events += 1;
                    }
                }
            }
            GainModel::Physical => {
                for _ in 0..n {
                    if sampler.sample(&mut rng) <= r {
                        events += 1;
                    }
                }
            }
        }
        events
    }

    /// Merges per-partition event counts.
    pub fn finish(&self, events: impl IntoIterator<Item = u64>) -> McEstimate {
        let total = events.into_iter().sum();
        let mut est = McEstimate::from_counts(total, self.trials, self.seed);
        if self.threshold.is_none() {
            est.resolved = true;
        }
        est
    }

    pub fn run_serial(&self) -> McEstimate {
        self.finish((0..self.partitions).map(|i| self.run_partition(i)))
    }
}

/// `Phi^{-1}(F(r))`, taken from whichever tail is smaller.
pub fn copula_z_threshold(r: f64) -> f64 {
    let f = equiv_gain_cdf_unchecked(r);
    if f <= 0.5 {
        std_normal_quantile(f).unwrap_or(f64::NEG_INFINITY)
    } else {
        let q = equiv_gain_sf(r);
        std_normal_quantile(q).map_or(f64::INFINITY, |z| -z)
    }
}

/// Serial outage estimate with [`DEFAULT_PARTITIONS`] partitions.
pub fn estimate_outage(
    corr: &CorrelationMatrix,
    params: &SystemParams,
    user: User,
    model: GainModel,
    trials: u64,
    seed: u64,
) -> Result<McEstimate> {
    Ok(OutageSimulation::new(corr, params, user, model, trials, seed)?.run_serial())
}
