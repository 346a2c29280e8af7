//! Multivariate standard normal CDF `P(Z <= b)` for `Z ~ N(0, R)`.
//!
//! The integral is rewritten with Genz's separation-of-variables transform
//! over a Cholesky factor whose variables are ordered greedily by smallest
//! conditional truncation probability, then integrated with a randomly
//! shifted Kronecker lattice. The spread of the per-shift means gives the
//! error estimate; the lattice size doubles until that estimate meets the
//! requested absolute accuracy or the point budget runs out.

use alloc::vec;
use alloc::vec::Vec;

use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::lattice::KroneckerLattice;
use crate::linalg::lower_mul;
use crate::montecarlo::McEstimate;
use crate::portgrid::CorrelationMatrix;
use crate::rng::{open_uniform, stream_rng};
use crate::specfun::{quantile_fast, std_normal_cdf, std_normal_pdf, std_normal_sf};

/// Coordinates below this are treated as deep tail.
pub const DEEP_TAIL: f64 = -8.0;

/// Reported error is this multiple of the standard error across shifts.
pub const ERROR_FACTOR: f64 = 3.0;

const DEGENERATE_VARIANCE: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MvnOptions {
    /// Target absolute error.
    pub accuracy: f64,
    /// Independent random shifts (at least 2).
    pub shifts: usize,
    /// Lattice points per shift in the first pass.
    pub initial_points: u64,
    /// Upper bound on lattice points per shift.
    pub max_points: u64,
}

impl Default for MvnOptions {
    fn default() -> Self {
        Self { accuracy: 1e-6, shifts: 8, initial_points: 1 << 10, max_points: 1 << 16 }
    }
}

impl MvnOptions {
    pub fn with_accuracy(accuracy: f64) -> Self {
        Self { accuracy, ..Self::default() }
    }

    fn validate(&self) -> Result<()> {
        if !(self.accuracy.is_finite() && self.accuracy > 0.0) {
            return Err(Error::InvalidAccuracy(self.accuracy));
        }
        if self.shifts < 2 || self.initial_points == 0 || self.max_points < self.initial_points {
            return Err(Error::InvalidParams { field: "mvn_options", reason: "inconsistent point budget" });
        }
        Ok(())
    }
}

/// How a value was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MvnMethod {
    /// Closed form (trivial limits, one active variable).
    Exact,
    /// Lattice integration.
    Qmc,
    /// Deep-tail shortcut: value and error both equal the univariate upper
    /// bound, which is already below the requested accuracy.
    DeepTailBound,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MvnResult {
    pub value: f64,
    pub error_estimate: f64,
    pub samples_used: u64,
    pub method: MvnMethod,
}

impl MvnResult {
    fn exact(value: f64) -> Self {
        Self { value, error_estimate: 0.0, samples_used: 0, method: MvnMethod::Exact }
    }
}

/// `P(Z_1 <= x, ..., Z_N <= x)`.
pub fn mvn_cdf_equicoordinate(
    corr: &CorrelationMatrix,
    x: f64,
    opts: &MvnOptions,
    seed: u64,
) -> Result<MvnResult> {
    mvn_cdf(corr, &vec![x; corr.dim()], opts, seed)
}

/// `P(Z <= upper)` componentwise. Infinite limits are allowed.
pub fn mvn_cdf(
    corr: &CorrelationMatrix,
    upper: &[f64],
    opts: &MvnOptions,
    seed: u64,
) -> Result<MvnResult> {
    opts.validate()?;
    if upper.len() != corr.dim() {
        return Err(Error::DimensionMismatch { expected: corr.dim(), got: upper.len() });
    }
    if upper.iter().any(|b| b.is_nan()) {
        return Err(Error::Domain { function: "mvn_cdf", value: f64::NAN, domain: "finite or infinite limits" });
    }
    if upper.contains(&f64::NEG_INFINITY) {
        return Ok(MvnResult::exact(0.0));
    }
    let active: Vec<usize> = (0..upper.len()).filter(|&i| upper[i] < f64::INFINITY).collect();
    if active.is_empty() {
        return Ok(MvnResult::exact(1.0));
    }
    let b: Vec<f64> = active.iter().map(|&i| upper[i]).collect();
    if b.len() == 1 {
        return Ok(MvnResult::exact(std_normal_cdf(b[0])));
    }

    let hi = b.iter().map(|&v| std_normal_cdf(v)).fold(1.0, f64::min);
    let lo = (1.0 - b.iter().map(|&v| std_normal_sf(v)).sum::<f64>()).max(0.0);
    let min_b = b.iter().copied().fold(f64::INFINITY, f64::min);
    if min_b < DEEP_TAIL && hi < opts.accuracy {
        return Ok(MvnResult {
            value: hi,
            error_estimate: hi,
            samples_used: 0,
            method: MvnMethod::DeepTailBound,
        });
    }

    let sov = SeparatedIntegrand::new(corr.submatrix(&active), b);
    let mut res = sov.integrate(opts, seed);
    res.value = res.value.clamp(lo, hi);
    Ok(res)
}

/// Plain Monte Carlo estimate of the equicoordinate probability, for
/// cross-checking the lattice integrator.
pub fn mvn_cdf_brute_force(corr: &CorrelationMatrix, x: f64, trials: u64, seed: u64) -> Result<McEstimate> {
    if trials == 0 {
        return Err(Error::TooFewTrials { got: 0, min: 1 });
    }
    let n = corr.dim();
    let l = corr.cholesky_factor();
    let mut rng = stream_rng(seed, 0);
    let mut w = vec![0.0; n];
    let mut z = vec![0.0; n];
    let mut hits = 0u64;
    for _ in 0..trials {
        for v in w.iter_mut() {
            *v = StandardNormal.sample(&mut rng);
        }
        lower_mul(l, n, &w, &mut z);
        if z.iter().all(|&v| v <= x) {
            hits += 1;
        }
    }
    Ok(McEstimate::from_counts(hits, trials, seed))
}

/// Reordered, row-scaled Cholesky data for the transformed integrand.
struct SeparatedIntegrand {
    m: usize,
    // strictly-lower rows scaled by the inverse diagonal (raw for degenerate rows)
    l: Vec<f64>,
    b: Vec<f64>,
    degenerate: Vec<bool>,
}

impl SeparatedIntegrand {
    fn new(mut c: Vec<f64>, mut b: Vec<f64>) -> Self {
        let m = b.len();
        let mut l = vec![0.0; m * m];
        let mut y = vec![0.0; m];
        let mut diag = vec![0.0; m];
        let mut degenerate = vec![false; m];

        for i in 0..m {
            let mut best = i;
            let mut best_p = f64::INFINITY;
            for j in i..m {
                let row = &l[j * m..j * m + i];
                let s = c[j * m + j] - row.iter().map(|v| v * v).sum::<f64>();
                let mean: f64 = row.iter().zip(&y).map(|(a, b)| a * b).sum();
                let p = if s > DEGENERATE_VARIANCE {
                    std_normal_cdf((b[j] - mean) / libm::sqrt(s))
                } else if b[j] >= mean {
                    1.0
                } else {
                    0.0
                };
                if p < best_p {
                    best_p = p;
                    best = j;
                }
            }
            if best != i {
                for k in 0..m {
                    c.swap(i * m + k, best * m + k);
                }
                for k in 0..m {
                    c.swap(k * m + i, k * m + best);
                }
                b.swap(i, best);
                for k in 0..i {
                    l.swap(i * m + k, best * m + k);
                }
            }
            let s = c[i * m + i] - l[i * m..i * m + i].iter().map(|v| v * v).sum::<f64>();
            if s > DEGENERATE_VARIANCE {
                let lii = libm::sqrt(s);
                diag[i] = lii;
                for j in (i + 1)..m {
                    let dot: f64 = (0..i).map(|k| l[j * m + k] * l[i * m + k]).sum();
                    l[j * m + i] = (c[j * m + i] - dot) / lii;
                }
                let mean: f64 = (0..i).map(|k| l[i * m + k] * y[k]).sum();
                y[i] = truncated_mean_below((b[i] - mean) / lii);
            } else {
                degenerate[i] = true;
                for j in (i + 1)..m {
                    l[j * m + i] = 0.0;
                }
                y[i] = 0.0;
            }
        }
        for i in 0..m {
            if !degenerate[i] {
                b[i] /= diag[i];
                for k in 0..i {
                    l[i * m + k] /= diag[i];
                }
            }
        }
        Self { m, l, b, degenerate }
    }

    #[inline]
    fn eval(&self, w: &[f64], y: &mut [f64]) -> f64 {
        let m = self.m;
        let mut prod = 1.0;
        for i in 0..m {
            let row = &self.l[i * m..i * m + i];
            let mean: f64 = row.iter().zip(y.iter()).map(|(a, b)| a * b).sum();
            if self.degenerate[i] {
                if mean > self.b[i] {
                    return 0.0;
                }
                y[i] = 0.0;
                continue;
            }
            let e = std_normal_cdf(self.b[i] - mean);
            prod *= e;
            if prod == 0.0 {
                return 0.0;
            }
            if i + 1 < m {
                y[i] = quantile_fast(w[i] * e);
            }
        }
        prod
    }

    fn integrate(&self, opts: &MvnOptions, seed: u64) -> MvnResult {
        let dim = self.m - 1;
        let lattice = KroneckerLattice::new(dim);
        let mut rng = stream_rng(seed, 0);
        let shifts: Vec<Vec<f64>> =
            (0..opts.shifts).map(|_| (0..dim).map(|_| open_uniform(&mut rng)).collect()).collect();
        let mut sums = vec![0.0; opts.shifts];
        let mut w = vec![0.0; dim];
        let mut y = vec![0.0; self.m];
        let mut done = 0u64;
        let mut target = opts.initial_points;
        let k = opts.shifts as f64;
        loop {
            for (shift, sum) in shifts.iter().zip(sums.iter_mut()) {
                for i in done..target {
                    lattice.point(i + 1, shift, &mut w);
                    *sum += self.eval(&w, &mut y);
                }
            }
            done = target;
            let means: Vec<f64> = sums.iter().map(|s| s / done as f64).collect();
            let mean = means.iter().sum::<f64>() / k;
            let var = means.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (k * (k - 1.0));
            let err = ERROR_FACTOR * libm::sqrt(var);
            if err <= opts.accuracy || done >= opts.max_points {
                return MvnResult {
                    value: mean,
                    error_estimate: err,
                    samples_used: done * opts.shifts as u64,
                    method: MvnMethod::Qmc,
                };
            }
            target = (2 * done).min(opts.max_points);
        }
    }
}

// E[Z | Z <= t] for standard normal Z.
fn truncated_mean_below(t: f64) -> f64 {
    if t < -37.0 {
        return t;
    }
    let p = std_normal_cdf(t);
    -std_normal_pdf(t) / p
}
