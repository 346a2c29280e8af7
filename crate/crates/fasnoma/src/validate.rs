//! Self-validation: independent oracles run against the library.

use fasnoma_core::channel::{db_to_linear, SystemParams};
use fasnoma_core::montecarlo::{GainModel, OutageSimulation};
use fasnoma_core::mvncdf::{mvn_cdf_brute_force, mvn_cdf_equicoordinate, MvnOptions};
use fasnoma_core::outage::{outage_probability, Marginal, User};
use fasnoma_core::portgrid::{CorrelationMatrix, PortGrid};
use fasnoma_core::rng::{derive_seed, stream_rng, unit_exponential};
use fasnoma_core::specfun::bessel_k1;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Budget {
    Small,
    Full,
}

/// Replaceable implementations, so the harness itself can be tested.
#[derive(Debug, Clone, Copy)]
pub struct Hooks {
    pub bessel_k1: fn(f64) -> f64,
}

fn library_k1(x: f64) -> f64 {
    bessel_k1(x).unwrap_or(f64::NAN)
}

impl Default for Hooks {
    fn default() -> Self {
        Self { bessel_k1: library_k1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: &'static str,
    /// Worst-case statistic; passes when `statistic <= threshold`.
    pub statistic: f64,
    pub threshold: f64,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn at_most(name: &'static str, statistic: f64, threshold: f64, detail: String) -> Self {
        // NaN statistics fail
        let passed = statistic <= threshold;
        Self { name, statistic, threshold, passed, detail }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub budget: Budget,
    pub seed: u64,
    pub passed: bool,
    pub checks: Vec<Check>,
}

impl Report {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// `K1(x) = int_0^inf exp(-x cosh t) cosh t dt` by the trapezoid rule, which
/// converges geometrically for this integrand.
pub fn k1_quadrature(x: f64) -> f64 {
    let h = 1.0 / 64.0;
    let mut sum = 0.5 * (-x).exp();
    for k in 1.. {
        let t = k as f64 * h;
        let term = (-x * t.cosh()).exp() * t.cosh();
        sum += term;
        if term < sum * 1e-18 {
            break;
        }
    }
    sum * h
}

pub fn check_k1(k1: fn(f64) -> f64) -> Check {
    let mut worst: f64 = 0.0;
    let mut at = 0.0;
    for i in 0..40 {
        let x = 10f64.powf(-2.0 + 4.0 * i as f64 / 39.0);
        let rel = ((k1(x) - k1_quadrature(x)) / k1_quadrature(x)).abs();
        if !(rel <= worst) {
            worst = rel;
            at = x;
        }
    }
    Check::at_most("k1_vs_quadrature", worst, 1e-10, format!("worst relative error at x = {at}"))
}

/// Equivalent-gain CDF through an arbitrary `K1`.
fn cdf_from_k1(r: f64, k1: fn(f64) -> f64) -> f64 {
    let x = 2.0 * r.sqrt();
    1.0 - x * k1(x)
}

/// Empirical CDF of sampled `g_t g_n` products versus the closed form at 20
/// log-spaced points, in binomial standard errors.
pub fn check_marginal(samples: usize, seed: u64, k1: fn(f64) -> f64) -> Check {
    let chunks = 64usize;
    let per = samples.div_ceil(chunks);
    let mut g: Vec<f64> = (0..chunks)
        .into_par_iter()
        .flat_map_iter(|c| {
            let mut rng = stream_rng(derive_seed(seed, 0x6d61_7267), c as u64);
            let n = per.min(samples.saturating_sub(c * per));
            (0..n).map(move |_| unit_exponential(&mut rng) * unit_exponential(&mut rng)).collect::<Vec<_>>()
        })
        .collect();
    g.par_sort_unstable_by(f64::total_cmp);
    let n = g.len() as f64;
    let mut worst: f64 = 0.0;
    let mut at = 0.0;
    for k in 0..20 {
        let r = 10f64.powf(-3.0 + 4.0 * k as f64 / 19.0);
        let f = cdf_from_k1(r, k1);
        let emp = g.partition_point(|&v| v <= r) as f64 / n;
        let z = (emp - f).abs() / (f * (1.0 - f) / n).sqrt();
        if !(z <= worst) {
            worst = z;
            at = r;
        }
    }
    Check::at_most(
        "marginal_cdf_vs_mc",
        worst,
        3.0,
        format!("{} samples; worst |z| at r = {at}", g.len()),
    )
}

/// Normalized Gram matrix of `dim + 1` Gaussian columns.
pub fn random_correlation(dim: usize, seed: u64) -> CorrelationMatrix {
    let mut rng = stream_rng(seed, 0x636f_7272);
    let k = dim + 1;
    let a: Vec<f64> = (0..dim * k).map(|_| StandardNormal.sample(&mut rng)).collect();
    let mut c = vec![0.0; dim * dim];
    for i in 0..dim {
        for j in 0..dim {
            c[i * dim + j] = (0..k).map(|t| a[i * k + t] * a[j * k + t]).sum();
        }
    }
    let d: Vec<f64> = (0..dim).map(|i| c[i * dim + i].sqrt()).collect();
    for i in 0..dim {
        for j in 0..dim {
            c[i * dim + j] /= d[i] * d[j];
        }
        c[i * dim + i] = 1.0;
    }
    CorrelationMatrix::from_entries(dim, c).expect("gram matrices are valid correlations")
}

pub fn check_orthant() -> Check {
    let c = CorrelationMatrix::from_entries(2, vec![1.0, 0.5, 0.5, 1.0]).expect("valid");
    let v = mvn_cdf_equicoordinate(&c, 0.0, &MvnOptions::default(), 0).map(|r| r.value).unwrap_or(f64::NAN);
    Check::at_most("mvn_bivariate_orthant", (v - 1.0 / 3.0).abs(), 1e-5, format!("value {v}"))
}

/// QMC against brute-force sampling on random matrices of size 2..=8.
/// The statistic is the worst `|qmc - mc| / (3 (se + err))`, with the
/// binomial SE taken at the QMC value.
pub fn check_mvn(matrices: usize, trials: u64, seed: u64) -> Check {
    let opts = MvnOptions::default();
    let cases: Vec<(usize, f64)> =
        (0..matrices).flat_map(|m| [-2.0, 0.0, 1.0].map(|x| (m, x))).collect();
    let ratios: Vec<f64> = cases
        .par_iter()
        .map(|&(m, x)| {
            let dim = 2 + m % 7;
            let corr = random_correlation(dim, derive_seed(seed, m as u64));
            let q = mvn_cdf_equicoordinate(&corr, x, &opts, derive_seed(seed, 1_000 + m as u64));
            let b = mvn_cdf_brute_force(&corr, x, trials, derive_seed(seed, 2_000 + m as u64));
            match (q, b) {
                (Ok(q), Ok(b)) => {
                    let se = (q.value * (1.0 - q.value) / trials as f64).sqrt();
                    (q.value - b.estimate).abs() / (3.0 * (se + q.error_estimate))
                }
                _ => f64::NAN,
            }
        })
        .collect();
    let worst = ratios.iter().copied().fold(0.0, |a: f64, b| if b <= a { a } else { b });
    Check::at_most(
        "mvn_qmc_vs_brute_force",
        worst,
        1.0,
        format!("{} cases, {trials} trials each", cases.len()),
    )
}

/// One analytic-versus-simulation comparison.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutageComparison {
    pub ports: usize,
    pub snr_db: f64,
    pub user: User,
    pub analytic: f64,
    pub mvn_error: f64,
    pub mc: f64,
    pub se: f64,
}

impl OutageComparison {
    /// `|analytic - mc| / (se + mvn error)`.
    pub fn z(&self) -> f64 {
        let d = (self.analytic - self.mc).abs();
        if d == 0.0 {
            0.0
        } else {
            d / (self.se + self.mvn_error)
        }
    }
}

/// Copula-model simulation against the analytic OP on square W = 1 grids,
/// skipping points with analytic OP below `min_op`.
pub fn compare_outage(
    sides: &[usize],
    snrs_db: &[f64],
    trials: u64,
    min_op: f64,
    seed: u64,
) -> Result<Vec<OutageComparison>, Error> {
    let opts = MvnOptions::default();
    let mut out = Vec::new();
    for &side in sides {
        let corr = PortGrid::square(side, 1.0)?.correlation_matrix()?;
        for &db in snrs_db {
            let params = SystemParams::reference(db_to_linear(db));
            for user in [User::U1, User::U2] {
                let a = outage_probability(&corr, &params, user, Marginal::Exact, &opts, seed)?;
                if a.value < min_op {
                    continue;
                }
                let tag = (side as u64) << 16 | (db as u64) << 1 | u64::from(user == User::U2);
                let sim = OutageSimulation::new(&corr, &params, user, GainModel::Copula, trials, derive_seed(seed, tag))?;
                let counts: Vec<u64> = (0..sim.partitions()).into_par_iter().map(|i| sim.run_partition(i)).collect();
                let e = sim.finish(counts);
                out.push(OutageComparison {
                    ports: side * side,
                    snr_db: db,
                    user,
                    analytic: a.value,
                    mvn_error: a.error_estimate,
                    mc: e.estimate,
                    se: e.standard_error,
                });
            }
        }
    }
    Ok(out)
}

pub fn check_outage(sides: &[usize], snrs_db: &[f64], trials: u64, seed: u64) -> Result<Check, Error> {
    let rows = compare_outage(sides, snrs_db, trials, 1e-4, seed)?;
    let worst = rows.iter().map(OutageComparison::z).fold(0.0, |a: f64, b| if b <= a { a } else { b });
    Ok(Check::at_most(
        "outage_analytic_vs_mc",
        worst,
        4.0,
        format!("{} configurations, {trials} trials each", rows.len()),
    ))
}

/// Runs the suite. The report depends only on `budget`, `seed` and `hooks`.
pub fn self_validate(budget: Budget, seed: u64, hooks: Hooks) -> Result<Report, Error> {
    let (samples, matrices, mvn_trials, sides, snrs, trials): (usize, usize, u64, &[usize], &[f64], u64) =
        match budget {
            Budget::Small => (1_000_000, 7, 200_000, &[1, 2], &[55.0, 60.0], 1_000_000),
            Budget::Full => (10_000_000, 25, 1_000_000, &[1, 2, 5], &[45.0, 55.0, 60.0], 10_000_000),
        };
    let checks = vec![
        check_k1(hooks.bessel_k1),
        check_marginal(samples, seed, hooks.bessel_k1),
        check_orthant(),
        check_mvn(matrices, mvn_trials, seed),
        check_outage(sides, snrs, trials, seed)?,
    ];
    Ok(Report { budget, seed, passed: checks.iter().all(|c| c.passed), checks })
}
