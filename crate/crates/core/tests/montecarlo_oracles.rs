use fasnoma_core::channel::{
    compute_thresholds, db_to_linear, equiv_gain_cdf, sinr_sic, sinr_u1, SystemParams,
};
use fasnoma_core::montecarlo::{
    estimate_outage, GainModel, GainSampler, McEstimate, OutageSimulation,
};
use fasnoma_core::mvncdf::MvnOptions;
use fasnoma_core::outage::{fas_gain_cdf, outage_probability, Marginal, User};
use fasnoma_core::portgrid::{CorrelationMatrix, PortGrid};
use fasnoma_core::rng::stream_rng;

fn params(db: f64) -> SystemParams {
    SystemParams::reference(db_to_linear(db))
}

fn corr(side: usize) -> CorrelationMatrix {
    PortGrid::square(side, 1.0).unwrap().correlation_matrix().unwrap()
}

fn binomial_se(p: f64, n: usize) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}

fn empirical_cdf(sorted: &[f64], r: f64) -> f64 {
    sorted.partition_point(|&g| g <= r) as f64 / sorted.len() as f64
}

#[test]
fn copula_sampler_single_port_marginal() {
    let c = corr(1);
    let mut s = GainSampler::new(&c, GainModel::Copula);
    let mut rng = stream_rng(21, 0);
    let n = 200_000;
    let mut g: Vec<f64> = (0..n).map(|_| s.sample(&mut rng)).collect();
    g.sort_by(f64::total_cmp);
    for k in 0..20 {
        let r = 10f64.powf(-3.0 + 4.0 * k as f64 / 19.0);
        let f = equiv_gain_cdf(r).unwrap();
        let emp = empirical_cdf(&g, r);
        assert!((emp - f).abs() <= 3.0 * binomial_se(f, n) + 1e-12, "r={r} emp={emp} f={f}");
    }
}

#[test]
fn copula_sampler_matches_fas_gain_cdf() {
    let c = corr(2);
    let mut s = GainSampler::new(&c, GainModel::Copula);
    let mut rng = stream_rng(22, 0);
    let n = 200_000;
    let mut g: Vec<f64> = (0..n).map(|_| s.sample(&mut rng)).collect();
    g.sort_by(f64::total_cmp);
    let opts = MvnOptions::default();
    let mut points = vec![0.02, 0.1, 0.5];
    for db in [45.0, 50.0, 55.0] {
        let t = compute_thresholds(&params(db));
        points.extend([t.g_max.unwrap(), t.g_u2.unwrap()]);
    }
    for r in points {
        let a = fas_gain_cdf(&c, r, Marginal::Exact, &opts, 1).unwrap();
        let emp = empirical_cdf(&g, r);
        let tol = 3.0 * (binomial_se(a.value, n) + a.error_estimate);
        assert!((emp - a.value).abs() <= tol, "r={r} emp={emp} analytic={}", a.value);
    }
}

#[test]
fn single_port_weak_user_reference() {
    let e = estimate_outage(&corr(1), &params(60.0), User::U2, GainModel::Copula, 1_000_000, 31).unwrap();
    let want = equiv_gain_cdf(0.25).unwrap();
    assert!(e.z_score(want) <= 3.0, "{e:?}");
    assert!((e.estimate - 0.398).abs() < 3e-3);
}

#[test]
fn z_scores_over_independent_seeds() {
    let opts = MvnOptions::default();
    let configs = [(2, 55.0, User::U1), (3, 55.0, User::U2), (5, 45.0, User::U1)];
    for (side, db, user) in configs {
        let c = corr(side);
        let p = params(db);
        let a = outage_probability(&c, &p, user, Marginal::Exact, &opts, 0).unwrap();
        let mut worst: f64 = 0.0;
        for seed in 0..50 {
            let e = estimate_outage(&c, &p, user, GainModel::Copula, 100_000, 1_000 + seed).unwrap();
            assert!(e.resolved);
            let z = (a.value - e.estimate) / (e.standard_error + a.error_estimate);
            worst = worst.max(z.abs());
        }
        assert!(worst <= 4.0, "side={side} db={db} {user:?} worst={worst}");
    }
}

#[test]
fn sic_event_equivalence_per_trial() {
    let c = corr(2);
    let mut s = GainSampler::new(&c, GainModel::Copula);
    let mut rng = stream_rng(41, 0);
    for db in [40.0, 50.0, 60.0] {
        let p = params(db);
        let g_max = compute_thresholds(&p).g_max.unwrap();
        let mut successes = 0;
        for _ in 0..100_000 / 3 {
            let g = s.sample(&mut rng);
            let raw = sinr_sic(g, &p) > p.thr_sic && sinr_u1(g, &p) > p.thr_u1;
            assert_eq!(raw, g > g_max, "db={db} g={g}");
            successes += u32::from(raw);
        }
        assert!(successes > 0);
    }
}

#[test]
fn physical_model_marginals_are_unit_exponential() {
    let c = corr(2);
    let mut s = GainSampler::new(&c, GainModel::Physical);
    let mut rng = stream_rng(51, 0);
    let n = 100_000;
    let mut ports = std::array::from_fn::<_, 4, _>(|_| Vec::<f64>::with_capacity(n));
    let mut buf = [0.0; 4];
    for _ in 0..n {
        s.physical_port_gains(&mut rng, &mut buf);
        for (p, &b) in ports.iter_mut().zip(&buf) {
            p.push(b);
        }
    }
    for mut g in ports {
        let mean = g.iter().sum::<f64>() / n as f64;
        // Exp(1) has unit variance
        assert!((mean - 1.0).abs() <= 3.0 / (n as f64).sqrt());
        g.sort_by(f64::total_cmp);
        for r in [0.1f64, 0.5, 1.0, 2.0, 4.0] {
            let f = 1.0 - (-r).exp();
            assert!((empirical_cdf(&g, r) - f).abs() <= 3.0 * binomial_se(f, n));
        }
    }
}

#[test]
fn product_of_single_port_gains_has_unit_mean() {
    let c = corr(1);
    let mut s = GainSampler::new(&c, GainModel::Physical);
    let mut rng = stream_rng(52, 0);
    let n = 200_000;
    let g: Vec<f64> = (0..n).map(|_| s.sample(&mut rng)).collect();
    let mean = g.iter().sum::<f64>() / n as f64;
    // E[(g_t g)^2] = 4, so the variance is 3
    assert!((mean - 1.0).abs() <= 3.0 * (3.0 / n as f64).sqrt());
}

#[test]
fn single_port_models_share_distribution() {
    let c = corr(1);
    let n = 100_000;
    let draw = |model, stream| {
        let mut s = GainSampler::new(&c, model);
        let mut rng = stream_rng(61, stream);
        let mut v: Vec<f64> = (0..n).map(|_| s.sample(&mut rng)).collect();
        v.sort_by(f64::total_cmp);
        v
    };
    let a = draw(GainModel::Copula, 0);
    let b = draw(GainModel::Physical, 1);
    let mut d: f64 = 0.0;
    let (mut i, mut j) = (0, 0);
    while i < n && j < n {
        if a[i] <= b[j] {
            i += 1;
        } else {
            j += 1;
        }
        d = d.max((i as f64 - j as f64).abs() / n as f64);
    }
    // two-sample critical value at 1%
    let crit = 1.628 * (2.0 / n as f64).sqrt();
    assert!(d < crit, "ks={d} crit={crit}");
}

#[test]
fn shared_energy_gain_raises_physical_outage() {
    // the physical channel shares one energy gain across ports, so it keeps
    // less diversity than the copula model
    let c = corr(2);
    let p = params(60.0);
    let a = outage_probability(&c, &p, User::U1, Marginal::Exact, &MvnOptions::default(), 0).unwrap();
    let e = estimate_outage(&c, &p, User::U1, GainModel::Physical, 200_000, 71).unwrap();
    assert!(e.ci_low > a.value, "physical={e:?} analytic={}", a.value);
}

#[test]
#[ignore = "physical channel with a shared energy gain sits about 40x above the copula model here"]
fn physical_model_within_quarter_of_analytic() {
    let c = corr(2);
    let p = params(60.0);
    let a = outage_probability(&c, &p, User::U1, Marginal::Exact, &MvnOptions::default(), 0).unwrap();
    let e = estimate_outage(&c, &p, User::U1, GainModel::Physical, 1_000_000, 72).unwrap();
    assert!(((e.estimate - a.value) / a.value).abs() <= 0.25, "physical={} analytic={}", e.estimate, a.value);
}

#[test]
fn partitioned_merge_equals_serial() {
    let c = corr(3);
    let p = params(50.0);
    for model in [GainModel::Copula, GainModel::Physical] {
        let sim = OutageSimulation::new(&c, &p, User::U2, model, 30_011, 81).unwrap();
        let serial = sim.run_serial();
        let mut counts: Vec<(u64, u64)> = (0..sim.partitions()).map(|i| (i, sim.run_partition(i))).collect();
        counts.reverse();
        let merged = sim.finish(counts.into_iter().map(|(_, e)| e));
        assert_eq!(serial, merged);
        assert_eq!(serial, estimate_outage(&c, &p, User::U2, model, 30_011, 81).unwrap());
    }
}

#[test]
fn estimate_interval_invariants() {
    for (events, trials) in [(0u64, 10_000u64), (1, 10_000), (5_000, 10_000), (10_000, 10_000)] {
        let e = McEstimate::from_counts(events, trials, 0);
        assert!(e.ci_low <= e.estimate && e.estimate <= e.ci_high);
        assert!((0.0..=1.0).contains(&e.ci_low) && (0.0..=1.0).contains(&e.ci_high));
        let p = e.estimate;
        assert_eq!(e.standard_error, (p * (1.0 - p) / trials as f64).sqrt());
    }
}
