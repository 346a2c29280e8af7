//! Acceptance report: one PASS/FAIL line per criterion. Exits nonzero when
//! any criterion fails.

use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use fasnoma::recipes::Recipe;
use fasnoma::sweep::run_sweep;
use fasnoma::validate::{check_marginal, check_mvn, check_orthant, compare_outage, Hooks};
use fasnoma::RunConfig;
use fasnoma_core::channel::{db_to_linear, SystemParams};
use fasnoma_core::mvncdf::MvnOptions;
use fasnoma_core::outage::evaluate;
use fasnoma_core::portgrid::PortGrid;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn timed(limit: Option<Duration>, f: impl FnOnce() -> Outcome) -> (Outcome, Duration, bool) {
    let t = Instant::now();
    let o = f();
    let el = t.elapsed();
    (o, el, limit.is_none_or(|l| el <= l))
}

fn marginal() -> Outcome {
    let c = check_marginal(10_000_000, 101, Hooks::default().bessel_k1);
    outcome(c.passed, format!("max |z| = {:.3} over 20 quantiles ({})", c.statistic, c.detail))
}

fn mvn() -> Outcome {
    let bf = check_mvn(25, 1_000_000, 102);
    let orth = check_orthant();
    outcome(
        bf.passed && orth.passed,
        format!(
            "max |qmc - mc| / 3(se + err) = {:.3} ({}); |orthant - 1/3| = {:.2e}",
            bf.statistic, bf.detail, orth.statistic
        ),
    )
}

fn outage_vs_mc() -> Outcome {
    let mut total = 0usize;
    let mut ok = 0usize;
    let mut worst: f64 = 0.0;
    for seed in 103..106 {
        let rows = compare_outage(&[1, 2, 5], &[45.0, 55.0, 60.0], 10_000_000, 1e-4, seed).expect("comparison runs");
        for r in &rows {
            let z = r.z();
            total += 1;
            ok += usize::from(z <= 3.0);
            worst = worst.max(z);
        }
    }
    let rate = ok as f64 / total as f64;
    outcome(
        total > 0 && rate >= 0.95,
        format!("{ok}/{total} comparisons within 3(se + err) over 3 seeds, worst ratio {worst:.2}"),
    )
}

fn params(db: f64) -> SystemParams {
    SystemParams::reference(db_to_linear(db))
}

fn op_u1(side: usize, db: f64) -> f64 {
    let c = PortGrid::square(side, 1.0).unwrap().correlation_matrix().unwrap();
    evaluate(&c, &c, &params(db), &MvnOptions::default(), 7).unwrap().result().op_u1
}

fn headline_points() -> Outcome {
    let n4 = op_u1(2, 60.0);
    let n1 = op_u1(1, 60.0);
    let within = |v: f64, target: f64| v >= target / 3.0 && v <= target * 3.0;
    outcome(within(n4, 1e-3) && within(n1, 1e-1), format!("N=4: {n4:.3e}, N=1: {n1:.3e}"))
}

fn asymptotic_gap() -> Outcome {
    let c = PortGrid::square(1, 1.0).unwrap().correlation_matrix().unwrap();
    let mut gaps = [Vec::new(), Vec::new()];
    for db in [50.0, 60.0, 70.0, 80.0] {
        let r = evaluate(&c, &c, &params(db), &MvnOptions::default(), 7).unwrap().result();
        gaps[0].push(((r.op_u1_asymptotic - r.op_u1) / r.op_u1).abs());
        gaps[1].push(((r.op_u2_asymptotic - r.op_u2) / r.op_u2).abs());
    }
    let good = |g: &[f64]| g.windows(2).all(|w| w[1] < w[0]) && g[3] <= 0.02;
    let fmt = |g: &[f64]| g.iter().map(|v| format!("{v:.2e}")).collect::<Vec<_>>().join(" ");
    outcome(good(&gaps[0]) && good(&gaps[1]), format!("u1 gaps [{}], u2 gaps [{}]", fmt(&gaps[0]), fmt(&gaps[1])))
}

/// Exact-OP columns of one table row.
#[derive(Debug, Clone)]
struct Row {
    curve: String,
    x: f64,
    op: [f64; 2],
    err: [f64; 2],
}

fn parse_records(records: &[Vec<String>]) -> Vec<Row> {
    let f = |s: &str| s.parse::<f64>().unwrap();
    records
        .iter()
        .map(|r| Row {
            curve: r[0].clone(),
            x: f(&r[1]),
            op: [f(&r[2]), f(&r[3])],
            err: [f(&r[6]), f(&r[7])],
        })
        .collect()
}

fn recipe_rows(recipe: Recipe) -> Vec<Row> {
    let spec = recipe.spec(Some(0)).unwrap();
    parse_records(&run_sweep(&spec).unwrap().records())
}

/// `later <= earlier` up to three integration errors of each.
fn not_above(earlier: &Row, later: &Row, u: usize) -> bool {
    later.op[u] <= earlier.op[u] + 3.0 * (earlier.err[u] + later.err[u]) + 1e-12 * earlier.op[u]
}

fn curve<'a>(rows: &'a [Row], label: &str) -> Vec<&'a Row> {
    rows.iter().filter(|r| r.curve == label).collect()
}

fn monotone(seq: &[&Row], what: &str, failures: &mut Vec<String>) {
    for u in 0..2 {
        for w in seq.windows(2) {
            if !not_above(w[0], w[1], u) {
                failures.push(format!("{what}: u{} rises {} -> {} at {} -> {}", u + 1, w[0].op[u], w[1].op[u], w[0].x, w[1].x));
            }
        }
    }
}

fn figure_trends(fig2a: &[Row]) -> Outcome {
    let mut failures = Vec::new();
    let fig2b = recipe_rows(Recipe::Fig2b);
    let fig3a = recipe_rows(Recipe::Fig3a);
    let fig3b = recipe_rows(Recipe::Fig3b);

    for (name, rows) in [("fig2a", fig2a), ("fig2b", &fig2b)] {
        let labels: Vec<&str> = {
            let mut l: Vec<&str> = rows.iter().map(|r| r.curve.as_str()).collect();
            l.dedup();
            l
        };
        for label in &labels {
            monotone(&curve(rows, label), &format!("{name} {label} in snr"), &mut failures);
        }
        // curves are listed from fewest ports (or smallest aperture) upwards
        let first = curve(rows, labels[0]);
        for (k, _) in first.iter().enumerate() {
            let across: Vec<&Row> = labels.iter().map(|l| curve(rows, l)[k]).collect();
            monotone(&across, &format!("{name} across curves at snr {}", first[k].x), &mut failures);
        }
    }

    let along_n = curve(&fig3a, "W=1");
    monotone(&along_n, "fig3a in N", &mut failures);
    let mut saturation = String::new();
    for u in 0..2 {
        let first = (along_n[0].op[u] / along_n[1].op[u]).ln();
        let k = along_n.len();
        let last = (along_n[k - 2].op[u] / along_n[k - 1].op[u]).ln();
        saturation.push_str(&format!(" u{} first {first:.3} last {last:.3};", u + 1));
        if !(last < first) {
            failures.push(format!("fig3a u{} log-OP decrement does not shrink", u + 1));
        }
    }
    monotone(&curve(&fig3b, "N=25"), "fig3b N=25 in W", &mut failures);

    let mut pairs = 0;
    for r in fig2a.iter().chain(&fig2b).chain(&fig3a).chain(&fig3b) {
        pairs += 1;
        if r.op[1] + 3.0 * (r.err[0] + r.err[1]) < r.op[0] {
            failures.push(format!("{} at {}: u2 {} below u1 {}", r.curve, r.x, r.op[1], r.op[0]));
        }
    }

    let spec = RunConfig::from_toml_str(
        "[system]\nthr_sic_db = 6.0\nthr_u2_db = 6.0\n[sweep]\nvariable = \"snrDb\"\nvalues = [30, 50, 70]\n",
    )
    .unwrap();
    let infeasible = parse_records(&run_sweep(&spec).unwrap().records());
    if !infeasible.iter().all(|r| r.op == [1.0, 1.0]) {
        failures.push("infeasible split did not give OP = 1".into());
    }

    let detail = if failures.is_empty() {
        format!("snr, N and W monotone; u2 >= u1 on {pairs} rows; infeasible rows exactly 1;{saturation}")
    } else {
        failures.join("; ")
    };
    outcome(failures.is_empty(), detail)
}

fn fig2a_bytes() -> Vec<u8> {
    let out = Command::new(env!("CARGO_BIN_EXE_fasnoma"))
        .args(["recipe", "fig2a", "--mc-trials", "0"])
        .output()
        .expect("binary runs");
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    out.stdout
}

fn main() -> ExitCode {
    let mut all = true;
    let mut report = |id: u32, name: &str, limit: Option<Duration>, f: &mut dyn FnMut() -> Outcome| {
        let (o, el, in_time) = timed(limit, f);
        let passed = o.passed && in_time;
        all &= passed;
        let budget = limit.map_or(String::new(), |l| format!(" / {} s", l.as_secs()));
        let late = if in_time { "" } else { " (over time budget)" };
        println!(
            "{} {id} {name}: {} [{:.1} s{budget}]{late}",
            if passed { "PASS" } else { "FAIL" },
            o.detail,
            el.as_secs_f64()
        );
    };

    report(1, "marginal cdf vs sampled products", Some(Duration::from_secs(30)), &mut marginal);
    report(2, "mvn integrator vs brute force", Some(Duration::from_secs(120)), &mut mvn);
    report(3, "analytic outage vs copula simulation", Some(Duration::from_secs(300)), &mut outage_vs_mc);
    report(4, "reference outage levels at 60 dB", None, &mut headline_points);
    report(5, "asymptotic gap for a single port", None, &mut asymptotic_gap);

    let started = Instant::now();
    let first = fig2a_bytes();
    let second = fig2a_bytes();
    let twice = started.elapsed();
    let text = String::from_utf8(first.clone()).expect("utf-8 csv");
    let mut rd = csv::Reader::from_reader(text.as_bytes());
    let records: Vec<Vec<String>> =
        rd.records().map(|r| r.expect("csv parses").iter().map(str::to_string).collect()).collect();
    let fig2a = parse_records(&records);
    report(6, "figure trends", None, &mut || figure_trends(&fig2a));
    report(7, "recipe fig2a is byte-identical across runs", None, &mut || {
        outcome(
            first == second && !first.is_empty(),
            format!("{} bytes, two runs in {:.1} s", first.len(), twice.as_secs_f64()),
        )
    });

    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
