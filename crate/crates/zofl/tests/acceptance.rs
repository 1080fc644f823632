// Acceptance criteria, run in order by a plain `main`. Each prints one
// `criterion N: PASS|FAIL` line; any failure makes the binary exit nonzero.
// Extra arguments filter criteria by name, as with the default harness.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use zofl::cli::{
    bias_slope, cmd_params, cmd_run, cmd_sweep_k, saddle_constants, sandwich, second_moment, unbiasedness, ExperimentConfig, BIAS_LEVELS,
};
use zofl::estimators::Feedback;
use zofl::planner::{sigma_sq_bound, FedPlan};
use zofl::problems::{make_bilinear_game, Matrix};
use zofl::vecspace::Lp;

fn report(n: u32, pass: bool, detail: &str) {
    println!("criterion {n}: {} {detail}", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "criterion {n} failed: {detail}");
}

fn within(start: Instant, budget: Duration) -> bool {
    start.elapsed() <= budget
}

fn criterion_1_unbiasedness() {
    let start = Instant::now();
    let mut worst = 0.0f64;
    let mut all = true;
    for scheme in [Lp::L1, Lp::L2] {
        for feedback in [Feedback::TwoPoint, Feedback::OnePoint] {
            let c = unbiasedness(scheme, feedback, 50, 100_000, 2024).unwrap();
            println!("  {}", c.line());
            worst = worst.max(c.measured);
            all &= c.pass;
        }
    }
    let fast = within(start, Duration::from_secs(30));
    report(1, all && fast, &format!("worst deviation {worst:.2} SE (limit 3), {:.1?}", start.elapsed()));
}

fn criterion_2_smoothing_sandwich() {
    let start = Instant::now();
    let mut all = true;
    for scheme in [Lp::L1, Lp::L2] {
        let c = sandwich(scheme, 100, 20, 100_000, 2024).unwrap();
        println!("  {}", c.line());
        all &= c.pass;
    }
    let fast = within(start, Duration::from_secs(120));
    report(2, all && fast, &format!("20 points per scheme, {:.1?}", start.elapsed()));
}

fn criterion_3_second_moment() {
    let mut passed = 0;
    for scheme in [Lp::L1, Lp::L2] {
        for feedback in [Feedback::TwoPoint, Feedback::OnePoint] {
            for d in [10, 100] {
                for frac in [0.0, 0.5] {
                    let c = second_moment(scheme, feedback, d, frac, 100_000, 2024).unwrap();
                    println!("  {}", c.line());
                    passed += c.pass as usize;
                }
            }
        }
    }
    report(3, passed == 16, &format!("{passed}/16 cells within the bound"));
}

fn criterion_4_bias_scaling() {
    let mut all = true;
    let mut detail = Vec::new();
    for scheme in [Lp::L1, Lp::L2] {
        let (slope, scale) = bias_slope(scheme, 50, 0.01, &BIAS_LEVELS, 20_000, 2024).unwrap();
        let ratio = slope / scale;
        all &= ratio > 1.0 / 3.0 && ratio < 3.0;
        detail.push(format!("{scheme:?} slope/reference {ratio:.3}"));
    }
    report(4, all, &detail.join(", "));
}

fn params(json: &str) -> FedPlan {
    let mut plans = cmd_params(&ExperimentConfig::from_json(json).unwrap()).unwrap();
    assert_eq!(plans.len(), 1);
    plans.remove(0)
}

fn close(a: f64, b: f64) -> bool {
    ((a - b) / b).abs() <= 1e-9
}

fn criterion_5_planner_spot_values() {
    let base = |scheme: &str, feedback: &str, c: &str| {
        format!(r#"{{"algorithm": "mb_asgd", "scheme": "{scheme}", "feedback": "{feedback}", "constants": {c}}}"#)
    };
    let s2 = 2f64.sqrt();
    let mut checks: Vec<(&str, f64, f64)> = Vec::new();

    let p = params(&base("L1", "two_point", r#"{"d": 100, "m": 1, "m2": 1, "r": 1, "eps": 0.1, "p": "L1"}"#));
    checks.push(("kappa(p=1,d=100,l1,two)", p.kappa, 48.0 * (1.0 + s2).powi(2)));
    checks.push(("sigma_sq(l1,two,p=1,M2=1)", p.sigma_sq, 48.0 * (1.0 + s2).powi(2)));
    let p = params(&base("L2", "two_point", r#"{"d": 100, "m": 1, "m2": 1, "r": 1, "eps": 0.1, "p": "L1"}"#));
    checks.push(("kappa(p=1,d=100,l2,two)", p.kappa, s2 * 100f64.ln()));
    let p = params(&base("L2", "one_point", r#"{"d": 100, "m": 1, "m2": 1, "g": 1, "r": 1, "eps": 0.1, "p": "L2"}"#));
    checks.push(("kappa(p=2,d=100,l2,one)", p.kappa, 2.0e4));

    let l2 = params(&base("L2", "two_point", r#"{"d": 100, "m": 2, "m2": 2, "r": 1, "eps": 0.1}"#));
    let l1 = params(&base("L1", "two_point", r#"{"d": 100, "m": 2, "m2": 2, "r": 1, "eps": 0.1}"#));
    checks.push(("gamma(l2,eps=0.1,M2=2)", l2.gamma, 0.025));
    checks.push(("gamma(l1,d=100,eps=0.1,M2=2)", l1.gamma, 0.125));
    checks.push(("L(l2)", l2.l_f_gamma, 800.0));
    checks.push(("L(l1)", l1.l_f_gamma, 800.0));

    let p = params(&base("L2", "two_point", r#"{"d": 100, "m": 1, "m2": 1, "r": 1, "eps": 0.1}"#));
    checks.push(("sigma_sq(l2,two,p=2,d=100)", p.sigma_sq, 2.0 * s2 * 2.0 * 100.0));
    checks.push(("delta_max(l2,mb_asgd)", p.delta_max, 0.01 / 120.0));
    checks.push(("n(l2,mb_asgd)", p.n as f64, 220.0));
    let p = params(&base("L1", "two_point", r#"{"d": 100, "m": 1, "m2": 1, "r": 1, "eps": 0.1}"#));
    checks.push(("delta_max(l1,mb_asgd)", p.delta_max, 0.01 / 240.0));
    let p = params(&base("L1", "one_point", r#"{"d": 10, "m": 1, "m2": 1, "g": 1, "r": 1, "eps": 0.1, "p": "L1"}"#));
    checks.push(("sigma_sq(l1,one,p=1,d=10)", p.sigma_sq, 3.2e4));

    let mut bad = Vec::new();
    for (name, got, want) in &checks {
        let ok = close(*got, *want);
        println!("  {} {name}: {got:.12e} vs {want:.12e}", if ok { "ok " } else { "BAD" });
        if !ok {
            bad.push(*name);
        }
    }
    report(5, bad.is_empty(), &format!("{} spot values, mismatches: {bad:?}", checks.len()));
}

fn spearman(x: &[f64], y: &[f64]) -> f64 {
    let rank = |v: &[f64]| {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
        let mut r = vec![0.0; v.len()];
        for (pos, &i) in idx.iter().enumerate() {
            r[i] = pos as f64;
        }
        r
    };
    let (rx, ry) = (rank(x), rank(y));
    let n = x.len() as f64;
    let m = (n - 1.0) / 2.0;
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - m) * (b - m)).sum();
    let var: f64 = rx.iter().map(|a| (a - m).powi(2)).sum();
    cov / var
}

const SIMPLEX_RUN: &str = r#""problem": {"kind": "simplex_test", "d": 100, "seed": 0},
    "algorithm": "mb_asgd", "scheme": ["L1", "L2"], "constants": {"eps": 0.01},
    "smoothness": 100, "sigma": "measured", "repeat": 20"#;

fn criterion_6_local_calls_sweep() {
    let start = Instant::now();
    let ks: Vec<u64> = (0..=8).map(|i| 3u64.pow(i)).collect();
    let cfg = ExperimentConfig::from_json(&format!(r#"{{{SIMPLEX_RUN}, "sweep": {{"budget": 6561, "b": 8, "k": {ks:?}}}}}"#)).unwrap();
    let rows = cmd_sweep_k(&cfg, None).unwrap();
    let mut all = true;
    let mut detail = Vec::new();
    for scheme in ["l1", "l2"] {
        let r: Vec<_> = rows.iter().filter(|r| r.scheme == scheme).collect();
        assert_eq!(r.len(), 9);
        for row in &r {
            println!("  {scheme} K={:<5} N={:<5} error {:.5} (se {:.1e})", row.k, row.n, row.mean_err, row.se);
        }
        let rho = spearman(&r.iter().map(|r| r.k as f64).collect::<Vec<_>>(), &r.iter().map(|r| r.mean_err).collect::<Vec<_>>());
        let (first, last) = (r[0], r[8]);
        let pooled = first.se.hypot(last.se);
        let gap = (last.mean_err - first.mean_err) / pooled;
        all &= rho > 0.5 && gap > 2.0;
        detail.push(format!("{scheme}: spearman {rho:.3}, K=6561 minus K=1 is {gap:.1} pooled SE"));
    }
    let fast = within(start, Duration::from_secs(1800));
    report(6, all && fast, &format!("{}, {:.1?}", detail.join("; "), start.elapsed()));
}

fn criterion_7_noise_raises_error() {
    let run = |level: f64| {
        let cfg = ExperimentConfig::from_json(&format!(
            r#"{{{SIMPLEX_RUN}, "topology": {{"b": 8, "k": 9, "n": 729}},
                "noise": {{"kind": "uniform", "level": {level}}}}}"#
        ))
        .unwrap();
        cmd_run(&cfg, None).unwrap()
    };
    let clean = run(0.0);
    let noisy = run(6e-5);
    let mut all = true;
    let mut detail = Vec::new();
    for (a, b) in clean.schemes.iter().zip(&noisy.schemes) {
        assert_eq!(a.scheme, b.scheme);
        all &= b.mean_error > a.mean_error;
        detail.push(format!("{:?}: {:.5} -> {:.5}", a.scheme, a.mean_error, b.mean_error));
    }
    let comparison = noisy.comparison.clone().unwrap_or_default();
    println!("  under noise: {comparison}");
    report(7, all, &detail.join(", "));
}

const GAME: &str = r#""problem": {"kind": "bilinear_game", "a": [[0, 1], [1, 0]]},
    "start": [1, 0, 1, 0], "constants": {"r": 1, "eps": 0.1}, "scheme": "L2""#;

fn criterion_8_mirror_prox_bounds() {
    let exact = ExperimentConfig::from_json(&format!(
        r#"{{{GAME}, "algorithm": "mb_smp", "operator": "exact", "topology": {{"b": 1, "k": 1, "n": 1000}}}}"#
    ))
    .unwrap();
    let gap_exact = cmd_run(&exact, None).unwrap().schemes[0].mean_error;
    let bound_exact = 2.0 * 1.75 * 1.0 * 1.0 / 1000.0;

    let noisy = ExperimentConfig::from_json(&format!(
        r#"{{{GAME}, "algorithm": "sm_smp", "topology": {{"b": 1, "k": 100, "n": 100}}, "repeat": 20}}"#
    ))
    .unwrap();
    let game = make_bilinear_game(Matrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap());
    let (cx, cy) = saddle_constants(&game, &noisy.constants).unwrap();
    let sigma =
        (sigma_sq_bound(&cx, Lp::L2, Feedback::TwoPoint).unwrap() + sigma_sq_bound(&cy, Lp::L2, Feedback::TwoPoint).unwrap()).sqrt();
    let gap_est = cmd_run(&noisy, None).unwrap().schemes[0].mean_error;
    let bound_est = 2.0 * 7.0 * sigma * 1.0 / 1e4f64.sqrt();

    report(
        8,
        gap_exact <= bound_exact && gap_est <= bound_est,
        &format!(
            "exact gap {gap_exact:.3e} <= {bound_exact:.3e}; two-point mean gap over 20 seeds {gap_est:.3e} <= {bound_est:.3e} (sigma_est {sigma:.3})"
        ),
    );
}

fn criterion_9_determinism_and_accounting() {
    let dir = tempfile::tempdir().unwrap();
    let min = r#""problem": {"kind": "simplex_test", "d": 20, "seed": 1}, "constants": {"eps": 0.05, "g": 1}, "smoothness": 50"#;
    let game = r#""problem": {"kind": "bilinear_game", "a": [[0, 1], [1, 0]]}, "constants": {"r": 1, "eps": 0.1, "g": 1}"#;
    let mut configs = Vec::new();
    for scheme in ["L1", "L2"] {
        for feedback in ["two_point", "one_point"] {
            configs.push((format!(r#"{min}, "algorithm": "mb_asgd", "topology": {{"b": 3, "k": 4, "n": 5}}"#), scheme, feedback, 1u64));
            configs.push((format!(r#"{min}, "algorithm": "sm_asgd", "topology": {{"b": 1, "k": 4, "n": 5}}"#), scheme, feedback, 1));
        }
    }
    for feedback in ["two_point", "one_point"] {
        // Each mirror prox iteration queries the operator at two points.
        configs.push((format!(r#"{game}, "algorithm": "mb_smp", "topology": {{"b": 3, "k": 4, "n": 5}}"#), "L2", feedback, 2));
        configs.push((format!(r#"{game}, "algorithm": "sm_smp", "topology": {{"b": 1, "k": 4, "n": 5}}"#), "L1", feedback, 2));
    }
    assert_eq!(configs.len(), 12);

    let mut failures = Vec::new();
    for (i, (body, scheme, feedback, points)) in configs.iter().enumerate() {
        let cfg =
            ExperimentConfig::from_json(&format!(r#"{{{body}, "scheme": "{scheme}", "feedback": "{feedback}", "seed": 77}}"#)).unwrap();
        let t = cfg.topology.unwrap();
        let mult = if *feedback == "two_point" { 2 } else { 1 };
        let expected = t.n * t.k * t.b * mult * points;
        let (a, b) = (dir.path().join(format!("{i}a")), dir.path().join(format!("{i}b")));
        let first = cmd_run(&cfg, Some(&a)).unwrap();
        cmd_run(&cfg, Some(&b)).unwrap();
        let name = format!("trace_{}_77.csv", scheme.to_lowercase());
        let same = std::fs::read(a.join(&name)).unwrap() == std::fs::read(b.join(&name)).unwrap();
        let calls = first.runs[0].calls;
        if !same || calls != expected {
            failures.push(format!("config {i}: identical={same} calls={calls} expected={expected}"));
        }
    }
    report(9, failures.is_empty(), &format!("12 configurations, failures: {failures:?}"));
}

fn main() {
    let criteria: [(&str, fn()); 9] = [
        ("criterion_1_unbiasedness", criterion_1_unbiasedness),
        ("criterion_2_smoothing_sandwich", criterion_2_smoothing_sandwich),
        ("criterion_3_second_moment", criterion_3_second_moment),
        ("criterion_4_bias_scaling", criterion_4_bias_scaling),
        ("criterion_5_planner_spot_values", criterion_5_planner_spot_values),
        ("criterion_6_local_calls_sweep", criterion_6_local_calls_sweep),
        ("criterion_7_noise_raises_error", criterion_7_noise_raises_error),
        ("criterion_8_mirror_prox_bounds", criterion_8_mirror_prox_bounds),
        ("criterion_9_determinism_and_accounting", criterion_9_determinism_and_accounting),
    ];
    let filters: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = Vec::new();
    let mut ran = 0;
    for (name, f) in criteria {
        if !filters.is_empty() && !filters.iter().any(|p| name.contains(p.as_str())) {
            continue;
        }
        ran += 1;
        if catch_unwind(AssertUnwindSafe(f)).is_err() {
            failed.push(name);
        }
    }
    println!("acceptance: {ran} run, {} failed {failed:?}", failed.len());
    if !failed.is_empty() {
        std::process::exit(1);
    }
}
