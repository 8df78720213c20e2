//! Acceptance report: one PASS/FAIL line per criterion and a closing tally.
//! The report always exits successfully; read the lines, not the status.
//!
//! Criteria that need the public respiratory-motion recordings read an
//! experiment config from `$RESPCAST_DATA_DIR/respcast.toml` and report
//! NOT RUN when the variable is unset.

mod common;

use std::path::PathBuf;
use std::time::Instant;

use rand::Rng;
use respcast::harness::{
    cross_validate, evaluate, sweep, time_profile, Algorithm, CellKey, ExperimentConfig, Preset,
    ProfileSpec, ResultRow, SamplingRate,
};
use respcast::metrics::compute_metrics;

#[derive(Default)]
struct Report {
    passed: usize,
    failed: usize,
    not_run: usize,
}

impl Report {
    fn check(&mut self, name: &str, ok: bool, detail: String) {
        if ok {
            self.passed += 1;
        } else {
            self.failed += 1;
        }
        println!("{} {name}: {detail}", if ok { "PASS" } else { "FAIL" });
    }

    fn not_run(&mut self, name: &str, why: &str) {
        self.not_run += 1;
        println!("NOT RUN {name}: {why}");
    }
}

fn rtrl_exactness(r: &mut Report) {
    let mut worst = 0.0f64;
    let mut k = 0u64;
    'outer: for q in [2, 3, 5] {
        for m in [3, 6] {
            for steps in [4, 8] {
                for _ in 0..5 {
                    if k == 50 {
                        break 'outer;
                    }
                    worst = worst.max(common::rtrl_fd_error(q, m, steps, 100 + k));
                    k += 1;
                }
            }
        }
    }
    r.check(
        "rtrl-finite-differences",
        worst < 1e-5,
        format!("max relative error {worst:.2e} over {k} instances (< 1e-5)"),
    );
}

fn snap1_checks(r: &mut Report) {
    let dev = (0..5).map(|s| common::snap1_vs_rtrl_q1(200, s)).fold(0.0, f64::max);
    r.check(
        "snap1-equals-rtrl-single-unit",
        dev < 1e-12,
        format!("max weight deviation {dev:.2e} over 200 steps (< 1e-12)"),
    );
    let dev = [2, 4]
        .iter()
        .flat_map(|&q| (0..3).map(move |s| common::snap1_vs_sparse_oracle(q, 100, s)))
        .fold(0.0, f64::max);
    r.check(
        "snap1-equals-sparse-recursion",
        dev < 1e-12,
        format!("max weight deviation {dev:.2e} at q in {{2, 4}} (< 1e-12)"),
    );
}

fn uoro_unbiased(r: &mut Report) {
    let (mut bad, mut total) = (0, 0);
    for i in 0..10u64 {
        let q = 2 + (i % 2) as usize;
        let m = 1 + (i % 3) as usize;
        let (b, n) = common::uoro_bias_violations(q, m, 4, 20_000, i + 1);
        bad += b;
        total += n;
    }
    r.check(
        "uoro-unbiased",
        bad == 0,
        format!(
            "{bad} of {total} entries beyond 3 standard errors (20000 draws, 10 instances; \
             about {:.1} expected by chance alone)",
            total as f64 * 0.0027
        ),
    );
}

fn dni_checks(r: &mut Report) {
    let worst = (0..50u64)
        .map(|s| common::dni_fd_error(2 + (s % 5) as usize, 1 + (s % 3) as usize, s))
        .fold(0.0, f64::max);
    let same = (0..10).map(|s| common::dni_rules_agree_without_dynamics(4, 2, s)).fold(0.0, f64::max);
    r.check(
        "dni-coefficient-gradient",
        worst < 1e-6 && same == 0.0,
        format!("max relative error {worst:.2e} (< 1e-6); rule gap without dynamics {same:e}"),
    );
}

fn metrics_sanity(r: &mut Report) {
    let mut rng = common::rng(77);
    let mut random_rows = |n: usize, w: usize| -> Vec<Vec<f64>> {
        (0..n).map(|_| (0..w).map(|_| rng.random_range(-20.0..20.0)).collect()).collect()
    };
    let truth = random_rows(40, 9);
    let perfect = compute_metrics(&truth, &truth).unwrap();
    let zero = perfect.mae == 0.0 && perfect.rmse == 0.0 && perfect.nrmse == 0.0 && perfect.max_error == 0.0;

    let mut mean = vec![0.0; 9];
    for row in &truth {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v / truth.len() as f64;
        }
    }
    let flat = compute_metrics(&vec![mean; truth.len()], &truth).unwrap();
    let unit = (flat.nrmse - 1.0).abs() <= 1e-9;

    let mut dominated = 0;
    for _ in 0..1000 {
        let t = random_rows(12, 6);
        let p = random_rows(12, 6);
        let m = compute_metrics(&p, &t).unwrap();
        if m.rmse >= m.mae - 1e-12 {
            dominated += 1;
        }
    }
    let clip = (0..3).map(common::worst_clip_ratio).fold(0.0, f64::max);
    r.check(
        "metrics-sanity",
        zero && unit && dominated == 1000 && clip <= 1.0 + 1e-12,
        format!(
            "perfect all zero: {zero}; mean predictor nRMSE {:.12}; RMSE >= MAE in {dominated}/1000; \
             max step/tau {clip:.12}",
            flat.nrmse
        ),
    );
}

fn synthetic_learning(r: &mut Report) {
    let seq = common::sinusoid_mixture(2, 90.0, 10.0);
    let rate = SamplingRate::Hz10;
    let steps = rate.steps(0.5).unwrap();
    let fixed = Preset::Desk.fixed();
    for algo in [Algorithm::Uoro, Algorithm::Snap1, Algorithm::Dni] {
        let start = Instant::now();
        let key = CellKey::new(2024, algo, rate, steps);
        let result = cross_validate(&seq, &Preset::Desk.grid(algo, rate), &fixed, rate, key)
            .and_then(|cv| evaluate(&seq, algo, &cv.best, &fixed, rate, key).map(|m| (cv.best, m)));
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok((best, m)) => r.check(
                &format!("synthetic-learning-{algo}"),
                m.nrmse.mean < 0.2 && secs < 300.0,
                format!("test nRMSE {:.4} (< 0.2) with {best}, {secs:.1} s (< 300 s)", m.nrmse.mean),
            ),
            Err(e) => r.check(&format!("synthetic-learning-{algo}"), false, e.to_string()),
        }
    }
}

fn profile(algo: Algorithm, hidden: Vec<usize>) -> Vec<(usize, f64)> {
    let spec = ProfileSpec {
        algorithm: algo,
        hidden,
        shls: vec![1.2],
        rate: SamplingRate::Hz30,
        steps: 1000,
        n_markers: 3,
        seed: 1,
    };
    time_profile(&spec)
        .unwrap()
        .into_iter()
        .map(|c| (c.hidden.unwrap(), c.median_ms))
        .collect()
}

fn loglog_slope(points: &[(usize, f64)]) -> f64 {
    let xs: Vec<f64> = points.iter().map(|p| (p.0 as f64).ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let cov: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let var: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    cov / var
}

fn complexity(r: &mut Report) {
    let rtrl = profile(Algorithm::Rtrl, vec![40])[0].1;
    let dni = profile(Algorithm::Dni, vec![180])[0].1;
    r.check(
        "complexity-rtrl-vs-dni",
        rtrl > 3.0 * dni,
        format!("RTRL q=40 {rtrl:.3} ms/step vs DNI q=180 {dni:.3} ms/step (ratio {:.1}, > 3)", rtrl / dni),
    );
    let qs = vec![30, 60, 90, 120, 180];
    let slopes: Vec<(Algorithm, f64)> = [Algorithm::Snap1, Algorithm::Dni, Algorithm::Uoro]
        .into_iter()
        .map(|a| (a, loglog_slope(&profile(a, qs.clone()))))
        .collect();
    let detail = slopes
        .iter()
        .map(|(a, s)| format!("{a} {s:.2}"))
        .collect::<Vec<_>>()
        .join(", ");
    r.check(
        "complexity-scaling-in-hidden-size",
        slopes.iter().all(|(_, s)| *s <= 2.3),
        format!("log-log slopes {detail} (<= 2.3)"),
    );
}

fn mean_of(rows: &[ResultRow], algo: Algorithm, rate: SamplingRate, pick: fn(&ResultRow) -> Option<f64>) -> Option<f64> {
    let vals: Vec<f64> = rows
        .iter()
        .filter(|r| r.algorithm == algo.name() && r.rate_hz == rate.label())
        .map(pick)
        .collect::<Option<_>>()?;
    (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
}

fn full_data(r: &mut Report) {
    const NAMES: [&str; 3] = ["full-data-table3-nrmse", "full-data-linreg-short-horizon", "full-data-dni-ablation"];
    let Some(dir) = std::env::var_os("RESPCAST_DATA_DIR").map(PathBuf::from) else {
        for n in NAMES {
            r.not_run(n, "RESPCAST_DATA_DIR is not set");
        }
        return;
    };
    let cfg = match ExperimentConfig::load(dir.join("respcast.toml")) {
        Ok(c) => c,
        Err(e) => {
            for n in NAMES {
                r.check(n, false, format!("cannot read the dataset config: {e}"));
            }
            return;
        }
    };
    let base = match cfg.to_sweep_spec() {
        Ok(mut s) => {
            s.preset = Preset::Paper;
            s.fixed = Preset::Paper.fixed();
            s.grids.clear();
            s.horizons = None;
            s
        }
        Err(e) => {
            for n in NAMES {
                r.check(n, false, e.to_string());
            }
            return;
        }
    };
    let run = |algos: Vec<Algorithm>, rates: Vec<SamplingRate>, horizons: Option<Vec<f64>>| {
        let mut s = base.clone();
        s.algorithms = algos;
        s.rates = rates;
        s.horizons = horizons;
        sweep(&s).unwrap_or_default()
    };

    let nrmse = |r: &ResultRow| r.nrmse;
    let rmse = |r: &ResultRow| r.rmse;
    let rows = run(
        vec![Algorithm::Snap1, Algorithm::Uoro, Algorithm::Dni, Algorithm::DniSimplified],
        SamplingRate::ALL.to_vec(),
        None,
    );
    let targets = [
        (Algorithm::Snap1, SamplingRate::Hz3, 0.335, 0.03),
        (Algorithm::Snap1, SamplingRate::Hz10, 0.157, 0.02),
        (Algorithm::Uoro, SamplingRate::Hz30, 0.086, 0.015),
    ];
    let mut ok = true;
    let mut parts = Vec::new();
    for (algo, rate, want, tol) in targets {
        match mean_of(&rows, algo, rate, nrmse) {
            Some(v) => {
                ok &= (v - want).abs() <= tol;
                parts.push(format!("{algo} {rate} Hz {v:.4} (target {want} +- {tol})"));
            }
            None => {
                ok = false;
                parts.push(format!("{algo} {rate} Hz has failed cells"));
            }
        }
    }
    r.check(NAMES[0], ok, parts.join("; "));

    let lin = run(vec![Algorithm::LinearRegression], vec![SamplingRate::Hz10], Some(vec![0.1]));
    match (
        mean_of(&lin, Algorithm::LinearRegression, SamplingRate::Hz10, nrmse),
        mean_of(&lin, Algorithm::LinearRegression, SamplingRate::Hz10, rmse),
    ) {
        (Some(n), Some(e)) => r.check(
            NAMES[1],
            (n - 0.098).abs() <= 0.01 && (e - 0.442).abs() <= 0.05,
            format!("nRMSE {n:.4} (0.098 +- 0.01), RMSE {e:.4} mm (0.442 +- 0.05)"),
        ),
        _ => r.check(NAMES[1], false, "failed cells".into()),
    }

    let mut ok = true;
    let mut parts = Vec::new();
    for rate in [SamplingRate::Hz3, SamplingRate::Hz10] {
        match (
            mean_of(&rows, Algorithm::Dni, rate, rmse),
            mean_of(&rows, Algorithm::DniSimplified, rate, rmse),
        ) {
            (Some(full), Some(simple)) => {
                ok &= full < simple;
                parts.push(format!("{rate} Hz full {full:.4} vs simplified {simple:.4}"));
            }
            _ => {
                ok = false;
                parts.push(format!("{rate} Hz has failed cells"));
            }
        }
    }
    r.check(NAMES[2], ok, parts.join("; "));
}

fn main() {
    let mut r = Report::default();
    rtrl_exactness(&mut r);
    snap1_checks(&mut r);
    uoro_unbiased(&mut r);
    dni_checks(&mut r);
    metrics_sanity(&mut r);
    synthetic_learning(&mut r);
    complexity(&mut r);
    full_data(&mut r);
    println!("{} passed, {} failed, {} not run", r.passed, r.failed, r.not_run);
}
