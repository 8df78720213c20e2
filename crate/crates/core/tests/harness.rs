mod common;

use respcast::data::{MarkerSequence, Regularity};
use respcast::harness::{
    cross_validate, run_trace, sweep, write_results, Algorithm, CellKey, FixedParams, GridSpec,
    HyperParams, Phase, Preset, RunSpec, SamplingRate, SequenceEntry, SweepSpec,
};

fn tampered_after(seq: &MarkerSequence, seconds: f64) -> MarkerSequence {
    let cut = (seconds * seq.sample_rate_hz()).round() as usize;
    let rows: Vec<Vec<f64>> = seq
        .rows()
        .enumerate()
        .map(|(k, r)| {
            if k < cut {
                r.to_vec()
            } else {
                r.iter().map(|v| v * -3.0 + 1e3).collect()
            }
        })
        .collect();
    MarkerSequence::from_rows(seq.sample_rate_hz(), seq.n_markers(), &rows, seq.label()).unwrap()
}

fn small_fixed() -> FixedParams {
    FixedParams {
        n_cv: 2,
        n_test: 2,
        ..Preset::Desk.fixed()
    }
}

#[test]
fn search_ignores_data_after_sixty_seconds() {
    let seq = common::sinusoid_mixture(2, 80.0, 10.0);
    let altered = tampered_after(&seq, 60.0);
    for algo in [Algorithm::Uoro, Algorithm::LinearRegression, Algorithm::Lms] {
        let mut grid = GridSpec::empty(algo, vec![0.6, 1.2]);
        if algo != Algorithm::LinearRegression {
            grid.etas = vec![0.01, 0.05];
        }
        if algo == Algorithm::Uoro {
            grid.hidden = vec![4];
        }
        let key = CellKey::new(9, algo, SamplingRate::Hz10, 3);
        let a = cross_validate(&seq, &grid, &small_fixed(), SamplingRate::Hz10, key).unwrap();
        let b = cross_validate(&altered, &grid, &small_fixed(), SamplingRate::Hz10, key).unwrap();
        assert_eq!(a, b, "{algo}");
    }
}

#[test]
fn test_scores_start_at_sixty_seconds() {
    let base = common::sinusoid_mixture(1, 75.0, 10.0);
    for rate in SamplingRate::ALL {
        let seq = rate.resample(&base, 0.0, 1).unwrap();
        for algo in [Algorithm::Snap1, Algorithm::LinearRegression] {
            let spec = RunSpec {
                algorithm: algo,
                params: HyperParams {
                    eta: (algo == Algorithm::Snap1).then_some(0.01),
                    hidden: (algo == Algorithm::Snap1).then_some(3),
                    ..HyperParams::with_shl(0.6)
                },
                fixed: small_fixed(),
                rate,
                horizon_steps: 2,
            };
            let trace = run_trace(&seq, &spec, Phase::Test, 4).unwrap();
            let first = trace.target_index[0] as f64 / rate.hz();
            assert!(first >= 60.0 - 1e-9, "{rate} {algo}: first scored target at {first} s");
            assert!((first - 60.0) * rate.hz() < 1.0);
            assert_eq!(*trace.target_index.last().unwrap(), seq.len() - 1);
        }
    }
}

#[test]
fn search_picks_the_history_that_realizes_the_signal() {
    // x[n] = 2 cos(w) x[n-1] - x[n-2] exactly, so a linear map of three past
    // samples predicts perfectly. One sample fixes the value but not the phase.
    let rows: Vec<Vec<f64>> = (0..800)
        .map(|k| {
            let t = k as f64 / 10.0;
            let w = std::f64::consts::TAU / 3.7;
            let s = (w * t).sin();
            vec![4.0 * s, 1.0 - s, 2.0 * s + 3.0]
        })
        .collect();
    let seq = MarkerSequence::from_rows(10.0, 1, &rows, Regularity::Regular).unwrap();
    let grid = GridSpec::empty(Algorithm::LinearRegression, vec![0.1, 0.3]);
    let key = CellKey::new(0, Algorithm::LinearRegression, SamplingRate::Hz10, 2);
    let out = cross_validate(&seq, &grid, &small_fixed(), SamplingRate::Hz10, key).unwrap();
    assert_eq!(out.best.shl_s, 0.3);
    assert!(out.best_rmse < 1e-8);
    assert!(out.scores[0].1.unwrap() > 1e-2);
}

fn tiny_sweep(seed: u64) -> SweepSpec {
    let entry = |name: &str, label, phase: f64| SequenceEntry {
        name: name.into(),
        label,
        base: {
            let s = common::sinusoid_mixture(1, 70.0, 10.0);
            let rows: Vec<Vec<f64>> = s.rows().map(|r| r.iter().map(|v| v + phase).collect()).collect();
            MarkerSequence::from_rows(10.0, 1, &rows, label).unwrap()
        },
    };
    let mut spec = SweepSpec::new(
        vec![entry("a", Regularity::Regular, 0.0), entry("b", Regularity::Slow, 1.0)],
        vec![Algorithm::Uoro, Algorithm::Lms, Algorithm::NoPrediction],
        Preset::Desk,
    );
    spec.fixed = small_fixed();
    spec.rates = vec![SamplingRate::Hz3, SamplingRate::Hz30];
    spec.horizons = Some(vec![0.3, 0.5]);
    spec.master_seed = seed;
    let mut uoro = GridSpec::empty(Algorithm::Uoro, vec![0.6]);
    uoro.etas = vec![0.01];
    uoro.hidden = vec![3, 5];
    let mut lms = GridSpec::empty(Algorithm::Lms, vec![0.6]);
    lms.etas = vec![0.001, 0.01];
    spec.grids = vec![uoro, lms];
    spec
}

#[test]
fn sweep_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let rows = sweep(&tiny_sweep(5)).unwrap();
    // 0.5 s is not a whole number of samples at 3.33 Hz.
    assert_eq!(rows.len(), 2 * (1 + 2) * 3);
    assert!(rows.iter().all(|r| r.is_ok()), "{rows:#?}");
    write_results(&rows, dir.path().join("a.csv")).unwrap();
    write_results(&sweep(&tiny_sweep(5)).unwrap(), dir.path().join("b.csv")).unwrap();
    let a = std::fs::read(dir.path().join("a.csv")).unwrap();
    let b = std::fs::read(dir.path().join("b.csv")).unwrap();
    assert_eq!(a, b);
    let other = sweep(&tiny_sweep(6)).unwrap();
    let uoro = |rows: &[respcast::harness::ResultRow]| {
        rows.iter().find(|r| r.algorithm == "uoro").unwrap().rmse
    };
    assert_ne!(uoro(&rows), uoro(&other));
}

#[test]
fn single_cell_sweep_gives_one_row() {
    let mut spec = tiny_sweep(1);
    spec.sequences.truncate(1);
    spec.rates = vec![SamplingRate::Hz10];
    spec.horizons = Some(vec![0.2]);
    spec.algorithms = vec![Algorithm::Lms];
    let rows = sweep(&spec).unwrap();
    assert_eq!(rows.len(), 1);
    assert!(rows[0].params.contains("eta="));
}

#[test]
fn failing_cells_are_recorded() {
    let mut spec = tiny_sweep(1);
    spec.sequences.truncate(1);
    spec.rates = vec![SamplingRate::Hz10];
    spec.horizons = Some(vec![0.2]);
    spec.algorithms = vec![Algorithm::Lms, Algorithm::NoPrediction];
    let mut lms = GridSpec::empty(Algorithm::Lms, vec![100.0]);
    lms.etas = vec![0.01];
    spec.grids = vec![lms];
    let rows = sweep(&spec).unwrap();
    assert!(!rows[0].is_ok());
    assert!(!rows[0].error.is_empty());
    assert!(rows[1].is_ok());
}
