//! Statistical properties of density evolution on reduced populations.

use abelqmp::de::{
    channel_family, de_run, heatmap, heatmap_csv, holevo_threshold, symmetric_ray, threshold_bisect, DeConfig,
    TurboSpec,
};
use abelqmp::trellis::TrellisSpec;

fn spec() -> TurboSpec {
    TurboSpec::rate_third(TrellisSpec::from_transfer_function(&[1, 0, 1], &[1, 1, 1], 3).unwrap()).unwrap()
}

fn quick(seed: u64) -> DeConfig {
    DeConfig {
        population: 300,
        window: 21,
        max_iterations: 40,
        seed,
        threads: Some(1),
        ..DeConfig::default()
    }
}

#[test]
fn success_is_monotone_along_family() {
    let spec = spec();
    let grid = [1.0, 1.5, 2.0, 2.5, 3.0];
    let trials = 20;
    let mut monotone = 0;
    for seed in 0..trials {
        let ok: Vec<bool> = grid
            .iter()
            .map(|&l| de_run(&spec, &quick(seed), &channel_family(3, l).unwrap()).unwrap().converged)
            .collect();
        if ok.windows(2).all(|w| w[0] || !w[1]) {
            monotone += 1;
        }
    }
    assert!(monotone as f64 >= 0.95 * trials as f64, "{monotone}/{trials}");
}

#[test]
fn median_trajectory_decreases_below_threshold() {
    let spec = spec();
    let ch = channel_family(3, 2.6).unwrap();
    let runs: Vec<Vec<f64>> = (0..5).map(|s| de_run(&spec, &quick(100 + s), &ch).unwrap().trajectory).collect();
    let at = |r: &Vec<f64>, t: usize| r[t.min(r.len() - 1)];
    let median: Vec<f64> = (0..10)
        .map(|t| {
            let mut v: Vec<f64> = runs.iter().map(|r| at(r, t)).collect();
            v.sort_by(f64::total_cmp);
            v[2]
        })
        .collect();
    assert!(median.windows(2).all(|w| w[1] <= w[0]), "{median:?}");
    assert!(median[9] < median[0]);
}

#[test]
fn estimate_respects_holevo_bound() {
    let spec = spec();
    let res = threshold_bisect(&spec, &quick(9)).unwrap();
    let lh = holevo_threshold(3, spec.rate()).unwrap();
    assert!(res.lambda_de <= lh + 0.05, "{} vs {lh}", res.lambda_de);
    assert!(res.hi - res.lo <= 0.01);
}

#[test]
fn heatmap_csv_independent_of_threads() {
    let spec = spec();
    let pts = symmetric_ray(2.5, 2.8, 0.15).unwrap();
    let small = |t| DeConfig {
        population: 100,
        window: 11,
        max_iterations: 15,
        trials: 2,
        threads: Some(t),
        ..DeConfig::default()
    };
    let a = heatmap_csv(&heatmap(&spec, &small(1), &pts).unwrap());
    let b = heatmap_csv(&heatmap(&spec, &small(3), &pts).unwrap());
    assert_eq!(a, b);
    assert!(a.starts_with("lambda0,lambda1,lambda2,success_freq\n"));
}

#[test]
fn heatmap_corners() {
    let spec = spec();
    let cfg = DeConfig {
        trials: 1,
        ..quick(3)
    };
    let hp = heatmap(&spec, &cfg, &[[3.0, 0.0, 0.0], [1.0, 1.0, 1.0]]).unwrap();
    assert_eq!(hp[0].success_freq, 0.0);
    assert_eq!(hp[1].success_freq, 1.0);
}
