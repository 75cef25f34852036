mod common;

use common::{bernoulli_loglik, grid_fit, sigmoid, Rng};
use disagg_core::detector::evaluate_pair;
use disagg_core::{
    aggregate_trend, build_partition, chi2_sf, disaggregated_trends, fit_logistic, generate, pseudo_r2,
    reversal_planted, wald_p, Bin, FitConfig, GroupSpec, PairView, Partition, PartitionConfig, PlantedSpec,
    ScanConfig,
};

fn view(x_j: Vec<f64>, x_c: Vec<f64>, y: Vec<f64>) -> PairView {
    PairView {
        x_j_name: "a".into(),
        x_c_name: "b".into(),
        rows: (0..y.len()).collect(),
        x_j,
        x_c,
        y,
    }
}

fn two_bin_partition(split: usize, y: &[f64]) -> Partition {
    let n = y.len();
    Partition {
        covariate: "b".into(),
        splits: vec![split as f64 - 0.5],
        bins: vec![
            Bin::from_members((0..split).collect(), 0.0, split as f64 - 0.5, y),
            Bin::from_members((split..n).collect(), split as f64 - 0.5, n as f64, y),
        ],
        sst: 1.0,
        r2: 0.0,
    }
}

/// Two groups with different intercepts and slopes along `x_j`.
fn two_group_instance(n: usize, seed: u64) -> (Vec<f64>, Vec<f64>) {
    let mut rng = Rng::new(seed);
    let x: Vec<f64> = (0..n).map(|_| 4.0 * rng.uniform() - 2.0).collect();
    let y = x
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let (a, b) = if i < n / 2 { (-0.5, 1.2) } else { (0.8, -0.7) };
            rng.bernoulli(sigmoid(a + b * v))
        })
        .collect();
    (x, y)
}

#[test]
fn aggregate_p_matches_oracle_refit() {
    let mut rng = Rng::new(40);
    let x: Vec<f64> = (0..40).map(|_| rng.normal()).collect();
    let y: Vec<f64> = x.iter().map(|&v| rng.bernoulli(sigmoid(0.3 + 1.1 * v))).collect();
    let v = view(x.clone(), x.clone(), y.clone());
    let (fit, p) = aggregate_trend(&v, &ScanConfig::default()).unwrap();

    let (_, _, ll) = grid_fit(&x, &y);
    let expected = chi2_sf(2.0 * (ll - bernoulli_loglik(&y)), 1).unwrap();
    assert!((p - expected).abs() < 1e-6, "{p} vs {expected}");
    assert!((fit.loglik - ll).abs() < 1e-6);
}

#[test]
fn disaggregated_deviance_is_sum_of_bin_deviances() {
    let (x, y) = two_group_instance(300, 41);
    let v = view(x.clone(), (0..300).map(f64::from).collect(), y.clone());
    let partition = two_bin_partition(150, &y);
    let (trends, total, p) = disaggregated_trends(&v, &partition, &ScanConfig::default()).unwrap();

    let mut expected = 0.0;
    for range in [0..150, 150..300] {
        let (_, _, ll) = grid_fit(&x[range.clone()], &y[range.clone()]);
        expected += 2.0 * (ll - bernoulli_loglik(&y[range]));
    }
    assert!((total - expected).abs() < 1e-8, "{total} vs {expected}");
    assert!((p - chi2_sf(expected, 2).unwrap()).abs() < 1e-9);
    assert_eq!(trends.len(), 2);
    assert!(trends[0].fit.beta > 0.0 && trends[1].fit.beta < 0.0);
}

#[test]
fn pseudo_r2_matches_hand_composed_ratio() {
    let (x, y) = two_group_instance(60, 42);
    let v = view(x.clone(), (0..60).map(f64::from).collect(), y.clone());
    let config = ScanConfig::default();
    let (trends, _, _) = disaggregated_trends(&v, &two_bin_partition(30, &y), &config).unwrap();
    let r2 = pseudo_r2(&trends, &v, config.fit.prob_clamp).unwrap();

    let full = grid_fit(&x[..30], &y[..30]).2 + grid_fit(&x[30..], &y[30..]).2;
    let expected = 1.0 - full / bernoulli_loglik(&y);
    assert!((r2 - expected).abs() < 1e-9, "{r2} vs {expected}");
}

#[test]
fn near_separable_subgroups_approach_one() {
    // within each bin the outcome flips at one x value, with a single
    // crossing row to keep the fit finite
    let mut x = Vec::new();
    let mut y = Vec::new();
    for bin in 0..2 {
        for i in 0..200 {
            let v = f64::from(i) / 20.0;
            x.push(v);
            let above = v > 5.0;
            let label = if bin == 0 { above } else { !above };
            y.push(f64::from(u8::from(label != (i == 99 || i == 100))));
        }
    }
    let v = view(x, (0..400).map(f64::from).collect(), y.clone());
    let config = ScanConfig::default();
    let (trends, _, _) = disaggregated_trends(&v, &two_bin_partition(200, &y), &config).unwrap();
    let r2 = pseudo_r2(&trends, &v, config.fit.prob_clamp).unwrap();
    assert!(r2 > 0.9 && r2 < 1.0, "{r2}");
}

#[test]
fn null_group_slope_is_within_three_standard_errors() {
    let (ds, _) = generate(&PlantedSpec::homogeneous(5_000, 0, 17)).unwrap();
    let x = ds.covariate("x_j").unwrap();
    let y: Vec<f64> = ds.outcome().iter().map(|&v| f64::from(v)).collect();
    let fit = fit_logistic(x, &y, &FitConfig::default()).unwrap();
    assert!(fit.beta.abs() < 3.0 * fit.se_beta, "{} ± {}", fit.beta, fit.se_beta);
}

#[test]
fn planted_pooled_slope_reverses_per_oracle() {
    let (ds, truth) = generate(&PlantedSpec::two_group_paradox(4_000, 0, 5)).unwrap();
    let x = ds.covariate("x_j").unwrap();
    let y: Vec<f64> = ds.outcome().iter().map(|&v| f64::from(v)).collect();
    let (_, pooled, _) = grid_fit(x, &y);
    assert!(pooled > 0.0);
    assert!((pooled - truth.pooled_beta).abs() < 1e-4);
    for half in [0..2_000, 2_000..4_000] {
        let (_, beta, _) = grid_fit(&x[half.clone()], &y[half]);
        assert!(beta < 0.0);
    }
    assert!(reversal_planted(&truth));
}

#[test]
fn exchangeable_groups_plant_no_reversal() {
    let spec = PlantedSpec {
        groups: vec![GroupSpec::with_mean(2_000, -1.0, 1.0, 2.0, 0.4); 2],
        ..PlantedSpec::two_group_paradox(4_000, 0, 6)
    };
    let (_, truth) = generate(&spec).unwrap();
    assert!(truth.pooled_beta < 0.0);
    assert!(!reversal_planted(&truth));
}

#[test]
fn planted_pair_evaluates_as_reversal() {
    let (ds, truth) = generate(&PlantedSpec::two_group_paradox(10_000, 0, 3)).unwrap();
    let v = ds.pair_view(&truth.x_j, &truth.x_c).unwrap();
    let config = PartitionConfig {
        min_bin_size: 50,
        ..PartitionConfig::default()
    };
    let partition = build_partition(&v.x_c, &v.y, &config).unwrap();
    // the first split separates the groups
    assert!(partition.splits.iter().any(|&s| s > 0.2 && s < 1.0));
    let result = evaluate_pair(&v, partition, &ScanConfig::default()).unwrap();
    assert!(result.simpson_flag);
    assert!(result.aggregate_fit.beta > 0.0);
    assert!(result.subgroup_trends.iter().all(|t| t.fit.beta < 0.0 || !t.significant));
    for t in &result.subgroup_trends {
        assert!((wald_p(&t.fit).unwrap() - t.beta_p).abs() < 1e-15);
    }
}
