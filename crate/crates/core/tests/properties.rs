use disagg_core::partition::{between_group_ss, build_partition_traced, within_group_ss};
use disagg_core::{
    build_partition, chi2_sf, fit_logistic, null_loglik, Dataset, FitConfig, FitStatus, PartitionConfig,
};
use proptest::prelude::*;

fn xy(max_len: usize) -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (2..max_len).prop_flat_map(|n| {
        (
            prop::collection::vec((0u32..40).prop_map(|v| f64::from(v) * 0.5), n),
            prop::collection::vec(prop::bool::ANY.prop_map(|b| f64::from(u8::from(b))), n),
        )
    })
}

fn partition_config() -> impl Strategy<Value = PartitionConfig> {
    (1usize..8, 1usize..20).prop_map(|(max_bins, min_bin_size)| PartitionConfig {
        max_bins,
        min_bin_size,
        ..PartitionConfig::default()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn sum_of_squares_decomposes((x, y) in xy(300), config in partition_config()) {
        let p = build_partition(&x, &y, &config).unwrap();
        let total = between_group_ss(&p.bins) + within_group_ss(&p.bins, &y);
        prop_assert!((total - p.sst).abs() <= 1e-9 * p.sst.max(1.0));
    }

    #[test]
    fn partition_respects_constraints((x, y) in xy(300), config in partition_config()) {
        let (p, trace) = build_partition_traced(&x, &y, &config).unwrap();
        prop_assert!(p.n_bins() <= config.max_bins);
        prop_assert_eq!(p.splits.len() + 1, p.n_bins());
        if p.n_bins() > 1 {
            prop_assert!(p.bins.iter().all(|b| b.count >= config.min_bin_size));
        }
        prop_assert_eq!(p.bins.iter().map(|b| b.count).sum::<usize>(), y.len());
        prop_assert!(trace.windows(2).all(|w| w[1] >= w[0] - 1e-12));
        prop_assert!((0.0..=1.0).contains(&p.r2));
        for (b, bin) in p.bins.iter().enumerate() {
            prop_assert!(bin.members.iter().all(|&i| p.bin_of(x[i]) == b));
        }
    }

    #[test]
    fn partition_is_affine_invariant(
        (x, y) in xy(200),
        config in partition_config(),
        scale in 0.01f64..100.0,
        shift in -1e3f64..1e3,
    ) {
        let moved: Vec<f64> = x.iter().map(|v| scale * v + shift).collect();
        let a = build_partition(&x, &y, &config).unwrap();
        let b = build_partition(&moved, &y, &config).unwrap();
        let members = |p: &disagg_core::Partition| -> Vec<Vec<usize>> {
            p.bins.iter().map(|bin| { let mut m = bin.members.clone(); m.sort(); m }).collect()
        };
        prop_assert_eq!(members(&a), members(&b));
    }

    #[test]
    fn fit_is_location_scale_equivariant(
        (x, y) in xy(120),
        scale in 0.05f64..20.0,
        shift in -50f64..50.0,
    ) {
        let config = FitConfig::default();
        let a = fit_logistic(&x, &y, &config).unwrap();
        prop_assume!(a.status == FitStatus::Converged);
        let moved: Vec<f64> = x.iter().map(|v| scale * v + shift).collect();
        let b = fit_logistic(&moved, &y, &config).unwrap();
        prop_assert_eq!(a.status, b.status);
        prop_assert!((a.loglik - b.loglik).abs() < 1e-7);
        prop_assert!((a.beta - b.beta * scale).abs() < 1e-5 * (1.0 + a.beta.abs()));
    }

    #[test]
    fn fit_beats_the_mean_model_and_solves_the_score((x, y) in xy(200)) {
        let fit = fit_logistic(&x, &y, &FitConfig::default()).unwrap();
        let null = null_loglik(&y, 1e-12).unwrap();
        prop_assert!(fit.loglik >= null - 1e-9);
        if fit.status == FitStatus::Converged {
            let n = x.len() as f64;
            let mean = x.iter().sum::<f64>() / n;
            let sd = (x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt().max(1e-12);
            let (mut g0, mut g1) = (0.0, 0.0);
            for (&xi, &yi) in x.iter().zip(&y) {
                let r = yi - fit.predict(xi);
                g0 += r;
                g1 += r * (xi - mean) / sd;
            }
            prop_assert!(g0.abs() / n < 1e-5 && g1.abs() / n < 1e-5, "score {g0} {g1}");
        }
    }

    #[test]
    fn chi2_sf_is_a_decreasing_probability(df in 1u32..60, a in 0f64..200.0, b in 0f64..200.0) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let (p_lo, p_hi) = (chi2_sf(lo, df).unwrap(), chi2_sf(hi, df).unwrap());
        prop_assert!((0.0..=1.0).contains(&p_lo) && (0.0..=1.0).contains(&p_hi));
        prop_assert!(p_hi <= p_lo + 1e-15);
    }

    #[test]
    fn pair_views_share_rows(
        cells in prop::collection::vec((prop::option::of(-5f64..5.0), prop::option::of(-5f64..5.0), 0u8..2), 1..60),
    ) {
        let y: Vec<u8> = cells.iter().map(|c| c.2).collect();
        let a: Vec<f64> = cells.iter().map(|c| c.0.unwrap_or(f64::NAN)).collect();
        let b: Vec<f64> = cells.iter().map(|c| c.1.unwrap_or(f64::NAN)).collect();
        let ds = Dataset::from_columns("y", y, vec![("a".into(), a.clone()), ("b".into(), b.clone())]).unwrap();
        match (ds.pair_view("a", "b"), ds.pair_view("b", "a")) {
            (Ok(ab), Ok(ba)) => {
                prop_assert_eq!(&ab.rows, &ba.rows);
                prop_assert_eq!(&ab.x_j, &ba.x_c);
                let complete = (0..a.len()).filter(|&i| !a[i].is_nan() && !b[i].is_nan()).count();
                prop_assert_eq!(ab.n(), complete);
            }
            (Err(_), Err(_)) => {}
            _ => prop_assert!(false, "asymmetric pair view outcome"),
        }
    }
}
