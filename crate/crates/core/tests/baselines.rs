mod common;

use common::{dense, low_rank_rows, rel_err, table};
use proptest::prelude::*;
use rand::Rng;
use runlmc::baselines::{self, powerlaw, EmConfig, PurdyTable, SoftImputeConfig};
use runlmc::datamodel::Parameterization;
use runlmc::seed;

const D: [f64; 5] = [400.0, 800.0, 1500.0, 5000.0, 10000.0];
const D10: [f64; 10] = [100.0, 200.0, 400.0, 800.0, 1500.0, 3000.0, 5000.0, 10000.0, 21097.5, 42195.0];

#[test]
fn mean_ignores_query_row() {
    let rows = vec![vec![Some(1.0), Some(5.0)], vec![Some(2.0), Some(7.0)], vec![Some(3.0), None]];
    let t = table(&D[..2], &rows, Parameterization::LogTime);
    assert_eq!(baselines::predict_mean(&t, 2, 1).unwrap(), 6.0);
    assert_eq!(baselines::predict_mean(&t, 0, 0).unwrap(), 2.5);
    let lonely = table(&D[..2], &[vec![Some(1.0), None], vec![Some(2.0), None]], Parameterization::LogTime);
    assert!(baselines::predict_mean(&lonely, 0, 1).is_err());
}

#[test]
fn knn_hand_case() {
    // Query at 0 on the shared event; neighbours at 0.1, 0.2, 0.9.
    let rows = vec![
        vec![Some(0.0), None],
        vec![Some(0.1), Some(10.0)],
        vec![Some(0.2), Some(20.0)],
        vec![Some(0.9), Some(90.0)],
    ];
    let t = table(&D[..2], &rows, Parameterization::LogTime);
    assert_eq!(baselines::predict_knn(&t, 0, 1, 2).unwrap(), 15.0);
    assert_eq!(baselines::predict_knn(&t, 0, 1, 1).unwrap(), 10.0);
    assert_eq!(baselines::predict_knn(&t, 0, 1, 10).unwrap(), 40.0);
    assert!(baselines::predict_knn(&t, 0, 1, 0).is_err());
}

#[test]
fn riegel_examples() {
    let t = baselines::predict_riegel(10000.0, 2400.0, 21097.5).unwrap();
    assert!(rel_err(t, 2400.0 * 2.10975f64.powf(1.06)) < 1e-14);
    assert_eq!(baselines::predict_riegel(5000.0, 900.0, 5000.0).unwrap(), 900.0);
    assert!(baselines::predict_riegel(5000.0, -1.0, 10000.0).is_err());
}

#[test]
fn power_law_exact_and_two_point() {
    let t: Vec<f64> = D.iter().map(|d| 0.07 * d.powf(1.1)).collect();
    let f = baselines::fit_individual(&D, &t).unwrap();
    assert!((f.exponent - 1.1).abs() < 1e-12);
    assert!(rel_err(f.coefficient, 0.07) < 1e-10);
    assert!(f.rss < 1e-20);

    let f = baselines::fit_individual(&[1500.0, 5000.0], &[240.0, 900.0]).unwrap();
    let alpha = (900.0f64 / 240.0).ln() / (5000.0f64 / 1500.0).ln();
    assert!((f.exponent - alpha).abs() < 1e-12);
    assert!(f.rss < 1e-24);
    assert!(baselines::fit_individual(&[1500.0], &[240.0]).is_err());
    assert!(baselines::fit_individual(&[1500.0, 1500.0], &[240.0, 250.0]).is_err());
}

#[test]
fn global_exponent_pools_within_athlete_slopes() {
    let rows: Vec<Vec<Option<f64>>> = [(1.05, 0.08), (1.15, 0.04)]
        .iter()
        .map(|&(a, c)| D.iter().map(|d: &f64| Some(c * d.powf(a))).collect())
        .collect();
    let t = table(&D, &rows, Parameterization::Time);
    let g = baselines::fit_global(&t).unwrap();
    // Equal distance sets give equal within-row sxx, so the pooled slope is the mean.
    assert!((g.exponent - 1.10).abs() < 1e-12);
    for i in 0..2 {
        let own = powerlaw::fit_row(&t, i, usize::MAX).unwrap();
        assert!(own.rss <= powerlaw::rss_with_exponent(&t, i, g.exponent) + 1e-15);
    }
}

#[test]
fn em_recovers_linear_relation() {
    let mut rng = seed::rng(41);
    let rows: Vec<Vec<Option<f64>>> = (0..200)
        .map(|i| {
            let (x, y) = (rng.random_range(5.0..7.0), rng.random_range(-1.0..1.0));
            let z = 2.0 * x - 0.5 * y + 1.0;
            if i % 4 == 0 { vec![Some(x), Some(y), None] } else { vec![Some(x), Some(y), Some(z)] }
        })
        .collect();
    let t = table(&D[..3], &rows, Parameterization::LogTime);
    let r = baselines::em_impute(&t, &EmConfig { rel_tol: 1e-12, max_iter: 2000, ..Default::default() }).unwrap();
    for (i, row) in rows.iter().enumerate().filter(|(i, _)| i % 4 == 0) {
        let (x, y) = (row[0].unwrap(), row[1].unwrap());
        let got = r.table.get(i, 2).unwrap();
        assert!((got - (2.0 * x - 0.5 * y + 1.0)).abs() < 1e-6, "{got}");
    }
}

fn rank_one_with_holes(seed_: u64) -> (Vec<Vec<f64>>, runlmc::datamodel::PerformanceTable) {
    let mut rng = seed::rng(seed_);
    let truth = low_rank_rows(&mut rng, 100, D10.len(), 1, 0.5..2.0);
    let mut rows = dense(&truth);
    // 30% of entries hidden, keeping two per row and one per column.
    for row in rows.iter_mut() {
        for v in row.iter_mut().skip(2) {
            if rng.random_bool(0.3 * 10.0 / 8.0) {
                *v = None;
            }
        }
    }
    (truth, table(&D10, &rows, Parameterization::LogTime))
}

#[test]
fn soft_impute_small_lambda_completes_rank_one() {
    let (truth, t) = rank_one_with_holes(42);
    let top = baselines::nuclear::top_singular_value(&t).unwrap();
    let cfg = SoftImputeConfig { tol: 1e-10, max_iter: 3000, ..Default::default() };
    // Warm-started path down to a small lambda; a cold start converges slowly.
    let mut r = baselines::nuclear_norm_impute(&t, top, &cfg).unwrap();
    for k in 1..=30 {
        r = baselines::soft_impute_from(&t, top * 1e-6f64.powf(k as f64 / 30.0), &cfg, Some(&r.table)).unwrap();
    }
    let worst = t.missing_entries().iter().map(|&(i, j)| rel_err(r.table.get(i, j).unwrap(), truth[i][j])).fold(0.0, f64::max);
    assert!(worst <= 1e-3, "{worst} after {} iterations", r.iterations);
    for (i, j) in t.present_entries() {
        assert_eq!(r.table.get(i, j), t.get(i, j));
    }
}

#[test]
fn soft_impute_huge_lambda_gives_column_means() {
    let (_, t) = rank_one_with_holes(43);
    let top = baselines::nuclear::top_singular_value(&t).unwrap();
    let r = baselines::nuclear_norm_impute(&t, 10.0 * top, &SoftImputeConfig::default()).unwrap();
    assert_eq!(r.rank, 0);
    for (i, j) in t.missing_entries() {
        let m = t.column_mean_excluding(j, None).unwrap();
        assert!((r.table.get(i, j).unwrap() - m).abs() < 1e-12);
    }
}

#[test]
fn soft_impute_objective_non_increasing() {
    let (_, t) = rank_one_with_holes(44);
    let r = baselines::nuclear_norm_impute(&t, 0.1, &SoftImputeConfig::default()).unwrap();
    for w in r.objective.windows(2) {
        assert!(w[1] <= w[0] * (1.0 + 1e-12));
    }
}

proptest! {
    #[test]
    fn purdy_points_decrease_with_time(d in 100.0f64..20000.0, t in 0.5f64..2.0, dt in 0.001f64..0.2) {
        let p = PurdyTable::bundled();
        let (t950, _) = p.standard(d).unwrap();
        prop_assert!(p.points(d, t950 * t).unwrap() > p.points(d, t950 * (t + dt)).unwrap());
    }

    #[test]
    fn purdy_round_trip(d in 100.0f64..20000.0, t in 0.7f64..1.5) {
        let p = PurdyTable::bundled();
        let (t950, _) = p.standard(d).unwrap();
        prop_assert!((p.points(d, t950).unwrap() - 950.0).abs() < 1e-9);
        let pts = p.points(d, t950 * t).unwrap();
        prop_assert!(rel_err(p.time_for_points(d, pts).unwrap(), t950 * t) < 1e-10);
        prop_assert!(rel_err(baselines::predict_purdy(d, t950 * t, d).unwrap(), t950 * t) < 1e-10);
    }

    #[test]
    fn individual_fit_never_worse_than_global(seed_: u64) {
        let mut rng = seed::rng(seed_);
        let rows: Vec<Vec<Option<f64>>> = (0..8)
            .map(|_| {
                let (a, c) = (rng.random_range(1.0..1.2), rng.random_range(0.03..0.1));
                D.iter().map(|d| (rng.random_bool(0.8)).then(|| c * d.powf(a) * rng.random_range(0.97..1.03))).collect()
            })
            .collect();
        let t = table(&D, &rows, Parameterization::Time);
        if let Ok(g) = baselines::fit_global(&t) {
            for i in 0..t.n_athletes() {
                if let Ok(own) = powerlaw::fit_row(&t, i, usize::MAX) {
                    prop_assert!(own.rss <= powerlaw::rss_with_exponent(&t, i, g.exponent) + 1e-12);
                }
            }
        }
    }

    #[test]
    fn soft_impute_zero_lambda_keeps_complete_table(seed_: u64) {
        let mut rng = seed::rng(seed_);
        let rows = low_rank_rows(&mut rng, 12, D.len(), 3, 0.5..2.0);
        let t = table(&D, &dense(&rows), Parameterization::LogTime);
        let r = baselines::nuclear_norm_impute(&t, 0.0, &SoftImputeConfig::default()).unwrap();
        prop_assert_eq!(r.table, t);
    }
}
