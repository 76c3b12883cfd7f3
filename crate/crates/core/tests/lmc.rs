mod common;

use common::{dense, low_rank_rows, rel_err, table};
use proptest::prelude::*;
use rand::Rng;
use runlmc::datamodel::Parameterization;
use runlmc::lmc::{self, EventSelection, Fallback, LmcConfig};
use runlmc::synth::{self, MissingnessScheme, SynthSpec};
use runlmc::{eval, seed};

const D: [f64; 6] = [100.0, 200.0, 400.0, 800.0, 1500.0, 5000.0];

fn row_norm_product(g: &[Vec<f64>]) -> f64 {
    g.iter().map(|r| r.iter().map(|v| v * v).sum::<f64>().sqrt()).product()
}

#[test]
fn rank_two_four_decimal_circuit() {
    // U V^T with 3x2 and 2x3 factors rounded to four decimals.
    let u = [[1.2345, 0.5678], [0.9876, 1.4321], [1.1111, 0.2222]];
    let v = [[0.3141, 1.5926, 0.5358], [0.9793, 0.2384, 0.6264]];
    let m: Vec<Vec<f64>> = (0..3).map(|i| (0..3).map(|j| u[i][0] * v[0][j] + u[i][1] * v[1][j]).collect()).collect();
    for (mi, mj) in [(0, 0), (1, 2), (2, 1)] {
        let mut g = m.clone();
        g[mi][mj] = f64::NAN;
        let s = lmc::solve_circuit(&g, (mi, mj), 1e-12).unwrap();
        assert!((s.estimate - m[mi][mj]).abs() <= 1e-9);
    }
}

#[test]
fn rank_one_table_recovered_exactly() {
    let mut rng = seed::rng(11);
    let rows = low_rank_rows(&mut rng, 40, D.len(), 1, 0.5..2.0);
    let t = table(&D, &dense(&rows), Parameterization::LogTime);
    let cfg = LmcConfig { rank: 1, seed: 3, ..Default::default() };
    for i in 0..5 {
        for j in 0..D.len() {
            let e = lmc::lmc_predict(&t.masked(i, j), i, j, &cfg).unwrap();
            assert_eq!(e.fallback, Fallback::None);
            assert!(rel_err(e.value, rows[i][j]) <= 1e-9);
        }
    }
}

#[test]
fn single_circuit_equals_solve_circuit() {
    let mut rng = seed::rng(12);
    let rows = low_rank_rows(&mut rng, 10, D.len(), 2, 0.5..2.0);
    let mut noisy = rows.clone();
    for r in noisy.iter_mut() {
        for v in r.iter_mut() {
            *v += rng.random_range(-0.01..0.01);
        }
    }
    let t = table(&D, &dense(&noisy), Parameterization::LogTime).masked(0, 2);
    let cfg = LmcConfig { rank: 2, n_circuits: 1, seed: 4, ..Default::default() };
    let samples = lmc::sample_circuits(&t, 0, 2, &cfg).unwrap();
    assert_eq!(samples.len(), 1);
    let s = &samples[0];
    let grid: Vec<Vec<f64>> = s
        .athlete_rows
        .iter()
        .map(|&i| s.event_cols.iter().map(|&j| t.get(i, j).unwrap_or(f64::NAN)).collect())
        .collect();
    let direct = lmc::solve_circuit(&grid, (0, 0), 1e-12).unwrap();
    assert_eq!(direct.estimate, s.estimate);
    assert_eq!(lmc::lmc_predict(&t, 0, 2, &cfg).unwrap().value, s.estimate);
}

#[test]
fn complete_table_unchanged_and_single_row_uses_column_mean() {
    let mut rng = seed::rng(13);
    let rows = low_rank_rows(&mut rng, 6, D.len(), 2, 0.5..2.0);
    let t = table(&D, &dense(&rows), Parameterization::LogTime);
    let imp = lmc::impute_all(&t, &LmcConfig::default()).unwrap();
    assert_eq!(imp.table, t);
    assert!(imp.report.column_mean_entries.is_empty());

    let mut r = dense(&rows[..2]);
    r[0][4] = None;
    r[1] = vec![None; D.len()];
    r[1][4] = Some(1.5);
    let t = table(&D, &r, Parameterization::LogTime);
    let imp = lmc::impute_all(&t, &LmcConfig::default()).unwrap();
    assert!(imp.table.is_complete());
    assert!(!imp.report.column_mean_entries.is_empty());
    let e = lmc::lmc_predict(&t, 0, 4, &LmcConfig::with_rank(2)).unwrap();
    assert_eq!(e.fallback, Fallback::ColumnMean);
}

#[test]
fn bagged_weights_sum_to_one_and_exact_on_noiseless() {
    let mut rng = seed::rng(14);
    let rows = low_rank_rows(&mut rng, 60, D.len(), 2, 0.5..2.0);
    let t = table(&D, &dense(&rows), Parameterization::LogTime).masked(0, 3);
    let cfg = LmcConfig { rank: 2, seed: 5, event_selection: EventSelection::Bagged, ..Default::default() };
    let b = lmc::lmc_predict_bagged(&t, 0, 3, &cfg).unwrap();
    assert!(b.subsets.len() > 1);
    assert!((b.subsets.iter().map(|s| s.weight).sum::<f64>() - 1.0).abs() < 1e-12);
    for s in &b.subsets {
        assert!(rel_err(s.value, rows[0][3]) <= 1e-9);
    }
    assert!(rel_err(b.estimate.value, rows[0][3]) <= 1e-9);
    assert_eq!(lmc::lmc_predict(&t, 0, 3, &cfg).unwrap().value, b.estimate.value);
}

#[test]
fn zero_noise_rank_three_imputation_is_exact() {
    let pop = synth::generate(&SynthSpec { n_athletes: 600, noise_std: 0.0, seed: 21, ..Default::default() }).unwrap();
    let masked = synth::apply_missingness(&pop.table, MissingnessScheme::UniformK { missing: 6 }, 22).unwrap();
    let imp = lmc::impute_all(&masked, &LmcConfig { rank: 3, seed: 23, ..Default::default() }).unwrap();
    for (i, j) in masked.missing_entries() {
        let truth = pop.table.get(i, j).unwrap();
        assert!((imp.table.get(i, j).unwrap() - truth).abs() <= 1e-6 * truth.abs());
    }
}

#[test]
fn out_of_sample_error_grows_with_noise() {
    let rmse = |noise: f64| {
        let pop = synth::generate(&SynthSpec { n_athletes: 800, noise_std: noise, seed: 31, ..Default::default() }).unwrap();
        let masked = synth::apply_missingness(&pop.table, MissingnessScheme::REFERENCE, 32).unwrap();
        let cfg = LmcConfig { rank: 2, seed: 33, ..Default::default() };
        let errs: Vec<f64> = masked
            .missing_entries()
            .iter()
            .step_by(7)
            .map(|&(i, j)| lmc::lmc_predict(&masked, i, j, &cfg).unwrap().value - pop.table.get(i, j).unwrap())
            .collect();
        eval::rms(&errs)
    };
    let levels = [0.0, 0.02, 0.05, 0.1];
    let r: Vec<f64> = levels.iter().map(|&s| rmse(s)).collect();
    assert!(r.windows(2).all(|w| w[1] >= w[0] * 0.97), "{r:?}");
    assert!(r[3] > r[0]);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn exact_recovery_of_low_rank_tables(seed_: u64, r in 1usize..=3, n in 12usize..40) {
        let mut rng = seed::rng(seed_);
        let rows = low_rank_rows(&mut rng, n, D.len(), r, 0.5..2.0);
        let (i, j) = (rng.random_range(0..n), rng.random_range(0..D.len()));
        let t = table(&D, &dense(&rows), Parameterization::LogTime).masked(i, j);
        let e = lmc::lmc_predict(&t, i, j, &LmcConfig { rank: r, seed: seed_, ..Default::default() }).unwrap();
        prop_assert_eq!(e.rank_used, r);
        prop_assert!(rel_err(e.value, rows[i][j]) <= 1e-9, "{} vs {}", e.value, rows[i][j]);
    }

    #[test]
    fn accepted_circuits_have_small_residual_and_positive_weight(seed_: u64, r in 1usize..=3) {
        let mut rng = seed::rng(seed_);
        let mut rows = low_rank_rows(&mut rng, 30, D.len(), r, 0.5..2.0);
        for row in rows.iter_mut() {
            for v in row.iter_mut() {
                *v += rng.random_range(-0.05..0.05);
            }
        }
        let t = table(&D, &dense(&rows), Parameterization::LogTime).masked(0, 0);
        let samples = lmc::sample_circuits(&t, 0, 0, &LmcConfig { rank: r, n_circuits: 50, seed: seed_, ..Default::default() }).unwrap();
        prop_assert!(!samples.is_empty());
        for s in &samples {
            prop_assert!(s.weight.is_finite() && s.weight > 0.0);
            let mut rows_set = s.athlete_rows.clone();
            rows_set.sort();
            rows_set.dedup();
            prop_assert_eq!(rows_set.len(), r + 1);
            let mut g: Vec<Vec<f64>> = s.athlete_rows.iter().map(|&i| s.event_cols.iter().map(|&j| t.get(i, j).unwrap_or(0.0)).collect()).collect();
            g[0][0] = s.estimate;
            let flat: Vec<f64> = g.iter().flatten().copied().collect();
            prop_assert!(lmc::determinant(&flat, r + 1).abs() <= 1e-8 * row_norm_product(&g));
        }
    }

    #[test]
    fn predictions_are_deterministic(seed_: u64) {
        let pop = synth::generate(&SynthSpec { n_athletes: 60, noise_std: 0.02, seed: seed_, ..Default::default() }).unwrap();
        let masked = synth::apply_missingness(&pop.table, MissingnessScheme::REFERENCE, seed_).unwrap();
        let (i, j) = masked.missing_entries()[0];
        let cfg = LmcConfig { rank: 2, seed: seed_, ..Default::default() };
        let a = lmc::lmc_predict(&masked, i, j, &cfg).unwrap();
        let b = lmc::lmc_predict(&masked, i, j, &cfg).unwrap();
        prop_assert_eq!(a.value.to_bits(), b.value.to_bits());
    }
}
