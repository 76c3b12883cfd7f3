mod common;

use runlmc::analysis;
use runlmc::datamodel::{EventCatalog, Parameterization};
use runlmc::predictor::{Method, Oracle};
use runlmc::synth::{self, MissingnessScheme, SynthSpec};

fn power_law_table(exponents: &[(f64, f64)]) -> runlmc::datamodel::PerformanceTable {
    let cat = EventCatalog::standard();
    let rows: Vec<Vec<Option<f64>>> = exponents
        .iter()
        .map(|&(alpha, c)| (0..cat.len()).map(|j| Some((c * cat.distance(j).powf(alpha)).ln())).collect())
        .collect();
    common::standard_table(&rows, Parameterization::LogTime)
}

#[test]
fn fair_race_symmetric_and_needs_two_athletes() {
    let pop = synth::generate(&SynthSpec { n_athletes: 120, seed: 1, ..Default::default() }).unwrap();
    let masked = synth::apply_missingness(&pop.table, MissingnessScheme::REFERENCE, 2).unwrap();
    let lmc2 = "lmc2".parse::<Method>().unwrap().prepare(&masked).unwrap();
    let mut pair = None;
    'outer: for a in 0..masked.n_athletes() {
        for b in a + 1..masked.n_athletes() {
            if analysis::fair_race(&masked, a, b, &lmc2, 0, 3).is_ok() {
                pair = Some((a, b));
                break 'outer;
            }
        }
    }
    let (a, b) = pair.expect("some pair crosses");
    let ab = analysis::fair_race(&masked, a, b, &lmc2, 30, 3).unwrap();
    let ba = analysis::fair_race(&masked, b, a, &lmc2, 30, 3).unwrap();
    assert_eq!(ab, ba);
    assert!(ab.ci_low <= ab.distance && ab.distance <= ab.ci_high);
    assert!(analysis::fair_race(&masked, a, a, &lmc2, 10, 3).is_err());
}

#[test]
fn identical_athletes_have_no_fair_race() {
    let t = power_law_table(&[(1.08, 0.05), (1.08, 0.05), (1.1, 0.04)]);
    let oracle = Oracle { truth: t.clone() };
    assert!(matches!(analysis::fair_race(&t, 0, 1, &oracle, 10, 1), Err(runlmc::Error::NoFairRace(_))));
}

#[test]
fn power_law_crossing_matches_closed_form() {
    // c_a s^1.05 = c_b s^1.15 at s* = (c_a / c_b)^(1/0.1).
    let (ca, cb) = (0.09, 0.09 * 2000f64.powf(-0.1));
    let t = power_law_table(&[(1.05, ca), (1.15, cb)]);
    let oracle = Oracle { truth: t.clone() };
    let r = analysis::fair_race(&t, 0, 1, &oracle, 0, 1).unwrap();
    // Both curves are straight in log-log, so interpolation is exact.
    assert!((r.distance - 2000.0).abs() < 1e-9 * 2000.0, "{}", r.distance);
    assert_eq!(r.n_crossings, 1);
}

#[test]
fn pivot_zero_and_continuity() {
    let pop = synth::generate(&SynthSpec { n_athletes: 400, seed: 4, ..Default::default() }).unwrap();
    let table = synth::apply_missingness(&pop.table, MissingnessScheme::REFERENCE, 5).unwrap();
    let eps = analysis::default_epsilons();
    let r = analysis::pivot_experiment(&table, 3.0 * 3600.0, &eps, 6).unwrap();
    assert_eq!(r.benchmark.len(), 10);
    assert!(r.benchmark.windows(2).all(|w| w[1] > w[0]));
    let zero = eps.iter().position(|e| *e == 0.0).unwrap();
    assert!(!r.triples.is_empty());
    for tr in &r.triples {
        assert_eq!(tr.relative_change[zero], 0.0);
        let steps: Vec<f64> = tr.relative_change.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
        let span = tr.relative_change.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(steps.iter().all(|s| *s <= 0.5 * span + 1e-12), "{:?}", tr.relative_change);
    }
    // A slower shorter performance predicts a faster longer one.
    assert!(r.triples[0].relative_change[eps.len() - 1] < 0.0);
    assert_eq!(r, analysis::pivot_experiment(&table, 3.0 * 3600.0, &eps, 6).unwrap());
}

#[test]
fn optimal_distance_profile() {
    // Only the first coefficient varies: no athlete specializes.
    let s = synth::exponent_scale(&EventCatalog::standard());
    let spec = SynthSpec { n_athletes: 400, coef_stds: vec![0.015 * s, 0.0, 0.0], noise_std: 0.0, seed: 7, ..Default::default() };
    let pop = synth::generate(&spec).unwrap();
    let oracle = Oracle { truth: pop.table.clone() };
    for athlete in [0, 17, 250] {
        let o = analysis::optimal_distance(&pop.table, athlete, &oracle).unwrap();
        assert!(o.percentiles.iter().all(|p| (0.0..=100.0).contains(p)));
        let (lo, hi) = o.percentiles.iter().fold((f64::MAX, f64::MIN), |(a, b), v| (a.min(*v), b.max(*v)));
        assert!(hi - lo < 1e-9, "{:?}", o.percentiles);
        // Ties go to the shortest event.
        assert_eq!(o.event, 0);
    }

    let pop = synth::generate(&SynthSpec { n_athletes: 300, seed: 8, ..Default::default() }).unwrap();
    let oracle = Oracle { truth: pop.table.clone() };
    let base = analysis::optimal_distance(&pop.table, 5, &oracle).unwrap();
    // A strictly increasing transform of one column keeps the argmax.
    let mut warped = pop.table.clone();
    for i in 0..warped.n_athletes() {
        let v = warped.get(i, 3).unwrap();
        warped.set(i, 3, Some(v.powi(3) + 2.0 * v)).unwrap();
    }
    let oracle = Oracle { truth: warped.clone() };
    let w = analysis::optimal_distance(&warped, 5, &oracle).unwrap();
    assert_eq!(w.event, base.event);
    assert_eq!(w.percentiles, base.percentiles);
}
