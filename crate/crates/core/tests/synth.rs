use nalgebra::DMatrix;
use proptest::prelude::*;
use runlmc::datamodel::EventCatalog;
use runlmc::lowrank::{self, CoefficientScaling};
use runlmc::synth::{self, MissingnessScheme, SynthSpec};

fn singular_values(t: &runlmc::datamodel::PerformanceTable) -> Vec<f64> {
    let m = DMatrix::from_row_slice(t.n_athletes(), t.n_events(), t.raw());
    let mut s: Vec<f64> = m.singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

#[test]
fn zero_noise_has_numerical_rank_three() {
    let pop = synth::generate(&SynthSpec { n_athletes: 500, noise_std: 0.0, seed: 1, ..Default::default() }).unwrap();
    let s = singular_values(&pop.table);
    assert!(s[2] > 1e-6 * s[0]);
    assert!(s[3] <= 1e-10 * s[0]);
    assert!(pop.table.is_complete());
}

#[test]
fn zero_spread_gives_identical_rows() {
    let pop = synth::generate(&SynthSpec { n_athletes: 20, coef_stds: vec![0.0; 3], noise_std: 0.0, seed: 2, ..Default::default() }).unwrap();
    for i in 1..20 {
        assert_eq!(pop.table.row_raw(i), pop.table.row_raw(0));
    }
}

#[test]
fn coefficient_moments_match_spec() {
    let spec = SynthSpec { n_athletes: 10_000, seed: 3, ..Default::default() };
    let pop = synth::generate(&spec).unwrap();
    let n = spec.n_athletes as f64;
    for k in 0..3 {
        let v: Vec<f64> = pop.coefficients.iter().map(|c| c[k]).collect();
        let mean = v.iter().sum::<f64>() / n;
        let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        let sd = spec.coef_stds[k];
        // se of the mean is sd/sqrt(n); se of the variance is sd^2 sqrt(2/(n-1)).
        assert!((mean - spec.coef_means[k]).abs() <= 3.0 * sd / n.sqrt(), "mean {k}");
        assert!((var - sd * sd).abs() <= 3.0 * sd * sd * (2.0 / (n - 1.0)).sqrt(), "var {k}");
    }
    // Noise: residual from the clean model.
    let resid: Vec<f64> = pop.table.raw().iter().zip(&pop.clean).map(|(a, b)| a - b).collect();
    let m = resid.len() as f64;
    let var = resid.iter().map(|x| x * x).sum::<f64>() / m;
    assert!((var - 1e-4).abs() <= 3.0 * 1e-4 * (2.0 / m).sqrt());
}

#[test]
fn missingness_identities() {
    let pop = synth::generate(&SynthSpec { n_athletes: 50, seed: 4, ..Default::default() }).unwrap();
    assert_eq!(synth::apply_missingness(&pop.table, MissingnessScheme::UniformK { missing: 0 }, 5).unwrap(), pop.table);
    assert_eq!(synth::apply_missingness(&pop.table, MissingnessScheme::ConsecutiveK { present: 10 }, 5).unwrap(), pop.table);
    assert!(synth::apply_missingness(&pop.table, MissingnessScheme::UniformK { missing: 11 }, 5).is_err());
    let a = synth::apply_missingness(&pop.table, MissingnessScheme::UniformK { missing: 6 }, 5).unwrap();
    assert!((0..50).all(|i| a.n_present(i) == 4));
    let b = synth::apply_missingness(&pop.table, MissingnessScheme::ConsecutiveK { present: 4 }, 5).unwrap();
    for i in 0..50 {
        let cols = b.present_cols(i);
        assert_eq!(cols.len(), 4);
        assert!(cols.windows(2).all(|w| w[1] == w[0] + 1));
    }
    for (i, j) in b.present_entries() {
        assert_eq!(b.get(i, j), pop.table.get(i, j));
    }
}

#[test]
fn replicate_pattern_properties() {
    let pop = synth::generate(&SynthSpec { n_athletes: 40, seed: 6, ..Default::default() }).unwrap();
    let other = synth::generate(&SynthSpec { n_athletes: 40, seed: 7, ..Default::default() }).unwrap();
    assert_eq!(synth::replicate_pattern(&pop.table, &other.table).unwrap(), other.table);
    let template = synth::apply_missingness(&pop.table, MissingnessScheme::REFERENCE, 8).unwrap();
    let copy = synth::replicate_pattern(&template, &other.table).unwrap();
    assert_eq!(synth::mask_of(&copy), synth::mask_of(&template));
    assert!((0..40).all(|i| copy.n_present(i) == template.n_present(i)));
    assert_eq!(synth::replicate_pattern(&copy, &copy).unwrap(), copy);
    let short = synth::generate(&SynthSpec { n_athletes: 39, seed: 7, ..Default::default() }).unwrap();
    assert!(synth::replicate_pattern(&template, &short.table).is_err());
}

#[test]
fn zero_noise_components_span_the_reference() {
    let pop = synth::generate(&SynthSpec { n_athletes: 1000, noise_std: 0.0, seed: 9, ..Default::default() }).unwrap();
    let model = lowrank::extract_components(&pop.table, 3, CoefficientScaling::Singular).unwrap();
    let reference = synth::reference_components(&EventCatalog::standard());
    for f in &reference {
        // Norm of the projection onto the recovered span.
        let proj: f64 = model.components.iter().map(|g| f.iter().zip(g).map(|(a, b)| a * b).sum::<f64>().powi(2)).sum();
        assert!(proj.sqrt() >= 1.0 - 1e-10);
    }
    let cos0: f64 = reference[0].iter().zip(&model.components[0]).map(|(a, b)| a * b).sum();
    assert!(cos0.abs() > 0.999);
}

#[test]
fn zero_noise_population_is_exact_for_lmc() {
    let pop = synth::generate(&SynthSpec { n_athletes: 200, noise_std: 0.0, seed: 10, ..Default::default() }).unwrap();
    let masked = synth::apply_missingness(&pop.table, MissingnessScheme::UniformK { missing: 4 }, 11).unwrap();
    let cfg = runlmc::lmc::LmcConfig { rank: 3, seed: 12, ..Default::default() };
    for &(i, j) in masked.missing_entries().iter().step_by(17) {
        let e = runlmc::lmc::lmc_predict(&masked, i, j, &cfg).unwrap();
        assert!((e.value - pop.table.get(i, j).unwrap()).abs() <= 1e-8);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn deterministic_per_seed_and_distinct_across_seeds(seed_ in 0u64..1_000_000) {
        let spec = SynthSpec { n_athletes: 30, seed: seed_, ..Default::default() };
        let a = synth::generate(&spec).unwrap();
        let b = synth::generate(&spec).unwrap();
        prop_assert_eq!(&a.table, &b.table);
        let c = synth::generate(&SynthSpec { seed: seed_ + 1, ..spec }).unwrap();
        prop_assert_ne!(&a.table, &c.table);
        let m1 = synth::draw_mask(30, 10, MissingnessScheme::REFERENCE, seed_).unwrap();
        prop_assert_eq!(m1.clone(), synth::draw_mask(30, 10, MissingnessScheme::REFERENCE, seed_).unwrap());
    }

    #[test]
    fn uniform_scheme_removes_exactly_k(k in 0usize..=10, seed_: u64) {
        let m = synth::draw_mask(25, 10, MissingnessScheme::UniformK { missing: k }, seed_).unwrap();
        for row in m.present.chunks(10) {
            prop_assert_eq!(row.iter().filter(|b| !**b).count(), k);
        }
    }
}
