//! Synthetic athlete populations from a three-component low-rank model.
//!
//! Each athlete's log-time profile is `λ1 f1(s) + λ2 f2(s) + λ3 f3(s) + η(s)`
//! with independent Gaussian coefficients and i.i.d. Gaussian noise `η`.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::datamodel::{AthleteMeta, EventCatalog, Parameterization, PerformanceTable};
use crate::error::{Error, Result};
use crate::par;
use crate::seed::{self, stream};

/// Median individual exponent the default coefficients are calibrated to.
pub const REFERENCE_EXPONENT_MEDIAN: f64 = 1.12;
/// Standard deviation of the exponent; puts the 5th/95th percentiles near 1.095/1.145.
pub const REFERENCE_EXPONENT_STD: f64 = 0.0152;
/// Default standard deviations of the second and third coefficients.
pub const REFERENCE_COEF2_STD: f64 = 0.5;
pub const REFERENCE_COEF3_STD: f64 = 0.25;

fn orthonormalize_against(mut v: Vec<f64>, basis: &[Vec<f64>]) -> Vec<f64> {
    for b in basis {
        let d: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
        v.iter_mut().zip(b).for_each(|(x, y)| *x -= d * y);
    }
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter_mut().for_each(|x| *x /= n);
    if v.last().copied().unwrap_or(0.0) < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
    v
}

/// Synthetic reference shapes for the three components, as functions of log-distance.
///
/// `f1` is the normalized log-distance (an individual power law). `f2` is a
/// smooth step centred at 800 m, negative for sprints and positive for
/// endurance events. `f3` is a bump with its extremum at 1500 m. Both are
/// orthonormalized against the preceding components and signed positive at
/// the longest event.
pub fn reference_components(catalog: &EventCatalog) -> Vec<Vec<f64>> {
    let u = catalog.log_distances();
    let f1 = orthonormalize_against(u.clone(), &[]);
    let step: Vec<f64> = u.iter().map(|x| ((x - 800f64.ln()) / 1.0).tanh()).collect();
    let f2 = orthonormalize_against(step, std::slice::from_ref(&f1));
    let bump: Vec<f64> = u.iter().map(|x| -(-((x - 1500f64.ln()) / 1.3).powi(2)).exp()).collect();
    let f3 = orthonormalize_against(bump, &[f1.clone(), f2.clone()]);
    vec![f1, f2, f3]
}

/// Norm of the log-distance vector; converts the first coefficient to exponent units.
pub fn exponent_scale(catalog: &EventCatalog) -> f64 {
    catalog.log_distances().iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthSpec {
    pub n_athletes: usize,
    pub catalog: EventCatalog,
    /// Unit-norm component vectors; `None` selects [`reference_components`].
    pub components: Option<Vec<Vec<f64>>>,
    pub coef_means: Vec<f64>,
    pub coef_stds: Vec<f64>,
    /// Standard deviation of the additive noise, in log-seconds.
    pub noise_std: f64,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        let catalog = EventCatalog::standard();
        let s = exponent_scale(&catalog);
        SynthSpec {
            n_athletes: 1000,
            catalog,
            components: None,
            coef_means: vec![REFERENCE_EXPONENT_MEDIAN * s, 0.0, 0.0],
            coef_stds: vec![REFERENCE_EXPONENT_STD * s, REFERENCE_COEF2_STD, REFERENCE_COEF3_STD],
            noise_std: 0.01,
            seed: 0,
        }
    }
}

impl SynthSpec {
    pub fn components(&self) -> Vec<Vec<f64>> {
        self.components.clone().unwrap_or_else(|| reference_components(&self.catalog))
    }

    pub fn validate(&self) -> Result<()> {
        let comps = self.components();
        let k = comps.len();
        if k == 0 {
            return Err(Error::invalid("at least one component is required"));
        }
        if self.coef_means.len() != k || self.coef_stds.len() != k {
            return Err(Error::DimensionMismatch {
                expected: format!("{k} coefficient means and stds"),
                got: format!("{} / {}", self.coef_means.len(), self.coef_stds.len()),
            });
        }
        for c in &comps {
            if c.len() != self.catalog.len() {
                return Err(Error::DimensionMismatch {
                    expected: format!("{} component entries", self.catalog.len()),
                    got: c.len().to_string(),
                });
            }
            let n = c.iter().map(|x| x * x).sum::<f64>().sqrt();
            if (n - 1.0).abs() > 1e-9 {
                return Err(Error::invalid(format!("component norm {n} is not 1")));
            }
        }
        if !(self.noise_std >= 0.0) || self.coef_stds.iter().any(|s| !(*s >= 0.0)) {
            return Err(Error::invalid("standard deviations must be non-negative"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct SyntheticPopulation {
    /// Complete table in log-time.
    pub table: PerformanceTable,
    /// Row-major `n_athletes x k` coefficients.
    pub coefficients: Vec<Vec<f64>>,
    pub components: Vec<Vec<f64>>,
    /// Noise-free log-times, row-major.
    pub clean: Vec<f64>,
}

/// Draws a complete synthetic population; rows use independent derived seeds.
pub fn generate(spec: &SynthSpec) -> Result<SyntheticPopulation> {
    spec.validate()?;
    let comps = spec.components();
    let p = spec.catalog.len();
    let rows: Vec<(Vec<f64>, Vec<f64>, Vec<f64>)> = par::map_range(spec.n_athletes, |i| {
        let mut crng = seed::rng_for(spec.seed, stream::SYNTH_COEFFS, &[i as u64]);
        let lambda: Vec<f64> = spec
            .coef_means
            .iter()
            .zip(&spec.coef_stds)
            .map(|(m, s)| m + s * crng.sample::<f64, _>(StandardNormal))
            .collect();
        let clean: Vec<f64> = (0..p).map(|j| lambda.iter().zip(&comps).map(|(l, f)| l * f[j]).sum()).collect();
        let mut nrng = seed::rng_for(spec.seed, stream::SYNTH_NOISE, &[i as u64]);
        let noisy = clean.iter().map(|c| c + spec.noise_std * nrng.sample::<f64, _>(StandardNormal)).collect();
        (lambda, clean, noisy)
    });
    let mut values = Vec::with_capacity(spec.n_athletes * p);
    let mut clean = Vec::with_capacity(spec.n_athletes * p);
    let mut coefficients = Vec::with_capacity(spec.n_athletes);
    for (l, c, v) in rows {
        coefficients.push(l);
        clean.extend(c);
        values.extend(v);
    }
    let athletes = (0..spec.n_athletes as u64).map(AthleteMeta::anonymous).collect();
    let table = PerformanceTable::from_raw(spec.catalog.clone(), values, athletes, Parameterization::LogTime)?;
    Ok(SyntheticPopulation { table, coefficients, components: comps, clean })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "scheme")]
pub enum MissingnessScheme {
    /// Exactly `missing` entries per row removed uniformly at random.
    UniformK { missing: usize },
    /// A uniformly placed window of `present` consecutive events kept.
    ConsecutiveK { present: usize },
    /// Per row, a present count uniform in `min_present..=max_present`,
    /// placed uniformly or as a consecutive window with equal probability.
    Mixed { min_present: usize, max_present: usize },
}

impl MissingnessScheme {
    /// Mixture of scattered and clustered rows with four to six events each.
    pub const REFERENCE: MissingnessScheme = MissingnessScheme::Mixed { min_present: 4, max_present: 6 };
}

/// Boolean present-mask, row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Mask {
    pub n_rows: usize,
    pub n_cols: usize,
    pub present: Vec<bool>,
}

fn uniform_present<R: Rng>(rng: &mut R, p: usize, keep: usize, row: &mut [bool]) {
    let mut idx: Vec<usize> = (0..p).collect();
    for i in 0..keep {
        let j = rng.random_range(i..p);
        idx.swap(i, j);
    }
    row.iter_mut().for_each(|b| *b = false);
    for &j in &idx[..keep] {
        row[j] = true;
    }
}

fn window_present<R: Rng>(rng: &mut R, p: usize, keep: usize, row: &mut [bool]) {
    let start = rng.random_range(0..=p - keep);
    for (j, b) in row.iter_mut().enumerate() {
        *b = (start..start + keep).contains(&j);
    }
}

/// Draws a present-mask for `n_rows x n_cols` under `scheme`.
pub fn draw_mask(n_rows: usize, n_cols: usize, scheme: MissingnessScheme, seed: u64) -> Result<Mask> {
    match scheme {
        MissingnessScheme::UniformK { missing: k } | MissingnessScheme::ConsecutiveK { present: k } if k > n_cols => {
            return Err(Error::invalid(format!("k = {k} exceeds the {n_cols} events")));
        }
        MissingnessScheme::Mixed { min_present, max_present } if min_present > max_present || max_present > n_cols => {
            return Err(Error::invalid("mixed scheme needs min_present <= max_present <= n_events"));
        }
        _ => {}
    }
    let rows: Vec<Vec<bool>> = par::map_range(n_rows, |i| {
        let mut rng = seed::rng_for(seed, stream::MISSINGNESS, &[i as u64]);
        let mut row = vec![true; n_cols];
        match scheme {
            MissingnessScheme::UniformK { missing } => uniform_present(&mut rng, n_cols, n_cols - missing, &mut row),
            MissingnessScheme::ConsecutiveK { present } => window_present(&mut rng, n_cols, present, &mut row),
            MissingnessScheme::Mixed { min_present, max_present } => {
                let keep = rng.random_range(min_present..=max_present);
                if rng.random_bool(0.5) {
                    uniform_present(&mut rng, n_cols, keep, &mut row)
                } else {
                    window_present(&mut rng, n_cols, keep, &mut row)
                }
            }
        }
        row
    });
    Ok(Mask { n_rows, n_cols, present: rows.concat() })
}

pub fn apply_missingness(table: &PerformanceTable, scheme: MissingnessScheme, seed: u64) -> Result<PerformanceTable> {
    let mask = draw_mask(table.n_athletes(), table.n_events(), scheme, seed)?;
    apply_mask(table, &mask)
}

/// Present-mask of a table.
pub fn mask_of(table: &PerformanceTable) -> Mask {
    Mask {
        n_rows: table.n_athletes(),
        n_cols: table.n_events(),
        present: table.raw().iter().map(|v| !v.is_nan()).collect(),
    }
}

/// Removes every entry where the mask is false; present entries stay as they are.
pub fn apply_mask(table: &PerformanceTable, mask: &Mask) -> Result<PerformanceTable> {
    if mask.n_rows != table.n_athletes() || mask.n_cols != table.n_events() {
        return Err(Error::DimensionMismatch {
            expected: format!("{}x{}", table.n_athletes(), table.n_events()),
            got: format!("{}x{}", mask.n_rows, mask.n_cols),
        });
    }
    let mut out = table.clone();
    for (k, &keep) in mask.present.iter().enumerate() {
        if !keep {
            out.set(k / mask.n_cols, k % mask.n_cols, None)?;
        }
    }
    Ok(out)
}

/// Copies the observation pattern of `template` onto `table`.
pub fn replicate_pattern(template: &PerformanceTable, table: &PerformanceTable) -> Result<PerformanceTable> {
    apply_mask(table, &mask_of(template))
}
