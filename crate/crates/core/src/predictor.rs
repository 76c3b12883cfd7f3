//! A common interface over every prediction method.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::baselines::{self, EmConfig, SoftImputeConfig};
use crate::datamodel::{reparameterize, Parameterization, PerformanceTable};
use crate::error::{Error, Result};
use crate::lmc::{self, EventSelection, LmcConfig};

/// Predicts one entry of a table from the other entries.
///
/// Implementations must not read entry `(row, col)`; callers hide it anyway.
/// Values are in the table's own parameterization.
pub trait Predictor: Sync {
    fn name(&self) -> String;
    fn predict(&self, table: &PerformanceTable, row: usize, col: usize) -> Result<f64>;
}

impl<P: Predictor + ?Sized> Predictor for &P {
    fn name(&self) -> String {
        (**self).name()
    }
    fn predict(&self, table: &PerformanceTable, row: usize, col: usize) -> Result<f64> {
        (**self).predict(table, row, col)
    }
}

impl<P: Predictor + ?Sized + Send> Predictor for Box<P> {
    fn name(&self) -> String {
        (**self).name()
    }
    fn predict(&self, table: &PerformanceTable, row: usize, col: usize) -> Result<f64> {
        (**self).predict(table, row, col)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "kebab-case")]
pub enum Method {
    Mean,
    Knn { k: usize },
    Riegel,
    #[serde(rename = "powerlaw")]
    PowerLaw,
    #[serde(rename = "ind-powerlaw")]
    IndPowerLaw,
    Purdy,
    Em,
    /// `lambda: None` selects the regularization by cross-validation on
    /// every call; resolve it once with [`Method::prepare`].
    Nuclear { lambda: Option<f64>, seed: u64 },
    Lmc(LmcConfig),
}

pub const METHOD_NAMES: &[&str] =
    &["mean", "knn", "riegel", "powerlaw", "ind-powerlaw", "purdy", "em", "nuclear", "lmc1", "lmc2", "lmc3", "lmc4"];

pub const DEFAULT_KNN_K: usize = 5;

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        let m = match s.as_str() {
            "mean" => Method::Mean,
            "knn" => Method::Knn { k: DEFAULT_KNN_K },
            "riegel" => Method::Riegel,
            "powerlaw" | "power-law" => Method::PowerLaw,
            "ind-powerlaw" | "ind-power-law" => Method::IndPowerLaw,
            "purdy" => Method::Purdy,
            "em" => Method::Em,
            "nuclear" => Method::Nuclear { lambda: None, seed: 0 },
            _ if s.starts_with("knn") => match s[3..].parse::<usize>() {
                Ok(k) if k > 0 => Method::Knn { k },
                _ => return Err(Error::Unknown { kind: "method", name: s }),
            },
            _ => {
                let rank = s.strip_prefix("lmc").and_then(|r| r.parse::<usize>().ok());
                match rank {
                    Some(r) if (1..=lmc::MAX_RANK).contains(&r) => Method::Lmc(LmcConfig::with_rank(r)),
                    _ => return Err(Error::Unknown { kind: "method", name: s }),
                }
            }
        };
        Ok(m)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::Mean => f.write_str("mean"),
            Method::Knn { k } if *k == DEFAULT_KNN_K => f.write_str("knn"),
            Method::Knn { k } => write!(f, "knn{k}"),
            Method::Riegel => f.write_str("riegel"),
            Method::PowerLaw => f.write_str("powerlaw"),
            Method::IndPowerLaw => f.write_str("ind-powerlaw"),
            Method::Purdy => f.write_str("purdy"),
            Method::Em => f.write_str("em"),
            Method::Nuclear { .. } => f.write_str("nuclear"),
            Method::Lmc(c) if c.event_selection == EventSelection::Bagged => write!(f, "lmc{}-bagged", c.rank),
            Method::Lmc(c) => write!(f, "lmc{}", c.rank),
        }
    }
}

impl Method {
    /// Sets the seed of the randomized methods.
    pub fn with_seed(mut self, seed: u64) -> Self {
        match &mut self {
            Method::Lmc(c) => c.seed = seed,
            Method::Nuclear { seed: s, .. } => *s = seed,
            _ => {}
        }
        self
    }

    /// Switches LMC to bagged event selection; other methods are unaffected.
    pub fn bagged(mut self, on: bool) -> Self {
        if let Method::Lmc(c) = &mut self {
            c.event_selection = if on { EventSelection::Bagged } else { EventSelection::LogClosest };
        }
        self
    }

    pub fn with_knn_k(mut self, k: usize) -> Self {
        if let Method::Knn { k: kk } = &mut self {
            *kk = k;
        }
        self
    }

    pub fn with_circuits(mut self, n: usize) -> Self {
        if let Method::Lmc(c) = &mut self {
            c.n_circuits = n;
        }
        self
    }

    /// Resolves data-dependent hyper-parameters once for a whole run.
    pub fn prepare(&self, table: &PerformanceTable) -> Result<Method> {
        match self {
            Method::Nuclear { lambda: None, seed } => {
                let cfg = SoftImputeConfig { seed: *seed, ..Default::default() };
                let lambda = baselines::select_lambda_cv(table, &cfg)?;
                Ok(Method::Nuclear { lambda: Some(lambda), seed: *seed })
            }
            other => Ok(other.clone()),
        }
    }

    /// Minimum number of other attempted events the query athlete needs.
    pub fn min_other_events(&self) -> usize {
        match self {
            Method::Mean | Method::Em | Method::Nuclear { .. } => 0,
            Method::Knn { .. } | Method::Riegel | Method::PowerLaw | Method::Purdy => 1,
            Method::IndPowerLaw => 2,
            Method::Lmc(c) => c.rank,
        }
    }
}

fn unpredictable(row: usize, col: usize, reason: impl Into<String>) -> Error {
    Error::Unpredictable { row, col, reason: reason.into() }
}

impl Predictor for Method {
    fn name(&self) -> String {
        self.to_string()
    }

    fn predict(&self, table: &PerformanceTable, row: usize, col: usize) -> Result<f64> {
        if row >= table.n_athletes() || col >= table.n_events() {
            return Err(Error::invalid(format!("entry ({row}, {col}) outside the table")));
        }
        let hidden;
        let table = if table.is_present(row, col) {
            hidden = table.masked(row, col);
            &hidden
        } else {
            table
        };
        match self {
            Method::Mean => baselines::predict_mean(table, row, col),
            Method::Knn { k } => baselines::predict_knn(table, row, col, *k),
            Method::Riegel => baselines::predict_via_time(table, row, col, baselines::predict_riegel),
            Method::Purdy => baselines::predict_via_time(table, row, col, baselines::predict_purdy),
            Method::PowerLaw => {
                let fit = baselines::fit_global(&reparameterize(table, Parameterization::Time)?)?;
                baselines::predict_via_time(table, row, col, |d1, t1, d2| {
                    baselines::power_law_transfer(d1, t1, d2, fit.exponent)
                })
            }
            Method::IndPowerLaw => {
                let fit = baselines::powerlaw::fit_row(table, row, col)
                    .map_err(|_| unpredictable(row, col, "fewer than two other attempted distances"))?;
                baselines::predict_via_time(table, row, col, |d1, t1, d2| {
                    baselines::power_law_transfer(d1, t1, d2, fit.exponent)
                })
            }
            Method::Em => {
                let log = reparameterize(table, Parameterization::LogTime)?;
                let r = baselines::em_impute(&log, &EmConfig::default())?;
                let v = r.table.get(row, col).expect("completed");
                Ok(table.time_to_value(col, v.exp()))
            }
            Method::Nuclear { lambda, seed } => {
                let cfg = SoftImputeConfig { seed: *seed, ..Default::default() };
                let lambda = match lambda {
                    Some(l) => *l,
                    None => baselines::select_lambda_cv(table, &cfg)?,
                };
                let r = baselines::nuclear_norm_impute(table, lambda, &cfg)?;
                Ok(r.table.get(row, col).expect("completed"))
            }
            Method::Lmc(cfg) => lmc::lmc_predict(table, row, col, cfg).map(|e| e.value),
        }
    }
}

/// Returns the true value of every entry; a harness sanity check.
#[derive(Clone, Debug)]
pub struct Oracle {
    pub truth: PerformanceTable,
}

impl Predictor for Oracle {
    fn name(&self) -> String {
        "oracle".into()
    }

    fn predict(&self, _table: &PerformanceTable, row: usize, col: usize) -> Result<f64> {
        self.truth.get(row, col).ok_or_else(|| unpredictable(row, col, "oracle has no value"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for name in METHOD_NAMES {
            let m: Method = name.parse().unwrap();
            assert_eq!(m.to_string(), *name);
        }
        assert!("lmc5".parse::<Method>().is_err());
        assert!("svd".parse::<Method>().is_err());
        assert_eq!("knn7".parse::<Method>().unwrap(), Method::Knn { k: 7 });
        let b = "lmc2".parse::<Method>().unwrap().bagged(true);
        assert_eq!(b.to_string(), "lmc2-bagged");
    }
}
