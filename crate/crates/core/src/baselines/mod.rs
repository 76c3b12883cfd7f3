//! Comparison predictors.

pub mod em;
pub mod nuclear;
pub mod powerlaw;
pub mod purdy;
mod simple;

pub use em::{em_impute, EmConfig, EmResult};
pub use nuclear::{nuclear_norm_impute, select_lambda_cv, soft_impute_from, SoftImputeConfig, SoftImputeResult};
pub use powerlaw::{fit_global, fit_individual, GlobalPowerLaw, IndividualPowerLaw};
pub use purdy::{predict_purdy, purdy_points, PurdyTable};
pub use simple::*;
