//! Performance tables, the event catalog and per-athlete summary statistics.

mod catalog;
pub mod io;
mod reparam;
mod summary;
mod table;

pub use catalog::{Event, EventCatalog, HALF_MARATHON_METERS, MARATHON_METERS, MILE_METERS};
pub use reparam::reparameterize;
pub use summary::{
    athlete_summary, event_percentiles, percentile_against, preferred_distance, summaries, training_standard,
    AthleteSummary, PercentileGrid,
};
pub use table::{AthleteMeta, Gender, Parameterization, PerformanceTable};
