use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub label: String,
    /// Distance in meters.
    pub distance: f64,
}

/// Ordered list of running events, strictly increasing in distance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Event>", into = "Vec<Event>")]
pub struct EventCatalog {
    events: Vec<Event>,
}

pub const MILE_METERS: f64 = 1609.344;
pub const HALF_MARATHON_METERS: f64 = 21097.5;
pub const MARATHON_METERS: f64 = 42195.0;

impl EventCatalog {
    pub fn new(events: Vec<Event>) -> Result<Self> {
        if events.is_empty() {
            return Err(Error::invalid("event catalog is empty"));
        }
        for e in &events {
            if !(e.distance.is_finite() && e.distance > 0.0) {
                return Err(Error::invalid(format!("event `{}` has non-positive distance", e.label)));
            }
        }
        if events.windows(2).any(|w| w[1].distance <= w[0].distance) {
            return Err(Error::invalid("event distances must be strictly increasing"));
        }
        Ok(EventCatalog { events })
    }

    /// The ten standard running events, 100 m to the Marathon.
    pub fn standard() -> Self {
        let ev = |label: &str, distance: f64| Event { label: label.to_string(), distance };
        EventCatalog {
            events: vec![
                ev("100m", 100.0),
                ev("200m", 200.0),
                ev("400m", 400.0),
                ev("800m", 800.0),
                ev("1500m", 1500.0),
                ev("Mile", MILE_METERS),
                ev("5000m", 5000.0),
                ev("10000m", 10000.0),
                ev("HalfMarathon", HALF_MARATHON_METERS),
                ev("Marathon", MARATHON_METERS),
            ],
        }
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn distance(&self, col: usize) -> f64 {
        self.events[col].distance
    }

    pub fn label(&self, col: usize) -> &str {
        &self.events[col].label
    }

    pub fn distances(&self) -> Vec<f64> {
        self.events.iter().map(|e| e.distance).collect()
    }

    pub fn log_distances(&self) -> Vec<f64> {
        self.events.iter().map(|e| e.distance.ln()).collect()
    }

    /// Looks an event up by label, common alias, or distance in meters.
    pub fn index_of(&self, name: &str) -> Option<usize> {
        let key = normalize_label(name);
        if let Some(i) = self.events.iter().position(|e| normalize_label(&e.label) == key) {
            return Some(i);
        }
        let alias = match key.as_str() {
            "mile" | "1mile" | "1609m" | "1609" => Some(MILE_METERS),
            "halfmarathon" | "half" | "hm" | "21k" | "21097m" => Some(HALF_MARATHON_METERS),
            "marathon" | "mar" | "42k" | "42195" => Some(MARATHON_METERS),
            "5k" | "5km" => Some(5000.0),
            "10k" | "10km" => Some(10000.0),
            _ => None,
        };
        let dist = alias.or_else(|| key.trim_end_matches('m').parse::<f64>().ok())?;
        self.events.iter().position(|e| (e.distance - dist).abs() < 1e-6 * dist)
    }

    /// Columns ordered by log-distance to `target` (ties: shorter distance first),
    /// restricted to `candidates`.
    pub fn log_closest(&self, target: usize, candidates: &[usize]) -> Vec<usize> {
        let lt = self.distance(target).ln();
        let mut c: Vec<usize> = candidates.iter().copied().filter(|&j| j != target).collect();
        c.sort_by(|&a, &b| {
            let da = (self.distance(a).ln() - lt).abs();
            let db = (self.distance(b).ln() - lt).abs();
            da.total_cmp(&db).then(self.distance(a).total_cmp(&self.distance(b)))
        });
        c
    }
}

impl Default for EventCatalog {
    fn default() -> Self {
        Self::standard()
    }
}

impl TryFrom<Vec<Event>> for EventCatalog {
    type Error = Error;
    fn try_from(events: Vec<Event>) -> Result<Self> {
        EventCatalog::new(events)
    }
}

impl From<EventCatalog> for Vec<Event> {
    fn from(c: EventCatalog) -> Self {
        c.events
    }
}

fn normalize_label(s: &str) -> String {
    s.chars()
        .filter(|c| !c.is_whitespace() && *c != '-' && *c != '_')
        .flat_map(char::to_lowercase)
        .collect()
}
