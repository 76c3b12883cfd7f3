//! Purdy points: equal-points performances across distances.
//!
//! The 950-point standard time at a distance is the anchor table's
//! straight-line time plus a start allowance and a curve cost proportional to
//! the standard speed and the number of track curves. Points for a time `t` are
//!
//! ```text
//! k = 0.0654 - 0.00258 v,  a = 85 / k,  b = 1 - 950 / a,  P = a (T950 / t - b)
//! ```
//!
//! with `v` the straight-line standard speed.

use std::sync::OnceLock;

use serde::Deserialize;

use crate::error::{Error, Result};

const ANCHOR_JSON: &str = include_str!("../../data/purdy_anchor_table.json");
const BISECTION_REL_TOL: f64 = 1e-13;

#[derive(Clone, Debug, Deserialize)]
pub struct PurdyTable {
    pub start_time: f64,
    pub curve_cost_per_speed: f64,
    pub curve_length: f64,
    pub track_min: f64,
    pub track_max: f64,
    pub distances: Vec<f64>,
    pub times: Vec<f64>,
}

impl PurdyTable {
    pub fn bundled() -> &'static PurdyTable {
        static TABLE: OnceLock<PurdyTable> = OnceLock::new();
        TABLE.get_or_init(|| {
            let t: PurdyTable = serde_json::from_str(ANCHOR_JSON).expect("bundled Purdy table parses");
            t.validate().expect("bundled Purdy table is valid");
            t
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.distances.len() != self.times.len() || self.distances.len() < 2 {
            return Err(Error::invalid("anchor distances and times must pair up"));
        }
        if self.distances.windows(2).any(|w| w[1] <= w[0]) || self.times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("anchor table must be strictly increasing"));
        }
        Ok(())
    }

    /// Straight-line anchor time, linearly interpolated in distance.
    pub fn anchor_time(&self, distance: f64) -> Result<f64> {
        let d = &self.distances;
        if !(distance >= d[0] && distance <= d[d.len() - 1]) {
            return Err(Error::invalid(format!("distance {distance} m outside the scoring table")));
        }
        let k = d.partition_point(|&x| x < distance).clamp(1, d.len() - 1);
        let (d0, d1, t0, t1) = (d[k - 1], d[k], self.times[k - 1], self.times[k]);
        Ok(t0 + (t1 - t0) * (distance - d0) / (d1 - d0))
    }

    /// 950-point standard time and the straight-line speed at `distance`.
    pub fn standard(&self, distance: f64) -> Result<(f64, f64)> {
        let tp = self.anchor_time(distance)?;
        let v = distance / tp;
        let curves = if distance > self.track_min && distance <= self.track_max {
            distance / self.curve_length
        } else {
            0.0
        };
        Ok((tp + self.start_time + self.curve_cost_per_speed * v * curves, v))
    }

    pub fn points(&self, distance: f64, time: f64) -> Result<f64> {
        if !(time > 0.0) {
            return Err(Error::invalid("time must be positive"));
        }
        let (t950, v) = self.standard(distance)?;
        let (a, b) = constants(v);
        Ok(a * (t950 / time - b))
    }

    /// Time at `distance` scoring `points`, by bisection on the decreasing
    /// points-versus-time map.
    pub fn time_for_points(&self, distance: f64, points: f64) -> Result<f64> {
        let (t950, v) = self.standard(distance)?;
        let (a, b) = constants(v);
        if points <= -a * b {
            return Err(Error::invalid("points below the scoring curve's asymptote"));
        }
        let f = |t: f64| a * (t950 / t - b) - points;
        let (mut lo, mut hi) = (t950, t950);
        for _ in 0..2000 {
            if f(lo) > 0.0 {
                break;
            }
            lo *= 0.5;
        }
        for _ in 0..2000 {
            if f(hi) < 0.0 {
                break;
            }
            hi *= 2.0;
        }
        if !(f(lo) >= 0.0 && f(hi) <= 0.0) {
            return Err(Error::Numerical("Purdy bisection failed to bracket".into()));
        }
        for _ in 0..500 {
            let mid = 0.5 * (lo + hi);
            if f(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= BISECTION_REL_TOL * hi {
                return Ok(0.5 * (lo + hi));
            }
        }
        Err(Error::Numerical("Purdy bisection did not converge".into()))
    }
}

fn constants(v: f64) -> (f64, f64) {
    let k = 0.0654 - 0.00258 * v;
    let a = 85.0 / k;
    (a, 1.0 - 950.0 / a)
}

pub fn purdy_points(distance: f64, time: f64) -> Result<f64> {
    PurdyTable::bundled().points(distance, time)
}

/// Time at `target_dist` with the same Purdy points as `source_time` at `source_dist`.
pub fn predict_purdy(source_dist: f64, source_time: f64, target_dist: f64) -> Result<f64> {
    let table = PurdyTable::bundled();
    let p = table.points(source_dist, source_time)?;
    table.time_for_points(target_dist, p)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_table_speeds_fall_beyond_sprints() {
        let t = PurdyTable::bundled();
        let v: Vec<f64> = t.distances.iter().zip(&t.times).map(|(d, s)| d / s).collect();
        let peak = (0..v.len()).max_by(|&a, &b| v[a].total_cmp(&v[b])).unwrap();
        assert!(t.distances[peak] <= 200.0);
        assert!(v[peak..].windows(2).all(|w| w[1] < w[0]));
        assert!(t.distances[0] <= 100.0 && *t.distances.last().unwrap() >= 42195.0);
    }

    #[test]
    fn standard_time_scores_950() {
        let t = PurdyTable::bundled();
        for d in [100.0, 400.0, 1609.344, 42195.0] {
            let (t950, _) = t.standard(d).unwrap();
            assert!((t.points(d, t950).unwrap() - 950.0).abs() < 1e-9);
        }
    }

    #[test]
    fn identity_and_range() {
        for (d, s) in [(100.0, 11.3), (1500.0, 250.0), (42195.0, 10800.0)] {
            assert!((predict_purdy(d, s, d).unwrap() - s).abs() < 1e-6);
        }
        assert!(purdy_points(20.0, 3.0).is_err());
        assert!(purdy_points(200_000.0, 30000.0).is_err());
        assert!(purdy_points(400.0, 0.0).is_err());
    }

    #[test]
    fn bisection_matches_closed_form() {
        let t = PurdyTable::bundled();
        let (t950, v) = t.standard(5000.0).unwrap();
        let (a, b) = constants(v);
        for p in [200.0, 600.0, 1000.0] {
            let closed = t950 / (p / a + b);
            assert!((t.time_for_points(5000.0, p).unwrap() - closed).abs() < 1e-9 * closed);
        }
    }
}
