use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::is_even;
use crate::model::SteadyState;
use crate::numeric::linear_fit;

use super::LatticeState;

/// Positions of the right-moving front over time.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct FrontTrace {
    pub times: Vec<f64>,
    pub positions: Vec<f64>,
    /// Level as a fraction of `w*`.
    pub level: f64,
    /// Time at which the front reached the boundary margin, if the run was
    /// allowed to stop there.
    pub boundary_time: Option<f64>,
}

impl FrontTrace {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// Rightmost crossing of `u_i = level * w*` among even sites, linearly
/// interpolated between consecutive even sites. Returns the last even site
/// of the window when every even site is above the level, and `None` when
/// none is.
pub fn front_position(state: &LatticeState, level: f64, reference: &SteadyState) -> Option<f64> {
    let threshold = level * reference.w_star;
    let first_even = if is_even(state.lo()) { state.lo() } else { state.lo() + 1 };
    let u = |i: i64| state.field.get(i);
    let mut last_even = state.hi();
    if !is_even(last_even) {
        last_even -= 1;
    }
    let mut i = last_even;
    while i >= first_even {
        if u(i) >= threshold {
            if i == last_even {
                return Some(i as f64);
            }
            let (a, b) = (u(i), u(i + 2));
            return Some(i as f64 + 2.0 * (a - threshold) / (a - b));
        }
        i -= 2;
    }
    None
}

/// Mirror of [`front_position`] for the left-moving front.
pub fn left_front_position(state: &LatticeState, level: f64, reference: &SteadyState) -> Option<f64> {
    let threshold = level * reference.w_star;
    let first_even = if is_even(state.lo()) { state.lo() } else { state.lo() + 1 };
    let u = |i: i64| state.field.get(i);
    let mut i = first_even;
    while i <= state.hi() {
        if u(i) >= threshold {
            if i == first_even {
                return Some(i as f64);
            }
            let (a, b) = (u(i), u(i - 2));
            return Some(i as f64 - 2.0 * (a - threshold) / (a - b));
        }
        i += 2;
    }
    None
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpeedFit {
    pub speed: f64,
    pub stderr: f64,
    pub intercept: f64,
    pub samples: usize,
}

/// Least-squares slope of front position against time over the last
/// `fit_fraction` of the samples.
pub fn empirical_speed(trace: &FrontTrace, fit_fraction: f64) -> Result<SpeedFit> {
    if !(fit_fraction > 0.0 && fit_fraction <= 1.0) {
        return Err(Error::InvalidParameter {
            name: "fit_fraction",
            value: fit_fraction,
            reason: "must lie in (0, 1]",
        });
    }
    let n = trace.len();
    let take = ((n as f64) * fit_fraction).round() as usize;
    if take < 10 {
        return Err(Error::TooFewSamples {
            needed: 10,
            got: take,
        });
    }
    let from = n - take;
    let times = &trace.times[from..];
    if let Some(tb) = trace.boundary_time {
        // sampling stops when the margin is reached, so any hit after the
        // first fitted sample falls inside the fit window
        if tb >= times[0] {
            return Err(Error::BoundaryContamination {
                time: tb,
                position: trace.positions[n - 1],
                edge: 0,
                margin: 0,
            });
        }
    }
    let (speed, intercept, stderr) = linear_fit(times, &trace.positions[from..]);
    Ok(SpeedFit {
        speed,
        stderr,
        intercept,
        samples: take,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::SiteField;

    fn ss() -> SteadyState {
        SteadyState {
            w_star: 4.0,
            v_star: 2.0,
        }
    }

    fn state(lo: i64, hi: i64, f: impl FnMut(i64) -> f64) -> LatticeState {
        LatticeState {
            field: SiteField::from_fn(lo, hi, f),
            time: 0.0,
        }
    }

    #[test]
    fn zero_state_has_no_front() {
        assert_eq!(front_position(&state(-10, 10, |_| 0.0), 0.5, &ss()), None);
    }

    #[test]
    fn saturated_state_returns_window_edge() {
        let s = ss();
        let st = state(-10, 11, |i| s.at(i));
        assert_eq!(front_position(&st, 0.5, &s), Some(10.0));
        assert_eq!(left_front_position(&st, 0.5, &s), Some(-10.0));
    }

    #[test]
    fn half_step_profile_interpolates() {
        let s = ss();
        let st = state(-10, 10, |i| if i <= 0 { s.at(i) } else { 0.0 });
        for theta in [0.25, 0.5, 0.75] {
            let x = front_position(&st, theta, &s).unwrap();
            assert!((x - 2.0 * (1.0 - theta)).abs() < 1e-15);
        }
    }

    #[test]
    fn exact_line_fit() {
        let times: Vec<f64> = (0..100).map(|k| k as f64 * 0.1).collect();
        let trace = FrontTrace {
            positions: times.iter().map(|t| 2.0 + 1.3 * t).collect(),
            times,
            level: 0.5,
            boundary_time: None,
        };
        let fit = empirical_speed(&trace, 0.5).unwrap();
        assert!((fit.speed - 1.3).abs() < 1e-12);
        assert!(fit.stderr < 1e-12);
    }

    #[test]
    fn too_few_samples() {
        let trace = FrontTrace {
            times: vec![0.0, 1.0, 2.0],
            positions: vec![0.0, 1.0, 2.0],
            level: 0.5,
            boundary_time: None,
        };
        assert!(matches!(
            empirical_speed(&trace, 1.0),
            Err(Error::TooFewSamples { .. })
        ));
    }
}
