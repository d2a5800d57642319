//! Pulsating-wave profiles in the moving coordinate `xi = i - c t`.
//!
//! A pulsating wave `u_i(t) = W(i, i - c t)` with `W(i, .) = W(i + 2, .)`
//! means that sites `i` and `i + 2` trace out the same curve in `xi`. Points
//! are therefore collected per residue of `i` mod 4; residues `r` and `r + 2`
//! share a parity and must agree, and their mismatch is the periodicity
//! defect.

use serde::Serialize;

use crate::error::{Error, Result};

use super::{LatticeState, Trajectory};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WaveProfile {
    pub speed: f64,
    /// `(xi, u)` samples per parity (0 = even, 1 = odd), sorted by `xi`.
    pub samples: [Vec<(f64, f64)>; 2],
    /// Non-increasing upper envelope of `samples`, same abscissae.
    pub envelope: [Vec<f64>; 2],
    /// `sup |W(i, xi) - W(i + 2, xi)|` over the overlapping `xi` range.
    pub periodicity_defect: f64,
    /// Profile value at the smallest sampled `xi`, per parity.
    pub left_limit: [f64; 2],
    /// Profile value at the largest sampled `xi`, per parity.
    pub right_limit: [f64; 2],
}

/// Profile from the snapshots of `trajectory` at `sample_times`, keeping
/// points with `xi` in `xi_range`.
pub fn wave_profile(
    trajectory: &Trajectory,
    c: f64,
    sample_times: &[f64],
    xi_range: (f64, f64),
) -> Result<WaveProfile> {
    let states = sample_times
        .iter()
        .map(|&t| {
            trajectory.snapshot_at(t).ok_or_else(|| {
                Error::InsufficientOverlap(format!("no snapshot stored at t = {t}"))
            })
        })
        .collect::<Result<Vec<_>>>()?;
    wave_profile_from_states(&states, c, xi_range)
}

pub fn wave_profile_from_states(
    states: &[&LatticeState],
    c: f64,
    xi_range: (f64, f64),
) -> Result<WaveProfile> {
    let mut classes: [Vec<(f64, f64)>; 4] = Default::default();
    for s in states {
        for (i, v) in s.field.sites() {
            let xi = i as f64 - c * s.time;
            if xi >= xi_range.0 && xi <= xi_range.1 {
                classes[i.rem_euclid(4) as usize].push((xi, v));
            }
        }
    }
    for class in classes.iter_mut() {
        class.sort_by(|a, b| a.0.total_cmp(&b.0));
    }

    let mut defect: f64 = 0.0;
    for r in 0..2 {
        let (a, b) = (&classes[r], &classes[r + 2]);
        let d1 = class_mismatch(a, b).ok_or_else(|| no_overlap(r))?;
        let d2 = class_mismatch(b, a).ok_or_else(|| no_overlap(r))?;
        defect = defect.max(d1).max(d2);
    }

    let merge = |r: usize| {
        let mut v: Vec<(f64, f64)> = classes[r].iter().chain(&classes[r + 2]).copied().collect();
        v.sort_by(|a, b| a.0.total_cmp(&b.0));
        v
    };
    let samples = [merge(0), merge(1)];
    let envelope = std::array::from_fn(|p| upper_envelope(&samples[p]));
    let left_limit = std::array::from_fn(|p| samples[p].first().map_or(f64::NAN, |s| s.1));
    let right_limit = std::array::from_fn(|p| samples[p].last().map_or(f64::NAN, |s| s.1));

    Ok(WaveProfile {
        speed: c,
        samples,
        envelope,
        periodicity_defect: defect,
        left_limit,
        right_limit,
    })
}

fn no_overlap(r: usize) -> Error {
    Error::InsufficientOverlap(format!(
        "residues {r} and {} (mod 4) share no xi range",
        r + 2
    ))
}

/// Largest gap between points of `a` and the piecewise-linear curve through
/// `b`, over the points of `a` inside the range of `b`. `None` if no point
/// of `a` falls inside.
fn class_mismatch(a: &[(f64, f64)], b: &[(f64, f64)]) -> Option<f64> {
    let (first, last) = (b.first()?.0, b.last()?.0);
    let mut worst: Option<f64> = None;
    for &(xi, v) in a {
        if xi < first || xi > last {
            continue;
        }
        let k = b.partition_point(|p| p.0 < xi);
        let w = if k < b.len() && b[k].0 == xi {
            b[k].1
        } else {
            let (x0, y0) = b[k - 1];
            let (x1, y1) = b[k];
            y0 + (y1 - y0) * (xi - x0) / (x1 - x0)
        };
        let d = (v - w).abs();
        worst = Some(worst.map_or(d, |m| m.max(d)));
    }
    worst
}

fn upper_envelope(samples: &[(f64, f64)]) -> Vec<f64> {
    let mut env = vec![0.0; samples.len()];
    let mut running = f64::NEG_INFINITY;
    for (k, &(_, v)) in samples.iter().enumerate().rev() {
        running = running.max(v);
        env[k] = running;
    }
    env
}
