//! Direct integration of the truncated lattice system
//!
//! ```text
//! u_i' = alpha (u_{i-1} + u_{i+1}) - (2 beta + gamma) u_i + f(u_i(t - tau))   (i even)
//! u_i' = beta  (u_{i-1} + u_{i+1}) - (2 alpha + eta)  u_i                     (i odd)
//! ```
//!
//! on a finite window with zero values outside it. The delay is handled by
//! the method of steps: the step size divides `tau`, so the delayed state at
//! every step start is a stored frame of the history ring.

mod front;
mod profile;

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::generator_into;
use crate::lattice::{is_even, SiteField};
use crate::model::{steady_state, BirthLaw, ModelParams, SteadyState};

pub use front::{empirical_speed, front_position, left_front_position, FrontTrace, SpeedFit};
pub use profile::{wave_profile, wave_profile_from_states, WaveProfile};

/// Numerical slack of the invariant region, relative to `w*`.
pub const INVARIANT_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Rk4,
    Euler,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialKind {
    CompactBlock,
    Equilibrium,
    Zero,
}

/// Step size and the number of steps per delay interval (0 when `tau = 0`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepSize {
    pub dt: f64,
    pub delay_steps: usize,
}

impl StepSize {
    /// Largest step below `0.1 / (2 max(alpha, beta) + max(gamma, eta) + f'(0))`
    /// that divides `tau`.
    pub fn stable(p: &ModelParams, f: &BirthLaw) -> Self {
        let cap = 0.1
            / (2.0 * p.alpha.max(p.beta) + p.gamma.max(p.eta) + f.slope_at_zero());
        Self::at_most(cap, p.tau)
    }

    /// Largest step `<= cap` that divides `tau`.
    pub fn at_most(cap: f64, tau: f64) -> Self {
        if tau > 0.0 {
            let m = (tau / cap).ceil().max(1.0) as usize;
            Self {
                dt: tau / m as f64,
                delay_steps: m,
            }
        } else {
            Self {
                dt: cap,
                delay_steps: 0,
            }
        }
    }

    pub fn check(&self, tau: f64) -> Result<()> {
        if !(self.dt > 0.0) {
            return Err(Error::InvalidParameter {
                name: "dt",
                value: self.dt,
                reason: "must be positive",
            });
        }
        if tau > 0.0 {
            let m = self.delay_steps as f64;
            if self.delay_steps == 0 || (m * self.dt - tau).abs() > 1e-12 * tau {
                return Err(Error::StepDoesNotDivideDelay { dt: self.dt, tau });
            }
        }
        Ok(())
    }
}

/// Population densities on the window at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeState {
    pub field: SiteField,
    pub time: f64,
}

impl LatticeState {
    pub fn lo(&self) -> i64 {
        self.field.start
    }

    pub fn hi(&self) -> i64 {
        self.field.end()
    }

    pub fn values(&self) -> &[f64] {
        &self.field.values
    }
}

/// The states on `[t - tau, t]`, oldest first, spaced `dt` apart.
#[derive(Debug, Clone, PartialEq)]
pub struct HistoryBuffer {
    pub step: StepSize,
    pub start: i64,
    pub time: f64,
    frames: VecDeque<Vec<f64>>,
}

impl HistoryBuffer {
    /// History that is constant in time and equal to `values` on `[start, ..]`.
    pub fn constant(start: i64, values: Vec<f64>, step: StepSize) -> Self {
        let frames = std::iter::repeat_n(values, step.delay_steps + 1).collect();
        Self {
            step,
            start,
            time: 0.0,
            frames,
        }
    }

    pub fn frames(&self) -> impl Iterator<Item = &[f64]> {
        self.frames.iter().map(Vec::as_slice)
    }

    pub fn frame_count(&self) -> usize {
        self.frames.len()
    }

    pub fn current(&self) -> LatticeState {
        LatticeState {
            field: SiteField::new(self.start, self.frames.back().unwrap().clone()),
            time: self.time,
        }
    }

    pub fn lo(&self) -> i64 {
        self.start
    }

    pub fn hi(&self) -> i64 {
        self.start + self.frames[0].len() as i64 - 1
    }
}

/// Initial history on `window` (inclusive).
///
/// `CompactBlock` puts `amplitude * u*_i` on `support` and zero elsewhere;
/// `Equilibrium` is `u*` everywhere; `Zero` is identically zero.
pub fn make_initial(
    kind: InitialKind,
    window: (i64, i64),
    support: (i64, i64),
    amplitude: f64,
    p: &ModelParams,
    f: &BirthLaw,
    step: StepSize,
) -> Result<HistoryBuffer> {
    let (lo, hi) = window;
    if hi - lo + 1 < 5 {
        return Err(Error::InvalidWindow {
            lo,
            hi,
            reason: "window needs at least 5 sites",
        });
    }
    if !(0.0..=1.0).contains(&amplitude) {
        return Err(Error::InvalidParameter {
            name: "amplitude",
            value: amplitude,
            reason: "must lie in [0, 1]",
        });
    }
    step.check(p.tau)?;
    let values = match kind {
        InitialKind::Zero => vec![0.0; (hi - lo + 1) as usize],
        InitialKind::Equilibrium => {
            let ss = steady_state(p, f)?;
            (lo..=hi).map(|i| ss.at(i)).collect()
        }
        InitialKind::CompactBlock => {
            let (s_lo, s_hi) = support;
            if s_lo < lo || s_hi > hi || s_hi < s_lo {
                return Err(Error::SupportOutsideWindow {
                    lo: s_lo,
                    hi: s_hi,
                    window_lo: lo,
                    window_hi: hi,
                });
            }
            let ss = steady_state(p, f)?;
            (lo..=hi)
                .map(|i| {
                    if (s_lo..=s_hi).contains(&i) {
                        amplitude * ss.at(i)
                    } else {
                        0.0
                    }
                })
                .collect()
        }
    };
    Ok(HistoryBuffer::constant(lo, values, step))
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntegrateOptions {
    pub scheme: Scheme,
    /// Time between stored snapshots and front samples (rounded to whole steps).
    pub sample_interval: f64,
    /// Front level as a fraction of `w*`.
    pub front_level: f64,
    /// Closest the front may come to either window edge, in sites.
    pub front_margin: i64,
    /// Enforce `0 <= u_i <= u*_i` (up to slack) and the `2 w*` blow-up guard.
    pub check_invariant: bool,
    /// Record where the front met the margin and stop, instead of failing.
    pub stop_at_boundary: bool,
    /// Keep every sampled state (otherwise only the front trace and the final state).
    pub keep_snapshots: bool,
    /// Equilibrium used for the front level and invariant checks. Computed
    /// from the birth law when absent.
    pub reference: Option<SteadyState>,
}

impl Default for IntegrateOptions {
    fn default() -> Self {
        Self {
            scheme: Scheme::Rk4,
            sample_interval: 0.5,
            front_level: 0.5,
            front_margin: 20,
            check_invariant: true,
            stop_at_boundary: false,
            keep_snapshots: true,
            reference: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub snapshots: Vec<LatticeState>,
    pub front: FrontTrace,
    pub final_state: LatticeState,
    pub step: StepSize,
}

impl Trajectory {
    /// Stored snapshot whose time is within half a step of `t`.
    pub fn snapshot_at(&self, t: f64) -> Option<&LatticeState> {
        let half = 0.5 * self.step.dt;
        self.snapshots.iter().find(|s| (s.time - t).abs() <= half)
    }
}

/// Advances `history` to time `horizon` (rounded up to a whole number of steps).
pub fn integrate(
    mut history: HistoryBuffer,
    horizon: f64,
    p: &ModelParams,
    f: &BirthLaw,
    opts: &IntegrateOptions,
) -> Result<Trajectory> {
    p.validate()?;
    f.validate()?;
    let step = history.step;
    step.check(p.tau)?;
    if !(opts.front_level > 0.0 && opts.front_level < 1.0) {
        return Err(Error::InvalidParameter {
            name: "front_level",
            value: opts.front_level,
            reason: "must lie in (0, 1)",
        });
    }
    let reference = match opts.reference {
        Some(r) => Some(r),
        None => match steady_state(p, f) {
            Ok(r) => Some(r),
            Err(e) if opts.check_invariant => return Err(e),
            Err(_) => None,
        },
    };

    let dt = step.dt;
    let n_steps = ((horizon - history.time) / dt - 1e-9).ceil().max(0.0) as usize;
    let sample_every = ((opts.sample_interval / dt).round() as usize).max(1);
    let start = history.start;
    let n = history.frames[0].len();
    let even0 = is_even(start);
    let lo = history.lo();
    let hi = history.hi();

    let mut stepper = Stepper::new(n, start, even0, p, f, opts.scheme);
    let mut snapshots = Vec::new();
    let mut front = FrontTrace {
        times: Vec::new(),
        positions: Vec::new(),
        level: opts.front_level,
        boundary_time: None,
    };

    let t0 = history.time;
    let mut observe = |h: &HistoryBuffer, front: &mut FrontTrace| -> Result<bool> {
        let state = h.current();
        if let Some(ss) = reference.filter(|_| opts.check_invariant) {
            check_invariant(&state, &ss)?;
        }
        let mut stop = false;
        if let Some(ss) = reference {
            if let Some(x) = front_position(&state, opts.front_level, &ss) {
                let left = left_front_position(&state, opts.front_level, &ss).unwrap_or(x);
                let right_gap = (hi as f64) - x;
                let left_gap = left - lo as f64;
                if right_gap < opts.front_margin as f64 || left_gap < opts.front_margin as f64 {
                    if opts.stop_at_boundary {
                        front.boundary_time = Some(state.time);
                        stop = true;
                    } else {
                        let (position, edge) =
                            if right_gap < left_gap { (x, hi) } else { (left, lo) };
                        return Err(Error::BoundaryContamination {
                            time: state.time,
                            position,
                            edge,
                            margin: opts.front_margin,
                        });
                    }
                } else {
                    front.times.push(state.time);
                    front.positions.push(x);
                }
            }
        }
        if opts.keep_snapshots {
            snapshots.push(state);
        }
        Ok(stop)
    };

    let mut stopped = observe(&history, &mut front)?;
    let mut k = 0;
    while k < n_steps && !stopped {
        let next = stepper.advance(&history);
        if let Some(ss) = reference.filter(|_| opts.check_invariant) {
            let limit = 2.0 * ss.w_star;
            if let Some((idx, &v)) = next
                .iter()
                .enumerate()
                .find(|(_, v)| !(v.abs() <= limit))
            {
                return Err(Error::Instability {
                    time: t0 + (k + 1) as f64 * dt,
                    site: start + idx as i64,
                    value: v,
                    limit,
                });
            }
        }
        history.frames.push_back(next);
        if history.frames.len() > step.delay_steps + 1 {
            let old = history.frames.pop_front().unwrap();
            stepper.recycle(old);
        }
        k += 1;
        history.time = t0 + k as f64 * dt;
        if k % sample_every == 0 || k == n_steps {
            stopped = observe(&history, &mut front)?;
        }
    }

    Ok(Trajectory {
        snapshots,
        front,
        final_state: history.current(),
        step,
    })
}

fn check_invariant(state: &LatticeState, ss: &SteadyState) -> Result<()> {
    let slack = INVARIANT_SLACK * ss.w_star;
    for (site, v) in state.field.sites() {
        let upper = ss.at(site) + slack;
        if !(v >= -slack && v <= upper) {
            return Err(Error::InvariantViolation {
                time: state.time,
                site,
                value: v,
                lower: 0.0,
                upper,
            });
        }
    }
    Ok(())
}

/// Scratch space for one explicit step.
struct Stepper<'a> {
    p: &'a ModelParams,
    f: &'a BirthLaw,
    scheme: Scheme,
    start: i64,
    even0: bool,
    k: [Vec<f64>; 4],
    stage: Vec<f64>,
    births: [Vec<f64>; 3],
    spare: Vec<Vec<f64>>,
}

impl<'a> Stepper<'a> {
    fn new(n: usize, start: i64, even0: bool, p: &'a ModelParams, f: &'a BirthLaw, scheme: Scheme) -> Self {
        Self {
            p,
            f,
            scheme,
            start,
            even0,
            k: std::array::from_fn(|_| vec![0.0; n]),
            stage: vec![0.0; n],
            births: std::array::from_fn(|_| vec![0.0; n]),
            spare: Vec::new(),
        }
    }

    fn recycle(&mut self, v: Vec<f64>) {
        self.spare.push(v);
    }

    /// Birth term `f(u)` at even sites, zero at odd sites.
    fn births_into(&self, u: &[f64], out: &mut [f64]) {
        for (k, (o, &v)) in out.iter_mut().zip(u).enumerate() {
            *o = if (k % 2 == 0) == self.even0 {
                self.f.eval(v)
            } else {
                0.0
            };
        }
    }

    fn rhs(&self, u: &[f64], births: &[f64], out: &mut [f64]) {
        generator_into(self.start, u, out, self.p);
        for (o, b) in out.iter_mut().zip(births) {
            *o += b;
        }
    }

    fn advance(&mut self, h: &HistoryBuffer) -> Vec<f64> {
        let dt = h.step.dt;
        let u = h.frames.back().unwrap();
        let delayed = h.step.delay_steps > 0;
        let mut next = self.spare.pop().unwrap_or_else(|| vec![0.0; u.len()]);
        let mut births = std::mem::take(&mut self.births);
        let mut k = std::mem::take(&mut self.k);
        let mut stage = std::mem::take(&mut self.stage);

        // delayed births at t - tau, t - tau + dt/2 and t - tau + dt
        if delayed {
            self.births_into(&h.frames[0], &mut births[0]);
            if self.scheme == Scheme::Rk4 {
                self.births_into(&h.frames[1], &mut births[2]);
                let [early, mid, late] = &mut births;
                for ((m, a), b) in mid.iter_mut().zip(early.iter()).zip(late.iter()) {
                    *m = 0.5 * (a + b);
                }
            }
        }

        match self.scheme {
            Scheme::Euler => {
                if !delayed {
                    self.births_into(u, &mut births[0]);
                }
                self.rhs(u, &births[0], &mut k[0]);
                for j in 0..u.len() {
                    next[j] = u[j] + dt * k[0][j];
                }
            }
            Scheme::Rk4 => {
                let coeffs = [0.5, 0.5, 1.0];
                let birth_slot = [0, 1, 1, 2];
                for s in 0..4 {
                    let src: &[f64] = if s == 0 { u } else { &stage };
                    if !delayed {
                        let mut b = std::mem::take(&mut births[0]);
                        self.births_into(src, &mut b);
                        births[0] = b;
                    }
                    let slot = if delayed { birth_slot[s] } else { 0 };
                    let (ks, _) = k.split_at_mut(s + 1);
                    self.rhs(src, &births[slot], &mut ks[s]);
                    if s < 3 {
                        let c = coeffs[s] * dt;
                        for j in 0..u.len() {
                            stage[j] = u[j] + c * k[s][j];
                        }
                    }
                }
                let w = dt / 6.0;
                for j in 0..u.len() {
                    next[j] = u[j] + w * (k[0][j] + 2.0 * k[1][j] + 2.0 * k[2][j] + k[3][j]);
                }
            }
        }

        self.births = births;
        self.k = k;
        self.stage = stage;
        next
    }
}
