//! Strict JSON run configuration.
//!
//! Model parameters sit at the top level next to a `birth` block; each
//! command reads its own optional block. Unknown keys are rejected at every
//! level. The effective configuration, defaults filled in, is echoed to the
//! output directory; optional values left out appear there as `null`.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use lattice_kpp::simulator::{InitialKind, Scheme};
use lattice_kpp::{BirthLaw, ModelParams, SweepParameter};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub eta: f64,
    #[serde(default)]
    pub tau: f64,
    pub birth: BirthLaw,
    #[serde(default)]
    pub speed: SpeedConfig,
    #[serde(default, alias = "optimal-beta")]
    pub optimal_beta: OptimalConfig,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default)]
    pub simulate: SimulateConfig,
    #[serde(default, alias = "kernel-verify")]
    pub kernel_verify: KernelConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

/// `speed`: the dispersal rate defaults to the model `beta`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpeedConfig {
    pub beta: Option<f64>,
}

/// `optimal-beta`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimalConfig {
    /// Also evaluate the spreading speed at the optimum.
    #[serde(default = "yes")]
    pub check_speed: bool,
}

impl Default for OptimalConfig {
    fn default() -> Self {
        Self { check_speed: true }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Spacing {
    Linear,
    Log,
}

/// `sweep`: explicit `values`, or `points` between `start` and `stop`.
/// Without a range: `beta` spans `(0.02, 0.98) beta0`, `eta` spans
/// `(1/21, 20/21) eta0` (or `[0.01, 10]` when `eta0` is infinite) and
/// `fprime0` spans `(1.05, 10) Gamma`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default = "default_sweep_parameter")]
    pub parameter: SweepParameter,
    pub values: Option<Vec<f64>>,
    pub start: Option<f64>,
    pub stop: Option<f64>,
    #[serde(default = "default_points")]
    pub points: usize,
    #[serde(default = "default_spacing")]
    pub spacing: Spacing,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            parameter: default_sweep_parameter(),
            values: None,
            start: None,
            stop: None,
            points: default_points(),
            spacing: default_spacing(),
        }
    }
}

/// `simulate`: compact initial data on `[-support_half_width, support_half_width]`
/// inside the window `[-half_width, half_width]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    #[serde(default = "default_half_width")]
    pub half_width: i64,
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    /// Front level as a fraction of `w*`.
    #[serde(default = "default_level")]
    pub level: f64,
    /// Trailing fraction of front samples used for the speed fit.
    #[serde(default = "default_fit_fraction")]
    pub fit_fraction: f64,
    #[serde(default = "default_scheme")]
    pub scheme: Scheme,
    #[serde(default = "default_initial")]
    pub initial: InitialKind,
    #[serde(default = "default_support")]
    pub support_half_width: i64,
    #[serde(default = "default_amplitude")]
    pub amplitude: f64,
    #[serde(default = "default_sample_interval")]
    pub sample_interval: f64,
    #[serde(default = "default_margin")]
    pub front_margin: i64,
    /// Upper bound on the step; the stability cap applies when absent.
    pub dt: Option<f64>,
    #[serde(default = "yes")]
    pub check_invariant: bool,
    /// Spacing of the states written to `trajectory.csv`.
    #[serde(default = "default_trajectory_interval")]
    pub trajectory_interval: f64,
    /// `xi = i - c t` range kept in the profile.
    #[serde(default = "default_profile_xi")]
    pub profile_xi: [f64; 2],
    /// First snapshot time used for the profile; `0.75 horizon` when absent.
    pub profile_start: Option<f64>,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        Self {
            half_width: default_half_width(),
            horizon: default_horizon(),
            level: default_level(),
            fit_fraction: default_fit_fraction(),
            scheme: default_scheme(),
            initial: default_initial(),
            support_half_width: default_support(),
            amplitude: default_amplitude(),
            sample_interval: default_sample_interval(),
            front_margin: default_margin(),
            dt: None,
            check_invariant: true,
            trajectory_interval: default_trajectory_interval(),
            profile_xi: default_profile_xi(),
            profile_start: None,
        }
    }
}

/// `kernel-verify`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelConfig {
    #[serde(default = "default_kernel_times")]
    pub times: Vec<f64>,
    #[serde(default = "default_kernel_half_width")]
    pub half_width: i64,
}

impl Default for KernelConfig {
    fn default() -> Self {
        Self {
            times: default_kernel_times(),
            half_width: default_kernel_half_width(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// Output directory; `--out` takes precedence.
    #[serde(default = "default_dir")]
    pub dir: String,
    /// Emit a gnuplot script next to `sweep.csv`.
    #[serde(default = "yes")]
    pub plot_script: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: default_dir(),
            plot_script: true,
        }
    }
}

fn yes() -> bool {
    true
}
fn default_sweep_parameter() -> SweepParameter {
    SweepParameter::Beta
}
fn default_points() -> usize {
    40
}
fn default_spacing() -> Spacing {
    Spacing::Linear
}
fn default_half_width() -> i64 {
    400
}
fn default_horizon() -> f64 {
    200.0
}
fn default_level() -> f64 {
    0.5
}
fn default_fit_fraction() -> f64 {
    0.5
}
fn default_scheme() -> Scheme {
    Scheme::Rk4
}
fn default_initial() -> InitialKind {
    InitialKind::CompactBlock
}
fn default_support() -> i64 {
    5
}
fn default_amplitude() -> f64 {
    1.0
}
fn default_sample_interval() -> f64 {
    0.5
}
fn default_margin() -> i64 {
    20
}
fn default_trajectory_interval() -> f64 {
    10.0
}
fn default_profile_xi() -> [f64; 2] {
    [-100.0, 60.0]
}
fn default_kernel_times() -> Vec<f64> {
    vec![0.1, 1.0, 5.0]
}
fn default_kernel_half_width() -> i64 {
    15
}
fn default_dir() -> String {
    "lattice-kpp-out".to_string()
}

impl RunConfig {
    pub fn params(&self) -> ModelParams {
        ModelParams::new(self.alpha, self.beta, self.gamma, self.eta, self.tau)
    }

    /// Parses and validates a configuration document.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| CliError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), CliError> {
        let bad = |msg: String| Err(CliError::Parse(msg));
        self.params().validate().map_err(|e| CliError::Parse(e.to_string()))?;
        self.birth.validate().map_err(|e| CliError::Parse(e.to_string()))?;
        if let Some(b) = self.speed.beta {
            if !(b > 0.0 && b.is_finite()) {
                return bad(format!("speed.beta must be positive, got {b}"));
            }
        }
        let sw = &self.sweep;
        if let Some(v) = &sw.values {
            if v.is_empty() {
                return bad("sweep.values must not be empty".into());
            }
        } else if sw.points < 2 {
            return bad(format!("sweep.points must be at least 2, got {}", sw.points));
        }
        if sw.spacing == Spacing::Log && [sw.start, sw.stop].iter().flatten().any(|&x| x <= 0.0) {
            return bad("log spacing needs a positive sweep range".into());
        }
        let s = &self.simulate;
        if s.half_width < 10 {
            return bad(format!("simulate.half_width must be at least 10, got {}", s.half_width));
        }
        if !(s.horizon > 0.0 && s.horizon.is_finite()) {
            return bad(format!("simulate.horizon must be positive, got {}", s.horizon));
        }
        if !(s.sample_interval > 0.0) || !(s.trajectory_interval > 0.0) {
            return bad("simulate sampling intervals must be positive".into());
        }
        if !(s.level > 0.0 && s.level < 1.0) {
            return bad(format!("simulate.level must lie in (0, 1), got {}", s.level));
        }
        if !(s.fit_fraction > 0.0 && s.fit_fraction <= 1.0) {
            return bad(format!("simulate.fit_fraction must lie in (0, 1], got {}", s.fit_fraction));
        }
        if s.support_half_width < 0 || s.support_half_width > s.half_width {
            return bad("simulate.support_half_width must lie in [0, half_width]".into());
        }
        if s.profile_xi[0] >= s.profile_xi[1] {
            return bad("simulate.profile_xi must be an increasing pair".into());
        }
        if let Some(dt) = s.dt {
            if !(dt > 0.0) {
                return bad(format!("simulate.dt must be positive, got {dt}"));
            }
        }
        let k = &self.kernel_verify;
        if k.half_width < 1 || k.times.is_empty() || k.times.iter().any(|&t| !(t > 0.0 && t.is_finite())) {
            return bad("kernel_verify needs half_width >= 1 and positive times".into());
        }
        Ok(())
    }

    /// SHA-256 of the effective configuration without the `output` block,
    /// so that the same run written to different places hashes the same.
    pub fn digest(&self) -> String {
        let mut value = serde_json::to_value(self).expect("config serialises");
        if let Some(map) = value.as_object_mut() {
            map.remove("output");
        }
        hex::encode(Sha256::digest(value.to_string().as_bytes()))
    }
}
