//! Habitat and demography parameters, birth laws and the derived constants
//! of the 2-periodic lattice model.
//!
//! Even sites are good (birth happens there, adult mortality `gamma`); odd
//! sites are bad (no birth, mortality `eta`). Individuals hop from an odd
//! site to each neighbouring even site at rate `alpha` and from an even site
//! to each neighbouring odd site at rate `beta`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{bisect, expand_upper};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    /// Dispersal rate into good sites.
    pub alpha: f64,
    /// Dispersal rate into bad sites.
    pub beta: f64,
    /// Adult mortality at good sites.
    pub gamma: f64,
    /// Mortality at bad sites.
    pub eta: f64,
    /// Maturation delay.
    #[serde(default)]
    pub tau: f64,
}

impl ModelParams {
    pub fn new(alpha: f64, beta: f64, gamma: f64, eta: f64, tau: f64) -> Self {
        Self {
            alpha,
            beta,
            gamma,
            eta,
            tau,
        }
    }

    /// All rates strictly positive and finite, `tau >= 0`.
    pub fn validate(&self) -> Result<()> {
        for (name, value) in [
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("gamma", self.gamma),
            ("eta", self.eta),
        ] {
            if !(value > 0.0 && value.is_finite()) {
                return Err(Error::InvalidParameter {
                    name,
                    value,
                    reason: "must be positive and finite",
                });
            }
        }
        if !(self.tau >= 0.0 && self.tau.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "tau",
                value: self.tau,
                reason: "must be non-negative and finite",
            });
        }
        Ok(())
    }

    pub fn with_beta(self, beta: f64) -> Self {
        Self { beta, ..self }
    }

    pub fn with_eta(self, eta: f64) -> Self {
        Self { eta, ..self }
    }

    /// Loss rate of an odd site, `2 alpha + eta`.
    pub(crate) fn odd_loss(&self) -> f64 {
        2.0 * self.alpha + self.eta
    }

    /// Loss rate of an even site before births, `2 beta + gamma`.
    pub(crate) fn even_loss(&self) -> f64 {
        2.0 * self.beta + self.gamma
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BirthKind {
    /// `p w / (q + w)`
    Monod,
    /// `p w exp(-q w)`
    Ricker,
    /// `p w`; only useful for linearised runs and degenerate checks.
    Linear,
}

/// Recruitment of new adults at good sites as a function of the adult
/// density one maturation period earlier. `survival` multiplies the raw
/// birth function (the fraction of newborns that live to maturity).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BirthLaw {
    pub kind: BirthKind,
    pub p: f64,
    #[serde(default = "default_q")]
    pub q: f64,
    #[serde(default = "default_survival")]
    pub survival: f64,
}

fn default_q() -> f64 {
    1.0
}

fn default_survival() -> f64 {
    1.0
}

impl BirthLaw {
    pub fn monod(p: f64, q: f64) -> Self {
        Self {
            kind: BirthKind::Monod,
            p,
            q,
            survival: 1.0,
        }
    }

    pub fn ricker(p: f64, q: f64) -> Self {
        Self {
            kind: BirthKind::Ricker,
            p,
            q,
            survival: 1.0,
        }
    }

    pub fn linear(slope: f64) -> Self {
        Self {
            kind: BirthKind::Linear,
            p: slope,
            q: 1.0,
            survival: 1.0,
        }
    }

    /// Survival to maturity `exp(-immature_mortality * tau)`.
    pub fn with_survival(self, survival: f64) -> Self {
        Self { survival, ..self }
    }

    /// Same shape with `p` rescaled so that `f'(0) = slope`.
    pub fn with_slope_at_zero(self, slope: f64) -> Self {
        let p = match self.kind {
            BirthKind::Monod => slope * self.q / self.survival,
            BirthKind::Ricker | BirthKind::Linear => slope / self.survival,
        };
        Self { p, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p > 0.0 && self.p.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "p",
                value: self.p,
                reason: "must be positive and finite",
            });
        }
        if !(self.q > 0.0 && self.q.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "q",
                value: self.q,
                reason: "must be positive and finite",
            });
        }
        if !(self.survival > 0.0 && self.survival <= 1.0) {
            return Err(Error::InvalidParameter {
                name: "survival",
                value: self.survival,
                reason: "must lie in (0, 1]",
            });
        }
        Ok(())
    }

    #[inline]
    pub fn eval(&self, w: f64) -> f64 {
        let raw = match self.kind {
            BirthKind::Monod => self.p * w / (self.q + w),
            BirthKind::Ricker => self.p * w * (-self.q * w).exp(),
            BirthKind::Linear => self.p * w,
        };
        self.survival * raw
    }

    pub fn derivative(&self, w: f64) -> f64 {
        let raw = match self.kind {
            BirthKind::Monod => self.p * self.q / ((self.q + w) * (self.q + w)),
            BirthKind::Ricker => self.p * (-self.q * w).exp() * (1.0 - self.q * w),
            BirthKind::Linear => self.p,
        };
        self.survival * raw
    }

    /// f'(0).
    pub fn slope_at_zero(&self) -> f64 {
        match self.kind {
            BirthKind::Monod => self.survival * self.p / self.q,
            BirthKind::Ricker | BirthKind::Linear => self.survival * self.p,
        }
    }
}

/// Effective mortality felt at good sites: `gamma + 2 beta eta / (2 alpha + eta)`.
pub fn big_gamma(p: &ModelParams) -> f64 {
    p.gamma + 2.0 * p.beta * p.eta / (2.0 * p.alpha + p.eta)
}

/// Supremum of the dispersal rates `beta` for which `f'(0) > Gamma`.
///
/// Only `beta` is ignored from `p`.
pub fn beta0(p: &ModelParams, f: &BirthLaw) -> Result<f64> {
    let fp0 = f.slope_at_zero();
    if fp0 < p.gamma {
        return Err(Error::NonInvadable {
            fprime0: fp0,
            gamma: p.gamma,
        });
    }
    Ok((fp0 - p.gamma) * (2.0 * p.alpha + p.eta) / (2.0 * p.eta))
}

/// Bad-site mortality at which the spreading speed collapses to zero;
/// `f64::INFINITY` when `f'(0) >= 2 beta + gamma`.
pub fn eta0(p: &ModelParams, f: &BirthLaw) -> Result<f64> {
    let fp0 = f.slope_at_zero();
    let gam = big_gamma(p);
    if fp0 <= gam {
        return Err(Error::NoPositiveEquilibrium {
            fprime0: fp0,
            big_gamma: gam,
        });
    }
    let cap = 2.0 * p.beta + p.gamma;
    if fp0 >= cap {
        Ok(f64::INFINITY)
    } else {
        Ok(2.0 * p.alpha * (fp0 - p.gamma) / (cap - fp0))
    }
}

/// The positive 2-periodic equilibrium: `w_star` at even sites, `v_star` at odd sites.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SteadyState {
    pub w_star: f64,
    pub v_star: f64,
}

impl SteadyState {
    #[inline]
    pub fn at(&self, site: i64) -> f64 {
        if site.rem_euclid(2) == 0 {
            self.w_star
        } else {
            self.v_star
        }
    }
}

/// Unique positive root of `f(w) = Gamma w`, with the matching odd-site density.
pub fn steady_state(p: &ModelParams, f: &BirthLaw) -> Result<SteadyState> {
    p.validate()?;
    f.validate()?;
    let gam = big_gamma(p);
    let fp0 = f.slope_at_zero();
    if fp0 <= gam {
        return Err(Error::NoPositiveEquilibrium {
            fprime0: fp0,
            big_gamma: gam,
        });
    }
    let g = |w: f64| f.eval(w) - gam * w;
    let w_star = match f.kind {
        BirthKind::Monod => {
            // f(w) < s p for all w, so the root lies below s p / Gamma.
            let hi = f.survival * f.p / gam;
            bisect(g, 1e-12 * hi, hi, 0.0, "steady state")?
        }
        _ => {
            let lo = 1e-12 / f.q;
            let hi = expand_upper(g, lo, 1.0 / f.q, "steady state")?;
            bisect(g, lo, hi, 0.0, "steady state")?
        }
    };
    let v_star = 2.0 * p.beta * w_star / p.odd_loss();
    Ok(SteadyState { w_star, v_star })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KppCheck {
    /// f decreases somewhere on (0, w*].
    NotMonotone,
    /// f(w)/w increases somewhere on (0, w*].
    NotSublinear,
    /// f(w) - Gamma w <= 0 somewhere on (0, w*).
    NotAboveMortality,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KppViolation {
    pub check: KppCheck,
    /// First grid point where the check fails.
    pub first_w: f64,
    /// Number of failing grid points.
    pub count: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct KppReport {
    pub violations: Vec<KppViolation>,
    pub warnings: Vec<String>,
}

impl KppReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn has(&self, check: KppCheck) -> bool {
        self.violations.iter().any(|v| v.check == check)
    }
}

pub const DEFAULT_KPP_GRID: usize = 10_000;

/// Checks the KPP structure of `f` on a uniform grid of `(0, w*]`.
pub fn validate_kpp(f: &BirthLaw, p: &ModelParams) -> Result<KppReport> {
    let ss = steady_state(p, f)?;
    Ok(validate_kpp_on(f, p, ss.w_star, DEFAULT_KPP_GRID))
}

/// Grid check of monotonicity, sublinearity and `f > Gamma w` on `(0, w_upper]`.
pub fn validate_kpp_on(f: &BirthLaw, p: &ModelParams, w_upper: f64, grid: usize) -> KppReport {
    let gam = big_gamma(p);
    let n = grid.max(2);
    let h = w_upper / n as f64;
    let mut acc: Vec<(KppCheck, Option<f64>, usize)> = vec![
        (KppCheck::NotMonotone, None, 0),
        (KppCheck::NotSublinear, None, 0),
        (KppCheck::NotAboveMortality, None, 0),
    ];
    let mut flag = |idx: usize, w: f64| {
        let e = &mut acc[idx];
        e.1.get_or_insert(w);
        e.2 += 1;
    };

    let mut prev_w = h;
    let mut prev_f = f.eval(h);
    for k in 1..=n {
        let w = h * k as f64;
        let fw = f.eval(w);
        if k > 1 {
            // round-off slack proportional to the values compared
            let slack = 4.0 * f64::EPSILON * fw.abs().max(prev_f.abs());
            if fw < prev_f - slack {
                flag(0, w);
            }
            if fw / w > prev_f / prev_w + slack / w {
                flag(1, w);
            }
        }
        if k < n && fw - gam * w <= 0.0 {
            flag(2, w);
        }
        prev_w = w;
        prev_f = fw;
    }

    let mut report = KppReport {
        violations: acc
            .into_iter()
            .filter_map(|(check, first, count)| {
                first.map(|first_w| KppViolation {
                    check,
                    first_w,
                    count,
                })
            })
            .collect(),
        warnings: Vec::new(),
    };
    if f.kind == BirthKind::Ricker && report.is_ok() {
        report.warnings.push(format!(
            "ricker birth law accepted: monotone range [0, {}] covers [0, {}]",
            1.0 / f.q,
            w_upper
        ));
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference() -> ModelParams {
        ModelParams::new(1.0, 0.5, 0.1, 0.2, 0.0)
    }

    #[test]
    fn big_gamma_reference_value() {
        // 0.1 + 2*0.5*0.2/2.2
        let g = big_gamma(&reference());
        assert!((g - 0.190_909_090_909_090_9).abs() < 1e-15);
    }

    #[test]
    fn big_gamma_zero_beta_is_gamma() {
        assert_eq!(big_gamma(&reference().with_beta(0.0)), 0.1);
    }

    #[test]
    fn big_gamma_large_eta_limit() {
        let g = big_gamma(&reference().with_eta(1e9));
        assert!((g - 1.1).abs() < 1e-8);
    }

    #[test]
    fn beta0_reference_and_edges() {
        let f = BirthLaw::monod(1.0, 1.0);
        assert!((beta0(&reference(), &f).unwrap() - 4.95).abs() < 1e-14);
        assert_eq!(beta0(&reference(), &BirthLaw::linear(0.1)).unwrap(), 0.0);
        assert!(matches!(
            beta0(&reference(), &BirthLaw::linear(0.05)),
            Err(Error::NonInvadable { .. })
        ));
        let far = beta0(&reference().with_eta(1e9), &f).unwrap();
        assert!((far - 0.45).abs() < 1e-6);
    }

    #[test]
    fn eta0_reference_and_sentinel() {
        let f = BirthLaw::monod(1.0, 1.0);
        let e0 = eta0(&reference(), &f).unwrap();
        assert!((e0 - 18.0).abs() < 1e-12);
        assert!((big_gamma(&reference().with_eta(e0)) - 1.0).abs() < 1e-14);
        // f'(0) = 2 beta + gamma exactly
        assert_eq!(
            eta0(&reference(), &BirthLaw::linear(1.1)).unwrap(),
            f64::INFINITY
        );
        assert!(eta0(&reference(), &BirthLaw::linear(0.15)).is_err());
    }

    #[test]
    fn steady_state_monod_reference() {
        let p = reference();
        let f = BirthLaw::monod(1.0, 1.0);
        let ss = steady_state(&p, &f).unwrap();
        let gam = big_gamma(&p);
        assert!((ss.w_star - (1.0 / gam - 1.0)).abs() < 1e-12);
        assert!((ss.w_star - 4.238_095_238_095_238).abs() < 1e-12);
        assert!((ss.v_star - 1.926_406_926_406_926).abs() < 1e-12);
        assert!((f.eval(ss.w_star) - gam * ss.w_star).abs() <= 1e-12 * gam * ss.w_star);
    }

    #[test]
    fn steady_state_monod_exact_root() {
        let p = reference();
        let gam = big_gamma(&p);
        let f = BirthLaw::monod(2.0 * gam * 0.7, 0.7);
        let ss = steady_state(&p, &f).unwrap();
        assert!((ss.w_star - 0.7).abs() < 1e-14);
    }

    #[test]
    fn steady_state_ricker_closed_form() {
        let p = reference();
        let f = BirthLaw::ricker(1.0, 1.0);
        let ss = steady_state(&p, &f).unwrap();
        assert!((ss.w_star - (1.0 / big_gamma(&p)).ln()).abs() < 1e-12);
    }

    #[test]
    fn steady_state_rejects_subcritical() {
        let p = reference();
        assert!(matches!(
            steady_state(&p, &BirthLaw::monod(0.1, 1.0)),
            Err(Error::NoPositiveEquilibrium { .. })
        ));
    }

    #[test]
    fn zero_eta_is_rejected() {
        let p = reference().with_eta(0.0);
        assert!(matches!(
            p.validate(),
            Err(Error::InvalidParameter { name: "eta", .. })
        ));
        assert!(steady_state(&p, &BirthLaw::monod(1.0, 1.0)).is_err());
    }

    #[test]
    fn kpp_monod_passes() {
        let report = validate_kpp(&BirthLaw::monod(1.0, 1.0), &reference()).unwrap();
        assert!(report.is_ok(), "{report:?}");
        assert!(report.warnings.is_empty());
    }

    #[test]
    fn kpp_ricker_flags_non_monotone() {
        let report = validate_kpp(&BirthLaw::ricker(1.0, 1.0), &reference()).unwrap();
        assert!(report.has(KppCheck::NotMonotone));
        let v = &report.violations[0];
        assert!(v.first_w > 1.0 && v.first_w < 1.01);
    }

    #[test]
    fn kpp_ricker_in_monotone_range_warns() {
        // w* = ln(p / Gamma) / q < 1 / q when p < e Gamma
        let p = reference();
        let f = BirthLaw::ricker(2.0 * big_gamma(&p), 1.0);
        let report = validate_kpp(&f, &p).unwrap();
        assert!(report.is_ok());
        assert_eq!(report.warnings.len(), 1);
    }

    #[test]
    fn kpp_linear_at_gamma_is_flagged() {
        let p = reference();
        let f = BirthLaw::linear(big_gamma(&p));
        let report = validate_kpp_on(&f, &p, 1.0, DEFAULT_KPP_GRID);
        assert!(report.has(KppCheck::NotAboveMortality));
        assert!(!report.has(KppCheck::NotMonotone));
    }
}
