//! Spreading speed from the linearised dispersion relation, and the optimal
//! dispersal rate into bad sites.
//!
//! For a trial solution `exp(-mu i + lambda t)` modulated by a positive
//! 2-periodic vector, the linearised lattice equation reduces to
//!
//! ```text
//! F(lambda, mu, beta) = -(lambda + 2 beta + gamma)
//!                       + alpha beta (e^mu + e^-mu)^2 / (lambda + 2 alpha + eta)
//!                       + f'(0) e^(-lambda tau) = 0
//! ```
//!
//! which has one positive root `lambda(mu)` for each `mu >= 0` as long as
//! `beta < beta0`. The spreading speed is `c* = min_{mu > 0} lambda(mu) / mu`.
//!
//! The growth of `lambda(mu)` for large `mu` is `sqrt(alpha beta) e^mu` (the
//! dominant balance `lambda^2 ~ alpha beta e^{2 mu}`), not `alpha beta e^mu`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{beta0, BirthLaw, ModelParams};
use crate::numeric::{bisect, expand_upper, golden_section, newton_decreasing};

/// Default `mu` search range and grid for the variational minimisation.
pub const MU_MIN: f64 = 1e-3;
pub const MU_MAX: f64 = 30.0;
pub const MU_GRID: usize = 300;
pub const MU_XTOL: f64 = 1e-10;

/// The pieces of the dispersion relation that do not depend on `beta`.
#[derive(Debug, Clone, Copy)]
struct Relation {
    alpha: f64,
    gamma: f64,
    odd_loss: f64,
    tau: f64,
    fprime0: f64,
}

impl Relation {
    fn new(p: &ModelParams, f: &BirthLaw) -> Self {
        Self {
            alpha: p.alpha,
            gamma: p.gamma,
            odd_loss: 2.0 * p.alpha + p.eta,
            tau: p.tau,
            fprime0: f.slope_at_zero(),
        }
    }

    #[inline]
    fn birth(&self, lambda: f64) -> f64 {
        if self.tau == 0.0 {
            self.fprime0
        } else {
            self.fprime0 * (-lambda * self.tau).exp()
        }
    }

    /// `(e^mu + e^-mu)^2` through the hyperbolic cosine.
    #[inline]
    fn cosh_sq4(mu: f64) -> f64 {
        let c = mu.cosh();
        4.0 * c * c
    }

    #[inline]
    fn value(&self, lambda: f64, mu: f64, beta: f64) -> f64 {
        -(lambda + 2.0 * beta + self.gamma)
            + self.alpha * beta * Self::cosh_sq4(mu) / (lambda + self.odd_loss)
            + self.birth(lambda)
    }

    #[inline]
    fn d_lambda(&self, lambda: f64, mu: f64, beta: f64) -> f64 {
        let den = lambda + self.odd_loss;
        -1.0 - self.alpha * beta * Self::cosh_sq4(mu) / (den * den) - self.tau * self.birth(lambda)
    }

    #[inline]
    fn d_mu(&self, lambda: f64, mu: f64, beta: f64) -> f64 {
        // d/dmu (e^mu + e^-mu)^2 = 2 (e^{2mu} - e^{-2mu}) = 4 sinh(2 mu)
        4.0 * self.alpha * beta * (2.0 * mu).sinh() / (lambda + self.odd_loss)
    }

    #[inline]
    fn d_beta(&self, lambda: f64, mu: f64) -> f64 {
        -2.0 + self.alpha * Self::cosh_sq4(mu) / (lambda + self.odd_loss)
    }

    fn lambda_of_mu(&self, mu: f64, beta: f64) -> Result<f64> {
        let at_zero = self.value(0.0, mu, beta);
        if !(at_zero > 0.0) {
            return Err(Error::NonKpp { value: at_zero });
        }
        let f = |l: f64| self.value(l, mu, beta);
        let hi = expand_upper(f, 0.0, at_zero.max(1.0), "lambda(mu)")?;
        newton_decreasing(f, |l| self.d_lambda(l, mu, beta), 0.0, hi, "lambda(mu)")
    }

    /// `d/dmu (lambda(mu) / mu)`, from implicit differentiation of `F = 0`.
    fn speed_slope(&self, mu: f64, lambda: f64, beta: f64) -> f64 {
        let dl = -self.d_mu(lambda, mu, beta) / self.d_lambda(lambda, mu, beta);
        (mu * dl - lambda) / (mu * mu)
    }
}

/// `F(lambda, mu, beta)`. Only `beta` is taken from the argument, not from `p`.
pub fn dispersion_f(lambda: f64, mu: f64, beta: f64, p: &ModelParams, f: &BirthLaw) -> f64 {
    Relation::new(p, f).value(lambda, mu, beta)
}

/// Partial derivatives `(dF/dlambda, dF/dmu, dF/dbeta)`.
pub fn dispersion_gradient(
    lambda: f64,
    mu: f64,
    beta: f64,
    p: &ModelParams,
    f: &BirthLaw,
) -> (f64, f64, f64) {
    let r = Relation::new(p, f);
    (
        r.d_lambda(lambda, mu, beta),
        r.d_mu(lambda, mu, beta),
        r.d_beta(lambda, mu),
    )
}

/// The positive root `lambda(mu)` of `F(., mu, beta)`.
pub fn lambda_of_mu(mu: f64, beta: f64, p: &ModelParams, f: &BirthLaw) -> Result<f64> {
    if !(mu >= 0.0) {
        return Err(Error::InvalidParameter {
            name: "mu",
            value: mu,
            reason: "must be non-negative",
        });
    }
    Relation::new(p, f).lambda_of_mu(mu, beta)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DispersionResult {
    pub c_star: f64,
    pub mu_star: f64,
    pub lambda_at_min: f64,
    /// `|F(c* mu*, mu*, beta)|`.
    pub residual_f: f64,
    /// `|d/dmu (lambda(mu)/mu)|` at `mu*`.
    pub residual_stationarity: f64,
    /// The grid scan saw more than one local minimum of `lambda(mu)/mu`;
    /// the global one is returned.
    pub multiple_minima: bool,
}

/// Spreading speed `c* = min_{mu > 0} lambda(mu)/mu` for dispersal rate `beta`.
pub fn spreading_speed(beta: f64, p: &ModelParams, f: &BirthLaw) -> Result<DispersionResult> {
    let p = p.with_beta(beta);
    p.validate()?;
    f.validate()?;
    let b0 = beta0(&p, f)?;
    if !(beta < b0) {
        return Err(Error::BetaOutOfRange { beta, beta0: b0 });
    }
    let rel = Relation::new(&p, f);
    let speed = |mu: f64| rel.lambda_of_mu(mu, beta).map(|l| l / mu);

    let (mut lo, mut hi) = (MU_MIN, MU_MAX);
    let (grid, values, k) = loop {
        let grid = log_grid(lo, hi, MU_GRID);
        let values = grid.iter().map(|&m| speed(m)).collect::<Result<Vec<_>>>()?;
        let k = argmin(&values);
        if k == 0 && lo > 1e-12 {
            // minimiser below the grid: only happens very close to beta0
            hi = grid[1];
            lo *= 1e-3;
            continue;
        }
        if k == values.len() - 1 {
            if hi < 700.0 {
                lo = grid[k - 1];
                hi = (hi * 2.0).min(700.0);
                continue;
            }
            return Err(Error::NoConvergence {
                what: "mu search",
                iterations: MU_GRID,
            });
        }
        break (grid, values, k);
    };

    let multiple_minima = (1..values.len() - 1)
        .filter(|&i| values[i] <= values[i - 1] && values[i] <= values[i + 1])
        .filter(|&i| values[i] - values[k] > 1e-6)
        .count()
        > 0;

    let (a, b) = (grid[k - 1], grid[k + 1]);
    let (mut mu_star, _) = golden_section(
        |m| speed(m).unwrap_or(f64::INFINITY),
        a,
        b,
        MU_XTOL,
    );

    // polish on the first-order condition mu lambda'(mu) = lambda(mu)
    let slope = |m: f64| match rel.lambda_of_mu(m, beta) {
        Ok(l) => rel.speed_slope(m, l, beta),
        Err(_) => f64::NAN,
    };
    if let Ok(root) = bisect(slope, a, b, 0.0, "speed stationarity") {
        // the minimum is flat: speeds agree to rounding unless the root is a
        // different stationary point
        if speed(root)? <= speed(mu_star)? * (1.0 + 1e-12) {
            mu_star = root;
        }
    }

    let lambda = rel.lambda_of_mu(mu_star, beta)?;
    let c_star = lambda / mu_star;
    Ok(DispersionResult {
        c_star,
        mu_star,
        lambda_at_min: lambda,
        residual_f: rel.value(c_star * mu_star, mu_star, beta).abs(),
        residual_stationarity: rel.speed_slope(mu_star, lambda, beta).abs(),
        multiple_minima,
    })
}

fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

fn argmin(values: &[f64]) -> usize {
    values
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |(bi, bv), (i, &v)| if v < bv { (i, v) } else { (bi, bv) })
        .0
}

/// Positive root of `-(lambda + gamma) + f'(0) e^(-lambda tau) = 0`.
pub fn lambda_star(p: &ModelParams, f: &BirthLaw) -> Result<f64> {
    let fp0 = f.slope_at_zero();
    if !(fp0 > p.gamma) {
        return Err(Error::NonInvadable {
            fprime0: fp0,
            gamma: p.gamma,
        });
    }
    let top = fp0 - p.gamma;
    if p.tau == 0.0 {
        return Ok(top);
    }
    let g = |l: f64| -(l + p.gamma) + fp0 * (-l * p.tau).exp();
    bisect(g, 0.0, top, 0.0, "lambda*")
}

/// `h(mu) = mu (e^mu - e^-mu)`, strictly increasing on `mu >= 0`.
pub fn h_eval(mu: f64) -> Result<f64> {
    if !(mu >= 0.0) {
        return Err(Error::InvalidParameter {
            name: "mu",
            value: mu,
            reason: "h is only inverted on mu >= 0",
        });
    }
    Ok(2.0 * mu * mu.sinh())
}

pub fn h_inverse(y: f64) -> Result<f64> {
    if !(y >= 0.0 && y.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "y",
            value: y,
            reason: "h^-1 is defined for finite y >= 0",
        });
    }
    if y == 0.0 {
        return Ok(0.0);
    }
    let g = |m: f64| y - 2.0 * m * m.sinh();
    let hi = expand_upper(g, 0.0, 1.0, "h inverse")?;
    bisect(g, 0.0, hi, 0.0, "h inverse")
}

/// `C(lambda, beta) = lambda / sqrt(2 alpha (lambda + 2 alpha + eta))
///   + lambda (1 + tau f'(0) e^(-lambda tau)) sqrt(lambda + 2 alpha + eta) / (beta sqrt(8 alpha))`.
pub fn c_coefficient(lambda: f64, beta: f64, p: &ModelParams, f: &BirthLaw) -> Result<f64> {
    if !(beta > 0.0) {
        return Err(Error::InvalidParameter {
            name: "beta",
            value: beta,
            reason: "must be positive",
        });
    }
    let s = lambda + 2.0 * p.alpha + p.eta;
    let delay = 1.0 + p.tau * f.slope_at_zero() * (-lambda * p.tau).exp();
    Ok(lambda / (2.0 * p.alpha * s).sqrt() + lambda * delay * s.sqrt() / (beta * (8.0 * p.alpha).sqrt()))
}

/// Decay rate `arccosh(sqrt((lambda + 2 alpha + eta) / (2 alpha)))` of the fastest wave.
pub fn mu_bar(lambda: f64, p: &ModelParams) -> f64 {
    ((lambda + 2.0 * p.alpha + p.eta) / (2.0 * p.alpha)).sqrt().acosh()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OptimalDispersal {
    pub beta1: f64,
    pub beta0: f64,
    pub lambda_star: f64,
    pub mu_bar: f64,
    pub c_max: f64,
    /// `|G(beta1)|` with `G(beta) = h^-1(C(lambda*, beta)) - mu_bar`.
    pub residual_g: f64,
}

/// The dispersal rate `beta1 in (0, beta0)` that maximises the spreading speed.
pub fn optimal_beta(p: &ModelParams, f: &BirthLaw) -> Result<OptimalDispersal> {
    p.validate()?;
    f.validate()?;
    let ls = lambda_star(p, f)?;
    let mb = mu_bar(ls, p);
    let b0 = beta0(p, f)?;
    let g = |beta: f64| match c_coefficient(ls, beta, p, f).and_then(h_inverse) {
        Ok(m) => m - mb,
        Err(_) => f64::NAN,
    };
    let eps = 1e-6 * b0;
    let beta1 = bisect(g, eps, b0 - eps, 0.0, "optimal beta equation")?;
    Ok(OptimalDispersal {
        beta1,
        beta0: b0,
        lambda_star: ls,
        mu_bar: mb,
        c_max: ls / mb,
        residual_g: g(beta1).abs(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepParameter {
    #[serde(rename = "beta")]
    Beta,
    #[serde(rename = "eta")]
    Eta,
    #[serde(rename = "fprime0")]
    FPrime0,
}

impl SweepParameter {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Beta => "beta",
            Self::Eta => "eta",
            Self::FPrime0 => "fprime0",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Regime {
    KppOk,
    BetaOutOfRange,
    NoPositiveRoot,
}

impl Regime {
    pub fn flag(&self) -> &'static str {
        match self {
            Self::KppOk => "KPP_OK",
            Self::BetaOutOfRange => "BETA_OUT_OF_RANGE",
            Self::NoPositiveRoot => "NO_POSITIVE_ROOT",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub value: f64,
    pub c_star: Option<f64>,
    pub mu_star: Option<f64>,
    pub regime: Regime,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepTable {
    pub parameter: SweepParameter,
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    /// Speeds of the rows in the KPP regime, in grid order.
    pub fn speeds(&self) -> Vec<f64> {
        self.rows.iter().filter_map(|r| r.c_star).collect()
    }
}

/// Spreading speed along a one-parameter grid. Points outside the
/// spreading regime are kept and flagged; output order follows the grid.
pub fn sweep(
    parameter: SweepParameter,
    grid: &[f64],
    p: &ModelParams,
    f: &BirthLaw,
) -> Result<SweepTable> {
    if grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let rows = grid
        .par_iter()
        .map(|&value| {
            let (pp, ff) = match parameter {
                SweepParameter::Beta => (p.with_beta(value), *f),
                SweepParameter::Eta => (p.with_eta(value), *f),
                SweepParameter::FPrime0 => (*p, f.with_slope_at_zero(value)),
            };
            sweep_point(value, &pp, &ff)
        })
        .collect();
    Ok(SweepTable { parameter, rows })
}

fn sweep_point(value: f64, p: &ModelParams, f: &BirthLaw) -> SweepRow {
    let flagged = |regime| SweepRow {
        value,
        c_star: None,
        mu_star: None,
        regime,
    };
    if p.validate().is_err() || f.validate().is_err() {
        return flagged(Regime::BetaOutOfRange);
    }
    let b0 = match beta0(p, f) {
        Ok(b0) => b0,
        Err(_) => return flagged(Regime::NoPositiveRoot),
    };
    if !(p.beta < b0) {
        return flagged(Regime::BetaOutOfRange);
    }
    match spreading_speed(p.beta, p, f) {
        Ok(r) => SweepRow {
            value,
            c_star: Some(r.c_star),
            mu_star: Some(r.mu_star),
            regime: Regime::KppOk,
        },
        Err(Error::BetaOutOfRange { .. }) => flagged(Regime::BetaOutOfRange),
        Err(_) => flagged(Regime::NoPositiveRoot),
    }
}
