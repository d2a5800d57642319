//! Invasion speeds of a stage-structured population on a lattice whose even
//! sites are good habitat and odd sites bad habitat.
//!
//! * [`model`]: parameters, birth laws, effective mortality, thresholds and the periodic equilibrium
//! * [`kernel`]: the hopping operators, closed-form matrix powers and the heat kernel `exp(tA)`
//! * [`dispersion`]: the dispersion relation, spreading speed and optimal dispersal rate
//! * [`simulator`]: method-of-steps integration of the delayed lattice system and front tracking

// `!(x > 0.0)` is used on purpose so that NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dispersion;
pub mod error;
pub mod kernel;
pub mod kernel_suite;
pub mod lattice;
pub mod model;
pub mod numeric;
pub mod simulator;

pub use dispersion::{
    dispersion_f, lambda_of_mu, lambda_star, optimal_beta, spreading_speed, sweep,
    DispersionResult, OptimalDispersal, Regime, SweepParameter, SweepRow, SweepTable,
};
pub use error::{Error, Result};
pub use lattice::SiteField;
pub use model::{beta0, big_gamma, eta0, steady_state, BirthKind, BirthLaw, ModelParams, SteadyState};
