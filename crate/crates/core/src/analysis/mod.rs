//! Discrete versions of the regularity estimates: Harnack quotients, Bloch
//! integrals, Caccioppoli sides, first variations, Lebesgue monotonicity and
//! oscillation on circles.

mod caccioppoli;
mod estimates;
mod monotonicity;
mod report;
mod variational;

pub use caccioppoli::{caccioppoli_check, caccioppoli_constant, radial_cutoff, CaccioppoliOutcome, CaccioppoliParams};
pub use estimates::{bloch_integral, harnack_quotient, sphere_oscillation, OscillationOutcome};
pub use monotonicity::{monotonicity_check, ExtremumKind, MonotonicityOutcome, MonotonicityWitness};
pub use report::{Slack, VerificationReport};
pub use variational::{random_bump_tests, variational_residual, ResidualOutcome};
