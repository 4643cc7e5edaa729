//! Growth functions `φ(x, t)` and their structural conditions.

pub mod conditions;
mod field;
mod local;
mod spec;

pub use conditions::{
    check_a0, check_a1, check_growth, A1Outcome, Ball, CertifyOptions, GrowthConstants,
    GrowthEnvelope, GrowthWitness, LocalizedSet, Omega, Region, SamplePlan, BETA_FLOOR,
};
pub use field::SpatialField;
pub use local::{LocalPhi, LocalTruncation};
pub use spec::{Construction, PhiSpec, SampledPhi, TruncatedPhi};
