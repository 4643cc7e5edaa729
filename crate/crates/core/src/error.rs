use alloc::string::String;
use core::fmt;

use crate::Point;

/// Failures raised by the library.
///
/// Condition checkers report counterexamples through dedicated variants that
/// carry the witness.
#[derive(Clone, Debug, PartialEq)]
pub enum Error {
    /// A point at which a growth function or field is not defined.
    Domain { x: Point, reason: &'static str },
    /// A sampled growth function was evaluated above its grid.
    Extrapolation { t: f64, t_max: f64 },
    /// The growth function is `+∞` on a neighbourhood of `t`.
    InfiniteDerivative { t: f64 },
    /// A parameter is outside its admissible range.
    InvalidParameter(String),
    /// `φ(x,s)/s^exponent` violates almost monotonicity by more than the cap.
    GrowthCapExceeded {
        condition: GrowthCondition,
        x: Point,
        s: f64,
        t: f64,
        required: f64,
        cap: f64,
    },
    /// No β in the candidate sequence satisfies (A0).
    A0Failure { x: Point, beta_floor: f64 },
    /// No β in the candidate sequence satisfies (A1) on the ball.
    A1Failure { center: Point, radius: f64, t: f64, beta_floor: f64 },
    /// The ψ grid is too coarse for the two-sided bound to hold.
    RefinementRequired(String),
    /// The truncation source is not convex.
    NonConvexSource,
    /// The derivative crossover in the truncation is not unique.
    AmbiguousCrossover { x: Point, sign_changes: usize },
    /// A vertex field does not match the mesh.
    FieldLength { expected: usize, got: usize },
    /// Mesh construction failed.
    InvalidMesh(String),
    /// No finite λ gives modular ≤ 1.
    LuxemburgDivergence,
    /// A field disagrees with the problem's boundary data.
    BoundaryMismatch { vertex: usize, expected: f64, got: f64 },
    /// The boundary extension has infinite energy.
    InfiniteEnergy,
    /// A field that must be positive is not.
    NonPositive { vertex: usize, value: f64 },
    /// A test field does not vanish on the boundary.
    TestNotCompact { vertex: usize },
    /// A cut-off function violates its bounds.
    InvalidCutoff(String),
}

/// The growth condition a witness refers to.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum GrowthCondition {
    AlmostIncreasing(f64),
    AlmostDecreasing(f64),
}

pub type Result<T> = core::result::Result<T, Error>;

impl fmt::Display for GrowthCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GrowthCondition::AlmostIncreasing(p) => write!(f, "(aInc)_{p}"),
            GrowthCondition::AlmostDecreasing(q) => write!(f, "(aDec)_{q}"),
        }
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Domain { x, reason } => {
                write!(f, "point ({}, {}) outside domain: {reason}", x[0], x[1])
            }
            Error::Extrapolation { t, t_max } => {
                write!(f, "t = {t} lies above the sampled grid (max {t_max})")
            }
            Error::InfiniteDerivative { t } => {
                write!(f, "growth function is infinite near t = {t}")
            }
            Error::InvalidParameter(msg) => write!(f, "invalid parameter: {msg}"),
            Error::GrowthCapExceeded {
                condition,
                x,
                s,
                t,
                required,
                cap,
            } => write!(
                f,
                "{condition} fails at x = ({}, {}), s = {s}, t = {t}: needs L = {required} > cap {cap}",
                x[0], x[1]
            ),
            Error::A0Failure { x, beta_floor } => write!(
                f,
                "(A0) fails at x = ({}, {}) for every beta >= {beta_floor}",
                x[0], x[1]
            ),
            Error::A1Failure {
                center,
                radius,
                t,
                beta_floor,
            } => write!(
                f,
                "(A1) fails on B(({}, {}), {radius}) at t = {t} for every beta >= {beta_floor}",
                center[0], center[1]
            ),
            Error::RefinementRequired(msg) => write!(f, "refinement required: {msg}"),
            Error::NonConvexSource => write!(f, "truncation requires a convex growth function"),
            Error::AmbiguousCrossover { x, sign_changes } => write!(
                f,
                "derivative crossover at x = ({}, {}) changes sign {sign_changes} times",
                x[0], x[1]
            ),
            Error::FieldLength { expected, got } => {
                write!(f, "field has {got} values, mesh has {expected}")
            }
            Error::InvalidMesh(msg) => write!(f, "invalid mesh: {msg}"),
            Error::LuxemburgDivergence => {
                write!(f, "no finite scaling brings the modular below 1")
            }
            Error::BoundaryMismatch {
                vertex,
                expected,
                got,
            } => write!(
                f,
                "boundary vertex {vertex} has value {got}, boundary data is {expected}"
            ),
            Error::InfiniteEnergy => write!(f, "boundary extension has infinite energy"),
            Error::NonPositive { vertex, value } => {
                write!(f, "vertex {vertex} has non-positive value {value}")
            }
            Error::TestNotCompact { vertex } => {
                write!(f, "test field does not vanish at boundary vertex {vertex}")
            }
            Error::InvalidCutoff(msg) => write!(f, "invalid cut-off: {msg}"),
        }
    }
}

impl core::error::Error for Error {}
