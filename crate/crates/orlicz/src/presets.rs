//! The built-in scenarios.

use orlicz_core::function_spaces::{MeshDescriptor, Shape};
use orlicz_core::minimizer::{ContinuationSchedule, SolverConfig};
use orlicz_core::phi::{Ball, PhiSpec, SpatialField};

use crate::config::{CaccioppoliSpec, EnvelopeSpec, ScenarioConfig, Shift, VerifySpec};

pub const NAMES: [&str; 3] = ["var-exp-example", "double-phase-corollary", "radial-oracle"];

pub fn lookup(name: &str) -> Option<ScenarioConfig> {
    match name {
        "var-exp-example" => Some(var_exp_example()),
        "double-phase-corollary" => Some(double_phase_corollary()),
        "radial-oracle" => Some(radial_oracle()),
        _ => None,
    }
}

fn origin_balls() -> Vec<Ball> {
    [0.25, 1.0 / 16.0, 1.0 / 64.0]
        .into_iter()
        .map(|r| Ball::new([0.0, 0.0], r))
        .collect()
}

/// `t^{p(x)}` with `p(x) = 4 ln(e/|x|)` on the unit disk, `f = x₁ + 2`.
pub fn var_exp_example() -> ScenarioConfig {
    ScenarioConfig {
        name: "var-exp-example".into(),
        mesh: MeshDescriptor {
            shape: Shape::unit_disk(),
            h: 1.0 / 32.0,
        },
        phi: PhiSpec::variable_exponent(SpatialField::log_exponent(2.0)),
        boundary: SpatialField::affine([1.0, 0.0], 2.0),
        exact: None,
        envelope: EnvelopeSpec {
            p: 4.0,
            q: f64::INFINITY,
            a1_balls: origin_balls(),
            a1_k: 1.0,
        },
        solver: SolverConfig::default(),
        schedule: Some(ContinuationSchedule::default()),
        verify: VerifySpec {
            radii: vec![0.125, 0.0625],
            shift: Shift::Radius,
            ..VerifySpec::default()
        },
        out_dir: "out".into(),
    }
}

/// `t³ + |x| t^{3.5}` on the unit disk, `f = x₁ + 2`.
pub fn double_phase_corollary() -> ScenarioConfig {
    ScenarioConfig {
        name: "double-phase-corollary".into(),
        mesh: MeshDescriptor {
            shape: Shape::unit_disk(),
            h: 1.0 / 32.0,
        },
        phi: PhiSpec::double_phase(3.0, 3.5, SpatialField::radial(1.0, 1.0)),
        boundary: SpatialField::affine([1.0, 0.0], 2.0),
        exact: None,
        envelope: EnvelopeSpec {
            p: 3.0,
            q: 3.5,
            a1_balls: origin_balls(),
            a1_k: 1.0,
        },
        solver: SolverConfig::default(),
        schedule: Some(ContinuationSchedule::default()),
        verify: VerifySpec {
            radii: vec![0.125, 0.0625],
            shift: Shift::Zero,
            caccioppoli: Some(CaccioppoliSpec {
                sigma: 0.5,
                grid_nodes: 512,
            }),
            ..VerifySpec::default()
        },
        out_dir: "out".into(),
    }
}

/// `t⁴` on the annulus `1/4 ≤ |x| ≤ 1` with `f = |x|^{2/3}`, which is also
/// the exact minimizer.
pub fn radial_oracle() -> ScenarioConfig {
    let f = SpatialField::radial(1.0, 2.0 / 3.0);
    ScenarioConfig {
        name: "radial-oracle".into(),
        mesh: MeshDescriptor {
            shape: Shape::Annulus {
                center: [0.0, 0.0],
                inner: 0.25,
                outer: 1.0,
            },
            h: 1.0 / 64.0,
        },
        phi: PhiSpec::power(4.0),
        boundary: f.clone(),
        exact: Some(f),
        envelope: EnvelopeSpec {
            p: 4.0,
            q: 4.0,
            a1_balls: vec![Ball::new([0.6, 0.0], 0.125)],
            a1_k: 1.0,
        },
        solver: SolverConfig::default(),
        schedule: None,
        verify: VerifySpec {
            center: [0.6, 0.0],
            radii: vec![0.125],
            shift: Shift::Zero,
            caccioppoli: Some(CaccioppoliSpec {
                sigma: 0.5,
                grid_nodes: 512,
            }),
            ..VerifySpec::default()
        },
        out_dir: "out".into(),
    }
}
