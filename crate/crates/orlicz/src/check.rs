//! Certification of the scenario's growth function.

use orlicz_core::phi::{
    check_a0, check_a1, check_growth, A1Outcome, Ball, CertifyOptions, GrowthConstants, GrowthEnvelope, Omega, Region,
};
use serde::Serialize;

use crate::config::ScenarioConfig;
use crate::{io, output_path, Outcome, RunError, Status};

const GROWTH_CAP: f64 = 1e3;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct A1Entry {
    pub ball: Ball,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub outcome: Option<A1Outcome>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckReport {
    pub scenario: String,
    pub config_sha256: String,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub growth: Option<GrowthConstants>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta_a0: Option<f64>,
    pub a1: Vec<A1Entry>,
    /// The certified envelope when every condition passed.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub envelope: Option<GrowthEnvelope>,
    /// Witnesses of failed conditions.
    pub failures: Vec<String>,
}

/// Runs every condition check; failures are collected, not returned early.
pub fn check(cfg: &ScenarioConfig) -> Result<CheckReport, RunError> {
    cfg.phi.validate()?;
    let region = Region::Shape(cfg.mesh.shape);
    let env = &cfg.envelope;
    let opts = CertifyOptions::default();
    let mut failures = Vec::new();
    let growth = match check_growth(&cfg.phi, &region, env.p, env.q, &opts.t_grid, GROWTH_CAP) {
        Ok(g) => Some(g),
        Err(e) => {
            failures.push(format!("growth: {e}"));
            None
        }
    };
    let beta_a0 = match check_a0(&cfg.phi, &region) {
        Ok(b) => Some(b),
        Err(e) => {
            failures.push(format!("A0: {e}"));
            None
        }
    };
    let mut a1 = Vec::new();
    for ball in &env.a1_balls {
        match check_a1(&cfg.phi, ball, env.a1_k, opts.band_samples, &Omega::Phi) {
            Ok(o) => a1.push(A1Entry {
                ball: *ball,
                outcome: Some(o),
                failure: None,
            }),
            Err(e) => {
                failures.push(format!("A1: {e}"));
                a1.push(A1Entry {
                    ball: *ball,
                    outcome: None,
                    failure: Some(e.to_string()),
                });
            }
        }
    }
    let envelope = match (growth, beta_a0, failures.is_empty()) {
        (Some(g), Some(b0), true) => {
            let beta_a1 = a1
                .iter()
                .filter_map(|e| e.outcome.map(|o| o.beta))
                .fold(1.0, f64::min);
            let e = GrowthEnvelope {
                p: env.p,
                q: env.q,
                l_p: g.l_p,
                l_q: g.l_q,
                beta_a0: b0,
                beta_a1,
                region,
            };
            match e.validate() {
                Ok(()) => Some(e),
                Err(err) => {
                    failures.push(format!("envelope: {err}"));
                    None
                }
            }
        }
        _ => None,
    };
    Ok(CheckReport {
        scenario: cfg.name.clone(),
        config_sha256: cfg.hash(),
        passed: failures.is_empty(),
        growth,
        beta_a0,
        a1,
        envelope,
        failures,
    })
}

/// The declared exponents with all constants set to 1, used when the
/// checks are overridden.
pub fn declared_envelope(cfg: &ScenarioConfig) -> GrowthEnvelope {
    GrowthEnvelope {
        q: cfg.envelope.q,
        ..GrowthEnvelope::power_law(cfg.envelope.p, Region::Shape(cfg.mesh.shape))
    }
}

/// Writes `<name>.check.json`; a failed condition gives exit code 4.
pub fn run_check(cfg: &ScenarioConfig) -> Result<Outcome, RunError> {
    cfg.validate()?;
    let report = check(cfg)?;
    let path = output_path(&cfg.out_dir, &cfg.name, "check.json");
    io::write_json(&path, &report)?;
    Ok(Outcome {
        status: if report.passed {
            Status::Success
        } else {
            Status::VerificationFailure
        },
        files: vec![path],
        messages: report.failures,
    })
}
