use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::function_spaces::{gradient_field, ScalarField, TriangulatedDomain};
use crate::math;
use crate::phi::PhiSpec;
use crate::{Error, Result};

/// The smallest first variation over a family of test fields.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidualOutcome {
    /// `min_h ∫ φ'_h(x,|∇u|)/|∇u| ∇u·∇h`.
    pub min_residual: f64,
    /// Index of the minimizing test.
    pub worst: usize,
    /// `∫ φ'_h(x,|∇u|) |∇h|` for that test, the size the residual is
    /// compared against.
    pub scale: f64,
    /// `min_h` of residual over scale.
    pub min_relative: f64,
}

impl ResidualOutcome {
    /// Every test has residual `≥ −tol · scale`.
    pub fn nonnegative(&self, tol: f64) -> bool {
        self.min_relative >= -tol
    }
}

/// First variations `∫ φ'_h(x,|∇u|)/|∇u| ∇u·∇h` for each test `h`, with
/// `φ'_h = φ'₊` where `∇u·∇h ≥ 0`, `φ'₋` elsewhere, and no contribution where
/// `∇u = 0`. Tests must vanish at boundary vertices.
pub fn variational_residual(
    phi: &PhiSpec,
    domain: &TriangulatedDomain,
    u: &ScalarField,
    tests: &[ScalarField],
) -> Result<ResidualOutcome> {
    if tests.is_empty() {
        return Err(Error::InvalidParameter("no test fields".into()));
    }
    let gu = gradient_field(domain, u)?;
    let locals = domain
        .centroids()
        .iter()
        .map(|x| phi.at(*x))
        .collect::<Result<Vec<_>>>()?;
    let mut best: Option<ResidualOutcome> = None;
    for (i, h) in tests.iter().enumerate() {
        h.check(domain)?;
        if let Some(v) = (0..h.len()).find(|v| domain.is_boundary(*v) && h.values[*v] != 0.0) {
            return Err(Error::TestNotCompact { vertex: v });
        }
        let gh = gradient_field(domain, h)?;
        let mut terms = Vec::with_capacity(gu.values.len());
        let mut sizes = Vec::with_capacity(gu.values.len());
        for (t, (a, b)) in gu.values.iter().zip(&gh.values).enumerate() {
            let m = math::hypot(a[0], a[1]);
            if m == 0.0 {
                continue;
            }
            let dot = a[0] * b[0] + a[1] * b[1];
            let (dm, dp) = locals[t].derivatives_ext(m)?;
            let d = if dot >= 0.0 { dp } else { dm };
            let area = domain.areas()[t];
            terms.push(area * d / m * dot);
            sizes.push(area * d * math::hypot(b[0], b[1]));
        }
        let r = math::tree_sum(&terms);
        let s = math::tree_sum(&sizes);
        let rel = if s > 0.0 { r / s } else { 0.0 };
        if best.map_or(true, |b| rel < b.min_relative) {
            best = Some(ResidualOutcome {
                min_residual: r,
                worst: i,
                scale: s,
                min_relative: rel,
            });
        }
    }
    let out = best.expect("tests are non-empty");
    Ok(out)
}

/// Random bumps `a (1 − |x − c|²/ρ²)₊²` with centres at interior vertices and
/// supports at least one mesh size away from the boundary.
pub fn random_bump_tests<R: Rng + ?Sized>(domain: &TriangulatedDomain, count: usize, rng: &mut R) -> Vec<ScalarField> {
    let shape = domain.shape();
    let h = domain.h();
    let candidates: Vec<usize> = domain
        .interior_vertices()
        .filter(|v| -shape.signed_distance(domain.vertices()[*v]) >= 4.0 * h)
        .collect();
    if candidates.is_empty() {
        return Vec::new();
    }
    (0..count)
        .map(|_| {
            let c = domain.vertices()[candidates[rng.gen_range(0..candidates.len())]];
            let room = -shape.signed_distance(c) - h;
            let rho = rng.gen_range(2.0 * h..=room.max(2.0 * h + f64::EPSILON));
            let amp = rng.gen_range(-1.0..1.0);
            ScalarField::from_fn(domain, |x| {
                let s = 1.0 - (math::dist(x, c) / rho) * (math::dist(x, c) / rho);
                if s > 0.0 { amp * s * s } else { 0.0 }
            })
        })
        .collect()
}
