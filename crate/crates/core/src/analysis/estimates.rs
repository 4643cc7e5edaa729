use alloc::collections::BTreeSet;
use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::function_spaces::{gradient_field, ScalarField, TriangulatedDomain};
use crate::math;
use crate::phi::Ball;
use crate::{Error, Point, Result};

const RADII: usize = 32;
const ANGLES: usize = 128;
const MIN_CIRCLE_NODES: usize = 64;

/// `max_{B_r}(u + shift) / min_{B_r}(u + shift)` over the vertices in the
/// closed ball.
pub fn harnack_quotient(
    domain: &TriangulatedDomain,
    u: &ScalarField,
    center: Point,
    r: f64,
    shift: f64,
) -> Result<f64> {
    u.check(domain)?;
    if !(r > 0.0) || !(shift >= 0.0) {
        return Err(Error::InvalidParameter(format!("harnack needs r > 0, shift >= 0, got {r}, {shift}")));
    }
    let verts = domain.vertices_in_ball(&Ball::new(center, r));
    if verts.is_empty() {
        return Err(Error::InvalidParameter(format!("no vertex within {r} of {center:?}")));
    }
    let mut hi = f64::NEG_INFINITY;
    let mut lo = f64::INFINITY;
    for v in verts {
        let w = u.values[v] + shift;
        if !(w > 0.0) {
            return Err(Error::NonPositive { vertex: v, value: w });
        }
        hi = hi.max(w);
        lo = lo.min(w);
    }
    Ok(hi / lo)
}

/// `∫_B |∇ log w|^exponent` with the P1 gradient of the vertexwise logarithm;
/// triangles crossing the sphere count with their area fraction inside.
pub fn bloch_integral(domain: &TriangulatedDomain, w: &ScalarField, ball: &Ball, exponent: f64) -> Result<f64> {
    w.check(domain)?;
    if !(exponent >= 1.0) {
        return Err(Error::InvalidParameter(format!("bloch exponent {exponent} < 1")));
    }
    let weights = domain.ball_weights(ball);
    let mut needed = alloc::vec![false; domain.num_vertices()];
    for (t, f) in domain.triangles().iter().zip(&weights) {
        if *f > 0.0 {
            t.iter().for_each(|v| needed[*v] = true);
        }
    }
    for (v, n) in needed.iter().enumerate() {
        if *n && !(w.values[v] > 0.0) {
            return Err(Error::NonPositive { vertex: v, value: w.values[v] });
        }
    }
    // logarithms of ratios within each triangle, so that w ↦ 2^k w leaves
    // every gradient unchanged bit for bit
    let mut terms = Vec::with_capacity(weights.len());
    for (k, (tri, f)) in domain.triangles().iter().zip(&weights).enumerate() {
        if *f <= 0.0 {
            continue;
        }
        let sg = domain.shape_gradients(k);
        let w0 = w.values[tri[0]];
        let l1 = math::ln(w.values[tri[1]] / w0);
        let l2 = math::ln(w.values[tri[2]] / w0);
        let g = [l1 * sg[1][0] + l2 * sg[2][0], l1 * sg[1][1] + l2 * sg[2][1]];
        terms.push(f * domain.areas()[k] * math::pow(math::hypot(g[0], g[1]), exponent));
    }
    Ok(math::tree_sum(&terms))
}

/// Oscillation integrals on the annulus `r < R < 2r` around `center`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OscillationOutcome {
    /// `Σ_j ΔR (osc_{∂B_{R_j}} v)^p` over midpoint radii.
    pub osc_integral: f64,
    /// `r^{p−1} ∫_{B_{2r}} |∇v|^p`.
    pub gradient_bound: f64,
    /// `r (osc_{B_r} v)^p` over the vertices in `B_r`.
    pub monotone_lhs: f64,
}

impl OscillationOutcome {
    /// `r (osc_{B_r} v)^p ≤ ∫_r^{2r} (osc_{∂B_R} v)^p dR`.
    pub fn monotone_step_holds(&self) -> bool {
        self.monotone_lhs <= self.osc_integral
    }

    /// The empirical trace constant `osc_integral / gradient_bound`.
    pub fn ratio(&self) -> f64 {
        self.osc_integral / self.gradient_bound
    }
}

/// Oscillation of the interpolated `v` on `32` circles between `r` and `2r`,
/// each sampled at `128` angles, against the `p`-energy on `B_{2r}`.
pub fn sphere_oscillation(
    domain: &TriangulatedDomain,
    v: &ScalarField,
    center: Point,
    r: f64,
    p: f64,
) -> Result<OscillationOutcome> {
    v.check(domain)?;
    if !(r > 0.0) || !(p > 1.0) {
        return Err(Error::InvalidParameter(format!("oscillation needs r > 0 and p > 1, got {r}, {p}")));
    }
    let dr = r / RADII as f64;
    let mut terms = Vec::with_capacity(RADII);
    for j in 0..RADII {
        let radius = r + (j as f64 + 0.5) * dr;
        let mut nodes = BTreeSet::new();
        let mut hi = f64::NEG_INFINITY;
        let mut lo = f64::INFINITY;
        for k in 0..ANGLES {
            let a = 2.0 * PI * k as f64 / ANGLES as f64;
            let x = [center[0] + radius * math::cos(a), center[1] + radius * math::sin(a)];
            let (t, l) = domain.locate(x).ok_or(Error::Domain {
                x,
                reason: "circle leaves the mesh",
            })?;
            let tri = domain.triangles()[t];
            nodes.extend(tri);
            let v0 = v.values[tri[0]];
            let val = v0 + l[1] * (v.values[tri[1]] - v0) + l[2] * (v.values[tri[2]] - v0);
            hi = hi.max(val);
            lo = lo.min(val);
        }
        if nodes.len() < MIN_CIRCLE_NODES {
            return Err(Error::RefinementRequired(format!(
                "circle of radius {radius} meets only {} mesh nodes",
                nodes.len()
            )));
        }
        terms.push(dr * math::pow(hi - lo, p));
    }
    let osc_integral = math::tree_sum(&terms);

    let weights = domain.ball_weights(&Ball::new(center, 2.0 * r));
    let g = gradient_field(domain, v)?;
    let e: Vec<f64> = g
        .magnitudes()
        .iter()
        .zip(&weights)
        .zip(domain.areas())
        .map(|((m, f), a)| f * a * math::pow(*m, p))
        .collect();
    // n = 2
    let gradient_bound = math::pow(r, p - 1.0) * math::tree_sum(&e);

    let inner = domain.vertices_in_ball(&Ball::new(center, r));
    let (lo, hi) = inner.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), i| {
        (lo.min(v.values[*i]), hi.max(v.values[*i]))
    });
    let osc = if inner.is_empty() { 0.0 } else { hi - lo };
    Ok(OscillationOutcome {
        osc_integral,
        gradient_bound,
        monotone_lhs: r * math::pow(osc, p),
    })
}
