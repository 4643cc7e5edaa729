use alloc::format;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::function_spaces::{gradient_field, ScalarField, Shape, TriangulatedDomain};
use crate::{Error, Result};

// tolerance in units of h times the local Lipschitz bound
const INTERPOLATION_SLACK: f64 = 0.5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExtremumKind {
    Max,
    Min,
}

/// An interior vertex beating the boundary layer of its subdomain.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityWitness {
    pub subdomain: usize,
    pub vertex: usize,
    pub value: f64,
    /// The boundary-layer extremum plus tolerance that `value` exceeds.
    pub bound: f64,
    pub kind: ExtremumKind,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityOutcome {
    pub passed: bool,
    pub witness: Option<MonotonicityWitness>,
    /// Tolerance used for each subdomain.
    pub tolerances: Vec<f64>,
}

/// Checks that `u` takes its extrema over each subdomain `D` on the layer of
/// vertices of triangles crossing `∂D`, up to `½ h` times the largest
/// gradient on triangles meeting `D`.
///
/// Every subdomain has to stay clear of the mesh boundary. The first
/// violation found, for the worst vertex, is reported.
pub fn monotonicity_check(
    domain: &TriangulatedDomain,
    u: &ScalarField,
    subdomains: &[Shape],
) -> Result<MonotonicityOutcome> {
    u.check(domain)?;
    let grad = gradient_field(domain, u)?.magnitudes();
    let mut tolerances = Vec::with_capacity(subdomains.len());
    let mut witness = None;
    for (s, sub) in subdomains.iter().enumerate() {
        let sd: Vec<f64> = domain.vertices().iter().map(|x| sub.signed_distance(*x)).collect();
        let nv = domain.num_vertices();
        let mut layer = alloc::vec![false; nv];
        let mut lip = 0.0f64;
        for (k, tri) in domain.triangles().iter().enumerate() {
            let inside = tri.iter().filter(|v| sd[**v] <= 0.0).count();
            if inside > 0 {
                lip = lip.max(grad[k]);
            }
            if inside > 0 && inside < 3 {
                for v in tri {
                    layer[*v] = true;
                }
            }
        }
        let members: Vec<usize> = (0..nv).filter(|v| sd[*v] <= 0.0 || layer[*v]).collect();
        if members.is_empty() || !layer.iter().any(|l| *l) {
            return Err(Error::InvalidParameter(format!("subdomain {s} does not cross the mesh")));
        }
        if let Some(v) = members.iter().find(|v| domain.is_boundary(**v)) {
            return Err(Error::InvalidParameter(format!(
                "subdomain {s} is not compactly inside the mesh: boundary vertex {v}"
            )));
        }
        let tol = INTERPOLATION_SLACK * domain.h() * lip;
        tolerances.push(tol);
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for v in members.iter().filter(|v| layer[**v]) {
            lo = lo.min(u.values[*v]);
            hi = hi.max(u.values[*v]);
        }
        if witness.is_some() {
            continue;
        }
        let interior = members.iter().copied().filter(|v| !layer[*v]);
        let mut worst: Option<(f64, MonotonicityWitness)> = None;
        for v in interior {
            let x = u.values[v];
            let over = [
                (x - (hi + tol), ExtremumKind::Max, hi + tol),
                ((lo - tol) - x, ExtremumKind::Min, lo - tol),
            ];
            for (excess, kind, bound) in over {
                if excess > 0.0 && worst.map_or(true, |w| excess > w.0) {
                    worst = Some((excess, MonotonicityWitness { subdomain: s, vertex: v, value: x, bound, kind }));
                }
            }
        }
        witness = worst.map(|w| w.1);
    }
    Ok(MonotonicityOutcome {
        passed: witness.is_none(),
        witness,
        tolerances,
    })
}
