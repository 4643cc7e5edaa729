use alloc::vec;
use alloc::vec::Vec;

use crate::function_spaces::{triangle_gradient, TriangulatedDomain};
use crate::math;
use crate::phi::{LocalPhi, PhiSpec};
use crate::Result;

/// The discrete energy `u ↦ Σ_T |T| φ(x_T, |∇u_T|)` with `φ` frozen at the
/// centroids.
#[derive(Clone, Debug)]
pub struct EnergyModel<'a> {
    pub(crate) domain: &'a TriangulatedDomain,
    pub(crate) locals: Vec<LocalPhi<'a>>,
    pub(crate) smoothing: f64,
}

/// Energy, per-triangle terms, gradient and Jacobi diagonal at one point.
#[derive(Clone, Debug)]
pub struct Evaluation {
    pub energy: f64,
    pub terms: Vec<f64>,
    /// `∂E/∂u_i`, zero at boundary vertices.
    pub gradient: Vec<f64>,
    /// `Σ_T |T| (φ'(t_T)/t_T) |∇λ_i|²`, the diagonal of the linearized
    /// stiffness, zero at boundary vertices.
    pub diagonal: Vec<f64>,
    /// Per-triangle secant weights `φ'(t_T)/t_T`.
    pub weights: Vec<f64>,
    /// Some triangle sits at a kink of `φ`; the left derivative was used.
    pub kinked: bool,
}

impl<'a> EnergyModel<'a> {
    pub fn new(phi: &'a PhiSpec, domain: &'a TriangulatedDomain) -> Result<Self> {
        let locals = domain
            .centroids()
            .iter()
            .map(|x| phi.at(*x))
            .collect::<Result<Vec<_>>>()?;
        Ok(EnergyModel {
            domain,
            locals,
            smoothing: 0.0,
        })
    }

    /// Evaluates `φ` at `√(|∇u|² + ε²)` instead of `|∇u|`.
    pub fn with_smoothing(mut self, eps: f64) -> Self {
        self.smoothing = eps;
        self
    }

    #[inline]
    fn magnitude(&self, g: [f64; 2]) -> f64 {
        if self.smoothing > 0.0 {
            math::sqrt(g[0] * g[0] + g[1] * g[1] + self.smoothing * self.smoothing)
        } else {
            math::hypot(g[0], g[1])
        }
    }

    pub fn terms(&self, u: &[f64]) -> Result<Vec<f64>> {
        let d = self.domain;
        let mut out = Vec::with_capacity(d.num_triangles());
        for (k, tri) in d.triangles().iter().enumerate() {
            let g = triangle_gradient(d, k, tri, u);
            let t = self.magnitude(g);
            out.push(d.areas()[k] * self.locals[k].eval(t)?);
        }
        Ok(out)
    }

    pub fn energy(&self, u: &[f64]) -> Result<f64> {
        let terms = self.terms(u)?;
        Ok(sum_ext(&terms))
    }

    /// `E(u + du) − E(u)` summed from per-triangle increments, accurate well
    /// below the rounding level of `E` itself.
    pub fn energy_change(&self, u: &[f64], du: &[f64]) -> Result<f64> {
        let d = self.domain;
        let mut terms = Vec::with_capacity(d.num_triangles());
        for (k, tri) in d.triangles().iter().enumerate() {
            let g0 = triangle_gradient(d, k, tri, u);
            let dg = triangle_gradient(d, k, tri, du);
            if dg == [0.0, 0.0] {
                continue;
            }
            let g1 = [g0[0] + dg[0], g0[1] + dg[1]];
            let (t0, t1) = (self.magnitude(g0), self.magnitude(g1));
            // t1² − t0² = dg·(2 g0 + dg)
            let dt = if t0 + t1 > 0.0 {
                (dg[0] * (2.0 * g0[0] + dg[0]) + dg[1] * (2.0 * g0[1] + dg[1])) / (t0 + t1)
            } else {
                0.0
            };
            let inc = self.locals[k].increment(t0, dt)?;
            if inc == f64::INFINITY {
                return Ok(inc);
            }
            terms.push(d.areas()[k] * inc);
        }
        Ok(math::tree_sum(&terms))
    }

    pub fn evaluate(&self, u: &[f64]) -> Result<Evaluation> {
        let d = self.domain;
        let nv = d.num_vertices();
        let mut terms = Vec::with_capacity(d.num_triangles());
        let mut gradient = vec![0.0; nv];
        let mut diagonal = vec![0.0; nv];
        let mut weights = Vec::with_capacity(d.num_triangles());
        let mut kinked = false;
        for (k, tri) in d.triangles().iter().enumerate() {
            let g = triangle_gradient(d, k, tri, u);
            let t = self.magnitude(g);
            let area = d.areas()[k];
            let (v, dm, dp) = self.locals[k].value_and_derivatives(t)?;
            terms.push(area * v);
            let sg = d.shape_gradients(k);
            if t == 0.0 {
                // zero flux; a small-magnitude curvature keeps the diagonal positive
                let w = tiny_weight(&self.locals[k])?;
                weights.push(w);
                for (i, v) in tri.iter().enumerate() {
                    diagonal[*v] += area * w * (sg[i][0] * sg[i][0] + sg[i][1] * sg[i][1]);
                }
                continue;
            }
            if dm != dp {
                kinked = true;
            }
            let w = dm / t;
            weights.push(w);
            for (i, v) in tri.iter().enumerate() {
                gradient[*v] += area * w * (g[0] * sg[i][0] + g[1] * sg[i][1]);
                diagonal[*v] += area * w * (sg[i][0] * sg[i][0] + sg[i][1] * sg[i][1]);
            }
        }
        for (i, b) in d.boundary_mask().iter().enumerate() {
            if *b {
                gradient[i] = 0.0;
                diagonal[i] = 0.0;
            }
        }
        let energy = sum_ext(&terms);
        Ok(Evaluation {
            energy,
            terms,
            gradient,
            diagonal,
            weights,
            kinked,
        })
    }
}

// φ'(ε)/ε at a small ε, a stand-in curvature for triangles with zero gradient
fn tiny_weight(l: &LocalPhi<'_>) -> Result<f64> {
    const EPS: f64 = 1e-8;
    let (_, r) = l.derivatives_ext(EPS)?;
    Ok(r / EPS)
}

pub(crate) fn sum_ext(terms: &[f64]) -> f64 {
    if terms.contains(&f64::INFINITY) {
        f64::INFINITY
    } else {
        math::tree_sum(terms)
    }
}
