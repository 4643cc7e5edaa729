use alloc::vec::Vec;

use super::fields::{GradientField, ScalarField};
use super::mesh::TriangulatedDomain;
use crate::math;
use crate::phi::{LocalPhi, PhiSpec};
use crate::{Error, Result};

/// Relative tolerance of the Luxemburg bisection.
pub const LUXEMBURG_RTOL: f64 = 1e-10;
const MAX_BISECTIONS: usize = 200;

/// A field to integrate: triangle gradients at centroids, or vertex values
/// with lumped mass.
#[derive(Clone, Copy, Debug)]
pub enum FieldRef<'a> {
    Gradient(&'a GradientField),
    Scalar(&'a ScalarField),
}

impl<'a> From<&'a GradientField> for FieldRef<'a> {
    fn from(g: &'a GradientField) -> Self {
        FieldRef::Gradient(g)
    }
}

impl<'a> From<&'a ScalarField> for FieldRef<'a> {
    fn from(u: &'a ScalarField) -> Self {
        FieldRef::Scalar(u)
    }
}

/// `φ` frozen at the quadrature points of a field, with their weights.
#[derive(Clone, Debug)]
pub struct Quadrature<'a> {
    pub locals: Vec<LocalPhi<'a>>,
    pub weights: Vec<f64>,
    pub magnitudes: Vec<f64>,
}

impl<'a> Quadrature<'a> {
    pub fn new(phi: &'a PhiSpec, domain: &TriangulatedDomain, field: FieldRef<'_>) -> Result<Self> {
        let (points, weights, magnitudes) = match field {
            FieldRef::Gradient(g) => {
                if g.values.len() != domain.num_triangles() {
                    return Err(Error::FieldLength {
                        expected: domain.num_triangles(),
                        got: g.values.len(),
                    });
                }
                (domain.centroids(), domain.areas().to_vec(), g.magnitudes())
            }
            FieldRef::Scalar(u) => {
                u.check(domain)?;
                (
                    domain.vertices(),
                    domain.lumped_mass().to_vec(),
                    u.values.iter().map(|v| math::abs(*v)).collect(),
                )
            }
        };
        let locals = points.iter().map(|x| phi.at(*x)).collect::<Result<Vec<_>>>()?;
        Ok(Quadrature {
            locals,
            weights,
            magnitudes,
        })
    }

    /// `Σ w_i φ(x_i, |g_i| / λ)`.
    pub fn modular_scaled(&self, lambda: f64) -> Result<f64> {
        self.reduce(lambda, |l, t| l.eval(t))
    }

    /// `Σ w_i φ*(x_i, |g_i| / λ)`.
    pub fn conjugate_modular_scaled(&self, lambda: f64) -> Result<f64> {
        self.reduce(lambda, |l, t| l.conjugate(t))
    }

    fn reduce(&self, lambda: f64, f: impl Fn(&LocalPhi<'a>, f64) -> Result<f64>) -> Result<f64> {
        let mut terms = Vec::with_capacity(self.weights.len());
        for ((l, w), m) in self.locals.iter().zip(&self.weights).zip(&self.magnitudes) {
            let v = f(l, m / lambda)?;
            if v == f64::INFINITY {
                return Ok(f64::INFINITY);
            }
            terms.push(w * v);
        }
        Ok(math::tree_sum(&terms))
    }

    fn luxemburg(&self, modular: impl Fn(f64) -> Result<f64>) -> Result<f64> {
        if self.magnitudes.iter().all(|m| *m == 0.0) {
            return Ok(0.0);
        }
        let mut hi = 1.0;
        let mut n = 0;
        while modular(hi)? > 1.0 {
            hi *= 2.0;
            n += 1;
            if n > 1000 || !hi.is_finite() {
                return Err(Error::LuxemburgDivergence);
            }
        }
        let mut lo = hi;
        n = 0;
        while modular(lo)? <= 1.0 {
            lo *= 0.5;
            n += 1;
            if n > 1000 || lo == 0.0 {
                return Ok(0.0);
            }
        }
        if lo == hi {
            lo = 0.5 * hi;
        }
        for _ in 0..MAX_BISECTIONS {
            if hi - lo <= LUXEMBURG_RTOL * hi {
                break;
            }
            let mid = 0.5 * (lo + hi);
            if modular(mid)? <= 1.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(hi)
    }
}

/// `ρ_φ(g) = ∫ φ(x, |g|) dx` by centroid quadrature for gradients and
/// lumped mass for vertex fields. `+∞` propagates.
pub fn modular<'f>(
    phi: &PhiSpec,
    domain: &TriangulatedDomain,
    field: impl Into<FieldRef<'f>>,
) -> Result<f64> {
    Quadrature::new(phi, domain, field.into())?.modular_scaled(1.0)
}

/// `inf{λ > 0 : ρ_φ(g/λ) ≤ 1}` by bisection.
pub fn luxemburg_norm<'f>(
    phi: &PhiSpec,
    domain: &TriangulatedDomain,
    field: impl Into<FieldRef<'f>>,
) -> Result<f64> {
    let q = Quadrature::new(phi, domain, field.into())?;
    q.luxemburg(|l| q.modular_scaled(l))
}

/// The Luxemburg norm with respect to the conjugate `φ*`.
pub fn conjugate_luxemburg_norm<'f>(
    phi: &PhiSpec,
    domain: &TriangulatedDomain,
    field: impl Into<FieldRef<'f>>,
) -> Result<f64> {
    let q = Quadrature::new(phi, domain, field.into())?;
    q.luxemburg(|l| q.conjugate_modular_scaled(l))
}
