use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::mesh::TriangulatedDomain;
use crate::math;
use crate::phi::SpatialField;
use crate::{Error, Point, Result};

/// Vertex values of a piecewise linear function.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ScalarField {
    pub values: Vec<f64>,
}

/// One constant gradient per triangle.
#[derive(Clone, Debug, PartialEq)]
pub struct GradientField {
    pub values: Vec<[f64; 2]>,
}

impl ScalarField {
    pub fn new(domain: &TriangulatedDomain, values: Vec<f64>) -> Result<Self> {
        if values.len() != domain.num_vertices() {
            return Err(Error::FieldLength {
                expected: domain.num_vertices(),
                got: values.len(),
            });
        }
        if let Some(v) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(alloc::format!(
                "vertex {v} has non-finite value {}",
                values[v]
            )));
        }
        Ok(ScalarField { values })
    }

    pub fn from_fn(domain: &TriangulatedDomain, f: impl Fn(Point) -> f64) -> Self {
        ScalarField {
            values: domain.vertices().iter().map(|x| f(*x)).collect(),
        }
    }

    pub fn from_spatial(domain: &TriangulatedDomain, field: &SpatialField) -> Self {
        Self::from_fn(domain, |x| field.value(x))
    }

    pub fn constant(domain: &TriangulatedDomain, c: f64) -> Self {
        ScalarField {
            values: alloc::vec![c; domain.num_vertices()],
        }
    }

    pub fn zeros(domain: &TriangulatedDomain) -> Self {
        Self::constant(domain, 0.0)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn check(&self, domain: &TriangulatedDomain) -> Result<()> {
        if self.values.len() != domain.num_vertices() {
            return Err(Error::FieldLength {
                expected: domain.num_vertices(),
                got: self.values.len(),
            });
        }
        Ok(())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        ScalarField {
            values: self.values.iter().map(|v| f(*v)).collect(),
        }
    }

    /// `a·self + b·other`.
    pub fn combine(&self, a: f64, other: &ScalarField, b: f64) -> Self {
        ScalarField {
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(x, y)| a * x + b * y)
                .collect(),
        }
    }

    pub fn sup_distance(&self, other: &ScalarField) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| math::abs(a - b))
            .fold(0.0, f64::max)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// The P1 interpolant at `x`, `None` outside the mesh.
    pub fn interpolate(&self, domain: &TriangulatedDomain, x: Point) -> Option<f64> {
        let (t, l) = domain.locate(x)?;
        let tri = domain.triangles()[t];
        let v0 = self.values[tri[0]];
        Some(v0 + l[1] * (self.values[tri[1]] - v0) + l[2] * (self.values[tri[2]] - v0))
    }
}

impl GradientField {
    pub fn magnitudes(&self) -> Vec<f64> {
        self.values.iter().map(|g| math::hypot(g[0], g[1])).collect()
    }

    pub fn scaled(&self, c: f64) -> Self {
        GradientField {
            values: self.values.iter().map(|g| [c * g[0], c * g[1]]).collect(),
        }
    }
}

/// Exact gradient of the P1 interpolant on every triangle.
pub fn gradient_field(domain: &TriangulatedDomain, u: &ScalarField) -> Result<GradientField> {
    u.check(domain)?;
    let values = domain
        .triangles()
        .iter()
        .enumerate()
        .map(|(k, t)| triangle_gradient(domain, k, t, &u.values))
        .collect();
    Ok(GradientField { values })
}

#[inline]
pub(crate) fn triangle_gradient(
    domain: &TriangulatedDomain,
    k: usize,
    t: &[usize; 3],
    u: &[f64],
) -> [f64; 2] {
    let g = domain.shape_gradients(k);
    // differences against the first vertex, so constants have zero gradient
    let (b, c) = (u[t[1]] - u[t[0]], u[t[2]] - u[t[0]]);
    [b * g[1][0] + c * g[2][0], b * g[1][1] + c * g[2][1]]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::function_spaces::Shape;

    #[test]
    fn affine_fields_have_exact_gradients() {
        let d = TriangulatedDomain::build(Shape::unit_disk(), 0.1).unwrap();
        let u = ScalarField::from_fn(&d, |x| x[0]);
        let g = gradient_field(&d, &u).unwrap();
        for v in &g.values {
            assert!((v[0] - 1.0).abs() < 1e-12 && v[1].abs() < 1e-12, "{v:?}");
        }
        let c = gradient_field(&d, &ScalarField::constant(&d, 3.0)).unwrap();
        assert!(c.values.iter().all(|v| v[0].abs() < 1e-12 && v[1].abs() < 1e-12));
    }

    #[test]
    fn quadratic_gradient_is_first_order_accurate() {
        let h = 1.0 / 64.0;
        let d = TriangulatedDomain::build(Shape::unit_square(), h).unwrap();
        let u = ScalarField::from_fn(&d, |x| x[0] * x[0]);
        let g = gradient_field(&d, &u).unwrap();
        for (v, c) in g.values.iter().zip(d.centroids()) {
            assert!((v[0] - 2.0 * c[0]).abs() <= 2.0 * h && v[1].abs() <= 2.0 * h);
        }
    }

    #[test]
    fn wrong_length_rejected() {
        let d = TriangulatedDomain::build(Shape::unit_square(), 0.5).unwrap();
        assert!(matches!(
            ScalarField::new(&d, alloc::vec![0.0; 3]),
            Err(Error::FieldLength { .. })
        ));
    }
}
