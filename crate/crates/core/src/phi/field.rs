use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::math;
use crate::serde_ext::ext_real_vec;
use crate::{Error, Point, Result};

/// A scalar field on the plane: an exponent `p(x)`, a weight `a(x)` or
/// boundary data `f(x)`.
///
/// Analytic rules are referenced by name in serialized form, e.g.
/// `{"rule": "log-exponent", "n": 2, "scale": 2}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "kebab-case")]
pub enum SpatialField {
    Constant {
        value: f64,
    },
    /// `scale · n · ln(e / |x − center|)`, which is `+∞` at the center.
    LogExponent {
        n: f64,
        scale: f64,
        #[serde(default)]
        center: Point,
    },
    /// `offset + coefficient · |x − center|^power`.
    RadialPower {
        #[serde(default)]
        offset: f64,
        coefficient: f64,
        power: f64,
        #[serde(default)]
        center: Point,
    },
    /// `gradient · x + offset`.
    Affine {
        gradient: [f64; 2],
        #[serde(default)]
        offset: f64,
    },
    /// Vertex samples; evaluation returns the value of the nearest sample.
    Samples {
        points: Vec<Point>,
        #[serde(with = "ext_real_vec")]
        values: Vec<f64>,
    },
}

impl SpatialField {
    pub fn constant(value: f64) -> Self {
        SpatialField::Constant { value }
    }

    /// The variable exponent `p(x) = 2n·ln(e/|x|)` centred at the origin.
    pub fn log_exponent(n: f64) -> Self {
        SpatialField::LogExponent {
            n,
            scale: 2.0,
            center: [0.0, 0.0],
        }
    }

    /// `coefficient · |x|^power`.
    pub fn radial(coefficient: f64, power: f64) -> Self {
        SpatialField::RadialPower {
            offset: 0.0,
            coefficient,
            power,
            center: [0.0, 0.0],
        }
    }

    pub fn affine(gradient: [f64; 2], offset: f64) -> Self {
        SpatialField::Affine { gradient, offset }
    }

    pub fn value(&self, x: Point) -> f64 {
        match self {
            SpatialField::Constant { value } => *value,
            SpatialField::LogExponent { n, scale, center } => {
                let r = math::dist(x, *center);
                if r == 0.0 {
                    f64::INFINITY
                } else {
                    scale * n * (1.0 - math::ln(r))
                }
            }
            SpatialField::RadialPower {
                offset,
                coefficient,
                power,
                center,
            } => {
                let r = math::dist(x, *center);
                offset + coefficient * math::pow(r, *power)
            }
            SpatialField::Affine { gradient, offset } => {
                gradient[0] * x[0] + gradient[1] * x[1] + offset
            }
            SpatialField::Samples { points, values } => {
                let mut best = f64::INFINITY;
                let mut value = f64::NAN;
                for (p, v) in points.iter().zip(values) {
                    let d = math::dist(*p, x);
                    if d < best {
                        best = d;
                        value = *v;
                    }
                }
                value
            }
        }
    }

    /// The value read as an exponent: finite values must exceed 1, `+∞` is
    /// allowed.
    pub fn exponent_at(&self, x: Point) -> Result<f64> {
        let v = self.value(x);
        if v.is_nan() || v <= 1.0 {
            return Err(Error::Domain {
                x,
                reason: "exponent field is not > 1",
            });
        }
        Ok(v)
    }

    /// The value read as a weight: finite and non-negative.
    pub fn weight_at(&self, x: Point) -> Result<f64> {
        let v = self.value(x);
        if !v.is_finite() || v < 0.0 {
            return Err(Error::Domain {
                x,
                reason: "weight field is not finite and non-negative",
            });
        }
        Ok(v)
    }
}
