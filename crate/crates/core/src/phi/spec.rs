use alloc::boxed::Box;
use alloc::format;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::field::SpatialField;
use super::local::LocalPhi;
use crate::math;
use crate::serde_ext::ext_real_rows;
use crate::{Error, Point, Result};

/// A growth function `φ(x, t)` given as a tagged family.
///
/// Serialized as a JSON object with a `"variant"` tag, for instance
/// `{"variant": "double-phase", "p": 3, "q": 3.5, "weight": {...}}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "kebab-case")]
pub enum PhiSpec {
    /// `t^p`.
    PowerLaw { p: f64 },
    /// `t^{p(x)}`; the exponent may be `+∞` on a null set.
    VariableExponent { exponent: SpatialField },
    /// `t^p + a(x) t^q`.
    DoublePhase { p: f64, q: f64, weight: SpatialField },
    /// Tabulated values on a `t` grid, one row per spatial sample.
    Sampled(SampledPhi),
    /// `factor · φ(x, t)`.
    Scaled { factor: f64, inner: Box<PhiSpec> },
    /// The truncation `φ_λ` of a convex source.
    Truncated(TruncatedPhi),
}

/// Parameters of `φ_λ(x,t) = t^p/λ + ∫₀ᵗ min{φ'₋(x,τ), pλτ^{p−1}} dτ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruncatedPhi {
    pub source: Box<PhiSpec>,
    pub lambda: f64,
    pub p: f64,
}

/// Where a tabulated growth function came from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Construction {
    /// The ball majorant `ψ_B` built with exponent `p` and constant `l_p`.
    Psi {
        center: Point,
        radius: f64,
        p: f64,
        l_p: f64,
    },
}

/// A growth function tabulated on an increasing `t` grid.
///
/// Between nodes the table is interpolated as a power law (linear in
/// `log t`–`log φ`), which keeps `φ/t^p` monotone on every segment where it
/// is monotone at the nodes. When `points` holds more than one sample, the
/// row of the nearest sample is used.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampledPhi {
    pub t_grid: Vec<f64>,
    #[serde(default)]
    pub points: Vec<Point>,
    #[serde(with = "ext_real_rows")]
    pub values: Vec<Vec<f64>>,
    #[serde(default)]
    pub extrapolate: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub construction: Option<Construction>,
}

impl PhiSpec {
    pub fn power(p: f64) -> Self {
        PhiSpec::PowerLaw { p }
    }

    pub fn double_phase(p: f64, q: f64, weight: SpatialField) -> Self {
        PhiSpec::DoublePhase { p, q, weight }
    }

    pub fn variable_exponent(exponent: SpatialField) -> Self {
        PhiSpec::VariableExponent { exponent }
    }

    pub fn scaled(self, factor: f64) -> Self {
        PhiSpec::Scaled {
            factor,
            inner: Box::new(self),
        }
    }

    /// Tabulates an x-independent function on `t_grid`.
    pub fn sampled_from(t_grid: Vec<f64>, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = alloc::vec![t_grid.iter().map(|t| f(*t)).collect()];
        Ok(PhiSpec::Sampled(SampledPhi::new(t_grid, Vec::new(), values)?))
    }

    /// Freezes `φ(x, ·)` into a form that is cheap to evaluate repeatedly.
    pub fn at(&self, x: Point) -> Result<LocalPhi<'_>> {
        if !(x[0].is_finite() && x[1].is_finite()) {
            return Err(Error::Domain {
                x,
                reason: "non-finite coordinates",
            });
        }
        LocalPhi::new(self, x)
    }

    /// `φ(x, t)`, possibly `+∞`.
    pub fn eval(&self, x: Point, t: f64) -> Result<f64> {
        self.at(x)?.eval(t)
    }

    /// The left and right derivatives `(φ'₋(x,t), φ'₊(x,t))`, with `φ'₋(0) = 0`.
    pub fn one_sided_derivatives(&self, x: Point, t: f64) -> Result<(f64, f64)> {
        self.at(x)?.derivatives(t)
    }

    /// The conjugate `φ*(x, s) = sup_{t ≥ 0} (st − φ(x, t))`.
    pub fn conjugate(&self, x: Point, s: f64) -> Result<f64> {
        self.at(x)?.conjugate(s)
    }

    /// Whether `t ↦ φ(x, t)` is convex for every represented `x`.
    ///
    /// Analytic variants are convex when their parameters are valid; tables
    /// are checked through their secant slopes.
    pub fn is_convex(&self) -> bool {
        match self {
            PhiSpec::PowerLaw { p } => *p >= 1.0,
            PhiSpec::VariableExponent { .. } => true,
            PhiSpec::DoublePhase { p, q, .. } => *p >= 1.0 && *q >= 1.0,
            PhiSpec::Sampled(table) => table.is_convex(),
            PhiSpec::Scaled { factor, inner } => *factor > 0.0 && inner.is_convex(),
            PhiSpec::Truncated(tr) => tr.source.is_convex(),
        }
    }

    /// Checks the static parameters of the variant.
    pub fn validate(&self) -> Result<()> {
        match self {
            PhiSpec::PowerLaw { p } => {
                if !(*p >= 1.0) {
                    return Err(Error::InvalidParameter(format!("power-law exponent {p} < 1")));
                }
            }
            PhiSpec::VariableExponent { .. } => {}
            PhiSpec::DoublePhase { p, q, .. } => {
                if !(*p >= 1.0 && q >= p) {
                    return Err(Error::InvalidParameter(format!(
                        "double phase needs 1 <= p <= q, got p = {p}, q = {q}"
                    )));
                }
            }
            PhiSpec::Sampled(table) => table.validate()?,
            PhiSpec::Scaled { factor, inner } => {
                if !(*factor > 0.0 && factor.is_finite()) {
                    return Err(Error::InvalidParameter(format!("scale factor {factor}")));
                }
                inner.validate()?;
            }
            PhiSpec::Truncated(tr) => {
                if !(tr.lambda >= 1.0) || !(tr.p >= 1.0) || !tr.p.is_finite() {
                    return Err(Error::InvalidParameter(format!(
                        "truncation needs lambda >= 1 and finite p >= 1, got lambda = {}, p = {}",
                        tr.lambda, tr.p
                    )));
                }
                tr.source.validate()?;
            }
        }
        Ok(())
    }
}

impl SampledPhi {
    pub fn new(t_grid: Vec<f64>, points: Vec<Point>, values: Vec<Vec<f64>>) -> Result<Self> {
        let table = SampledPhi {
            t_grid,
            points,
            values,
            extrapolate: false,
            construction: None,
        };
        table.validate()?;
        Ok(table)
    }

    pub fn validate(&self) -> Result<()> {
        if self.t_grid.len() < 2 {
            return Err(Error::InvalidParameter("sampled grid needs two nodes".into()));
        }
        if !(self.t_grid[0] > 0.0) || self.t_grid.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidParameter(
                "sampled grid must be positive and strictly increasing".into(),
            ));
        }
        let rows = self.points.len().max(1);
        if self.values.len() != rows {
            return Err(Error::InvalidParameter(format!(
                "{} value rows for {} sample points",
                self.values.len(),
                rows
            )));
        }
        for row in &self.values {
            if row.len() != self.t_grid.len() {
                return Err(Error::InvalidParameter("value row length differs from grid".into()));
            }
            if row.iter().any(|v| v.is_nan() || *v < 0.0) {
                return Err(Error::InvalidParameter("sampled values must be in [0, inf]".into()));
            }
        }
        Ok(())
    }

    pub fn row_for(&self, x: Point) -> usize {
        if self.points.len() <= 1 {
            return 0;
        }
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (i, p) in self.points.iter().enumerate() {
            let d = math::dist(*p, x);
            if d < best_d {
                best_d = d;
                best = i;
            }
        }
        best
    }

    pub fn t_max(&self) -> f64 {
        *self.t_grid.last().unwrap()
    }

    fn segment_exponent(&self, row: usize, i: usize) -> Option<f64> {
        let v = &self.values[row];
        let (a, b) = (v[i], v[i + 1]);
        if a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite() {
            Some(math::ln(b / a) / math::ln(self.t_grid[i + 1] / self.t_grid[i]))
        } else {
            None
        }
    }

    // exponent used below the first node; at least 1 so the table vanishes at 0
    fn head_exponent(&self, row: usize) -> f64 {
        match self.segment_exponent(row, 0) {
            Some(k) if k > 1.0 => k,
            _ => 1.0,
        }
    }

    /// Index `i` with `t_grid[i] <= t < t_grid[i+1]`, or `None` outside.
    fn segment(&self, t: f64) -> Option<usize> {
        let g = &self.t_grid;
        if t < g[0] || t >= g[g.len() - 1] {
            return None;
        }
        Some(g.partition_point(|node| *node <= t) - 1)
    }

    fn node_index(&self, t: f64) -> Option<usize> {
        let g = &self.t_grid;
        let i = g.partition_point(|node| *node < t);
        let close = |j: usize| math::abs(g[j] - t) <= 1e-12 * g[j];
        if i < g.len() && close(i) {
            Some(i)
        } else if i > 0 && close(i - 1) {
            Some(i - 1)
        } else {
            None
        }
    }

    fn interpolate(&self, row: usize, i: usize, t: f64) -> f64 {
        let v = &self.values[row];
        let (t0, t1) = (self.t_grid[i], self.t_grid[i + 1]);
        let (a, b) = (v[i], v[i + 1]);
        if t == t0 {
            return a;
        }
        if a == f64::INFINITY || b == f64::INFINITY {
            return f64::INFINITY;
        }
        match self.segment_exponent(row, i) {
            Some(k) => a * math::pow(t / t0, k),
            None => a + (b - a) * (t - t0) / (t1 - t0),
        }
    }

    pub fn eval_row(&self, row: usize, t: f64) -> Result<f64> {
        let v = &self.values[row];
        let g = &self.t_grid;
        let n = g.len();
        if t == 0.0 {
            return Ok(0.0);
        }
        if t < g[0] {
            return Ok(if v[0] == 0.0 {
                0.0
            } else {
                v[0] * math::pow(t / g[0], self.head_exponent(row))
            });
        }
        if let Some(i) = self.segment(t) {
            return Ok(self.interpolate(row, i, t));
        }
        if t == g[n - 1] {
            return Ok(v[n - 1]);
        }
        if !self.extrapolate {
            return Err(Error::Extrapolation { t, t_max: g[n - 1] });
        }
        Ok(match self.segment_exponent(row, n - 2) {
            Some(k) => v[n - 1] * math::pow(t / g[n - 1], k.max(1.0)),
            None => f64::INFINITY,
        })
    }

    fn secant(&self, row: usize, i: usize) -> f64 {
        let v = &self.values[row];
        if v[i] == f64::INFINITY || v[i + 1] == f64::INFINITY {
            return f64::INFINITY;
        }
        (v[i + 1] - v[i]) / (self.t_grid[i + 1] - self.t_grid[i])
    }

    /// One-sided derivatives: difference quotients at nodes, the derivative
    /// of the interpolant between nodes.
    pub fn derivatives_row(&self, row: usize, t: f64) -> Result<(f64, f64)> {
        let v = &self.values[row];
        let g = &self.t_grid;
        let n = g.len();
        let head = self.head_exponent(row);
        if t == 0.0 {
            let right = if head > 1.0 { 0.0 } else { v[0] / g[0] };
            return Ok((0.0, right));
        }
        if t < g[0] {
            let d = head * v[0] * math::pow(t / g[0], head) / t;
            return Ok((d, d));
        }
        if let Some(i) = self.node_index(t) {
            if v[i] == f64::INFINITY {
                return Err(Error::InfiniteDerivative { t });
            }
            let left = if i == 0 { head * v[0] / g[0] } else { self.secant(row, i - 1) };
            let right = if i + 1 < n {
                self.secant(row, i)
            } else if self.extrapolate {
                match self.segment_exponent(row, n - 2) {
                    Some(k) => k.max(1.0) * v[n - 1] / g[n - 1],
                    None => f64::INFINITY,
                }
            } else {
                left
            };
            return Ok((left, right));
        }
        let value = self.eval_row(row, t)?;
        if value == f64::INFINITY {
            return Err(Error::InfiniteDerivative { t });
        }
        match self.segment(t) {
            Some(i) => {
                let d = match self.segment_exponent(row, i) {
                    Some(k) => k * value / t,
                    None => self.secant(row, i),
                };
                Ok((d, d))
            }
            None => {
                let k = self.segment_exponent(row, n - 2).unwrap_or(1.0).max(1.0);
                let d = k * value / t;
                Ok((d, d))
            }
        }
    }

    /// Secant slopes non-decreasing (starting from the chord through the
    /// origin) on every row.
    pub fn is_convex(&self) -> bool {
        (0..self.values.len()).all(|row| self.row_is_convex(row))
    }

    pub fn row_is_convex(&self, row: usize) -> bool {
        let n = self.t_grid.len();
        let v = &self.values[row];
        {
            let mut prev = v[0] / self.t_grid[0];
            for i in 0..n - 1 {
                let s = self.secant(row, i);
                if s == f64::INFINITY {
                    return true;
                }
                if s < prev - 1e-9 * (1.0 + math::abs(prev)) {
                    return false;
                }
                prev = s;
            }
            true
        }
    }
}
