//! The ball majorant `ψ_B` and the truncations `φ_λ`.

use alloc::boxed::Box;
use alloc::format;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::math;
use crate::phi::{Ball, Construction, LocalizedSet, PhiSpec, SamplePlan, SampledPhi, TruncatedPhi};
use crate::serde_ext::ext_real_vec;
use crate::{Error, Result};

/// `ψ_B(t) = ∫₀ᵗ τ^{p−1} sup_{s ≤ τ} φ_B⁺(s)/s^p dτ` tabulated on a grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PsiRegularization {
    pub source: PhiSpec,
    pub ball: Ball,
    pub p: f64,
    pub l_p: f64,
    pub t_grid: Vec<f64>,
    #[serde(with = "ext_real_vec")]
    pub phi_plus: Vec<f64>,
    #[serde(with = "ext_real_vec")]
    pub running_sup: Vec<f64>,
    #[serde(with = "ext_real_vec")]
    pub psi_values: Vec<f64>,
}

/// Parameters of `φ_λ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruncationParams {
    pub lambda: f64,
    pub p: f64,
}

// ∫_a^b τ^{p−1} m(τ) dτ for m interpolated between m(a) = ma and m(b) = mb:
// as a power law when both are positive, linearly otherwise
fn segment_integral(a: f64, b: f64, ma: f64, mb: f64, p: f64) -> f64 {
    if mb == f64::INFINITY {
        return f64::INFINITY;
    }
    if ma > 0.0 {
        let k = math::ln(mb / ma) / math::ln(b / a);
        let e = p + k;
        ma * math::pow(a, p) / e * (math::pow(b / a, e) - 1.0)
    } else {
        // m(τ) = mb (τ − a)/(b − a)
        let prim = |t: f64| math::pow(t, p + 1.0) / (p + 1.0) - a * math::pow(t, p) / p;
        mb / (b - a) * (prim(b) - prim(a))
    }
}

/// Builds `ψ_B` on `t_grid` and checks
/// `ln 2 · φ_B⁺(t/2) ≤ ψ(t) ≤ L_p φ_B⁺(t)` at every node.
///
/// The running sup is interpolated as a power law between nodes and
/// integrated exactly, so `t^q` sources give `t^q/q` up to rounding.
pub fn build_psi(phi: &PhiSpec, ball: &Ball, p: f64, l_p: f64, t_grid: &[f64]) -> Result<PsiRegularization> {
    if !(p >= 1.0 && p.is_finite()) || !(l_p >= 1.0) {
        return Err(Error::InvalidParameter(format!("psi needs p >= 1 and L_p >= 1, got {p}, {l_p}")));
    }
    if t_grid.len() < 2 || !(t_grid[0] > 0.0) || t_grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidParameter("psi grid must be positive and increasing".into()));
    }
    let set = LocalizedSet::new(phi, ball.sample_points(&SamplePlan::default()))?;
    let n = t_grid.len();
    let mut phi_plus = Vec::with_capacity(n);
    let mut running_sup = Vec::with_capacity(n);
    let mut m = 0.0f64;
    for &t in t_grid {
        let v = set.sup(t)?;
        phi_plus.push(v);
        let r = if v == f64::INFINITY { v } else { v / math::pow(t, p) };
        m = m.max(r);
        running_sup.push(m);
    }
    let mut psi_values = Vec::with_capacity(n);
    // below the first node the running sup continues the first segment's power law
    let k0 = if running_sup[0] > 0.0 && running_sup[1].is_finite() {
        (math::ln(running_sup[1] / running_sup[0]) / math::ln(t_grid[1] / t_grid[0])).max(0.0)
    } else {
        0.0
    };
    let mut acc = running_sup[0] * math::pow(t_grid[0], p) / (p + k0);
    psi_values.push(acc);
    for i in 0..n - 1 {
        if acc < f64::INFINITY {
            acc += segment_integral(t_grid[i], t_grid[i + 1], running_sup[i], running_sup[i + 1], p);
        }
        psi_values.push(acc);
    }
    let psi = PsiRegularization {
        source: phi.clone(),
        ball: *ball,
        p,
        l_p,
        t_grid: t_grid.to_vec(),
        phi_plus,
        running_sup,
        psi_values,
    };
    let (lower, upper) = psi.bound_violations(&set)?;
    if let Some(i) = lower.or(upper) {
        return Err(Error::RefinementRequired(format!(
            "psi two-sided bound fails at node t = {} ({} side)",
            psi.t_grid[i],
            if lower.is_some() { "lower" } else { "upper" }
        )));
    }
    Ok(psi)
}

impl PsiRegularization {
    /// First nodes violating the lower and the upper bound, if any.
    fn bound_violations(&self, set: &LocalizedSet<'_>) -> Result<(Option<usize>, Option<usize>)> {
        let mut lower = None;
        let mut upper = None;
        for (i, &t) in self.t_grid.iter().enumerate() {
            let psi = self.psi_values[i];
            let lo = core::f64::consts::LN_2 * set.sup(0.5 * t)?;
            let hi = self.l_p * self.phi_plus[i];
            if lower.is_none() && !(lo <= psi * (1.0 + 1e-12)) {
                lower = Some(i);
            }
            if upper.is_none() && !(psi <= hi * (1.0 + 1e-12)) {
                upper = Some(i);
            }
        }
        Ok((lower, upper))
    }

    /// Re-evaluates the two-sided bound at every node: `(lower, ψ, upper)`.
    pub fn bounds(&self) -> Result<Vec<(f64, f64, f64)>> {
        let set = LocalizedSet::new(&self.source, self.ball.sample_points(&SamplePlan::default()))?;
        self.t_grid
            .iter()
            .enumerate()
            .map(|(i, &t)| {
                Ok((
                    core::f64::consts::LN_2 * set.sup(0.5 * t)?,
                    self.psi_values[i],
                    self.l_p * self.phi_plus[i],
                ))
            })
            .collect()
    }

    /// `ψ` as an x-independent tabulated growth function.
    pub fn to_phi_spec(&self) -> PhiSpec {
        PhiSpec::Sampled(SampledPhi {
            t_grid: self.t_grid.clone(),
            points: Vec::new(),
            values: alloc::vec![self.psi_values.clone()],
            extrapolate: false,
            construction: Some(Construction::Psi {
                center: self.ball.center,
                radius: self.ball.radius,
                p: self.p,
                l_p: self.l_p,
            }),
        })
    }

    /// `ψ(t)`; above the grid this is an extrapolation error.
    pub fn eval(&self, t: f64) -> Result<f64> {
        let n = self.t_grid.len();
        if t > self.t_grid[n - 1] {
            return Err(Error::Extrapolation {
                t,
                t_max: self.t_grid[n - 1],
            });
        }
        self.to_phi_spec().eval([0.0, 0.0], t)
    }
}

/// The truncation `φ_λ` of a convex growth function.
pub fn build_phi_lambda(phi: &PhiSpec, params: TruncationParams) -> Result<PhiSpec> {
    if !(params.lambda >= 1.0 && params.lambda.is_finite()) || !(params.p >= 1.0 && params.p.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "truncation needs finite lambda >= 1 and p >= 1, got {params:?}"
        )));
    }
    if !phi.is_convex() {
        return Err(Error::NonConvexSource);
    }
    Ok(PhiSpec::Truncated(TruncatedPhi {
        source: Box::new(phi.clone()),
        lambda: params.lambda,
        p: params.p,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phi::SpatialField;

    fn grid() -> Vec<f64> {
        math::geometric_grid(1e-6, 1e3, 512)
    }

    #[test]
    fn psi_of_power_law() {
        let q = 3.5;
        let ball = Ball::new([0.0, 0.0], 0.5);
        let psi = build_psi(&PhiSpec::power(q), &ball, 2.0, 1.0, &grid()).unwrap();
        for (t, v) in psi.t_grid.iter().zip(&psi.psi_values) {
            let exact = libm::pow(*t, q) / q;
            assert!((v - exact).abs() <= 1e-6 * exact, "{t}: {v} vs {exact}");
        }
    }

    #[test]
    fn psi_of_exponent_between_four_and_five() {
        let field = SpatialField::RadialPower {
            offset: 4.0,
            coefficient: 1.0,
            power: 1.0,
            center: [0.0, 0.0],
        };
        let phi = PhiSpec::variable_exponent(field);
        let psi = build_psi(&phi, &Ball::new([0.0, 0.0], 1.0), 4.0, 1.0, &grid()).unwrap();
        let v = psi.eval(2.0).unwrap();
        assert!((v - 6.45).abs() < 1e-4 * 6.45, "{v}");
        let v = psi.eval(0.5).unwrap();
        assert!((v - 0.0625 / 4.0).abs() < 1e-6 * v, "{v}");
    }

    #[test]
    fn psi_is_infinite_past_one_near_infinite_exponent() {
        let phi = PhiSpec::variable_exponent(SpatialField::log_exponent(2.0));
        let psi = build_psi(&phi, &Ball::new([0.0, 0.0], 0.25), 4.0, 1.0, &grid()).unwrap();
        for (t, v) in psi.t_grid.iter().zip(&psi.psi_values) {
            assert_eq!(*t > 1.0, *v == f64::INFINITY, "{t}");
        }
    }

    #[test]
    fn running_sup_non_decreasing() {
        let phi = PhiSpec::double_phase(3.0, 3.5, SpatialField::radial(1.0, 1.0));
        let psi = build_psi(&phi, &Ball::new([0.3, 0.0], 0.2), 3.0, 1.0, &grid()).unwrap();
        assert!(psi.running_sup.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn extrapolating_psi_is_an_error() {
        let psi = build_psi(&PhiSpec::power(2.0), &Ball::new([0.0, 0.0], 1.0), 2.0, 1.0, &grid()).unwrap();
        assert!(matches!(psi.eval(2e3), Err(Error::Extrapolation { .. })));
    }

    #[test]
    fn truncation_rejects_non_convex() {
        let src = PhiSpec::sampled_from(grid(), libm::sqrt).unwrap();
        let params = TruncationParams { lambda: 2.0, p: 2.0 };
        assert_eq!(build_phi_lambda(&src, params).unwrap_err(), Error::NonConvexSource);
    }

    #[test]
    fn truncation_of_matching_power_law() {
        let phi = build_phi_lambda(&PhiSpec::power(4.0), TruncationParams { lambda: 8.0, p: 4.0 }).unwrap();
        let v = phi.eval([0.1, 0.2], 1.5).unwrap();
        let expected = (1.0 + 1.0 / 8.0) * libm::pow(1.5, 4.0);
        assert!((v - expected).abs() < 1e-13 * expected);
    }
}
