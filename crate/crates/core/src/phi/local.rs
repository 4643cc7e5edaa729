use alloc::boxed::Box;

use super::spec::{PhiSpec, SampledPhi};
use crate::math;
use crate::{Error, Point, Result};

/// `φ(x, ·)` at a fixed point `x`, with all spatial lookups resolved.
///
/// Obtained from [`PhiSpec::at`]. Solvers build one per quadrature point
/// and reuse it for every evaluation.
#[derive(Clone, Debug)]
pub enum LocalPhi<'a> {
    /// `coef · t^p`; `p` may be `+∞`, meaning `0` below 1, `coef` at 1 and
    /// `+∞` above.
    Power { coef: f64, p: f64 },
    /// `coef · (t^p + a t^q)`.
    DoublePhase { coef: f64, p: f64, q: f64, a: f64 },
    /// `coef ·` row `row` of a table.
    Sampled {
        coef: f64,
        table: &'a SampledPhi,
        row: usize,
    },
    Truncated(Box<LocalTruncation<'a>>),
}

/// `coef · (t^p/λ + ∫₀ᵗ min{base'₋(τ), pλτ^{p−1}} dτ)` with the crossover
/// of the minimum resolved.
#[derive(Clone, Debug)]
pub struct LocalTruncation<'a> {
    pub coef: f64,
    pub base: LocalPhi<'a>,
    pub lambda: f64,
    pub p: f64,
    /// The crossover `τ*`, possibly `+∞`.
    pub tau: f64,
    /// Whether `base'` is the smaller branch on `(0, τ*)`.
    pub base_first: bool,
    /// `∫₀^{τ*} base'₋`, which differs from `base(τ*)` only when the base
    /// jumps at `τ*`.
    pub base_at_tau: f64,
}

impl<'a> LocalPhi<'a> {
    pub(crate) fn new(spec: &'a PhiSpec, x: Point) -> Result<Self> {
        Ok(match spec {
            PhiSpec::PowerLaw { p } => LocalPhi::Power { coef: 1.0, p: *p },
            PhiSpec::VariableExponent { exponent } => LocalPhi::Power {
                coef: 1.0,
                p: exponent.exponent_at(x)?,
            },
            PhiSpec::DoublePhase { p, q, weight } => LocalPhi::DoublePhase {
                coef: 1.0,
                p: *p,
                q: *q,
                a: weight.weight_at(x)?,
            },
            PhiSpec::Sampled(table) => LocalPhi::Sampled {
                coef: 1.0,
                table,
                row: table.row_for(x),
            },
            PhiSpec::Scaled { factor, inner } => LocalPhi::new(inner, x)?.scaled(*factor),
            PhiSpec::Truncated(tr) => {
                let base = LocalPhi::new(&tr.source, x)?;
                LocalPhi::Truncated(Box::new(LocalTruncation::new(base, tr.lambda, tr.p, x)?))
            }
        })
    }

    pub fn scaled(self, c: f64) -> Self {
        match self {
            LocalPhi::Power { coef, p } => LocalPhi::Power { coef: coef * c, p },
            LocalPhi::DoublePhase { coef, p, q, a } => LocalPhi::DoublePhase {
                coef: coef * c,
                p,
                q,
                a,
            },
            LocalPhi::Sampled { coef, table, row } => LocalPhi::Sampled {
                coef: coef * c,
                table,
                row,
            },
            LocalPhi::Truncated(mut tr) => {
                tr.coef *= c;
                LocalPhi::Truncated(tr)
            }
        }
    }

    pub fn is_convex(&self) -> bool {
        match self {
            LocalPhi::Power { p, .. } => *p >= 1.0,
            LocalPhi::DoublePhase { p, q, .. } => *p >= 1.0 && *q >= 1.0,
            LocalPhi::Sampled { table, row, .. } => table.row_is_convex(*row),
            LocalPhi::Truncated(tr) => tr.base.is_convex(),
        }
    }

    pub fn eval(&self, t: f64) -> Result<f64> {
        if t.is_nan() || t < 0.0 {
            return Err(Error::InvalidParameter(alloc::format!("t = {t} is not >= 0")));
        }
        if t == 0.0 {
            return Ok(0.0);
        }
        Ok(match self {
            LocalPhi::Power { coef, p } => coef * power(t, *p),
            LocalPhi::DoublePhase { coef, p, q, a } => {
                coef * (math::pow(t, *p) + a * math::pow(t, *q))
            }
            LocalPhi::Sampled { coef, table, row } => coef * table.eval_row(*row, t)?,
            LocalPhi::Truncated(tr) => tr.eval(t)?,
        })
    }

    /// `(φ'₋(t), φ'₊(t))` with `φ'₋(0) = 0`.
    pub fn derivatives(&self, t: f64) -> Result<(f64, f64)> {
        if t.is_nan() || t < 0.0 {
            return Err(Error::InvalidParameter(alloc::format!("t = {t} is not >= 0")));
        }
        match self {
            LocalPhi::Power { coef, p } => {
                if *p == f64::INFINITY {
                    return if t < 1.0 {
                        Ok((0.0, 0.0))
                    } else if t == 1.0 {
                        Ok((0.0, f64::INFINITY))
                    } else {
                        Err(Error::InfiniteDerivative { t })
                    };
                }
                if t == 0.0 {
                    let right = if *p > 1.0 { 0.0 } else { *coef };
                    return Ok((0.0, right));
                }
                let d = coef * p * math::pow(t, p - 1.0);
                Ok((d, d))
            }
            LocalPhi::DoublePhase { coef, p, q, a } => {
                if t == 0.0 {
                    let right = if *p > 1.0 { 0.0 } else { *coef };
                    return Ok((0.0, right));
                }
                let d = coef * (p * math::pow(t, p - 1.0) + a * q * math::pow(t, q - 1.0));
                Ok((d, d))
            }
            LocalPhi::Sampled { coef, table, row } => {
                let (l, r) = table.derivatives_row(*row, t)?;
                Ok((coef * l, coef * r))
            }
            LocalPhi::Truncated(tr) => tr.derivatives(t),
        }
    }

    /// `(φ(t), φ'₋(t), φ'₊(t))` in one pass.
    pub fn value_and_derivatives(&self, t: f64) -> Result<(f64, f64, f64)> {
        match self {
            LocalPhi::Power { coef, p } if t > 0.0 && p.is_finite() => {
                let d = coef * p * math::pow(t, p - 1.0);
                Ok((d * t / p, d, d))
            }
            LocalPhi::DoublePhase { coef, p, q, a } if t > 0.0 => {
                let tp = math::pow(t, *p);
                let tq = if *a == 0.0 { 0.0 } else { math::pow(t, *q) };
                let d = coef * (p * tp + a * q * tq) / t;
                Ok((coef * (tp + a * tq), d, d))
            }
            LocalPhi::Truncated(tr) if t > 0.0 => tr.value_and_derivatives(t),
            _ => {
                let (l, r) = self.derivatives(t)?;
                Ok((self.eval(t)?, l, r))
            }
        }
    }

    /// `φ(t + dt) − φ(t)`, computed without cancellation where the closed
    /// form allows it.
    pub fn increment(&self, t: f64, dt: f64) -> Result<f64> {
        match self {
            LocalPhi::Power { coef, p } if p.is_finite() => Ok(coef * math::pow_increment(t, dt, *p)),
            LocalPhi::DoublePhase { coef, p, q, a } => {
                let dq = if *a == 0.0 { 0.0 } else { a * math::pow_increment(t, dt, *q) };
                Ok(coef * (math::pow_increment(t, dt, *p) + dq))
            }
            LocalPhi::Truncated(tr) => tr.increment(t, dt),
            _ => Ok(self.eval(t + dt)? - self.eval(t)?),
        }
    }

    /// Derivatives with an infinite-derivative signal read as `+∞`.
    pub(crate) fn derivatives_ext(&self, t: f64) -> Result<(f64, f64)> {
        match self.derivatives(t) {
            Err(Error::InfiniteDerivative { .. }) => Ok((f64::INFINITY, f64::INFINITY)),
            other => other,
        }
    }

    /// `sup_{t ≥ 0} (st − φ(t))`.
    pub fn conjugate(&self, s: f64) -> Result<f64> {
        if s.is_nan() || s < 0.0 {
            return Err(Error::InvalidParameter(alloc::format!("s = {s} is not >= 0")));
        }
        if s == 0.0 {
            return Ok(0.0);
        }
        if let LocalPhi::Power { coef, p } = self {
            return Ok(power_conjugate(*coef, *p, s));
        }
        let mut best = self.conjugate_by_bisection(s)?;
        if let LocalPhi::Sampled { coef, table, row } = self {
            // tables need not be convex; the nodes bound the sup from below
            for (t, v) in table.t_grid.iter().zip(&table.values[*row]) {
                best = best.max(s * t - coef * v);
            }
        }
        Ok(best)
    }

    fn conjugate_by_bisection(&self, s: f64) -> Result<f64> {
        if self.derivatives_ext(0.0)?.1 >= s {
            return Ok(0.0);
        }
        let t_cap = self.table_limit().unwrap_or(1e300);
        let mut lo = 0.0;
        let mut hi = 1.0f64.min(t_cap);
        loop {
            if self.derivatives_ext(hi)?.1 >= s {
                break;
            }
            if hi >= t_cap {
                if self.table_limit().is_some() {
                    return Err(Error::Extrapolation {
                        t: 2.0 * hi,
                        t_max: hi,
                    });
                }
                return Ok(f64::INFINITY);
            }
            lo = hi;
            hi = (2.0 * hi).min(t_cap);
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.derivatives_ext(mid)?.1 < s {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let mut best = 0.0f64;
        for t in [lo, hi] {
            let v = self.eval(t)?;
            if v.is_finite() {
                best = best.max(s * t - v);
            }
        }
        Ok(best)
    }

    // largest admissible t for tabulated functions without extrapolation
    fn table_limit(&self) -> Option<f64> {
        match self {
            LocalPhi::Sampled { table, .. } if !table.extrapolate => Some(table.t_max()),
            LocalPhi::Truncated(tr) => tr.base.table_limit(),
            _ => None,
        }
    }
}

fn power(t: f64, p: f64) -> f64 {
    if p == f64::INFINITY {
        if t < 1.0 {
            0.0
        } else if t == 1.0 {
            1.0
        } else {
            f64::INFINITY
        }
    } else {
        math::pow(t, p)
    }
}

// (c t^p)* (s) = (p − 1) c (s / (p c))^{p'} with p' = p / (p − 1)
fn power_conjugate(coef: f64, p: f64, s: f64) -> f64 {
    if p == f64::INFINITY {
        return s;
    }
    if p == 1.0 {
        return if s <= coef { 0.0 } else { f64::INFINITY };
    }
    if p < 1.0 {
        return f64::INFINITY;
    }
    let pc = p / (p - 1.0);
    (p - 1.0) * coef * math::pow(s / (p * coef), pc)
}

impl<'a> LocalTruncation<'a> {
    fn new(base: LocalPhi<'a>, lambda: f64, p: f64, x: Point) -> Result<Self> {
        if !base.is_convex() {
            return Err(Error::NonConvexSource);
        }
        let mut tr = LocalTruncation {
            coef: 1.0,
            base,
            lambda,
            p,
            tau: f64::INFINITY,
            base_first: true,
            base_at_tau: 0.0,
        };
        let closed = match tr.base {
            LocalPhi::Power { coef, p: p0 } => Some(power_crossover(coef, p0, lambda, p)),
            LocalPhi::DoublePhase { coef, p: p0, q, a } if p0 == p && a > 0.0 && q > p => {
                // coef (p + a q τ^{q−p}) = p λ
                if coef >= lambda {
                    Some((f64::INFINITY, false))
                } else {
                    let tau = math::pow(p * (lambda / coef - 1.0) / (a * q), 1.0 / (q - p));
                    Some((tau, true))
                }
            }
            _ => None,
        };
        let (tau, base_first) = match closed {
            Some(c) => c,
            None => tr.scan_crossover(x)?,
        };
        tr.tau = tau;
        tr.base_first = base_first;
        if tau.is_finite() {
            tr.base_at_tau = if matches!(tr.base, LocalPhi::Power { p, .. } if p == f64::INFINITY) {
                0.0
            } else {
                tr.base.eval(tau)?
            };
        }
        Ok(tr)
    }

    // base'(τ) / (pτ^{p−1}) − λ, which avoids underflow at small τ
    fn crossover_ratio(&self, tau: f64) -> Result<f64> {
        let d = self.base.derivatives_ext(tau)?.0;
        Ok(d / (self.p * math::pow(tau, self.p - 1.0)) - self.lambda)
    }

    fn scan_crossover(&self, x: Point) -> Result<(f64, bool)> {
        const LO: f64 = 1e-9;
        let hi = self.base.table_limit().unwrap_or(1e9);
        let grid = math::geometric_grid(LO, hi, 145);
        let mut first_sign = 0i8;
        let mut last_sign = 0i8;
        let mut last_node = 0.0;
        let mut bracket = (0.0, 0.0);
        let mut changes = 0usize;
        for t in grid {
            let r = self.crossover_ratio(t)?;
            let sign = if r > 0.0 {
                1
            } else if r < 0.0 {
                -1
            } else {
                0
            };
            if sign == 0 {
                continue;
            }
            if first_sign == 0 {
                first_sign = sign;
            } else if sign != last_sign {
                changes += 1;
                bracket = (last_node, t);
            }
            last_sign = sign;
            last_node = t;
        }
        match changes {
            0 => Ok((f64::INFINITY, first_sign <= 0)),
            1 => {
                let (mut a, mut b) = bracket;
                for _ in 0..100 {
                    let mid = math::sqrt(a * b);
                    if mid <= a || mid >= b {
                        break;
                    }
                    let r = self.crossover_ratio(mid)?;
                    if (r > 0.0) == (first_sign > 0) {
                        a = mid;
                    } else {
                        b = mid;
                    }
                }
                Ok((math::sqrt(a * b), first_sign < 0))
            }
            n => Err(Error::AmbiguousCrossover { x, sign_changes: n }),
        }
    }

    /// `∫₀ᵗ min{base'₋, pλτ^{p−1}} dτ`.
    pub fn integral(&self, t: f64) -> Result<f64> {
        let lam = self.lambda;
        let p = self.p;
        if self.base_first {
            if t < self.tau {
                self.base.eval(t)
            } else {
                Ok(self.base_at_tau + lam * (math::pow(t, p) - math::pow(self.tau, p)))
            }
        } else if t <= self.tau {
            Ok(lam * math::pow(t, p))
        } else {
            let rest = self.base.eval(t)? - self.base.eval(self.tau)?;
            Ok(lam * math::pow(self.tau, p) + rest.max(0.0))
        }
    }

    fn eval(&self, t: f64) -> Result<f64> {
        Ok(self.coef * (math::pow(t, self.p) / self.lambda + self.integral(t)?))
    }

    fn increment(&self, t: f64, dt: f64) -> Result<f64> {
        let t1 = t + dt;
        let (lo, hi) = if dt < 0.0 { (t1, t) } else { (t, t1) };
        let lam = self.lambda;
        let inc_p = math::pow_increment(t, dt, self.p);
        let own = inc_p / lam;
        let rest = if self.base_first && hi < self.tau || !self.base_first && lo > self.tau {
            self.base.increment(t, dt)?
        } else if self.base_first && lo >= self.tau || !self.base_first && hi <= self.tau {
            lam * inc_p
        } else {
            self.integral(t1)? - self.integral(t)?
        };
        Ok(self.coef * (own + rest))
    }

    fn value_and_derivatives(&self, t: f64) -> Result<(f64, f64, f64)> {
        let (lam, p) = (self.lambda, self.p);
        let tp = math::pow(t, p);
        let d1 = p * tp / t;
        let g = lam * d1;
        let own = d1 / lam;
        let (bl, br) = self.base.derivatives_ext(t)?;
        let integral = if self.base_first {
            if t < self.tau {
                self.base.eval(t)?
            } else {
                self.base_at_tau + lam * (tp - math::pow(self.tau, p))
            }
        } else if t <= self.tau {
            lam * tp
        } else {
            self.integral(t)?
        };
        let c = self.coef;
        Ok((c * (tp / lam + integral), c * (own + bl.min(g)), c * (own + br.min(g))))
    }

    fn derivatives(&self, t: f64) -> Result<(f64, f64)> {
        let (bl, br) = self.base.derivatives_ext(t)?;
        let g = self.p * self.lambda * math::pow(t, self.p - 1.0);
        let own = self.p / self.lambda * math::pow(t, self.p - 1.0);
        if t == 0.0 {
            return Ok((0.0, self.coef * (own + br.min(g))));
        }
        Ok((self.coef * (own + bl.min(g)), self.coef * (own + br.min(g))))
    }
}

// crossover of coef·p0·τ^{p0−1} with pλτ^{p−1}
fn power_crossover(coef: f64, p0: f64, lambda: f64, p: f64) -> (f64, bool) {
    if p0 == f64::INFINITY {
        return (1.0, true);
    }
    if p0 == p {
        return (f64::INFINITY, coef * p0 <= p * lambda);
    }
    let tau = math::pow(p * lambda / (coef * p0), 1.0 / (p0 - p));
    (tau, p0 > p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phi::{SpatialField, TruncatedPhi};

    fn truncated(source: PhiSpec, lambda: f64, p: f64) -> PhiSpec {
        PhiSpec::Truncated(TruncatedPhi {
            source: Box::new(source),
            lambda,
            p,
        })
    }

    #[test]
    fn power_conjugate_closed_form() {
        let phi = PhiSpec::power(2.0);
        assert!((phi.conjugate([0.0, 0.0], 2.0).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(phi.conjugate([0.0, 0.0], 0.0).unwrap(), 0.0);
    }

    #[test]
    fn bisection_conjugate_matches_closed_form() {
        // t² + 0·t⁴ goes through the generic path
        let phi = PhiSpec::double_phase(2.0, 4.0, SpatialField::constant(0.0));
        for s in [0.5, 2.0, 9.0] {
            let v = phi.conjugate([0.0, 0.0], s).unwrap();
            assert!((v - s * s / 4.0).abs() < 1e-12 * (1.0 + s * s), "{s}: {v}");
        }
    }

    #[test]
    fn truncated_power_law_is_rescaled() {
        let phi = truncated(PhiSpec::power(3.0), 4.0, 3.0);
        let v = phi.eval([0.0, 0.0], 1.7).unwrap();
        let expected = 1.25 * libm::pow(1.7, 3.0);
        assert!((v - expected).abs() < 1e-13 * expected);
    }

    #[test]
    fn truncated_double_phase_closed_form() {
        let src = PhiSpec::double_phase(2.0, 4.0, SpatialField::constant(1.0));
        let phi = truncated(src, 2.0, 2.0);
        let local = phi.at([0.0, 0.0]).unwrap();
        let LocalPhi::Truncated(tr) = &local else { panic!() };
        assert!((tr.tau - libm::sqrt(0.5)).abs() < 1e-15);
        assert!((local.eval(1.0).unwrap() - 2.25).abs() < 1e-14);
        let t = 0.5;
        let below = 1.5 * t * t + t * t * t * t;
        assert!((local.eval(t).unwrap() - below).abs() < 1e-15);
    }

    #[test]
    fn generic_crossover_agrees_with_closed_form() {
        // a scaled double phase with p ≠ truncation p goes through the scan
        let src = PhiSpec::double_phase(2.5, 4.0, SpatialField::constant(1.0));
        let phi = truncated(src.clone(), 8.0, 2.0);
        let local = phi.at([0.0, 0.0]).unwrap();
        let LocalPhi::Truncated(tr) = &local else { panic!() };
        // 1.25 τ^{1/2} + 2τ² − 8 starts negative
        assert!(tr.base_first);
        let r = tr.crossover_ratio(tr.tau).unwrap();
        assert!(r.abs() < 1e-9, "{r}");
        let below = src.eval([0.0, 0.0], 0.5 * tr.tau).unwrap();
        let t = 0.5 * tr.tau;
        let v = local.eval(t).unwrap();
        assert!((v - (below + t * t / 8.0)).abs() < 1e-14);
    }

    #[test]
    fn infinite_exponent_truncation() {
        let phi = truncated(
            PhiSpec::variable_exponent(SpatialField::log_exponent(2.0)),
            2.0,
            4.0,
        );
        let local = phi.at([0.0, 0.0]).unwrap();
        // t^4/2 + 2 (t^4 − 1)_+
        assert!((local.eval(0.5).unwrap() - 0.0625 / 2.0).abs() < 1e-15);
        assert!((local.eval(2.0).unwrap() - (8.0 + 30.0)).abs() < 1e-12);
    }

    #[test]
    fn non_convex_source_rejected() {
        let grid = math::geometric_grid(1e-2, 10.0, 60);
        let src = PhiSpec::sampled_from(grid, libm::sqrt).unwrap();
        let phi = truncated(src, 2.0, 2.0);
        assert_eq!(phi.at([0.0, 0.0]).unwrap_err(), Error::NonConvexSource);
    }
}
