//! Sampled certificates for (A0), (A1), (aInc)_p and (aDec)_q.
//!
//! Every check runs over finitely many points of the region and finitely
//! many values of `t`; a pass is a sampled certificate, not a proof.

use alloc::vec::Vec;
use core::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::local::LocalPhi;
use super::spec::PhiSpec;
use crate::error::GrowthCondition;
use crate::function_spaces::Shape;
use crate::math;
use crate::serde_ext::ext_real;
use crate::{Error, Point, Result};

/// Smallest β tried by the (A0) and (A1) searches.
pub const BETA_FLOOR: f64 = 1.0 / 1048576.0;

// rounding slack in the (A0) comparisons, so that tabulated powers hitting 1
// exactly at a dyadic β are accepted
const A0_RTOL: f64 = 1e-12;

/// A closed ball `B(center, radius)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ball {
    pub center: Point,
    pub radius: f64,
}

/// How many points of a region are sampled.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplePlan {
    pub interior: usize,
    pub boundary: usize,
    pub include_center: bool,
}

impl Default for SamplePlan {
    fn default() -> Self {
        SamplePlan {
            interior: 64,
            boundary: 16,
            include_center: true,
        }
    }
}

/// The set on which conditions are certified.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Region {
    Ball(Ball),
    Shape(Shape),
    Points { points: Vec<Point> },
}

/// Radical inverse of `i` in base `b`.
pub(crate) fn halton(mut i: usize, b: usize) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while i > 0 {
        f /= b as f64;
        r += f * (i % b) as f64;
        i /= b;
    }
    r
}

impl Ball {
    pub fn new(center: Point, radius: f64) -> Self {
        Ball { center, radius }
    }

    pub fn area(&self) -> f64 {
        PI * self.radius * self.radius
    }

    pub fn contains(&self, x: Point) -> bool {
        math::dist(x, self.center) <= self.radius
    }

    /// Halton points mapped area-uniformly into the ball, the center and
    /// equally spaced boundary points.
    pub fn sample_points(&self, plan: &SamplePlan) -> Vec<Point> {
        let mut out = Vec::with_capacity(plan.interior + plan.boundary + 1);
        if plan.include_center {
            out.push(self.center);
        }
        for i in 1..=plan.interior {
            let rho = self.radius * math::sqrt(halton(i, 2));
            let theta = 2.0 * PI * halton(i, 3);
            out.push([
                self.center[0] + rho * math::cos(theta),
                self.center[1] + rho * math::sin(theta),
            ]);
        }
        for k in 0..plan.boundary {
            let theta = 2.0 * PI * k as f64 / plan.boundary as f64;
            out.push([
                self.center[0] + self.radius * math::cos(theta),
                self.center[1] + self.radius * math::sin(theta),
            ]);
        }
        out
    }
}

impl Region {
    pub fn sample_points(&self, plan: &SamplePlan) -> Vec<Point> {
        match self {
            Region::Ball(b) => b.sample_points(plan),
            Region::Shape(s) => s.sample_points(plan),
            Region::Points { points } => points.clone(),
        }
    }
}

/// `φ` frozen at a finite set of points, for `φ⁺` and `φ⁻`.
#[derive(Clone, Debug)]
pub struct LocalizedSet<'a> {
    pub points: Vec<Point>,
    pub locals: Vec<LocalPhi<'a>>,
}

impl<'a> LocalizedSet<'a> {
    pub fn new(phi: &'a PhiSpec, points: Vec<Point>) -> Result<Self> {
        let locals = points.iter().map(|x| phi.at(*x)).collect::<Result<Vec<_>>>()?;
        Ok(LocalizedSet { points, locals })
    }

    /// `max_x φ(x, t)`.
    pub fn sup(&self, t: f64) -> Result<f64> {
        let mut m = 0.0f64;
        for l in &self.locals {
            m = m.max(l.eval(t)?);
        }
        Ok(m)
    }

    /// `min_x φ(x, t)`.
    pub fn inf(&self, t: f64) -> Result<f64> {
        let mut m = f64::INFINITY;
        for l in &self.locals {
            m = m.min(l.eval(t)?);
        }
        Ok(m)
    }
}

/// The constant required by a growth condition, with the pair attaining it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthWitness {
    #[serde(with = "ext_real")]
    pub required: f64,
    pub x: Point,
    pub s: f64,
    pub t: f64,
}

/// Certified constants of (aInc)_p and (aDec)_q.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthConstants {
    pub l_p: f64,
    pub l_q: f64,
}

// a / b with ∞/∞ = 0/0 = 1, so that "∞ ≤ L·∞" passes
fn ext_ratio(a: f64, b: f64) -> f64 {
    if a == b {
        1.0
    } else if b == 0.0 || a == f64::INFINITY {
        f64::INFINITY
    } else {
        a / b
    }
}

/// Smallest `L` with `φ(x,s)/s^e ≤ L φ(x,t)/t^e` over sampled `s < t`
/// (`increasing`), or `φ(x,t)/t^e ≤ L φ(x,s)/s^e` (`!increasing`).
pub fn required_constant(
    set: &LocalizedSet<'_>,
    exponent: f64,
    t_grid: &[f64],
    increasing: bool,
) -> Result<GrowthWitness> {
    let mut best = GrowthWitness {
        required: 1.0,
        x: set.points.first().copied().unwrap_or([0.0, 0.0]),
        s: t_grid[0],
        t: t_grid[0],
    };
    for (x, local) in set.points.iter().zip(&set.locals) {
        // extreme ratio over the prefix s ≤ t and where it was attained
        let mut ext = f64::NAN;
        let mut ext_at = t_grid[0];
        for &t in t_grid {
            let v = local.eval(t)?;
            let r = if v == f64::INFINITY {
                f64::INFINITY
            } else {
                v / math::pow(t, exponent)
            };
            if ext.is_nan() {
                ext = r;
                ext_at = t;
                continue;
            }
            if increasing {
                if r > ext {
                    ext = r;
                    ext_at = t;
                }
            } else if r < ext {
                ext = r;
                ext_at = t;
            }
            let need = if increasing { ext_ratio(ext, r) } else { ext_ratio(r, ext) };
            if need > best.required {
                best = GrowthWitness {
                    required: need,
                    x: *x,
                    s: ext_at,
                    t,
                };
            }
        }
    }
    Ok(best)
}

/// Certifies (aInc)_p and (aDec)_q on the sampled region. `q = +∞` is
/// vacuous and certified with `L_q = 1`.
pub fn check_growth(
    phi: &PhiSpec,
    region: &Region,
    p: f64,
    q: f64,
    t_grid: &[f64],
    cap: f64,
) -> Result<GrowthConstants> {
    if t_grid.is_empty() || t_grid[0] <= 0.0 || t_grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidParameter("t grid must be positive and increasing".into()));
    }
    let set = LocalizedSet::new(phi, region.sample_points(&SamplePlan::default()))?;
    let inc = required_constant(&set, p, t_grid, true)?;
    if !(inc.required <= cap) {
        return Err(Error::GrowthCapExceeded {
            condition: GrowthCondition::AlmostIncreasing(p),
            x: inc.x,
            s: inc.s,
            t: inc.t,
            required: inc.required,
            cap,
        });
    }
    let l_q = if q == f64::INFINITY {
        1.0
    } else {
        let dec = required_constant(&set, q, t_grid, false)?;
        if !(dec.required <= cap) {
            return Err(Error::GrowthCapExceeded {
                condition: GrowthCondition::AlmostDecreasing(q),
                x: dec.x,
                s: dec.s,
                t: dec.t,
                required: dec.required,
                cap,
            });
        }
        dec.required
    };
    Ok(GrowthConstants {
        l_p: inc.required,
        l_q,
    })
}

/// The largest `β ∈ {1, 1/2, 1/4, …}` down to [`BETA_FLOOR`] with
/// `φ(x,β) ≤ 1 ≤ φ(x,1/β)` at every sampled point.
pub fn check_a0(phi: &PhiSpec, region: &Region) -> Result<f64> {
    let set = LocalizedSet::new(phi, region.sample_points(&SamplePlan::default()))?;
    let mut beta = 1.0;
    let mut worst = set.points.first().copied().unwrap_or([0.0, 0.0]);
    while beta >= BETA_FLOOR {
        let mut ok = true;
        for (x, l) in set.points.iter().zip(&set.locals) {
            if !(l.eval(beta)? <= 1.0 + A0_RTOL && l.eval(1.0 / beta)? >= 1.0 - A0_RTOL) {
                ok = false;
                worst = *x;
                break;
            }
        }
        if ok {
            return Ok(beta);
        }
        beta *= 0.5;
    }
    Err(Error::A0Failure {
        x: worst,
        beta_floor: BETA_FLOOR,
    })
}

/// The function `ω` of (A1-ω).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Omega {
    /// `ω = φ`.
    Phi,
    /// `ω(x, t) = t^s`.
    Power { s: f64 },
    Custom { omega: PhiSpec },
}

/// Result of an (A1) search on one ball.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct A1Outcome {
    pub beta: f64,
    /// `[t_lo, t_hi]` where `ω_B⁻ ∈ [1, K/|B|]`, `None` when the band is empty.
    pub band: Option<(f64, f64)>,
}

impl A1Outcome {
    pub fn is_vacuous(&self) -> bool {
        self.band.is_none()
    }
}

const BAND_LO: f64 = 1e-12;
const BAND_HI: f64 = 1e12;

// smallest t in [lo, hi] with f(t) ≥ level (upper end of the final bracket)
fn first_at_least(f: &dyn Fn(f64) -> Result<f64>, level: f64) -> Result<Option<f64>> {
    if f(BAND_LO)? >= level {
        return Ok(Some(BAND_LO));
    }
    if f(BAND_HI)? < level {
        return Ok(None);
    }
    let (mut a, mut b) = (BAND_LO, BAND_HI);
    for _ in 0..200 {
        let m = math::sqrt(a * b);
        if m <= a || m >= b {
            break;
        }
        if f(m)? >= level {
            b = m;
        } else {
            a = m;
        }
    }
    Ok(Some(b))
}

// largest t in [lo, hi] with f(t) ≤ level (lower end of the final bracket)
fn last_at_most(f: &dyn Fn(f64) -> Result<f64>, level: f64) -> Result<Option<f64>> {
    if f(BAND_HI)? <= level {
        return Ok(Some(BAND_HI));
    }
    if f(BAND_LO)? > level {
        return Ok(None);
    }
    let (mut a, mut b) = (BAND_LO, BAND_HI);
    for _ in 0..200 {
        let m = math::sqrt(a * b);
        if m <= a || m >= b {
            break;
        }
        if f(m)? <= level {
            a = m;
        } else {
            b = m;
        }
    }
    Ok(Some(a))
}

/// Searches the largest `β ∈ {1, 1/2, …}` with `φ_B⁺(βt) ≤ φ_B⁻(t)` on
/// `band_samples` points of the band `ω_B⁻(t) ∈ [1, K/|B|]`.
pub fn check_a1(
    phi: &PhiSpec,
    ball: &Ball,
    k: f64,
    band_samples: usize,
    omega: &Omega,
) -> Result<A1Outcome> {
    if !(k >= 1.0) {
        return Err(Error::InvalidParameter(alloc::format!("A1 threshold K = {k} < 1")));
    }
    let points = ball.sample_points(&SamplePlan::default());
    let set = LocalizedSet::new(phi, points.clone())?;
    let custom = match omega {
        Omega::Custom { omega } => Some(LocalizedSet::new(omega, points)?),
        _ => None,
    };
    let omega_inf = |t: f64| -> Result<f64> {
        match omega {
            Omega::Phi => set.inf(t),
            Omega::Power { s } => Ok(math::pow(t, *s)),
            Omega::Custom { .. } => custom.as_ref().unwrap().inf(t),
        }
    };
    let upper = k / ball.area();
    let t_lo = first_at_least(&omega_inf, 1.0)?;
    let t_hi = last_at_most(&omega_inf, upper)?;
    let (t_lo, t_hi) = match (t_lo, t_hi) {
        (Some(a), Some(b)) if a <= b => (a, b),
        _ => {
            log::info!("(A1) band empty on ball of radius {}: vacuous pass", ball.radius);
            return Ok(A1Outcome { beta: 1.0, band: None });
        }
    };
    let samples = if t_lo == t_hi {
        alloc::vec![t_lo]
    } else {
        math::geometric_grid(t_lo, t_hi, band_samples.max(2))
    };
    let lower: Vec<f64> = samples.iter().map(|t| set.inf(*t)).collect::<Result<_>>()?;
    let mut beta = 1.0;
    let mut witness = t_lo;
    while beta >= BETA_FLOOR {
        let mut ok = true;
        for (t, lo) in samples.iter().zip(&lower) {
            if !(set.sup(beta * t)? <= *lo) {
                ok = false;
                witness = *t;
                break;
            }
        }
        if ok {
            return Ok(A1Outcome {
                beta,
                band: Some((t_lo, t_hi)),
            });
        }
        beta *= 0.5;
    }
    Err(Error::A1Failure {
        center: ball.center,
        radius: ball.radius,
        t: witness,
        beta_floor: BETA_FLOOR,
    })
}

/// Constants certifying (aInc)_p, (aDec)_q, (A0) and (A1) on a region.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthEnvelope {
    pub p: f64,
    #[serde(with = "ext_real")]
    pub q: f64,
    pub l_p: f64,
    pub l_q: f64,
    pub beta_a0: f64,
    pub beta_a1: f64,
    pub region: Region,
}

/// Parameters of [`GrowthEnvelope::certify`].
#[derive(Clone, Debug, PartialEq)]
pub struct CertifyOptions {
    pub t_grid: Vec<f64>,
    pub cap: f64,
    pub a1_balls: Vec<Ball>,
    pub a1_k: f64,
    pub band_samples: usize,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        CertifyOptions {
            t_grid: math::geometric_grid(1e-6, 1e3, 512),
            cap: 1e3,
            a1_balls: Vec::new(),
            a1_k: 1.0,
            band_samples: 64,
        }
    }
}

impl GrowthEnvelope {
    pub fn certify(
        phi: &PhiSpec,
        region: Region,
        p: f64,
        q: f64,
        opts: &CertifyOptions,
    ) -> Result<Self> {
        let growth = check_growth(phi, &region, p, q, &opts.t_grid, opts.cap)?;
        let beta_a0 = check_a0(phi, &region)?;
        let mut beta_a1 = 1.0f64;
        for ball in &opts.a1_balls {
            let out = check_a1(phi, ball, opts.a1_k, opts.band_samples, &Omega::Phi)?;
            beta_a1 = beta_a1.min(out.beta);
        }
        let env = GrowthEnvelope {
            p,
            q,
            l_p: growth.l_p,
            l_q: growth.l_q,
            beta_a0,
            beta_a1,
            region,
        };
        env.validate()?;
        Ok(env)
    }

    /// A trusted envelope for `t^p`, which satisfies everything with
    /// constants 1.
    pub fn power_law(p: f64, region: Region) -> Self {
        GrowthEnvelope {
            p,
            q: p,
            l_p: 1.0,
            l_q: 1.0,
            beta_a0: 1.0,
            beta_a1: 1.0,
            region,
        }
    }

    pub fn is_doubling(&self) -> bool {
        self.q.is_finite()
    }

    pub fn validate(&self) -> Result<()> {
        let beta_ok = |b: f64| b > 0.0 && b <= 1.0;
        if !(self.p >= 1.0 && self.p <= self.q)
            || !(self.l_p >= 1.0 && self.l_q >= 1.0)
            || !beta_ok(self.beta_a0)
            || !beta_ok(self.beta_a1)
        {
            return Err(Error::InvalidParameter(alloc::format!(
                "inconsistent growth envelope {self:?}"
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phi::SpatialField;

    fn unit_ball() -> Region {
        Region::Ball(Ball::new([0.0, 0.0], 1.0))
    }

    fn grid() -> Vec<f64> {
        math::geometric_grid(1e-6, 1e3, 512)
    }

    #[test]
    fn power_law_constants_are_one() {
        let c = check_growth(&PhiSpec::power(3.0), &unit_ball(), 3.0, 3.0, &grid(), 10.0).unwrap();
        assert!((c.l_p - 1.0).abs() < 1e-12 && (c.l_q - 1.0).abs() < 1e-12, "{c:?}");
    }

    #[test]
    fn double_phase_constants_are_one() {
        let phi = PhiSpec::double_phase(2.0, 4.0, SpatialField::constant(1.0));
        let c = check_growth(&phi, &unit_ball(), 2.0, 4.0, &grid(), 10.0).unwrap();
        assert_eq!(c, GrowthConstants { l_p: 1.0, l_q: 1.0 });
    }

    #[test]
    fn max_of_powers_fails_adec_three() {
        let g = grid();
        let phi = PhiSpec::sampled_from(g.clone(), |t| (t * t).max(t * t * t * t)).unwrap();
        let err = check_growth(&phi, &unit_ball(), 2.0, 3.0, &g, 10.0).unwrap_err();
        let Error::GrowthCapExceeded { s, t, required, cap, condition, .. } = err else {
            panic!("{err:?}")
        };
        assert_eq!(condition, GrowthCondition::AlmostDecreasing(3.0));
        assert!(s < t && required > cap);
        let r = |u: f64| (u * u).max(u * u * u * u) / (u * u * u);
        assert!(r(t) > cap * r(s));
    }

    #[test]
    fn a0_values() {
        let var = PhiSpec::variable_exponent(SpatialField::log_exponent(2.0));
        assert_eq!(check_a0(&var, &unit_ball()).unwrap(), 1.0);
        assert_eq!(check_a0(&PhiSpec::power(2.0), &unit_ball()).unwrap(), 1.0);
        let four = PhiSpec::sampled_from(grid(), |t| 4.0 * t * t).unwrap();
        assert_eq!(check_a0(&four, &unit_ball()).unwrap(), 0.5);
    }

    #[test]
    fn a1_power_law_is_one() {
        for k in [1.0, 10.0, 1e4] {
            let out = check_a1(&PhiSpec::power(3.0), &Ball::new([0.2, 0.1], 0.3), k, 32, &Omega::Phi)
                .unwrap();
            assert_eq!(out.beta, 1.0);
            assert!(!out.is_vacuous());
        }
    }

    #[test]
    fn a1_double_phase_dichotomy() {
        let weight = SpatialField::radial(1.0, 1.0);
        let good = PhiSpec::double_phase(3.0, 3.5, weight.clone());
        let bad = PhiSpec::double_phase(2.0, 8.0, weight);
        let mut good_betas = Vec::new();
        let mut bad_betas = Vec::new();
        for r in [1e-1, 1e-3, 1e-5] {
            let ball = Ball::new([0.0, 0.0], r);
            good_betas.push(check_a1(&good, &ball, 1.0, 64, &Omega::Phi).unwrap().beta);
            bad_betas.push(check_a1(&bad, &ball, 1.0, 64, &Omega::Phi).unwrap().beta);
        }
        assert!(good_betas.iter().all(|b| *b >= 0.25), "{good_betas:?}");
        assert!(bad_betas.windows(2).all(|w| w[1] < w[0]), "{bad_betas:?}");
        let tiny = Ball::new([0.0, 0.0], 1e-12);
        assert!(matches!(
            check_a1(&bad, &tiny, 1.0, 64, &Omega::Phi),
            Err(Error::A1Failure { .. })
        ));
    }

    #[test]
    fn a1_power_omega_band() {
        let out = check_a1(
            &PhiSpec::power(2.0),
            &Ball::new([0.0, 0.0], 0.5),
            1.0,
            16,
            &Omega::Power { s: 2.0 },
        )
        .unwrap();
        let (lo, hi) = out.band.unwrap();
        assert!((lo - 1.0).abs() < 1e-9);
        assert!((hi - libm::sqrt(1.0 / (PI * 0.25))).abs() < 1e-9);
    }

    #[test]
    fn ball_samples_stay_in_ball() {
        let b = Ball::new([0.3, -0.2], 0.25);
        let pts = b.sample_points(&SamplePlan::default());
        assert_eq!(pts.len(), 81);
        assert!(pts.iter().all(|x| math::dist(*x, b.center) <= b.radius * (1.0 + 1e-12)));
    }
}
