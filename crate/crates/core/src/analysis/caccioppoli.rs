use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::E;

use serde::{Deserialize, Serialize};

use crate::function_spaces::{gradient_field, ScalarField, TriangulatedDomain};
use crate::math;
use crate::phi::{check_a0, Ball, GrowthEnvelope, PhiSpec, Region};
use crate::regularization::{build_psi, PsiRegularization};
use crate::{Error, Result};

/// `K = 8 s q (L_q e − 1) L_q ln(2 L_p) / (p (p₁ ℓ − 1)(1 − σ)) + L_p`.
#[allow(clippy::too_many_arguments)]
pub fn caccioppoli_constant(l_p: f64, l_q: f64, p: f64, q: f64, s: f64, p1: f64, ell: f64, sigma: f64) -> f64 {
    8.0 * s * q * (l_q * E - 1.0) * l_q * math::ln(2.0 * l_p) / (p * (p1 * ell - 1.0) * (1.0 - sigma)) + l_p
}

/// Everything the Caccioppoli sides depend on besides `φ` and `u`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CaccioppoliParams {
    pub ball: Ball,
    pub sigma: f64,
    pub ell: f64,
    pub s: f64,
    /// Growth constants of `φ`.
    pub p: f64,
    pub q: f64,
    pub l_p: f64,
    pub l_q: f64,
    /// When set, replaces `q` by its value on the annulus where `∇η ≠ 0`.
    pub q_annulus: Option<f64>,
    pub psi: PsiRegularization,
    /// (Inc) exponent of `ψ`.
    pub p1: f64,
    /// (A0) constant of `ψ`.
    pub beta: f64,
    /// Vertex values of the cut-off `η`.
    pub cutoff: ScalarField,
}

impl CaccioppoliParams {
    /// `ψ = ψ_B` for the ball, the piecewise linear radial cut-off and
    /// `ℓ = 1`, `s = q`.
    pub fn standard(
        phi: &PhiSpec,
        envelope: &GrowthEnvelope,
        domain: &TriangulatedDomain,
        ball: Ball,
        sigma: f64,
        psi_grid: &[f64],
    ) -> Result<Self> {
        if !envelope.q.is_finite() {
            return Err(Error::InvalidParameter("the Caccioppoli constant needs a finite q".into()));
        }
        let psi = build_psi(phi, &ball, envelope.p, envelope.l_p, psi_grid)?;
        let beta = check_a0(&psi.to_phi_spec(), &Region::Points { points: alloc::vec![ball.center] })?;
        Ok(CaccioppoliParams {
            ball,
            sigma,
            ell: 1.0,
            s: envelope.q,
            p: envelope.p,
            q: envelope.q,
            l_p: envelope.l_p,
            l_q: envelope.l_q,
            q_annulus: None,
            p1: envelope.p,
            beta,
            cutoff: radial_cutoff(domain, &ball, sigma),
            psi,
        })
    }

    fn q_eff(&self) -> f64 {
        self.q_annulus.unwrap_or(self.q)
    }

    pub fn constant(&self) -> f64 {
        caccioppoli_constant(self.l_p, self.l_q, self.p, self.q_eff(), self.s, self.p1, self.ell, self.sigma)
    }

    pub fn validate(&self, domain: &TriangulatedDomain) -> Result<()> {
        let ok = self.sigma > 0.0
            && self.sigma < 1.0
            && self.p1 >= 1.0
            && self.ell > 1.0 / self.p1
            && self.s >= self.q_eff()
            && self.beta > 0.0
            && self.beta <= 1.0
            && self.p >= 1.0
            && self.l_p >= 1.0
            && self.l_q >= 1.0;
        if !ok {
            return Err(Error::InvalidParameter(format!("caccioppoli parameters {self:?}")));
        }
        self.cutoff.check(domain)?;
        let (c, rad) = (self.ball.center, self.ball.radius);
        for (i, (x, e)) in domain.vertices().iter().zip(&self.cutoff.values).enumerate() {
            let d = math::dist(*x, c);
            let bad = !(0.0..=1.0).contains(e) || (d <= self.sigma * rad && *e != 1.0) || (d >= rad && *e != 0.0);
            if bad {
                return Err(Error::InvalidCutoff(format!("η = {e} at vertex {i}, distance {d}")));
            }
        }
        let bound = 2.0 / ((1.0 - self.sigma) * rad);
        let g = gradient_field(domain, &self.cutoff)?;
        for (k, m) in g.magnitudes().iter().enumerate() {
            if *m > bound {
                return Err(Error::InvalidCutoff(format!("|∇η| = {m} > {bound} on triangle {k}")));
            }
        }
        Ok(())
    }
}

/// `η = 1` on `B_{σR}`, `0` outside `B_R`, linear in the distance between.
pub fn radial_cutoff(domain: &TriangulatedDomain, ball: &Ball, sigma: f64) -> ScalarField {
    let inner = sigma * ball.radius;
    let width = ball.radius - inner;
    ScalarField {
        values: domain
            .vertices()
            .iter()
            .map(|x| {
                let d = math::dist(*x, ball.center);
                ((ball.radius - d) / width).clamp(0.0, 1.0)
            })
            .collect(),
    }
}

/// Both sides of the Caccioppoli inequality and `K`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CaccioppoliOutcome {
    pub lhs: f64,
    #[serde(with = "crate::serde_ext::ext_real")]
    pub rhs: f64,
    pub k: f64,
    /// Triangles where `ψ(v) = +∞`, whose terms were dropped.
    pub infinite_psi: usize,
}

impl CaccioppoliOutcome {
    /// `lhs ≤ (1 + slack) rhs`.
    pub fn holds(&self, slack: f64) -> bool {
        self.lhs <= (1.0 + slack) * self.rhs
    }
}

/// `∫_B φ(x,|∇u|) ψ(v)^{−ℓ} η^s` and `K ∫_B ψ(v)^{−ℓ} φ(x, K v) η^{s−q}` with
/// `v = (u + R)/(βR)`, by centroid quadrature with area fractions of the ball.
pub fn caccioppoli_check(
    phi: &PhiSpec,
    domain: &TriangulatedDomain,
    u: &ScalarField,
    params: &CaccioppoliParams,
) -> Result<CaccioppoliOutcome> {
    u.check(domain)?;
    params.validate(domain)?;
    let k = params.constant();
    let rad = params.ball.radius;
    let weights = domain.ball_weights(&params.ball);
    let g = gradient_field(domain, u)?.magnitudes();
    let q = params.q_eff();
    let mut lhs = Vec::new();
    let mut rhs = Vec::new();
    let mut infinite_psi = 0;
    for (t, tri) in domain.triangles().iter().enumerate() {
        let f = weights[t];
        if f == 0.0 {
            continue;
        }
        let mean = |w: &ScalarField| (w.values[tri[0]] + w.values[tri[1]] + w.values[tri[2]]) / 3.0;
        let ubar = mean(u);
        if !(ubar >= 0.0) {
            return Err(Error::NonPositive { vertex: tri[0], value: ubar });
        }
        let eta = mean(&params.cutoff);
        let v = (ubar + rad) / (params.beta * rad);
        let psi = params.psi.eval(v)?;
        if psi == f64::INFINITY {
            infinite_psi += 1;
            continue;
        }
        let damp = math::pow(psi, -params.ell);
        let local = phi.at(domain.centroids()[t])?;
        let w = f * domain.areas()[t] * damp;
        lhs.push(w * local.eval(g[t])? * math::pow(eta, params.s));
        let r = local.eval(k * v)?;
        if r == f64::INFINITY {
            rhs.push(f64::INFINITY);
        } else {
            rhs.push(w * r * math::pow(eta, params.s - q));
        }
    }
    if infinite_psi > 0 {
        log::info!("caccioppoli: ψ(v) = ∞ on {infinite_psi} triangles, terms dropped");
    }
    let rhs_sum = if rhs.contains(&f64::INFINITY) {
        f64::INFINITY
    } else {
        k * math::tree_sum(&rhs)
    };
    Ok(CaccioppoliOutcome {
        lhs: math::tree_sum(&lhs),
        rhs: rhs_sum,
        k,
        infinite_psi,
    })
}
