//! Iterates Φ^{(j)} and the Moser test functions `h_{j,β}(t) = √(Φ^{(j)}(t^{2β}))`.
//!
//! Above E every composition is the shift θ ↦ θ+1 of `θ = (ln t)^{1/m}`;
//! below E the linear (or bridge) branches are applied step by step until the
//! running value crosses E, after which the rest of the chain is a single shift.

use crate::error::{Error, Result};
use crate::logval::LogVal;
use crate::orlicz::{Side, Variant, Young, YoungFn};
use serde::{Deserialize, Serialize};

/// A value of an iterate chain: either still below E (as `ln t`), or on the
/// analytic branch as `θ = (ln t)^{1/m}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ThetaRep {
    Linear(f64),
    Analytic(f64),
}

impl ThetaRep {
    pub fn to_logval(self, m: f64) -> LogVal {
        match self {
            ThetaRep::Linear(l) => LogVal::from_ln(l),
            ThetaRep::Analytic(th) => LogVal::from_ln(th.powf(m)),
        }
    }
}

/// Parameters of an iterate / test function.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IterSpec {
    pub m: f64,
    pub j: u32,
    pub beta: f64,
    pub variant: Variant,
}

impl IterSpec {
    pub fn new(m: f64, j: u32, beta: f64, variant: Variant) -> Result<IterSpec> {
        let s = IterSpec { m, j, beta, variant };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.beta == 0.0 || !self.beta.is_finite() {
            return Err(Error::InvalidParameter(format!("beta must be nonzero and finite, got {}", self.beta)));
        }
        if self.beta > 0.0 && self.beta < 1.0 {
            return Err(Error::InvalidParameter(format!(
                "beta must satisfy beta < 0 or beta >= 1, got {}",
                self.beta
            )));
        }
        Young::new(self.m, self.variant).map(|_| ())
    }

    pub fn young(&self) -> Young {
        Young::new(self.m, self.variant).expect("IterSpec validated at construction")
    }
}

/// Φ^{(j)}(t) in θ-representation.
pub fn phi_iter_theta(phi: &Young, j: u32, t: LogVal) -> ThetaRep {
    let m = phi.m();
    let ln_e = phi.ln_e();
    if t.is_zero() {
        return ThetaRep::Linear(f64::NEG_INFINITY);
    }
    let mut w = t.ln();
    for k in 0..j {
        if w >= ln_e {
            return ThetaRep::Analytic(w.powf(1.0 / m) + (j - k) as f64);
        }
        w = phi.log_profile(w);
    }
    if w >= ln_e {
        ThetaRep::Analytic(w.powf(1.0 / m))
    } else {
        ThetaRep::Linear(w)
    }
}

/// Φ^{(j)}(t).
pub fn phi_iter(phi: &Young, j: u32, t: LogVal) -> LogVal {
    phi_iter_theta(phi, j, t).to_logval(phi.m())
}

/// Φ^{(−j)}(s), the exact inverse of [`phi_iter`].
pub fn phi_iter_inv(phi: &Young, j: u32, s: LogVal) -> LogVal {
    if s.is_zero() {
        return LogVal::ZERO;
    }
    let m = phi.m();
    let mut g = s.ln();
    let mut k = 0;
    if g >= phi.ln_f() {
        // Peel analytic steps as θ − 1 while the preimage stays ≥ E (θ ≥ 3).
        let th = g.powf(1.0 / m);
        let steps = ((th - 3.0).floor() + 1.0).clamp(0.0, j as f64) as u32;
        let mut th2 = th - steps as f64;
        k = steps;
        if th2 < 2.0 {
            // Rounding guard: never leave the analytic branch via the shift.
            th2 = 2.0;
        }
        g = th2.powf(m);
    }
    while k < j {
        g = phi.log_profile_inv(g);
        k += 1;
    }
    LogVal::from_ln(g)
}

/// `h_{j,β}(t) = √(Φ^{(j)}(t^{2β}))`.
pub fn h_eval(spec: &IterSpec, t: LogVal) -> Result<LogVal> {
    spec.validate()?;
    if t.is_zero() {
        return Err(Error::Domain("h_{j,beta} requires t > 0".into()));
    }
    Ok(phi_iter(&spec.young(), spec.j, t.powf(2.0 * spec.beta)).sqrt())
}

/// Log-log derivatives of `h`: with `L(u) = ln h(e^u)`, stores `L`, `L′`, `L″`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HJet {
    pub ln_h: f64,
    pub dlog: f64,
    pub d2log: f64,
}

impl HJet {
    /// `t h′/h` (signed).
    pub fn elasticity(&self) -> f64 {
        self.dlog
    }

    /// `Υ/h′² = 1 + h h″/h′²` with Υ = (h²/2)″.
    pub fn upsilon_ratio(&self) -> f64 {
        2.0 - 1.0 / self.dlog + self.d2log / (self.dlog * self.dlog)
    }

    /// `ln |h′(t)|` at `ln t = u`.
    pub fn ln_abs_h1(&self, u: f64) -> f64 {
        self.ln_h + self.dlog.abs().ln() - u
    }

    /// `h″(t)` relative to `h(t)/t²`: `L″ + L′² − L′`.
    pub fn h2_over_h_t2(&self) -> f64 {
        self.d2log + self.dlog * self.dlog - self.dlog
    }
}

/// Chain-rule propagation of `(G, G′, G″)` through `j` compositions, starting at `w0`.
pub fn iterate_log_jet(phi: &Young, j: u32, w0: f64, side: Side) -> (f64, f64, f64) {
    let (mut w, mut d1, mut d2) = (w0, 1.0, 0.0);
    for _ in 0..j {
        let g = phi.log_jet(w, side);
        d2 = g.g2 * d1 * d1 + g.g1 * d2;
        d1 *= g.g1;
        w = g.g;
    }
    (w, d1, d2)
}

/// Analytic one-sided jet of `h_{j,β}` at `t` (right-sided in `t^{2β}`).
pub fn h_jet(spec: &IterSpec, t: LogVal) -> Result<HJet> {
    h_jet_sided(spec, t, Side::Right)
}

pub fn h_jet_sided(spec: &IterSpec, t: LogVal, side: Side) -> Result<HJet> {
    spec.validate()?;
    jet_with(&spec.young(), spec, t, side)
}

/// Jet with a prebuilt Young function (Φ̃ construction is not free).
fn jet_with(phi: &Young, spec: &IterSpec, t: LogVal, side: Side) -> Result<HJet> {
    if t.is_zero() {
        return Err(Error::Domain("h_{j,beta} requires t > 0".into()));
    }
    let b = spec.beta;
    if spec.j == 0 {
        // h(t) = t^β
        return Ok(HJet { ln_h: b * t.ln(), dlog: b, d2log: 0.0 });
    }
    let (g, g1, g2) = iterate_log_jet(phi, spec.j, 2.0 * b * t.ln(), side);
    Ok(HJet { ln_h: 0.5 * g, dlog: b * g1, d2log: 2.0 * b * b * g2 })
}

/// `(t|h′|/h, Υ/h′²)` for `h_{j,β}`.
pub fn h_ratios(spec: &IterSpec, t: LogVal) -> Result<(f64, f64)> {
    let jet = h_jet(spec, t)?;
    Ok((jet.elasticity().abs(), jet.upsilon_ratio()))
}

/// Upper bound `(1 + j/2)^{m−1}` of Ω*_j(t) = (1 + j/(2 ln t)^{1/m})^{m−1} on `t ≥ e^{2^{m−1}}`.
pub fn omega_star_bound(m: f64, j: u32) -> f64 {
    (1.0 + j as f64 / 2.0).powf(m - 1.0)
}

/// Ω*_j(t) on the analytic branch.
pub fn omega_star(m: f64, j: u32, t: LogVal) -> f64 {
    (1.0 + j as f64 / (2.0 * t.ln()).powf(1.0 / m)).powf(m - 1.0)
}

/// The stated bracket for `Υ/h′²`.
pub fn upsilon_bracket(spec: &IterSpec) -> (f64, f64) {
    let top = match spec.variant {
        Variant::Phi => 2.0,
        Variant::PhiTilde => 3.0,
    };
    if spec.beta == 1.0 {
        (1.0, top)
    } else {
        (1.0, top + (spec.beta - 1.0).abs() / spec.beta.abs())
    }
}

/// Envelope of the bound checks over a log-grid of `t`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatioEnvelope {
    pub min_upsilon: f64,
    pub max_upsilon: f64,
    pub bracket: (f64, f64),
    /// `min t|h′|/h / |β|`, should be ≥ 1.
    pub min_elasticity: f64,
    /// `max t|h′|/h / (|β| j^{m−1})`, the empirical C_m.
    pub fitted_cm: f64,
    pub samples: usize,
}

impl RatioEnvelope {
    pub fn within(&self, tol: f64) -> bool {
        self.min_upsilon >= self.bracket.0 - tol
            && self.max_upsilon <= self.bracket.1 + tol
            && self.min_elasticity >= 1.0 - tol
            && self.fitted_cm.is_finite()
    }
}

/// Values of `ln t` at which some intermediate argument sits on a junction.
fn near_junction(phi: &Young, spec: &IterSpec, u: f64, rel: f64) -> bool {
    let kinks = phi.kinks();
    let mut w = 2.0 * spec.beta * u;
    for _ in 0..spec.j {
        if kinks.iter().any(|k| (w - k).abs() <= rel * k.abs().max(1.0)) {
            return true;
        }
        w = phi.log_profile(w);
    }
    false
}

/// Scans `ln t ∈ [lo, hi]` (`n` points), skipping a relative 1e−8 neighborhood of junctions.
pub fn ratio_envelope(spec: &IterSpec, lo: f64, hi: f64, n: usize) -> Result<RatioEnvelope> {
    spec.validate()?;
    let phi = spec.young();
    let mut env = RatioEnvelope {
        min_upsilon: f64::INFINITY,
        max_upsilon: f64::NEG_INFINITY,
        bracket: upsilon_bracket(spec),
        min_elasticity: f64::INFINITY,
        fitted_cm: 0.0,
        samples: 0,
    };
    let jm = (spec.j.max(1) as f64).powf(spec.m - 1.0);
    for i in 0..n {
        let u = lo + (hi - lo) * i as f64 / (n.max(2) - 1) as f64;
        if near_junction(&phi, spec, u, 1e-8) {
            continue;
        }
        let jet = jet_with(&phi, spec, LogVal::from_ln(u), Side::Right)?;
        let (e, ups) = (jet.elasticity().abs(), jet.upsilon_ratio());
        env.min_upsilon = env.min_upsilon.min(ups);
        env.max_upsilon = env.max_upsilon.max(ups);
        env.min_elasticity = env.min_elasticity.min(e / spec.beta.abs());
        env.fitted_cm = env.fitted_cm.max(e / (spec.beta.abs() * jm));
        env.samples += 1;
    }
    Ok(env)
}
