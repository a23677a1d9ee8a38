//! The Φ_m Young-function family, its C¹ variant Φ̃_m, conjugates and the
//! two Orlicz functionals (Luxemburg norm, nonhomogeneous quasi-norm).
//!
//! Everything is expressed through the log-log profile `G(w) = ln Φ(e^w)`.
//! For Φ_m the analytic branch is `G(w) = (w^{1/m} + 1)^m`, so composing Φ
//! shifts `θ = w^{1/m}` by one; the linear branch is `G(w) = w + ln(F/E)`.

use crate::error::{Error, Result};
use crate::logval::LogVal;
use serde::{Deserialize, Serialize};

/// Which one-sided value to report at a derivative jump.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// `(G, G′, G″)` of `G(w) = ln Φ(e^w)` at one point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogJet {
    pub g: f64,
    pub g1: f64,
    pub g2: f64,
}

/// Common interface of the Young functions used by the iteration machinery.
pub trait YoungFn {
    fn m(&self) -> f64;
    /// `ln E`, the start of the analytic branch.
    fn ln_e(&self) -> f64;
    /// `ln F = ln Φ(E)`.
    fn ln_f(&self) -> f64;
    /// `ln Φ′(0⁺)`: below this slope the conjugate vanishes.
    fn ln_min_slope(&self) -> f64;
    /// Points (as `ln t`) where Φ′ may jump.
    fn kinks(&self) -> Vec<f64>;
    /// `ln Φ(e^w)`.
    fn log_profile(&self, w: f64) -> f64;
    /// Inverse of [`YoungFn::log_profile`].
    fn log_profile_inv(&self, g: f64) -> f64;
    fn log_jet(&self, w: f64, side: Side) -> LogJet;

    fn eval(&self, t: LogVal) -> LogVal {
        if t.is_zero() {
            LogVal::ZERO
        } else {
            LogVal::from_ln(self.log_profile(t.ln()))
        }
    }

    fn inv(&self, s: LogVal) -> LogVal {
        if s.is_zero() {
            LogVal::ZERO
        } else {
            LogVal::from_ln(self.log_profile_inv(s.ln()))
        }
    }

    /// One-sided `(Φ′(t), Φ″(t))`.
    fn derivatives(&self, t: LogVal, side: Side) -> Result<(LogVal, LogVal)> {
        if t.is_zero() {
            return Err(Error::Domain("second derivative requested at t = 0".into()));
        }
        let w = t.ln();
        let j = self.log_jet(w, side);
        let d1 = LogVal::from_ln(j.g - w + j.g1.ln());
        // Φ″ = (Φ/t²)(G′² − G′ + G″)
        let c = j.g1 * j.g1 - j.g1 + j.g2;
        let d2 = if c <= 1e-14 * j.g1 * j.g1 {
            LogVal::ZERO
        } else {
            LogVal::from_ln(j.g - 2.0 * w + c.ln())
        };
        Ok((d1, d2))
    }

    /// Convex conjugate `Φ*(s) = sup_t (st − Φ(t))`.
    ///
    /// The supremand is unimodal in `ln t` (Φ′ is monotone), so a golden-section
    /// search over `ln t ∈ [−40, 400]` plus the kink candidates suffices.
    fn conjugate(&self, s: LogVal) -> LogVal {
        if s.is_zero() || s.ln() <= self.ln_min_slope() {
            return LogVal::ZERO;
        }
        let ls = s.ln();
        let obj = |u: f64| SignedLn::diff(ls + u, self.log_profile(u));
        let (mut lo, mut hi) = (-40.0f64, 400.0f64);
        let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
        let mut c = hi - inv_phi * (hi - lo);
        let mut d = lo + inv_phi * (hi - lo);
        let (mut fc, mut fd) = (obj(c), obj(d));
        for _ in 0..200 {
            if fc >= fd {
                hi = d;
                d = c;
                fd = fc;
                c = hi - inv_phi * (hi - lo);
                fc = obj(c);
            } else {
                lo = c;
                c = d;
                fc = fd;
                d = lo + inv_phi * (hi - lo);
                fd = obj(d);
            }
        }
        let mut best = if fc >= fd { fc } else { fd };
        for u in self.kinks().into_iter().chain([-40.0, 400.0]) {
            let v = obj(u);
            if v > best {
                best = v;
            }
        }
        best.to_logval()
    }
}

/// Signed real stored as `(sign, ln|x|)`, totally ordered like the real line.
#[derive(Clone, Copy, Debug, PartialEq)]
struct SignedLn {
    sign: i8,
    ln_abs: f64,
}

impl SignedLn {
    /// `e^a − e^b`.
    fn diff(a: f64, b: f64) -> SignedLn {
        if a == b {
            return SignedLn { sign: 0, ln_abs: f64::NEG_INFINITY };
        }
        let (sign, hi, lo) = if a > b { (1, a, b) } else { (-1, b, a) };
        SignedLn { sign, ln_abs: hi + (-(lo - hi).exp()).ln_1p() }
    }

    fn to_logval(self) -> LogVal {
        if self.sign > 0 {
            LogVal::from_ln(self.ln_abs)
        } else {
            LogVal::ZERO
        }
    }
}

impl PartialOrd for SignedLn {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        use std::cmp::Ordering::*;
        match self.sign.cmp(&other.sign) {
            Equal => match self.sign {
                0 => Some(Equal),
                1 => self.ln_abs.partial_cmp(&other.ln_abs),
                _ => other.ln_abs.partial_cmp(&self.ln_abs),
            },
            o => Some(o),
        }
    }
}

fn check_m(m: f64) -> Result<()> {
    if !(m > 1.0) || !m.is_finite() {
        return Err(Error::InvalidParameter(format!("m must be a finite real > 1, got {m}")));
    }
    Ok(())
}

/// Φ_m: linear with slope F/E up to E = e^{2^m}, then `exp(((ln t)^{1/m}+1)^m)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhiM {
    m: f64,
    ln_e: f64,
    ln_f: f64,
}

impl PhiM {
    pub fn new(m: f64) -> Result<PhiM> {
        check_m(m)?;
        Ok(PhiM { m, ln_e: 2f64.powf(m), ln_f: 3f64.powf(m) })
    }

    pub fn e(&self) -> LogVal {
        LogVal::from_ln(self.ln_e)
    }

    pub fn f(&self) -> LogVal {
        LogVal::from_ln(self.ln_f)
    }

    /// `ln(F/E) = 3^m − 2^m`.
    pub fn ln_slope(&self) -> f64 {
        self.ln_f - self.ln_e
    }

    /// Ω(t) = (1 + (ln t)^{−1/m})^{m−1}, the factor with Φ′ = (Φ/t)Ω on the analytic branch.
    pub fn omega(&self, lt: f64) -> f64 {
        (1.0 + lt.powf(-1.0 / self.m)).powf(self.m - 1.0)
    }

    /// Γ(t) with Φ″ = (Φ/t²)·Ω·Γ on the analytic branch.
    pub fn gamma(&self, lt: f64) -> f64 {
        let m = self.m;
        let om = self.omega(lt);
        om - 1.0 - ((m - 1.0) / m) / (om.powf(1.0 / (m - 1.0)) * lt.powf(1.0 + 1.0 / m))
    }

    /// Gap between the two one-sided values of ln Φ at E (zero up to rounding).
    pub fn branch_gap(&self) -> f64 {
        let left = self.ln_e + self.ln_slope();
        let right = (self.ln_e.powf(1.0 / self.m) + 1.0).powf(self.m);
        (left - right).abs()
    }

    /// `Φ′(E⁺) / (F/E) = (3/2)^{m−1}`; the extension condition asks for > 1.
    pub fn extension_ratio(&self) -> f64 {
        self.log_jet(self.ln_e, Side::Right).g1
    }
}

impl YoungFn for PhiM {
    fn m(&self) -> f64 {
        self.m
    }
    fn ln_e(&self) -> f64 {
        self.ln_e
    }
    fn ln_f(&self) -> f64 {
        self.ln_f
    }
    fn ln_min_slope(&self) -> f64 {
        self.ln_slope()
    }
    fn kinks(&self) -> Vec<f64> {
        vec![self.ln_e]
    }

    fn log_profile(&self, w: f64) -> f64 {
        if w <= self.ln_e {
            w + self.ln_slope()
        } else {
            (w.powf(1.0 / self.m) + 1.0).powf(self.m)
        }
    }

    fn log_profile_inv(&self, g: f64) -> f64 {
        if g <= self.ln_f {
            g - self.ln_slope()
        } else {
            (g.powf(1.0 / self.m) - 1.0).powf(self.m)
        }
    }

    fn log_jet(&self, w: f64, side: Side) -> LogJet {
        let linear = match side {
            Side::Left => w <= self.ln_e,
            Side::Right => w < self.ln_e,
        };
        if linear {
            return LogJet { g: w + self.ln_slope(), g1: 1.0, g2: 0.0 };
        }
        let m = self.m;
        let th = w.powf(1.0 / m);
        let base = 1.0 + 1.0 / th;
        LogJet {
            g: (th + 1.0).powf(m),
            g1: base.powf(m - 1.0),
            g2: -((m - 1.0) / m) * base.powf(m - 2.0) / (th * w),
        }
    }
}

/// The bridge ϱ_m on [a, E], stored in the normalized chart
/// `X = t/E ∈ [x0, 1]`, `Y = ϱ/F`, where the endpoint data are
/// `Y(x0) = x0/2`, `Y′(x0) = 1/2`, `Y(1) = 1`, `Y′(1) = q = (3/2)^{m−1}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Bridge {
    /// `Y = X/2` on `[x0, ξ]`, then `c (X − xs)^p` on `[ξ, 1]`. Log-concave,
    /// so `ϱϱ″/ϱ′² ≤ 1`.
    LinearPower { xi: f64, xs: f64, p: f64, c: f64 },
    /// C¹ convex quadratic spline with its knot at the intersection of the
    /// two endpoint tangents.
    QuadraticSpline { xi: f64, k0: f64, k1: f64 },
}

/// Result of testing the explicit quadratic ϱ_m against its four endpoint conditions.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExampleBridgeCheck {
    /// α/E for the example's α.
    pub alpha_ratio: f64,
    /// Relative residuals of ϱ(a)=E, ϱ(E)=F, ϱ′(a)=F/(2E), ϱ′(E)=(F/E)(3/2)^{m−1}.
    pub residuals: [f64; 4],
    pub passes: bool,
}

impl Bridge {
    fn eval(&self, x: f64, x0: f64, q: f64) -> (f64, f64, f64) {
        match *self {
            Bridge::LinearPower { xi, xs, p, c } => {
                if x <= xi {
                    (0.5 * x, 0.5, 0.0)
                } else {
                    let d = x - xs;
                    (c * d.powf(p), c * p * d.powf(p - 1.0), c * p * (p - 1.0) * d.powf(p - 2.0))
                }
            }
            Bridge::QuadraticSpline { xi, k0, k1 } => {
                if x <= xi {
                    let d = x - x0;
                    (0.5 * x0 + 0.5 * d + k0 * d * d, 0.5 + 2.0 * k0 * d, 2.0 * k0)
                } else {
                    let d = x - 1.0;
                    (1.0 + q * d + k1 * d * d, q + 2.0 * k1 * d, 2.0 * k1)
                }
            }
        }
    }

    /// Log-concave linear+power bridge, if one exists with its knot inside `[x0, 1)`.
    fn linear_power(x0: f64, q: f64) -> Option<Bridge> {
        // Tangency with Y = X/2 at ξ and matching value/slope at X=1 give
        // 1 − xs = p/q, ξ = (p/q − 1)/(p − 1) and the scalar equation below.
        let g = |p: f64| (p - 1.0) * ((p / q - 1.0) / (p - 1.0)).ln() + 2f64.ln() + p * q.ln();
        let p_lo = q.max(1.0) * (1.0 + 1e-9);
        let mut prev = p_lo;
        let mut gprev = g(prev);
        let mut root = None;
        for i in 1..=4000 {
            let p = p_lo * (1e4f64 / p_lo).powf(i as f64 / 4000.0);
            let gp = g(p);
            if gprev.is_finite() && gp.is_finite() && gprev.signum() != gp.signum() {
                let (mut a, mut b) = (prev, p);
                for _ in 0..200 {
                    let mid = 0.5 * (a + b);
                    if g(mid).signum() == g(a).signum() {
                        a = mid;
                    } else {
                        b = mid;
                    }
                }
                root = Some(0.5 * (a + b));
                break;
            }
            prev = p;
            gprev = gp;
        }
        let p = root?;
        let xi = (p / q - 1.0) / (p - 1.0);
        if !(xi >= x0 && xi < 1.0) {
            return None;
        }
        let xs = 1.0 - p / q;
        let c = (q / p).powf(p);
        Some(Bridge::LinearPower { xi, xs, p, c })
    }

    fn quadratic_spline(x0: f64, q: f64) -> Bridge {
        let y0 = 0.5 * x0;
        let s0 = 0.5;
        let xi = (1.0 - q - y0 + s0 * x0) / (s0 - q);
        let secant = (1.0 - y0) / (1.0 - x0);
        let k0 = (secant - s0) / (2.0 * (xi - x0));
        let k1 = (q - secant) / (2.0 * (1.0 - xi));
        Bridge::QuadraticSpline { xi, k0, k1 }
    }
}

/// Φ̃_m: Φ_m above E, the bridge ϱ_m on [a, E] with a = 2E²/F, and slope F/(2E) below a.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhiTildeM {
    phi: PhiM,
    /// ln(a/E) = ln 2 + 2^m − 3^m.
    ln_x0: f64,
    q: f64,
    bridge: Bridge,
    example_check: ExampleBridgeCheck,
    c_m: f64,
}

impl PhiTildeM {
    pub fn new(m: f64) -> Result<PhiTildeM> {
        let phi = PhiM::new(m)?;
        let ln_x0 = 2f64.ln() + phi.ln_e - phi.ln_f;
        let x0 = ln_x0.exp();
        let q = 1.5f64.powf(m - 1.0);
        let secant = (1.0 - 0.5 * x0) / (1.0 - x0);
        if !(secant < q && x0 < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "m = {m} too close to 1: no convex bridge between slopes 1/2 and {q}"
            )));
        }
        let example_check = Self::check_example(&phi, x0, q);
        let bridge = if example_check.passes {
            // Never reached for m > 1, kept so the check stays the gatekeeper.
            Bridge::quadratic_spline(x0, q)
        } else {
            Bridge::linear_power(x0, q).unwrap_or_else(|| Bridge::quadratic_spline(x0, q))
        };
        let mut out = PhiTildeM { phi, ln_x0, q, bridge, example_check, c_m: 2.0 };
        out.c_m = out.measure_c_m();
        Ok(out)
    }

    pub fn phi(&self) -> &PhiM {
        &self.phi
    }

    pub fn bridge(&self) -> Bridge {
        self.bridge
    }

    /// `a = 2E²/F`.
    pub fn a(&self) -> LogVal {
        LogVal::from_ln(self.ln_x0 + self.phi.ln_e)
    }

    pub fn example_check(&self) -> ExampleBridgeCheck {
        self.example_check
    }

    /// Constant with `Φ/C_m ≤ Φ̃ ≤ Φ` on `[0, ∞)`, measured on the bridge.
    pub fn c_m(&self) -> f64 {
        self.c_m
    }

    fn measure_c_m(&self) -> f64 {
        let x0 = self.ln_x0.exp();
        let n = 20_000;
        let mut worst: f64 = 2.0;
        for i in 0..=n {
            let x = x0 + (1.0 - x0) * i as f64 / n as f64;
            let (y, _, _) = self.bridge.eval(x, x0, self.q);
            worst = worst.max(x / y);
        }
        worst
    }

    /// Endpoint residuals of `Y(x0), Y(1), Y′(x0), Y′(1)` for the bridge actually in use.
    pub fn bridge_residuals(&self) -> [f64; 4] {
        let x0 = self.ln_x0.exp();
        let (ya, sa, _) = self.bridge.eval(x0, x0, self.q);
        let (yb, sb, _) = self.bridge.eval(1.0, x0, self.q);
        [
            (ya / (0.5 * x0) - 1.0).abs(),
            (yb - 1.0).abs(),
            (sa / 0.5 - 1.0).abs(),
            (sb / self.q - 1.0).abs(),
        ]
    }

    /// Largest `ϱϱ″/ϱ′²` over a fine grid of the bridge.
    pub fn bridge_curvature_ratio(&self) -> f64 {
        let x0 = self.ln_x0.exp();
        let n = 20_000;
        (0..=n)
            .map(|i| {
                let x = x0 + (1.0 - x0) * i as f64 / n as f64;
                let (y, y1, y2) = self.bridge.eval(x, x0, self.q);
                y * y2 / (y1 * y1)
            })
            .fold(0.0, f64::max)
    }

    fn check_example(phi: &PhiM, x0: f64, q: f64) -> ExampleBridgeCheck {
        // ϱ(t) = E + (F/2E)(t − a) + [A/(E−α)](t−α)²/2 on (α, E], with
        // A = (F/E)(q − 1/2) and α = 2A/E − E.  Normalized: α/E = 2(q−½)F/E³ − 1.
        let a_hat = q - 0.5;
        let alpha = 2.0 * a_hat * (phi.ln_f - 3.0 * phi.ln_e).exp() - 1.0;
        let eval = |x: f64| {
            let base = 0.5 * x0 + 0.5 * (x - x0);
            if alpha.is_finite() && x > alpha && alpha < 1.0 {
                let k = a_hat / (1.0 - alpha);
                (base + 0.5 * k * (x - alpha).powi(2), 0.5 + k * (x - alpha))
            } else {
                (base, 0.5)
            }
        };
        let (ya, sa) = eval(x0);
        let (yb, sb) = eval(1.0);
        let residuals = [
            (ya / (0.5 * x0) - 1.0).abs(),
            (yb - 1.0).abs(),
            (sa / 0.5 - 1.0).abs(),
            (sb / q - 1.0).abs(),
        ];
        let passes = residuals.iter().all(|r| *r <= 1e-9);
        ExampleBridgeCheck { alpha_ratio: alpha, residuals, passes }
    }
}

impl YoungFn for PhiTildeM {
    fn m(&self) -> f64 {
        self.phi.m
    }
    fn ln_e(&self) -> f64 {
        self.phi.ln_e
    }
    fn ln_f(&self) -> f64 {
        self.phi.ln_f
    }
    fn ln_min_slope(&self) -> f64 {
        self.phi.ln_slope() - 2f64.ln()
    }
    fn kinks(&self) -> Vec<f64> {
        vec![self.ln_x0 + self.phi.ln_e, self.phi.ln_e]
    }

    fn log_profile(&self, w: f64) -> f64 {
        self.log_jet(w, Side::Right).g
    }

    fn log_profile_inv(&self, g: f64) -> f64 {
        let ln_e = self.phi.ln_e;
        let ln_a = self.ln_x0 + ln_e;
        if g >= self.phi.ln_f {
            return self.phi.log_profile_inv(g);
        }
        if g <= ln_e {
            return g - self.ln_min_slope();
        }
        // Bridge: G is increasing on [ln a, ln E]; bisect.
        let (mut lo, mut hi) = (ln_a, ln_e);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.log_profile(mid) < g {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-15 * hi.abs().max(1.0) {
                break;
            }
        }
        0.5 * (lo + hi)
    }

    fn log_jet(&self, w: f64, side: Side) -> LogJet {
        let ln_e = self.phi.ln_e;
        let ln_a = self.ln_x0 + ln_e;
        let upper = match side {
            Side::Left => w > ln_e,
            Side::Right => w >= ln_e,
        };
        if upper {
            return self.phi.log_jet(w, Side::Right);
        }
        let lower = match side {
            Side::Left => w <= ln_a,
            Side::Right => w < ln_a,
        };
        if lower {
            return LogJet { g: w + self.ln_min_slope(), g1: 1.0, g2: 0.0 };
        }
        let x = (w - ln_e).exp();
        let (y, y1, y2) = self.bridge.eval(x, self.ln_x0.exp(), self.q);
        let r = x * y1 / y;
        LogJet { g: self.phi.ln_f + y.ln(), g1: r, g2: r + x * x * y2 / y - r * r }
    }
}

/// Which member of the family a [`Young`] value is.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Phi,
    PhiTilde,
}

/// Serializable handle on Φ_m or Φ̃_m, written as `{"m": .., "variant": "phi"|"phi_tilde"}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "YoungSpec", into = "YoungSpec")]
pub enum Young {
    Phi(PhiM),
    PhiTilde(PhiTildeM),
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct YoungSpec {
    pub m: f64,
    pub variant: Variant,
}

impl TryFrom<YoungSpec> for Young {
    type Error = Error;
    fn try_from(s: YoungSpec) -> Result<Young> {
        Young::new(s.m, s.variant)
    }
}

impl From<Young> for YoungSpec {
    fn from(y: Young) -> YoungSpec {
        YoungSpec { m: y.m(), variant: y.variant() }
    }
}

impl Young {
    pub fn new(m: f64, variant: Variant) -> Result<Young> {
        Ok(match variant {
            Variant::Phi => Young::Phi(PhiM::new(m)?),
            Variant::PhiTilde => Young::PhiTilde(PhiTildeM::new(m)?),
        })
    }

    pub fn phi(m: f64) -> Result<Young> {
        Young::new(m, Variant::Phi)
    }

    pub fn phi_tilde(m: f64) -> Result<Young> {
        Young::new(m, Variant::PhiTilde)
    }

    pub fn variant(&self) -> Variant {
        match self {
            Young::Phi(_) => Variant::Phi,
            Young::PhiTilde(_) => Variant::PhiTilde,
        }
    }

    fn inner(&self) -> &dyn YoungFn {
        match self {
            Young::Phi(p) => p,
            Young::PhiTilde(p) => p,
        }
    }
}

impl YoungFn for Young {
    fn m(&self) -> f64 {
        self.inner().m()
    }
    fn ln_e(&self) -> f64 {
        self.inner().ln_e()
    }
    fn ln_f(&self) -> f64 {
        self.inner().ln_f()
    }
    fn ln_min_slope(&self) -> f64 {
        self.inner().ln_min_slope()
    }
    fn kinks(&self) -> Vec<f64> {
        self.inner().kinks()
    }
    fn log_profile(&self, w: f64) -> f64 {
        self.inner().log_profile(w)
    }
    fn log_profile_inv(&self, g: f64) -> f64 {
        self.inner().log_profile_inv(g)
    }
    fn log_jet(&self, w: f64, side: Side) -> LogJet {
        self.inner().log_jet(w, side)
    }
}

/// Φ_m(t).
pub fn phi_eval(m: f64, t: LogVal) -> Result<LogVal> {
    Ok(PhiM::new(m)?.eval(t))
}

/// Φ_m^{−1}(s).
pub fn phi_inv(m: f64, s: LogVal) -> Result<LogVal> {
    Ok(PhiM::new(m)?.inv(s))
}

/// Right-sided `(Φ_m′(t), Φ_m″(t))`.
pub fn phi_derivatives(m: f64, t: LogVal) -> Result<(LogVal, LogVal)> {
    PhiM::new(m)?.derivatives(t, Side::Right)
}

/// Φ̃_m(t).
pub fn phi_tilde_eval(m: f64, t: LogVal) -> Result<LogVal> {
    Ok(PhiTildeM::new(m)?.eval(t))
}

/// Φ_m*(s).
pub fn conjugate_eval(m: f64, s: LogVal) -> Result<LogVal> {
    Ok(PhiM::new(m)?.conjugate(s))
}

/// Adapter presenting the conjugate Φ* as a (numerically evaluated) Young function,
/// enough for Luxemburg norms in `L^{Φ*}`.
pub struct Conjugate<'a, Y: YoungFn>(pub &'a Y);

/// Sample points with nonnegative weights.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscreteMeasure {
    weights: Vec<f64>,
    total: f64,
    normalized: bool,
}

impl DiscreteMeasure {
    pub fn new(weights: Vec<f64>) -> Result<DiscreteMeasure> {
        if let Some(w) = weights.iter().find(|w| !(**w >= 0.0) || !w.is_finite()) {
            return Err(Error::InvalidMeasure(format!("weight {w} is negative or not finite")));
        }
        let total = weights.iter().sum();
        Ok(DiscreteMeasure { weights, total, normalized: false })
    }

    /// Uniform probability measure on `n` points.
    pub fn uniform(n: usize) -> DiscreteMeasure {
        DiscreteMeasure { weights: vec![1.0 / n as f64; n], total: 1.0, normalized: true }
    }

    /// Rescaled to unit mass.
    pub fn normalized(&self) -> Result<DiscreteMeasure> {
        if !(self.total > 0.0) {
            return Err(Error::InvalidMeasure("zero total mass".into()));
        }
        Ok(DiscreteMeasure {
            weights: self.weights.iter().map(|w| w / self.total).collect(),
            total: 1.0,
            normalized: true,
        })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn total_mass(&self) -> f64 {
        self.total
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    fn require_mass(&self) -> Result<()> {
        if !(self.total > 0.0) {
            return Err(Error::InvalidMeasure("measure has zero total mass".into()));
        }
        Ok(())
    }

    fn check_len(&self, n: usize) -> Result<()> {
        if n != self.weights.len() {
            return Err(Error::InvalidParameter(format!(
                "{} samples against a measure on {} points",
                n,
                self.weights.len()
            )));
        }
        Ok(())
    }
}

/// `∫ Φ(|f|/t) dμ` in the log domain, with `ln t = lt`.
fn modular_ln<Y: YoungFn + ?Sized>(phi: &Y, ln_abs: &[f64], mu: &DiscreteMeasure, lt: f64) -> f64 {
    let terms: Vec<f64> = ln_abs
        .iter()
        .zip(mu.weights())
        .filter(|(l, w)| **w > 0.0 && l.is_finite())
        .map(|(l, w)| w.ln() + phi.log_profile(l - lt))
        .collect();
    crate::logval::log_sum_exp(&terms)
}

/// Luxemburg norm `inf{t > 0 : ∫ Φ(|f|/t) dμ ≤ 1}`, by bisection to relative 1e−10.
pub fn luxemburg_norm<Y: YoungFn + ?Sized>(phi: &Y, f: &[f64], mu: &DiscreteMeasure) -> Result<f64> {
    let ln_abs: Vec<f64> = f.iter().map(|x| x.abs().ln()).collect();
    luxemburg_norm_ln(phi, &ln_abs, mu).map(|l| l.exp())
}

/// Luxemburg norm for samples given as `ln |f|`; returns `ln ‖f‖`.
pub fn luxemburg_norm_ln<Y: YoungFn + ?Sized>(phi: &Y, ln_abs: &[f64], mu: &DiscreteMeasure) -> Result<f64> {
    mu.require_mass()?;
    mu.check_len(ln_abs.len())?;
    let supp_mass: f64 = ln_abs
        .iter()
        .zip(mu.weights())
        .filter(|(l, _)| l.is_finite())
        .map(|(_, w)| *w)
        .sum();
    let ln_sup = ln_abs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if supp_mass <= 0.0 || ln_sup == f64::NEG_INFINITY {
        return Ok(f64::NEG_INFINITY);
    }
    // ‖f‖∞ / Φ^{−1}(1/μ(supp f)) is always feasible.
    let mut hi = ln_sup - phi.log_profile_inv(-supp_mass.ln());
    let mut step = 1.0;
    while modular_ln(phi, ln_abs, mu, hi) > 0.0 {
        hi += step;
        step *= 2.0;
    }
    let mut lo = hi - 1.0;
    step = 1.0;
    while modular_ln(phi, ln_abs, mu, lo) <= 0.0 {
        hi = lo;
        lo -= step;
        step *= 2.0;
        if step > 1e6 {
            return Err(Error::Numerical("Luxemburg bracket did not close".into()));
        }
    }
    while hi - lo > 1e-10 {
        let mid = 0.5 * (lo + hi);
        if modular_ln(phi, ln_abs, mu, mid) <= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Nonhomogeneous quasi-norm `Φ^{−1}(∫ Φ(|f|) dμ)`.
pub fn orlicz_quasinorm<Y: YoungFn + ?Sized>(phi: &Y, f: &[f64], mu: &DiscreteMeasure) -> Result<LogVal> {
    let vals: Vec<LogVal> = f.iter().map(|x| LogVal::new(x.abs())).collect();
    orlicz_quasinorm_log(phi, &vals, mu)
}

/// Quasi-norm for log-domain samples.
pub fn orlicz_quasinorm_log<Y: YoungFn + ?Sized>(phi: &Y, f: &[LogVal], mu: &DiscreteMeasure) -> Result<LogVal> {
    mu.check_len(f.len())?;
    let integral = LogVal::weighted_sum(mu.weights().iter().zip(f).map(|(w, x)| (*w, phi.eval(*x))));
    Ok(phi.inv(integral))
}

/// Quasi-triangle constant `C_Φ = 2KΦ(2)`.
pub fn quasi_triangle_constant<Y: YoungFn + ?Sized>(phi: &Y, k: f64) -> LogVal {
    phi.eval(LogVal::new(2.0)).scale(2.0 * k)
}

/// Finite-sum constant `C_{Φ,N} = N K Φ(N)`.
pub fn finite_sum_constant<Y: YoungFn + ?Sized>(phi: &Y, k: f64, n: usize) -> LogVal {
    phi.eval(LogVal::new(n as f64)).scale(n as f64 * k)
}

/// `max Φ(ab)/(Φ(a)Φ(b))` over the given pairs.
pub fn submult_ratio<Y: YoungFn + ?Sized>(phi: &Y, pairs: &[(LogVal, LogVal)]) -> f64 {
    pairs
        .iter()
        .map(|&(a, b)| (phi.eval(a * b) / (phi.eval(a) * phi.eval(b))).value())
        .fold(0.0, f64::max)
}

/// `n × n` pairs with `ln a, ln b` evenly spaced in `[lo, hi]`.
pub fn log_grid_pairs(n: usize, lo: f64, hi: f64) -> Vec<(LogVal, LogVal)> {
    let pts: Vec<LogVal> = (0..n)
        .map(|i| LogVal::from_ln(lo + (hi - lo) * i as f64 / (n.max(2) - 1) as f64))
        .collect();
    let mut out = Vec::with_capacity(n * n);
    for a in &pts {
        for b in &pts {
            out.push((*a, *b));
        }
    }
    out
}

impl<Y: YoungFn> YoungFn for Conjugate<'_, Y> {
    fn m(&self) -> f64 {
        self.0.m()
    }
    fn ln_e(&self) -> f64 {
        self.0.ln_e()
    }
    fn ln_f(&self) -> f64 {
        self.0.ln_f()
    }
    fn ln_min_slope(&self) -> f64 {
        f64::NEG_INFINITY
    }
    fn kinks(&self) -> Vec<f64> {
        Vec::new()
    }
    fn log_profile(&self, w: f64) -> f64 {
        self.0.conjugate(LogVal::from_ln(w)).ln()
    }
    fn log_profile_inv(&self, g: f64) -> f64 {
        // Φ* is increasing once positive: bisect on ln s above the threshold slope.
        let mut lo = self.0.ln_min_slope();
        let mut hi = lo + 1.0;
        while self.log_profile(hi) < g {
            hi += (hi - lo).max(1.0);
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.log_profile(mid) < g {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo < 1e-13 {
                break;
            }
        }
        hi
    }
    fn log_jet(&self, w: f64, _side: Side) -> LogJet {
        LogJet { g: self.log_profile(w), g1: f64::NAN, g2: f64::NAN }
    }
}
