//! Orlicz–Sobolev bump probes: grid quotients, the extremal family, the
//! divergence of that family for `k = 1, σ > 1/(m−1)`, and the endpoint kernel bound.

use crate::error::{Error, Result};
use crate::geometry::{Geometry, SuperradiusSpec};
use crate::logval::{log_sum_exp, LogVal};
use crate::metric::{grad_a, Coefficient, GridFunction, MetricField};
use crate::orlicz::{PhiM, YoungFn};
use serde::{Deserialize, Serialize};

/// Φ_m together with the geometry and superradius constant.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SobolevSetup {
    pub coef: Coefficient,
    pub m: f64,
    #[serde(default = "one")]
    pub c_m: f64,
}

fn one() -> f64 {
    1.0
}

impl SobolevSetup {
    /// φ(ρ) for degenerate coefficients; ρ itself for the isotropic and finite-type stubs.
    pub fn superradius(&self, rho: f64) -> Result<f64> {
        match self.coef.geometry() {
            Some(g) => SuperradiusSpec::new(self.m, self.c_m, g)?.superradius(rho),
            None => Ok(rho),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SobolevProbe {
    pub rho: f64,
    /// `Φ^{−1}(∫_B Φ(|w|) dμ_ρ)`.
    pub lhs: LogVal,
    /// `∫_B |∇_A w| dμ_ρ`.
    pub rhs: f64,
    pub phi_rho: f64,
    /// `lhs / (φ(ρ)·rhs)`.
    pub ratio: f64,
    /// `∫ |w| dμ_ρ`, for the Jensen check `lhs ≥ mean`.
    pub mean_abs: f64,
    pub ball_volume: f64,
}

/// Evaluates the bump quotient for `w` supported in `B(center, ρ)` of `field`.
pub fn sobolev_ratio(setup: &SobolevSetup, field: &MetricField, rho: f64, w: &GridFunction) -> Result<SobolevProbe> {
    let grid = &field.grid;
    if w.values.len() != grid.len() {
        return Err(Error::InvalidParameter("grid function length mismatch".into()));
    }
    let across = 2.0 * rho / grid.hx;
    if across < 64.0 {
        return Err(Error::Resolution(format!("only {across:.1} cells across B(0,{rho}); need >= 64")));
    }
    for (k, (&d, &v)) in field.dist.iter().zip(&w.values).enumerate() {
        if d >= rho && v != 0.0 {
            let (i, j) = grid.ij(k);
            return Err(Error::Precondition(format!(
                "w = {v} at ({:.4}, {:.4}) outside B(0,{rho})",
                grid.x(i),
                grid.y(j)
            )));
        }
    }
    let phi = PhiM::new(setup.m)?;
    let (gx, gy) = grad_a(&field.coef, grid, w);
    let cells: Vec<usize> = (0..grid.len()).filter(|&k| field.dist[k] < rho).collect();
    let vol = cells.len() as f64 * grid.cell_area();
    let ln_mu = grid.cell_area().ln() - vol.ln();
    let mut terms = Vec::with_capacity(cells.len());
    let (mut grad, mut mean) = (0.0, 0.0);
    for &k in &cells {
        let a = w.values[k].abs();
        if a > 0.0 {
            terms.push(phi.log_profile(a.ln()) + ln_mu);
        }
        mean += a;
        grad += gx.values[k].hypot(gy.values[k]);
    }
    let mu = grid.cell_area() / vol;
    let (rhs, mean_abs) = (grad * mu, mean * mu);
    let lhs = if terms.is_empty() { LogVal::ZERO } else { phi.inv(LogVal::from_ln(log_sum_exp(&terms))) };
    let phi_rho = setup.superradius(rho)?;
    let ratio = if lhs.is_zero() { 0.0 } else { lhs.value() / (phi_rho * rhs) };
    Ok(SobolevProbe { rho, lhs, rhs, phi_rho, ratio, mean_abs, ball_volume: vol })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "style", rename_all = "snake_case", deny_unknown_fields)]
pub enum TestStyle {
    /// `A·cos²(π d/(2ρ))` for `d < ρ`.
    MetricRadialBump { amplitude: f64 },
    /// Product bump on `[−ρ/2, ρ/2] × [−b, b]` with `b = ρ f(ρ/2)/4`, inside the ball.
    TensorBump { amplitude: f64 },
    /// `η(d)·min(1/f(d), 1/f(ε))`, η = 1 on `[0, ρ/2]`, linear to 0 at ρ.
    Extremal { eps: f64 },
}

fn eta(d: f64, rho: f64) -> f64 {
    if d <= rho / 2.0 {
        1.0
    } else if d < rho {
        2.0 * (1.0 - d / rho)
    } else {
        0.0
    }
}

/// Samples a member of the test family on `field`.
pub fn test_family(field: &MetricField, rho: f64, style: TestStyle) -> Result<GridFunction> {
    let grid = &field.grid;
    let coef = field.coef;
    let values: Vec<f64> = match style {
        TestStyle::MetricRadialBump { amplitude } => field
            .dist
            .iter()
            .map(|&d| if d < rho { amplitude * (std::f64::consts::FRAC_PI_2 * d / rho).cos().powi(2) } else { 0.0 })
            .collect(),
        TestStyle::TensorBump { amplitude } => {
            let a = rho / 2.0;
            let b = rho * coef.f(a) / 4.0;
            (0..grid.len())
                .map(|k| {
                    let (i, j) = grid.ij(k);
                    let (x, y) = (grid.x(i) - field.center.0, grid.y(j) - field.center.1);
                    if x.abs() < a && y.abs() < b && field.dist[k] < rho {
                        let c = |t: f64, s: f64| (std::f64::consts::FRAC_PI_2 * t / s).cos().powi(2);
                        amplitude * c(x, a) * c(y, b)
                    } else {
                        0.0
                    }
                })
                .collect()
        }
        TestStyle::Extremal { eps } => {
            if eps < 2.0 * grid.hx {
                return Err(Error::Resolution(format!("eps = {eps:.3e} below 2hx = {:.3e}", 2.0 * grid.hx)));
            }
            let cap = 1.0 / coef.f(eps);
            field.dist.iter().map(|&d| eta(d, rho) * (1.0 / coef.f(d)).min(cap)).collect()
        }
    };
    Ok(GridFunction { values, support_radius: Some(rho) })
}

/// Extremal family evaluated by radial (co-area) quadrature with `dV = f/|F′| dr`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadialProbe {
    pub eps: f64,
    pub ln_lhs: f64,
    pub rhs: f64,
    pub ln_ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FailureReport {
    pub m: f64,
    pub sigma: f64,
    pub rho: f64,
    /// `(σ+1)(1−1/m)`; the extremal integral diverges iff this exceeds 1.
    pub exponent: f64,
    pub diverges: bool,
    pub probes: Vec<RadialProbe>,
}

impl FailureReport {
    /// `ratio(last)/ratio(first)`.
    pub fn growth(&self) -> f64 {
        match (self.probes.first(), self.probes.last()) {
            (Some(a), Some(b)) => (b.ln_ratio - a.ln_ratio).exp(),
            _ => 1.0,
        }
    }
}

/// Radial quadrature of the extremal quotient for a single ε (normalized measure on `B(0,ρ)`).
pub fn extremal_radial(geom: &Geometry, m: f64, rho: f64, eps: f64, nodes: usize) -> Result<RadialProbe> {
    if !(eps > 0.0 && eps < rho / 2.0) {
        return Err(Error::InvalidParameter(format!("need 0 < eps < rho/2, got eps={eps}, rho={rho}")));
    }
    if rho > geom.r_max() {
        return Err(Error::Domain(format!("rho = {rho} beyond r_max = {:.4e}", geom.r_max())));
    }
    let phi = PhiM::new(m)?;
    let (l_rho, l_eps) = (-rho.ln(), -eps.ln());
    let f_eps = geom.ell_jet(l_eps)?.f;
    // integrate in ℓ = ln 1/r from ln(1/ρ) to ln(1/ε) + 40; dV = r² f / F_ℓ dℓ
    let l_hi = l_eps + 40.0;
    let n = nodes.max(64);
    let mut vol = Vec::with_capacity(n);
    let mut mass = Vec::with_capacity(n);
    let mut rhs = 0.0;
    let h = (l_hi - l_rho) / n as f64;
    for i in 0..n {
        let l = l_rho + (i as f64 + 0.5) * h;
        let j = geom.ell_jet(l)?;
        let ln_dv = -j.f - 2.0 * l - j.d1.ln() + h.ln();
        vol.push(ln_dv);
        let r = (-l).exp();
        let e = eta(r, rho);
        let ln_w = e.ln() + j.f.min(f_eps);
        mass.push(phi.log_profile(ln_w) + ln_dv);
        // |w′| dV: on [ε, ρ/2] equals dr; on [ρ/2, ρ] equals (η + 2/(ρ|F′|)) dr; 0 below ε
        let fp = j.d1 / r;
        let dr = r * h;
        rhs += if l > l_eps {
            0.0
        } else if r <= rho / 2.0 {
            dr
        } else {
            (e + 2.0 / (rho * fp)) * dr
        };
    }
    let ln_vol = log_sum_exp(&vol);
    let ln_lhs = phi.inv(LogVal::from_ln(log_sum_exp(&mass) - ln_vol)).ln();
    let rhs_mu = rhs / ln_vol.exp();
    Ok(RadialProbe { eps, ln_lhs, rhs: rhs_mu, ln_ratio: ln_lhs - rhs_mu.ln() })
}

/// Extremal quotient along a decreasing list of ε (k = 1 profiles).
pub fn failure_probe(m: f64, geom: &Geometry, rho: f64, eps_list: &[f64]) -> Result<FailureReport> {
    if geom.k != 1 {
        return Err(Error::InvalidParameter("failure probe is defined for k = 1".into()));
    }
    if eps_list.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidParameter("eps_list must be strictly decreasing".into()));
    }
    let exponent = (geom.sigma + 1.0) * (1.0 - 1.0 / m);
    let probes = eps_list.iter().map(|&e| extremal_radial(geom, m, rho, e, 20_000)).collect::<Result<Vec<_>>>()?;
    Ok(FailureReport { m, sigma: geom.sigma, rho, exponent, diverges: exponent > 1.0, probes })
}

/// Half-ball kernel surrogate `1/h_r` with `r = y₁ − x₁`:
/// `1/(r f(x₁))` for `r < 1/|F′(x₁)|`, else `|F′(x₁+r)|/f(x₁+r)`.
pub fn kernel_eval(geom: &Geometry, x1: f64, y1: f64) -> Result<f64> {
    Ok(1.0 / kernel_height(geom, x1, y1)?)
}

/// `h_r` of the kernel surrogate.
pub fn kernel_height(geom: &Geometry, x1: f64, y1: f64) -> Result<f64> {
    kernel_height_sep(geom, x1, y1 - x1)
}

/// `h_r` with the separation `r = y₁ − x₁` given directly (avoids cancellation for tiny r).
pub fn kernel_height_sep(geom: &Geometry, x1: f64, r: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::Domain(format!("kernel needs y1 > x1, got x1={x1}, r={r}")));
    }
    let y1 = x1 + r;
    if x1 > 0.0 {
        let d = geom.derivatives(x1)?;
        if r < 1.0 / d.f1.abs() {
            return Ok(r * d.f);
        }
    }
    let d = geom.derivatives(y1)?;
    Ok(d.f / d.f1.abs())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EndpointReport {
    pub r0: f64,
    pub phi_r0: f64,
    /// `(α, Φ^{−1}(sup_y ∫Φ(K|B|α)dμ) / (α φ(r₀)))`.
    pub per_alpha: Vec<(f64, f64)>,
    pub max_ratio: f64,
}

/// Endpoint quotient with the half-ball surrogate: for `y = (y₁, ·)` the x-integral
/// reduces to `(1/|B|) ∫_0^{y₁} 2h_r Φ(α|B|/h_r) dr`.
pub fn endpoint_check(geom: &Geometry, m: f64, c_m: f64, r0: f64, alphas: &[f64], nodes: usize) -> Result<EndpointReport> {
    if !(r0 > 0.0 && r0 < geom.r_max()) {
        return Err(Error::Domain(format!("r0 = {r0} outside (0, r_max)")));
    }
    let phi = PhiM::new(m)?;
    let ln_b = geom.ln_ball_volume_estimate(-r0.ln())?;
    let phi_r0 = SuperradiusSpec::new(m, c_m, *geom)?.superradius(r0)?;
    let n = nodes.max(64);
    let ys: Vec<f64> = (1..=16).map(|i| r0 * i as f64 / 16.0 * (1.0 - 1e-9)).collect();
    let mut per_alpha = Vec::with_capacity(alphas.len());
    for &alpha in alphas {
        if !(alpha > 0.0) {
            return Err(Error::InvalidParameter(format!("alpha must be > 0, got {alpha}")));
        }
        let mut sup = f64::NEG_INFINITY;
        for &y1 in &ys {
            // r = y₁ e^{−s}, s ∈ [0, S]
            let s_max = 700.0;
            let hs = s_max / n as f64;
            let mut terms = Vec::with_capacity(n);
            for i in 0..n {
                let s = (i as f64 + 0.5) * hs;
                let r = y1 * (-s).exp();
                let hr = kernel_height_sep(geom, y1 - r, r)?;
                let arg = alpha.ln() + ln_b - hr.ln();
                terms.push(std::f64::consts::LN_2 + hr.ln() + phi.log_profile(arg) + r.ln() + hs.ln());
            }
            sup = sup.max(log_sum_exp(&terms) - ln_b);
        }
        let lhs = phi.inv(LogVal::from_ln(sup)).value();
        per_alpha.push((alpha, lhs / (alpha * phi_r0)));
    }
    let max_ratio = per_alpha.iter().map(|p| p.1).fold(0.0, f64::max);
    Ok(EndpointReport { r0, phi_r0, per_alpha, max_ratio })
}
