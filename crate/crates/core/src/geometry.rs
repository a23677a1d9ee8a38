//! Degeneracy profiles `F_{k,σ}(r) = (ln 1/r)(ln^{(k)} 1/r)^σ` and the superradius.
//!
//! Everything is computed in `ℓ = ln(1/r)`: with `F_ℓ = dF/dℓ` we have
//! `rF′ = −F_ℓ` and `r²F″ = F_ℓℓ + F_ℓ`, so scale-free quantities stay finite
//! even where `r` itself underflows.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Iterated log `ln^{(k)}(1/x)`; every level must be positive.
pub fn iterlog(k: u32, x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::Domain(format!("iterlog needs x > 0, got {x}")));
    }
    iterlog_ell(k, -x.ln())
}

/// Iterated log starting from `ℓ = ln(1/x)` (level 1).
pub fn iterlog_ell(k: u32, ell: f64) -> Result<f64> {
    let mut v = ell;
    for level in 1..=k {
        if !(v > 0.0) {
            return Err(Error::Domain(format!("iterated log level {level} is {v} <= 0")));
        }
        if level < k {
            v = v.ln();
        }
    }
    Ok(v)
}

/// `exp^{(k)}(x)`.
pub fn iterexp(k: u32, x: f64) -> f64 {
    (0..k).fold(x, |v, _| v.exp())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Geometry {
    pub k: u32,
    pub sigma: f64,
}

/// F and its derivatives at a point, plus `f = e^{−F}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FDerivs {
    pub f_big: f64,
    pub f1: f64,
    pub f2: f64,
    pub f: f64,
}

/// Derivatives in ℓ: `(F, F_ℓ, F_ℓℓ)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EllJet {
    pub f: f64,
    pub d1: f64,
    pub d2: f64,
}

impl Geometry {
    /// `k ≥ 1`, `σ > 0`; `σ = 0` is accepted for `k = 1` as the finite-type limit `f(r) = r`.
    pub fn new(k: u32, sigma: f64) -> Result<Geometry> {
        if k == 0 {
            return Err(Error::InvalidParameter("k = 0 (F = r^-sigma) is not supported; k >= 1".into()));
        }
        if !(sigma > 0.0 || (sigma == 0.0 && k == 1)) || !sigma.is_finite() {
            return Err(Error::InvalidParameter(format!("sigma must be > 0, got {sigma}")));
        }
        Ok(Geometry { k, sigma })
    }

    /// ℓ at which `ln^{(k)}` equals 1.1.
    pub fn ell_min(&self) -> f64 {
        iterexp(self.k - 1, 1.1)
    }

    /// Largest r with all iterated logs ≥ 1.1.
    pub fn r_max(&self) -> f64 {
        (-self.ell_min()).exp()
    }

    /// Radius beyond which F would need a nonpositive iterated log; f is extended by 1 there.
    pub fn r_support(&self) -> f64 {
        if self.k == 1 {
            1.0
        } else {
            1.0 / iterexp(self.k - 1, 1.0)
        }
    }

    fn check_ell(&self, ell: f64) -> Result<()> {
        if !(ell >= self.ell_min() * (1.0 - 1e-12)) || ell.is_nan() {
            return Err(Error::Domain(format!(
                "r = exp(-{ell}) outside (0, r_max = {:.6e})",
                self.r_max()
            )));
        }
        Ok(())
    }

    /// Unchecked ℓ-jet; valid wherever the k-th iterated log is positive.
    fn jet_raw(&self, ell: f64) -> EllJet {
        // λ_1 = ℓ, λ_{i+1} = ln λ_i with first/second ℓ-derivatives
        let (mut l, mut l1, mut l2) = (ell, 1.0, 0.0);
        for _ in 1..self.k {
            let (n, n1) = (l.ln(), l1 / l);
            let n2 = (l2 * l - l1 * l1) / (l * l);
            l = n;
            l1 = n1;
            l2 = n2;
        }
        let s = self.sigma;
        let p = l.powf(s);
        let p1 = if s == 0.0 { 0.0 } else { s * l.powf(s - 1.0) * l1 };
        let p2 = if s == 0.0 {
            0.0
        } else {
            s * (s - 1.0) * l.powf(s - 2.0) * l1 * l1 + s * l.powf(s - 1.0) * l2
        };
        EllJet { f: ell * p, d1: p + ell * p1, d2: 2.0 * p1 + ell * p2 }
    }

    /// `(F, F_ℓ, F_ℓℓ)` at `ℓ = ln(1/r)`.
    pub fn ell_jet(&self, ell: f64) -> Result<EllJet> {
        self.check_ell(ell)?;
        Ok(self.jet_raw(ell))
    }

    /// `(F, F′, F″, f)` at r.
    pub fn derivatives(&self, r: f64) -> Result<FDerivs> {
        if !(r > 0.0) {
            return Err(Error::Domain(format!("r must be > 0, got {r}")));
        }
        let j = self.ell_jet(-r.ln())?;
        Ok(FDerivs { f_big: j.f, f1: -j.d1 / r, f2: (j.d2 + j.d1) / (r * r), f: (-j.f).exp() })
    }

    /// `f(|x|)` extended continuously: 0 at the origin, `e^{−F}` while F is defined, 1 beyond.
    pub fn f_ext(&self, x: f64) -> f64 {
        let r = x.abs();
        if r == 0.0 {
            return 0.0;
        }
        if r >= self.r_support() {
            return 1.0;
        }
        let ell = -r.ln();
        match iterlog_ell(self.k, ell) {
            Ok(v) if v > 0.0 => (-self.jet_raw(ell).f).exp(),
            _ => 1.0,
        }
    }

    /// Analytic comparator `|B(0,r)| ≈ f(r)/|F′(r)|²`.
    pub fn ball_volume_estimate(&self, r: f64) -> Result<f64> {
        let d = self.derivatives(r)?;
        Ok(d.f / (d.f1 * d.f1))
    }

    /// `ln(f(r)/|F′(r)|²)` from ℓ.
    pub fn ln_ball_volume_estimate(&self, ell: f64) -> Result<f64> {
        let j = self.ell_jet(ell)?;
        Ok(-j.f - 2.0 * ell - 2.0 * j.d1.ln())
    }

    /// `|F′|²/F″`, scale-free.
    pub fn curvature_ratio(&self, ell: f64) -> Result<f64> {
        let j = self.ell_jet(ell)?;
        Ok(j.d1 * j.d1 / (j.d2 + j.d1))
    }
}

/// Worst constant and verdict for one structural condition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionResult {
    pub index: u8,
    pub pass: bool,
    pub constant: f64,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StructuralReport {
    pub conditions: Vec<ConditionResult>,
}

impl StructuralReport {
    pub fn all_pass(&self) -> bool {
        self.conditions.iter().all(|c| c.pass)
    }
}

/// Checks the five structural conditions on a grid of radii inside `(0, r_max)`.
pub fn structural_check(geom: &Geometry, r_grid: &[f64]) -> Result<StructuralReport> {
    let mut rs: Vec<f64> = r_grid.to_vec();
    rs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    if rs.is_empty() {
        return Err(Error::InvalidParameter("empty r grid".into()));
    }
    let rmax = geom.r_max();
    let d: Vec<FDerivs> = rs.iter().map(|&r| geom.derivatives(r)).collect::<Result<_>>()?;
    let jets: Vec<EllJet> = rs.iter().map(|&r| geom.ell_jet(-r.ln())).collect::<Result<_>>()?;

    // (1) F → ∞: F strictly decreasing in r on the grid
    let c1_mono = d.windows(2).all(|w| w[1].f_big < w[0].f_big);
    let c1 = ConditionResult {
        index: 1,
        pass: c1_mono && d[0].f_big > d[d.len() - 1].f_big,
        constant: d[0].f_big,
        detail: "F at smallest grid radius".into(),
    };

    // (2) F′ < 0, F″ > 0
    let worst2 = jets.iter().map(|j| (j.d1).min(j.d2 + j.d1)).fold(f64::INFINITY, f64::min);
    let c2 = ConditionResult {
        index: 2,
        pass: worst2 > 0.0,
        constant: worst2,
        detail: "min of -rF' and r^2 F''".into(),
    };

    // (3) |F′| comparable on [r/2, 2r]
    let mut c3 = 1.0f64;
    for &r in &rs {
        if 2.0 * r >= rmax {
            continue;
        }
        let base = geom.derivatives(r)?.f1.abs();
        for i in 0..=16 {
            let x = r * 2f64.powf(-1.0 + 2.0 * i as f64 / 16.0);
            let v = geom.derivatives(x)?.f1.abs();
            c3 = c3.max(v / base).max(base / v);
        }
    }
    let c3r = ConditionResult {
        index: 3,
        pass: c3.is_finite(),
        constant: c3,
        detail: "doubling constant C of |F'| on [r/2, 2r]".into(),
    };

    // (4) 1/(−xF′) = 1/F_ℓ increasing in x, ≤ 1/ε
    let inv: Vec<f64> = jets.iter().map(|j| 1.0 / j.d1).collect();
    let mono4 = inv.windows(2).all(|w| w[1] >= w[0] * (1.0 - 1e-12));
    let eps = jets.iter().map(|j| j.d1).fold(f64::INFINITY, f64::min);
    let c4 = ConditionResult {
        index: 4,
        pass: mono4 && eps > 0.0,
        constant: eps,
        detail: "epsilon = min(-xF'(x))".into(),
    };

    // (5) xF″/(−F′) = 1 + F_ℓℓ/F_ℓ comparable to 1
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for j in &jets {
        let v = 1.0 + j.d2 / j.d1;
        lo = lo.min(v);
        hi = hi.max(v);
    }
    let c5 = ConditionResult {
        index: 5,
        pass: lo > 0.0 && hi.is_finite(),
        constant: hi.max(1.0 / lo),
        detail: "comparability constant of xF''/(-F') with 1".into(),
    };
    Ok(StructuralReport { conditions: vec![c1, c2, c3r, c4, c5] })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuperradiusSpec {
    pub m: f64,
    #[serde(default = "default_cm")]
    pub c_m: f64,
    pub geometry: Geometry,
}

fn default_cm() -> f64 {
    1.0
}

impl SuperradiusSpec {
    pub fn new(m: f64, c_m: f64, geometry: Geometry) -> Result<SuperradiusSpec> {
        if !(m > 1.0) || !m.is_finite() {
            return Err(Error::InvalidParameter(format!("m must be > 1, got {m}")));
        }
        if !(c_m > 0.0) || !c_m.is_finite() {
            return Err(Error::InvalidParameter(format!("C_m must be > 0, got {c_m}")));
        }
        Ok(SuperradiusSpec { m, c_m, geometry })
    }

    /// `ln φ` at `ℓ = ln(1/r)`.
    pub fn ln_superradius_ell(&self, ell: f64) -> Result<f64> {
        let j = self.geometry.ell_jet(ell)?;
        let q = j.d1 * j.d1 / (j.d2 + j.d1);
        // 1/|F′| = r/F_ℓ
        Ok(-ell - j.d1.ln() + self.c_m * (q + 1.0).powf(self.m - 1.0))
    }

    /// `φ(r) = exp(C_m(|F′|²/F″ + 1)^{m−1}) / |F′(r)|`.
    pub fn superradius(&self, r: f64) -> Result<f64> {
        if !(r > 0.0) {
            return Err(Error::Domain(format!("r must be > 0, got {r}")));
        }
        Ok(self.ln_superradius_ell(-r.ln())?.exp())
    }

    /// `ln(φ(r)/r) / (ln^{(k)} 1/r)^{σ(m−1)}`, the empirical growth constant.
    pub fn growth_constant(&self, ell: f64) -> Result<f64> {
        let g = &self.geometry;
        let lk = iterlog_ell(g.k, ell)?;
        Ok((self.ln_superradius_ell(ell)? + ell) / lk.powf(g.sigma * (self.m - 1.0)))
    }
}

/// Outcome of a discrete monotonicity scan of φ.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityReport {
    pub increasing: bool,
    /// Most negative relative step `Δ ln φ` (in the direction of increasing r).
    pub worst_step: f64,
    /// Radius (as ℓ) where the worst step happens.
    pub worst_ell: f64,
    pub min_phi_over_r_ln: f64,
}

/// Scans φ on `n` points log-uniform in `ℓ ∈ [ell_lo, ell_hi]` (r from small to large).
pub fn superradius_monotonicity(spec: &SuperradiusSpec, ell_lo: f64, ell_hi: f64, n: usize) -> Result<MonotonicityReport> {
    if n < 2 || !(ell_hi > ell_lo) {
        return Err(Error::InvalidParameter("need n >= 2 and ell_hi > ell_lo".into()));
    }
    let (a, b) = (ell_lo.ln(), ell_hi.ln());
    // descending ℓ = ascending r
    let ells: Vec<f64> = (0..n).map(|i| (b + (a - b) * i as f64 / (n - 1) as f64).exp()).collect();
    let vals: Vec<f64> = ells.iter().map(|&l| spec.ln_superradius_ell(l)).collect::<Result<_>>()?;
    let mut rep = MonotonicityReport {
        increasing: true,
        worst_step: f64::INFINITY,
        worst_ell: ells[0],
        min_phi_over_r_ln: f64::INFINITY,
    };
    for i in 0..n {
        rep.min_phi_over_r_ln = rep.min_phi_over_r_ln.min(vals[i] + ells[i]);
        if i + 1 < n {
            let step = vals[i + 1] - vals[i];
            if step < rep.worst_step {
                rep.worst_step = step;
                rep.worst_ell = ells[i];
            }
        }
    }
    rep.increasing = rep.worst_step >= -1e-12;
    Ok(rep)
}
