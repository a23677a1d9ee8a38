//! Finite-volume solver for `−div(Ã∇u) = φ₀ − div_A φ̄₁` with `A = diag(1, f²)`,
//! plus the discrete checks that sit on top of it: sub/supersolution
//! certification, Caccioppoli quotients, local bounds for positive and
//! negative powers, the maximum principle, the Moser chain and sup-norm recovery.
//!
//! Unknowns live on interior cells; the outer ring of cells carries Dirichlet
//! data. Fluxes use the 5-point stencil with harmonic-mean face coefficients,
//! and the divergence-form load is the exact adjoint of the discrete `∇_A`.

use crate::error::{Error, Result};
use crate::iterates::{h_jet, phi_iter, phi_iter_inv, IterSpec};
use crate::logval::{log_sum_exp, LogVal};
use crate::metric::{ball_profile, cutoff_radii, cutoff_sequence, Coefficient, CutoffOptions, Grid2D, GridFunction, MetricField};
use crate::orlicz::{luxemburg_norm, Conjugate, DiscreteMeasure, Young, YoungFn};
use crate::sobolev::SobolevSetup;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap};

/// Diagonal `Ã = diag(ã₁, ã₂)` sampled per cell, with the `f` of `A` alongside.
#[derive(Clone, Debug, PartialEq)]
pub struct CoeffField {
    pub grid: Grid2D,
    /// Physical coordinates are grid coordinates plus this shift.
    pub offset: (f64, f64),
    pub f: Vec<f64>,
    pub a1: Vec<f64>,
    pub a2: Vec<f64>,
    /// Cellwise `min(ã₁, ã₂/f²)`.
    pub lambda: f64,
    /// Cellwise `max(ã₁, ã₂/f²)`.
    pub big_lambda: f64,
}

impl CoeffField {
    /// Raw construction; λ and Λ are read off the data. Sign problems surface at assembly.
    pub fn new(grid: Grid2D, offset: (f64, f64), f: Vec<f64>, a1: Vec<f64>, a2: Vec<f64>) -> Result<CoeffField> {
        let n = grid.len();
        if f.len() != n || a1.len() != n || a2.len() != n {
            return Err(Error::InvalidParameter(format!("coefficient arrays must have {n} entries")));
        }
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for k in 0..n {
            lo = lo.min(a1[k]);
            hi = hi.max(a1[k]);
            let f2 = f[k] * f[k];
            if f2 > 0.0 {
                lo = lo.min(a2[k] / f2);
                hi = hi.max(a2[k] / f2);
            }
        }
        Ok(CoeffField { grid, offset, f, a1, a2, lambda: lo, big_lambda: hi })
    }

    /// `ã₁ = s₁(x,y)`, `ã₂ = s₂(x,y)·f(x)²` in physical coordinates.
    pub fn from_coefficient(
        coef: &Coefficient,
        grid: Grid2D,
        offset: (f64, f64),
        shape: impl Fn(f64, f64) -> (f64, f64),
    ) -> Result<CoeffField> {
        coef.validate()?;
        let n = grid.len();
        let (mut f, mut a1, mut a2) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                let (x, y) = (grid.x(i) + offset.0, grid.y(j) + offset.1);
                let k = grid.idx(i, j);
                let (s1, s2) = shape(x, y);
                f[k] = coef.f(x);
                a1[k] = s1;
                a2[k] = s2 * f[k] * f[k];
            }
        }
        CoeffField::new(grid, offset, f, a1, a2)
    }

    /// `Ã = A`.
    pub fn uniform(coef: &Coefficient, grid: Grid2D, offset: (f64, f64)) -> Result<CoeffField> {
        CoeffField::from_coefficient(coef, grid, offset, |_, _| (1.0, 1.0))
    }

    /// Vertical stripes of width `width` alternating between `Ã = A` and `Ã = contrast·A`.
    pub fn layered(coef: &Coefficient, grid: Grid2D, offset: (f64, f64), contrast: f64, width: f64) -> Result<CoeffField> {
        if !(contrast >= 1.0) || !(width > 0.0) {
            return Err(Error::InvalidParameter(format!("need contrast >= 1 and width > 0, got {contrast}, {width}")));
        }
        CoeffField::from_coefficient(coef, grid, offset, |x, _| {
            let s = if (x / width).floor().rem_euclid(2.0) == 0.0 { contrast } else { 1.0 };
            (s, s)
        })
    }

    pub fn x(&self, i: usize) -> f64 {
        self.grid.x(i) + self.offset.0
    }

    pub fn y(&self, j: usize) -> f64 {
        self.grid.y(j) + self.offset.1
    }

    /// Sample `g` at physical cell centers.
    pub fn sample(&self, g: impl Fn(f64, f64) -> f64) -> GridFunction {
        let mut v = vec![0.0; self.grid.len()];
        for j in 0..self.grid.ny {
            for i in 0..self.grid.nx {
                v[self.grid.idx(i, j)] = g(self.x(i), self.y(j));
            }
        }
        GridFunction::new(v)
    }

    fn is_interior(&self, k: usize) -> bool {
        let (i, j) = self.grid.ij(k);
        i > 0 && j > 0 && i + 1 < self.grid.nx && j + 1 < self.grid.ny
    }

    /// Discrete `∇_A w = (∂_x w, f ∂_y w)`: centered, one-sided on the outer ring.
    pub fn grad(&self, w: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let g = &self.grid;
        let mut gx = vec![0.0; g.len()];
        let mut gy = vec![0.0; g.len()];
        for j in 0..g.ny {
            for i in 0..g.nx {
                let k = g.idx(i, j);
                gx[k] = stencil(g.nx, g.hx, i).map_or(0.0, |st| st.iter().map(|&(p, c)| c * w[g.idx(p, j)]).sum());
                gy[k] = self.f[k] * stencil(g.ny, g.hy, j).map_or(0.0, |st| st.iter().map(|&(p, c)| c * w[g.idx(i, p)]).sum::<f64>());
            }
        }
        (gx, gy)
    }

    /// `Gᵀ(px, py)`, the adjoint of [`CoeffField::grad`] in the Euclidean inner product.
    pub fn grad_adjoint(&self, px: &[f64], py: &[f64]) -> Vec<f64> {
        let g = &self.grid;
        let mut out = vec![0.0; g.len()];
        for j in 0..g.ny {
            for i in 0..g.nx {
                let k = g.idx(i, j);
                if let Some(st) = stencil(g.nx, g.hx, i) {
                    for (p, c) in st {
                        out[g.idx(p, j)] += c * px[k];
                    }
                }
                if let Some(st) = stencil(g.ny, g.hy, j) {
                    for (p, c) in st {
                        out[g.idx(i, p)] += c * self.f[k] * py[k];
                    }
                }
            }
        }
        out
    }
}

/// Difference weights of the 1-D derivative at position `p` of `n` samples.
fn stencil(n: usize, h: f64, p: usize) -> Option<[(usize, f64); 2]> {
    if n < 2 {
        None
    } else if p == 0 {
        Some([(1, 1.0 / h), (0, -1.0 / h)])
    } else if p == n - 1 {
        Some([(n - 1, 1.0 / h), (n - 2, -1.0 / h)])
    } else {
        Some([(p + 1, 0.5 / h), (p - 1, -0.5 / h)])
    }
}

/// Right-hand side pair `(φ₀, φ̄₁)` and its admissible norm φ*.
#[derive(Clone, Debug, PartialEq)]
pub struct RhsPair {
    pub phi0: GridFunction,
    pub phi1: (GridFunction, GridFunction),
    pub phi_star: f64,
}

impl RhsPair {
    /// φ* starts at 0; set it with [`RhsPair::with_admissible_norm`] or by hand.
    pub fn new(phi0: GridFunction, phi1x: GridFunction, phi1y: GridFunction) -> RhsPair {
        RhsPair { phi0, phi1: (phi1x, phi1y), phi_star: 0.0 }
    }

    pub fn zero(grid: &Grid2D) -> RhsPair {
        let z = || GridFunction::new(vec![0.0; grid.len()]);
        RhsPair::new(z(), z(), z())
    }

    pub fn with_admissible_norm(mut self, coeff: &CoeffField, m: f64) -> Result<RhsPair> {
        self.phi_star = admissible_norm(coeff, m, &self)?;
        Ok(self)
    }

    fn check(&self, n: usize) -> Result<()> {
        if self.phi0.values.len() != n || self.phi1.0.values.len() != n || self.phi1.1.values.len() != n {
            return Err(Error::InvalidParameter(format!("right-hand side arrays must have {n} entries")));
        }
        if !(self.phi_star >= 0.0) {
            return Err(Error::InvalidParameter(format!("phi* must be >= 0, got {}", self.phi_star)));
        }
        Ok(())
    }
}

/// Face transmissibilities: `tx[j(nx−1)+i]` joins (i,j)–(i+1,j), `ty[j nx+i]` joins (i,j)–(i,j+1).
struct Faces {
    tx: Vec<f64>,
    ty: Vec<f64>,
}

fn harmonic(a: f64, b: f64) -> f64 {
    if a + b == 0.0 {
        0.0
    } else {
        2.0 * a * b / (a + b)
    }
}

fn faces(coeff: &CoeffField) -> Result<Faces> {
    let g = &coeff.grid;
    for k in 0..g.len() {
        if !(coeff.a1[k] > 0.0) || !coeff.a1[k].is_finite() {
            return Err(Error::Assembly(format!("a1 = {} at cell {k} is not positive", coeff.a1[k])));
        }
        if !(coeff.a2[k] >= 0.0) || !coeff.a2[k].is_finite() {
            return Err(Error::Assembly(format!("a2 = {} at cell {k} is negative", coeff.a2[k])));
        }
    }
    let mut tx = vec![0.0; (g.nx - 1) * g.ny];
    let mut ty = vec![0.0; g.nx * (g.ny - 1)];
    for j in 0..g.ny {
        for i in 0..g.nx {
            let k = g.idx(i, j);
            if i + 1 < g.nx {
                tx[j * (g.nx - 1) + i] = harmonic(coeff.a1[k], coeff.a1[k + 1]) * g.hy / g.hx;
            }
            if j + 1 < g.ny {
                ty[k] = harmonic(coeff.a2[k], coeff.a2[k + g.nx]) * g.hx / g.hy;
            }
        }
    }
    Ok(Faces { tx, ty })
}

impl Faces {
    /// `(A u)_k = Σ_faces T (u_k − u_nb)` on every cell.
    fn apply(&self, g: &Grid2D, u: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        for j in 0..g.ny {
            for i in 0..g.nx {
                let k = g.idx(i, j);
                if i + 1 < g.nx {
                    let t = self.tx[j * (g.nx - 1) + i] * (u[k] - u[k + 1]);
                    out[k] += t;
                    out[k + 1] -= t;
                }
                if j + 1 < g.ny {
                    let t = self.ty[k] * (u[k] - u[k + g.nx]);
                    out[k] += t;
                    out[k + g.nx] -= t;
                }
            }
        }
    }

    fn diag(&self, g: &Grid2D) -> Vec<f64> {
        let mut d = vec![0.0; g.len()];
        for j in 0..g.ny {
            for i in 0..g.nx {
                let k = g.idx(i, j);
                if i + 1 < g.nx {
                    let t = self.tx[j * (g.nx - 1) + i];
                    d[k] += t;
                    d[k + 1] += t;
                }
                if j + 1 < g.ny {
                    d[k] += self.ty[k];
                    d[k + g.nx] += self.ty[k];
                }
            }
        }
        d
    }

    /// `Σ_faces T Δu Δw` over all faces.
    fn form(&self, g: &Grid2D, u: &[f64], w: &[f64]) -> f64 {
        let mut s = 0.0;
        for j in 0..g.ny {
            for i in 0..g.nx {
                let k = g.idx(i, j);
                if i + 1 < g.nx {
                    s += self.tx[j * (g.nx - 1) + i] * (u[k] - u[k + 1]) * (w[k] - w[k + 1]);
                }
                if j + 1 < g.ny {
                    s += self.ty[k] * (u[k] - u[k + g.nx]) * (w[k] - w[k + g.nx]);
                }
            }
        }
        s
    }
}

/// Load `b = |cell|·φ₀ + Gᵀ(|cell|·φ̄₁)` on every cell.
fn load(coeff: &CoeffField, rhs: &RhsPair) -> Vec<f64> {
    let area = coeff.grid.cell_area();
    let px: Vec<f64> = rhs.phi1.0.values.iter().map(|v| v * area).collect();
    let py: Vec<f64> = rhs.phi1.1.values.iter().map(|v| v * area).collect();
    let mut b = coeff.grad_adjoint(&px, &py);
    for (bk, p0) in b.iter_mut().zip(&rhs.phi0.values) {
        *bk += area * p0;
    }
    b
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveReport {
    /// Solution on every cell, Dirichlet data on the outer ring.
    pub u: GridFunction,
    /// `‖A_h u − b‖₂ / ‖b‖₂` on interior cells, recomputed after the solve.
    pub residual: f64,
    pub iterations: usize,
    pub diagnostics: BTreeMap<String, f64>,
}

fn check_grid(coeff: &CoeffField) -> Result<()> {
    let g = &coeff.grid;
    if g.nx < 3 || g.ny < 3 {
        return Err(Error::InvalidParameter("grid needs at least one interior cell".into()));
    }
    if (0..g.nx).any(|i| coeff.x(i) == 0.0) {
        return Err(Error::Precondition("a cell center sits on x = 0; stagger the grid".into()));
    }
    Ok(())
}

/// Solves with Jacobi-preconditioned CG to relative residual `tol` ∈ (1e−12, 1e−4).
pub fn assemble_and_solve(coeff: &CoeffField, rhs: &RhsPair, bc: &GridFunction, tol: f64) -> Result<SolveReport> {
    if !(tol > 1e-12 && tol < 1e-4) {
        return Err(Error::InvalidParameter(format!("tol must lie in (1e-12, 1e-4), got {tol}")));
    }
    check_grid(coeff)?;
    let g = coeff.grid;
    let n = g.len();
    rhs.check(n)?;
    if bc.values.len() != n {
        return Err(Error::InvalidParameter(format!("boundary data must have {n} entries")));
    }
    let fc = faces(coeff)?;
    let interior: Vec<bool> = (0..n).map(|k| coeff.is_interior(k)).collect();
    let diag = fc.diag(&g);
    if let Some(k) = (0..n).find(|&k| interior[k] && !(diag[k] > 0.0)) {
        return Err(Error::Assembly(format!("zero row at interior cell {k}")));
    }

    // Move the Dirichlet ring to the right-hand side.
    let b = load(coeff, rhs);
    let ring: Vec<f64> = (0..n).map(|k| if interior[k] { 0.0 } else { bc.values[k] }).collect();
    let mut a_ring = vec![0.0; n];
    fc.apply(&g, &ring, &mut a_ring);
    let rhs_int: Vec<f64> = (0..n).map(|k| if interior[k] { b[k] - a_ring[k] } else { 0.0 }).collect();

    let apply = |x: &[f64], out: &mut [f64]| {
        fc.apply(&g, x, out);
        for k in 0..n {
            if !interior[k] {
                out[k] = 0.0;
            }
        }
    };
    let (x, iterations) = pcg(apply, &diag, &rhs_int, tol, 20 * n + 1000)?;

    let u: Vec<f64> = (0..n).map(|k| if interior[k] { x[k] } else { bc.values[k] }).collect();
    let mut au = vec![0.0; n];
    fc.apply(&g, &u, &mut au);
    let (mut rn, mut bn) = (0.0, 0.0);
    for k in (0..n).filter(|&k| interior[k]) {
        rn += (au[k] - b[k]).powi(2);
        bn += rhs_int[k].powi(2);
    }
    let residual = if bn > 0.0 { (rn / bn).sqrt() } else { rn.sqrt() };

    let mut diagnostics = BTreeMap::new();
    diagnostics.insert("iterations".into(), iterations as f64);
    diagnostics.insert("relative_residual".into(), residual);
    diagnostics.insert("unknowns".into(), interior.iter().filter(|b| **b).count() as f64);
    diagnostics.insert("lambda".into(), coeff.lambda);
    diagnostics.insert("big_lambda".into(), coeff.big_lambda);
    Ok(SolveReport { u: GridFunction::new(u), residual, iterations, diagnostics })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn pcg(apply: impl Fn(&[f64], &mut [f64]), diag: &[f64], b: &[f64], tol: f64, max_iter: usize) -> Result<(Vec<f64>, usize)> {
    let n = b.len();
    let mut x = vec![0.0; n];
    let bnorm = dot(b, b).sqrt();
    if bnorm == 0.0 {
        return Ok((x, 0));
    }
    let mut r = b.to_vec();
    let precond = |r: &[f64]| -> Vec<f64> { r.iter().zip(diag).map(|(r, d)| if *d > 0.0 { r / d } else { 0.0 }).collect() };
    let mut z = precond(&r);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    for it in 1..=max_iter {
        apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::Numerical(format!("CG breakdown: pᵀAp = {pap}")));
        }
        let alpha = rz / pap;
        for k in 0..n {
            x[k] += alpha * p[k];
            r[k] -= alpha * ap[k];
        }
        if dot(&r, &r).sqrt() <= tol * bnorm {
            return Ok((x, it));
        }
        z = precond(&r);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for k in 0..n {
            p[k] = z[k] + beta * p[k];
        }
    }
    Err(Error::Numerical(format!("CG did not reach tol {tol:e} in {max_iter} iterations")))
}

/// `A_h u − b` on interior cells (zero on the ring). Nonpositive ⇔ discrete subsolution.
pub fn weak_residual(coeff: &CoeffField, rhs: &RhsPair, u: &GridFunction) -> Result<Vec<f64>> {
    check_grid(coeff)?;
    rhs.check(coeff.grid.len())?;
    let fc = faces(coeff)?;
    let b = load(coeff, rhs);
    let mut au = vec![0.0; b.len()];
    fc.apply(&coeff.grid, &u.values, &mut au);
    Ok((0..b.len()).map(|k| if coeff.is_interior(k) { au[k] - b[k] } else { 0.0 }).collect())
}

/// The bilinear form `ã(u, w) = Σ_faces T Δu Δw`.
pub fn bilinear_form(coeff: &CoeffField, u: &GridFunction, w: &GridFunction) -> Result<f64> {
    Ok(faces(coeff)?.form(&coeff.grid, &u.values, &w.values))
}

/// `F(w) = ∫ φ₀ w + ∫ φ̄₁·∇_A w`.
pub fn rhs_functional(coeff: &CoeffField, rhs: &RhsPair, w: &GridFunction) -> f64 {
    let area = coeff.grid.cell_area();
    let (gx, gy) = coeff.grad(&w.values);
    let mut s = 0.0;
    for k in 0..coeff.grid.len() {
        s += area * (rhs.phi0.values[k] * w.values[k] + rhs.phi1.0.values[k] * gx[k] + rhs.phi1.1.values[k] * gy[k]);
    }
    s
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MMatrixReport {
    pub nonpositive_offdiag: bool,
    pub weakly_dominant: bool,
    /// `min_k (a_kk − Σ_{l≠k} |a_kl|)` over interior rows.
    pub min_margin: f64,
}

/// Checks the sign pattern of the interior system.
pub fn mmatrix_check(coeff: &CoeffField) -> Result<MMatrixReport> {
    check_grid(coeff)?;
    let g = coeff.grid;
    let fc = faces(coeff)?;
    let diag = fc.diag(&g);
    let nonpositive_offdiag = fc.tx.iter().chain(&fc.ty).all(|t| *t >= 0.0);
    let mut min_margin = f64::INFINITY;
    let mut dominant = true;
    for k in (0..g.len()).filter(|&k| coeff.is_interior(k)) {
        let (i, j) = g.ij(k);
        let mut off = 0.0;
        for (ni, nj, t) in [
            (i - 1, j, fc.tx[j * (g.nx - 1) + i - 1]),
            (i + 1, j, fc.tx[j * (g.nx - 1) + i]),
            (i, j - 1, fc.ty[k - g.nx]),
            (i, j + 1, fc.ty[k]),
        ] {
            if coeff.is_interior(g.idx(ni, nj)) {
                off += t.abs();
            }
        }
        // rows with no ring neighbour balance exactly; allow rounding
        dominant &= diag[k] - off >= -1e-12 * diag[k];
        min_margin = min_margin.min(diag[k] - off);
    }
    Ok(MMatrixReport { nonpositive_offdiag, weakly_dominant: dominant, min_margin })
}

/// `(ã(u,u), F(u))` — equal up to the solver tolerance when u vanishes on the ring.
pub fn energy_identity(coeff: &CoeffField, rhs: &RhsPair, u: &GridFunction) -> Result<(f64, f64)> {
    Ok((bilinear_form(coeff, u, u)?, rhs_functional(coeff, rhs, u)))
}

/// Empirical global constant `Ĉ_Ω = max ‖v‖_{L^Φ(Ω)} / ‖∇_A v‖_{L¹(Ω)}` over a fixed
/// family of plateau functions vanishing on the outer ring.
pub fn global_sobolev_constant(coeff: &CoeffField, m: f64) -> Result<f64> {
    check_grid(coeff)?;
    let phi = Young::phi(m)?;
    let g = coeff.grid;
    let area = g.cell_area();
    let mu = DiscreteMeasure::new(vec![area; g.len()])?;
    let fracs = [0.5, 0.25, 0.125, 0.0625];
    let mut best = 0.0f64;
    for &fx in &fracs {
        for &fy in &fracs {
            let (dx, dy) = (fx * g.x_half, fy * g.y_half);
            let mut v = vec![0.0; g.len()];
            for j in 0..g.ny {
                for i in 0..g.nx {
                    let ex = i.min(g.nx - 1 - i) as f64 * g.hx;
                    let ey = j.min(g.ny - 1 - j) as f64 * g.hy;
                    v[g.idx(i, j)] = (ex / dx).min(1.0) * (ey / dy).min(1.0);
                }
            }
            let (gx, gy) = coeff.grad(&v);
            let l1: f64 = gx.iter().zip(&gy).map(|(a, b)| a.hypot(*b) * area).sum();
            if l1 > 0.0 {
                best = best.max(luxemburg_norm(&phi, &v, &mu)? / l1);
            }
        }
    }
    Ok(best)
}

/// `φ* = 2Ĉ_Ω‖φ₀‖_{L^{Φ*}(Ω)} + ‖φ̄₁‖_∞`, with Ĉ_Ω from [`global_sobolev_constant`].
pub fn admissible_norm(coeff: &CoeffField, m: f64, rhs: &RhsPair) -> Result<f64> {
    rhs.check(coeff.grid.len())?;
    let sup1 = rhs.phi1.0.values.iter().zip(&rhs.phi1.1.values).fold(0.0f64, |a, (x, y)| a.max(x.hypot(*y)));
    if rhs.phi0.values.iter().all(|v| *v == 0.0) {
        return Ok(sup1);
    }
    let c_omega = global_sobolev_constant(coeff, m)?;
    Ok(2.0 * c_omega * conjugate_norm(coeff, m, &rhs.phi0)? + sup1)
}

/// `‖φ‖_{L^{Φ*}(Ω)}`; samples with equal |value| are merged before the Luxemburg bisection.
pub fn conjugate_norm(coeff: &CoeffField, m: f64, phi0: &GridFunction) -> Result<f64> {
    let phi = Young::phi(m)?;
    let area = coeff.grid.cell_area();
    let mut merged: HashMap<u64, f64> = HashMap::new();
    for v in &phi0.values {
        *merged.entry(v.abs().to_bits()).or_default() += area;
    }
    let mut pairs: Vec<(f64, f64)> = merged.into_iter().map(|(b, w)| (f64::from_bits(b), w)).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let vals: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let mu = DiscreteMeasure::new(pairs.iter().map(|p| p.1).collect())?;
    luxemburg_norm(&Conjugate(&phi), &vals, &mu)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolutionKind {
    Sub,
    Super,
}

/// A grid function whose sub/supersolution property has been checked against
/// every nonnegative cell basis function.
#[derive(Clone, Copy, Debug)]
pub struct Certified<'a> {
    pub coeff: &'a CoeffField,
    pub rhs: &'a RhsPair,
    pub u: &'a GridFunction,
    pub kind: SolutionKind,
    /// Largest residual of the wrong sign, relative to the residual scale.
    pub defect: f64,
}

impl<'a> Certified<'a> {
    /// Sub: `A_h u − b ≤ tol·s` on interior cells; super: `≥ −tol·s`, with
    /// `s = max(‖b‖_∞, ‖diag‖_∞‖u‖_∞)`.
    pub fn new(coeff: &'a CoeffField, rhs: &'a RhsPair, u: &'a GridFunction, kind: SolutionKind, tol: f64) -> Result<Certified<'a>> {
        if u.values.len() != coeff.grid.len() {
            return Err(Error::InvalidParameter("u does not match the coefficient grid".into()));
        }
        let r = weak_residual(coeff, rhs, u)?;
        let b = load(coeff, rhs);
        let d = faces(coeff)?.diag(&coeff.grid);
        let scale = b.iter().fold(0.0f64, |a, v| a.max(v.abs()))
            .max(d.iter().fold(0.0f64, |a, v| a.max(*v)) * u.sup_abs())
            .max(f64::MIN_POSITIVE);
        let worst = match kind {
            SolutionKind::Sub => r.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
            SolutionKind::Super => -r.iter().cloned().fold(f64::INFINITY, f64::min),
        } / scale;
        if worst > tol {
            return Err(Error::Precondition(format!("u is not a discrete {kind:?}solution: defect {worst:.3e} > {tol:.1e}")));
        }
        Ok(Certified { coeff, rhs, u, kind, defect: worst.max(0.0) })
    }

    /// `u⁺ + φ*` for subsolutions, `u⁻ + φ*` for supersolutions.
    pub fn shifted_part(&self) -> Vec<f64> {
        let s = self.rhs.phi_star;
        self.u
            .values
            .iter()
            .map(|&v| match self.kind {
                SolutionKind::Sub => v.max(0.0) + s,
                SolutionKind::Super => (-v).max(0.0) + s,
            })
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CaccProbe {
    /// `∫ψ²|∇_A h(w)|² / ∫h(w)²(|∇_Aψ|² + ψ²)`.
    pub constant: f64,
    pub ln_constant: f64,
}

/// Minimal constant in the reverse Sobolev inequality for one cutoff ψ.
///
/// `h` increasing (β > 0) acts on `u± + φ*` as the solution kind dictates; `h`
/// decreasing (β < 0) is only allowed for nonnegative supersolutions and acts on
/// `u + φ*`, which must then be positive on supp ψ. `∇_A h(w)` is `h′(w)∇_A w`.
pub fn caccioppoli_constant(sol: &Certified, psi: &GridFunction, h: &IterSpec) -> Result<CaccProbe> {
    h.validate()?;
    let coeff = sol.coeff;
    let g = coeff.grid;
    if psi.values.len() != g.len() {
        return Err(Error::InvalidParameter("psi does not match the grid".into()));
    }
    if (0..g.len()).any(|k| !coeff.is_interior(k) && psi.values[k] != 0.0) {
        return Err(Error::Precondition("psi must vanish on the outer ring".into()));
    }
    let w: Vec<f64> = if h.beta > 0.0 {
        sol.shifted_part()
    } else {
        if sol.kind == SolutionKind::Sub {
            return Err(Error::Precondition("decreasing h requires a supersolution".into()));
        }
        if sol.u.values.iter().any(|v| *v < 0.0) {
            return Err(Error::Precondition("decreasing h requires u >= 0".into()));
        }
        sol.u.values.iter().map(|v| v + sol.rhs.phi_star).collect()
    };
    let (wx, wy) = coeff.grad(&w);
    let (px, py) = coeff.grad(&psi.values);
    let (mut num, mut den) = (Vec::new(), Vec::new());
    for k in 0..g.len() {
        let p2 = psi.values[k] * psi.values[k];
        let q = px[k] * px[k] + py[k] * py[k] + p2;
        if q == 0.0 {
            continue;
        }
        if !(w[k] > 0.0) {
            return Err(Error::Domain(format!("u + phi* vanishes at cell {k} inside supp psi; regularize phi*")));
        }
        let lw = w[k].ln();
        let jet = h_jet(h, LogVal::from_ln(lw))?;
        den.push(2.0 * jet.ln_h + q.ln());
        let gw2 = wx[k] * wx[k] + wy[k] * wy[k];
        if p2 > 0.0 && gw2 > 0.0 && jet.dlog != 0.0 {
            num.push(2.0 * jet.ln_abs_h1(lw) + (p2 * gw2).ln());
        }
    }
    let ln_c = log_sum_exp(&num) - log_sum_exp(&den);
    Ok(CaccProbe { constant: ln_c.exp(), ln_constant: ln_c })
}

/// Products of tents `(1 − |x−c_x|/a)⁺(1 − |y−c_y|/b)⁺` centered in the grid,
/// with half-widths `a, b ∈ {0.9, 0.6, 0.3}` of the grid half-widths.
pub fn tent_family(grid: &Grid2D) -> Vec<GridFunction> {
    let mut out = Vec::new();
    for fa in [0.9, 0.6, 0.3] {
        for fb in [0.9, 0.6, 0.3] {
            let (a, b) = (fa * grid.x_half, fb * grid.y_half);
            out.push(GridFunction::from_fn(grid, |x, y| (1.0 - x.abs() / a).max(0.0) * (1.0 - y.abs() / b).max(0.0)));
        }
    }
    out
}

/// Largest Caccioppoli constant over a family of cutoffs.
pub fn caccioppoli_envelope(sol: &Certified, psis: &[GridFunction], h: &IterSpec) -> Result<f64> {
    let mut best = 0.0f64;
    for p in psis {
        best = best.max(caccioppoli_constant(sol, p, h)?.constant);
    }
    Ok(best)
}

/// Ball parameters for the local-bound checks.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BallParams {
    pub r: f64,
    pub nu: f64,
    pub beta: f64,
    pub m: f64,
    #[serde(default = "one")]
    pub c_m: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundDiagnostics {
    /// `‖w^β‖_{L∞(B(νr))} / ‖w^β‖_{L²(dμ_r)}`.
    pub ratio: f64,
    pub ln_ratio: f64,
    pub nu0: f64,
    pub phi_r: f64,
    /// The exponent multiplying C in the comparator `exp(C·scale)`.
    pub scale: f64,
    /// `ln ratio / scale`: the smallest constant the comparator needs.
    pub implied_constant: f64,
}

fn ball_setup(field: &MetricField, grid: &Grid2D, p: &BallParams) -> Result<(f64, f64)> {
    if field.grid.nx != grid.nx || field.grid.ny != grid.ny {
        return Err(Error::InvalidParameter("metric field and solution grids differ".into()));
    }
    if !(p.nu > 0.0 && p.nu < 1.0) || !(p.r > 0.0) {
        return Err(Error::InvalidParameter(format!("need r > 0 and nu in (0,1), got r = {}, nu = {}", p.r, p.nu)));
    }
    let nu0 = ball_profile(field, &[p.r])?.nu0[0];
    if p.nu < nu0 - 1e-3 {
        return Err(Error::Precondition(format!("nu = {} below nu0(r) = {nu0:.4}", p.nu)));
    }
    let phi_r = SobolevSetup { coef: field.coef, m: p.m, c_m: p.c_m }.superradius(p.r)?;
    Ok((nu0, phi_r))
}

fn power_ratio(field: &MetricField, w: &[f64], p: &BallParams) -> Result<f64> {
    let (mut ln_sup, mut terms) = (f64::NEG_INFINITY, Vec::new());
    for (k, &d) in field.dist.iter().enumerate() {
        if d >= p.r {
            continue;
        }
        if !(w[k] > 0.0) {
            return Err(Error::Domain(format!("w vanishes at cell {k} in B(0,r)")));
        }
        let l = p.beta * w[k].ln();
        terms.push(2.0 * l);
        if d < p.nu * p.r {
            ln_sup = ln_sup.max(l);
        }
    }
    if ln_sup == f64::NEG_INFINITY {
        return Err(Error::Resolution("B(0, nu r) contains no cells".into()));
    }
    Ok(ln_sup - 0.5 * (log_sum_exp(&terms) - (terms.len() as f64).ln()))
}

/// Local boundedness for β ≥ 1 with comparator `exp(C((β−1)^m + (ln φ(r)/((1−ν)r))^m))`.
pub fn local_bound_check(sol: &Certified, field: &MetricField, p: &BallParams) -> Result<BoundDiagnostics> {
    if !(p.beta >= 1.0) {
        return Err(Error::InvalidParameter(format!("beta must be >= 1, got {}", p.beta)));
    }
    let (nu0, phi_r) = ball_setup(field, &sol.coeff.grid, p)?;
    let ln_ratio = power_ratio(field, &sol.shifted_part(), p)?;
    let ell = (phi_r / ((1.0 - p.nu) * p.r)).ln();
    let scale = (p.beta - 1.0).powf(p.m) + ell.powf(p.m);
    Ok(BoundDiagnostics { ratio: ln_ratio.exp(), ln_ratio, nu0, phi_r, scale, implied_constant: ln_ratio / scale })
}

/// Negative powers on a nonnegative supersolution, comparator
/// `exp(C((|β|+1)^m + (ln φ(r)/((1−ν)r))^m))`. When φ* = 0 the shift `eps` is used instead.
pub fn negative_power_check(sol: &Certified, field: &MetricField, p: &BallParams, eps: f64) -> Result<BoundDiagnostics> {
    if !(p.beta < 0.0) {
        return Err(Error::InvalidParameter(format!("beta must be < 0, got {}", p.beta)));
    }
    if sol.kind != SolutionKind::Super {
        return Err(Error::Precondition("negative powers need a supersolution".into()));
    }
    if sol.u.values.iter().any(|v| *v < 0.0) {
        return Err(Error::Precondition("negative powers need u >= 0".into()));
    }
    let shift = if sol.rhs.phi_star > 0.0 { sol.rhs.phi_star } else { eps };
    if !(shift > 0.0) {
        return Err(Error::InvalidParameter("phi* = 0 requires eps > 0".into()));
    }
    let (nu0, phi_r) = ball_setup(field, &sol.coeff.grid, p)?;
    let w: Vec<f64> = sol.u.values.iter().map(|v| v + shift).collect();
    let ln_ratio = power_ratio(field, &w, p)?;
    let ell = (phi_r / ((1.0 - p.nu) * p.r)).ln();
    let scale = (p.beta.abs() + 1.0).powf(p.m) + ell.powf(p.m);
    Ok(BoundDiagnostics { ratio: ln_ratio.exp(), ln_ratio, nu0, phi_r, scale, implied_constant: ln_ratio / scale })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaxPrinciple {
    pub max_interior: f64,
    pub max_boundary: f64,
    pub min_interior: f64,
    pub min_boundary: f64,
    /// `max_interior − max_boundary`.
    pub excess: f64,
    /// `excess⁺ / φ*`, when φ* > 0.
    pub c_emp: Option<f64>,
}

/// Compares interior extremes with the Dirichlet ring.
pub fn max_principle_check(coeff: &CoeffField, u: &GridFunction, phi_star: f64) -> Result<MaxPrinciple> {
    check_grid(coeff)?;
    let (mut mi, mut mb) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    let (mut ni, mut nb) = (f64::INFINITY, f64::INFINITY);
    for (k, &v) in u.values.iter().enumerate() {
        if coeff.is_interior(k) {
            mi = mi.max(v);
            ni = ni.min(v);
        } else {
            mb = mb.max(v);
            nb = nb.min(v);
        }
    }
    let excess = mi - mb;
    let c_emp = (phi_star > 0.0).then(|| excess.max(0.0) / phi_star);
    Ok(MaxPrinciple { max_interior: mi, max_boundary: mb, min_interior: ni, min_boundary: nb, excess, c_emp })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainParams {
    pub m: f64,
    pub beta: f64,
    pub r: f64,
    pub nu: f64,
    /// Number of balls B_1 ⊃ … ⊃ B_J.
    pub j_max: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MoserChain {
    /// `ln ã` of the normalization `ũ = ãu`.
    pub ln_a_tilde: f64,
    /// `ln s_j`, j = 1..J; `ln s_1 = 2^m` after normalization.
    pub ln_s: Vec<f64>,
    /// `ln K_j = ln Φ^{−1}(s_{j+1}) − (m+1) ln j − ln s_j`, j = 1..J−1.
    pub ln_k: Vec<f64>,
    /// `max_j K_j` (0 when J = 1).
    pub k_min: f64,
    pub radii: Vec<f64>,
}

/// Minimal K with `s_{j+1} ≤ Φ(K j^{m+1} s_j)` for
/// `s_j = ∫_{B_j} Φ^{(j−1)}(v^{2β}) dμ_j`, `v = ã(u± + φ*)` normalized so that
/// `∫_{B_1} v^{2β} dμ_1 = e^{2^m}`. The ball radii are those of the standard cutoffs.
pub fn moser_chain_check(sol: &Certified, field: &MetricField, p: &ChainParams, opts: CutoffOptions) -> Result<MoserChain> {
    if !(p.beta >= 1.0) {
        return Err(Error::InvalidParameter(format!("beta must be >= 1, got {}", p.beta)));
    }
    if p.j_max == 0 {
        return Err(Error::InvalidParameter("J must be >= 1".into()));
    }
    let bp = BallParams { r: p.r, nu: p.nu, beta: p.beta, m: p.m, c_m: 1.0 };
    ball_setup(field, &sol.coeff.grid, &bp)?;
    let radii = if p.j_max >= 2 {
        cutoff_sequence(field, p.r, p.nu, p.j_max - 1, opts)?.radii
    } else {
        cutoff_radii(p.r, p.nu, 1)
    };
    let radii = radii[..p.j_max].to_vec();
    let phi = Young::phi(p.m)?;
    let w = sol.shifted_part();

    let mut ln_w2b = Vec::new();
    for (k, &d) in field.dist.iter().enumerate() {
        if d < p.r {
            if !(w[k] > 0.0) {
                return Err(Error::Domain(format!("u± + phi* vanishes at cell {k}; regularize phi*")));
            }
            ln_w2b.push((k, 2.0 * p.beta * w[k].ln()));
        }
    }
    let ln_mean = log_sum_exp(&ln_w2b.iter().map(|x| x.1).collect::<Vec<_>>()) - (ln_w2b.len() as f64).ln();
    // ã = e^{2^{m−1}/β} / ‖w‖_{L^{2β}(dμ_r)}
    let ln_a = 2f64.powf(p.m - 1.0) / p.beta - ln_mean / (2.0 * p.beta);
    let shift = 2.0 * p.beta * ln_a;

    let mut ln_s = Vec::with_capacity(p.j_max);
    for (jj, &rj) in radii.iter().enumerate() {
        let terms: Vec<f64> = ln_w2b
            .iter()
            .filter(|(k, _)| field.dist[*k] < rj)
            .map(|(_, l)| phi_iter(&phi, jj as u32, LogVal::from_ln(l + shift)).ln())
            .collect();
        if terms.is_empty() {
            return Err(Error::Resolution(format!("B(0,{rj:.3e}) contains no cells")));
        }
        ln_s.push(log_sum_exp(&terms) - (terms.len() as f64).ln());
    }
    let mut ln_k = Vec::new();
    for j in 1..p.j_max {
        let up = phi.inv(LogVal::from_ln(ln_s[j])).ln();
        ln_k.push(up - (p.m + 1.0) * (j as f64).ln() - ln_s[j - 1]);
    }
    let k_min = ln_k.iter().cloned().fold(f64::NEG_INFINITY, f64::max).exp();
    if !k_min.is_finite() {
        return Err(Error::Numerical("minimal K overflowed".into()));
    }
    Ok(MoserChain { ln_a_tilde: ln_a, ln_s, ln_k, k_min, radii })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SupMeasure {
    /// ω = cell area.
    Lebesgue,
    /// `dω/ω(D_j)` on each D_j.
    #[default]
    Normalized,
}

/// Cell index sets `{d < r_j}`.
pub fn nested_balls(field: &MetricField, radii: &[f64]) -> Vec<Vec<usize>> {
    radii
        .iter()
        .map(|&r| field.dist.iter().enumerate().filter(|(_, d)| **d < r).map(|(k, _)| k).collect())
        .collect()
}

/// `a_j = Φ^{(−j)}(∫_{D_j} Φ^{(j)}(|f|) dω)` for j = 1..=J, `J = sets.len()`.
pub fn supnorm_recovery(f: &GridFunction, sets: &[Vec<usize>], cell_area: f64, m: f64, measure: SupMeasure) -> Result<Vec<f64>> {
    let phi = Young::phi(m)?;
    let n = f.values.len();
    let mut prev: Option<Vec<bool>> = None;
    let mut out = Vec::with_capacity(sets.len());
    for (jj, set) in sets.iter().enumerate() {
        if set.is_empty() {
            return Err(Error::InvalidParameter(format!("D_{} is empty", jj + 1)));
        }
        let mut mask = vec![false; n];
        for &k in set {
            if k >= n {
                return Err(Error::InvalidParameter(format!("cell {k} out of range")));
            }
            mask[k] = true;
        }
        if let Some(p) = &prev {
            if set.iter().any(|&k| !p[k]) {
                return Err(Error::InvalidParameter(format!("D_{} is not contained in D_{}", jj + 1, jj)));
            }
        }
        let j = jj as u32 + 1;
        let w = match measure {
            SupMeasure::Lebesgue => cell_area,
            SupMeasure::Normalized => 1.0 / set.len() as f64,
        };
        let s = LogVal::weighted_sum(set.iter().map(|&k| (w, phi_iter(&phi, j, LogVal::new(f.values[k].abs())))));
        out.push(phi_iter_inv(&phi, j, s).value());
        prev = Some(mask);
    }
    Ok(out)
}
