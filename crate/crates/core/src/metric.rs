//! Discrete Carnot–Carathéodory metric for `A = diag(1, f(x)²)` on a cell-centered grid.
//!
//! Path length is `∫ √(ẋ² + ẏ²/f(x)²)`. Distances come from Dijkstra on a
//! 16-neighbour stencil (knight moves included) whose edge costs evaluate f at
//! the edge midpoint. Cell centers are staggered in x so none sits on x = 0.

use crate::error::{Error, Result};
use crate::geometry::Geometry;
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::PI;

/// The coefficient `f` in `A = diag(1, f²)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Coefficient {
    /// `f ≡ 1`.
    Isotropic,
    /// `f = e^{−F_{k,σ}(|x|)}`, extended by 1 outside the profile's domain.
    Degenerate { k: u32, sigma: f64 },
    /// `f = |x|^α`, finite type.
    Power { alpha: f64 },
}

impl Coefficient {
    pub fn degenerate(g: Geometry) -> Coefficient {
        Coefficient::Degenerate { k: g.k, sigma: g.sigma }
    }

    pub fn geometry(&self) -> Option<Geometry> {
        match *self {
            Coefficient::Degenerate { k, sigma } => Geometry::new(k, sigma).ok(),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Coefficient::Degenerate { k, sigma } => Geometry::new(k, sigma).map(|_| ()),
            Coefficient::Power { alpha } if !(alpha >= 0.0) => {
                Err(Error::InvalidParameter(format!("alpha must be >= 0, got {alpha}")))
            }
            _ => Ok(()),
        }
    }

    pub fn f(&self, x: f64) -> f64 {
        match *self {
            Coefficient::Isotropic => 1.0,
            Coefficient::Degenerate { k, sigma } => Geometry { k, sigma }.f_ext(x),
            Coefficient::Power { alpha } => x.abs().powf(alpha),
        }
    }
}

/// Uniform cell-centered grid on `[−X,X]×[−Y,Y]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid2D {
    pub x_half: f64,
    pub y_half: f64,
    pub nx: usize,
    pub ny: usize,
    pub hx: f64,
    pub hy: f64,
}

impl Grid2D {
    /// `nx` must be even (no cell center on x = 0) and `ny` odd (a cell row on y = 0).
    pub fn new(x_half: f64, y_half: f64, nx: usize, ny: usize) -> Result<Grid2D> {
        if !(x_half > 0.0 && y_half > 0.0) {
            return Err(Error::InvalidParameter("grid half-widths must be positive".into()));
        }
        if nx < 2 || nx % 2 != 0 {
            return Err(Error::InvalidParameter(format!("nx must be even and >= 2, got {nx}")));
        }
        if ny % 2 != 1 {
            return Err(Error::InvalidParameter(format!("ny must be odd, got {ny}")));
        }
        Ok(Grid2D { x_half, y_half, nx, ny, hx: 2.0 * x_half / nx as f64, hy: 2.0 * y_half / ny as f64 })
    }

    /// Square-ish grid with `n` cells in x (rounded to even) and the closest odd count in y.
    pub fn with_resolution(x_half: f64, y_half: f64, n: usize) -> Result<Grid2D> {
        let nx = n + n % 2;
        let ny = n - (1 - n % 2);
        Grid2D::new(x_half, y_half, nx, ny.max(1))
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    #[inline]
    pub fn ij(&self, k: usize) -> (usize, usize) {
        (k % self.nx, k / self.nx)
    }

    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        -self.x_half + (i as f64 + 0.5) * self.hx
    }

    #[inline]
    pub fn y(&self, j: usize) -> f64 {
        -self.y_half + (j as f64 + 0.5) * self.hy
    }

    pub fn cell_area(&self) -> f64 {
        self.hx * self.hy
    }

    /// Index of the cell containing `(x, y)`, if inside.
    pub fn locate(&self, x: f64, y: f64) -> Option<(usize, usize)> {
        let fi = ((x + self.x_half) / self.hx).floor();
        let fj = ((y + self.y_half) / self.hy).floor();
        if fi < 0.0 || fj < 0.0 || fi >= self.nx as f64 || fj >= self.ny as f64 {
            None
        } else {
            Some((fi as usize, fj as usize))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Stencil {
    Eight,
    #[default]
    Sixteen,
}

impl Stencil {
    fn offsets(&self) -> &'static [(i32, i32)] {
        const EIGHT: [(i32, i32); 8] = [(1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (1, -1), (-1, 1), (-1, -1)];
        const SIXTEEN: [(i32, i32); 16] = [
            (1, 0),
            (-1, 0),
            (0, 1),
            (0, -1),
            (1, 1),
            (1, -1),
            (-1, 1),
            (-1, -1),
            (2, 1),
            (2, -1),
            (-2, 1),
            (-2, -1),
            (1, 2),
            (1, -2),
            (-1, 2),
            (-1, -2),
        ];
        match self {
            Stencil::Eight => &EIGHT,
            Stencil::Sixteen => &SIXTEEN,
        }
    }
}

/// `d_A(center, ·)` on every cell.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricField {
    pub grid: Grid2D,
    pub coef: Coefficient,
    pub center: (f64, f64),
    pub dist: Vec<f64>,
}

#[derive(Clone, Copy, PartialEq)]
struct Node(f64, usize);

impl Eq for Node {}

impl PartialOrd for Node {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

impl Ord for Node {
    fn cmp(&self, o: &Self) -> Ordering {
        // min-heap on distance, ties by index for determinism
        o.0.total_cmp(&self.0).then_with(|| o.1.cmp(&self.1))
    }
}

/// f sampled at every half-cell abscissa `−X + k·hx/2`.
fn half_cell_f(grid: &Grid2D, coef: &Coefficient) -> Vec<f64> {
    (0..=2 * grid.nx).map(|k| coef.f(-grid.x_half + k as f64 * grid.hx / 2.0)).collect()
}

#[inline]
fn edge_cost(dx: f64, dy: f64, f: f64) -> f64 {
    if dy == 0.0 {
        dx.abs()
    } else if f > 0.0 {
        (dx * dx + (dy / f) * (dy / f)).sqrt()
    } else {
        f64::INFINITY
    }
}

/// Dijkstra from `center` (any point inside the grid).
pub fn cc_distance_field(coef: &Coefficient, grid: &Grid2D, center: (f64, f64), stencil: Stencil) -> Result<MetricField> {
    coef.validate()?;
    if let Some(g) = coef.geometry() {
        if grid.hx >= g.r_max() / 10.0 {
            return Err(Error::Resolution(format!(
                "hx = {:.3e} does not resolve f (need hx < r_max/10 = {:.3e})",
                grid.hx,
                g.r_max() / 10.0
            )));
        }
    }
    let (ci, cj) = grid
        .locate(center.0, center.1)
        .ok_or_else(|| Error::Domain(format!("center {center:?} outside grid")))?;
    let fh = half_cell_f(grid, coef);
    let n = grid.len();
    let mut dist = vec![f64::INFINITY; n];
    let mut heap = BinaryHeap::new();

    // virtual source: straight segments to the cells around the center
    let i0 = ci.saturating_sub(1);
    let j0 = cj.saturating_sub(1);
    for i in i0..=(ci + 1).min(grid.nx - 1) {
        for j in j0..=(cj + 1).min(grid.ny - 1) {
            let (x, y) = (grid.x(i), grid.y(j));
            let (dx, dy) = (x - center.0, y - center.1);
            if dx.abs() > grid.hx * 1.0000001 || dy.abs() > grid.hy * 1.0000001 {
                continue;
            }
            let c = edge_cost(dx, dy, coef.f(0.5 * (x + center.0)));
            let k = grid.idx(i, j);
            if c < dist[k] {
                dist[k] = c;
                heap.push(Node(c, k));
            }
        }
    }

    let offs = stencil.offsets();
    while let Some(Node(d, k)) = heap.pop() {
        if d > dist[k] {
            continue;
        }
        let (i, j) = grid.ij(k);
        for &(di, dj) in offs {
            let ni = i as i64 + di as i64;
            let nj = j as i64 + dj as i64;
            if ni < 0 || nj < 0 || ni >= grid.nx as i64 || nj >= grid.ny as i64 {
                continue;
            }
            let (ni, nj) = (ni as usize, nj as usize);
            // midpoint abscissa index in half-cell units: x_i ↔ 2i+1
            let f = fh[(2 * i + 1 + 2 * ni + 1) / 2];
            let c = edge_cost(di as f64 * grid.hx, dj as f64 * grid.hy, f);
            let nd = d + c;
            let nk = grid.idx(ni, nj);
            if nd < dist[nk] {
                dist[nk] = nd;
                heap.push(Node(nd, nk));
            }
        }
    }
    Ok(MetricField { grid: *grid, coef: *coef, center, dist })
}

impl MetricField {
    /// Distance at the cell containing `(x, y)`.
    pub fn at(&self, x: f64, y: f64) -> Option<f64> {
        self.grid.locate(x, y).map(|(i, j)| self.dist[self.grid.idx(i, j)])
    }

    /// `|{d < r}|` as cell count times cell area.
    pub fn ball_volume(&self, r: f64) -> f64 {
        self.dist.iter().filter(|&&d| d < r).count() as f64 * self.grid.cell_area()
    }

    pub fn ball_cells(&self, r: f64) -> usize {
        self.dist.iter().filter(|&&d| d < r).count()
    }

    /// Euclidean in-radius (closest cell outside) and out-radius (farthest cell inside) of `{d < r}`.
    pub fn euclidean_radii(&self, r: f64) -> (f64, f64) {
        let (mut inner, mut outer) = (f64::INFINITY, 0.0f64);
        for (k, &d) in self.dist.iter().enumerate() {
            let (i, j) = self.grid.ij(k);
            let e = (self.grid.x(i) - self.center.0).hypot(self.grid.y(j) - self.center.1);
            if d < r {
                outer = outer.max(e);
            } else {
                inner = inner.min(e);
            }
        }
        (inner, outer)
    }
}

/// Grid sized to `B(0, r)`: `X = 1.05r`, `Y = 1.05·r·f(r)`, since vertical reach is at most `r·max_{|x|≤r} f`.
pub fn ball_grid(coef: &Coefficient, r: f64, n: usize) -> Result<Grid2D> {
    let fmax = (0..=64).map(|i| coef.f(r * i as f64 / 64.0)).fold(0.0, f64::max);
    Grid2D::with_resolution(1.05 * r, 1.05 * r * fmax.max(1e-300), n)
}

/// `|B(0, r)|` measured on a grid fitted to the ball.
pub fn ball_volume_fitted(coef: &Coefficient, r: f64, n: usize, stencil: Stencil) -> Result<f64> {
    let grid = ball_grid(coef, r, n)?;
    let field = cc_distance_field(coef, &grid, (0.0, 0.0), stencil)?;
    Ok(field.ball_volume(r))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BallProfile {
    pub radii: Vec<f64>,
    pub volumes: Vec<f64>,
    pub deltas: Vec<f64>,
    pub nu0: Vec<f64>,
}

/// Volumes and doubling increments `δ₀(r)` with `|B(r−δ)| = ½|B(r)|`.
pub fn ball_profile(field: &MetricField, r_list: &[f64]) -> Result<BallProfile> {
    let mut sorted: Vec<f64> = field.dist.iter().cloned().filter(|d| d.is_finite()).collect();
    sorted.sort_by(f64::total_cmp);
    let count = |r: f64| sorted.partition_point(|&d| d < r);
    let area = field.grid.cell_area();
    let mut prof = BallProfile { radii: vec![], volumes: vec![], deltas: vec![], nu0: vec![] };
    for &r in r_list {
        let c = count(r);
        if c < 25 {
            return Err(Error::Resolution(format!("B(0,{r}) contains only {c} cells (< 25)")));
        }
        let half = c as f64 / 2.0;
        let (mut lo, mut hi) = (0.0, r);
        while hi - lo > 1e-3 * r {
            let mid = 0.5 * (lo + hi);
            if (count(r - mid) as f64) > half {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let delta = 0.5 * (lo + hi);
        prof.radii.push(r);
        prof.volumes.push(c as f64 * area);
        prof.deltas.push(delta);
        prof.nu0.push(1.0 - delta / r);
    }
    Ok(prof)
}

/// Per-cell values, with an optional radius outside of which the function vanishes.
#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction {
    pub values: Vec<f64>,
    pub support_radius: Option<f64>,
}

impl GridFunction {
    pub fn new(values: Vec<f64>) -> GridFunction {
        GridFunction { values, support_radius: None }
    }

    pub fn from_fn(grid: &Grid2D, f: impl Fn(f64, f64) -> f64) -> GridFunction {
        let mut v = vec![0.0; grid.len()];
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                v[grid.idx(i, j)] = f(grid.x(i), grid.y(j));
            }
        }
        GridFunction::new(v)
    }

    pub fn sup_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |a, v| a.max(v.abs()))
    }
}

fn diff(v: &[f64], n: usize, h: f64, at: impl Fn(usize) -> usize, p: usize) -> f64 {
    if n < 2 {
        0.0
    } else if p == 0 {
        (v[at(1)] - v[at(0)]) / h
    } else if p == n - 1 {
        (v[at(n - 1)] - v[at(n - 2)]) / h
    } else {
        (v[at(p + 1)] - v[at(p - 1)]) / (2.0 * h)
    }
}

/// `∇_A w = (∂_x w, f(x)∂_y w)`: centered differences, one-sided at the boundary.
pub fn grad_a(coef: &Coefficient, grid: &Grid2D, w: &GridFunction) -> (GridFunction, GridFunction) {
    let mut gx = vec![0.0; grid.len()];
    let mut gy = vec![0.0; grid.len()];
    let v = &w.values;
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            let k = grid.idx(i, j);
            gx[k] = diff(v, grid.nx, grid.hx, |p| grid.idx(p, j), i);
            gy[k] = coef.f(grid.x(i)) * diff(v, grid.ny, grid.hy, |p| grid.idx(i, p), j);
        }
    }
    (GridFunction::new(gx), GridFunction::new(gy))
}

/// `max |∇_A w|` over cells.
pub fn grad_a_sup(coef: &Coefficient, grid: &Grid2D, w: &GridFunction) -> f64 {
    let (gx, gy) = grad_a(coef, grid, w);
    gx.values.iter().zip(&gy.values).fold(0.0, |a, (x, y)| a.max(x.hypot(*y)))
}

/// `c` with `Σ_j c j^{−2} = 1`.
pub const CUTOFF_C: f64 = 6.0 / (PI * PI);

/// Radii `r_1 = r`, `r_{j+1} = r_j − c(1−ν)r/j²`, returned for j = 1..=J+1.
pub fn cutoff_radii(r: f64, nu: f64, j_max: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(j_max + 1);
    let mut rj = r;
    out.push(rj);
    for j in 1..=j_max {
        rj -= CUTOFF_C * (1.0 - nu) * r / (j * j) as f64;
        out.push(rj);
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CutoffOptions {
    /// Minimum ramp width in cells of `hx`; narrower ramps raise a resolution error.
    #[serde(default = "default_ramp_cells")]
    pub min_ramp_cells: f64,
    /// Skip the `ν ≥ ν₀(r)` check.
    #[serde(default)]
    pub skip_nu0_check: bool,
}

fn default_ramp_cells() -> f64 {
    2.0
}

impl Default for CutoffOptions {
    fn default() -> Self {
        CutoffOptions { min_ramp_cells: 2.0, skip_nu0_check: false }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CutoffSequence {
    pub radii: Vec<f64>,
    pub psi: Vec<GridFunction>,
    /// `‖∇_A ψ_j‖_∞·(1−ν)r/j²` per j.
    pub constants: Vec<f64>,
}

impl CutoffSequence {
    pub fn max_constant(&self) -> f64 {
        self.constants.iter().cloned().fold(0.0, f64::max)
    }
}

/// Ramps `ψ_j = clamp((r_j − d)/(r_j − r_{j+1}), 0, 1)` for j = 1..=J.
pub fn cutoff_sequence(field: &MetricField, r: f64, nu: f64, j_max: usize, opts: CutoffOptions) -> Result<CutoffSequence> {
    if !(nu > 0.0 && nu < 1.0) {
        return Err(Error::InvalidParameter(format!("nu must lie in (0,1), got {nu}")));
    }
    if j_max == 0 || j_max > 30 {
        return Err(Error::InvalidParameter(format!("J must be in 1..=30, got {j_max}")));
    }
    if !opts.skip_nu0_check {
        let nu0 = ball_profile(field, &[r])?.nu0[0];
        if nu < nu0 - 1e-3 {
            return Err(Error::Precondition(format!("nu = {nu} below nu0(r) = {nu0:.4}")));
        }
    }
    let radii = cutoff_radii(r, nu, j_max);
    let width_min = radii[j_max - 1] - radii[j_max];
    if width_min < opts.min_ramp_cells * field.grid.hx {
        return Err(Error::Resolution(format!(
            "ramp width {width_min:.3e} at j = {j_max} below {} cells of hx = {:.3e}",
            opts.min_ramp_cells, field.grid.hx
        )));
    }
    let mut psi = Vec::with_capacity(j_max);
    let mut constants = Vec::with_capacity(j_max);
    for j in 1..=j_max {
        let (a, b) = (radii[j - 1], radii[j]);
        let vals = field.dist.iter().map(|&d| ((a - d) / (a - b)).clamp(0.0, 1.0)).collect();
        let g = GridFunction { values: vals, support_radius: Some(a) };
        let s = grad_a_sup(&field.coef, &field.grid, &g);
        constants.push(s * (1.0 - nu) * r / (j * j) as f64);
        psi.push(g);
    }
    Ok(CutoffSequence { radii, psi, constants })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn iso(n: usize) -> MetricField {
        let g = Grid2D::with_resolution(1.0, 1.0, n).unwrap();
        cc_distance_field(&Coefficient::Isotropic, &g, (0.0, 0.0), Stencil::Sixteen).unwrap()
    }

    #[test]
    fn isotropic_close_to_euclidean() {
        let f = iso(200);
        let mut worst = 0.0f64;
        for (k, &d) in f.dist.iter().enumerate() {
            let (i, j) = f.grid.ij(k);
            let e = f.grid.x(i).hypot(f.grid.y(j));
            if e > 0.1 {
                worst = worst.max((d / e - 1.0).abs());
            }
        }
        assert!(worst < 0.05, "{worst}");
    }

    #[test]
    fn eight_neighbour_bias_exceeds_four_percent() {
        // octile metric overestimates by up to √(4−2√2) − 1 ≈ 8.2 % near 22.5°
        let g = Grid2D::with_resolution(1.0, 1.0, 200).unwrap();
        let f = cc_distance_field(&Coefficient::Isotropic, &g, (0.0, 0.0), Stencil::Eight).unwrap();
        let d = f.at(0.8, 0.4).unwrap();
        let e = (f.grid.x(f.grid.locate(0.8, 0.4).unwrap().0)).hypot(0.4);
        assert!(d / e - 1.0 > 0.05);
    }

    #[test]
    fn symmetric_distances() {
        let g = Grid2D::with_resolution(0.3, 0.05, 64).unwrap();
        let c = Coefficient::Degenerate { k: 1, sigma: 0.5 };
        let (a, b) = ((g.x(10), g.y(20)), (g.x(50), g.y(40)));
        let fa = cc_distance_field(&c, &g, a, Stencil::Sixteen).unwrap();
        let fb = cc_distance_field(&c, &g, b, Stencil::Sixteen).unwrap();
        let dab = fa.at(b.0, b.1).unwrap();
        let dba = fb.at(a.0, a.1).unwrap();
        assert!((dab - dba).abs() < 1e-10, "{dab} {dba}");
    }

    #[test]
    fn degenerate_bounds() {
        let c = Coefficient::Degenerate { k: 1, sigma: 0.5 };
        let g = Grid2D::with_resolution(0.3, 0.02, 128).unwrap();
        let f = cc_distance_field(&c, &g, (0.0, 0.0), Stencil::Sixteen).unwrap();
        for (k, &d) in f.dist.iter().enumerate() {
            let (i, j) = g.ij(k);
            let (x, y) = (g.x(i), g.y(j));
            assert!(d >= x.abs() - 1e-12);
            // L-shaped path: along y = 0, then vertically at abscissa x
            let l = x.abs() + y.abs() / c.f(x);
            assert!(d <= l * (1.0 + 1e-12));
        }
        // straight up from the origin is much costlier than |y|, yet finite
        let (_, j) = g.locate(0.0, 0.015).unwrap();
        let d = f.dist[g.idx(g.nx / 2, j)];
        assert!(d.is_finite() && d > 5.0 * g.y(j));
    }

    #[test]
    fn refinement_changes_little() {
        let c = Coefficient::Degenerate { k: 1, sigma: 0.5 };
        let a = cc_distance_field(&c, &Grid2D::with_resolution(0.3, 0.03, 128).unwrap(), (0.0, 0.0), Stencil::Sixteen).unwrap();
        let b = cc_distance_field(&c, &Grid2D::with_resolution(0.3, 0.03, 256).unwrap(), (0.0, 0.0), Stencil::Sixteen).unwrap();
        for &(x, y) in &[(0.1, 0.0), (0.2, 0.01), (-0.15, -0.02), (0.05, 0.002)] {
            let (da, db) = (a.at(x, y).unwrap(), b.at(x, y).unwrap());
            assert!((da / db - 1.0).abs() < 0.05, "{x},{y}: {da} {db}");
        }
    }

    #[test]
    fn disc_half_area_increment() {
        let f = iso(256);
        let p = ball_profile(&f, &[0.5, 0.8]).unwrap();
        for (r, d) in p.radii.iter().zip(&p.deltas) {
            assert!((d / r / (1.0 - 0.5f64.sqrt()) - 1.0).abs() < 0.03);
        }
        assert!(ball_profile(&f, &[0.01]).is_err());
    }

    #[test]
    fn grad_a_exact_on_linear() {
        let c = Coefficient::Degenerate { k: 1, sigma: 0.5 };
        let g = Grid2D::with_resolution(0.3, 0.3, 32).unwrap();
        let (gx, gy) = grad_a(&c, &g, &GridFunction::from_fn(&g, |x, _| x));
        assert!(gx.values.iter().all(|v| (v - 1.0).abs() < 1e-12));
        assert!(gy.values.iter().all(|v| v.abs() < 1e-12));
        let (gx, gy) = grad_a(&c, &g, &GridFunction::from_fn(&g, |_, y| y));
        for k in 0..g.len() {
            let (i, _) = g.ij(k);
            assert!(gx.values[k].abs() < 1e-12);
            assert!((gy.values[k] - c.f(g.x(i))).abs() < 1e-12);
        }
    }

    #[test]
    fn distance_is_subunit() {
        let f = iso(256);
        let s = grad_a_sup(&f.coef, &f.grid, &GridFunction::new(f.dist.clone()));
        assert!(s <= 1.15, "{s}");
    }

    #[test]
    fn cutoff_properties() {
        let r = cutoff_radii(1.0, 0.5, 30);
        assert!(r.windows(2).all(|w| w[1] < w[0]));
        // the infinite tail closes the gap to νr
        let tail: f64 = (31..200_000u64).map(|j| CUTOFF_C * 0.5 / (j * j) as f64).sum();
        assert!((r[30] - tail - 0.5).abs() < 1e-5);

        let f = iso(256);
        let seq = cutoff_sequence(&f, 0.8, 0.75, 2, CutoffOptions::default()).unwrap();
        for (j, p) in seq.psi.iter().enumerate() {
            for (k, &d) in f.dist.iter().enumerate() {
                if d <= seq.radii[j + 1] {
                    assert_eq!(p.values[k], 1.0);
                }
                if d >= seq.radii[j] {
                    assert_eq!(p.values[k], 0.0);
                }
            }
        }
        assert!(seq.max_constant() <= 2.0, "{:?}", seq.constants);
        assert!(matches!(
            cutoff_sequence(&f, 0.8, 0.75, 20, CutoffOptions::default()),
            Err(Error::Resolution(_))
        ));
        assert!(matches!(
            cutoff_sequence(&f, 0.8, 0.3, 2, CutoffOptions::default()),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn ball_contains_and_is_contained() {
        let c = Coefficient::Degenerate { k: 1, sigma: 0.5 };
        let g = ball_grid(&c, 0.2, 128).unwrap();
        let f = cc_distance_field(&c, &g, (0.0, 0.0), Stencil::Sixteen).unwrap();
        let (inner, outer) = f.euclidean_radii(0.2);
        assert!(inner > 0.0 && inner < outer && outer <= 0.2 * 1.05);
    }
}
