use crate::report::Report;
use crate::CliError;
use clap::Args;
use orlicz_moser::geometry::Geometry;
use orlicz_moser::iterates::{h_ratios, ratio_envelope, IterSpec};
use orlicz_moser::logval::LogVal;
use orlicz_moser::metric::{
    ball_grid, ball_profile, cc_distance_field, cutoff_sequence, Coefficient, CutoffOptions, Grid2D, GridFunction, Stencil,
};
use orlicz_moser::orlicz::{log_grid_pairs, submult_ratio, PhiM, Variant, Young, YoungFn};
use orlicz_moser::recurrence::{cstar_verify, failure_demo, minimal_cm, run_recurrence};
use orlicz_moser::sobolev::{failure_probe, sobolev_ratio as quotient, test_family, SobolevSetup, TestStyle};
use orlicz_moser::solver::*;
use serde::{Deserialize, Serialize};

type Out = Result<Report, CliError>;

fn variant(s: &Option<String>) -> Result<Variant, CliError> {
    match s.as_deref().unwrap_or("phi") {
        "phi" => Ok(Variant::Phi),
        "phi_tilde" | "phi-tilde" => Ok(Variant::PhiTilde),
        v => Err(CliError::Config(format!("unknown variant {v:?} (phi | phi_tilde)"))),
    }
}

/// Coefficient selection shared by the grid commands.
#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct CoefArgs {
    /// isotropic | degenerate | power
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coef: Option<String>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<u32>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
}

impl CoefArgs {
    fn build(&self, default: &str) -> Result<Coefficient, CliError> {
        let c = match self.coef.as_deref().unwrap_or(default) {
            "isotropic" => Coefficient::Isotropic,
            "degenerate" => Coefficient::Degenerate { k: self.k.unwrap_or(1), sigma: self.sigma.unwrap_or(0.5) },
            "power" => Coefficient::Power { alpha: self.alpha.unwrap_or(1.0) },
            v => return Err(CliError::Config(format!("unknown coefficient {v:?}"))),
        };
        c.validate()?;
        Ok(c)
    }
}

fn coef_params(r: &mut Report, c: &Coefficient) {
    r.param("coef", serde_json::to_value(c).expect("coefficient serializes"));
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct YoungArgs {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<f64>,
    /// phi | phi_tilde
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub variant: Option<String>,
}

pub fn young_check(a: &YoungArgs) -> Out {
    let m = a.m.unwrap_or(2.0);
    let var = variant(&a.variant)?;
    let phi = PhiM::new(m)?;
    let y = Young::new(m, var)?;
    let mut r = Report::new("young-check", &["ln_t", "ln_phi"]);
    r.param("m", m).param("variant", a.variant.clone().unwrap_or_else(|| "phi".into()));
    let hi = 2.0 * y.ln_f();
    for i in 0..=200 {
        let lt = -2.0 + (hi + 2.0) * i as f64 / 200.0;
        r.row(vec![lt, y.log_profile(lt)]);
    }
    let sub = submult_ratio(&y, &log_grid_pairs(100, -5.0, 2.0 * y.ln_f()));
    let gap = phi.branch_gap();
    let ext = phi.extension_ratio();
    r.metric("ln_e", y.ln_e()).metric("ln_f", y.ln_f()).metric("branch_gap", gap);
    r.metric("extension_ratio", ext).metric("submult_max", sub);
    r.flag("branch_continuous", gap <= 1e-12 * phi.ln_f().max(1.0));
    r.flag("extension_condition", ext > 1.0);
    r.flag("submultiplicative", sub <= 1.0 + 1e-9);
    Ok(r)
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct EnvelopeArgs {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub j: Option<u32>,
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub variant: Option<String>,
    /// Sample range in ln t.
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lo: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hi: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
}

pub fn iterates_envelope(a: &EnvelopeArgs) -> Out {
    let spec = IterSpec::new(a.m.unwrap_or(3.0), a.j.unwrap_or(3), a.beta.unwrap_or(1.0), variant(&a.variant)?)?;
    let (lo, hi, n) = (a.lo.unwrap_or(-20.0), a.hi.unwrap_or(60.0), a.n.unwrap_or(2000));
    let env = ratio_envelope(&spec, lo, hi, n)?;
    let mut r = Report::new("iterates-envelope", &["ln_t", "elasticity", "upsilon_ratio"]);
    r.param("m", spec.m).param("j", spec.j).param("beta", spec.beta);
    r.param("variant", a.variant.clone().unwrap_or_else(|| "phi".into()));
    r.param("lo", lo).param("hi", hi).param("n", n as u64);
    for i in 0..=200 {
        let lt = lo + (hi - lo) * i as f64 / 200.0;
        let (e, u) = h_ratios(&spec, LogVal::from_ln(lt))?;
        r.row(vec![lt, e, u]);
    }
    r.metric("min_upsilon", env.min_upsilon).metric("max_upsilon", env.max_upsilon);
    r.metric("bracket_lo", env.bracket.0).metric("bracket_hi", env.bracket.1);
    r.metric("min_elasticity", env.min_elasticity).metric("fitted_cm", env.fitted_cm);
    r.flag("within_bracket", env.within(1e-6));
    r.flag("elasticity_at_least_one", env.min_elasticity >= 1.0 - 1e-6);
    Ok(r)
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct RecurrenceArgs {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<f64>,
    #[arg(long = "K")]
    #[serde(rename = "K", skip_serializing_if = "Option::is_none")]
    pub k: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    /// θ₁ = (ln b₁)^{1/m}.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b1_theta: Option<f64>,
    #[arg(long = "N")]
    #[serde(rename = "N", skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
}

pub fn recurrence_run(a: &RecurrenceArgs) -> Out {
    let (m, k, g, th, n) =
        (a.m.unwrap_or(3.0), a.k.unwrap_or(std::f64::consts::E), a.gamma.unwrap_or(4.0), a.b1_theta.unwrap_or(2.0), a.n.unwrap_or(10_000));
    let t = run_recurrence(m, k, g, th, n)?;
    let mut r = Report::new("recurrence-run", &["n", "beta", "excess"]);
    r.param("m", m).param("K", k).param("gamma", g).param("b1_theta", th).param("N", n as u64);
    for (i, (b, d)) in t.betas.iter().zip(&t.excess).enumerate() {
        r.row(vec![(i + 1) as f64, *b, *d]);
    }
    let cm = minimal_cm(&t);
    r.metric("minimal_cm", cm).metric("beta_N", *t.betas.last().expect("N >= 1"));
    if m > 2.0 {
        r.flag("dominated", cstar_verify(&t, cm)?);
    }
    Ok(r)
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct FailureDemoArgs {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<f64>,
    #[arg(long = "K")]
    #[serde(rename = "K", skip_serializing_if = "Option::is_none")]
    pub k: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b1_theta: Option<f64>,
    #[arg(long = "N")]
    #[serde(rename = "N", skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
}

pub fn recurrence_failure(a: &FailureDemoArgs) -> Out {
    let (m, k, th, n) = (a.m.unwrap_or(2.0), a.k.unwrap_or(std::f64::consts::E.powi(2)), a.b1_theta.unwrap_or(2.0), a.n.unwrap_or(10_000));
    let s = failure_demo(m, k, th, n)?;
    let mut r = Report::new("recurrence-failure", &["n", "ln_value"]);
    r.param("m", m).param("K", k).param("b1_theta", th).param("N", n as u64);
    for (i, v) in s.iter().enumerate() {
        r.row(vec![(i + 1) as f64, *v]);
    }
    let growth = s.last().expect("N >= 1") - s[0];
    r.metric("ln_growth", growth);
    r.flag("unbounded_growth", growth >= 10f64.ln());
    Ok(r)
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct ProfileArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub coef: CoefArgs,
    /// Cells across the fitted grid.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub radii: Option<Vec<f64>>,
}

pub fn metric_profile(a: &ProfileArgs) -> Out {
    let c = a.coef.build("degenerate")?;
    let radii = a.radii.clone().unwrap_or_else(|| vec![0.3, 0.2, 0.1, 0.05]);
    let n = a.n.unwrap_or(256);
    let mut r = Report::new("metric-profile", &["r", "vol", "delta0", "nu0"]);
    coef_params(&mut r, &c);
    r.param("n", n as u64).param("radii", radii.clone());
    if radii.is_empty() {
        return Ok(r);
    }
    let rmax = radii.iter().cloned().fold(0.0, f64::max);
    let field = cc_distance_field(&c, &ball_grid(&c, rmax, n)?, (0.0, 0.0), Stencil::Sixteen)?;
    let p = ball_profile(&field, &radii)?;
    for i in 0..p.radii.len() {
        r.row(vec![p.radii[i], p.volumes[i], p.deltas[i], p.nu0[i]]);
    }
    r.metric("max_nu0", p.nu0.iter().cloned().fold(0.0, f64::max));
    r.flag("nu0_below_one", p.nu0.iter().all(|&v| v < 1.0));
    Ok(r)
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct CutoffArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub coef: CoefArgs,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nu: Option<f64>,
    #[arg(long = "J")]
    #[serde(rename = "J", skip_serializing_if = "Option::is_none")]
    pub j: Option<usize>,
}

pub fn metric_cutoffs(a: &CutoffArgs) -> Out {
    let c = a.coef.build("isotropic")?;
    let (n, rad, nu, jm) = (a.n.unwrap_or(512), a.r.unwrap_or(0.4), a.nu.unwrap_or(0.75), a.j.unwrap_or(4));
    let field = cc_distance_field(&c, &ball_grid(&c, rad, n)?, (0.0, 0.0), Stencil::Sixteen)?;
    let seq = cutoff_sequence(&field, rad, nu, jm, CutoffOptions::default())?;
    let mut r = Report::new("metric-cutoffs", &["j", "r_j", "constant"]);
    coef_params(&mut r, &c);
    r.param("n", n as u64).param("r", rad).param("nu", nu).param("J", jm as u64);
    for (j, k) in seq.constants.iter().enumerate() {
        r.row(vec![(j + 1) as f64, seq.radii[j], *k]);
    }
    r.metric("max_constant", seq.max_constant());
    r.flag("bounded_by_3", seq.max_constant() <= 3.0);
    Ok(r)
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct SobolevFailureArgs {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<u32>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps: Option<Vec<f64>>,
}

pub fn sobolev_failure(a: &SobolevFailureArgs) -> Out {
    let (m, k, s, rho) = (a.m.unwrap_or(3.0), a.k.unwrap_or(1), a.sigma.unwrap_or(1.5), a.rho.unwrap_or(0.3));
    let eps = a.eps.clone().unwrap_or_else(|| vec![0.1, 0.05, 0.025, 0.0125]);
    let rep = failure_probe(m, &Geometry::new(k, s)?, rho, &eps)?;
    let mut r = Report::new("sobolev-failure", &["eps", "ln_lhs", "rhs", "ln_ratio"]);
    r.param("m", m).param("k", k).param("sigma", s).param("rho", rho).param("eps", eps);
    for p in &rep.probes {
        r.row(vec![p.eps, p.ln_lhs, p.rhs, p.ln_ratio]);
    }
    r.metric("exponent", rep.exponent).metric("growth", rep.growth());
    r.flag("diverges", rep.diverges);
    r.flag("increasing", rep.probes.windows(2).all(|w| w[1].ln_ratio > w[0].ln_ratio));
    Ok(r)
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct SobolevRatioArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub coef: CoefArgs,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c_m: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
}

pub fn sobolev_ratio(a: &SobolevRatioArgs) -> Out {
    let c = a.coef.build("degenerate")?;
    let (m, cm, rho, n) = (a.m.unwrap_or(3.0), a.c_m.unwrap_or(1.0), a.rho.unwrap_or(0.2), a.n.unwrap_or(256));
    let setup = SobolevSetup { coef: c, m, c_m: cm };
    let field = cc_distance_field(&c, &ball_grid(&c, rho, n)?, (0.0, 0.0), Stencil::Sixteen)?;
    // style: 0 radial bump, 1 tensor bump, 2 extremal (amplitude column holds ε)
    let styles = [
        (0.0, 1.0, TestStyle::MetricRadialBump { amplitude: 1.0 }),
        (0.0, 1e8, TestStyle::MetricRadialBump { amplitude: 1e8 }),
        (1.0, 1.0, TestStyle::TensorBump { amplitude: 1.0 }),
        (1.0, 1e8, TestStyle::TensorBump { amplitude: 1e8 }),
        (2.0, rho / 4.0, TestStyle::Extremal { eps: rho / 4.0 }),
    ];
    let mut r = Report::new("sobolev-ratio", &["style", "parameter", "ratio"]);
    coef_params(&mut r, &c);
    r.param("m", m).param("c_m", cm).param("rho", rho).param("n", n as u64);
    let mut sup = 0.0f64;
    for (code, par, st) in styles {
        let w = test_family(&field, rho, st)?;
        let p = quotient(&setup, &field, rho, &w)?;
        sup = sup.max(p.ratio);
        r.row(vec![code, par, p.ratio]);
    }
    r.metric("sup_ratio", sup).metric("phi_rho", setup.superradius(rho)?);
    r.flag("finite", sup.is_finite());
    Ok(r)
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct SolverArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub coef: CoefArgs,
    /// Cells in x (the y count is n+1) on [−½,½]².
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<f64>,
    /// Λ/λ of the layered coefficient.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub contrast: Option<f64>,
    /// Constant φ₀.
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rhs_c: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nu: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[arg(long = "J")]
    #[serde(rename = "J", skip_serializing_if = "Option::is_none")]
    pub j: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
}

pub fn solver_run(a: &SolverArgs) -> Out {
    let c = a.coef.build("isotropic")?;
    let n = a.n.unwrap_or(64);
    let m = a.m.unwrap_or(3.0);
    let contrast = a.contrast.unwrap_or(2.0);
    let rc = a.rhs_c.unwrap_or(1.0);
    let r_default = if matches!(c, Coefficient::Degenerate { .. }) { 0.25 } else { 0.4 };
    let (rad, beta, jm, tol) = (a.r.unwrap_or(r_default), a.beta.unwrap_or(1.0), a.j.unwrap_or(2), a.tol.unwrap_or(1e-10));
    let grid = Grid2D::new(0.5, 0.5, n + n % 2, n + 1 - n % 2)?;
    let coeff = CoeffField::layered(&c, grid, (0.0, 0.0), contrast, 0.15)?;
    let z = GridFunction::new(vec![0.0; grid.len()]);
    let rhs = RhsPair::new(GridFunction::new(vec![rc; grid.len()]), z.clone(), z).with_admissible_norm(&coeff, m)?;
    let bc = coeff.sample(|x, y| 1.0 + x + y * y);
    let sol = assemble_and_solve(&coeff, &rhs, &bc, tol)?;
    let field = cc_distance_field(&c, &grid, (0.0, 0.0), Stencil::Sixteen)?;
    // default ν sits just above the measured ν₀(r)
    let nu = match a.nu {
        Some(v) => v,
        None => (ball_profile(&field, &[rad])?.nu0[0] + 0.02).clamp(0.75, 0.98),
    };

    let mut r = Report::new("solver-run", &["x", "y", "u"]);
    coef_params(&mut r, &c);
    r.param("n", n as u64).param("m", m).param("contrast", contrast).param("rhs_c", rc);
    r.param("r", rad).param("nu", nu).param("beta", beta).param("J", jm as u64).param("tol", tol);
    for k in 0..grid.len() {
        let (i, j) = grid.ij(k);
        r.row(vec![coeff.x(i), coeff.y(j), sol.u.values[k]]);
    }
    for (key, v) in &sol.diagnostics {
        r.metric(&format!("solve.{key}"), *v);
    }
    r.metric("phi_star", rhs.phi_star);

    let mp = max_principle_check(&coeff, &sol.u, rhs.phi_star)?;
    r.metric("max_principle.excess", mp.excess);
    if let Some(ce) = mp.c_emp {
        r.metric("max_principle.c_emp", ce);
    }
    r.flag("max_principle", mp.excess <= 1e-8);
    let mm = mmatrix_check(&coeff)?;
    r.flag("m_matrix", mm.nonpositive_offdiag && mm.weakly_dominant);

    let kind = if rc <= 0.0 { SolutionKind::Super } else { SolutionKind::Sub };
    let cert = Certified::new(&coeff, &rhs, &sol.u, kind, 1e-8)?;
    let id = IterSpec::new(m, 0, 1.0, Variant::Phi)?;
    r.metric("caccioppoli.constant", caccioppoli_envelope(&cert, &tent_family(&grid), &id)?);
    let lb = local_bound_check(&cert, &field, &BallParams { r: rad, nu, beta, m, c_m: 1.0 })?;
    r.metric("local_bound.ratio", lb.ratio).metric("local_bound.comparator_scale", lb.scale);
    r.metric("local_bound.implied_constant", lb.implied_constant).metric("local_bound.nu0", lb.nu0);
    let ch = moser_chain_check(&cert, &field, &ChainParams { m, beta, r: rad, nu, j_max: jm }, CutoffOptions::default())?;
    r.metric("moser.k_min", ch.k_min).metric("moser.ln_a_tilde", ch.ln_a_tilde);
    r.flag("converged", sol.residual <= tol);
    Ok(r)
}
