//! Nehari-manifold machinery: membership in the nodal Nehari set and its
//! subsets, ray and nodal projections, constrained minimization of the
//! energy over the first subset, and the critical curves in the
//! `(α, β)`-plane.

mod curves;

pub use curves::*;

use serde::{Deserialize, Serialize};

use crate::discrete::{
    cell_diff, evaluate, grad_pow_raw, lump_pow_raw, phi_r, DiscreteFunction, EnergyChain,
    FunctionalContext, FunctionalReport, Mesh, Tridiag,
};
use crate::error::{Error, Part, Result};
use crate::solver::{lbfgs, newton_critical, LbfgsOpts};
use crate::spectral1d::eigenfunction;

/// Default relative tolerance for the Nehari constraints.
pub const TOL_N: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Subset {
    M1,
    M2,
    M3,
    NotInM,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NehariClassification {
    pub in_m: bool,
    pub subset: Subset,
    pub h_plus: f64,
    pub h_minus: f64,
    pub g_plus: f64,
    pub g_minus: f64,
}

/// Terms of `H_α` and `G_β` for one part, plus the scale used for tolerances.
#[derive(Debug, Clone, Copy)]
struct PartTerms {
    h: f64,
    g: f64,
    scale: f64,
}

fn part_terms(w: &[f64], h: f64, ctx: &FunctionalContext) -> PartTerms {
    let (np, mp) = (grad_pow_raw(w, h, ctx.p), lump_pow_raw(w, h, ctx.p));
    let (nq, mq) = (grad_pow_raw(w, h, ctx.q), lump_pow_raw(w, h, ctx.q));
    PartTerms {
        h: np - ctx.alpha * mp,
        g: nq - ctx.beta * mq,
        scale: np + ctx.alpha.abs() * mp + nq + ctx.beta.abs() * mq,
    }
}

/// Nodal parts `(u⁺, u⁻)` as raw vectors.
fn split(u: &[f64]) -> (Vec<f64>, Vec<f64>) {
    (
        u.iter().map(|&x| x.max(0.0)).collect(),
        u.iter().map(|&x| (-x).max(0.0)).collect(),
    )
}

/// Classifies `u` with the constraint tolerance `tol` relative to each part's
/// scale.
pub fn classify(u: &DiscreteFunction, ctx: &FunctionalContext, tol: f64) -> NehariClassification {
    let h = u.mesh().h();
    let (up, um) = split(u.values());
    let a = part_terms(&up, h, ctx);
    let b = part_terms(&um, h, ctx);
    let nonzero = a.scale > 0.0 && b.scale > 0.0;
    let in_m = nonzero && (a.h + a.g).abs() <= tol * a.scale && (b.h + b.g).abs() <= tol * b.scale;
    let subset = if !in_m {
        Subset::NotInM
    } else if a.h < 0.0 && b.h < 0.0 {
        Subset::M1
    } else if a.h > 0.0 && b.h > 0.0 {
        Subset::M2
    } else {
        Subset::M3
    };
    NehariClassification {
        in_m,
        subset,
        h_plus: a.h,
        h_minus: b.h,
        g_plus: a.g,
        g_minus: b.g,
    }
}

fn ray_factor(hv: f64, gv: f64, ctx: &FunctionalContext) -> f64 {
    (-gv / hv).powf(1.0 / (ctx.p - ctx.q))
}

/// Scales `u` to the unique critical point of `t ↦ E(tu)` on `t > 0`.
pub fn project_ray(
    u: &DiscreteFunction,
    ctx: &FunctionalContext,
) -> Result<(f64, DiscreteFunction)> {
    let (hv, gv) = (ctx.h_alpha(u), ctx.g_beta(u));
    if !(hv * gv < 0.0) {
        return Err(Error::Sign { h: hv, g: gv });
    }
    let t = ray_factor(hv, gv, ctx);
    Ok((t, u.scaled(t)))
}

/// `t⁺u⁺ − t⁻u⁻` with both parts on the Nehari manifold; requires
/// `H_α(u^±) < 0 < G_β(u^±)`.
pub fn project_nodal(u: &DiscreteFunction, ctx: &FunctionalContext) -> Result<DiscreteFunction> {
    let h = u.mesh().h();
    let (up, um) = split(u.values());
    let mut factors = [0.0; 2];
    for (k, (w, part)) in [(&up, Part::Plus), (&um, Part::Minus)]
        .into_iter()
        .enumerate()
    {
        let t = part_terms(w, h, ctx);
        if t.scale == 0.0 {
            return Err(Error::PartSign {
                part,
                which: "nonzero",
                h: 0.0,
                g: 0.0,
            });
        }
        if !(t.h < 0.0) {
            return Err(Error::PartSign {
                part,
                which: "H < 0",
                h: t.h,
                g: t.g,
            });
        }
        if !(t.g > 0.0) {
            return Err(Error::PartSign {
                part,
                which: "G > 0",
                h: t.h,
                g: t.g,
            });
        }
        factors[k] = ray_factor(t.h, t.g, ctx);
    }
    let v = u
        .values()
        .iter()
        .map(|&x| {
            if x > 0.0 {
                factors[0] * x
            } else {
                factors[1] * x
            }
        })
        .collect();
    Ok(DiscreteFunction::from_vec(u.mesh(), v))
}

/// Value and gradient of `Σ|d_j|^r h` and `Σ|w_i|^r h` with respect to `w`.
pub(crate) fn pow_terms(w: &[f64], h: f64, r: f64) -> (f64, Vec<f64>, f64, Vec<f64>) {
    let n = w.len();
    let flux: Vec<f64> = (0..=n).map(|j| phi_r(cell_diff(w, j, h), r)).collect();
    let dn = (0..n).map(|i| r * (flux[i] - flux[i + 1])).collect();
    let dm = w.iter().map(|&x| r * phi_r(x, r) * h).collect();
    (grad_pow_raw(w, h, r), dn, lump_pow_raw(w, h, r), dm)
}

/// `max_t E(tw)` for a part with `H < 0 < G`, i.e.
/// `((p-q)/pq) G^{p/(p-q)} (-H)^{-q/(p-q)}`, and its gradient in `w`.
fn reduced_part(w: &[f64], h: f64, ctx: &FunctionalContext) -> Option<(f64, Vec<f64>)> {
    let (np, dnp, mp, dmp) = pow_terms(w, h, ctx.p);
    let (nq, dnq, mq, dmq) = pow_terms(w, h, ctx.q);
    let hv = np - ctx.alpha * mp;
    let gv = nq - ctx.beta * mq;
    if !(hv < 0.0 && gv > 0.0) {
        return None;
    }
    let a = ctx.p / (ctx.p - ctx.q);
    let b = ctx.q / (ctx.p - ctx.q);
    let val = ctx.nehari_factor() * gv.powf(a) * (-hv).powf(-b);
    let grad = (0..w.len())
        .map(|i| {
            let dh = dnp[i] - ctx.alpha * dmp[i];
            let dg = dnq[i] - ctx.beta * dmq[i];
            val * (a * dg / gv - b * dh / hv)
        })
        .collect();
    Some((val, grad))
}

/// Energy of the nodal projection of `u` as a function of `u`; scale
/// invariant in each part separately.
fn projected_energy(u: &[f64], h: f64, ctx: &FunctionalContext) -> Option<(f64, Vec<f64>)> {
    let (up, um) = split(u);
    let (ep, gp) = reduced_part(&up, h, ctx)?;
    let (em, gm) = reduced_part(&um, h, ctx)?;
    let g = u
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            if x > 0.0 {
                gp[i]
            } else if x < 0.0 {
                -gm[i]
            } else {
                0.0
            }
        })
        .collect();
    Some((ep + em, g))
}

/// Applies the inverse of the discrete Dirichlet Laplacian.
pub(crate) fn stiffness_solve(g: &[f64], h: f64) -> Vec<f64> {
    let n = g.len();
    let t = Tridiag {
        diag: vec![2.0 / h; n],
        off: vec![-1.0 / h; n.saturating_sub(1)],
    };
    t.solve(g).unwrap_or_else(|| g.to_vec())
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct M1Opts {
    /// Acceptance bound on the weak-form residual.
    pub tol_resid: f64,
    /// Iteration cap of the projected descent.
    pub max_iter: usize,
    /// Relative Nehari tolerance for the final classification; `None` uses
    /// `10 h`, the size of the splitting defect at a critical point.
    pub nehari_tol: Option<f64>,
}

impl Default for M1Opts {
    fn default() -> Self {
        M1Opts {
            tol_resid: 1e-6,
            max_iter: 10_000,
            nehari_tol: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct M1Report {
    #[serde(flatten)]
    pub functional: FunctionalReport,
    pub classification: NehariClassification,
    /// `|E − ((p−q)/pq) G|`
    pub energy_identity_defect: f64,
    pub seed_index: usize,
    pub descent_iterations: usize,
}

/// Sign-changing seeds built from the first two `p`-eigenfunctions.
pub fn default_seeds(mesh: Mesh, p: f64) -> Result<Vec<DiscreteFunction>> {
    let e1 = eigenfunction(1, p, mesh.t_len)?;
    let e2 = eigenfunction(2, p, mesh.t_len)?;
    let nodes: Vec<f64> = mesh.nodes().collect();
    let mix = |a: f64, b: f64, c: f64| {
        let v = nodes
            .iter()
            .map(|&t| {
                a * e2.phi(t)
                    + b * e1.phi(t)
                    + c * (2.0 * std::f64::consts::PI * t / mesh.t_len).sin()
            })
            .collect();
        DiscreteFunction::from_vec(mesh, v)
    };
    Ok(vec![
        mix(1.0, 0.0, 0.0),
        mix(1.0, 0.2, 0.0),
        mix(1.0, -0.2, 0.0),
        mix(0.0, 0.0, 1.0),
        mix(0.5, 0.1, 0.5),
    ])
}

/// Finds a seed admitting a nodal projection, blending toward the second
/// eigenfunction shape when the raw seed does not qualify.
fn repair_seed(
    u: &DiscreteFunction,
    anchor: &DiscreteFunction,
    ctx: &FunctionalContext,
) -> Option<DiscreteFunction> {
    let su = u.sup_norm().max(1e-300);
    let sa = anchor.sup_norm().max(1e-300);
    for s in [0.0, 0.25, 0.5, 0.75, 1.0] {
        let v: Vec<f64> = u
            .values()
            .iter()
            .zip(anchor.values())
            .map(|(a, b)| (1.0 - s) * a / su + s * b / sa)
            .collect();
        let w = DiscreteFunction::from_vec(u.mesh(), v);
        if let Ok(w) = project_nodal(&w, ctx) {
            return Some(w);
        }
    }
    None
}

/// Minimizes `E_{α,β}` over the discrete first nodal Nehari subset.
///
/// The descent runs on the energy of the nodal projection, which is exactly
/// homogeneous under the nodal split; its output is then refined by Newton's
/// method on `∇E = 0`, which removes the splitting defect at the sign-change
/// cell.
pub fn minimize_m1(
    ctx: &FunctionalContext,
    seeds: &[DiscreteFunction],
    opts: &M1Opts,
) -> Result<(DiscreteFunction, M1Report)> {
    let Some(first) = seeds.first() else {
        return Err(Error::NoFeasibleSeed);
    };
    let mesh = first.mesh();
    let h = mesh.h();
    let anchor = DiscreteFunction::from_fn(mesh, |t| {
        (2.0 * std::f64::consts::PI * t / mesh.t_len).sin()
    });
    let anchor = default_seeds(mesh, ctx.p)
        .map(|s| s[0].clone())
        .unwrap_or(anchor);
    let mut starts: Vec<(usize, DiscreteFunction)> = seeds
        .iter()
        .enumerate()
        .filter_map(|(i, s)| repair_seed(s, &anchor, ctx).map(|w| (i, w)))
        .collect();
    if starts.is_empty() {
        return Err(Error::NoFeasibleSeed);
    }
    let lopts = LbfgsOpts {
        memory: 10,
        max_iter: opts.max_iter,
        grad_tol: 1e-12,
        ftol: 1e-15,
    };
    let mut runs: Vec<(f64, usize, usize, Vec<f64>)> = starts
        .drain(..)
        .map(|(i, w)| {
            let scale = w.sup_norm();
            let x0: Vec<f64> = w.values().iter().map(|x| x / scale).collect();
            let mut fg = |x: &[f64]| projected_energy(x, h, ctx);
            let out = lbfgs(&mut fg, &x0, &|g| stiffness_solve(g, h), lopts);
            (out.f, i, out.iterations, out.x)
        })
        .collect();
    runs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let tol_n = opts.nehari_tol.unwrap_or(10.0 * h);
    let mut best: Option<DiscreteFunction> = None;
    for (_, seed_index, iters, x) in runs {
        let Ok(w) = project_nodal(&DiscreteFunction::from_vec(mesh, x), ctx) else {
            continue;
        };
        let chain = EnergyChain(*ctx);
        let (v, _) = newton_critical(&chain, w.values(), h, 0.0, 60);
        let u = DiscreteFunction::from_vec(mesh, v);
        let functional = evaluate(&u, ctx);
        let classification = classify(&u, ctx, tol_n);
        let defect = (functional.e - ctx.nehari_factor() * functional.g).abs();
        let ok = functional.residual <= opts.tol_resid
            && classification.subset == Subset::M1
            && functional.e > 0.0
            && classification.g_plus > 0.0
            && classification.g_minus > 0.0;
        if ok {
            let report = M1Report {
                functional,
                classification,
                energy_identity_defect: defect,
                seed_index,
                descent_iterations: iters,
            };
            return Ok((u, report));
        }
        if best.is_none() {
            best = Some(u);
        }
    }
    let detail = match &best {
        Some(u) => {
            let r = evaluate(u, ctx);
            format!(
                "no seed reached an M1 critical point (best residual {:e}, E = {:e})",
                r.residual, r.e
            )
        }
        None => "projection lost after descent".into(),
    };
    Err(Error::not_converged(detail, best))
}
