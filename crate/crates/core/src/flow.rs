//! Descending flow for the energy
//! `J(u) = (1/p)‖∇u‖_p^p + (1/q)‖∇u‖_q^q − Σ F(x_i, u_i) h`
//! built on the fixed-point map `B_λ = T_λ^{-1}(h(·,u) + λψ(u))`, and the
//! three-solution search that produces sign-changing solutions with
//! negative energy.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::discrete::{
    chain_gradient, chain_value, dphi_r, evaluate, first_eigenpair, fmt17, phi_r, pw,
    residual_norm, sup_norm, ChainFunctional, DiscreteFunction, EnergyChain, FunctionalContext,
    FunctionalReport, Mesh, Tridiag, NODAL_EPS,
};
use crate::error::{Error, Result};
use crate::shooting;
use crate::solver::{minimize_convex, newton_critical};
use crate::spectral1d::eigenfunction;

/// Right-hand side `h(x_i, s)` of `−Δ_p u − Δ_q u = h(x, u)`, indexed by
/// interior node.
pub trait Nonlinearity: Send + Sync {
    fn value(&self, i: usize, s: f64) -> f64;
    /// `F(x_i, s) = ∫_0^s h(x_i, σ) dσ`
    fn primitive(&self, i: usize, s: f64) -> f64;
    /// `∂_s h(x_i, s)`, regularized by `eps` where singular.
    fn slope(&self, i: usize, s: f64, eps: f64) -> f64;
    /// Constant with `h(x,s)s + λ₀(|s|^q + |s|^p) ≥ 0`.
    fn lambda0(&self) -> f64;
    /// Constant `C` in `|h(x,s)| ≤ C(1 + |s|^{p−1})`.
    fn growth_c(&self) -> f64;
}

/// `h(s) = α|s|^{p−2}s + β|s|^{q−2}s`, the untruncated problem.
#[derive(Debug, Clone, Copy)]
pub struct Power {
    pub ctx: FunctionalContext,
}

impl Nonlinearity for Power {
    fn value(&self, _i: usize, s: f64) -> f64 {
        self.ctx.alpha * phi_r(s, self.ctx.p) + self.ctx.beta * phi_r(s, self.ctx.q)
    }
    fn primitive(&self, _i: usize, s: f64) -> f64 {
        let c = &self.ctx;
        c.alpha * pw(s, c.p) / c.p + c.beta * pw(s, c.q) / c.q
    }
    fn slope(&self, _i: usize, s: f64, eps: f64) -> f64 {
        self.ctx.alpha * dphi_r(s, self.ctx.p, eps) + self.ctx.beta * dphi_r(s, self.ctx.q, eps)
    }
    fn lambda0(&self) -> f64 {
        self.ctx.alpha.abs().max(self.ctx.beta.abs())
    }
    fn growth_c(&self) -> f64 {
        self.ctx.alpha.abs() + self.ctx.beta.abs()
    }
}

/// The power nonlinearity with its argument clipped to `[−v_i, v_i]`.
#[derive(Debug, Clone)]
pub struct Truncated {
    pub ctx: FunctionalContext,
    pub v: Vec<f64>,
}

impl Truncated {
    fn clip(&self, i: usize, s: f64) -> f64 {
        s.clamp(-self.v[i], self.v[i])
    }
}

impl Nonlinearity for Truncated {
    fn value(&self, i: usize, s: f64) -> f64 {
        Power { ctx: self.ctx }.value(i, self.clip(i, s))
    }
    fn primitive(&self, i: usize, s: f64) -> f64 {
        let c = self.clip(i, s);
        let pow = Power { ctx: self.ctx };
        pow.primitive(i, c) + pow.value(i, c) * (s - c)
    }
    fn slope(&self, i: usize, s: f64, eps: f64) -> f64 {
        if s.abs() > self.v[i] {
            0.0
        } else {
            Power { ctx: self.ctx }.slope(i, s, eps)
        }
    }
    fn lambda0(&self) -> f64 {
        self.ctx.alpha.abs().max(self.ctx.beta.abs())
    }
    fn growth_c(&self) -> f64 {
        let m = sup_norm(&self.v);
        self.ctx.alpha.abs() * m.powf(self.ctx.p - 1.0)
            + self.ctx.beta.abs() * m.powf(self.ctx.q - 1.0)
    }
}

/// Checks `h(x_i,s)s + λ₀(|s|^q + |s|^p) ≥ 0` on `samples` points of
/// `[−s_max, s_max]` at every node.
pub fn check_a1(
    nl: &dyn Nonlinearity,
    nodes: usize,
    p: f64,
    q: f64,
    s_max: f64,
    samples: usize,
) -> bool {
    let l0 = nl.lambda0();
    (0..nodes).all(|i| {
        (0..=samples).all(|k| {
            let s = s_max * (2.0 * k as f64 / samples as f64 - 1.0);
            let lhs = nl.value(i, s) * s + l0 * (pw(s, q) + pw(s, p));
            lhs >= -1e-12 * (l0 * (pw(s, q) + pw(s, p))).max(1e-300)
        })
    })
}

/// `J` as a chain functional.
pub struct JChain<'a> {
    pub p: f64,
    pub q: f64,
    pub nl: &'a dyn Nonlinearity,
}

impl ChainFunctional for JChain<'_> {
    fn edge(&self, d: f64) -> (f64, f64) {
        (
            pw(d, self.p) / self.p + pw(d, self.q) / self.q,
            phi_r(d, self.p) + phi_r(d, self.q),
        )
    }
    fn edge2(&self, d: f64, eps: f64) -> f64 {
        dphi_r(d, self.p, eps) + dphi_r(d, self.q, eps)
    }
    fn node(&self, i: usize, u: f64) -> (f64, f64) {
        (-self.nl.primitive(i, u), -self.nl.value(i, u))
    }
    fn node2(&self, i: usize, u: f64, eps: f64) -> f64 {
        -self.nl.slope(i, u, eps)
    }
}

/// `Φ(u) = (1/p)‖∇u‖_p^p + (1/q)‖∇u‖_q^q + λ((1/p)‖u‖_p^p + (1/q)‖u‖_q^q) − Σ f_i u_i h`.
struct TChain<'a> {
    p: f64,
    q: f64,
    lambda: f64,
    f: &'a [f64],
}

impl ChainFunctional for TChain<'_> {
    fn edge(&self, d: f64) -> (f64, f64) {
        (
            pw(d, self.p) / self.p + pw(d, self.q) / self.q,
            phi_r(d, self.p) + phi_r(d, self.q),
        )
    }
    fn edge2(&self, d: f64, eps: f64) -> f64 {
        dphi_r(d, self.p, eps) + dphi_r(d, self.q, eps)
    }
    fn node(&self, i: usize, u: f64) -> (f64, f64) {
        let (v, g) = self.edge(u);
        (self.lambda * v - self.f[i] * u, self.lambda * g - self.f[i])
    }
    fn node2(&self, _i: usize, u: f64, eps: f64) -> f64 {
        self.lambda * self.edge2(u, eps)
    }
}

fn psi(s: f64, p: f64, q: f64) -> f64 {
    phi_r(s, p) + phi_r(s, q)
}

/// Inverts `T_λ` on raw vectors, starting from `warm` when given.
///
/// Newton on the primal functional first. For `q < 2` the curvature of
/// `|·|^q` is unbounded at zero and the primal iteration can stall; the dual
/// problem in the cell fluxes is then solved instead and briefly polished.
/// Its solution is accepted even when the primal gradient stays above
/// tolerance, since for `q` near 1 rounding in `u` alone moves `|d|^{q−2}d`
/// by more than the tolerance.
fn solve_t_raw(
    f: &[f64],
    lambda: f64,
    p: f64,
    q: f64,
    h: f64,
    warm: Option<&[f64]>,
) -> Result<Vec<f64>> {
    let fmax = sup_norm(f);
    if fmax == 0.0 {
        return Ok(vec![0.0; f.len()]);
    }
    let chain = TChain { p, q, lambda, f };
    let tol = 1e-10 * h * fmax;
    let primal_start = match warm {
        Some(w) if w.iter().all(|x| x.is_finite()) => Some(w.to_vec()),
        _ if q < 2.0 => None,
        _ => Some(f.iter().map(|&x| psi_inverse(x / lambda, p, q)).collect()),
    };
    if let Some(start) = primal_start {
        match minimize_convex(&chain, &start, h, tol, 500) {
            Ok(out) => return Ok(out.u),
            Err(e) if q >= 2.0 => return Err(e),
            Err(_) => {}
        }
    }
    let (u, consistent) = solve_t_dual(f, lambda, p, q, h);
    match minimize_convex(&chain, &u, h, tol, 30) {
        Ok(out) => Ok(out.u),
        Err(_) if consistent => Ok(u),
        Err(e) => Err(e),
    }
}

/// `(Ψ*(σ), (Ψ*)'(σ), (Ψ*)''(σ))` for `Ψ(x) = |x|^p/p + |x|^q/q`.
fn psi_conj(s: f64, p: f64, q: f64) -> (f64, f64, f64) {
    let x = psi_inverse(s, p, q);
    let val = s * x - pw(x, p) / p - pw(x, q) / q;
    let curv = if x == 0.0 {
        0.0
    } else {
        1.0 / ((p - 1.0) * pw(x, p - 2.0) + (q - 1.0) * pw(x, q - 2.0))
    };
    (val, x, curv)
}

/// Damped Newton on the dual
/// `D(σ) = h Σ_j Ψ*(σ_j) + hλ Σ_i Ψ*(τ_i/λ)`, `τ_i = f_i + (σ_{i+1} − σ_i)/h`,
/// whose Hessian stays bounded where the primal one blows up. Returns the
/// recovered `u_i = ψ^{-1}(τ_i/λ)` and whether the flux consistency
/// `h ψ^{-1}(σ_j) = u_j − u_{j−1}` holds to `1e-12 ‖u‖_∞`.
fn solve_t_dual(f: &[f64], lambda: f64, p: f64, q: f64, h: f64) -> (Vec<f64>, bool) {
    let n = f.len();
    let eval = |sig: &[f64]| {
        let mut val = 0.0;
        let mut u = vec![0.0; n];
        let mut a = vec![0.0; n];
        for i in 0..n {
            let tau = f[i] + (sig[i + 1] - sig[i]) / h;
            let (v, x, c) = psi_conj(tau / lambda, p, q);
            val += h * lambda * v;
            u[i] = x;
            a[i] = c / lambda;
        }
        let mut g = vec![0.0; n + 1];
        let mut b = vec![0.0; n + 1];
        for j in 0..=n {
            let (v, x, c) = psi_conj(sig[j], p, q);
            val += h * v;
            let right = if j < n { u[j] } else { 0.0 };
            let left = if j > 0 { u[j - 1] } else { 0.0 };
            g[j] = h * x - (right - left);
            b[j] = c;
        }
        (val, g, u, a, b)
    };
    let mut sig = vec![0.0; n + 1];
    let (mut val, mut g, mut u, mut a, mut b) = eval(&sig);
    let mut best_g = f64::INFINITY;
    let mut stale = 0;
    for _ in 0..500 {
        let diag: Vec<f64> = (0..=n)
            .map(|j| {
                let al = if j > 0 { a[j - 1] } else { 0.0 };
                let ar = if j < n { a[j] } else { 0.0 };
                h * b[j] + (al + ar) / h
            })
            .collect();
        let dmax = diag.iter().fold(0.0f64, |m, x| m.max(*x));
        let hess = Tridiag {
            diag: diag.iter().map(|d| d + 1e-13 * dmax).collect(),
            off: (0..n).map(|j| -a[j] / h).collect(),
        };
        let Some(step) = hess.solve(&g) else { break };
        let gd: f64 = -g.iter().zip(&step).map(|(x, y)| x * y).sum::<f64>();
        if !(gd < 0.0) {
            break;
        }
        let mut t = 1.0;
        let mut moved = false;
        let val_before = val;
        while t > 1e-10 {
            let cand: Vec<f64> = sig.iter().zip(&step).map(|(s, d)| s - t * d).collect();
            let next = eval(&cand);
            let slack = 1e-14 * val.abs();
            if next.0 <= val + 1e-4 * t * gd
                || (next.0 <= val + slack && sup_norm(&next.1) < sup_norm(&g))
            {
                sig = cand;
                (val, g, u, a, b) = next;
                moved = true;
                break;
            }
            t *= 0.5;
        }
        let gn = sup_norm(&g);
        if gn < 0.5 * best_g || val_before - val > 1e-10 * val.abs() {
            best_g = best_g.min(gn);
            stale = 0;
        } else {
            stale += 1;
        }
        if !moved || stale >= 5 || gn <= 4.0 * f64::EPSILON * sup_norm(&u) {
            break;
        }
    }
    let consistent = sup_norm(&g) <= 1e-12 * sup_norm(&u);
    (u, consistent)
}

/// Solution of `ψ(u) = s` for the increasing map `ψ(u) = |u|^{p−2}u + |u|^{q−2}u`,
/// by Newton in `y = ln|u|` on the convex `ln(e^{(p−1)y} + e^{(q−1)y}) = ln|s|`.
pub(crate) fn psi_inverse(s: f64, p: f64, q: f64) -> f64 {
    if s == 0.0 {
        return 0.0;
    }
    let la = s.abs().ln();
    // Started above the root, Newton on a convex increasing map descends monotonically.
    let mut y = (la / (p - 1.0)).min(la / (q - 1.0));
    for _ in 0..100 {
        let (ap, aq) = ((p - 1.0) * y, (q - 1.0) * y);
        let m = ap.max(aq);
        let (ep, eq) = ((ap - m).exp(), (aq - m).exp());
        let g = m + (ep + eq).ln() - la;
        let dg = ((p - 1.0) * ep + (q - 1.0) * eq) / (ep + eq);
        let dy = g / dg;
        y -= dy;
        if dy.abs() <= 4.0 * f64::EPSILON * y.abs().max(1.0) {
            break;
        }
    }
    y.exp().copysign(s)
}

/// The unique `u` with `T_λ(u) = f` in the discrete weak sense.
pub fn solve_t_lambda(
    f: &DiscreteFunction,
    lambda: f64,
    ctx: &FunctionalContext,
) -> Result<DiscreteFunction> {
    if !(lambda > 0.0) {
        return Err(Error::Domain(format!("lambda = {lambda} must be positive")));
    }
    let mesh = f.mesh();
    let u = solve_t_raw(f.values(), lambda, ctx.p, ctx.q, mesh.h(), None)?;
    Ok(DiscreteFunction::from_vec(mesh, u))
}

/// Discrete weak form of `T_λ(u)` divided by `h`, i.e. the nodal density
/// that `solve_t_lambda` matches to `f`.
pub fn apply_t_lambda(
    u: &DiscreteFunction,
    lambda: f64,
    ctx: &FunctionalContext,
) -> DiscreteFunction {
    let mesh = u.mesh();
    let h = mesh.h();
    let zero = vec![0.0; mesh.n];
    let chain = TChain {
        p: ctx.p,
        q: ctx.q,
        lambda,
        f: &zero,
    };
    let g = chain_gradient(&chain, u.values(), h);
    DiscreteFunction::from_vec(mesh, g.into_iter().map(|x| x / h).collect())
}

fn check_lambda(nl: &dyn Nonlinearity, lambda: f64) -> Result<()> {
    if lambda > nl.lambda0() {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "lambda = {lambda} must exceed lambda0 = {}",
            nl.lambda0()
        )))
    }
}

fn b_raw(
    u: &[f64],
    nl: &dyn Nonlinearity,
    lambda: f64,
    p: f64,
    q: f64,
    h: f64,
) -> Result<Vec<f64>> {
    let rhs: Vec<f64> = u
        .iter()
        .enumerate()
        .map(|(i, &s)| nl.value(i, s) + lambda * psi(s, p, q))
        .collect();
    solve_t_raw(&rhs, lambda, p, q, h, Some(u))
}

/// `B_λ(u) = T_λ^{-1}(h(·,u) + λψ(u))`.
pub fn b_lambda(
    u: &DiscreteFunction,
    nl: &dyn Nonlinearity,
    lambda: f64,
    ctx: &FunctionalContext,
) -> Result<DiscreteFunction> {
    check_lambda(nl, lambda)?;
    let mesh = u.mesh();
    let v = b_raw(u.values(), nl, lambda, ctx.p, ctx.q, mesh.h())?;
    Ok(DiscreteFunction::from_vec(mesh, v))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Cone {
    Pos,
    Neg,
    Mixed,
}

impl Cone {
    pub fn of(u: &[f64]) -> Cone {
        if u.iter().all(|&x| x >= 0.0) {
            Cone::Pos
        } else if u.iter().all(|&x| x <= 0.0) {
            Cone::Neg
        } else {
            Cone::Mixed
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Cone::Pos => "POS",
            Cone::Neg => "NEG",
            Cone::Mixed => "MIXED",
        }
    }
}

#[derive(Debug, Clone)]
pub struct FlowState {
    pub eta: DiscreteFunction,
    pub j_value: f64,
    pub step_count: usize,
    pub cone: Cone,
    /// `‖B_λ(η) − η‖_∞`
    pub gap: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum FlowOutcome {
    /// Fixed-point gap below tolerance.
    Converged,
    /// Trajectory entered `P` or `−P` and `stop_in_cone` was set.
    ConeReached,
    /// `‖η‖_∞` exceeded the blow-up threshold.
    BlowUp,
    /// `‖η‖_∞` fell below `1e-12` of its initial value.
    Collapsed,
    /// Step budget exhausted or the step size underflowed.
    Stalled,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub step: usize,
    #[serde(rename = "J")]
    pub j: f64,
    pub fixed_point_gap: f64,
    pub cone: Cone,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub rows: Vec<TrajectoryRow>,
    pub last: FlowState,
    /// Sign-changing state with the smallest fixed-point gap seen.
    pub best_mixed: Option<FlowState>,
    pub outcome: FlowOutcome,
}

impl Trajectory {
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "step,J,fixed_point_gap,cone")?;
        for r in &self.rows {
            writeln!(
                w,
                "{},{},{},{}",
                r.step,
                fmt17(r.j),
                fmt17(r.fixed_point_gap),
                r.cone.as_str()
            )?;
        }
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        self.write_csv(std::io::BufWriter::new(std::fs::File::create(path)?))
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DescendOpts {
    /// Stop when `‖B_λ(η) − η‖_∞ ≤ tol · ‖η‖_∞`.
    pub tol: f64,
    pub max_steps: usize,
    pub dt0: f64,
    pub blowup: f64,
    /// Stop as soon as the state lies in `P` or `−P`.
    pub stop_in_cone: bool,
}

impl Default for DescendOpts {
    fn default() -> Self {
        DescendOpts {
            tol: 1e-8,
            max_steps: 20_000,
            dt0: 0.5,
            blowup: 1e8,
            stop_in_cone: false,
        }
    }
}

/// Explicit Euler steps `η ← η + Δt(B_λ(η) − η)` with energy backtracking.
/// Always returns the trajectory; the outcome says why it stopped.
pub fn flow(
    u0: &DiscreteFunction,
    nl: &dyn Nonlinearity,
    lambda: f64,
    ctx: &FunctionalContext,
    opts: &DescendOpts,
) -> Result<Trajectory> {
    check_lambda(nl, lambda)?;
    let mesh = u0.mesh();
    let h = mesh.h();
    let chain = JChain {
        p: ctx.p,
        q: ctx.q,
        nl,
    };
    let mut eta = u0.values().to_vec();
    let norm0 = sup_norm(&eta);
    let mut jv = chain_value(&chain, &eta, h);
    let mut dt = opts.dt0;
    let mut accepts = 0;
    let mut rows = Vec::new();
    let mut best_mixed: Option<FlowState> = None;
    let state = |eta: &[f64], jv: f64, step: usize, gap: f64| FlowState {
        eta: DiscreteFunction::from_vec(mesh, eta.to_vec()),
        j_value: jv,
        step_count: step,
        cone: Cone::of(eta),
        gap,
    };
    let mut step = 0;
    loop {
        let cone = Cone::of(&eta);
        let nrm = sup_norm(&eta);
        let b = b_raw(&eta, nl, lambda, ctx.p, ctx.q, h)?;
        let dir: Vec<f64> = b.iter().zip(&eta).map(|(x, y)| x - y).collect();
        let gap = sup_norm(&dir);
        rows.push(TrajectoryRow {
            step,
            j: jv,
            fixed_point_gap: gap,
            cone,
        });
        if cone == Cone::Mixed
            && best_mixed
                .as_ref()
                .is_none_or(|s| gap / nrm < s.gap / s.eta.sup_norm())
        {
            best_mixed = Some(state(&eta, jv, step, gap));
        }
        let outcome = if nrm <= 1e-12 * norm0 {
            Some(FlowOutcome::Collapsed)
        } else if gap <= opts.tol * nrm {
            Some(FlowOutcome::Converged)
        } else if nrm > opts.blowup {
            Some(FlowOutcome::BlowUp)
        } else if opts.stop_in_cone && cone != Cone::Mixed {
            Some(FlowOutcome::ConeReached)
        } else if step >= opts.max_steps || dt < 1e-12 {
            Some(FlowOutcome::Stalled)
        } else {
            None
        };
        if let Some(outcome) = outcome {
            return Ok(Trajectory {
                rows,
                last: state(&eta, jv, step, gap),
                best_mixed,
                outcome,
            });
        }
        loop {
            let cand: Vec<f64> = eta.iter().zip(&dir).map(|(x, d)| x + dt * d).collect();
            let cj = chain_value(&chain, &cand, h);
            if cj <= jv {
                eta = cand;
                jv = cj;
                accepts += 1;
                if accepts >= 5 {
                    dt = (2.0 * dt).min(1.0);
                    accepts = 0;
                }
                break;
            }
            dt *= 0.5;
            accepts = 0;
            if dt < 1e-12 {
                break;
            }
        }
        step += 1;
    }
}

/// Runs the flow until the fixed-point gap is below tolerance; any other
/// stop is reported as `NOT_CONVERGED` carrying the last state.
pub fn descend(
    u0: &DiscreteFunction,
    nl: &dyn Nonlinearity,
    lambda: f64,
    ctx: &FunctionalContext,
    opts: &DescendOpts,
) -> Result<Trajectory> {
    let t = flow(u0, nl, lambda, ctx, opts)?;
    match t.outcome {
        FlowOutcome::Converged | FlowOutcome::Collapsed | FlowOutcome::ConeReached => Ok(t),
        other => Err(Error::not_converged(
            format!(
                "flow stopped ({other:?}) after {} steps, gap {:e}, J {:e}",
                t.last.step_count, t.last.gap, t.last.j_value
            ),
            Some(t.last.eta),
        )),
    }
}

/// Truncation at a positive super-solution `v`. The super-solution property
/// is tested against every nodal hat function.
pub fn truncate(v: &DiscreteFunction, ctx: &FunctionalContext) -> Result<Truncated> {
    let vals = v.values();
    if let Some(i) = vals.iter().position(|&x| !(x > 0.0)) {
        return Err(Error::Domain(format!(
            "truncation level must be positive, v[{i}] = {}",
            vals[i]
        )));
    }
    let h = v.mesh().h();
    let g = chain_gradient(&EnergyChain(*ctx), vals, h);
    let m = v.sup_norm();
    let scale = h
        * (ctx.alpha.abs() * m.powf(ctx.p - 1.0) + ctx.beta.abs() * m.powf(ctx.q - 1.0))
            .max(1e-300);
    let thr = -1e-8 * scale;
    let nodes: Vec<usize> = (0..g.len()).filter(|&i| g[i] < thr).collect();
    if !nodes.is_empty() {
        let worst = nodes.iter().map(|&i| g[i]).fold(f64::INFINITY, f64::min);
        return Err(Error::SuperSolutionViolation { nodes, worst });
    }
    Ok(Truncated {
        ctx: *ctx,
        v: vals.to_vec(),
    })
}

/// Relative fixed-point gap below which a flow state is handed to Newton.
const POLISH_GAP: f64 = 1e-2;

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct NegOpts {
    /// Acceptance bound on the weak-form residual.
    pub tol: f64,
    /// `λ = lambda_factor · λ₀`.
    pub lambda_factor: f64,
    pub bisection_steps: usize,
    /// Samples of the seed path used for the `max J < 0` test.
    pub path_samples: usize,
    pub descend: DescendOpts,
    /// Largest nodal count tried by the time-map search; below 2 disables
    /// the fallback.
    pub shooting_domains: usize,
}

impl Default for NegOpts {
    fn default() -> Self {
        NegOpts {
            tol: 1e-6,
            lambda_factor: 2.0,
            bisection_steps: 60,
            path_samples: 65,
            descend: DescendOpts::default(),
            shooting_domains: 16,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NegReport {
    #[serde(flatten)]
    pub functional: FunctionalReport,
    pub method: NegMethod,
    /// Why the flow stage did not deliver, when the time map did.
    pub flow_failure: Option<String>,
    /// `J(w₁) = E(w₁)` of the positive solution used as truncation level.
    pub w1_energy: Option<f64>,
    /// Whether the solution came from the truncated flow.
    pub truncated: bool,
    pub lambda: f64,
    /// Path scale `t` of the seed family.
    pub path_scale: f64,
    /// Bisection bracket `[s_lo, s_hi]` at exit.
    pub s_bracket: (f64, f64),
    pub bisection_steps: usize,
    /// `max_i (|u_i| − w₁_i)`, when truncated.
    pub sandwich_defect: Option<f64>,
    pub flow_steps: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NegMethod {
    Flow,
    Shooting,
}

/// `φ` sampled at the nodes and normalized to unit discrete `L^q` norm.
fn normalized_eigen(mesh: Mesh, k: usize, q: f64) -> Result<Vec<f64>> {
    let e = eigenfunction(k, q, mesh.t_len)?;
    let v: Vec<f64> = mesh.nodes().map(|t| e.phi(t)).collect();
    let nrm = (v.iter().map(|x| pw(*x, q)).sum::<f64>() * mesh.h()).powf(1.0 / q);
    Ok(v.into_iter().map(|x| x / nrm).collect())
}

/// Nodal solution with negative energy via the three-solution flow argument:
/// a positive solution `w₁` truncates the nonlinearity, and the flow from the
/// boundary between the basins of `w₁` and `−w₁` along a path of negative
/// energy converges to a sign-changing critical point sandwiched between
/// `−w₁` and `w₁`.
///
/// Where the positive descent is unbounded (`α` at or above the discrete
/// `λ₁(p)`), `w₁` comes from the one-dimensional time map instead. When no
/// positive solution exists there, or the flow stage fails, the time map is
/// asked for a nodal solution directly and the report says so.
pub fn find_nodal_negative(
    ctx: &FunctionalContext,
    mesh: Mesh,
    opts: &NegOpts,
) -> Result<(DiscreteFunction, NegReport)> {
    let h = mesh.h();
    let power = Power { ctx: *ctx };
    let lambda = opts.lambda_factor * power.lambda0().max(1e-3);
    let phi1 = normalized_eigen(mesh, 1, ctx.q)?;
    let energy = EnergyChain(*ctx);
    let mut flow_steps = 0;

    // (1) Positive solution from a small positive seed.
    let unbounded = ctx.alpha >= first_eigenpair(mesh, ctx.p)?.0;
    let mut eps = 0.1;
    let seed = loop {
        let s: Vec<f64> = phi1.iter().map(|x| eps * x).collect();
        if chain_value(&energy, &s, h) < 0.0 {
            break s;
        }
        eps *= 0.5;
        if eps < 1e-30 {
            return Err(Error::NoPositiveSolution(
                "E >= 0 along the first q-eigenfunction ray".into(),
            ));
        }
    };
    let mut shots = None;
    let w1 = if unbounded {
        let s = shooting::shoot(ctx, mesh, opts.shooting_domains.max(1), opts.tol);
        let w = s
            .iter()
            .filter(|(u, _)| u.values().iter().all(|&x| x > 0.0))
            .min_by(|a, b| a.1.e.total_cmp(&b.1.e))
            .map(|(u, _)| u.clone());
        shots = Some(s);
        w
    } else {
        let t1 = flow(
            &DiscreteFunction::from_vec(mesh, seed),
            &power,
            lambda,
            ctx,
            &opts.descend,
        )?;
        flow_steps += t1.last.step_count;
        match t1.outcome {
            FlowOutcome::Collapsed => {
                return Err(Error::NoPositiveSolution(
                    "descent from the positive seed collapsed to 0".into(),
                ))
            }
            FlowOutcome::BlowUp => None,
            _ => {
                let (v, _) = newton_critical(&energy, t1.last.eta.values(), h, 0.0, 60);
                let ok = residual_norm(&chain_gradient(&energy, &v, h), h) <= opts.tol
                    && v.iter().all(|&x| x > 0.0);
                if ok {
                    Some(DiscreteFunction::from_vec(mesh, v))
                } else if t1.outcome == FlowOutcome::Converged {
                    return Err(Error::NoPositiveSolution(
                        "positive limit failed to polish to a solution".into(),
                    ));
                } else {
                    None
                }
            }
        }
    };

    let flow_err = match &w1 {
        Some(w) => match flow_stage(ctx, mesh, opts, lambda, w, &mut flow_steps) {
            Ok(r) => return Ok(r),
            Err(e) => e,
        },
        None => Error::NoPositiveSolution("no positive solution to truncate at".into()),
    };
    if opts.shooting_domains < 2 {
        return Err(flow_err);
    }

    // (5) Fallback: a negative-energy nodal solution from the time map.
    let shots =
        shots.unwrap_or_else(|| shooting::shoot(ctx, mesh, opts.shooting_domains, opts.tol));
    let Some((u, functional)) = shots
        .into_iter()
        .filter(|(_, r)| r.nodal_domains >= 2 && r.e < 0.0)
        .min_by(|a, b| {
            (a.1.nodal_domains, a.1.e)
                .partial_cmp(&(b.1.nodal_domains, b.1.e))
                .unwrap()
        })
    else {
        return Err(flow_err);
    };
    let report = NegReport {
        functional,
        method: NegMethod::Shooting,
        flow_failure: Some(flow_err.to_string()),
        w1_energy: w1.as_ref().map(|w| ctx.energy(w)),
        truncated: false,
        lambda,
        path_scale: 0.0,
        s_bracket: (0.0, 0.0),
        bisection_steps: 0,
        sandwich_defect: w1.as_ref().map(|w| sandwich_defect(&u, w)),
        flow_steps,
    };
    Ok((u, report))
}

fn sandwich_defect(u: &DiscreteFunction, w: &DiscreteFunction) -> f64 {
    u.values()
        .iter()
        .zip(w.values())
        .map(|(a, b)| a.abs() - b)
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Truncation at `w1`, the seed path, bisection and polish.
fn flow_stage(
    ctx: &FunctionalContext,
    mesh: Mesh,
    opts: &NegOpts,
    lambda: f64,
    w1: &DiscreteFunction,
    flow_steps: &mut usize,
) -> Result<(DiscreteFunction, NegReport)> {
    let h = mesh.h();
    let phi1 = normalized_eigen(mesh, 1, ctx.q)?;
    let phi2 = normalized_eigen(mesh, 2, ctx.q)?;
    // (2) Truncation at w₁.
    let trunc = truncate(w1, ctx)?;
    let nl: &dyn Nonlinearity = &trunc;
    let jchain = JChain {
        p: ctx.p,
        q: ctx.q,
        nl,
    };

    // (3) Path with max J < 0, then bisection on the basin boundary.
    let path = |s: f64, t: f64| -> Vec<f64> {
        let (c, si) = (
            (std::f64::consts::PI * s).cos(),
            (std::f64::consts::PI * s).sin(),
        );
        phi1.iter()
            .zip(&phi2)
            .map(|(a, b)| t * (c * a + si * b))
            .collect()
    };
    let mut t = 0.1;
    loop {
        let max_j = (0..=opts.path_samples)
            .map(|k| chain_value(&jchain, &path(k as f64 / opts.path_samples as f64, t), h))
            .fold(f64::NEG_INFINITY, f64::max);
        if max_j < 0.0 {
            break;
        }
        t *= 0.5;
        if t < 1e-30 {
            return Err(Error::BisectionExhausted(
                "no seed path with max J < 0".into(),
            ));
        }
    }
    let cone_opts = DescendOpts {
        stop_in_cone: true,
        ..opts.descend
    };
    let mut best: Option<FlowState> = None;
    let mut keep = |tr: &Trajectory| {
        if let Some(s) = &tr.best_mixed {
            if best
                .as_ref()
                .is_none_or(|b| s.gap / s.eta.sup_norm() < b.gap / b.eta.sup_norm())
            {
                best = Some(s.clone());
            }
        }
    };
    let classify = |s: f64, steps: &mut usize| -> Result<(Cone, Trajectory)> {
        let tr = flow(
            &DiscreteFunction::from_vec(mesh, path(s, t)),
            nl,
            lambda,
            ctx,
            &cone_opts,
        )?;
        *steps += tr.last.step_count;
        Ok((tr.last.cone, tr))
    };
    let (c0, _) = classify(0.0, flow_steps)?;
    let (c1, _) = classify(1.0, flow_steps)?;
    if c0 != Cone::Pos || c1 != Cone::Neg {
        return Err(Error::BisectionExhausted(format!(
            "path ends flow to {} and {}, expected POS and NEG",
            c0.as_str(),
            c1.as_str()
        )));
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    let mut steps_used = 0;
    for _ in 0..opts.bisection_steps {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        steps_used += 1;
        let (c, tr) = classify(mid, flow_steps)?;
        keep(&tr);
        match c {
            Cone::Pos => lo = mid,
            Cone::Neg => hi = mid,
            Cone::Mixed if tr.outcome == FlowOutcome::Converged => {
                lo = mid;
                hi = mid;
                break;
            }
            Cone::Mixed => {
                return Err(Error::BisectionExhausted(format!(
                    "sign-changing flow from s = {mid} stopped ({:?}) without settling",
                    tr.outcome
                )))
            }
        }
    }

    // (4) Near-boundary flows; polish the best sign-changing state.
    let near: Vec<f64> = if lo == hi { vec![lo] } else { vec![lo, hi] };
    for &s in &near {
        let tr = flow(
            &DiscreteFunction::from_vec(mesh, path(s, t)),
            nl,
            lambda,
            ctx,
            &cone_opts,
        )?;
        *flow_steps += tr.last.step_count;
        keep(&tr);
    }
    let Some(cand) = best else {
        return Err(Error::BisectionExhausted(
            "no sign-changing state along the boundary flows".into(),
        ));
    };
    let rel_gap = cand.gap / cand.eta.sup_norm();
    if rel_gap > POLISH_GAP {
        return Err(Error::BisectionExhausted(format!(
            "boundary flows never approached a critical point (best relative gap {rel_gap:e})"
        )));
    }
    let (v, _) = newton_critical(&jchain, cand.eta.values(), h, 0.0, 60);
    let u = DiscreteFunction::from_vec(mesh, v);
    let functional = evaluate(&u, ctx);
    let sandwich = sandwich_defect(&u, w1);
    let report = NegReport {
        functional,
        method: NegMethod::Flow,
        flow_failure: None,
        w1_energy: Some(ctx.energy(w1)),
        truncated: true,
        lambda,
        path_scale: t,
        s_bracket: (lo, hi),
        bisection_steps: steps_used,
        sandwich_defect: Some(sandwich),
        flow_steps: *flow_steps,
    };
    let nodal =
        Cone::of(u.values()) == Cone::Mixed && crate::discrete::count_nodal(&u, NODAL_EPS) >= 2;
    let ok = nodal
        && functional.residual <= opts.tol
        && functional.e < 0.0
        && sandwich <= 1e-9 * w1.sup_norm();
    if ok {
        Ok((u, report))
    } else {
        Err(Error::not_converged(
            format!(
                "boundary limit rejected: nodal {nodal}, residual {:e}, E {:e}, sandwich {:e}",
                functional.residual, functional.e, sandwich
            ),
            Some(u),
        ))
    }
}
