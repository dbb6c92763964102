//! Shooting for the one-dimensional equation
//! `−(φ_p(u′) + φ_q(u′))′ = αφ_p(u) + βφ_q(u)`.
//!
//! The equation is autonomous and odd, so the solution with `u(0) = 0`,
//! `u′(0) = a` is a chain of congruent bumps of alternating sign. A Dirichlet
//! solution on `(0, T)` with `m` nodal domains exists exactly when the bump
//! length `L(a)` equals `T/m`.

use serde::{Deserialize, Serialize};

use crate::discrete::{
    evaluate, phi_r, DiscreteFunction, EnergyChain, FunctionalContext, FunctionalReport, Mesh,
};
use crate::flow::psi_inverse;
use crate::solver::newton_critical;

/// RK4 steps used while scanning the time map.
const SCAN_STEPS: usize = 1000;
/// RK4 steps used for the profile handed to Newton.
const PROFILE_STEPS: usize = 8000;

struct HalfBump {
    /// Time of the turning point `u′ = 0`.
    half: f64,
    dt: f64,
    /// `u` at `k dt`, up to and including the first sample past the turn.
    u: Vec<f64>,
}

fn rhs(ctx: &FunctionalContext, u: f64, w: f64) -> (f64, f64) {
    (
        psi_inverse(w, ctx.p, ctx.q),
        -(ctx.alpha * phi_r(u, ctx.p) + ctx.beta * phi_r(u, ctx.q)),
    )
}

/// Integrates in the flux variable `w = φ_p(u′) + φ_q(u′)` until `w` turns
/// negative; `None` if that does not happen before `t_max`.
fn half_bump(ctx: &FunctionalContext, a: f64, t_max: f64, steps: usize) -> Option<HalfBump> {
    let dt = t_max / steps as f64;
    let (mut u, mut w) = (0.0, phi_r(a, ctx.p) + phi_r(a, ctx.q));
    let mut us = vec![0.0];
    for k in 0..steps {
        let (k1u, k1w) = rhs(ctx, u, w);
        let (k2u, k2w) = rhs(ctx, u + 0.5 * dt * k1u, w + 0.5 * dt * k1w);
        let (k3u, k3w) = rhs(ctx, u + 0.5 * dt * k2u, w + 0.5 * dt * k2w);
        let (k4u, k4w) = rhs(ctx, u + dt * k3u, w + dt * k3w);
        let un = u + dt / 6.0 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u);
        let wn = w + dt / 6.0 * (k1w + 2.0 * k2w + 2.0 * k3w + k4w);
        if !(un.is_finite() && wn.is_finite()) {
            return None;
        }
        us.push(un);
        if wn <= 0.0 {
            let half = dt * (k as f64 + w / (w - wn));
            return Some(HalfBump { half, dt, u: us });
        }
        (u, w) = (un, wn);
    }
    None
}

/// Bump length `L(a)`, or `None` when the trajectory does not turn within
/// half of `t_max`.
pub fn bump_length(ctx: &FunctionalContext, a: f64, t_max: f64) -> Option<f64> {
    half_bump(ctx, a, 0.5 * t_max, SCAN_STEPS).map(|b| 2.0 * b.half)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BumpSolution {
    /// Initial slope `u′(0)`.
    pub slope: f64,
    pub domains: usize,
}

/// All crossings `L(a) = T/m`, `1 ≤ m ≤ max_domains`, on a log grid of
/// slopes spanning twelve decades around `1/T`, refined by bisection in
/// `ln a`. Tangential touches between grid points are missed.
pub fn bump_solutions(
    ctx: &FunctionalContext,
    t_len: f64,
    max_domains: usize,
) -> Vec<BumpSolution> {
    let grid: Vec<f64> = (0..=96)
        .map(|k| 10f64.powf(-6.0 + k as f64 / 8.0) / t_len)
        .collect();
    let lens: Vec<Option<f64>> = grid.iter().map(|&a| bump_length(ctx, a, t_len)).collect();
    let mut out = Vec::new();
    for m in 1..=max_domains {
        let target = t_len / m as f64;
        let above = |l: Option<f64>| l.is_none_or(|l| l > target);
        for k in 0..grid.len() - 1 {
            let (s0, s1) = (above(lens[k]), above(lens[k + 1]));
            if s0 == s1 {
                continue;
            }
            let (mut lo, mut hi) = (grid[k].ln(), grid[k + 1].ln());
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if above(bump_length(ctx, mid.exp(), t_len)) == s0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            out.push(BumpSolution {
                slope: (0.5 * (lo + hi)).exp(),
                domains: m,
            });
        }
    }
    out
}

/// The `m`-bump chain for `sol` sampled on `mesh`; bumps are stretched to
/// exactly `T/m`. `None` if the trajectory does not turn within `128 T/m`.
pub fn sample_bumps(
    ctx: &FunctionalContext,
    sol: &BumpSolution,
    mesh: Mesh,
) -> Option<DiscreteFunction> {
    let t_len = mesh.t_len;
    let bump = t_len / sol.domains as f64;
    let hb =
        (0..8).find_map(|k| half_bump(ctx, sol.slope, bump * (1 << k) as f64, PROFILE_STEPS))?;
    let at = |tau: f64| {
        // tau in [0, half]
        let x = tau / hb.dt;
        let k = (x.floor() as usize).min(hb.u.len() - 2);
        let f = x - k as f64;
        hb.u[k] * (1.0 - f) + hb.u[k + 1] * f
    };
    Some(DiscreteFunction::from_fn(mesh, |t| {
        let j = ((t / bump).floor() as usize).min(sol.domains - 1);
        let tau = (t - j as f64 * bump) / bump * 2.0 * hb.half;
        let v = if tau <= hb.half {
            at(tau)
        } else {
            at((2.0 * hb.half - tau).max(0.0))
        };
        if j.is_multiple_of(2) {
            v
        } else {
            -v
        }
    }))
}

/// Discrete solutions with `m ≤ max_domains` nodal domains: every bump
/// solution is sampled, Newton-polished on `mesh` and kept if its residual
/// is at most `tol` and its nodal count is still `m`.
pub fn shoot(
    ctx: &FunctionalContext,
    mesh: Mesh,
    max_domains: usize,
    tol: f64,
) -> Vec<(DiscreteFunction, FunctionalReport)> {
    let energy = EnergyChain(*ctx);
    bump_solutions(ctx, mesh.t_len, max_domains)
        .iter()
        .filter_map(|s| {
            let u0 = sample_bumps(ctx, s, mesh)?;
            let (v, _) = newton_critical(&energy, u0.values(), mesh.h(), 0.0, 60);
            let u = DiscreteFunction::from_vec(mesh, v);
            let rep = evaluate(&u, ctx);
            (rep.residual <= tol && rep.nodal_domains == s.domains).then_some((u, rep))
        })
        .collect()
}
