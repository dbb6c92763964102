//! Newton-type and quasi-Newton inner solvers shared by the Nehari, curve
//! and flow computations.

use crate::discrete::{
    chain_gradient, chain_hessian, chain_majorant, chain_value, hessian_eps, ChainFunctional,
};
use crate::error::{Error, Result};

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn axpy(x: &[f64], t: f64, d: &[f64]) -> Vec<f64> {
    x.iter().zip(d).map(|(a, b)| a + t * b).collect()
}

#[derive(Debug, Clone)]
pub struct MinimizeOutcome {
    pub u: Vec<f64>,
    pub grad_norm: f64,
    pub iterations: usize,
}

/// Minimizes a convex chain functional by damped Newton with a regularized
/// tridiagonal Hessian; falls back to Barzilai–Borwein gradient steps when
/// the Newton direction is unusable. Stops when `‖∇Φ‖_2 ≤ tol`.
pub fn minimize_convex<F: ChainFunctional + ?Sized>(
    f: &F,
    u0: &[f64],
    h: f64,
    tol: f64,
    max_iter: usize,
) -> Result<MinimizeOutcome> {
    let mut u = u0.to_vec();
    let mut g = chain_gradient(f, &u, h);
    let mut val = chain_value(f, &u, h);
    let mut bb_step: Option<f64> = None;
    // Majorant smoothing, relaxed toward the Hessian floor as steps succeed so
    // that cells with vanishing differences are not frozen.
    let mut meps = f64::INFINITY;
    for it in 0..max_iter {
        let gn = norm(&g);
        if gn <= tol {
            return Ok(MinimizeOutcome {
                u,
                grad_norm: gn,
                iterations: it,
            });
        }
        let eps = hessian_eps(&u, h);
        let slack = 1e-15 * val.abs().max(1.0);
        // 1. Full Newton step.
        let mut accepted = None;
        if let Some(step) = chain_hessian(f, &u, h, eps).solve(&g) {
            let gd = -dot(&g, &step);
            if gd < 0.0 {
                let cand = axpy(&u, -1.0, &step);
                let cv = chain_value(f, &cand, h);
                if cv <= val + 1e-4 * gd
                    || (cv <= val + slack && norm(&chain_gradient(f, &cand, h)) < gn)
                {
                    accepted = Some((cand, cv));
                }
            }
        }
        // 2. Majorant (Kačanov-type) direction with backtracking.
        if accepted.is_none() {
            let scale = u.iter().fold(0.0f64, |m, x| m.max(x.abs())) / h;
            meps = meps.min(1e-2 * scale).max(eps);
            if let Some(step) = chain_majorant(f, &u, h, meps).solve(&g) {
                let gd = -dot(&g, &step);
                if gd < 0.0 {
                    let mut t = 1.0;
                    while t > 1e-12 {
                        let cand = axpy(&u, -t, &step);
                        let cv = chain_value(f, &cand, h);
                        if cv <= val + 1e-4 * t * gd
                            || (cv <= val + slack && norm(&chain_gradient(f, &cand, h)) < gn)
                        {
                            accepted = Some((cand, cv));
                            break;
                        }
                        t *= 0.5;
                    }
                }
            }
            meps = (0.1 * meps).max(eps);
        }
        // 3. Barzilai–Borwein gradient step.
        if accepted.is_none() {
            let mut t = bb_step.unwrap_or(1.0 / gn);
            for _ in 0..60 {
                let cand = axpy(&u, -t, &g);
                let cv = chain_value(f, &cand, h);
                if cv < val - 1e-4 * t * gn * gn {
                    accepted = Some((cand, cv));
                    break;
                }
                t *= 0.5;
            }
        }
        let Some((cand, cv)) = accepted else {
            return Err(Error::not_converged(
                format!("line search failed at iteration {it}, |grad| = {gn:e}"),
                None,
            ));
        };
        let gnew = chain_gradient(f, &cand, h);
        let s: Vec<f64> = cand.iter().zip(&u).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gnew.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 0.0 {
            bb_step = Some(dot(&s, &s) / sy);
        }
        u = cand;
        val = cv;
        g = gnew;
    }
    let gn = norm(&g);
    if gn <= tol {
        return Ok(MinimizeOutcome {
            u,
            grad_norm: gn,
            iterations: max_iter,
        });
    }
    Err(Error::not_converged(
        format!("{max_iter} iterations, |grad| = {gn:e}"),
        None,
    ))
}

/// Newton iteration for `∇Φ(u) = 0` at a (possibly saddle) critical point,
/// globalized by backtracking on `‖∇Φ‖`. Returns the best iterate found and
/// its gradient norm; the caller judges acceptance.
pub fn newton_critical<F: ChainFunctional + ?Sized>(
    f: &F,
    u0: &[f64],
    h: f64,
    tol: f64,
    max_iter: usize,
) -> (Vec<f64>, f64) {
    let mut u = u0.to_vec();
    let mut g = chain_gradient(f, &u, h);
    let mut gn = norm(&g);
    for _ in 0..max_iter {
        if gn <= tol {
            break;
        }
        let hess = chain_hessian(f, &u, h, hessian_eps(&u, h));
        let Some(step) = hess.solve(&g) else { break };
        let mut t = 1.0;
        let mut improved = false;
        while t > 1e-6 {
            let cand = axpy(&u, -t, &step);
            let cg = chain_gradient(f, &cand, h);
            let cn = norm(&cg);
            if cn < (1.0 - 1e-4 * t) * gn {
                u = cand;
                g = cg;
                gn = cn;
                improved = true;
                break;
            }
            t *= 0.5;
        }
        if !improved {
            break;
        }
    }
    (u, gn)
}

#[derive(Debug, Clone, Copy)]
pub struct LbfgsOpts {
    pub memory: usize,
    pub max_iter: usize,
    /// Stop when the preconditioned gradient norm falls below this value.
    pub grad_tol: f64,
    /// Stop when the relative decrease over one iteration is below this value.
    pub ftol: f64,
}

impl Default for LbfgsOpts {
    fn default() -> Self {
        LbfgsOpts {
            memory: 8,
            max_iter: 500,
            grad_tol: 1e-10,
            ftol: 1e-15,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LbfgsOutcome {
    pub x: Vec<f64>,
    pub f: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Limited-memory BFGS with Armijo backtracking. `fg` returns `None` where the
/// objective is undefined; such points are rejected by the line search.
/// `precond` applies an approximate inverse Hessian used as the initial
/// matrix of the two-loop recursion.
pub fn lbfgs(
    fg: &mut dyn FnMut(&[f64]) -> Option<(f64, Vec<f64>)>,
    x0: &[f64],
    precond: &dyn Fn(&[f64]) -> Vec<f64>,
    opts: LbfgsOpts,
) -> LbfgsOutcome {
    let mut x = x0.to_vec();
    let Some((mut fx, mut g)) = fg(&x) else {
        return LbfgsOutcome {
            x,
            f: f64::INFINITY,
            iterations: 0,
            converged: false,
        };
    };
    let mut hist: Vec<(Vec<f64>, Vec<f64>, f64)> = Vec::new();
    let mut stall = 0;
    for it in 0..opts.max_iter {
        // Two-loop recursion.
        let mut qv = g.clone();
        let mut alphas = Vec::with_capacity(hist.len());
        for (s, y, rho) in hist.iter().rev() {
            let a = rho * dot(s, &qv);
            for (qi, yi) in qv.iter_mut().zip(y) {
                *qi -= a * yi;
            }
            alphas.push(a);
        }
        let mut r = precond(&qv);
        if let Some((s, y, _)) = hist.last() {
            let py = precond(y);
            let gamma = dot(s, y) / dot(y, &py);
            if gamma.is_finite() && gamma > 0.0 {
                r.iter_mut().for_each(|v| *v *= gamma);
            }
        }
        for ((s, y, rho), a) in hist.iter().zip(alphas.iter().rev()) {
            let b = rho * dot(y, &r);
            for (ri, si) in r.iter_mut().zip(s) {
                *ri += (a - b) * si;
            }
        }
        let mut dir: Vec<f64> = r.iter().map(|v| -v).collect();
        let mut gd = dot(&g, &dir);
        if !(gd < 0.0) {
            hist.clear();
            dir = precond(&g).into_iter().map(|v| -v).collect();
            gd = dot(&g, &dir);
            if !(gd < 0.0) {
                return LbfgsOutcome {
                    x,
                    f: fx,
                    iterations: it,
                    converged: false,
                };
            }
        }
        if (-gd).sqrt() <= opts.grad_tol {
            return LbfgsOutcome {
                x,
                f: fx,
                iterations: it,
                converged: true,
            };
        }
        let mut t = 1.0;
        let mut next = None;
        for _ in 0..60 {
            let cand = axpy(&x, t, &dir);
            if let Some((cf, cg)) = fg(&cand) {
                if cf <= fx + 1e-4 * t * gd {
                    next = Some((cand, cf, cg));
                    break;
                }
            }
            t *= 0.5;
        }
        let Some((xn, fnew, gnew)) = next else {
            if hist.is_empty() {
                return LbfgsOutcome {
                    x,
                    f: fx,
                    iterations: it,
                    converged: false,
                };
            }
            hist.clear();
            continue;
        };
        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gnew.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-300 {
            if hist.len() == opts.memory {
                hist.remove(0);
            }
            hist.push((s, y, 1.0 / sy));
        }
        let rel = (fx - fnew).abs() / fx.abs().max(1e-300);
        x = xn;
        fx = fnew;
        g = gnew;
        if rel <= opts.ftol {
            stall += 1;
            if stall >= 5 {
                return LbfgsOutcome {
                    x,
                    f: fx,
                    iterations: it + 1,
                    converged: true,
                };
            }
        } else {
            stall = 0;
        }
    }
    LbfgsOutcome {
        x,
        f: fx,
        iterations: opts.max_iter,
        converged: false,
    }
}

/// Objective or constraint callback: value and gradient, `None` where undefined.
pub type Smooth<'a> = &'a dyn Fn(&[f64]) -> Option<(f64, Vec<f64>)>;

#[derive(Debug, Clone, Copy)]
pub struct AlOpts {
    pub outer: usize,
    pub mu0: f64,
    /// Stop once every constraint satisfies `c_i ≤ feas_tol`.
    pub feas_tol: f64,
    pub inner: LbfgsOpts,
}

impl Default for AlOpts {
    fn default() -> Self {
        AlOpts {
            outer: 25,
            mu0: 10.0,
            feas_tol: 1e-10,
            inner: LbfgsOpts {
                memory: 10,
                max_iter: 400,
                grad_tol: 1e-9,
                ftol: 1e-14,
            },
        }
    }
}

#[derive(Debug, Clone)]
pub struct AlOutcome {
    pub x: Vec<f64>,
    pub f: f64,
    /// `max_i max(c_i(x), 0)`.
    pub violation: f64,
}

/// Powell–Hestenes–Rockafellar augmented Lagrangian for `min f` subject to
/// `c_i(x) ≤ 0`, with L-BFGS inner solves.
pub fn augmented_lagrangian(
    obj: Smooth,
    cons: &[Smooth],
    x0: &[f64],
    precond: &dyn Fn(&[f64]) -> Vec<f64>,
    opts: AlOpts,
) -> AlOutcome {
    let m = cons.len();
    let mut mult = vec![0.0; m];
    let mut mu = opts.mu0;
    let mut x = x0.to_vec();
    let mut last_viol = f64::INFINITY;
    let violation = |x: &[f64]| -> Option<(f64, Vec<f64>)> {
        let vals: Option<Vec<f64>> = cons.iter().map(|c| c(x).map(|v| v.0)).collect();
        let vals = vals?;
        Some((vals.iter().fold(0.0f64, |a, &v| a.max(v)), vals))
    };
    for _ in 0..opts.outer {
        let mut lag = |y: &[f64]| -> Option<(f64, Vec<f64>)> {
            let (mut f, mut g) = obj(y)?;
            for (c, &l) in cons.iter().zip(&mult) {
                let (cv, cg) = c(y)?;
                let s = (l + mu * cv).max(0.0);
                f += (s * s - l * l) / (2.0 * mu);
                if s > 0.0 {
                    for (gi, ci) in g.iter_mut().zip(&cg) {
                        *gi += s * ci;
                    }
                }
            }
            Some((f, g))
        };
        let out = lbfgs(&mut lag, &x, precond, opts.inner);
        x = out.x;
        let Some((viol, vals)) = violation(&x) else {
            break;
        };
        for (l, v) in mult.iter_mut().zip(&vals) {
            *l = (*l + mu * v).max(0.0);
        }
        if viol <= opts.feas_tol && out.converged {
            break;
        }
        if viol > 0.25 * last_viol {
            mu *= 10.0;
        }
        last_viol = viol;
    }
    let f = obj(&x).map_or(f64::INFINITY, |v| v.0);
    let violation = violation(&x).map_or(f64::INFINITY, |v| v.0);
    AlOutcome { x, f, violation }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn augmented_lagrangian_on_disc() {
        // min x + y on the unit disc: optimum at -(1,1)/√2.
        let obj = |x: &[f64]| Some((x[0] + x[1], vec![1.0, 1.0]));
        let disc = |x: &[f64]| {
            Some((
                x[0] * x[0] + x[1] * x[1] - 1.0,
                vec![2.0 * x[0], 2.0 * x[1]],
            ))
        };
        let out = augmented_lagrangian(
            &obj,
            &[&disc],
            &[0.0, 0.0],
            &|g| g.to_vec(),
            AlOpts::default(),
        );
        let r = -std::f64::consts::FRAC_1_SQRT_2;
        assert!(
            (out.x[0] - r).abs() < 1e-6 && (out.x[1] - r).abs() < 1e-6,
            "{:?}",
            out.x
        );
        assert!(out.violation < 1e-9);
    }

    #[test]
    fn lbfgs_quadratic() {
        let mut fg = |x: &[f64]| {
            let f = (x[0] - 1.0).powi(2) + 10.0 * (x[1] + 2.0).powi(2);
            Some((f, vec![2.0 * (x[0] - 1.0), 20.0 * (x[1] + 2.0)]))
        };
        let out = lbfgs(&mut fg, &[0.0, 0.0], &|g| g.to_vec(), LbfgsOpts::default());
        assert!((out.x[0] - 1.0).abs() < 1e-8 && (out.x[1] + 2.0).abs() < 1e-8);
    }
}
