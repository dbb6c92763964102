//! Uniform finite-difference discretization of `W_0^{1,p}(0,T)`.
//!
//! Gradient norms use difference quotients over all `n+1` cells with zero
//! boundary values; zero-order norms use lumped (rectangle) quadrature.

use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{check_exponent, Error, Result};

/// Default relative threshold below which nodal values count as zero.
pub const NODAL_EPS: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mesh {
    pub t_len: f64,
    pub n: usize,
}

impl Mesh {
    pub fn new(t_len: f64, n: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::Domain(format!(
                "mesh needs n >= 3 interior nodes, got {n}"
            )));
        }
        if !(t_len > 0.0 && t_len.is_finite()) {
            return Err(Error::Domain(format!(
                "interval length {t_len} must be positive"
            )));
        }
        Ok(Mesh { t_len, n })
    }

    pub fn h(&self) -> f64 {
        self.t_len / (self.n + 1) as f64
    }

    /// Position of interior node `i` (0-based).
    pub fn node(&self, i: usize) -> f64 {
        (i + 1) as f64 * self.h()
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(move |i| self.node(i))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteFunction {
    mesh: Mesh,
    values: Vec<f64>,
}

impl DiscreteFunction {
    pub fn new(mesh: Mesh, values: Vec<f64>) -> Result<Self> {
        if values.len() != mesh.n {
            return Err(Error::Domain(format!(
                "expected {} nodal values, got {}",
                mesh.n,
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("non-finite value at node {i}")));
        }
        Ok(DiscreteFunction { mesh, values })
    }

    pub(crate) fn from_vec(mesh: Mesh, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), mesh.n);
        DiscreteFunction { mesh, values }
    }

    pub fn zeros(mesh: Mesh) -> Self {
        DiscreteFunction {
            mesh,
            values: vec![0.0; mesh.n],
        }
    }

    pub fn from_fn(mesh: Mesh, f: impl Fn(f64) -> f64) -> Self {
        DiscreteFunction {
            mesh,
            values: mesh.nodes().map(f).collect(),
        }
    }

    pub fn mesh(&self) -> Mesh {
        self.mesh
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn plus(&self) -> Self {
        self.map(|v| v.max(0.0))
    }

    pub fn minus(&self) -> Self {
        self.map(|v| (-v).max(0.0))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        DiscreteFunction {
            mesh: self.mesh,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn scaled(&self, t: f64) -> Self {
        self.map(|v| t * v)
    }

    pub fn sup_norm(&self) -> f64 {
        sup_norm(&self.values)
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "t,u")?;
        for (i, v) in self.values.iter().enumerate() {
            writeln!(w, "{},{}", fmt17(self.mesh.node(i)), fmt17(*v))?;
        }
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(f))
    }

    /// Reads a `t,u` CSV of interior nodes on `(0, t_len)`.
    pub fn read_csv<R: BufRead>(r: R, t_len: f64) -> Result<Self> {
        let mut values = Vec::new();
        for (k, line) in r.lines().enumerate() {
            let line = line?;
            if k == 0 {
                if line.trim() != "t,u" {
                    return Err(Error::Parse(format!("bad header {line:?}")));
                }
                continue;
            }
            if line.trim().is_empty() {
                continue;
            }
            let u = line
                .split(',')
                .nth(1)
                .ok_or_else(|| Error::Parse(format!("line {}: missing column", k + 1)))?;
            values.push(
                u.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(format!("line {}: {e}", k + 1)))?,
            );
        }
        DiscreteFunction::new(Mesh::new(t_len, values.len())?, values)
    }
}

/// Formats with 17 significant digits.
pub fn fmt17(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x == f64::INFINITY {
        "inf".into()
    } else if x == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{x:.16e}")
    }
}

pub(crate) fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

#[inline]
pub(crate) fn pw(x: f64, r: f64) -> f64 {
    x.abs().powf(r)
}

/// `|x|^{r-2} x`
#[inline]
pub(crate) fn phi_r(x: f64, r: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x.abs().powf(r - 1.0).copysign(x)
    }
}

/// Regularized `(r-1)|x|^{r-2}`.
#[inline]
pub(crate) fn dphi_r(x: f64, r: f64, eps: f64) -> f64 {
    (r - 1.0) * (x * x + eps * eps).powf(0.5 * (r - 2.0))
}

/// Difference quotient of cell `j` (between nodes `j-1` and `j`, 0-based
/// interior indices, boundary zero).
#[inline]
pub(crate) fn cell_diff(u: &[f64], j: usize, h: f64) -> f64 {
    let left = if j == 0 { 0.0 } else { u[j - 1] };
    let right = if j == u.len() { 0.0 } else { u[j] };
    (right - left) / h
}

pub(crate) fn grad_pow_raw(u: &[f64], h: f64, r: f64) -> f64 {
    (0..=u.len())
        .map(|j| pw(cell_diff(u, j, h), r))
        .sum::<f64>()
        * h
}

pub(crate) fn lump_pow_raw(u: &[f64], h: f64, r: f64) -> f64 {
    u.iter().map(|&v| pw(v, r)).sum::<f64>() * h
}

/// `Σ_j |(u_{j+1}-u_j)/h|^r h`.
pub fn grad_norm_pow(u: &DiscreteFunction, r: f64) -> f64 {
    grad_pow_raw(&u.values, u.mesh.h(), r)
}

/// `Σ_i |u_i|^r h`.
pub fn lump_norm_pow(u: &DiscreteFunction, r: f64) -> f64 {
    lump_pow_raw(&u.values, u.mesh.h(), r)
}

/// `grad_norm_pow(u,r) / lump_norm_pow(u,r)`.
pub fn rayleigh(u: &DiscreteFunction, r: f64) -> Result<f64> {
    check_exponent(r)?;
    let d = lump_norm_pow(u, r);
    if d == 0.0 {
        return Err(Error::ZeroFunction);
    }
    Ok(grad_norm_pow(u, r) / d)
}

/// Number of maximal same-sign runs, ignoring `|u_i| < eps_rel ‖u‖_∞`.
pub fn count_nodal(u: &DiscreteFunction, eps_rel: f64) -> usize {
    count_nodal_raw(&u.values, eps_rel)
}

pub(crate) fn count_nodal_raw(u: &[f64], eps_rel: f64) -> usize {
    let thr = eps_rel * sup_norm(u);
    let mut runs = 0;
    let mut last = 0i8;
    for &v in u {
        if v.abs() < thr || v == 0.0 {
            continue;
        }
        let s = if v > 0.0 { 1 } else { -1 };
        if s != last {
            runs += 1;
            last = s;
        }
    }
    runs
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FunctionalContext {
    pub p: f64,
    pub q: f64,
    pub alpha: f64,
    pub beta: f64,
}

impl FunctionalContext {
    pub fn new(p: f64, q: f64, alpha: f64, beta: f64) -> Result<Self> {
        check_exponent(q)?;
        if !(q < p) || !p.is_finite() {
            return Err(Error::Domain(format!(
                "need 1 < q < p, got p = {p}, q = {q}"
            )));
        }
        if !alpha.is_finite() || !beta.is_finite() {
            return Err(Error::Domain("alpha and beta must be finite".into()));
        }
        Ok(FunctionalContext { p, q, alpha, beta })
    }

    pub fn with_params(&self, alpha: f64, beta: f64) -> Self {
        FunctionalContext {
            alpha,
            beta,
            ..*self
        }
    }

    pub fn h_alpha(&self, u: &DiscreteFunction) -> f64 {
        grad_norm_pow(u, self.p) - self.alpha * lump_norm_pow(u, self.p)
    }

    pub fn g_beta(&self, u: &DiscreteFunction) -> f64 {
        grad_norm_pow(u, self.q) - self.beta * lump_norm_pow(u, self.q)
    }

    pub fn energy(&self, u: &DiscreteFunction) -> f64 {
        self.h_alpha(u) / self.p + self.g_beta(u) / self.q
    }

    /// `(p-q)/(pq)`
    pub fn nehari_factor(&self) -> f64 {
        (self.p - self.q) / (self.p * self.q)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FunctionalReport {
    #[serde(rename = "H")]
    pub h: f64,
    #[serde(rename = "G")]
    pub g: f64,
    #[serde(rename = "E")]
    pub e: f64,
    pub residual: f64,
    pub nodal_domains: usize,
}

/// Energy chain for `E_{α,β}`.
#[derive(Debug, Clone, Copy)]
pub struct EnergyChain(pub FunctionalContext);

impl ChainFunctional for EnergyChain {
    fn edge(&self, d: f64) -> (f64, f64) {
        let c = &self.0;
        (
            pw(d, c.p) / c.p + pw(d, c.q) / c.q,
            phi_r(d, c.p) + phi_r(d, c.q),
        )
    }
    fn edge2(&self, d: f64, eps: f64) -> f64 {
        dphi_r(d, self.0.p, eps) + dphi_r(d, self.0.q, eps)
    }
    fn node(&self, _i: usize, u: f64) -> (f64, f64) {
        let c = &self.0;
        (
            -c.alpha * pw(u, c.p) / c.p - c.beta * pw(u, c.q) / c.q,
            -c.alpha * phi_r(u, c.p) - c.beta * phi_r(u, c.q),
        )
    }
    fn node2(&self, _i: usize, u: f64, eps: f64) -> f64 {
        -self.0.alpha * dphi_r(u, self.0.p, eps) - self.0.beta * dphi_r(u, self.0.q, eps)
    }
}

pub fn evaluate(u: &DiscreteFunction, ctx: &FunctionalContext) -> FunctionalReport {
    let h = ctx.h_alpha(u);
    let g = ctx.g_beta(u);
    FunctionalReport {
        h,
        g,
        e: h / ctx.p + g / ctx.q,
        residual: residual_norm(
            &chain_gradient(&EnergyChain(*ctx), &u.values, u.mesh.h()),
            u.mesh.h(),
        ),
        nodal_domains: count_nodal(u, NODAL_EPS),
    }
}

/// `‖g‖_2 / h^{1/2}`: the L² density of a nodal gradient vector.
pub fn residual_norm(g: &[f64], h: f64) -> f64 {
    g.iter().map(|x| x * x).sum::<f64>().sqrt() / h.sqrt()
}

pub fn gradient(u: &DiscreteFunction, ctx: &FunctionalContext) -> DiscreteFunction {
    DiscreteFunction::from_vec(
        u.mesh,
        chain_gradient(&EnergyChain(*ctx), &u.values, u.mesh.h()),
    )
}

/// Functional of the form `Σ_cells W(d_j) h + Σ_nodes V_i(u_i) h`.
pub trait ChainFunctional {
    /// `(W(d), W'(d))`
    fn edge(&self, d: f64) -> (f64, f64);
    /// `W''(d)`, regularized by `eps` where singular.
    fn edge2(&self, d: f64, eps: f64) -> f64;
    /// `(V_i(u), V_i'(u))`
    fn node(&self, i: usize, u: f64) -> (f64, f64);
    fn node2(&self, i: usize, u: f64, eps: f64) -> f64;
    /// Curvature of a quadratic majorant of `W` (defaults to `W''`).
    fn edge2_major(&self, d: f64, eps: f64) -> f64 {
        self.edge2(d, eps)
    }
    /// Curvature of a quadratic majorant of `V_i` (defaults to `V_i''`).
    fn node2_major(&self, i: usize, u: f64, eps: f64) -> f64 {
        self.node2(i, u, eps)
    }
}

pub fn chain_value<F: ChainFunctional + ?Sized>(f: &F, u: &[f64], h: f64) -> f64 {
    let e: f64 = (0..=u.len()).map(|j| f.edge(cell_diff(u, j, h)).0).sum();
    let v: f64 = u.iter().enumerate().map(|(i, &x)| f.node(i, x).0).sum();
    (e + v) * h
}

pub fn chain_gradient<F: ChainFunctional + ?Sized>(f: &F, u: &[f64], h: f64) -> Vec<f64> {
    let n = u.len();
    let w: Vec<f64> = (0..=n).map(|j| f.edge(cell_diff(u, j, h)).1).collect();
    (0..n)
        .map(|i| w[i] - w[i + 1] + f.node(i, u[i]).1 * h)
        .collect()
}

/// Symmetric tridiagonal matrix.
#[derive(Debug, Clone)]
pub struct Tridiag {
    pub diag: Vec<f64>,
    pub off: Vec<f64>,
}

impl Tridiag {
    pub fn mul(&self, x: &[f64]) -> Vec<f64> {
        let n = x.len();
        (0..n)
            .map(|i| {
                let mut s = self.diag[i] * x[i];
                if i > 0 {
                    s += self.off[i - 1] * x[i - 1];
                }
                if i + 1 < n {
                    s += self.off[i] * x[i + 1];
                }
                s
            })
            .collect()
    }

    /// Gaussian elimination with partial pivoting (works for indefinite
    /// matrices). Returns `None` if singular.
    pub fn solve(&self, b: &[f64]) -> Option<Vec<f64>> {
        let n = b.len();
        if n == 0 {
            return Some(vec![]);
        }
        // Rows stored as (sub, diag, sup, sup2).
        let mut dl: Vec<f64> = (0..n)
            .map(|i| if i > 0 { self.off[i - 1] } else { 0.0 })
            .collect();
        let mut d = self.diag.clone();
        let mut du: Vec<f64> = (0..n)
            .map(|i| if i + 1 < n { self.off[i] } else { 0.0 })
            .collect();
        let mut du2 = vec![0.0; n];
        let mut x = b.to_vec();
        let scale = d
            .iter()
            .chain(self.off.iter())
            .fold(0.0f64, |m, v| m.max(v.abs()));
        if scale == 0.0 {
            return None;
        }
        for i in 0..n - 1 {
            if dl[i + 1].abs() > d[i].abs() {
                // Swap rows i and i+1.
                let (a0, a1, a2) = (d[i], du[i], du2[i]);
                d[i] = dl[i + 1];
                du[i] = d[i + 1];
                du2[i] = du[i + 1];
                let (b0, b1, b2) = (a0, a1, a2);
                dl[i + 1] = b0;
                d[i + 1] = b1;
                du[i + 1] = b2;
                x.swap(i, i + 1);
            }
            if d[i].abs() <= 1e-300 {
                return None;
            }
            let m = dl[i + 1] / d[i];
            d[i + 1] -= m * du[i];
            du[i + 1] -= m * du2[i];
            x[i + 1] -= m * x[i];
            dl[i + 1] = 0.0;
        }
        if d[n - 1].abs() <= 1e-300 {
            return None;
        }
        x[n - 1] /= d[n - 1];
        if n >= 2 {
            x[n - 2] = (x[n - 2] - du[n - 2] * x[n - 1]) / d[n - 2];
        }
        for i in (0..n.saturating_sub(2)).rev() {
            x[i] = (x[i] - du[i] * x[i + 1] - du2[i] * x[i + 2]) / d[i];
        }
        if x.iter().all(|v| v.is_finite()) {
            Some(x)
        } else {
            None
        }
    }
}

pub fn chain_hessian<F: ChainFunctional + ?Sized>(f: &F, u: &[f64], h: f64, eps: f64) -> Tridiag {
    let n = u.len();
    let w2: Vec<f64> = (0..=n)
        .map(|j| f.edge2(cell_diff(u, j, h), eps) / h)
        .collect();
    let diag = (0..n)
        .map(|i| w2[i] + w2[i + 1] + f.node2(i, u[i], eps) * h)
        .collect();
    let off = (1..n).map(|j| -w2[j]).collect();
    Tridiag { diag, off }
}

/// Tridiagonal matrix of majorant curvatures (positive definite for convex
/// chains with superlinear terms).
pub fn chain_majorant<F: ChainFunctional + ?Sized>(f: &F, u: &[f64], h: f64, eps: f64) -> Tridiag {
    let n = u.len();
    let w2: Vec<f64> = (0..=n)
        .map(|j| f.edge2_major(cell_diff(u, j, h), eps) / h)
        .collect();
    let diag = (0..n)
        .map(|i| w2[i] + w2[i + 1] + f.node2_major(i, u[i], eps) * h)
        .collect();
    let off = (1..n).map(|j| -w2[j]).collect();
    Tridiag { diag, off }
}

/// Regularization scale `1e-10 · max(‖u‖_∞, max|d|)`.
pub(crate) fn hessian_eps(u: &[f64], h: f64) -> f64 {
    let dmax = (0..=u.len())
        .map(|j| cell_diff(u, j, h).abs())
        .fold(0.0, f64::max);
    1e-10 * sup_norm(u).max(dmax).max(1e-300)
}

/// Gradient norm over the part `max(σu, 0)` of the piecewise-linear
/// interpolant of `u`, with the sign-change cell split at its zero.
/// Returns the value and its gradient with respect to `u`.
pub fn p1_part_grad_pow(u: &[f64], h: f64, r: f64, sigma: f64) -> (f64, Vec<f64>) {
    let n = u.len();
    let mut val = 0.0;
    let mut g = vec![0.0; n];
    let hr = h.powf(1.0 - r);
    for j in 0..=n {
        let a = if j == 0 { 0.0 } else { sigma * u[j - 1] };
        let b = if j == n { 0.0 } else { sigma * u[j] };
        let (v, da, db) = if a >= 0.0 && b >= 0.0 {
            let d = b - a;
            (pw(d, r) * hr, -r * phi_r(d, r) * hr, r * phi_r(d, r) * hr)
        } else if a > 0.0 && b < 0.0 {
            let d = a - b;
            let dr1 = d.powf(r - 1.0);
            let dr2 = d.powf(r - 2.0);
            (
                dr1 * a * hr,
                ((r - 1.0) * dr2 * a + dr1) * hr,
                -(r - 1.0) * dr2 * a * hr,
            )
        } else if b > 0.0 && a < 0.0 {
            let d = b - a;
            let dr1 = d.powf(r - 1.0);
            let dr2 = d.powf(r - 2.0);
            (
                dr1 * b * hr,
                -(r - 1.0) * dr2 * b * hr,
                ((r - 1.0) * dr2 * b + dr1) * hr,
            )
        } else {
            (0.0, 0.0, 0.0)
        };
        val += v;
        if j > 0 {
            g[j - 1] += sigma * da;
        }
        if j < n {
            g[j] += sigma * db;
        }
    }
    (val, g)
}

/// `Σ max(σu_i,0)^r h` with gradient.
pub fn part_lump_pow(u: &[f64], h: f64, r: f64, sigma: f64) -> (f64, Vec<f64>) {
    let mut val = 0.0;
    let g = u
        .iter()
        .map(|&x| {
            let y = (sigma * x).max(0.0);
            val += y.powf(r) * h;
            sigma * r * y.powf(r - 1.0) * h
        })
        .collect();
    (val, g)
}

/// Rayleigh quotient of a part of the interpolant, with gradient.
pub fn p1_part_rayleigh(u: &[f64], h: f64, r: f64, sigma: f64) -> Option<(f64, Vec<f64>)> {
    let (num, gn) = p1_part_grad_pow(u, h, r, sigma);
    let (den, gd) = part_lump_pow(u, h, r, sigma);
    if den <= 0.0 {
        return None;
    }
    let q = num / den;
    Some((
        q,
        gn.iter().zip(&gd).map(|(a, b)| (a - q * b) / den).collect(),
    ))
}

/// Solves the discrete `-Δ_r w = b` with zero boundary values exactly: the
/// cell fluxes `σ_j = |d_j|^{r-2} d_j` satisfy `σ_j = σ_0 − h Σ_{i<j} b_i`,
/// and `σ_0` is fixed by `Σ_j d_j = 0`.
pub fn solve_r_laplace(b: &[f64], h: f64, r: f64) -> Vec<f64> {
    let n = b.len();
    let mut cum = Vec::with_capacity(n + 1);
    let mut acc = 0.0;
    cum.push(0.0);
    for &bi in b {
        acc += bi * h;
        cum.push(acc);
    }
    let inv = |s: f64| phi_r(s, r / (r - 1.0));
    let closure = |s0: f64| cum.iter().map(|&c| inv(s0 - c)).sum::<f64>();
    let (mut lo, mut hi) = cum
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &c| {
            (a.min(c), b.max(c))
        });
    if hi - lo == 0.0 {
        return vec![0.0; n];
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if closure(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let s0 = 0.5 * (lo + hi);
    let mut u = Vec::with_capacity(n);
    let mut w = 0.0;
    for &c in &cum[..n] {
        w += inv(s0 - c) * h;
        u.push(w);
    }
    // Spread the residual boundary mismatch linearly.
    let end = w + inv(s0 - cum[n]) * h;
    for (i, v) in u.iter_mut().enumerate() {
        *v -= end * (i + 1) as f64 / (n + 1) as f64;
    }
    u
}

/// First eigenpair of the discrete `r`-Laplacian by inverse iteration. The
/// eigenvector is positive with `lump_norm_pow(u, r) = 1`.
pub fn first_eigenpair(mesh: Mesh, r: f64) -> Result<(f64, DiscreteFunction)> {
    check_exponent(r)?;
    let h = mesh.h();
    let normalize = |v: Vec<f64>| {
        let s = lump_pow_raw(&v, h, r).powf(1.0 / r);
        v.into_iter().map(|x| x / s).collect::<Vec<f64>>()
    };
    let mut u = normalize(
        mesh.nodes()
            .map(|t| (std::f64::consts::PI * t / mesh.t_len).sin())
            .collect(),
    );
    let mut lam = grad_pow_raw(&u, h, r);
    for _ in 0..500 {
        let b: Vec<f64> = u.iter().map(|&x| phi_r(x, r)).collect();
        let v = normalize(solve_r_laplace(&b, h, r));
        let shift = v
            .iter()
            .zip(&u)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        let scale = v.iter().fold(0.0f64, |m, a| m.max(a.abs()));
        u = v;
        lam = grad_pow_raw(&u, h, r);
        let done = shift <= 1e-14 * scale;
        if done {
            break;
        }
    }
    Ok((lam, DiscreteFunction::from_vec(mesh, u)))
}
