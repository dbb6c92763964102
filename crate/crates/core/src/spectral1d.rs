//! Closed-form Dirichlet spectrum of `-Δ_r` on `(0,T)`, Rayleigh ratios of
//! eigenfunctions in a second exponent, and the critical value `β_U*`.

use serde::{Deserialize, Serialize};

use crate::error::{check_exponent, Error, Result};
use crate::gtrig::{beta_fn, pi_r, sinp_moment, GenSine};
use crate::quad::integrate;

/// Relative tolerance for deciding that `α` is an eigenvalue.
pub const SPECTRAL_MATCH_TOL: f64 = 1e-9;

fn check_len(t_len: f64) -> Result<()> {
    if t_len.is_finite() && t_len > 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "interval length T = {t_len} must be positive"
        )))
    }
}

/// `λ_k(r) = (r-1)(kπ_r/T)^r`.
pub fn eigenvalue(k: usize, r: f64, t_len: f64) -> Result<f64> {
    if k == 0 {
        return Err(Error::Domain("mode index k must be >= 1".into()));
    }
    check_len(t_len)?;
    Ok((r - 1.0) * (k as f64 * pi_r(r)? / t_len).powf(r))
}

/// Eigenpair `(λ_k, t ↦ sin_r(kπ_r t/T))`.
#[derive(Debug, Clone)]
pub struct EigenPair {
    pub k: usize,
    pub r: f64,
    pub t_len: f64,
    pub lambda: f64,
    sine: GenSine,
}

impl EigenPair {
    fn freq(&self) -> f64 {
        self.k as f64 * self.sine.pi_r() / self.t_len
    }

    pub fn phi(&self, t: f64) -> f64 {
        self.sine.eval(self.freq() * t).s
    }

    pub fn dphi(&self, t: f64) -> f64 {
        self.freq() * self.sine.eval(self.freq() * t).ds
    }

    /// Samples at `n` equispaced points of `[0, T]`, endpoints included.
    pub fn samples(&self, n: usize) -> Vec<(f64, f64)> {
        if n == 1 {
            return vec![(0.0, 0.0)];
        }
        (0..n)
            .map(|i| {
                let t = self.t_len * i as f64 / (n - 1) as f64;
                let v = if i == 0 || i == n - 1 {
                    0.0
                } else {
                    self.phi(t)
                };
                (t, v)
            })
            .collect()
    }
}

pub fn eigenfunction(k: usize, r: f64, t_len: f64) -> Result<EigenPair> {
    let lambda = eigenvalue(k, r, t_len)?;
    Ok(EigenPair {
        k,
        r,
        t_len,
        lambda,
        sine: GenSine::new(r)?,
    })
}

/// `‖φ_p'‖_q^q / ‖φ_p‖_q^q` with both evaluation routes.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RayleighRatio {
    pub p: f64,
    pub q: f64,
    pub t_len: f64,
    pub value: f64,
    pub quadrature: f64,
}

/// Closed form of the ratio through the beta-function moments.
pub fn rayleigh_ratio_closed(p: f64, q: f64, t_len: f64) -> Result<f64> {
    check_len(t_len)?;
    let (s, c) = sinp_moment(p, q)?;
    Ok((pi_r(p)? / t_len).powf(q) * c / s)
}

/// Ratio by adaptive quadrature of the eigenfunction evaluator over `(0,T/2)`.
pub fn rayleigh_ratio_quadrature(p: f64, q: f64, t_len: f64) -> Result<f64> {
    check_exponent(q)?;
    let phi = eigenfunction(1, p, t_len)?;
    let half = 0.5 * t_len;
    let num = integrate(|t| phi.dphi(t).abs().powf(q), 0.0, half, 1e-10, 1e-12, 4000).value;
    let den = integrate(|t| phi.phi(t).abs().powf(q), 0.0, half, 1e-10, 1e-12, 4000).value;
    Ok(num / den)
}

pub fn rayleigh_ratio(p: f64, q: f64, t_len: f64) -> Result<RayleighRatio> {
    let value = rayleigh_ratio_closed(p, q, t_len)?;
    let quadrature = rayleigh_ratio_quadrature(p, q, t_len)?;
    if (value - quadrature).abs() > 1e-6 * value.abs() {
        return Err(Error::CrossCheck(format!(
            "R({p},{q}): closed form {value:e} vs quadrature {quadrature:e}"
        )));
    }
    Ok(RayleighRatio {
        p,
        q,
        t_len,
        value,
        quadrature,
    })
}

/// Index `k` with `|α - λ_k(p)| ≤ 1e-9 λ_k(p)`, if any.
pub fn match_eigenvalue(alpha: f64, p: f64, t_len: f64) -> Option<usize> {
    let l1 = eigenvalue(1, p, t_len).ok()?;
    if !(alpha > 0.0) {
        return None;
    }
    let k = (alpha / l1).powf(1.0 / p).round().max(1.0) as usize;
    (k.saturating_sub(1).max(1)..=k + 1).find(|&j| {
        let lj = eigenvalue(j, p, t_len).unwrap();
        (alpha - lj).abs() <= SPECTRAL_MATCH_TOL * lj
    })
}

/// `β_U*(α) = k^q R(p,q)` when `α = λ_k(p)`, otherwise `-∞`.
pub fn beta_upper_star(alpha: f64, p: f64, q: f64, t_len: f64) -> Result<f64> {
    check_exponent(p)?;
    check_exponent(q)?;
    match match_eigenvalue(alpha, p, t_len) {
        Some(k) => Ok((k as f64).powf(q) * rayleigh_ratio_closed(p, q, t_len)?),
        None => Ok(f64::NEG_INFINITY),
    }
}

/// `k_α = min{k : α < λ_{k+1}(p)}`.
pub fn k_alpha(alpha: f64, p: f64, t_len: f64) -> Result<usize> {
    let l1 = eigenvalue(1, p, t_len)?;
    let mut k = if alpha > l1 {
        (alpha / l1).powf(1.0 / p).floor().max(1.0) as usize
    } else {
        1
    };
    while k > 1 && alpha < eigenvalue(k, p, t_len)? {
        k -= 1;
    }
    while alpha >= eigenvalue(k + 1, p, t_len)? {
        k += 1;
    }
    Ok(k)
}

/// Margins for one exponent pair in the lemma sweep.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RatioBoundRow {
    pub p: f64,
    pub q: f64,
    pub lambda1_q: f64,
    pub ratio: f64,
    pub lambda2_q: f64,
    /// `(R - λ_1(q)) / λ_1(q)`
    pub lower_margin: f64,
    /// `(λ_2(q) - R) / λ_2(q)`
    pub upper_margin: f64,
    /// `(1/p) B(1/p, 1/p)`
    pub sufficient_lhs: f64,
    /// `2^{q-1} ((q-1)/q) π_q^q / π_p^{q-1}`
    pub sufficient_rhs: f64,
    /// `(rhs - lhs) / rhs`
    pub sufficient_margin: f64,
    pub quadrature_rel_diff: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RatioBoundReport {
    pub t_len: f64,
    pub rows: Vec<RatioBoundRow>,
    pub violations: Vec<(f64, f64)>,
}

impl RatioBoundReport {
    pub fn all_hold(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn min_margin(&self) -> f64 {
        self.rows
            .iter()
            .flat_map(|r| [r.lower_margin, r.upper_margin])
            .fold(f64::INFINITY, f64::min)
    }
}

pub fn ratio_bound_row(p: f64, q: f64, t_len: f64, with_quadrature: bool) -> Result<RatioBoundRow> {
    let ratio = rayleigh_ratio_closed(p, q, t_len)?;
    let quadrature_rel_diff = if with_quadrature {
        let rq = rayleigh_ratio_quadrature(p, q, t_len)?;
        Some((rq - ratio).abs() / ratio)
    } else {
        None
    };
    let lambda1_q = eigenvalue(1, q, t_len)?;
    let lambda2_q = eigenvalue(2, q, t_len)?;
    let sufficient_lhs = beta_fn(1.0 / p, 1.0 / p)? / p;
    let sufficient_rhs =
        2f64.powf(q - 1.0) * ((q - 1.0) / q) * pi_r(q)?.powf(q) / pi_r(p)?.powf(q - 1.0);
    Ok(RatioBoundRow {
        p,
        q,
        lambda1_q,
        ratio,
        lambda2_q,
        lower_margin: (ratio - lambda1_q) / lambda1_q,
        upper_margin: (lambda2_q - ratio) / lambda2_q,
        sufficient_lhs,
        sufficient_rhs,
        sufficient_margin: (sufficient_rhs - sufficient_lhs) / sufficient_rhs,
        quadrature_rel_diff,
    })
}

/// Checks `λ_1(q) < R(p,q) < λ_2(q)` and the sufficient beta inequality for
/// every pair with `q < p`. Pairs run in parallel.
pub fn verify_ratio_bounds(p_grid: &[f64], q_grid: &[f64], t_len: f64) -> Result<RatioBoundReport> {
    use rayon::prelude::*;
    let pairs: Vec<(f64, f64)> = p_grid
        .iter()
        .flat_map(|&p| q_grid.iter().filter(move |&&q| q < p).map(move |&q| (p, q)))
        .collect();
    let rows: Vec<RatioBoundRow> = pairs
        .par_iter()
        .map(|&(p, q)| ratio_bound_row(p, q, t_len, true))
        .collect::<Result<_>>()?;
    let violations = rows
        .iter()
        .filter(|r| {
            !(r.lower_margin > 0.0 && r.upper_margin > 0.0 && r.sufficient_margin >= 0.0)
                || r.quadrature_rel_diff.is_some_and(|d| d > 1e-6)
        })
        .map(|r| (r.p, r.q))
        .collect();
    Ok(RatioBoundReport {
        t_len,
        rows,
        violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn k_alpha_edges() {
        let l2 = eigenvalue(2, 3.0, 1.0).unwrap();
        assert_eq!(k_alpha(0.5 * l2, 3.0, 1.0).unwrap(), 1);
        assert_eq!(k_alpha(l2, 3.0, 1.0).unwrap(), 2);
        assert_eq!(k_alpha(-5.0, 3.0, 1.0).unwrap(), 1);
    }

    #[test]
    fn sentinel_off_spectrum() {
        let l1 = eigenvalue(1, 3.0, 1.0).unwrap();
        assert_eq!(
            beta_upper_star(0.37 * l1, 3.0, 2.0, 1.0).unwrap(),
            f64::NEG_INFINITY
        );
    }
}
