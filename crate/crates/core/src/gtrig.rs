//! Generalized trigonometric functions `sin_r`, the half-period `π_r`, and
//! the beta-function moments of `sin_r` / `cos_r`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{check_exponent, Error, Result};
use crate::quad::integrate;

const QUAD_TOL: f64 = 1e-15;
const INVERT_TOL: f64 = 1e-13;

/// A point on the graph of `sin_r`: argument, value and derivative.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GTrigValue {
    pub t: f64,
    pub s: f64,
    pub ds: f64,
}

/// `π_r = 2π / (r sin(π/r))`.
pub fn pi_r(r: f64) -> Result<f64> {
    check_exponent(r)?;
    Ok(2.0 * PI / (r * (PI / r).sin()))
}

/// Euler beta function `Γ(x)Γ(y)/Γ(x+y)`.
pub fn beta_fn(x: f64, y: f64) -> Result<f64> {
    if !(x > 0.0 && y > 0.0) || !x.is_finite() || !y.is_finite() {
        return Err(Error::Domain(format!(
            "beta({x}, {y}) needs positive arguments"
        )));
    }
    Ok(statrs::function::beta::beta(x, y))
}

/// `(∫_0^{π_p/2} sin_p^q, ∫_0^{π_p/2} cos_p^q)` in closed form.
pub fn sinp_moment(p: f64, q: f64) -> Result<(f64, f64)> {
    check_exponent(p)?;
    check_exponent(q)?;
    let s = beta_fn((q + 1.0) / p, (p - 1.0) / p)? / p;
    let c = beta_fn(1.0 / p, 1.0 + (q - 1.0) / p)? / p;
    Ok((s, c))
}

/// Evaluator for `sin_r` at a fixed exponent.
///
/// On `[0, π_r/2]` the inverse of `F(x) = ∫_0^x (1-s^r)^{-1/r} ds` is split in
/// two pieces at `x0 = 2^{-1/r}`. Below `x0` the integrand is bounded. Above,
/// `s = (1 - v^m)^{1/r}` with `m = r/(r-1)` turns the tail
/// `π_r/2 - F(x)` into `∫_0^v (1-w^m)^{(1-r)/r} dw / (r-1)`, which is regular
/// at `v = 0`.
#[derive(Debug, Clone)]
pub struct GenSine {
    r: f64,
    m: f64,
    pi_r: f64,
    x0: f64,
    v0: f64,
    t0: f64,
}

impl GenSine {
    pub fn new(r: f64) -> Result<Self> {
        let pi_r = pi_r(r)?;
        let m = r / (r - 1.0);
        let x0 = 0.5f64.powf(1.0 / r);
        let v0 = 0.5f64.powf(1.0 / m);
        let mut g = GenSine {
            r,
            m,
            pi_r,
            x0,
            v0,
            t0: 0.0,
        };
        g.t0 = g.head(0.0, x0);
        Ok(g)
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn pi_r(&self) -> f64 {
        self.pi_r
    }

    fn head_integrand(&self, s: f64) -> f64 {
        (1.0 - s.powf(self.r)).powf(-1.0 / self.r)
    }

    fn tail_integrand(&self, w: f64) -> f64 {
        (1.0 - w.powf(self.m)).powf((1.0 - self.r) / self.r) / (self.r - 1.0)
    }

    fn head(&self, a: f64, b: f64) -> f64 {
        integrate(|s| self.head_integrand(s), a, b, QUAD_TOL, 0.0, 400).value
    }

    fn tail(&self, a: f64, b: f64) -> f64 {
        integrate(|w| self.tail_integrand(w), a, b, QUAD_TOL, 0.0, 400).value
    }

    /// `F(1)` assembled from both pieces; equals `π_r/2` up to quadrature error.
    pub fn quarter_period_by_quadrature(&self) -> f64 {
        self.t0 + self.tail(0.0, self.v0)
    }

    /// Solves `G(x) = target` for increasing `G` on `[0, hi]`, `G(0) = 0`,
    /// with derivative `g`, by safeguarded Newton.
    fn invert(
        &self,
        target: f64,
        hi: f64,
        x_start: f64,
        piece: impl Fn(f64, f64) -> f64,
        g: impl Fn(f64) -> f64,
    ) -> f64 {
        let (mut lo, mut up) = (0.0, hi);
        let mut x = x_start.clamp(0.0, hi);
        let mut fx = piece(0.0, x);
        for _ in 0..200 {
            let res = fx - target;
            if res.abs() <= INVERT_TOL {
                break;
            }
            if res > 0.0 {
                up = x;
            } else {
                lo = x;
            }
            let mut next = x - res / g(x);
            if !(next > lo && next < up) {
                next = 0.5 * (lo + up);
            }
            if next == x || up - lo <= f64::EPSILON * hi {
                break;
            }
            fx += piece(x, next);
            x = next;
        }
        x
    }

    /// `(sin_r(t), cos_r(t))` for `t ∈ [0, π_r/2]`.
    fn quarter(&self, t: f64) -> (f64, f64) {
        let half = 0.5 * self.pi_r;
        let t = t.clamp(0.0, half);
        if t <= self.t0 {
            let x = self.invert(
                t,
                self.x0,
                t.min(self.x0),
                |a, b| self.head(a, b),
                |x| self.head_integrand(x),
            );
            (x, (1.0 - x.powf(self.r)).max(0.0).powf(1.0 / self.r))
        } else {
            let tau = half - t;
            let v = self.invert(
                tau,
                self.v0,
                ((self.r - 1.0) * tau).min(self.v0),
                |a, b| self.tail(a, b),
                |w| self.tail_integrand(w),
            );
            let s = (1.0 - v.powf(self.m)).max(0.0).powf(1.0 / self.r);
            (s, v.powf(1.0 / (self.r - 1.0)))
        }
    }

    /// Evaluates `sin_r` and its derivative at any real `t`.
    pub fn eval(&self, t: f64) -> GTrigValue {
        let period = 2.0 * self.pi_r;
        let mut u = t.rem_euclid(period);
        if u >= period {
            u = 0.0;
        }
        let half = 0.5 * self.pi_r;
        let (s, ds) = if u <= half {
            let (s, c) = self.quarter(u);
            (s, c)
        } else if u <= self.pi_r {
            let (s, c) = self.quarter(self.pi_r - u);
            (s, -c)
        } else if u <= 3.0 * half {
            let (s, c) = self.quarter(u - self.pi_r);
            (-s, -c)
        } else {
            let (s, c) = self.quarter(period - u);
            (-s, c)
        };
        GTrigValue { t, s, ds }
    }
}

/// `sin_r(t)` with its derivative.
pub fn sin_r(r: f64, t: f64) -> Result<GTrigValue> {
    Ok(GenSine::new(r)?.eval(t))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pi_2_is_pi() {
        assert!((pi_r(2.0).unwrap() - PI).abs() < 1e-15);
    }

    #[test]
    fn pi_r_rejects_small_exponent() {
        assert!(pi_r(1.0).is_err());
        assert!(pi_r(0.5).is_err());
    }

    #[test]
    fn quarter_period_consistent() {
        for r in [1.1, 1.5, 2.0, 3.0, 7.0, 10.0] {
            let g = GenSine::new(r).unwrap();
            let q = g.quarter_period_by_quadrature();
            assert!(
                (q - 0.5 * g.pi_r()).abs() < 1e-12,
                "r={r}: {q} vs {}",
                0.5 * g.pi_r()
            );
        }
    }

    #[test]
    fn top_of_arch() {
        for r in [1.5, 3.0, 4.0] {
            let g = GenSine::new(r).unwrap();
            let v = g.eval(0.5 * g.pi_r());
            assert!((v.s - 1.0).abs() < 1e-12);
            assert!(v.ds.abs() < 1e-6);
        }
    }

    #[test]
    fn beta_known_values() {
        assert!((beta_fn(1.0, 1.0).unwrap() - 1.0).abs() < 1e-14);
        assert!((beta_fn(1.0 / 3.0, 1.0).unwrap() - 3.0).abs() < 1e-12);
        assert!(beta_fn(0.0, 1.0).is_err());
    }

    #[test]
    fn moments_at_two() {
        let (s, c) = sinp_moment(2.0, 2.0).unwrap();
        assert!((s - PI / 4.0).abs() < 1e-13);
        assert!((c - PI / 4.0).abs() < 1e-13);
    }
}
