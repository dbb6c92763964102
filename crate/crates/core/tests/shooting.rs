use pq_nodal::discrete::{FunctionalContext, Mesh};
use pq_nodal::flow::{find_nodal_negative, NegMethod, NegOpts};
use pq_nodal::gtrig::pi_r;
use pq_nodal::shooting::{bump_length, bump_solutions, sample_bumps, shoot, BumpSolution};
use pq_nodal::spectral1d::eigenvalue;
use proptest::prelude::*;

fn lam(k: usize, r: f64) -> f64 {
    eigenvalue(k, r, 1.0).unwrap()
}

/// Bump length from the first integral
/// `F(u′) + A(u) = F(a)`, `F(v) = (p−1)/p v^p + (q−1)/q v^q`,
/// `A(u) = α u^p/p + β u^q/q`, as `2 ∫_0^M du / v(u)`.
fn oracle_length(p: f64, q: f64, alpha: f64, beta: f64, a: f64) -> f64 {
    let f = |v: f64| (p - 1.0) / p * v.powf(p) + (q - 1.0) / q * v.powf(q);
    let big_a = |u: f64| alpha * u.powf(p) / p + beta * u.powf(q) / q;
    let bisect = |g: &dyn Fn(f64) -> f64, mut lo: f64, mut hi: f64| {
        for _ in 0..200 {
            let m = 0.5 * (lo + hi);
            if g(m) > 0.0 {
                hi = m;
            } else {
                lo = m;
            }
        }
        0.5 * (lo + hi)
    };
    let fa = f(a);
    let mut hi = 1.0;
    while big_a(hi) < fa {
        hi *= 2.0;
    }
    let m = bisect(&|u| big_a(u) - fa, 0.0, hi);
    let v_of = |u: f64| {
        let rhs = (fa - big_a(u)).max(0.0);
        bisect(&|v| f(v) - rhs, 0.0, a)
    };
    // u = M(1 − s^k) removes the (M − u)^{−1/q} endpoint singularity.
    let k = (q / (q - 1.0)).ceil() + 1.0;
    let g = |s: f64| {
        if s == 0.0 {
            return 0.0;
        }
        let u = m * (1.0 - s.powf(k));
        k * m * s.powf(k - 1.0) / v_of(u)
    };
    let n = 4000;
    let hs = 1.0 / n as f64;
    let mut sum = g(0.0) + g(1.0);
    for i in 1..n {
        sum += g(i as f64 * hs) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    2.0 * sum * hs / 3.0
}

#[test]
fn time_map_matches_first_integral() {
    for (p, q, alpha, beta) in [
        (3.0, 2.0, 100.0, 40.0),
        (2.5, 1.5, 10.0, 60.0),
        (4.0, 3.0, 300.0, 5.0),
    ] {
        let ctx = FunctionalContext::new(p, q, alpha, beta).unwrap();
        for a in [0.05, 1.0, 20.0] {
            let l = bump_length(&ctx, a, 10.0).unwrap();
            let o = oracle_length(p, q, alpha, beta, a);
            assert!(
                (l - o).abs() < 1e-4 * o,
                "({p},{q},{alpha},{beta}) a={a}: {l} vs {o}"
            );
        }
    }
}

#[test]
fn time_map_limits_are_homogeneous_half_periods() {
    let (p, q, alpha, beta) = (3.0, 2.0, 100.0, 40.0);
    let ctx = FunctionalContext::new(p, q, alpha, beta).unwrap();
    let small = pi_r(q).unwrap() * ((q - 1.0) / beta).powf(1.0 / q);
    let large = pi_r(p).unwrap() * ((p - 1.0) / alpha).powf(1.0 / p);
    let l0 = bump_length(&ctx, 1e-7, 10.0).unwrap();
    let l1 = bump_length(&ctx, 1e7, 10.0).unwrap();
    assert!((l0 - small).abs() < 1e-3 * small, "{l0} vs {small}");
    assert!((l1 - large).abs() < 1e-3 * large, "{l1} vs {large}");
}

#[test]
fn no_turn_without_restoring_force() {
    let ctx = FunctionalContext::new(3.0, 2.0, 0.0, -5.0).unwrap();
    assert!(bump_length(&ctx, 1.0, 1.0).is_none());
}

#[test]
fn nonexistence_corner_has_no_nodal_bumps() {
    let ctx = FunctionalContext::new(3.0, 2.0, 0.9 * lam(2, 3.0), 0.9 * lam(2, 2.0)).unwrap();
    assert!(bump_solutions(&ctx, 1.0, 12).iter().all(|s| s.domains == 1));
}

#[test]
fn agrees_with_flow_solution() {
    let mesh = Mesh::new(1.0, 200).unwrap();
    let ctx = FunctionalContext::new(3.0, 2.0, 0.5 * lam(1, 3.0), 1.5 * lam(2, 2.0)).unwrap();
    let (u, rep) = find_nodal_negative(&ctx, mesh, &NegOpts::default()).unwrap();
    assert_eq!(rep.method, NegMethod::Flow);
    let two: Vec<_> = shoot(&ctx, mesh, 4, 1e-6)
        .into_iter()
        .filter(|(_, r)| r.nodal_domains == 2)
        .collect();
    assert_eq!(two.len(), 1);
    let (v, r) = &two[0];
    assert!((r.e - rep.functional.e).abs() < 1e-8 * r.e.abs());
    // Same solution up to sign.
    let s = if v.values()[0] * u.values()[0] > 0.0 {
        1.0
    } else {
        -1.0
    };
    let d = u
        .values()
        .iter()
        .zip(v.values())
        .map(|(a, b)| (a - s * b).abs())
        .fold(0.0, f64::max);
    assert!(d < 1e-6 * u.sup_norm(), "{d}");
}

#[test]
fn high_alpha_cell_falls_back_to_shooting() {
    let mesh = Mesh::new(1.0, 120).unwrap();
    let ctx = FunctionalContext::new(3.0, 2.0, 235.0, 91.0).unwrap();
    let (_, rep) = find_nodal_negative(&ctx, mesh, &NegOpts::default()).unwrap();
    assert_eq!(rep.method, NegMethod::Shooting);
    assert!(rep.functional.e < 0.0 && rep.functional.nodal_domains >= 3);
    assert!(rep.flow_failure.is_some());
    let off = NegOpts {
        shooting_domains: 0,
        ..NegOpts::default()
    };
    assert!(find_nodal_negative(&ctx, mesh, &off).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn chains_reflect(m in 1usize..5, slope in 0.05f64..20.0) {
        let mesh = Mesh::new(1.0, 99).unwrap();
        let ctx = FunctionalContext::new(3.0, 2.0, 50.0, 30.0).unwrap();
        let u = sample_bumps(&ctx, &BumpSolution { slope, domains: m }, mesh).unwrap();
        let v = u.values();
        let sign = if m % 2 == 1 { 1.0 } else { -1.0 };
        let scale = u.sup_norm();
        for i in 0..v.len() {
            prop_assert!((v[i] - sign * v[v.len() - 1 - i]).abs() <= 1e-6 * scale);
        }
        prop_assert_eq!(pq_nodal::discrete::count_nodal(&u, 1e-8), m);
    }
}
