use std::f64::consts::PI;

use pq_nodal::spectral1d::{
    beta_upper_star, eigenfunction, eigenvalue, k_alpha, rayleigh_ratio, verify_ratio_bounds,
};

#[test]
fn eigenvalues_on_pi_interval_are_squares() {
    for k in 1..=5 {
        let l = eigenvalue(k, 2.0, PI).unwrap();
        assert!((l - (k * k) as f64).abs() < 1e-10);
    }
}

#[test]
fn eigenvalue_scaling() {
    for r in [1.5, 2.5, 3.0, 4.0] {
        let l1 = eigenvalue(1, r, 1.0).unwrap();
        for k in 1..=6 {
            let lk = eigenvalue(k, r, 1.0).unwrap();
            assert!((lk - (k as f64).powf(r) * l1).abs() <= 1e-12 * lk);
        }
        // λ_2(r,T) = λ_1(r,T/2)
        let a = eigenvalue(2, r, 1.0).unwrap();
        let b = eigenvalue(1, r, 0.5).unwrap();
        assert!((a - b).abs() <= 1e-12 * a);
    }
}

#[test]
fn eigenvalue_domain_errors() {
    assert!(eigenvalue(0, 2.0, 1.0).is_err());
    assert!(eigenvalue(1, 1.0, 1.0).is_err());
    assert!(eigenvalue(1, 2.0, 0.0).is_err());
}

#[test]
fn first_eigenfunction_peak() {
    let e = eigenfunction(1, 2.0, PI).unwrap();
    assert!((e.phi(PI / 2.0) - 1.0).abs() < 1e-12);
}

#[test]
fn second_eigenfunction_from_first() {
    let (r, t) = (3.0, 1.0);
    let e1 = eigenfunction(1, r, t).unwrap();
    let e2 = eigenfunction(2, r, t).unwrap();
    assert!(e2.phi(0.5).abs() < 1e-9);
    for i in 1..50 {
        let x = t * i as f64 / 50.0;
        let want = if x <= 0.5 * t {
            e1.phi(2.0 * x)
        } else {
            -e1.phi(2.0 * x - t)
        };
        assert!((e2.phi(x) - want).abs() < 1e-9, "x={x}");
    }
}

#[test]
fn third_mode_sign_changes() {
    let e = eigenfunction(3, 2.5, 2.0).unwrap();
    let s = e.samples(1000);
    let vals: Vec<f64> = s[1..s.len() - 1].iter().map(|x| x.1).collect();
    let changes = vals.windows(2).filter(|w| w[0] * w[1] < 0.0).count();
    assert_eq!(
        changes, 2,
        "three nodal domains means two interior sign changes"
    );
    let signs: Vec<bool> = vals
        .iter()
        .filter(|v| v.abs() > 1e-9)
        .map(|v| *v > 0.0)
        .collect();
    let runs = 1 + signs.windows(2).filter(|w| w[0] != w[1]).count();
    assert_eq!(runs, 3);
}

#[test]
fn ratio_in_own_exponent_is_eigenvalue() {
    for r in [1.5, 2.0, 3.0] {
        let rr = rayleigh_ratio(r, r, 1.0).unwrap();
        let l1 = eigenvalue(1, r, 1.0).unwrap();
        assert!((rr.value - l1).abs() < 1e-10 * l1);
    }
}

#[test]
fn ratio_between_first_two_q_eigenvalues() {
    let rr = rayleigh_ratio(3.0, 2.0, 1.0).unwrap();
    assert!(rr.value > PI * PI && rr.value < 4.0 * PI * PI);
}

#[test]
fn swapped_ratio_can_exceed_p_eigenvalues() {
    let rr = rayleigh_ratio(1.1, 10.0, 1.0).unwrap();
    assert!(rr.value > eigenvalue(2, 10.0, 1.0).unwrap());
}

#[test]
fn ratio_cross_check_on_grid() {
    let grid = [1.3, 2.0, 2.7, 4.5, 8.0];
    for &p in &grid {
        for &q in &grid {
            let rr = rayleigh_ratio(p, q, 1.7).unwrap();
            assert!((rr.value - rr.quadrature).abs() <= 1e-6 * rr.value);
        }
    }
}

#[test]
fn beta_u_star_bounds() {
    for (p, q) in [(3.0, 2.0), (2.5, 1.5), (4.0, 3.0)] {
        for k in 1..=4 {
            let a = eigenvalue(k, p, 1.0).unwrap();
            let b = beta_upper_star(a, p, q, 1.0).unwrap();
            let kq = (k as f64).powf(q);
            assert!(b > kq * eigenvalue(1, q, 1.0).unwrap());
            assert!(b < kq * eigenvalue(2, q, 1.0).unwrap());
        }
    }
    let l1 = eigenvalue(1, 3.0, 1.0).unwrap();
    let b1 = beta_upper_star(l1, 3.0, 2.0, 1.0).unwrap();
    let r = rayleigh_ratio(3.0, 2.0, 1.0).unwrap();
    assert!((b1 - r.value).abs() < 1e-12 * b1);
}

#[test]
fn k_alpha_matches_scan() {
    let (p, t) = (3.0, 1.0);
    let lam: Vec<f64> = (1..40).map(|k| eigenvalue(k, p, t).unwrap()).collect();
    for alpha in [
        1.5 * lam[2],
        0.3 * lam[0],
        lam[4],
        0.999 * lam[5],
        77.0 * lam[0],
    ] {
        let scan = (1..).find(|&k| alpha < lam[k]).unwrap();
        assert_eq!(k_alpha(alpha, p, t).unwrap(), scan, "alpha={alpha}");
    }
}

#[test]
fn ratio_bound_examples() {
    let rep = verify_ratio_bounds(&[2.0, 5.0, 3.0], &[1.5, 2.0], 1.0).unwrap();
    assert!(rep.all_hold());
    assert_eq!(rep.rows.len(), 5);
    for row in &rep.rows {
        assert!(row.sufficient_margin > 0.0);
    }
}

#[test]
fn eigenfunctions_of_different_exponents_separate() {
    let a = eigenfunction(1, 3.0, 1.0).unwrap();
    let b = eigenfunction(1, 2.0, 1.0).unwrap();
    let sep = (1..200)
        .map(|i| i as f64 / 200.0)
        .map(|x| (a.phi(x) - b.phi(x)).abs())
        .fold(0.0, f64::max);
    assert!(sep > 1e-3);
}
