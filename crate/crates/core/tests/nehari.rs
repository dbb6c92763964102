use pq_nodal::discrete::{count_nodal, evaluate, DiscreteFunction, FunctionalContext, Mesh};
use pq_nodal::nehari::{
    beta_1_star, beta_l_star, check_k_empty, classify, curve_beta_1, curve_beta_2, curve_beta_l,
    default_seeds, minimize_m1, project_nodal, project_ray, BetaLCurve, CurveOpts, CurveStatus,
    M1Opts, Subset,
};
use pq_nodal::spectral1d::{eigenfunction, eigenvalue, rayleigh_ratio};
use pq_nodal::Error;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const P: f64 = 3.0;
const Q: f64 = 2.0;

fn lam(k: usize, r: f64) -> f64 {
    eigenvalue(k, r, 1.0).unwrap()
}

fn eig_samples(k: usize, r: f64, mesh: Mesh) -> DiscreteFunction {
    let e = eigenfunction(k, r, 1.0).unwrap();
    DiscreteFunction::from_fn(mesh, |t| e.phi(t))
}

fn fast_curves() -> CurveOpts {
    CurveOpts {
        n: 100,
        n_sub: 200,
        starts: 6,
        cross_check: false,
        ..CurveOpts::default()
    }
}

#[test]
fn ray_projection_fixed_point_and_closed_form() {
    let mesh = Mesh::new(1.0, 60).unwrap();
    let ctx = FunctionalContext::new(P, Q, 2.0 * lam(1, P), 0.5 * lam(1, Q)).unwrap();
    let u = eig_samples(1, P, mesh);
    let (t, v) = project_ray(&u, &ctx).unwrap();
    let (hv, gv) = (ctx.h_alpha(&u), ctx.g_beta(&u));
    assert!(hv < 0.0 && gv > 0.0);
    assert!((t.powf(P - Q) + gv / hv).abs() < 1e-12);
    // Projecting again is the identity.
    let (t2, _) = project_ray(&v, &ctx).unwrap();
    assert!((t2 - 1.0).abs() < 1e-10, "t2 = {t2}");

    // Independent oracle: maximize t -> E(tu) by golden-section search.
    let e = |s: f64| ctx.energy(&u.scaled(s));
    let (mut a, mut b) = (1e-6, 10.0 * t);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..200 {
        let (c, d) = (b - g * (b - a), a + g * (b - a));
        if e(c) > e(d) {
            b = d;
        } else {
            a = c;
        }
    }
    assert!((0.5 * (a + b) - t).abs() < 1e-6 * t);
    assert!(e(t) > e(0.5 * t) && e(t) > e(2.0 * t));
}

#[test]
fn ray_projection_rejects_equal_signs() {
    let mesh = Mesh::new(1.0, 30).unwrap();
    let ctx = FunctionalContext::new(P, Q, 0.5 * lam(1, P), 0.5 * lam(1, Q)).unwrap();
    let u = eig_samples(1, P, mesh);
    assert!(matches!(project_ray(&u, &ctx), Err(Error::Sign { .. })));
}

#[test]
fn second_eigenfunction_projects_onto_m1() {
    let mesh = Mesh::new(1.0, 200).unwrap();
    let ctx = FunctionalContext::new(P, Q, 1.2 * lam(2, P), lam(1, Q)).unwrap();
    let v = project_nodal(&eig_samples(2, P, mesh), &ctx).unwrap();
    let c = classify(&v, &ctx, 1e-10);
    assert_eq!(c.subset, Subset::M1);
    assert!((c.h_plus + c.g_plus).abs() < 1e-10 * c.g_plus.abs());
    assert!((c.h_minus + c.g_minus).abs() < 1e-10 * c.g_minus.abs());
    // Odd data: both parts get the same factor.
    let vals = v.values();
    let n = vals.len();
    for i in 0..n {
        assert!((vals[i] + vals[n - 1 - i]).abs() < 1e-10 * v.sup_norm());
    }
}

#[test]
fn positive_energy_solution() {
    let mesh = Mesh::new(1.0, 400).unwrap();
    let ctx = FunctionalContext::new(P, Q, 1.3 * lam(2, P), lam(1, Q)).unwrap();
    let (u, rep) = minimize_m1(&ctx, &default_seeds(mesh, P).unwrap(), &M1Opts::default()).unwrap();
    let fresh = evaluate(&u, &ctx);
    assert!(fresh.e > 0.0);
    assert!(fresh.residual < 1e-6);
    assert_eq!(count_nodal(&u, 1e-8), 2);
    let identity = (fresh.e - (P - Q) / (P * Q) * fresh.g).abs();
    assert!(identity <= 1e-8 * fresh.e.abs(), "{identity}");
    assert_eq!(rep.classification.subset, Subset::M1);
    assert!(rep.classification.g_plus > 0.0 && rep.classification.g_minus > 0.0);
}

#[test]
fn m1_empty_below_second_eigenvalue() {
    let mesh = Mesh::new(1.0, 100).unwrap();
    let ctx = FunctionalContext::new(P, Q, 0.95 * lam(2, P), 0.9 * lam(1, Q)).unwrap();
    let r = minimize_m1(&ctx, &default_seeds(mesh, P).unwrap(), &M1Opts::default());
    assert!(r.is_err());
}

#[test]
fn beta_l_star_between_q_eigenvalues() {
    let b = beta_l_star(P, Q, 1.0).unwrap();
    assert!((b - 2f64.powf(Q) * rayleigh_ratio(P, Q, 1.0).unwrap().value).abs() < 1e-12 * b);
    assert!(lam(2, Q) < b && b < lam(4, Q));
    assert!(beta_1_star(P, Q, 1.0).unwrap() >= b);
}

#[test]
fn beta_l_empty_below_and_bounded_at_second_eigenvalue() {
    let c = BetaLCurve::new(P, Q, 1.0, 400).unwrap();
    assert!(c.eval(0.99 * lam(2, P), &mut None).unwrap().is_none());
    let at = c.eval(lam(2, P), &mut None).unwrap().unwrap();
    assert!(at.value <= beta_l_star(P, Q, 1.0).unwrap() * (1.0 + 1e-6));
}

#[test]
fn beta_l_nonincreasing_and_above_first_q_eigenvalue() {
    let l2 = lam(2, P);
    let grid: Vec<f64> = (0..12).map(|k| l2 * (1.0 + 0.25 * k as f64)).collect();
    let ctx = FunctionalContext::new(P, Q, 0.0, 0.0).unwrap();
    let s = curve_beta_l(&grid, &ctx, &fast_curves()).unwrap();
    for w in s.windows(2) {
        assert!(
            w[1].value <= w[0].value + 1e-6,
            "{} -> {}",
            w[0].value,
            w[1].value
        );
    }
    assert!(s.iter().all(|x| x.value > lam(1, Q)));
}

#[test]
fn k_emptiness() {
    let opts = fast_curves();
    let below = FunctionalContext::new(P, Q, 0.9 * lam(2, P), lam(3, Q)).unwrap();
    assert!(check_k_empty(&below, &opts).unwrap().empty);
    let low_beta = FunctionalContext::new(P, Q, 2.0 * lam(2, P), 0.5 * lam(1, Q)).unwrap();
    assert!(check_k_empty(&low_beta, &opts).unwrap().empty);
    let at = check_k_empty(&low_beta, &opts).unwrap().beta_l;
    let on = FunctionalContext::new(P, Q, 2.0 * lam(2, P), at).unwrap();
    let k = check_k_empty(&on, &opts).unwrap();
    assert!(!k.empty);
    let w = k.witness.unwrap();
    assert!(count_nodal(&w, 1e-8) >= 2);
}

#[test]
fn beta_1_marks_empty_and_is_nondecreasing() {
    let l2 = lam(2, P);
    let ctx = FunctionalContext::new(P, Q, 0.0, 0.0).unwrap();
    let grid = [0.9 * l2, 1.5 * l2, 2.0 * l2, 3.0 * l2];
    let s = curve_beta_1(&grid, &ctx, &fast_curves()).unwrap();
    assert_eq!(s[0].value, f64::NEG_INFINITY);
    for w in s[1..].windows(2) {
        assert!(w[1].value >= w[0].value - 1e-6);
    }
}

#[test]
fn beta_2_at_small_alpha_is_second_q_eigenvalue() {
    let l1 = lam(1, P);
    let ctx = FunctionalContext::new(P, Q, 0.0, 0.0).unwrap();
    let s = curve_beta_2(&[0.25 * l1, 0.5 * l1], &ctx, &fast_curves()).unwrap();
    for x in &s {
        assert_ne!(x.status, CurveStatus::Failed);
        assert!(
            (x.value - lam(2, Q)).abs() < 1e-3 * lam(2, Q),
            "{}",
            x.value
        );
    }
    assert!(s[1].value >= s[0].value - 1e-6);
}

/// Random sign-changing functions never land in the Nehari set after
/// projection where the theory says it is empty.
#[test]
fn empty_regions_stay_empty_under_random_candidates() {
    let mesh = Mesh::new(1.0, 40).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for (a, b) in [
        (lam(2, P), lam(1, Q)),
        (0.7 * lam(2, P), 0.5 * lam(1, Q)),
        (lam(1, P), lam(2, Q)),
    ] {
        let ctx = FunctionalContext::new(P, Q, a, b).unwrap();
        for _ in 0..300 {
            let mut v: Vec<f64> = (0..40).map(|_| rng.gen_range(-1.0..1.0)).collect();
            v[0] = v[0].abs() + 0.1;
            v[39] = -v[39].abs() - 0.1;
            let u = DiscreteFunction::new(mesh, v).unwrap();
            if let Ok(w) = project_nodal(&u, &ctx) {
                assert!(!classify(&w, &ctx, 1e-10).in_m, "({a}, {b})");
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn ray_closed_form(vals in proptest::collection::vec(0.01f64..1.0, 10), a in 30.0f64..200.0) {
        let mesh = Mesh::new(1.0, 10).unwrap();
        let ctx = FunctionalContext::new(P, Q, a, 1.0).unwrap();
        let u = DiscreteFunction::new(mesh, vals).unwrap();
        if let Ok((t, _)) = project_ray(&u, &ctx) {
            let (hv, gv) = (ctx.h_alpha(&u), ctx.g_beta(&u));
            prop_assert!((t.powf(P - Q) + gv / hv).abs() <= 1e-12 * (gv / hv).abs().max(1.0));
        }
    }

    #[test]
    fn projected_m1_keeps_sign_under_scaling(
        vals in proptest::collection::vec(-1.0f64..1.0, 16),
        sp in 0.1f64..5.0,
        sm in 0.1f64..5.0,
    ) {
        let mesh = Mesh::new(1.0, 16).unwrap();
        let ctx = FunctionalContext::new(P, Q, 3.0 * lam(2, P), 0.5 * lam(1, Q)).unwrap();
        let u = DiscreteFunction::new(mesh, vals).unwrap();
        if let Ok(w) = project_nodal(&u, &ctx) {
            let c = classify(&w, &ctx, 1e-9);
            if c.subset == Subset::M1 {
                let v = w.map(|x| if x > 0.0 { sp * x } else { sm * x });
                let d = classify(&v, &ctx, 1.0);
                prop_assert!(d.h_plus < 0.0 && d.h_minus < 0.0);
            }
        }
    }
}
