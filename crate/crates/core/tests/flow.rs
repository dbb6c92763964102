use pq_nodal::discrete::{count_nodal, evaluate, DiscreteFunction, FunctionalContext, Mesh};
use pq_nodal::flow::{
    apply_t_lambda, b_lambda, check_a1, descend, find_nodal_negative, flow, solve_t_lambda,
    truncate, Cone, DescendOpts, FlowOutcome, NegOpts, Nonlinearity, Power, Truncated,
};
use pq_nodal::spectral1d::{eigenfunction, eigenvalue};
use pq_nodal::Error;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn lam(k: usize, r: f64) -> f64 {
    eigenvalue(k, r, 1.0).unwrap()
}

fn neg_ctx() -> FunctionalContext {
    FunctionalContext::new(3.0, 2.0, 0.5 * lam(1, 3.0), 1.5 * lam(2, 2.0)).unwrap()
}

fn first_q(mesh: Mesh, q: f64, eps: f64) -> DiscreteFunction {
    let e = eigenfunction(1, q, 1.0).unwrap();
    DiscreteFunction::from_fn(mesh, |t| eps * e.phi(t))
}

fn consistency(f: &DiscreteFunction, lambda: f64, ctx: &FunctionalContext) -> f64 {
    let u = solve_t_lambda(f, lambda, ctx).unwrap();
    let back = apply_t_lambda(&u, lambda, ctx);
    let d = back
        .values()
        .iter()
        .zip(f.values())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    d / f.sup_norm().max(1e-300)
}

#[test]
fn inverse_of_zero_is_zero() {
    let mesh = Mesh::new(1.0, 50).unwrap();
    let ctx = neg_ctx();
    let u = solve_t_lambda(&DiscreteFunction::zeros(mesh), 10.0, &ctx).unwrap();
    assert!(u.is_zero());
    let nl = Power { ctx };
    let b = b_lambda(
        &DiscreteFunction::zeros(mesh),
        &nl,
        2.0 * nl.lambda0(),
        &ctx,
    )
    .unwrap();
    assert!(b.is_zero());
}

#[test]
fn inverse_preserves_sign() {
    let mesh = Mesh::new(1.0, 80).unwrap();
    for q in [1.5, 2.0] {
        let ctx = FunctionalContext::new(3.0, q, 1.0, 1.0).unwrap();
        let f = DiscreteFunction::from_fn(mesh, |t| if t < 0.3 { 1.0 } else { 0.0 });
        let u = solve_t_lambda(&f, 5.0, &ctx).unwrap();
        assert!(u.values().iter().all(|&x| x > 0.0), "q = {q}");
    }
}

#[test]
fn inverse_rejects_nonpositive_lambda() {
    let mesh = Mesh::new(1.0, 10).unwrap();
    let f = DiscreteFunction::from_fn(mesh, |t| t);
    assert!(matches!(
        solve_t_lambda(&f, 0.0, &neg_ctx()),
        Err(Error::Domain(_))
    ));
}

#[test]
fn forward_inverse_round_trip() {
    let mesh = Mesh::new(1.0, 100).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for q in [2.0, 1.5] {
        let ctx = FunctionalContext::new(3.0, q, 0.0, 0.0).unwrap();
        for _ in 0..10 {
            let f =
                DiscreteFunction::new(mesh, (0..100).map(|_| rng.gen_range(-50.0..50.0)).collect())
                    .unwrap();
            let d = consistency(&f, rng.gen_range(1.0..200.0), &ctx);
            assert!(d < 1e-9, "q = {q}: {d}");
        }
    }
}

#[test]
fn cone_invariance_on_random_nonnegative_input() {
    let mesh = Mesh::new(1.0, 60).unwrap();
    let ctx = neg_ctx();
    let nl = Power { ctx };
    assert!(check_a1(&nl, mesh.n, ctx.p, ctx.q, 10.0, 200));
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..50 {
        let u = DiscreteFunction::new(mesh, (0..60).map(|_| rng.gen_range(0.0..2.0)).collect())
            .unwrap();
        let b = b_lambda(&u, &nl, 2.0 * nl.lambda0(), &ctx).unwrap();
        assert!(b.values().iter().all(|&x| x >= -1e-12));
        assert_eq!(Cone::of(b.values()), Cone::Pos);
    }
}

#[test]
fn truncation_branches_and_bound() {
    let mesh = Mesh::new(1.0, 5).unwrap();
    let ctx = neg_ctx();
    let v = vec![0.5, 1.0, 2.0, 1.0, 0.5];
    let tr = Truncated { ctx, v: v.clone() };
    let pw = Power { ctx };
    assert_eq!(tr.value(2, 1.5), pw.value(2, 1.5));
    assert_eq!(tr.value(2, -1.5), pw.value(2, -1.5));
    assert_eq!(tr.value(0, 3.0), pw.value(0, 0.5));
    assert_eq!(tr.value(0, 30.0), tr.value(0, 0.6));
    assert_eq!(tr.value(1, -7.0), pw.value(1, -1.0));
    let m = 2.0f64;
    let bound = ctx.alpha * m.powf(ctx.p - 1.0) + ctx.beta * m.powf(ctx.q - 1.0);
    for i in 0..mesh.n {
        for s in [-100.0, -1.0, 0.0, 0.3, 100.0] {
            assert!(tr.value(i, s).abs() <= bound * (1.0 + 1e-15));
        }
    }
}

#[test]
fn truncate_requires_positive_super_solution() {
    let mesh = Mesh::new(1.0, 19).unwrap();
    let ctx = neg_ctx();
    let zero_at_node = DiscreteFunction::from_fn(mesh, |t| (t - 0.5).abs());
    assert!(matches!(
        truncate(&zero_at_node, &ctx),
        Err(Error::Domain(_))
    ));
    // A tiny multiple of the first eigenfunction is a sub-solution here.
    let small = first_q(mesh, 2.0, 1e-3);
    assert!(matches!(
        truncate(&small, &ctx),
        Err(Error::SuperSolutionViolation { .. })
    ));
}

#[test]
fn positive_branch_and_its_mirror() {
    let mesh = Mesh::new(1.0, 100).unwrap();
    let ctx = neg_ctx();
    let nl = Power { ctx };
    let lambda = 2.0 * nl.lambda0();
    let opts = DescendOpts::default();
    let up = descend(&first_q(mesh, 2.0, 1e-2), &nl, lambda, &ctx, &opts).unwrap();
    let dn = descend(&first_q(mesh, 2.0, -1e-2), &nl, lambda, &ctx, &opts).unwrap();
    assert_eq!(up.outcome, FlowOutcome::Converged);
    let w1 = &up.last.eta;
    assert!(w1.values().iter().all(|&x| x > 0.0));
    assert!(up.last.j_value < 0.0);
    let w2 = &dn.last.eta;
    let d = w1
        .values()
        .iter()
        .zip(w2.values())
        .map(|(a, b)| (a + b).abs())
        .fold(0.0, f64::max);
    assert!(d < 1e-8 * w1.sup_norm(), "{d}");

    // Fixed point and critical point together.
    let b = b_lambda(w1, &nl, lambda, &ctx).unwrap();
    let gap = b
        .values()
        .iter()
        .zip(w1.values())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    assert!(gap <= 1e-7 * w1.sup_norm());
    assert!(evaluate(w1, &ctx).residual < 1e-4);
}

#[test]
fn trajectories_descend() {
    let mesh = Mesh::new(1.0, 60).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for q in [2.0, 1.5] {
        let ctx = FunctionalContext::new(3.0, q, 0.5 * lam(1, 3.0), 1.5 * lam(2, q)).unwrap();
        let nl = Power { ctx };
        for _ in 0..4 {
            let u0 =
                DiscreteFunction::new(mesh, (0..60).map(|_| rng.gen_range(-0.1..0.1)).collect())
                    .unwrap();
            let opts = DescendOpts {
                max_steps: 400,
                ..DescendOpts::default()
            };
            let tr = flow(&u0, &nl, 2.0 * nl.lambda0(), &ctx, &opts).unwrap();
            for w in tr.rows.windows(2) {
                assert!(w[1].j <= w[0].j, "q = {q}: {} -> {}", w[0].j, w[1].j);
            }
        }
    }
}

#[test]
fn step_budget_reports_not_converged() {
    let mesh = Mesh::new(1.0, 40).unwrap();
    let ctx = neg_ctx();
    let nl = Power { ctx };
    let opts = DescendOpts {
        max_steps: 2,
        ..DescendOpts::default()
    };
    let r = descend(
        &first_q(mesh, 2.0, 1e-2),
        &nl,
        2.0 * nl.lambda0(),
        &ctx,
        &opts,
    );
    assert!(matches!(r, Err(Error::NotConverged { best: Some(_), .. })));
}

#[test]
fn lambda_must_exceed_lambda0() {
    let mesh = Mesh::new(1.0, 10).unwrap();
    let ctx = neg_ctx();
    let nl = Power { ctx };
    let r = flow(
        &first_q(mesh, 2.0, 0.1),
        &nl,
        nl.lambda0(),
        &ctx,
        &DescendOpts::default(),
    );
    assert!(matches!(r, Err(Error::Domain(_))));
}

#[test]
fn trajectory_csv_header() {
    let mesh = Mesh::new(1.0, 30).unwrap();
    let ctx = neg_ctx();
    let nl = Power { ctx };
    let tr = flow(
        &first_q(mesh, 2.0, 1e-2),
        &nl,
        2.0 * nl.lambda0(),
        &ctx,
        &DescendOpts::default(),
    )
    .unwrap();
    let mut buf = Vec::new();
    tr.write_csv(&mut buf).unwrap();
    let s = String::from_utf8(buf).unwrap();
    assert!(s.starts_with("step,J,fixed_point_gap,cone\n"));
    assert_eq!(s.lines().count(), tr.rows.len() + 1);
}

#[test]
fn nodal_negative_solution() {
    let mesh = Mesh::new(1.0, 200).unwrap();
    let ctx = neg_ctx();
    let (u, rep) = find_nodal_negative(&ctx, mesh, &NegOpts::default()).unwrap();
    let fresh = evaluate(&u, &ctx);
    assert!(fresh.e < 0.0);
    assert!(fresh.residual < 1e-6);
    assert!(count_nodal(&u, 1e-8) >= 2);
    assert!(rep.truncated);
    assert!(rep.sandwich_defect.unwrap() <= 1e-9);
}

#[test]
fn nodal_negative_at_first_eigenvalue() {
    let mesh = Mesh::new(1.0, 120).unwrap();
    let ctx = FunctionalContext::new(3.0, 2.0, lam(1, 3.0), 1.5 * lam(2, 2.0)).unwrap();
    let (u, _) = find_nodal_negative(&ctx, mesh, &NegOpts::default()).unwrap();
    let fresh = evaluate(&u, &ctx);
    assert!(fresh.e < 0.0 && fresh.residual < 1e-6 && fresh.nodal_domains >= 2);
}

#[test]
fn no_positive_solution_below_first_q_eigenvalue() {
    let mesh = Mesh::new(1.0, 60).unwrap();
    let ctx = FunctionalContext::new(3.0, 2.0, 0.5 * lam(1, 3.0), 0.5 * lam(1, 2.0)).unwrap();
    assert!(find_nodal_negative(&ctx, mesh, &NegOpts::default()).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn round_trip_quadratic(vals in proptest::collection::vec(-10.0f64..10.0, 30), lambda in 0.5f64..100.0) {
        let mesh = Mesh::new(1.0, 30).unwrap();
        let ctx = FunctionalContext::new(2.5, 2.0, 0.0, 0.0).unwrap();
        let f = DiscreteFunction::new(mesh, vals).unwrap();
        prop_assume!(f.sup_norm() > 1e-6);
        prop_assert!(consistency(&f, lambda, &ctx) < 1e-9);
    }

    #[test]
    fn b_lambda_odd(vals in proptest::collection::vec(-1.0f64..1.0, 20)) {
        let mesh = Mesh::new(1.0, 20).unwrap();
        let ctx = neg_ctx();
        let nl = Power { ctx };
        let l = 2.0 * nl.lambda0();
        let u = DiscreteFunction::new(mesh, vals).unwrap();
        let a = b_lambda(&u, &nl, l, &ctx).unwrap();
        let b = b_lambda(&u.scaled(-1.0), &nl, l, &ctx).unwrap();
        let s = a.sup_norm().max(1e-12);
        for (x, y) in a.values().iter().zip(b.values()) {
            prop_assert!((x + y).abs() <= 1e-8 * s);
        }
    }
}
