use pq_nodal::atlas::{
    classify, probe, sweep, write_outputs, AtlasOpts, BetaLTable, Rule, Verdict,
};
use pq_nodal::discrete::{evaluate, FunctionalContext, Mesh};
use pq_nodal::nehari::{curve_beta_l, CurveOpts, CurveSample, CurveStatus};
use pq_nodal::spectral1d::eigenvalue;

fn lam(k: usize, r: f64) -> f64 {
    eigenvalue(k, r, 1.0).unwrap()
}

fn base() -> FunctionalContext {
    FunctionalContext::new(3.0, 2.0, 0.0, 0.0).unwrap()
}

fn small_opts() -> AtlasOpts {
    AtlasOpts {
        n: 80,
        resolution: 6,
        probes: 3,
        beta2_overlay: false,
        threads: Some(1),
        curve: CurveOpts {
            n: 80,
            n_sub: 200,
            starts: 4,
            cross_check: false,
            ..CurveOpts::default()
        },
        ..AtlasOpts::default()
    }
}

fn sample(alpha: f64, value: f64) -> CurveSample {
    CurveSample {
        alpha,
        value,
        status: CurveStatus::Ok,
    }
}

#[test]
fn beta_l_lookup_is_conservative() {
    let t = BetaLTable::from_samples(&[
        sample(3.0, 10.0),
        sample(1.0, 12.0),
        CurveSample {
            alpha: 2.0,
            value: 0.0,
            status: CurveStatus::Failed,
        },
        sample(4.0, f64::INFINITY),
    ]);
    assert_eq!(t.samples, vec![(1.0, 12.0), (3.0, 10.0)]);
    assert_eq!(t.lower(1.0), Some(12.0));
    assert_eq!(t.lower(2.0), Some(10.0));
    assert_eq!(t.lower(0.5), None);
    assert_eq!(t.lower(3.5), None);
}

#[test]
fn point_verdicts() {
    let ctx = base();
    let opts = AtlasOpts {
        n: 200,
        ..small_opts()
    };
    let l2p = lam(2, 3.0);
    let grid = [l2p, 1.3 * l2p, 1.6 * l2p];
    let table = BetaLTable::from_samples(&curve_beta_l(&grid, &ctx, &opts.curve).unwrap());

    let none = classify(0.9 * l2p, 0.9 * lam(2, 2.0), &ctx, &table, &opts).unwrap();
    assert_eq!(
        (none.verdict, none.rule),
        (Verdict::Nonexistent, Rule::Nonexistence1d)
    );

    let pos = classify(1.3 * l2p, lam(1, 2.0), &ctx, &table, &opts).unwrap();
    assert_eq!(
        (pos.verdict, pos.rule),
        (Verdict::ExistsPosEnergy, Rule::PositiveEnergy)
    );
    assert_eq!(pos.nodal_domains, Some(2));
    assert_eq!(pos.method.as_deref(), Some("nehari"));

    let neg = classify(0.5 * lam(1, 3.0), 1.5 * lam(2, 2.0), &ctx, &table, &opts).unwrap();
    assert_eq!(
        (neg.verdict, neg.rule),
        (Verdict::ExistsNegEnergy, Rule::NegativeEnergyLowAlpha)
    );
    assert!(neg.energy.unwrap() < 0.0);

    // Between the proven regions nothing is claimed.
    let gap = classify(
        1.3 * l2p,
        0.5 * (lam(2, 2.0) + 2.0 * lam(2, 2.0)),
        &ctx,
        &table,
        &opts,
    )
    .unwrap();
    assert_ne!(gap.verdict, Verdict::Nonexistent);
}

#[test]
fn probes_fail_where_no_solution_exists() {
    let mesh = Mesh::new(1.0, 100).unwrap();
    for (a, b) in [(0.9, 0.9), (0.5, 0.99), (0.99, 0.2)] {
        let r = probe(a * lam(2, 3.0), b * lam(2, 2.0), &base(), mesh, 1e-6);
        assert!(!r.any_accepted(), "{r:?}");
    }
}

#[test]
fn small_sweep_is_structurally_sound_and_deterministic() {
    let ctx = base();
    let opts = small_opts();
    let mut a = sweep(&ctx, &opts).unwrap();
    let (l2p, l2q) = (lam(2, 3.0), lam(2, 2.0));
    assert_eq!(a.summary.contradictions, 0);
    let nonexistent = a
        .cells
        .iter()
        .filter(|c| c.verdict == Verdict::Nonexistent)
        .count();
    assert!(nonexistent > 0);
    assert_eq!(a.summary.probes.len(), nonexistent.min(3));
    assert_eq!(a.summary.probes_accepted, 0);
    for (i, &al) in a.alphas.iter().enumerate() {
        let mut seen_gap = false;
        for (j, &be) in a.betas.iter().enumerate() {
            let c = a.cell(i, j);
            assert_eq!(c.verdict == Verdict::Nonexistent, al <= l2p && be <= l2q);
            if c.verdict == Verdict::ExistsPosEnergy {
                assert!(al > l2p && be < c.beta_l.unwrap());
                // Downward closed within the column.
                assert!(!seen_gap, "column {i} gains a positive cell above a gap");
            } else if al > l2p && c.beta_l.is_some_and(|bl| be < bl) {
                seen_gap = true;
            }
            if let Some(u) = &c.solution {
                let r = evaluate(u, &ctx.with_params(al, be));
                assert!(r.residual <= opts.tol);
                let want_pos = c.verdict == Verdict::ExistsPosEnergy;
                assert_eq!(r.e > 0.0, want_pos);
            }
        }
    }

    let d1 = tempfile::tempdir().unwrap();
    let d2 = tempfile::tempdir().unwrap();
    write_outputs(&mut a, d1.path()).unwrap();
    let mut b = sweep(
        &ctx,
        &AtlasOpts {
            threads: Some(2),
            ..opts
        },
    )
    .unwrap();
    write_outputs(&mut b, d2.path()).unwrap();
    for f in [
        "atlas.csv",
        "summary.json",
        "overlays.json",
        "cells.json",
        "curve_beta_l.csv",
    ] {
        let x = std::fs::read(d1.path().join(f)).unwrap();
        let y = std::fs::read(d2.path().join(f)).unwrap();
        assert!(x == y, "{f} differs between runs");
    }
    let csv = std::fs::read_to_string(d1.path().join("atlas.csv")).unwrap();
    assert!(csv.starts_with(
        "alpha,beta,verdict,rule,certificate_path,energy,residual,nodal_domains,method\n"
    ));
    assert_eq!(csv.lines().count(), 37);
    for line in csv.lines().skip(1).filter(|l| l.contains("certificates/")) {
        let path = line.split(',').nth(4).unwrap();
        assert!(d1.path().join(path).exists());
    }
}

#[test]
fn zero_resolution_is_rejected() {
    let opts = AtlasOpts {
        resolution: 0,
        ..small_opts()
    };
    assert!(sweep(&base(), &opts).is_err());
}
