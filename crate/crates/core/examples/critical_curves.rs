//! Sample the critical curves `β_L`, `β_1` and `β_2` on a small α-grid.

use pq_nodal::discrete::FunctionalContext;
use pq_nodal::nehari::{
    beta_1_star, beta_l_star, curve_beta_1, curve_beta_2, curve_beta_l, CurveOpts,
};
use pq_nodal::spectral1d::eigenvalue;

fn main() -> pq_nodal::Result<()> {
    let (p, q, t) = (3.0, 2.0, 1.0);
    let ctx = FunctionalContext::new(p, q, 0.0, 0.0)?;
    let opts = CurveOpts {
        starts: 6,
        ..CurveOpts::default()
    };
    let l1 = eigenvalue(1, p, t)?;
    let l2 = eigenvalue(2, p, t)?;

    println!(
        "beta_L* = {:.10}, beta_1* = {:.10}",
        beta_l_star(p, q, t)?,
        beta_1_star(p, q, t)?
    );

    let high: Vec<f64> = (0..5).map(|k| l2 * (1.0 + 0.5 * k as f64)).collect();
    for (l, b) in curve_beta_l(&high, &ctx, &opts)?
        .iter()
        .zip(curve_beta_1(&high, &ctx, &opts)?)
    {
        println!(
            "alpha = {:10.4}  beta_L = {:10.6} [{}]  beta_1 = {:10.6} [{}]",
            l.alpha,
            l.value,
            l.status.as_str(),
            b.value,
            b.status.as_str()
        );
    }

    let low: Vec<f64> = (0..4).map(|k| l1 * (0.25 + 0.5 * k as f64)).collect();
    for s in curve_beta_2(&low, &ctx, &opts)? {
        println!(
            "alpha = {:10.4}  beta_2 = {:10.6} [{}]",
            s.alpha,
            s.value,
            s.status.as_str()
        );
    }
    Ok(())
}
