//! Negative-energy nodal solution from the descending flow, found on the
//! boundary between the positive and negative cones.

use pq_nodal::discrete::{FunctionalContext, Mesh};
use pq_nodal::flow::{find_nodal_negative, NegOpts};
use pq_nodal::spectral1d::eigenvalue;

fn main() -> pq_nodal::Result<()> {
    let (p, q, t) = (3.0, 2.0, 1.0);
    let alpha = 0.5 * eigenvalue(1, p, t)?;
    let beta = 1.5 * eigenvalue(2, q, t)?;
    let ctx = FunctionalContext::new(p, q, alpha, beta)?;
    let mesh = Mesh::new(t, 400)?;

    let (u, rep) = find_nodal_negative(&ctx, mesh, &NegOpts::default())?;
    println!(
        "E = {:.12}, residual = {:.2e}, nodal domains = {}",
        rep.functional.e, rep.functional.residual, rep.functional.nodal_domains
    );
    match rep.w1_energy {
        Some(e) => println!(
            "positive solution energy = {e:.6}, truncated = {}",
            rep.truncated
        ),
        None => println!("alpha is above the first eigenvalue; searched without truncation"),
    }
    println!(
        "bisection steps = {}, flow steps = {}",
        rep.bisection_steps, rep.flow_steps
    );
    if let Some(d) = rep.sandwich_defect {
        println!("sandwich defect = {d:.3e} (<= 0 means -w1 <= u <= w1)");
    }
    println!("max |u| = {:.6}", u.sup_norm());
    Ok(())
}
