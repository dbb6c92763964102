//! Evaluate the discrete energy on a mesh and compare its gradient with
//! central differences.

use pq_nodal::discrete::{evaluate, gradient, DiscreteFunction, FunctionalContext, Mesh};

fn main() -> pq_nodal::Result<()> {
    let mesh = Mesh::new(1.0, 100)?;
    let ctx = FunctionalContext::new(3.0, 2.0, 50.0, 20.0)?;
    let u = DiscreteFunction::from_fn(mesh, |x| {
        (2.0 * std::f64::consts::PI * x).sin() + 0.3 * x * (1.0 - x)
    });

    let rep = evaluate(&u, &ctx);
    println!("H = {:.10}, G = {:.10}, E = {:.10}", rep.h, rep.g, rep.e);
    println!(
        "residual = {:.3e}, nodal domains = {}",
        rep.residual, rep.nodal_domains
    );

    let g = gradient(&u, &ctx);
    let eps = 1e-6;
    let mut worst: f64 = 0.0;
    for i in [0, 25, 50, 75, 99] {
        let shift = |d: f64| {
            let mut v = u.values().to_vec();
            v[i] += d;
            ctx.energy(&DiscreteFunction::new(mesh, v).unwrap())
        };
        let fd = (shift(eps) - shift(-eps)) / (2.0 * eps);
        worst = worst.max((fd - g.values()[i]).abs() / g.values()[i].abs().max(1e-12));
    }
    println!("worst relative gradient mismatch at five nodes: {worst:.2e}");
    Ok(())
}
