//! Positive-energy nodal solution by minimizing over the nodal Nehari set.

use pq_nodal::discrete::{count_nodal, FunctionalContext, Mesh};
use pq_nodal::nehari::{default_seeds, minimize_m1, M1Opts};
use pq_nodal::spectral1d::eigenvalue;

fn main() -> pq_nodal::Result<()> {
    let (p, q, t) = (3.0, 2.0, 1.0);
    let alpha = 1.3 * eigenvalue(2, p, t)?;
    let beta = eigenvalue(1, q, t)?;
    let ctx = FunctionalContext::new(p, q, alpha, beta)?;
    let mesh = Mesh::new(t, 400)?;

    let (u, rep) = minimize_m1(&ctx, &default_seeds(mesh, p)?, &M1Opts::default())?;
    println!("alpha = {alpha:.6}, beta = {beta:.6}");
    println!(
        "E = {:.12}, residual = {:.2e}",
        rep.functional.e, rep.functional.residual
    );
    println!(
        "energy identity defect = {:.2e}",
        rep.energy_identity_defect
    );
    println!(
        "nodal domains = {}, {:?}",
        count_nodal(&u, 1e-8),
        rep.classification.subset
    );

    if let Some(path) = std::env::args().nth(1) {
        u.save_csv(path.as_ref())?;
        println!("wrote {path}");
    }
    Ok(())
}
