//! `R(p,q)` sits strictly between the first two `q`-eigenvalues.
//! Also prints `β_U*` at the first few `p`-eigenvalues.

use pq_nodal::spectral1d::{beta_upper_star, eigenvalue, rayleigh_ratio, verify_ratio_bounds};

fn main() -> pq_nodal::Result<()> {
    let (p, q, t) = (3.0, 2.0, 1.0);
    let r = rayleigh_ratio(p, q, t)?;
    println!(
        "R({p},{q}) = {:.15} (quadrature {:.15})",
        r.value, r.quadrature
    );
    println!(
        "lambda_1(q) = {:.12}, lambda_2(q) = {:.12}",
        eigenvalue(1, q, t)?,
        eigenvalue(2, q, t)?
    );

    for k in 1..=4 {
        let a = eigenvalue(k, p, t)?;
        println!(
            "beta_U*(lambda_{k}(p)) = {:.12}",
            beta_upper_star(a, p, q, t)?
        );
    }

    let grid: Vec<f64> = (1..=20).map(|j| 1.0 + 9.0 * j as f64 / 20.0).collect();
    let rep = verify_ratio_bounds(&grid, &grid, t)?;
    println!(
        "{} pairs checked, min relative margin {:.3e}, all hold: {}",
        rep.rows.len(),
        rep.min_margin(),
        rep.all_hold()
    );
    Ok(())
}
