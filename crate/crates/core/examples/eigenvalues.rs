//! Dirichlet eigenvalues of the one-dimensional r-Laplacian.
//!
//! Run with `cargo run --example eigenvalues -- 3 1`.

use pq_nodal::spectral1d::{eigenfunction, eigenvalue};

fn main() -> pq_nodal::Result<()> {
    let mut args = std::env::args().skip(1);
    let r: f64 = args.next().map_or(3.0, |s| s.parse().expect("r"));
    let t: f64 = args.next().map_or(1.0, |s| s.parse().expect("T"));

    println!("r = {r}, T = {t}");
    for k in 1..=5 {
        let lam = eigenvalue(k, r, t)?;
        println!(
            "  lambda_{k} = {lam:.12}  (ratio to lambda_1: {:.6})",
            lam / eigenvalue(1, r, t)?
        );
    }

    // The second eigenfunction is odd about the midpoint.
    let phi = eigenfunction(2, r, t)?;
    for (x, v) in phi.samples(9) {
        println!("  phi_2({x:.4}) = {v:+.6}");
    }
    Ok(())
}
