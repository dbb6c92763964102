//! The generalized sine `sin_r` and its Pythagorean identity.

use pq_nodal::gtrig::{pi_r, GenSine};

fn main() -> pq_nodal::Result<()> {
    for r in [1.5, 2.0, 3.0, 4.0] {
        let s = GenSine::new(r)?;
        let mut worst: f64 = 0.0;
        for i in 0..=200 {
            let v = s.eval(i as f64 * s.pi_r() / 200.0);
            worst = worst.max((v.s.abs().powf(r) + v.ds.abs().powf(r) - 1.0).abs());
        }
        println!(
            "r = {r}: pi_r = {:.12}, quarter period by quadrature = {:.12}, identity defect = {worst:.2e}",
            pi_r(r)?,
            s.quarter_period_by_quadrature()
        );
    }
    Ok(())
}
