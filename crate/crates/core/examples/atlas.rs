//! A coarse region atlas of the (α, β)-plane.
//!
//! `cargo run --release --example atlas -- 12 out/atlas` writes the CSV and
//! JSON artifacts to the given directory.

use pq_nodal::atlas::{sweep, write_outputs, AtlasOpts, Verdict};
use pq_nodal::discrete::FunctionalContext;

fn main() -> pq_nodal::Result<()> {
    let mut args = std::env::args().skip(1);
    let resolution: usize = args.next().map_or(8, |s| s.parse().expect("resolution"));
    let ctx = FunctionalContext::new(3.0, 2.0, 0.0, 0.0)?;
    let opts = AtlasOpts {
        resolution,
        n: 120,
        probes: 4,
        ..AtlasOpts::default()
    };

    let mut atlas = sweep(&ctx, &opts)?;
    // β grows upward, α to the right.
    for j in (0..atlas.betas.len()).rev() {
        let row: String = (0..atlas.alphas.len())
            .map(|i| match atlas.cell(i, j).verdict {
                Verdict::Nonexistent => '.',
                Verdict::ExistsPosEnergy => '+',
                Verdict::ExistsNegEnergy => '-',
                Verdict::Unknown => '?',
            })
            .collect();
        println!("{:9.3} {row}", atlas.betas[j]);
    }
    println!("{:?}", atlas.summary.counts);

    if let Some(dir) = args.next() {
        write_outputs(&mut atlas, dir.as_ref())?;
        println!("artifacts in {dir}");
    }
    Ok(())
}
