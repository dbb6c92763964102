//! A single descending-flow trajectory, written as CSV to stdout.

use pq_nodal::discrete::{DiscreteFunction, FunctionalContext, Mesh};
use pq_nodal::flow::{flow, DescendOpts, Power};

fn main() -> pq_nodal::Result<()> {
    let ctx = FunctionalContext::new(3.0, 2.0, 5.0, 60.0)?;
    let mesh = Mesh::new(1.0, 100)?;
    let u0 = DiscreteFunction::from_fn(mesh, |x| 0.05 * (std::f64::consts::PI * x).sin());

    let lambda = 2.0 * ctx.alpha.max(ctx.beta);
    let tr = flow(&u0, &Power { ctx }, lambda, &ctx, &DescendOpts::default())?;
    eprintln!(
        "outcome {:?} after {} steps, J = {:.10}",
        tr.outcome, tr.last.step_count, tr.last.j_value
    );
    tr.write_csv(std::io::stdout().lock())
}
