//! Build the arc (directed-edge) space of a graph: the symmetric and
//! interior-star projectors, the walk unitary U = (2 Pi_* - I)(2 Pi_+ - I),
//! and the unit electric-flow state, then check the defining identities.
//!
//!     cargo run --example arc_space_walk

use elfs_lab::edge_space::{build, invariant_projector};
use elfs_lab::graph::fixtures;
use elfs_lab::walk::walk_quantities;
use elfs_lab::Result;

fn main() -> Result<()> {
    for (name, g) in fixtures::all_named() {
        let es = build(&g)?;
        let w = walk_quantities(&g, &es.sol);
        println!("{name}: {} arcs", es.basis.dim());

        // The flow state is symmetric-free and interior-star-free ...
        println!(
            "  |Pi_+ f| = {:.2e}   |Pi_* f| = {:.2e}",
            (&es.projs.pi_plus * &es.f).norm(),
            (&es.projs.pi_star * &es.f).norm()
        );
        // ... and overlaps the source star by exactly 1/sqrt(2 R_s d_s).
        let overlap = es.phi_s.dotc(&es.f).norm();
        println!(
            "  <phi_s|f> = {:.6}   1/sqrt(2 R_s d_s) = {:.6}",
            overlap,
            1.0 / (2.0 * w.rd).sqrt()
        );
        // The flow state lies in the joint kernel of the two reflections
        // (so U fixes it), and U also fixes every closed flow.
        let p = invariant_projector(&es.projs.pi_star, &es.projs.pi_plus)?;
        println!(
            "  |P f - f| = {:.2e}   |U Pi_cl - Pi_cl| = {:.2e}",
            (&p * &es.f - &es.f).norm(),
            (&es.u * &es.projs.pi_cl - &es.projs.pi_cl).norm()
        );
    }
    Ok(())
}
