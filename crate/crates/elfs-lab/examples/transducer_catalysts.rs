//! Transducers with explicit catalysts: a unitary S transduces xi into tau
//! with complexity W when S(xi + w) = tau + w for some catalyst w with
//! ||w||^2 = W. The generic catalyst w = (Pi - Pi S Pi)^+ Pi S xi makes
//! this exact, and the walk unitary transduces the source star into the
//! reflected flow state with W = ET_s/(R_s d_s) - 1.
//!
//!     cargo run --example transducer_catalysts

use std::f64::consts::PI;

use elfs_lab::edge_space::build;
use elfs_lab::graph::fixtures;
use elfs_lab::transducer::{effective_gap_transducer, elfs_reflection_certificate};
use elfs_lab::walk::walk_quantities;
use elfs_lab::Result;

fn main() -> Result<()> {
    for (name, g) in fixtures::all_named() {
        let es = build(&g)?;
        let w = walk_quantities(&g, &es.sol);

        // Walk unitary as a transducer |phi_s> -> (2|f><f| - I)|phi_s>.
        let cert = elfs_reflection_certificate(&g, &es)?;
        println!("{name}:");
        println!(
            "  flow reflection: ||w||^2 = {:.6}, ET/(Rd) - 1 = {:.6}, residual {:.2e}",
            cert.w_norm_sq,
            w.et / w.rd - 1.0,
            cert.residual
        );

        // Partial rotations about the joint kernel of the two projectors:
        // each angle comes with its own exact certificate.
        for theta in [PI / 4.0, PI / 2.0, PI] {
            let rep =
                effective_gap_transducer(&es.projs.pi_star, &es.projs.pi_plus, &es.phi_s, theta)?;
            println!(
                "  rotation theta = {:5.3}: ||w||^2 = {:.6}, residual {:.2e}",
                theta, rep.certificate.w_norm_sq, rep.certificate.residual
            );
        }
    }
    Ok(())
}
