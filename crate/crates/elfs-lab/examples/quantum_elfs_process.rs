//! Dense statevector simulation of the quantum elfs process on small
//! graphs: at each level a fresh flow state is prepared at the current
//! source and its first register measured. The per-path probabilities and
//! the accounted preparation cost are compared with the classical chain.
//!
//!     cargo run --example quantum_elfs_process

use elfs_lab::elfs::quantum_elfs_process;
use elfs_lab::graph::fixtures;
use elfs_lab::Result;

fn main() -> Result<()> {
    for (name, g) in [("single-edge", fixtures::single_edge()), ("path4-mid", fixtures::path4_mid())] {
        for depth in 1..=3usize {
            let rep = quantum_elfs_process(&g, depth, 400, false)?;
            println!("{name}, depth {depth}:");
            for pw in &rep.absorbed {
                println!("  absorbed along {:?} with probability {:.6}", pw.path, pw.probability);
            }
            println!(
                "  residual mass {:.6}, register deviation {:.2e}",
                rep.residual_mass, rep.register_deviation
            );
            println!(
                "  cost: measured {:.4}, predicted sum of sqrt(ET) {:.4}",
                rep.complexity_measured, rep.complexity_predicted
            );
        }
    }
    Ok(())
}
