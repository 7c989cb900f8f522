//! Preparing the unit electric-flow state from the source star. Two
//! routes: a fixed-point amplitude-amplification schedule that reaches
//! overlap 1 - eps given only a lower bound p_bar <= 1/(R_s d_s), and a
//! zero-error amplification on the stub-augmented graph whose initial
//! amplitude 1/sqrt(2 R-hat d-hat) is known exactly.
//!
//!     cargo run --example prepare_flow_state

use elfs_lab::elfs::{exact_elf_prepare, fixed_point_prepare};
use elfs_lab::graph::fixtures;
use elfs_lab::walk::walk_quantities;
use elfs_lab::Result;

fn main() -> Result<()> {
    let g = fixtures::path3();
    let sol = elfs_lab::electric::solve_electric(&g)?;
    let w = walk_quantities(&g, &sol);
    let p_bar = 1.0 / w.rd;

    println!("fixed-point schedules on the unit 3-path (p_bar = {p_bar}):");
    for eps in [1e-2, 1e-4, 1e-6] {
        let rep = fixed_point_prepare(&g, p_bar, eps)?;
        println!(
            "  eps = {eps:7.0e}: {} rounds, overlap {:.12}, transduction cost {:.4}",
            rep.schedule.l, rep.overlap, rep.w_measured
        );
    }

    // Zero-error route: with the stub strength eta = ET/(R d) the modified
    // product is 1 + ET exactly, so the amplitude is known and the
    // amplification terminates with a perfect flow state.
    let eta = (w.et / w.rd).max(1.0);
    let rep = exact_elf_prepare(&g, eta, 200, 2_000, 7)?;
    println!("zero-error amplification (eta = {eta}):");
    println!(
        "  alpha = {:.6}, fidelity {:.12}, {} / {} runs failed",
        rep.alpha, rep.aa.output_fidelity, rep.aa.mc_failures, rep.aa.mc_runs
    );
    println!(
        "  rotation calls: mean {:.3}, max {} (1/alpha = {:.3})",
        rep.aa.mc_mean_rotation_calls,
        rep.aa.mc_max_rotation_calls,
        1.0 / rep.alpha
    );
    Ok(())
}
