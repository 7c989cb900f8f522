//! Solve the electric network of a graph and read off the walk quantities:
//! effective resistance, escape probability, escape / hitting / commute
//! times, and the harmonic measure on the sinks.
//!
//!     cargo run --example electric_network

use elfs_lab::electric::{harmonic_measure, solve_electric};
use elfs_lab::graph::fixtures;
use elfs_lab::walk::walk_quantities;
use elfs_lab::Result;

fn main() -> Result<()> {
    for (name, g) in fixtures::all_named() {
        let sol = solve_electric(&g)?;
        let w = walk_quantities(&g, &sol);
        println!("{name}: n = {}, source {}, sinks {:?}", g.n, g.s, g.sinks);
        println!("  R_s = {:.6}   p_escape = {:.6} (= 1/(R_s d_s))", w.r_s, w.p_escape);
        println!("  ET = {:.6}   HT = {:.6}   CT = {:.6}", w.et, w.ht, w.ct);

        let hm = harmonic_measure(&g)?;
        let probs: Vec<String> = g
            .sinks
            .iter()
            .map(|&m| format!("P[{m}] = {:.6}", hm.probability_of(m)))
            .collect();
        println!("  harmonic measure: {}", probs.join(", "));
    }
    Ok(())
}
