//! Random regular graphs with a sink set: fitted constants for the
//! resistance / escape-time / hitting-time / electric-hitting-time scales,
//! the restricted-walk norm bound, and the semi-supervised labeling task
//! where elfs sampling beats plain walk sampling.
//!
//!     cargo run --example expander_ssl

use elfs_lab::expander::{expander_stats, ssl_label, LabeledGraph, SslMethod};
use elfs_lab::graph::random_regular_graph;
use elfs_lab::Result;

fn main() -> Result<()> {
    for (n, m) in [(64usize, 8usize), (256, 16), (1024, 32)] {
        let rep = expander_stats(n, 3, m, &[0, 1])?;
        println!("n = {n:4}, d = 3, m = {m:2}:");
        println!(
            "  delta = {:.4}   max R = {:.4}   ET const = {:.4}   HT const = {:.4}   EHT const = {:.4}",
            rep.delta_min, rep.max_r, rep.et_constant, rep.ht_constant, rep.eht_constant
        );
        println!(
            "  ||Q|| margin = {:.4}   per-step absorption >= {:.4}/m",
            rep.q_margin, rep.absorption_constant
        );
    }

    // Labeling: half the sinks labeled 1, half 0; compare the exact
    // harmonic label with the two Monte Carlo estimators and their costs.
    let g = random_regular_graph(256, 3, 16, 11)?;
    let labels: Vec<u8> = (0..16).map(|k| (k % 2) as u8).collect();
    let lg = LabeledGraph::new(g, labels)?;
    let exact = ssl_label(&lg, SslMethod::Exact, 0, 0)?;
    println!("ssl on n = 256: exact b = {:.6}, label {}", exact.b_tilde, exact.label);
    let walk = ssl_label(&lg, SslMethod::WalkMc, 5_000, 3)?;
    println!(
        "  walk-mc:  b = {:.4} +- {:.4}, total walk steps {:.0}",
        walk.b_tilde, walk.se, walk.walk_steps
    );
    let elfs = ssl_label(&lg, SslMethod::ElfsMc, 5_000, 3)?;
    println!(
        "  elfs-mc:  b = {:.4} +- {:.4}, total cost {:.0} (sum of sqrt(ET))",
        elfs.b_tilde, elfs.se, elfs.elfs_cost
    );
    Ok(())
}
