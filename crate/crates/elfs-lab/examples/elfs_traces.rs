//! The electric-flow sampling process: each step measures the first
//! register of the current flow state, jumping from source x to y with
//! probability (1/2 R_x) sum_z f_yz^2 / w_yz. The process arrives on the
//! sinks with exactly the harmonic measure, and a coupled walk realizes
//! each step so that E[sum of escape times] = 2 HT_s and E[nu_1] = ET_s/2.
//!
//!     cargo run --example elfs_traces

use elfs_lab::electric::harmonic_measure;
use elfs_lab::elfs::{coupling_identities, elfs_chain, simulate_elfs};
use elfs_lab::graph::fixtures;
use elfs_lab::Result;

fn main() -> Result<()> {
    let g = fixtures::path4_mid();
    let chain = elfs_chain(&g)?;
    let si = chain.pos[g.s].unwrap();
    println!("mid-source 4-path: free vertices {:?}, sinks {:?}", chain.free, chain.sinks);
    println!("  electric hitting time EHT_s = {:.6}", chain.eht[si]);

    let hm = harmonic_measure(&g)?;
    for (k, &m) in g.sinks.iter().enumerate() {
        println!(
            "  sink {m}: arrival {:.6}, harmonic measure {:.6}",
            chain.arrival[si][k],
            hm.probability_of(m)
        );
    }

    // A few sampled traces.
    for seed in 0..3 {
        let tr = simulate_elfs(&g, seed, false)?;
        println!("  trace (seed {seed}): {:?}", tr.sources);
    }

    // Coupled traces: the exact identity plus the Monte Carlo check of the
    // first stopping time.
    let rep = coupling_identities(&g, 20_000, 1)?;
    println!(
        "  E[sum ET] = {:.6} = 2 HT_s = {:.6} (exact)",
        rep.exact_sum_et, rep.two_ht
    );
    println!(
        "  E[nu_1] from {} coupled traces: {:.4} +- {:.4}, ET_s/2 = {:.4}",
        rep.samples, rep.mc_nu1_mean, rep.mc_nu1_se, rep.et_half
    );

    // The separation that makes the process interesting: on the end-to-end
    // 64-path the walk needs Theta(n^2) steps but elfs arrives in O(log n).
    let path = fixtures::path_end_to_end(64);
    let chain = elfs_chain(&path)?;
    let sol = elfs_lab::electric::solve_electric(&path)?;
    let w = elfs_lab::walk::walk_quantities(&path, &sol);
    println!(
        "64-path: HT_s = {:.0}, EHT_s = {:.3} (6 ln 64 = {:.3})",
        w.ht,
        chain.eht[chain.pos[path.s].unwrap()],
        6.0 * 64.0f64.ln()
    );
    Ok(())
}
