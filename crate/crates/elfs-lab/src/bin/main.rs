//! Command-line front end. Every subcommand prints one JSON document to
//! stdout (or to --out) and exits 0 on success, 2 on a validation error,
//! and 3 on a numerical-tolerance or budget failure.

use clap::{Parser, Subcommand};
use elfs_lab::elfs::{
    coupling_identities, elfs_chain, exact_elf_prepare, fixed_point_prepare, simulate_elfs_with,
};
use elfs_lab::estimator::{binary_search_estimate, estimate_known};
use elfs_lab::expander::{expander_stats, ssl_label, LabeledGraph, SslMethod};
use elfs_lab::graph::{fixtures, Graph};
use elfs_lab::{Error, Result};
use serde_json::json;
use std::path::PathBuf;

#[derive(Parser)]
#[command(name = "elfs-lab", about = "Electric networks, quantum walks, and electric-flow sampling")]
struct Cli {
    /// Worker threads (reserved; all computations run deterministically on one).
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
    /// Write the JSON result to this file instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Exact electric and walk quantities of a graph file.
    Analyze {
        #[arg(long)]
        graph: PathBuf,
    },
    /// Estimate the resistance product R_s * d_s by phase estimation.
    EstimateResistance {
        #[arg(long)]
        graph: PathBuf,
        /// Upper bound on the escape time ET_s.
        #[arg(long = "et-bound")]
        et_bound: f64,
        /// Target multiplicative accuracy of the refinement stage.
        #[arg(long, default_value_t = 0.1)]
        eps: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Accepted for compatibility; output is always JSON.
        #[arg(long)]
        json: bool,
    },
    /// Prepare the electric-flow state: fixed-point schedule or zero-error
    /// amplification.
    PrepareElf {
        #[arg(long)]
        graph: PathBuf,
        /// "fixed-point" (default) or "exact".
        #[arg(long, default_value = "fixed-point")]
        mode: String,
        /// Fixed-point mode: lower bound on 1/(R_s d_s); defaults to the
        /// exact value.
        #[arg(long)]
        p_bar: Option<f64>,
        /// Fixed-point mode: target infidelity.
        #[arg(long, default_value_t = 1e-4)]
        eps: f64,
        /// Exact mode: stub strength; defaults to ET_s/(R_s d_s).
        #[arg(long)]
        eta: Option<f64>,
        /// Exact mode: Monte Carlo repetitions of the amplification.
        #[arg(long, default_value_t = 1000)]
        runs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        json: bool,
    },
    /// Exact elfs chain quantities plus sampled traces.
    SimulateElfs {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        /// Couple each trace to an underlying walk trajectory and report
        /// the stopping-time identities.
        #[arg(long)]
        coupled: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        json: bool,
    },
    /// Fitted expander constants over seeded random regular graphs.
    ExpanderReport {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        d: usize,
        #[arg(long)]
        m: usize,
        /// Comma-separated list of generator seeds.
        #[arg(long, value_delimiter = ',', default_value = "0")]
        seeds: Vec<u64>,
        #[arg(long)]
        json: bool,
    },
    /// Label the source from binary sink labels.
    Ssl {
        #[arg(long)]
        graph: PathBuf,
        /// Comma-separated binary labels, one per sink.
        #[arg(long, value_delimiter = ',')]
        labels: Vec<u8>,
        /// Override the source vertex from the graph file.
        #[arg(long)]
        source: Option<usize>,
        /// exact | walk-mc | elfs-mc | quantum-sim
        #[arg(long, default_value = "exact")]
        method: String,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run the identity suite on the built-in fixtures.
    Verify,
}

fn load_graph(path: &PathBuf) -> Result<Graph> {
    Graph::parse(&std::fs::read_to_string(path)?)
}

fn run(cli: &Cli) -> Result<serde_json::Value> {
    match &cli.cmd {
        Cmd::Analyze { graph } => {
            let g = load_graph(graph)?;
            let sol = elfs_lab::electric::solve_electric(&g)?;
            let w = elfs_lab::walk::walk_quantities(&g, &sol);
            let hm = elfs_lab::electric::harmonic_measure(&g)?;
            Ok(json!({
                "R_s": w.r_s,
                "HT": w.ht,
                "ET": w.et,
                "CT": w.ct,
                "p": w.p_escape,
                "harmonic_measure": g.sinks.iter()
                    .map(|&m| (m.to_string(), json!(hm.probability_of(m))))
                    .collect::<serde_json::Map<String, serde_json::Value>>(),
            }))
        }
        Cmd::EstimateResistance { graph, et_bound, eps, seed, .. } => {
            let g = load_graph(graph)?;
            let coarse = binary_search_estimate(&g, *et_bound, *seed)?;
            let refined = estimate_known(&g, *et_bound, coarse.rd_estimate, *eps, seed.wrapping_add(1))?;
            Ok(json!({
                "coarse": coarse,
                "refined": refined,
                "estimate": refined.estimate,
                "walk_steps_total": coarse.walk_steps + refined.walk_steps,
            }))
        }
        Cmd::PrepareElf { graph, mode, p_bar, eps, eta, runs, seed, .. } => {
            let g = load_graph(graph)?;
            let sol = elfs_lab::electric::solve_electric(&g)?;
            let w = elfs_lab::walk::walk_quantities(&g, &sol);
            match mode.as_str() {
                "fixed-point" => {
                    let p_bar = p_bar.unwrap_or(1.0 / w.rd);
                    let rep = fixed_point_prepare(&g, p_bar, *eps)?;
                    Ok(json!({
                        "mode": "fixed-point",
                        "p_bar": p_bar,
                        "eps": eps,
                        "rounds": rep.schedule.l,
                        "overlap": rep.overlap,
                        "w_measured": rep.w_measured,
                        "step_ws": rep.step_ws,
                    }))
                }
                "exact" => {
                    let eta = eta.unwrap_or((w.et / w.rd).max(1.0));
                    let rep = exact_elf_prepare(&g, eta, 64, *runs, *seed)?;
                    Ok(serde_json::to_value(&rep)?)
                }
                other => Err(Error::validation(format!("unknown mode '{other}'"))),
            }
        }
        Cmd::SimulateElfs { graph, samples, coupled, seed, .. } => {
            let g = load_graph(graph)?;
            let chain = elfs_chain(&g)?;
            let mut out = chain.to_json();
            let si = chain.pos[g.s].ok_or_else(|| Error::validation("source is a sink"))?;
            let exact_sum_et: f64 =
                (0..chain.free.len()).map(|j| chain.visits[(si, j)] * chain.et[j]).sum();
            out["expected_sum_et"] = json!(exact_sum_et);
            let mut counts = vec![0usize; g.sinks.len()];
            for i in 0..*samples {
                let tr = simulate_elfs_with(&g, &chain, seed.wrapping_add(i as u64), false)?;
                let last = *tr.sources.last().unwrap();
                let k = g.sinks.iter().position(|&m| m == last).unwrap();
                counts[k] += 1;
            }
            out["mc_arrival"] = json!(counts
                .iter()
                .map(|&c| c as f64 / *samples as f64)
                .collect::<Vec<_>>());
            out["samples"] = json!(samples);
            if *coupled {
                out["coupling"] = serde_json::to_value(coupling_identities(&g, *samples, *seed)?)?;
            }
            Ok(out)
        }
        Cmd::ExpanderReport { n, d, m, seeds, .. } => {
            Ok(serde_json::to_value(expander_stats(*n, *d, *m, seeds)?)?)
        }
        Cmd::Ssl { graph, labels, source, method, samples, seed } => {
            let mut g = load_graph(graph)?;
            if let Some(s) = *source {
                g = Graph::new(g.n, g.edges.clone(), s, g.sinks.clone())?;
            }
            let lg = LabeledGraph::new(g, labels.clone())?;
            let rep = ssl_label(&lg, SslMethod::parse(method)?, *samples, *seed)?;
            Ok(serde_json::to_value(&rep)?)
        }
        Cmd::Verify => verify(),
    }
}

/// Core identity checks on every named fixture. Any failing identity
/// surfaces as a numerical error (exit 3); the JSON lists what passed.
fn verify() -> Result<serde_json::Value> {
    let mut checks = Vec::new();
    let mut push = |name: String| checks.push(json!({"check": name, "pass": true}));
    for (name, g) in fixtures::all_named() {
        let sol = elfs_lab::electric::solve_electric(&g)?;
        let w = elfs_lab::walk::walk_quantities(&g, &sol);
        if (w.p_escape - 1.0 / w.rd).abs() > 1e-10 {
            return Err(Error::numerical(format!("{name}: escape probability != 1/(R d)")));
        }
        push(format!("{name}: electric solve and escape identity"));

        let es = elfs_lab::edge_space::build(&g)?;
        let overlap = es.phi_s.dotc(&es.f).norm();
        if (overlap - 1.0 / (2.0 * w.rd).sqrt()).abs() > 1e-9 {
            return Err(Error::numerical(format!("{name}: flow-state overlap")));
        }
        push(format!("{name}: arc space, walk unitary, flow-state overlap"));

        let cert = elfs_lab::transducer::elfs_reflection_certificate(&g, &es)?;
        if (cert.w_norm_sq - (w.et / w.rd - 1.0)).abs() > 1e-9 {
            return Err(Error::numerical(format!("{name}: catalyst size != ET/(Rd) - 1")));
        }
        push(format!("{name}: flow-reflection catalyst"));

        let chain = elfs_chain(&g)?;
        let hm = elfs_lab::electric::harmonic_measure(&g)?;
        let si = chain.pos[g.s].unwrap();
        for (k, &m) in g.sinks.iter().enumerate() {
            if (chain.arrival[si][k] - hm.probability_of(m)).abs() > 1e-8 {
                return Err(Error::numerical(format!("{name}: elfs arrival != harmonic measure")));
            }
        }
        push(format!("{name}: elfs arrival equals harmonic measure"));

        let rep = coupling_identities(&g, 200, 1)?;
        if (rep.exact_sum_et - rep.two_ht).abs() > 1e-8 {
            return Err(Error::numerical(format!("{name}: expected-ET identity")));
        }
        push(format!("{name}: expected sum of escape times equals 2 HT"));
    }
    Ok(json!({"checks": checks, "all_pass": true}))
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            // Usage / unknown-flag problems are validation errors (exit 2),
            // but let --help and --version print normally.
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                e.print().ok();
                std::process::exit(0);
            }
            e.print().ok();
            std::process::exit(2);
        }
    };
    match run(&cli) {
        Ok(value) => {
            let text = serde_json::to_string_pretty(&value).expect("serializable");
            match &cli.out {
                Some(path) => {
                    if let Err(e) = std::fs::write(path, text + "\n") {
                        eprintln!("error: {e}");
                        std::process::exit(2);
                    }
                }
                None => {
                    // Ignore broken pipes (e.g. output piped into `head`).
                    use std::io::Write;
                    let _ = writeln!(std::io::stdout(), "{text}");
                }
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            let code = match e {
                Error::Validation(_) | Error::Io(_) | Error::Json(_) => 2,
                Error::Numerical(_) | Error::Budget(_) => 3,
            };
            std::process::exit(code);
        }
    }
}
