//! Acceptance gate: twelve numbered criteria, one per test, each printing a
//! single PASS/FAIL line (visible with `--nocapture` or on failure).

use std::f64::consts::PI;
use std::time::Instant;

use elfs_lab::edge_space::build;
use elfs_lab::electric::{harmonic_measure, modified_escape_identity};
use elfs_lab::elfs::{
    coupling_identities, elfs_chain, exact_elf_prepare, fixed_point_prepare, simulate_elfs_with,
};
use elfs_lab::estimator::{
    binary_search_estimate, estimate_known, qpe_estimate, qpe_probabilities, rotation_model,
    theta_from_counter,
};
use elfs_lab::expander::{expander_stats, ssl_label, LabeledGraph, SslMethod};
use elfs_lab::graph::{
    attach_source_stub, fixtures, random_connected_weighted, random_regular_graph, Graph,
};
use elfs_lab::linalg::{c, eye, CMat};
use elfs_lab::span_program::{
    coordinate_blocks, no_columns, positive_witness, pseudoinverse_identity, to_projector_instance,
    SpanProgram,
};
use elfs_lab::transducer::{effective_gap_transducer, elfs_reflection_certificate};
use elfs_lab::walk::walk_quantities;
use nalgebra::DVector;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn report(number: usize, name: &str, body: impl FnOnce() + std::panic::UnwindSafe) {
    match std::panic::catch_unwind(body) {
        Ok(()) => println!("criterion {number:2}: PASS  ({name})"),
        Err(e) => {
            println!("criterion {number:2}: FAIL  ({name})");
            std::panic::resume_unwind(e);
        }
    }
}

/// Fixtures plus 50 random connected weighted graphs with n <= 30.
fn graphs_for_catalyst_checks() -> Vec<Graph> {
    let mut gs: Vec<Graph> = fixtures::all_named().into_iter().map(|(_, g)| g).collect();
    for seed in 0..50u64 {
        let n = 5 + (seed as usize * 7) % 26;
        let extra = (seed as usize) % 5;
        let m = 1 + (seed as usize) % 3.min(n - 2).max(1);
        gs.push(random_connected_weighted(n, extra, m.min(n - 1), seed).unwrap());
    }
    gs
}

#[test]
fn criterion_01_flow_reflection_catalyst() {
    report(1, "walk unitary transduces the star state to the reflected flow state", || {
        let start = Instant::now();
        for g in graphs_for_catalyst_checks() {
            let es = build(&g).unwrap();
            let w = walk_quantities(&g, &es.sol);
            let cert = elfs_reflection_certificate(&g, &es).unwrap();
            assert!(cert.residual < 1e-9, "certificate residual {}", cert.residual);
            // The certified output is (2|f><f| - I)|phi_s>.
            let refl =
                (&es.f * es.f.adjoint()).map(|z| z * c(2.0)) - eye(es.basis.dim());
            let target = &refl * &es.phi_s;
            assert!((cert.tau.clone() - target).norm() < 1e-9);
            assert!(
                (cert.w_norm_sq - (w.et / w.rd - 1.0)).abs() < 1e-9,
                "catalyst size {} vs {}",
                cert.w_norm_sq,
                w.et / w.rd - 1.0
            );
        }
        assert!(start.elapsed().as_secs_f64() < 60.0, "took {:?}", start.elapsed());
    });
}

#[test]
fn criterion_02_partial_rotation_certificates() {
    report(2, "partial rotations about the kernel intersection carry exact catalysts", || {
        for (_, g) in fixtures::all_named() {
            let es = build(&g).unwrap();
            for theta in [0.0, PI / 4.0, PI / 2.0, PI] {
                let rep =
                    effective_gap_transducer(&es.projs.pi_star, &es.projs.pi_plus, &es.phi_s, theta)
                        .unwrap();
                assert!(rep.certificate.residual < 1e-9);
                assert!(
                    rep.intermediate_residual < 1e-9,
                    "(I - Delta)(psi + w) = P psi residual {}",
                    rep.intermediate_residual
                );
                if theta == PI {
                    assert!(rep.reflection.unwrap().residual < 1e-9);
                }
            }
        }
    });
}

#[test]
fn criterion_03_stub_resistance_product() {
    report(3, "source stub: exact resistance product and escape-time decomposition", || {
        let cases = [fixtures::single_edge(), fixtures::path3(), fixtures::skew_path(0.1)];
        for g in &cases {
            let sol = elfs_lab::electric::solve_electric(g).unwrap();
            let w = walk_quantities(g, &sol);
            for eta in [1.0, 2.0, (w.et / w.rd).max(1.0)] {
                let mg = attach_source_stub(g, eta).unwrap();
                let rep = modified_escape_identity(&mg).unwrap();
                assert!(
                    (rep.rd_sigma - rep.rd_sigma_closed_form).abs() < 1e-10,
                    "product {} vs closed form {}",
                    rep.rd_sigma,
                    rep.rd_sigma_closed_form
                );
                let sum: f64 = rep.decomposition.iter().sum();
                assert!((rep.et_sigma - sum).abs() < 1e-8);
            }
        }
        // Unit path on 3 vertices with a strength-2 stub: escape time 10.6.
        let mg = attach_source_stub(&fixtures::path3(), 2.0).unwrap();
        let rep = modified_escape_identity(&mg).unwrap();
        assert!((rep.et_sigma - 10.6).abs() < 1e-8, "stub escape time {}", rep.et_sigma);
    });
}

#[test]
fn criterion_04_phase_estimation_estimator() {
    report(4, "phase estimation reads exact angles and meets the 1/eps budget", || {
        let start = Instant::now();

        // Unit 3-path, counter length 6: theta = pi/6 sits exactly on the
        // readouts j = 1 and 5, each with probability 1/2.
        let g = fixtures::path3();
        let es = build(&g).unwrap();
        let rm = rotation_model(&es).unwrap();
        let probs = qpe_probabilities(&rm.r, &es.phi_s, 6);
        assert!((probs[1] - 0.5).abs() < 1e-10 && (probs[5] - 0.5).abs() < 1e-10);
        assert!((theta_from_counter(1, 6) - PI / 6.0).abs() < 1e-12);
        for seed in 0..50 {
            let rec = qpe_estimate(&g, 1.5, 6, seed).unwrap();
            assert!((rec.estimate - 2.0).abs() < 1e-10, "seed {seed}: {}", rec.estimate);
        }

        // Known-scale estimator: >= 2/3 of seeds within 10% of the exact
        // resistance product on each fixture.
        let cases = [
            (fixtures::single_edge(), 1.0, 1.0, 1.0),
            (fixtures::path3(), 3.0, 1.0, 2.0),
            (fixtures::skew_path(0.1), 4.0, 1.25, 2.5),
        ];
        for (g, et_bar, p, exact) in &cases {
            let mut hits = 0usize;
            for seed in 0..500u64 {
                let rec = estimate_known(g, *et_bar, *p, 0.1, seed).unwrap();
                if rec.success && (rec.estimate - exact).abs() <= 0.1 * exact {
                    hits += 1;
                }
            }
            assert!(hits >= 334, "{hits}/500 within 10% of {exact}");
        }

        // Walk-step budget scales linearly in 1/eps (log-log slope).
        let g = fixtures::path3();
        let epss = [0.2, 0.1, 0.05, 0.025];
        let pts: Vec<(f64, f64)> = epss
            .iter()
            .map(|&eps| {
                let rec = estimate_known(&g, 3.0, 1.0, eps, 0).unwrap();
                ((1.0 / eps).ln(), rec.walk_steps.ln())
            })
            .collect();
        let n = pts.len() as f64;
        let (sx, sy): (f64, f64) = (pts.iter().map(|p| p.0).sum(), pts.iter().map(|p| p.1).sum());
        let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
        let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
        let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        assert!((0.8..=1.2).contains(&slope), "budget slope {slope}");

        assert!(start.elapsed().as_secs_f64() < 300.0, "took {:?}", start.elapsed());
    });
}

#[test]
fn criterion_05_halving_search_guarantee() {
    report(5, "halving search lands in the constant-factor band with few iterations", || {
        let cases = [(fixtures::path3(), 3.0, 2.0), (fixtures::skew_path(0.1), 4.0, 2.5)];
        for (g, et_bar, rd) in &cases {
            let cap = (f64::log2(*et_bar).ceil() as usize) + 2;
            let mut hits = 0usize;
            for seed in 0..500u64 {
                let rec = binary_search_estimate(g, *et_bar, seed).unwrap();
                assert!(rec.iterations <= cap, "{} iterations > {cap}", rec.iterations);
                let v = rec.p_tilde * rd;
                if (7.0 / 18.0..=16.0).contains(&v) {
                    hits += 1;
                }
            }
            assert!(hits >= 334, "{hits}/500 in the guarantee band");
        }
    });
}

#[test]
fn criterion_06_elfs_arrival_is_harmonic() {
    report(6, "elfs arrival distribution equals harmonic measure, exactly and by MC", || {
        let mut gs: Vec<Graph> = fixtures::all_named().into_iter().map(|(_, g)| g).collect();
        for seed in 0..25u64 {
            let n = 6 + (seed as usize * 5) % 35;
            gs.push(random_connected_weighted(n, seed as usize % 4, 1 + seed as usize % 3, 100 + seed).unwrap());
        }
        for g in &gs {
            let chain = elfs_chain(g).unwrap();
            let hm = harmonic_measure(g).unwrap();
            let si = chain.pos[g.s].unwrap();
            for (k, &m) in g.sinks.iter().enumerate() {
                assert!(
                    (chain.arrival[si][k] - hm.probability_of(m)).abs() < 1e-8,
                    "arrival mismatch at sink {m}"
                );
            }
        }

        // Monte Carlo: 1e5 traces on the mid-source 4-path.
        let g = fixtures::path4_mid();
        let chain = elfs_chain(&g).unwrap();
        let si = chain.pos[g.s].unwrap();
        let n = 100_000usize;
        let mut counts = vec![0usize; g.sinks.len()];
        for i in 0..n {
            let tr = simulate_elfs_with(&g, &chain, i as u64, false).unwrap();
            let k = g.sinks.iter().position(|&m| m == *tr.sources.last().unwrap()).unwrap();
            counts[k] += 1;
        }
        for (k, &cnt) in counts.iter().enumerate() {
            let p = chain.arrival[si][k];
            let se = (p * (1.0 - p) / n as f64).sqrt();
            let diff = (cnt as f64 / n as f64 - p).abs();
            assert!(diff <= 4.0 * se, "sink {k}: |{diff}| > 4 SE");
        }
    });
}

#[test]
fn criterion_07_coupling_identities() {
    report(7, "escape-time sum equals twice the hitting time; first stop averages ET/2", || {
        for (_, g) in fixtures::all_named() {
            let rep = coupling_identities(&g, 200, 5).unwrap();
            assert!((rep.exact_sum_et - rep.two_ht).abs() < 1e-8);
        }
        let rep = coupling_identities(&fixtures::path4_mid(), 100_000, 9).unwrap();
        assert!(
            (rep.mc_nu1_mean - rep.et_half).abs() <= 4.0 * rep.mc_nu1_se,
            "nu_1 mean {} vs {} (se {})",
            rep.mc_nu1_mean,
            rep.et_half,
            rep.mc_nu1_se
        );
    });
}

#[test]
fn criterion_08_path_graph_separation() {
    report(8, "end-to-end 64-path: quadratic hitting time, logarithmic electric hitting time", || {
        let g = fixtures::path_end_to_end(64);
        let sol = elfs_lab::electric::solve_electric(&g).unwrap();
        let w = walk_quantities(&g, &sol);
        assert!((w.ht - 63.0 * 63.0).abs() < 1e-6, "HT {}", w.ht);
        let chain = elfs_chain(&g).unwrap();
        let eht = chain.eht[chain.pos[g.s].unwrap()];
        assert!(eht <= 6.0 * 64.0f64.ln(), "EHT {eht}");
    });
}

#[test]
fn criterion_09_fixed_point_preparation() {
    report(9, "fixed-point schedules reach 1 - eps overlap with near-optimal length", || {
        for g in [fixtures::single_edge(), fixtures::path3()] {
            let sol = elfs_lab::electric::solve_electric(&g).unwrap();
            let w = walk_quantities(&g, &sol);
            let p_bar = 1.0 / w.rd;
            for eps in [1e-2, 1e-4, 1e-6] {
                let rep = fixed_point_prepare(&g, p_bar, eps).unwrap();
                assert!(rep.overlap >= 1.0 - eps, "overlap {} at eps {eps}", rep.overlap);
                let ideal = (1.0 / p_bar.sqrt()) * (1.0 / eps).ln();
                let l = rep.schedule.l as f64;
                assert!(l <= 3.0 * ideal && l >= ideal / 3.0, "L = {l}, ideal {ideal}");
            }
        }
    });
}

#[test]
fn criterion_10_zero_error_amplification() {
    report(10, "zero-error amplification: perfect fidelity, rotation calls near 1/alpha", || {
        let g = fixtures::single_edge();
        // Stub strengths chosen so the initial amplitude is 1/2, 1/4, 1/8.
        for (eta, alpha) in [(1.0, 0.5), (7.0, 0.25), (31.0, 0.125)] {
            let rep = exact_elf_prepare(&g, eta, 400, 10_000, 13).unwrap();
            assert!((rep.alpha - alpha).abs() < 1e-12, "alpha {}", rep.alpha);
            assert!(rep.aa.output_fidelity >= 1.0 - 1e-9);
            assert_eq!(rep.aa.mc_failures, 0, "failures among {} runs", rep.aa.mc_runs);
            assert_eq!(rep.aa.mc_runs, 10_000);
            let calls = rep.aa.mc_mean_rotation_calls;
            assert!(
                calls <= 4.0 / alpha && calls >= 1.0 / (4.0 * alpha),
                "mean rotation calls {calls} vs 1/alpha = {}",
                1.0 / alpha
            );
        }
    });
}

#[test]
fn criterion_11_span_program_witnesses() {
    report(11, "span programs: pseudoinverse identity, overlap identity, catalyst bridge", || {
        let mut programs: Vec<(SpanProgram, Vec<usize>)> = vec![
            (elfs_lab::span_program::fixtures::or_pair(), vec![1, 0]),
            (elfs_lab::span_program::fixtures::or_pair(), vec![1, 1]),
            (elfs_lab::span_program::fixtures::two_by_three(), vec![1, 1, 0]),
            (elfs_lab::span_program::fixtures::two_by_three(), vec![0, 1, 1]),
            (elfs_lab::span_program::fixtures::two_by_three(), vec![1, 1, 1]),
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        while programs.len() < 55 {
            let v_dim = rng.gen_range(2..=8);
            let h_dim = rng.gen_range(v_dim..=10);
            let a = CMat::from_fn(v_dim, h_dim, |_, _| {
                Complex64::new(rng.gen::<f64>() * 2.0 - 1.0, 0.0)
            });
            let x: Vec<usize> = (0..h_dim).map(|_| rng.gen_range(0..2)).collect();
            if x.iter().all(|&b| b == 0) {
                continue;
            }
            let support = DVector::from_fn(h_dim, |i, _| {
                if x[i] == 1 {
                    Complex64::new(rng.gen::<f64>() + 0.2, 0.0)
                } else {
                    Complex64::new(0.0, 0.0)
                }
            });
            let tau = &a * &support;
            if tau.norm() < 1e-6 {
                continue;
            }
            match SpanProgram::new(a, tau, coordinate_blocks(h_dim), no_columns(h_dim)) {
                Ok(p) => programs.push((p, x)),
                Err(_) => continue,
            }
        }
        for (p, x) in &programs {
            // Both sides of the optimal-negative-witness identity (the
            // function itself errors if they differ by more than 1e-8).
            let rep = pseudoinverse_identity(p, x).unwrap();
            assert!((rep.w_tilde_minus - rep.pseudoinverse_side).abs() < 1e-8);
            // Positive inputs: the overlap identity (checked to 1e-9
            // inside) and the catalyst bridge W = w_tilde_minus - 1.
            if p.is_positive(x).unwrap() {
                let (w_plus, _) = positive_witness(p, x).unwrap();
                assert!(w_plus >= 1.0 - 1e-10);
                let inst = to_projector_instance(p, x).unwrap();
                assert!((inst.w_expected - (rep.w_tilde_minus - 1.0)).abs() < 1e-8);
            }
        }
    });
}

#[test]
fn criterion_12_expander_suite() {
    report(12, "expander grid: finite fitted constants, norm bound, agreeing SSL estimators", || {
        let sqrt_scale = [(64usize, 8usize, vec![0u64, 1, 2]), (256, 16, vec![0, 1]), (1024, 32, vec![0])];
        let linear_scale = [(64usize, 4usize, vec![0u64, 1, 2]), (256, 16, vec![0, 1]), (1024, 64, vec![0])];
        for regime in [&sqrt_scale, &linear_scale] {
            let mut prev: Option<elfs_lab::expander::ExpanderReport> = None;
            for (n, m, seeds) in regime.iter() {
                let rep = expander_stats(*n, 3, *m, seeds).unwrap();
                for v in [rep.max_r, rep.et_constant, rep.ht_constant, rep.eht_constant] {
                    assert!(v.is_finite() && v > 0.0);
                }
                assert!(rep.q_margin >= 0.0, "n={n} m={m}: restricted-norm margin {}", rep.q_margin);
                if let Some(prev) = &prev {
                    for (a, b) in [
                        (prev.max_r, rep.max_r),
                        (prev.et_constant, rep.et_constant),
                        (prev.ht_constant, rep.ht_constant),
                        (prev.eht_constant, rep.eht_constant),
                    ] {
                        assert!(b <= 2.0 * a, "constant drifted {a} -> {b} at n={n}");
                    }
                }
                prev = Some(rep);
            }
        }

        // SSL: exact vs both Monte Carlo estimators within 4 SE.
        let g = random_regular_graph(256, 3, 16, 11).unwrap();
        let labels: Vec<u8> = (0..16).map(|k| (k % 2) as u8).collect();
        let lg = LabeledGraph::new(g, labels).unwrap();
        let exact = ssl_label(&lg, SslMethod::Exact, 0, 0).unwrap();
        for method in [SslMethod::WalkMc, SslMethod::ElfsMc] {
            let mc = ssl_label(&lg, method, 10_000, 31).unwrap();
            assert!(
                (mc.b_tilde - exact.b_tilde).abs() <= 4.0 * mc.se,
                "{}: {} vs exact {} (se {})",
                mc.method,
                mc.b_tilde,
                exact.b_tilde,
                mc.se
            );
        }
    });
}
