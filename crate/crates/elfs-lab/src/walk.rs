//! Random-walk analytics: escape probability, hitting/escape/commute times
//! (exact voltage formulas and Monte Carlo), the fundamental-matrix
//! cross-checks, spectral gap, and walk traces.

use crate::electric::ElectricSolution;
use crate::graph::Graph;
use crate::{Error, Result};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

/// Walk quantities for (s, M) derived from one electric solution:
/// p = 1/(R_s d_s), ET = (1/R_s) sum v^2 d, HT = sum v d, CT = R_s W.
#[derive(Debug, Clone, Serialize)]
pub struct WalkStats {
    pub p_escape: f64,
    pub ht: f64,
    pub et: f64,
    pub ct: f64,
    pub r_s: f64,
    pub rd: f64,
}

pub fn walk_quantities(g: &Graph, sol: &ElectricSolution) -> WalkStats {
    let r_s = sol.r_s;
    let d_s = g.degrees[g.s];
    let rd = r_s * d_s;
    let mut ht = 0.0;
    let mut et_num = 0.0;
    for x in 0..g.n {
        ht += sol.voltages[x] * g.degrees[x];
        et_num += sol.voltages[x] * sol.voltages[x] * g.degrees[x];
    }
    WalkStats { p_escape: 1.0 / rd, ht, et: et_num / r_s, ct: r_s * g.total_weight, rd, r_s }
}

/// One absorbed trajectory. sigma is one past the last visit to s
/// (so sigma = 1 when s is visited only at t = 0).
#[derive(Debug, Clone)]
pub struct WalkTrace {
    pub xs: Vec<usize>,
    pub tau: usize,
    pub sigma: usize,
    pub seed: u64,
}

/// Sample one step of the walk from x.
pub fn walk_step(g: &Graph, x: usize, rng: &mut impl Rng) -> usize {
    let mut r = rng.gen_range(0.0..g.degrees[x]);
    for &(y, w) in &g.adj[x] {
        if r < w {
            return y;
        }
        r -= w;
    }
    g.adj[x].last().expect("nonempty adjacency").0
}

pub const DEFAULT_STEP_BUDGET: usize = 10_000_000;

pub fn simulate_walk(g: &Graph, seed: u64) -> Result<WalkTrace> {
    simulate_walk_from(g, g.s, seed)
}

pub fn simulate_walk_from(g: &Graph, start: usize, seed: u64) -> Result<WalkTrace> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    simulate_walk_with_rng(g, start, seed, &mut rng)
}

pub fn simulate_walk_with_rng(
    g: &Graph,
    start: usize,
    seed: u64,
    rng: &mut impl Rng,
) -> Result<WalkTrace> {
    let mut xs = vec![start];
    let mut x = start;
    while !g.is_sink(x) {
        if xs.len() > DEFAULT_STEP_BUDGET {
            return Err(Error::budget(format!(
                "walk exceeded {DEFAULT_STEP_BUDGET} steps; partial trace length {}",
                xs.len()
            )));
        }
        x = walk_step(g, x, rng);
        xs.push(x);
    }
    let tau = xs.len() - 1;
    let sigma = 1 + xs[..tau].iter().rposition(|&v| v == start).unwrap_or(0);
    Ok(WalkTrace { xs, tau, sigma, seed })
}

/// Commute statistic: first return to s AFTER hitting M. The chain keeps
/// walking past absorption until it comes back to the start.
pub fn simulate_commute(g: &Graph, seed: u64) -> Result<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = g.s;
    let mut t = 0usize;
    let mut hit_m = false;
    loop {
        if t > DEFAULT_STEP_BUDGET {
            return Err(Error::budget("commute walk exceeded step budget".to_string()));
        }
        x = walk_step(g, x, &mut rng);
        t += 1;
        if g.is_sink(x) {
            hit_m = true;
        }
        if hit_m && x == g.s {
            return Ok(t);
        }
    }
}

/// Fundamental-matrix quantities: expected visit counts before absorption,
/// the visit-count identities, and the Q-series escape time (regular graphs
/// only; the weighted general case uses the voltage formula).
#[derive(Debug, Clone, Serialize)]
pub struct FundamentalStats {
    /// visits[x] = expected number of visits to x before absorption (0 on sinks).
    pub visits: Vec<f64>,
    pub ht: f64,
    /// sum_t Q^t_{ss} = R_s d_s.
    pub rd: f64,
    /// (1/(d_s R_s)) sum_t (t+1) Q^t_{ss}; only valid for regular graphs.
    pub et_series: Option<f64>,
    /// Truncation horizon when computed by partial sums.
    pub t_max: Option<usize>,
}

pub enum SeriesMode {
    ExactInverse,
    Truncated(usize),
}

pub fn fundamental_matrix_stats(g: &Graph, mode: SeriesMode) -> Result<FundamentalStats> {
    let free = g.free_vertices();
    let k = free.len();
    let mut pos = vec![usize::MAX; g.n];
    for (i, &x) in free.iter().enumerate() {
        pos[x] = i;
    }
    let mut q = DMatrix::<f64>::zeros(k, k);
    for (i, &x) in free.iter().enumerate() {
        for &(y, w) in &g.adj[x] {
            if pos[y] != usize::MAX {
                q[(i, pos[y])] = w / g.degrees[x];
            }
        }
    }
    let si = pos[g.s];
    let (row, nss, wss) = match mode {
        SeriesMode::ExactInverse => {
            let n_mat = (DMatrix::<f64>::identity(k, k) - &q)
                .lu()
                .try_inverse()
                .ok_or_else(|| Error::numerical("fundamental matrix singular"))?;
            // sum_t (t+1) Q^t = (I-Q)^{-2}
            let n2 = &n_mat * &n_mat;
            (n_mat.row(si).transpose(), n_mat[(si, si)], n2[(si, si)])
        }
        SeriesMode::Truncated(t_max) => {
            let mut power = DVector::<f64>::zeros(k);
            power[si] = 1.0;
            let mut row = DVector::<f64>::zeros(k);
            let mut nss = 0.0;
            let mut wss = 0.0;
            for t in 0..=t_max {
                row += &power;
                nss += power[si];
                wss += (t as f64 + 1.0) * power[si];
                power = q.transpose() * power;
            }
            (row, nss, wss)
        }
    };
    let mut visits = vec![0.0; g.n];
    for (i, &x) in free.iter().enumerate() {
        visits[x] = row[i];
    }
    let ht: f64 = row.iter().sum();
    let et_series = if g.is_regular() {
        let d_s = g.degrees[g.s];
        // R_s d_s = N_ss, so ET = (1/(d_s R_s)) sum (t+1) Q^t_{ss} = W_ss / N_ss.
        let _ = d_s;
        Some(wss / nss)
    } else {
        None
    };
    let t_max = match mode {
        SeriesMode::ExactInverse => None,
        SeriesMode::Truncated(t) => Some(t),
    };
    Ok(FundamentalStats { visits, ht, rd: nss, et_series, t_max })
}

/// Spectral gap delta = 1 - lambda_2 of the (unabsorbed) walk matrix
/// P = D^{-1} W, computed from the symmetrized form D^{-1/2} W D^{-1/2}.
pub fn spectral_gap(g: &Graph) -> f64 {
    let n = g.n;
    let mut sym = DMatrix::<f64>::zeros(n, n);
    for &(u, v, w) in &g.edges {
        let val = w / (g.degrees[u] * g.degrees[v]).sqrt();
        sym[(u, v)] = val;
        sym[(v, u)] = val;
    }
    let eig = sym.symmetric_eigen();
    let mut evals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    evals.sort_by(|a, b| b.partial_cmp(a).unwrap());
    1.0 - evals[1]
}

/// Operator norm of the absorbing block Q (largest singular value).
pub fn q_block_norm(g: &Graph) -> f64 {
    let free = g.free_vertices();
    let k = free.len();
    let mut pos = vec![usize::MAX; g.n];
    for (i, &x) in free.iter().enumerate() {
        pos[x] = i;
    }
    let mut q = DMatrix::<f64>::zeros(k, k);
    for (i, &x) in free.iter().enumerate() {
        for &(y, w) in &g.adj[x] {
            if pos[y] != usize::MAX {
                q[(i, pos[y])] = w / g.degrees[x];
            }
        }
    }
    crate::linalg::op_norm_real(&q)
}

/// Entries Q^t_{sx} for t = 0..t_max (row of the free block's powers),
/// used for the mixing-style bound Q^t_{sx} <= 1/n + (1-delta)^t.
pub fn q_power_rows(g: &Graph, t_max: usize) -> Vec<Vec<f64>> {
    let free = g.free_vertices();
    let k = free.len();
    let mut pos = vec![usize::MAX; g.n];
    for (i, &x) in free.iter().enumerate() {
        pos[x] = i;
    }
    let mut q = DMatrix::<f64>::zeros(k, k);
    for (i, &x) in free.iter().enumerate() {
        for &(y, w) in &g.adj[x] {
            if pos[y] != usize::MAX {
                q[(i, pos[y])] = w / g.degrees[x];
            }
        }
    }
    let mut row = DVector::<f64>::zeros(k);
    row[pos[g.s]] = 1.0;
    let mut out = Vec::with_capacity(t_max + 1);
    for _ in 0..=t_max {
        out.push(row.iter().copied().collect::<Vec<f64>>());
        row = q.transpose() * row;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::electric::solve_electric;
    use crate::graph::{fixtures, random_connected_weighted};

    #[test]
    fn voltage_formulas_on_fixtures() {
        let cases: Vec<(crate::graph::Graph, [f64; 4])> = vec![
            (fixtures::single_edge(), [1.0, 1.0, 1.0, 2.0]),
            (fixtures::path3(), [0.5, 4.0, 3.0, 8.0]),
            (fixtures::path4_mid(), [0.75, 2.0, 5.0 / 3.0, 4.0]),
        ];
        for (g, [p, ht, et, ct]) in cases {
            let sol = solve_electric(&g).unwrap();
            let st = walk_quantities(&g, &sol);
            assert!((st.p_escape - p).abs() < 1e-10);
            assert!((st.ht - ht).abs() < 1e-10);
            assert!((st.et - et).abs() < 1e-10);
            assert!((st.ct - ct).abs() < 1e-10);
        }
        // skew path: p = 0.4, ET = 4
        let g = fixtures::skew_path(0.1);
        let sol = solve_electric(&g).unwrap();
        let st = walk_quantities(&g, &sol);
        assert!((st.p_escape - 0.4).abs() < 1e-10);
        assert!((st.et - 4.0).abs() < 1e-10);
    }

    #[test]
    fn chain_of_inequalities() {
        for seed in 0..10 {
            let g = random_connected_weighted(30, 20, 3, seed).unwrap();
            let sol = solve_electric(&g).unwrap();
            let st = walk_quantities(&g, &sol);
            let tol = 1e-9;
            assert!(1.0 / st.p_escape <= st.et + tol, "seed {seed}");
            assert!(st.et <= st.ht + tol, "seed {seed}");
            assert!(st.ht <= st.ct + tol, "seed {seed}");
        }
    }

    #[test]
    fn fundamental_matrix_matches_voltages() {
        let g = fixtures::path3();
        let sol = solve_electric(&g).unwrap();
        let st = walk_quantities(&g, &sol);
        let fm = fundamental_matrix_stats(&g, SeriesMode::ExactInverse).unwrap();
        // visits(s, x) = d_x v_x
        assert!((fm.visits[0] - 2.0).abs() < 1e-10);
        assert!((fm.visits[1] - 2.0).abs() < 1e-10);
        assert!((fm.ht - st.ht).abs() < 1e-10);
        assert!((fm.rd - st.rd).abs() < 1e-10);
        // path3 is not regular, so the Q-series escape time is not reported.
        assert!(fm.et_series.is_none());

        // Truncated partial sums converge to the same numbers.
        let fm_t = fundamental_matrix_stats(&g, SeriesMode::Truncated(400)).unwrap();
        assert!((fm_t.ht - st.ht).abs() < 1e-8);
        assert!((fm_t.rd - st.rd).abs() < 1e-8);

        // On regular graphs the series form (1/N_ss) sum (t+1) Q^t_{ss}
        // reproduces the voltage escape time.
        for g in [fixtures::single_edge(), fixtures::cycle6()] {
            let sol = solve_electric(&g).unwrap();
            let st = walk_quantities(&g, &sol);
            let fm = fundamental_matrix_stats(&g, SeriesMode::ExactInverse).unwrap();
            assert!((fm.et_series.unwrap() - st.et).abs() < 1e-10);
            assert!((fm.rd - st.rd).abs() < 1e-10);
        }

        // Weighted graphs still satisfy visits = d_x v_x, but the Q-series
        // escape time is only reported for regular graphs.
        let g = fixtures::skew_path(0.1);
        let sol = solve_electric(&g).unwrap();
        let fm = fundamental_matrix_stats(&g, SeriesMode::ExactInverse).unwrap();
        for x in 0..g.n {
            assert!((fm.visits[x] - g.degrees[x] * sol.voltages[x]).abs() < 1e-10);
        }
        assert!(fm.et_series.is_none());
    }

    #[test]
    fn monte_carlo_agrees_with_exact() {
        let g = fixtures::path3();
        let n_samp = 40_000usize;
        let (mut tau_sum, mut sigma_sum, mut esc) = (0.0, 0.0, 0usize);
        for seed in 0..n_samp as u64 {
            let tr = simulate_walk(&g, seed).unwrap();
            tau_sum += tr.tau as f64;
            sigma_sum += tr.sigma as f64;
            if tr.xs[1] != g.s && !tr.xs[1..tr.tau].contains(&g.s) {
                esc += 1;
            }
        }
        let ht_mc = tau_sum / n_samp as f64;
        let sigma_mc = sigma_sum / n_samp as f64;
        assert!((ht_mc - 4.0).abs() < 0.1, "HT mc {ht_mc}");
        // E[sigma] = ET + 1? No: sigma = 1 + last visit time; E = ET.
        assert!((sigma_mc - 3.0).abs() < 0.1, "sigma mc {sigma_mc}");
        let _ = esc;

        // Commute time on the single edge: CT = 2 exactly.
        let g = fixtures::single_edge();
        for seed in 0..5 {
            assert_eq!(simulate_commute(&g, seed).unwrap(), 2);
        }
    }

    #[test]
    fn spectral_and_block_norm() {
        let g = fixtures::cycle6();
        // C6: lambda_2 = cos(pi/3) = 1/2, delta = 1/2.
        assert!((spectral_gap(&g) - 0.5).abs() < 1e-10);
        assert!(q_block_norm(&g) < 1.0);
        let rows = q_power_rows(&g, 10);
        assert!((rows[0].iter().sum::<f64>() - 1.0).abs() < 1e-12);
        for t in 1..rows.len() {
            let mass: f64 = rows[t].iter().sum();
            let prev: f64 = rows[t - 1].iter().sum();
            assert!(mass <= prev + 1e-12, "survival mass grows at t={t}");
        }
    }
}
