//! Electric-network solver: voltages, unit electric flow, effective
//! resistance, dissipated energy, harmonic measure (exact walk-arrival
//! distribution), and the source-stub escape-time decomposition.

use crate::graph::{Graph, ModifiedGraph};
use crate::{Error, Result, SOLVER_TOL};
use nalgebra::{DMatrix, DVector};
use serde::Serialize;

/// Voltages and the unit electric flow for (s, M). Voltages are zero on M
/// and kept explicitly in the vector for stable indexing; R_s = v_s.
#[derive(Debug, Clone)]
pub struct ElectricSolution {
    pub s: usize,
    pub sinks: Vec<usize>,
    /// v_x for every vertex, v = 0 on sinks.
    pub voltages: DVector<f64>,
    /// Effective resistance R_s = v_s.
    pub r_s: f64,
}

impl ElectricSolution {
    /// Flow on the ordered arc (x, y): f_xy = w_xy (v_x - v_y).
    pub fn flow(&self, g: &Graph, x: usize, y: usize) -> f64 {
        g.weight(x, y) * (self.voltages[x] - self.voltages[y])
    }

    /// Dissipated energy (1/2) sum_xy f_xy^2 / w_xy over ordered arcs;
    /// equals R_s for the electric flow.
    pub fn energy(&self, g: &Graph) -> f64 {
        let mut e = 0.0;
        for &(u, v, w) in &g.edges {
            let f = w * (self.voltages[u] - self.voltages[v]);
            e += f * f / w;
        }
        e
    }

    /// Net outflow at x: sum_y f_xy. The unit-flow demand is +1 at s,
    /// 0 at interior vertices.
    pub fn divergence(&self, g: &Graph, x: usize) -> f64 {
        g.adj[x]
            .iter()
            .map(|&(y, w)| w * (self.voltages[x] - self.voltages[y]))
            .sum()
    }

    /// Largest deviation of the flow from the unit s-M demand.
    pub fn demand_residual(&self, g: &Graph) -> f64 {
        let mut worst: f64 = (self.divergence(g, self.s) - 1.0).abs();
        for x in 0..g.n {
            if x != self.s && !g.is_sink(x) {
                worst = worst.max(self.divergence(g, x).abs());
            }
        }
        // Total absorption at the sinks is 1 (flow INTO M).
        let into_m: f64 = self.sinks.iter().map(|&m| -self.divergence(g, m)).sum();
        worst.max((into_m - 1.0).abs())
    }

    pub fn to_json(&self, g: &Graph) -> serde_json::Value {
        let arcs: Vec<serde_json::Value> = g
            .edges
            .iter()
            .map(|&(u, v, w)| {
                serde_json::json!({"u": u, "v": v, "w": w, "flow": w * (self.voltages[u] - self.voltages[v])})
            })
            .collect();
        serde_json::json!({
            "source": self.s,
            "sinks": self.sinks,
            "voltages": self.voltages.as_slice(),
            "r_s": self.r_s,
            "flow_arcs": arcs,
            "demand_residual": self.demand_residual(g),
            "energy": self.energy(g),
        })
    }
}

/// Arrival (harmonic) measure over the sink set.
#[derive(Debug, Clone, Serialize)]
pub struct ArrivalDistribution {
    pub sinks: Vec<usize>,
    pub probabilities: Vec<f64>,
}

impl ArrivalDistribution {
    pub fn probability_of(&self, m: usize) -> f64 {
        self.sinks
            .iter()
            .position(|&x| x == m)
            .map(|i| self.probabilities[i])
            .unwrap_or(0.0)
    }
}

/// Graph Laplacian restricted to the free vertices, solved against the unit
/// source at s with v = 0 on the sinks. Dense Cholesky; the restricted
/// Laplacian is positive definite exactly when every free vertex reaches M.
pub fn solve_electric(g: &Graph) -> Result<ElectricSolution> {
    let free = g.free_vertices();
    let k = free.len();
    let mut pos = vec![usize::MAX; g.n];
    for (i, &x) in free.iter().enumerate() {
        pos[x] = i;
    }
    let mut lap = DMatrix::<f64>::zeros(k, k);
    for (i, &x) in free.iter().enumerate() {
        lap[(i, i)] = g.degrees[x];
        for &(y, w) in &g.adj[x] {
            if pos[y] != usize::MAX {
                lap[(i, pos[y])] -= w;
            }
        }
    }
    let mut rhs = DVector::<f64>::zeros(k);
    rhs[pos[g.s]] = 1.0;
    let chol = lap.clone().cholesky().ok_or_else(|| {
        Error::numerical("restricted Laplacian not positive definite: a free component is stranded from the sinks".to_string())
    })?;
    let vf = chol.solve(&rhs);
    let resid = (&lap * &vf - &rhs).norm() / rhs.norm();
    if resid > SOLVER_TOL * 1e2 {
        return Err(Error::numerical(format!("Dirichlet solve residual {resid:.2e}")));
    }
    let mut voltages = DVector::<f64>::zeros(g.n);
    for (i, &x) in free.iter().enumerate() {
        voltages[x] = vf[i];
    }
    let r_s = voltages[g.s];
    Ok(ElectricSolution { s: g.s, sinks: g.sinks.clone(), voltages, r_s })
}

/// Exact absorption probabilities of the random walk from s, one linear
/// solve per sink column of the absorbing chain.
pub fn harmonic_measure(g: &Graph) -> Result<ArrivalDistribution> {
    harmonic_measure_from(g, g.s)
}

/// Harmonic measure for an arbitrary start vertex.
pub fn harmonic_measure_from(g: &Graph, start: usize) -> Result<ArrivalDistribution> {
    if g.is_sink(start) {
        let probabilities = g.sinks.iter().map(|&m| if m == start { 1.0 } else { 0.0 }).collect();
        return Ok(ArrivalDistribution { sinks: g.sinks.clone(), probabilities });
    }
    let free = g.free_vertices();
    let k = free.len();
    let mut pos = vec![usize::MAX; g.n];
    for (i, &x) in free.iter().enumerate() {
        pos[x] = i;
    }
    // (I - Q) H = B with Q the free-to-free walk block, B free-to-sink.
    let mut a = DMatrix::<f64>::identity(k, k);
    let mut b = DMatrix::<f64>::zeros(k, g.sinks.len());
    for (i, &x) in free.iter().enumerate() {
        for &(y, w) in &g.adj[x] {
            let p = w / g.degrees[x];
            if pos[y] != usize::MAX {
                a[(i, pos[y])] -= p;
            } else {
                let j = g.sinks.binary_search(&y).expect("sink index");
                b[(i, j)] += p;
            }
        }
    }
    let lu = a.lu();
    let h = lu
        .solve(&b)
        .ok_or_else(|| Error::numerical("absorbing-chain system singular"))?;
    let probabilities: Vec<f64> = (0..g.sinks.len()).map(|j| h[(pos[start], j)]).collect();
    let total: f64 = probabilities.iter().sum();
    if (total - 1.0).abs() > 1e-10 {
        return Err(Error::numerical(format!("harmonic measure sums to {total}")));
    }
    Ok(ArrivalDistribution { sinks: g.sinks.clone(), probabilities })
}

/// Both sides of the modified-graph escape-time decomposition
/// ET_sigma = R_sigma d_sigma + eta (R_s^2 / R_sigma) d_s + (R_s / R_sigma) ET_s
/// plus the companion identities and inequality.
#[derive(Debug, Clone, Serialize)]
pub struct StubEscapeReport {
    pub eta: f64,
    pub r_sigma: f64,
    pub d_sigma: f64,
    /// R_sigma * d_sigma, directly from the modified graph's solver.
    pub rd_sigma: f64,
    /// 1 + eta R_s d_s, the closed form it must equal.
    pub rd_sigma_closed_form: f64,
    /// ET_sigma computed directly on the modified graph.
    pub et_sigma: f64,
    /// The three decomposition terms (R d, stub term, scaled base ET).
    pub decomposition: [f64; 3],
    /// ET_sigma / (R_sigma d_sigma).
    pub ratio: f64,
    /// The bound 2 + ET_s / (eta R_s d_s) the ratio must not exceed.
    pub ratio_bound: f64,
}

pub fn modified_escape_identity(mg: &ModifiedGraph) -> Result<StubEscapeReport> {
    let base_sol = solve_electric(&mg.base)?;
    let base_stats = crate::walk::walk_quantities(&mg.base, &base_sol);
    let sol = solve_electric(&mg.graph)?;
    let stats = crate::walk::walk_quantities(&mg.graph, &sol);

    let r_s = base_sol.r_s;
    let d_s = mg.base.degrees[mg.base.s];
    let r_sigma = sol.r_s;
    let d_sigma = mg.graph.degrees[mg.sigma];
    let rd_sigma = r_sigma * d_sigma;
    let rd_closed = 1.0 + mg.eta * r_s * d_s;
    let terms = [
        rd_sigma,
        mg.eta * r_s * r_s / r_sigma * d_s,
        r_s / r_sigma * base_stats.et,
    ];
    let ratio = stats.et / rd_sigma;
    let ratio_bound = 2.0 + base_stats.et / (mg.eta * r_s * d_s);
    Ok(StubEscapeReport {
        eta: mg.eta,
        r_sigma,
        d_sigma,
        rd_sigma,
        rd_sigma_closed_form: rd_closed,
        et_sigma: stats.et,
        decomposition: terms,
        ratio,
        ratio_bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{attach_source_stub, fixtures, random_connected_weighted};

    #[test]
    fn fixture_solutions() {
        let g = fixtures::single_edge();
        let sol = solve_electric(&g).unwrap();
        assert!((sol.voltages[0] - 1.0).abs() < 1e-10);
        assert!((sol.r_s - 1.0).abs() < 1e-10);
        assert!((sol.flow(&g, 0, 1) - 1.0).abs() < 1e-10);
        assert!((sol.energy(&g) - 1.0).abs() < 1e-10);

        let g = fixtures::path3();
        let sol = solve_electric(&g).unwrap();
        assert!((sol.voltages[0] - 2.0).abs() < 1e-10);
        assert!((sol.voltages[1] - 1.0).abs() < 1e-10);
        assert!(sol.voltages[2].abs() < 1e-12);
        assert!((sol.r_s - 2.0).abs() < 1e-10);
        assert!((sol.energy(&g) - 2.0).abs() < 1e-10);

        let g = fixtures::skew_path(0.1);
        let sol = solve_electric(&g).unwrap();
        assert!((sol.r_s * g.degrees[g.s] - 2.5).abs() < 1e-10);
        assert!((sol.energy(&g) - (1.0 / 0.6 + 1.0 / 0.4)).abs() < 1e-10);
    }

    #[test]
    fn harmonic_measure_fixtures() {
        let g = fixtures::path4_mid();
        let p = harmonic_measure(&g).unwrap();
        assert!((p.probability_of(0) - 2.0 / 3.0).abs() < 1e-10);
        assert!((p.probability_of(3) - 1.0 / 3.0).abs() < 1e-10);

        let g = fixtures::cycle6();
        let p = harmonic_measure(&g).unwrap();
        assert!((p.probability_of(2) - 0.5).abs() < 1e-10);
        assert!((p.probability_of(4) - 0.5).abs() < 1e-10);

        let g = fixtures::single_edge();
        let p = harmonic_measure(&g).unwrap();
        assert!((p.probability_of(1) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn demand_and_energy_on_random_graphs() {
        for seed in 0..10 {
            let g = random_connected_weighted(40, 30, 4, seed).unwrap();
            let sol = solve_electric(&g).unwrap();
            assert!(sol.demand_residual(&g) < 1e-10, "seed {seed}");
            assert!((sol.energy(&g) - sol.r_s).abs() < 1e-10 * sol.r_s.max(1.0));
            for x in 0..g.n {
                assert!(sol.voltages[x] >= -1e-12 && sol.voltages[x] <= sol.r_s + 1e-12);
            }
        }
    }

    #[test]
    fn flow_minimizes_energy_among_unit_flows() {
        use rand::{Rng, SeedableRng};
        let g = fixtures::cycle6();
        let sol = solve_electric(&g).unwrap();
        let base = sol.energy(&g);
        // Perturb by the cycle flow (constant circulation around C6), which
        // is closed outside M and preserves the unit demand.
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let cycle = [(0usize, 1usize), (1, 2), (2, 3), (3, 4), (4, 5), (5, 0)];
        for _ in 0..20 {
            let c: f64 = rng.gen_range(-1.0..1.0);
            let mut energy = 0.0;
            for &(u, v, w) in &g.edges {
                let mut f = w * (sol.voltages[u] - sol.voltages[v]);
                if cycle.contains(&(u, v)) {
                    f += c;
                } else if cycle.contains(&(v, u)) {
                    f -= c;
                }
                energy += f * f / w;
            }
            assert!(energy >= base - 1e-12);
        }
    }

    #[test]
    fn stub_identities() {
        // path3, eta = 2: R d = 5, ET_sigma = 10.6.
        let g = fixtures::path3();
        let mg = attach_source_stub(&g, 2.0).unwrap();
        let rep = modified_escape_identity(&mg).unwrap();
        assert!((rep.rd_sigma - 5.0).abs() < 1e-10);
        assert!((rep.rd_sigma - rep.rd_sigma_closed_form).abs() < 1e-10);
        assert!((rep.et_sigma - 10.6).abs() < 1e-8);
        assert!((rep.decomposition.iter().sum::<f64>() - rep.et_sigma).abs() < 1e-8);
        assert!(rep.ratio <= rep.ratio_bound + 1e-12);

        // single edge, eta = 1: R_sigma = 2, ET_sigma = 3, ratio 3/2 <= 3.
        let g = fixtures::single_edge();
        let mg = attach_source_stub(&g, 1.0).unwrap();
        let rep = modified_escape_identity(&mg).unwrap();
        assert!((rep.r_sigma - 2.0).abs() < 1e-10);
        assert!((rep.rd_sigma - 2.0).abs() < 1e-10);
        assert!((rep.et_sigma - 3.0).abs() < 1e-8);
        assert!((rep.ratio - 1.5).abs() < 1e-8);
        assert!(rep.ratio_bound >= 3.0 - 1e-12);

        // path3 with eta = ET/(Rd) = 3/2: ratio <= 3.
        let g = fixtures::path3();
        let mg = attach_source_stub(&g, 1.5).unwrap();
        let rep = modified_escape_identity(&mg).unwrap();
        assert!(rep.ratio <= 3.0 + 1e-12);
        assert!((rep.rd_sigma - 4.0).abs() < 1e-10);
    }
}
