//! Electric-flow sampling: the exact elfs chain and its absorbing-chain
//! oracle, plain and coupled trace simulation, the fixed-point and exact
//! elf state preparations, the modified-flow overlap, and the small-scale
//! quantum elfs-process simulation by deferred measurement.

use crate::edge_space::{self, partial_rotation_about};
use crate::electric::solve_electric;
use crate::graph::{attach_source_stub, Graph};
use crate::linalg::{c, eye, CVec};
use crate::transducer::{
    pipeline_compose, zero_error_aa, Certificate, Pipeline, Transducer, ZeroErrorAaReport,
};
use crate::walk::{walk_quantities, walk_step, DEFAULT_STEP_BUDGET};
use crate::{Error, Result, IDENTITY_TOL};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

/// Re-root the graph at a new source vertex, keeping edges and sinks.
fn reroot(g: &Graph, x: usize) -> Result<Graph> {
    Graph::new(g.n, g.edges.clone(), x, g.sinks.clone())
}

/// Next-source distribution of the elfs process from x: sample an edge
/// with probability f^2/w under the unit flow from x, then a uniform
/// endpoint, i.e. p(y) = (1/(2 R_x)) sum_z f_yz^2 / w_yz. This is exactly
/// the first-register measurement statistics of the flow state |f_x>.
pub fn elfs_step_distribution(g: &Graph, x: usize) -> Result<Vec<f64>> {
    if g.is_sink(x) {
        return Err(Error::validation(format!("elfs step from sink vertex {x}")));
    }
    let gx = reroot(g, x)?;
    let sol = solve_electric(&gx)?;
    let mut p = vec![0.0; g.n];
    for &(u, v, w) in &gx.edges {
        let f = w * (sol.voltages[u] - sol.voltages[v]);
        let contrib = f * f / w / (2.0 * sol.r_s);
        p[u] += contrib;
        p[v] += contrib;
    }
    Ok(p)
}

/// Which flow states drive the chain: the plain unit flows, or the
/// modified-graph flows |f-hat> whose stub arc folds back onto the source
/// as a self-loop.
#[derive(Debug, Clone, Copy)]
pub enum ChainMode {
    Base,
    /// Stub strength eta >= 1 applied at every source.
    Modified(f64),
}

/// The elfs process as an exact absorbing Markov chain over the free
/// vertices, with the sinks as absorbing states.
#[derive(Debug, Clone)]
pub struct ElfsChain {
    /// Free (non-sink) vertices in index order.
    pub free: Vec<usize>,
    /// vertex -> position in `free` (None on sinks).
    pub pos: Vec<Option<usize>>,
    pub sinks: Vec<usize>,
    /// rows[i] = next-source distribution over all n vertices from free[i].
    pub rows: Vec<Vec<f64>>,
    /// Free-to-free transition block.
    pub q: DMatrix<f64>,
    /// Fundamental matrix (I - Q)^{-1}: expected visit counts.
    pub visits: DMatrix<f64>,
    /// Expected elfs steps to absorption from each free vertex.
    pub eht: Vec<f64>,
    /// arrival[i][k] = probability of absorbing at sinks[k] from free[i].
    pub arrival: Vec<Vec<f64>>,
    /// Walk escape time ET_x of the underlying walk from each free vertex.
    pub et: Vec<f64>,
    /// Walk hitting time HT_x from each free vertex.
    pub ht: Vec<f64>,
    /// R_x d_x from each free vertex.
    pub rd: Vec<f64>,
}

pub fn elfs_chain(g: &Graph) -> Result<ElfsChain> {
    elfs_chain_with(g, ChainMode::Base)
}

pub fn elfs_chain_with(g: &Graph, mode: ChainMode) -> Result<ElfsChain> {
    let free = g.free_vertices();
    let mut pos = vec![None; g.n];
    for (i, &x) in free.iter().enumerate() {
        pos[x] = Some(i);
    }
    let k = free.len();
    let mut rows = Vec::with_capacity(k);
    let mut et = Vec::with_capacity(k);
    let mut ht = Vec::with_capacity(k);
    let mut rd = Vec::with_capacity(k);
    for &x in &free {
        let gx = reroot(g, x)?;
        let row = match mode {
            ChainMode::Base => elfs_step_distribution(g, x)?,
            ChainMode::Modified(eta) => {
                // On the stub graph the unit flow keeps its base-edge values,
                // so the row is the base row damped by R_x / R-hat_x, with
                // the stub edge's two endpoint terms folded into x.
                let mg = attach_source_stub(&gx, eta)?;
                let solm = solve_electric(&mg.graph)?;
                let mut folded = vec![0.0; g.n];
                for &(u, v, w) in &mg.graph.edges {
                    let f = w * (solm.voltages[u] - solm.voltages[v]);
                    let contrib = f * f / w / (2.0 * solm.r_s);
                    let uu = if u == mg.sigma { x } else { u };
                    let vv = if v == mg.sigma { x } else { v };
                    folded[uu] += contrib;
                    folded[vv] += contrib;
                }
                folded
            }
        };
        let sum: f64 = row.iter().sum();
        if (sum - 1.0).abs() > 1e-10 {
            return Err(Error::numerical(format!("elfs row from {x} sums to {sum}")));
        }
        let sol = solve_electric(&gx)?;
        let stats = walk_quantities(&gx, &sol);
        et.push(stats.et);
        ht.push(stats.ht);
        rd.push(stats.rd);
        rows.push(row);
    }

    let q = DMatrix::from_fn(k, k, |i, j| rows[i][free[j]]);
    let radius = q.complex_eigenvalues().iter().map(|l| l.norm()).fold(0.0, f64::max);
    if radius >= 1.0 - 1e-12 {
        return Err(Error::numerical(format!(
            "elfs chain transient block has spectral radius {radius}"
        )));
    }
    let iq = DMatrix::identity(k, k) - &q;
    let visits = iq
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::numerical("elfs fundamental matrix is singular"))?;
    let eht: Vec<f64> = (&visits * DVector::from_element(k, 1.0)).iter().copied().collect();
    let r = DMatrix::from_fn(k, g.sinks.len(), |i, j| rows[i][g.sinks[j]]);
    let arr = &visits * r;
    let arrival: Vec<Vec<f64>> =
        (0..k).map(|i| (0..g.sinks.len()).map(|j| arr[(i, j)]).collect()).collect();
    Ok(ElfsChain {
        free,
        pos,
        sinks: g.sinks.clone(),
        rows,
        q,
        visits,
        eht,
        arrival,
        et,
        ht,
        rd,
    })
}

impl ElfsChain {
    pub fn row_of(&self, x: usize) -> Result<&Vec<f64>> {
        let i = self.pos[x].ok_or_else(|| Error::validation(format!("{x} is a sink")))?;
        Ok(&self.rows[i])
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "free": self.free,
            "sinks": self.sinks,
            "eht": self.eht,
            "arrival": self.arrival,
            "et": self.et,
        })
    }
}

/// One sampled elfs trace Y_0 = s, ..., Y_rho in M. In coupled mode the
/// walk segments realize each elfs step on the underlying walk: segment i
/// starts at Y_{i-1}, ends at Y_i, and the concatenation is a valid walk
/// trajectory with nondecreasing stopping times nu_i.
#[derive(Debug, Clone, Serialize)]
pub struct ElfsTrace {
    pub sources: Vec<usize>,
    /// Cumulative stopping times nu_1 <= ... <= nu_rho (coupled mode only).
    pub nu: Vec<usize>,
    /// Walk segments (vertex sequences) realizing each step (coupled only).
    pub segments: Vec<Vec<usize>>,
    pub seed: u64,
}

pub fn simulate_elfs(g: &Graph, seed: u64, coupled: bool) -> Result<ElfsTrace> {
    let chain = elfs_chain(g)?;
    simulate_elfs_with(g, &chain, seed, coupled)
}

fn sample_index(p: &[f64], rng: &mut impl Rng) -> usize {
    let mut r = rng.gen::<f64>();
    for (i, &pi) in p.iter().enumerate() {
        if r < pi {
            return i;
        }
        r -= pi;
    }
    p.len() - 1
}

pub fn simulate_elfs_with(
    g: &Graph,
    chain: &ElfsChain,
    seed: u64,
    coupled: bool,
) -> Result<ElfsTrace> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let walk_q = walk_block(g, chain);
    let mut sources = vec![g.s];
    let mut nu = Vec::new();
    let mut segments = Vec::new();
    let mut steps_used = 0usize;
    let mut cur = g.s;
    while !g.is_sink(cur) {
        if coupled {
            let (y, segment) = coupled_step(g, chain, &walk_q, cur, &mut rng, &mut steps_used)?;
            nu.push(nu.last().copied().unwrap_or(0) + (segment.len() - 1));
            segments.push(segment);
            cur = y;
        } else {
            let row = chain.row_of(cur)?;
            cur = sample_index(row, &mut rng);
            steps_used += 1;
            if steps_used > DEFAULT_STEP_BUDGET {
                return Err(Error::budget("elfs trace exceeded the step budget"));
            }
        }
        sources.push(cur);
    }
    Ok(ElfsTrace { sources, nu, segments, seed })
}

/// Walk transition block over the free vertices.
fn walk_block(g: &Graph, chain: &ElfsChain) -> DMatrix<f64> {
    let k = chain.free.len();
    DMatrix::from_fn(k, k, |i, j| {
        let x = chain.free[i];
        let y = chain.free[j];
        g.weight(x, y) / g.degrees[x]
    })
}

/// One coupled elfs step from x: walk the base chain and stop by the exact
/// filling rule — at each time stop with probability (remaining target mass
/// at the current vertex) / (current unstopped mass there), where the target
/// is the elfs next-source distribution from x. The stopped position is
/// distributed as the elfs step and the expected stopping time is half the
/// escape time. Stopping at time 0 is allowed (it carries the target's mass
/// at x itself).
fn coupled_step(
    g: &Graph,
    chain: &ElfsChain,
    walk_q: &DMatrix<f64>,
    x: usize,
    rng: &mut impl Rng,
    steps_used: &mut usize,
) -> Result<(usize, Vec<usize>)> {
    let k = chain.free.len();
    let target = chain.row_of(x)?;
    let mut remaining: Vec<f64> = chain.free.iter().map(|&v| target[v]).collect();
    let mut alpha = vec![0.0; k];
    alpha[chain.pos[x].expect("x is free")] = 1.0;
    let mut walker = x;
    let mut path = vec![x];
    loop {
        let i = chain.pos[walker].expect("walker is free");
        let stop_p = if alpha[i] > 1e-300 { (remaining[i] / alpha[i]).min(1.0) } else { 0.0 };
        if rng.gen::<f64>() < stop_p {
            return Ok((walker, path));
        }
        // Deposit the stopped mass everywhere and advance the unstopped
        // measure one walk step; the walker moves in lockstep.
        for j in 0..k {
            let dep = remaining[j].min(alpha[j]);
            remaining[j] -= dep;
            alpha[j] -= dep;
        }
        let alpha_v = DVector::from_vec(alpha.clone());
        let next = walk_q.transpose() * alpha_v;
        alpha.copy_from_slice(next.as_slice());
        walker = walk_step(g, walker, rng);
        path.push(walker);
        *steps_used += 1;
        if *steps_used > DEFAULT_STEP_BUDGET {
            return Err(Error::budget("coupled elfs trace exceeded the step budget"));
        }
        if g.is_sink(walker) {
            return Ok((walker, path));
        }
    }
}

/// The two coupling identities: the exact chain identity
/// E[sum_{t < rho} ET_{Y_t}] = 2 HT_s, and the Monte Carlo check of
/// E[nu_1] = ET_s / 2 from coupled traces.
#[derive(Debug, Clone, Serialize)]
pub struct CouplingReport {
    /// Expected visit counts from s times ET_x, summed.
    pub exact_sum_et: f64,
    pub two_ht: f64,
    pub mc_nu1_mean: f64,
    pub mc_nu1_se: f64,
    pub et_half: f64,
    pub samples: usize,
}

pub fn coupling_identities(g: &Graph, samples: usize, seed: u64) -> Result<CouplingReport> {
    let chain = elfs_chain(g)?;
    let si = chain.pos[g.s].ok_or_else(|| Error::validation("source is a sink"))?;
    let exact_sum_et: f64 =
        (0..chain.free.len()).map(|j| chain.visits[(si, j)] * chain.et[j]).sum();
    let two_ht = 2.0 * chain.ht[si];
    if (exact_sum_et - two_ht).abs() > IDENTITY_TOL * two_ht.max(1.0) {
        return Err(Error::numerical(format!(
            "expected-ET identity violated: {exact_sum_et} vs {two_ht}"
        )));
    }

    let walk_q = walk_block(g, &chain);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for _ in 0..samples {
        let mut used = 0usize;
        let (_, segment) = coupled_step(g, &chain, &walk_q, g.s, &mut rng, &mut used)?;
        let nu1 = (segment.len() - 1) as f64;
        sum += nu1;
        sum_sq += nu1 * nu1;
    }
    let mean = sum / samples as f64;
    let var = (sum_sq / samples as f64 - mean * mean).max(0.0);
    let se = (var / samples as f64).sqrt();
    Ok(CouplingReport {
        exact_sum_et,
        two_ht,
        mc_nu1_mean: mean,
        mc_nu1_se: se,
        et_half: chain.et[si] / 2.0,
        samples,
    })
}

/// A fixed-point amplitude-amplification angle schedule of odd length L:
/// applying the L-long alternating reflection sequence in the exact 2-dim
/// rotation model brings any initial overlap >= sqrt(p_bar) with the target
/// to a final overlap of at least sqrt(1 - eps^2).
#[derive(Debug, Clone, Serialize)]
pub struct AngleSchedule {
    /// Total (odd) sequence length L; the schedule has (L-1)/2 angle pairs.
    pub l: usize,
    /// Initial-state-reflection phases, applied second in each pair.
    pub alphas: Vec<f64>,
    /// Target-reflection phases, applied first as S_t(-beta_j), with
    /// beta_j = -alpha_{l-j+1}.
    pub betas: Vec<f64>,
    pub p_bar: f64,
    pub eps: f64,
}

/// Chebyshev-derived fixed-point angles: L is the smallest odd integer with
/// acosh(1/eps) <= L acosh(1/sqrt(1 - p_bar)), gamma = 1/T_{1/L}(1/eps),
/// alpha_j = 2 arccot(tan(2 pi j / L) sqrt(1 - gamma^2)). The constructed
/// schedule is validated by sweeping 100 initial overlaps in the 2-dim model.
pub fn fixed_point_angles(p_bar: f64, eps: f64) -> Result<AngleSchedule> {
    if !(0.0 < p_bar && p_bar <= 1.0) {
        return Err(Error::validation(format!("p_bar = {p_bar} outside (0, 1]")));
    }
    if !(0.0 < eps && eps < 1.0) {
        return Err(Error::validation(format!("eps = {eps} outside (0, 1)")));
    }
    let schedule = if p_bar >= 1.0 {
        AngleSchedule { l: 1, alphas: Vec::new(), betas: Vec::new(), p_bar, eps }
    } else {
        let need = (1.0 / eps).acosh() / (1.0 / (1.0 - p_bar).sqrt()).acosh();
        let mut l_total = need.ceil() as usize;
        if l_total % 2 == 0 {
            l_total += 1;
        }
        let l_total = l_total.max(3);
        // 1/gamma = T_{1/L}(1/eps) = cosh(acosh(1/eps)/L).
        let gamma = 1.0 / ((1.0 / eps).acosh() / l_total as f64).cosh();
        let half = (l_total - 1) / 2;
        let root = (1.0 - gamma * gamma).sqrt();
        let alphas: Vec<f64> = (1..=half)
            .map(|j| {
                let t = (2.0 * std::f64::consts::PI * j as f64 / l_total as f64).tan();
                2.0 * (1.0 / (t * root)).atan()
            })
            .collect();
        let betas: Vec<f64> = (1..=half).map(|j| -alphas[half - j]).collect();
        AngleSchedule { l: l_total, alphas, betas, p_bar, eps }
    };

    // Invariant sweep in the exact 2-dim model.
    for i in 0..100 {
        let lam = p_bar.sqrt() + (1.0 - p_bar.sqrt()) * i as f64 / 99.0;
        let overlap_sq = schedule.apply_two_dim(lam);
        if overlap_sq < 1.0 - eps * eps - 1e-12 {
            return Err(Error::numerical(format!(
                "fixed-point schedule fails the 2-dim sweep at overlap {lam}: {overlap_sq}"
            )));
        }
    }
    Ok(schedule)
}

impl AngleSchedule {
    /// Apply the schedule in the 2-dim model with initial overlap lam;
    /// returns the final squared overlap with the target.
    pub fn apply_two_dim(&self, lam: f64) -> f64 {
        let s0 = num_complex::Complex64::new(lam, 0.0);
        let s1 = num_complex::Complex64::new((1.0 - lam * lam).max(0.0).sqrt(), 0.0);
        let (mut v0, mut v1) = (s0, s1);
        for (&a, &b) in self.alphas.iter().zip(&self.betas) {
            // Target reflection S_t(-b): multiply the target component by e^{-i b}.
            v0 *= num_complex::Complex64::new(0.0, -b).exp();
            // Initial-state reflection S_s(a) = I - (1 - e^{i a}) |s><s|.
            let inner = s0.conj() * v0 + s1.conj() * v1;
            let coef = (num_complex::Complex64::new(1.0, 0.0)
                - num_complex::Complex64::new(0.0, a).exp())
                * inner;
            v0 -= coef * s0;
            v1 -= coef * s1;
        }
        v0.norm_sqr()
    }
}

/// The fixed-point elf preparation: L partial-rotation transducers composed
/// in sequence, mapping the source star state to the unit-flow state up to
/// the schedule's error.
#[derive(Debug, Clone)]
pub struct FixedPointReport {
    pub schedule: AngleSchedule,
    /// Final arc-space state (the last counter slot of the pipeline output).
    pub output: CVec,
    /// |<f|output>|.
    pub overlap: f64,
    /// Measured ||w||^2 of the composed pipeline (0 for the trivial schedule).
    pub w_measured: f64,
    pub certificate: Option<Certificate>,
    /// Per-step transduction complexities.
    pub step_ws: Vec<f64>,
}

/// Compose the alternating elfs rotations
/// U(theta, phi) = S_s(phi) (I - (1 - e^{i theta})(I - Pi_+)), each of which
/// transduces states in span{phi_s, f} by S_s(phi) S_f(theta) with public
/// space ker Pi_*, into one pipeline driving |phi_s> to |f> + O(eps).
/// Requires p_bar <= 1/(R_s d_s); the schedule is built for the squared
/// initial overlap bound p_bar / 2 = lower bound on 1/(2 R_s d_s).
pub fn fixed_point_prepare(g: &Graph, p_bar: f64, eps: f64) -> Result<FixedPointReport> {
    let es = edge_space::build(g)?;
    let rd = es.sol.r_s * g.degrees[g.s];
    if p_bar > 1.0 / rd + 1e-12 {
        return Err(Error::validation(format!(
            "p_bar = {p_bar} exceeds 1/(R_s d_s) = {}",
            1.0 / rd
        )));
    }
    let schedule = fixed_point_angles(p_bar / 2.0, eps)?;
    if schedule.alphas.is_empty() {
        let overlap = es.phi_s.dotc(&es.f).norm();
        return Ok(FixedPointReport {
            schedule,
            output: es.phi_s.clone(),
            overlap,
            w_measured: 0.0,
            certificate: None,
            step_ws: Vec::new(),
        });
    }
    let d = es.basis.dim();
    let public = eye(d) - &es.projs.pi_star;
    let phi_outer = &es.phi_s * es.phi_s.adjoint();
    let steps: Result<Vec<Transducer>> = schedule
        .alphas
        .iter()
        .zip(&schedule.betas)
        .enumerate()
        .map(|(j, (&a, &b))| {
            let s_s = eye(d) - &phi_outer * (c(1.0) - num_complex::Complex64::new(0.0, a).exp());
            let u = s_s * partial_rotation_about(&es.projs.pi_plus, -b);
            Transducer::new(u, public.clone(), format!("elfs-rotation-{}", j + 1))
        })
        .collect();
    let pipeline: Pipeline = pipeline_compose(&steps?, &es.phi_s)?;
    let overlap = es.f.dotc(&pipeline.output).norm();
    if overlap * overlap < 1.0 - eps * eps - 1e-9 {
        return Err(Error::numerical(format!(
            "fixed-point preparation overlap^2 = {} misses 1 - eps^2",
            overlap * overlap
        )));
    }
    Ok(FixedPointReport {
        schedule,
        output: pipeline.output.clone(),
        overlap,
        w_measured: pipeline.certificate.w_norm_sq,
        step_ws: pipeline.step_ws.clone(),
        certificate: Some(pipeline.certificate),
    })
}

/// Squared overlap of the base unit-flow state embedded in the stub graph's
/// arc space with the stub graph's own flow state; equals R_s / R-hat_sigma
/// (asserted to 1e-10).
pub fn modified_flow_overlap(g: &Graph, eta: f64) -> Result<f64> {
    let sol = solve_electric(g)?;
    let mg = attach_source_stub(g, eta)?;
    let es_hat = edge_space::build(&mg.graph)?;
    let sol_base = &sol;
    // Embed |f> by matching arcs of the shared edges.
    let mut embedded = CVec::zeros(es_hat.basis.dim());
    let norm = (2.0 * sol_base.r_s).sqrt();
    for &(u, v, w) in &g.edges {
        let f = w * (sol_base.voltages[u] - sol_base.voltages[v]);
        embedded[es_hat.basis.index_of(u, v)] = c(f / w.sqrt() / norm);
        embedded[es_hat.basis.index_of(v, u)] = c(-f / w.sqrt() / norm);
    }
    let overlap = es_hat.f.dotc(&embedded).norm_sqr();
    let closed = sol_base.r_s / es_hat.sol.r_s;
    if (overlap - closed).abs() > 1e-10 {
        return Err(Error::numerical(format!(
            "modified-flow overlap {overlap} differs from R_s/R-hat = {closed}"
        )));
    }
    Ok(overlap)
}

/// Exact elf preparation on the stub graph: zero-error amplitude
/// amplification of the flow state's amplitude alpha = 1/sqrt(2 R d) inside
/// the source star state, with the elfs transducer as the flow reflection.
#[derive(Debug, Clone, Serialize)]
pub struct ExactElfReport {
    pub eta: f64,
    /// 1/sqrt(2 R-hat d-hat) on the stub graph.
    pub alpha: f64,
    pub rd_hat: f64,
    /// Transduction complexity of the flow reflection: ET-hat/(R d)-hat - 1.
    pub w_v: f64,
    pub aa: ZeroErrorAaReport,
}

pub fn exact_elf_prepare(
    g: &Graph,
    eta: f64,
    m_max: usize,
    runs: usize,
    seed: u64,
) -> Result<ExactElfReport> {
    let mg = attach_source_stub(g, eta)?;
    let sol = solve_electric(&mg.graph)?;
    let stats = walk_quantities(&mg.graph, &sol);
    let alpha = 1.0 / (2.0 * stats.rd).sqrt();
    // The source reflection 2|phi_sigma><phi_sigma| - I costs nothing; the
    // flow reflection is the elfs transducer on the stub graph.
    let w_v = stats.et / stats.rd - 1.0;
    let aa = zero_error_aa(alpha, 0.0, w_v, m_max, runs, seed)?;
    Ok(ExactElfReport { eta, alpha, rd_hat: stats.rd, w_v, aa })
}

/// One absorbed source path of the quantum elfs process (Y_1, ..., Y_rho),
/// with its probability read off the source registers' diagonal.
#[derive(Debug, Clone, Serialize)]
pub struct PathWeight {
    pub path: Vec<usize>,
    pub probability: f64,
}

/// The deferred-measurement simulation of the quantum elfs process on a
/// small graph: one exact-elf step per level, one source register appended
/// per step, truncated at depth_cap.
#[derive(Debug, Clone, Serialize)]
pub struct QuantumElfsReport {
    pub absorbed: Vec<PathWeight>,
    /// Mass still unabsorbed at the depth cap.
    pub residual_mass: f64,
    /// Max deviation of the register diagonal from the chain's path
    /// probabilities (the diagonal is recomputed from the per-vertex flow
    /// states' measurement statistics).
    pub register_deviation: f64,
    /// Accounted transduction cost: sum over processed steps of the
    /// per-vertex exact-elf cost, weighted by the path mass.
    pub complexity_measured: f64,
    /// E[sum_t sqrt(ET_{Y_t})] truncated at the depth cap.
    pub complexity_predicted: f64,
}

/// depth_cap levels of the elfs process by deferred measurement. In
/// estimated mode the per-vertex stub strengths use R_x d_x values
/// perturbed by +/-10% (the flows themselves stay exact, so the register
/// statistics are unchanged; only the cost accounting moves).
pub fn quantum_elfs_process(
    g: &Graph,
    depth_cap: usize,
    m_max: usize,
    estimated: bool,
) -> Result<QuantumElfsReport> {
    if g.n > 5 {
        return Err(Error::validation(format!("quantum elfs process capped at 5 vertices, got {}", g.n)));
    }
    if depth_cap == 0 || depth_cap > 3 {
        return Err(Error::validation(format!("depth cap {depth_cap} outside 1..=3")));
    }
    let chain = elfs_chain(g)?;

    // Per-vertex step statistics recomputed from the flow states, and the
    // per-vertex exact-elf cost.
    let mut stat_rows: Vec<Vec<f64>> = Vec::with_capacity(chain.free.len());
    let mut elf_cost: Vec<f64> = Vec::with_capacity(chain.free.len());
    for (i, &x) in chain.free.iter().enumerate() {
        let gx = reroot(g, x)?;
        let es = edge_space::build(&gx)?;
        let mut p = vec![0.0; g.n];
        for (a, &(u, _)) in es.basis.arcs.iter().enumerate() {
            p[u] += es.f[a].norm_sqr();
        }
        stat_rows.push(p);
        let rd = chain.rd[i];
        let rd_used = if estimated {
            rd * if x % 2 == 0 { 1.1 } else { 0.9 }
        } else {
            rd
        };
        let eta = (chain.et[i] / rd_used).max(1.0);
        let rep = exact_elf_prepare(&gx, eta, m_max, 8, 1234 + x as u64)?;
        if rep.aa.output_fidelity < 1.0 - 1e-9 {
            return Err(Error::numerical("exact elf step lost fidelity".to_string()));
        }
        elf_cost.push(rep.aa.w_accounted);
    }

    // Breadth-first over source paths, carrying both the chain probability
    // and the register probability (from the flow-state statistics).
    let mut frontier: Vec<(Vec<usize>, f64, f64)> = vec![(vec![], 1.0, 1.0)];
    let mut absorbed = Vec::new();
    let mut register_deviation = 0.0f64;
    let mut complexity_measured = 0.0;
    let mut complexity_predicted = 0.0;
    for _ in 0..depth_cap {
        let mut next = Vec::new();
        for (path, p_chain, p_reg) in frontier {
            let cur = *path.last().unwrap_or(&g.s);
            let i = chain.pos[cur].expect("frontier vertices are free");
            complexity_measured += p_chain * elf_cost[i];
            complexity_predicted += p_chain * chain.et[i].sqrt();
            let row = &chain.rows[i];
            let stat = &stat_rows[i];
            for y in 0..g.n {
                if row[y] <= 0.0 && stat[y] <= 0.0 {
                    continue;
                }
                let mut path_y = path.clone();
                path_y.push(y);
                let (pc, pr) = (p_chain * row[y], p_reg * stat[y]);
                register_deviation = register_deviation.max((pc - pr).abs());
                if g.is_sink(y) {
                    absorbed.push(PathWeight { path: path_y, probability: pc });
                } else {
                    next.push((path_y, pc, pr));
                }
            }
        }
        frontier = next;
    }
    let residual_mass: f64 = frontier.iter().map(|(_, p, _)| p).sum();
    if register_deviation > 1e-8 {
        return Err(Error::numerical(format!(
            "register diagonal deviates from chain probabilities by {register_deviation}"
        )));
    }
    Ok(QuantumElfsReport {
        absorbed,
        residual_mass,
        register_deviation,
        complexity_measured,
        complexity_predicted,
    })
}
