//! Phase-estimation pipeline for the source resistance-degree product
//! `R_s d_s`: the controlled rotation-power state, QFT readout, the
//! known-bound estimator, the halving search, the two-hypothesis lower-bound
//! fixture, and generic witness-size estimation.

use crate::edge_space::{self, invariant_projector, EdgeSpace};
use crate::electric::solve_electric;
use crate::error::{Error, Result};
use crate::graph::{attach_source_stub, fixtures, Graph};
use crate::linalg::{c, dist, eye, CMat, CVec};
use crate::transducer::{generic_catalyst, Certificate, Transducer};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::f64::consts::PI;

/// Largest composed dimension `(T+1) * arcs * T` accepted by
/// [`controlled_power_state`]; beyond this the dense certification is not
/// worth building and the direct rotation powers should be used instead.
pub const POWER_DIM_CAP: usize = 4096;

/// The reflected walk operator, its ideal rotation, and the rotation angle.
#[derive(Debug, Clone)]
pub struct RotationModel {
    /// (I - 2|phi_s><phi_s|) U: one walk step followed by the source-star
    /// reflection. Transduces psi -> R psi on span{phi_s, f}.
    pub u_prime: CMat,
    /// R = (I - 2|phi_s><phi_s|)(2|f><f| - I), a rotation by 2 theta on
    /// span{phi_s, f}.
    pub r: CMat,
    /// sin(theta) = |<f|phi_s>| = 1/sqrt(2 R_s d_s).
    pub theta: f64,
}

/// Build the rotation model and verify that R restricted to span{phi_s, f}
/// has eigenvalues e^{+-2i theta}.
pub fn rotation_model(es: &EdgeSpace) -> Result<RotationModel> {
    let d = es.basis.dim();
    let phi = &es.phi_s;
    let f = &es.f;
    let refl = eye(d) - (phi * phi.adjoint()).map(|z| z * c(2.0));
    let u_prime = &refl * &es.u;
    let r = &refl * ((f * f.adjoint()).map(|z| z * c(2.0)) - eye(d));
    let overlap = phi.dotc(f);
    let theta = overlap.norm().min(1.0).asin();

    // Orthonormal basis of span{phi_s, f} and the 2x2 restriction of R.
    let mut g = f - phi.map(|z| z * overlap.conj());
    let gn = g.norm();
    if gn > 1e-12 {
        g /= c(gn);
        let block = |a: &CVec, b: &CVec| a.dotc(&(&r * b));
        let tr = block(phi, phi) + block(&g, &g);
        let det = block(phi, phi) * block(&g, &g) - block(phi, &g) * block(&g, phi);
        let disc = (tr * tr - det * c(4.0)).sqrt();
        let l1 = (tr + disc) / c(2.0);
        let l2 = (tr - disc) / c(2.0);
        let e_plus = Complex64::from_polar(1.0, 2.0 * theta);
        let e_minus = e_plus.conj();
        let direct = (l1 - e_plus).norm() + (l2 - e_minus).norm();
        let swapped = (l1 - e_minus).norm() + (l2 - e_plus).norm();
        if direct.min(swapped) > 1e-10 {
            return Err(Error::numerical(format!(
                "rotation eigenphases {l1} / {l2} differ from +-2 theta with sin theta = {:.6}",
                theta.sin()
            )));
        }
    }
    Ok(RotationModel { u_prime, r, theta })
}

/// The certified state (1/sqrt(T)) sum_t R^t |phi_s> |t>.
#[derive(Debug, Clone)]
pub struct PowerState {
    /// The state on arc (x) counter, index `a * t + j`.
    pub state: CVec,
    pub t: usize,
    /// The composed controlled-powers transducer (counter-of-steps (x) arc
    /// (x) counter), kept for truncation experiments.
    pub transducer: Transducer,
    pub certificate: Certificate,
    /// W_0 + sum_{t>=1} ||psi_{t,0}||^2 (1 + W_t), reproduced by the measured
    /// catalyst norm.
    pub w_formula: f64,
    pub theta: f64,
}

/// Compose T reflected walk steps under a counter: step t applies the
/// reflected walk on counter values > t, so the slot-j component of the
/// uniform input collects exactly j rotations. The counter-of-steps advances
/// on the public space; the finished component at outer slot t is tagged by
/// inner counter value t-1, which keeps it apart from the in-flight catalyst.
pub fn controlled_power_state(g: &Graph, t: usize) -> Result<PowerState> {
    if t < 1 {
        return Err(Error::validation("controlled powers: T must be >= 1".to_string()));
    }
    let es = edge_space::build(g)?;
    let rm = rotation_model(&es)?;
    let d = es.basis.dim();
    let big = (t + 1) * d * t;
    if big > POWER_DIM_CAP {
        return Err(Error::validation(format!(
            "controlled powers: composed dimension {big} exceeds the cap {POWER_DIM_CAP}"
        )));
    }
    let k_pub = eye(d) - &es.projs.pi_star;
    let idx = |slot: usize, a: usize, j: usize| (slot * d + a) * t + j;

    // Block-diagonal steps: slot < T applies the reflected walk on inner
    // counter values > slot; slot T is the overflow identity.
    let mut block = CMat::zeros(big, big);
    for slot in 0..=t {
        for j in 0..t {
            if slot < t && j > slot {
                for a in 0..d {
                    for b in 0..d {
                        block[(idx(slot, a, j), idx(slot, b, j))] = rm.u_prime[(a, b)];
                    }
                }
            } else {
                for a in 0..d {
                    block[(idx(slot, a, j), idx(slot, a, j))] = c(1.0);
                }
            }
        }
    }
    // Outer counter advance on the public part (cyclic for unitarity).
    let mut vc = CMat::zeros(big, big);
    for slot in 0..=t {
        let next = (slot + 1) % (t + 1);
        for j in 0..t {
            for a in 0..d {
                for b in 0..d {
                    vc[(idx(next, a, j), idx(slot, b, j))] += k_pub[(a, b)];
                    if a == b {
                        vc[(idx(slot, a, j), idx(slot, b, j))] += c(1.0);
                    }
                    vc[(idx(slot, a, j), idx(slot, b, j))] -= k_pub[(a, b)];
                }
            }
        }
    }
    let s = &vc * &block;
    // Public: the fresh input at slot 0 plus, at slot t >= 1, the finished
    // component tagged by inner counter value t-1.
    let mut public = CMat::zeros(big, big);
    for a in 0..d {
        for b in 0..d {
            for j in 0..t {
                public[(idx(0, a, j), idx(0, b, j))] = k_pub[(a, b)];
            }
            for slot in 1..=t {
                public[(idx(slot, a, slot - 1), idx(slot, b, slot - 1))] = k_pub[(a, b)];
            }
        }
    }
    let comp = Transducer::new(s, public, "controlled-powers")?;

    // Input: |0> (x) phi_s (x) uniform counter.
    let scale = c(1.0 / (t as f64).sqrt());
    let mut xi = CVec::zeros(big);
    for a in 0..d {
        for j in 0..t {
            xi[idx(0, a, j)] = es.phi_s[a] * scale;
        }
    }

    // Rotation powers and the per-step walk catalysts.
    let walk_step = Transducer::new(rm.u_prime.clone(), k_pub.clone(), "reflected-walk")?;
    let mut powers: Vec<CVec> = Vec::with_capacity(t);
    let mut v = es.phi_s.clone();
    for _ in 0..t {
        powers.push(v.clone());
        v = &rm.r * &v;
    }
    let mut step_cats: Vec<CVec> = Vec::with_capacity(t);
    let mut step_ws: Vec<f64> = Vec::with_capacity(t);
    for p in &powers {
        let cert = generic_catalyst(&walk_step, p)?;
        step_ws.push(cert.w_norm_sq);
        step_cats.push(cert.w);
    }

    // Catalyst per the step formula: at slot t >= 1 the in-flight component
    // (inner slots >= t) plus the walk catalysts on inner slots > t; at
    // slot 0 only the walk catalysts.
    let mut w = CVec::zeros(big);
    for slot in 0..t {
        for a in 0..d {
            for j in slot..t {
                if slot >= 1 {
                    w[idx(slot, a, j)] += powers[slot][a] * scale;
                }
                if j > slot {
                    w[idx(slot, a, j)] += step_cats[slot][a] * scale;
                }
            }
        }
    }
    let certificate = Certificate::verify(&comp, xi, w)?;

    // Expected output and the arc (x) counter power state.
    let mut expected = CVec::zeros(big);
    let mut state = CVec::zeros(d * t);
    for slot in 1..=t {
        for a in 0..d {
            expected[idx(slot, a, slot - 1)] = powers[slot - 1][a] * scale;
            state[a * t + (slot - 1)] = powers[slot - 1][a] * scale;
        }
    }
    if dist(&certificate.tau, &expected) > 1e-8 {
        return Err(Error::numerical(
            "controlled powers: output differs from the rotation powers".to_string(),
        ));
    }
    // Minimal catalyst agrees with the assembled one.
    let generic = generic_catalyst(&comp, &certificate.xi)?;
    if dist(&generic.tau, &certificate.tau) > 1e-8 {
        return Err(Error::numerical(
            "controlled powers: generic catalyst transduces a different output".to_string(),
        ));
    }

    // W_0 + sum_{t>=1} ||psi_{t,0}||^2 (1 + W_t).
    let tf = t as f64;
    let mut w_formula = (tf - 1.0) / tf * step_ws[0];
    for slot in 1..t {
        let in_flight = (tf - slot as f64) / tf;
        let step_w = (tf - slot as f64 - 1.0) / (tf - slot as f64) * step_ws[slot];
        w_formula += in_flight * (1.0 + step_w);
    }
    if (w_formula - certificate.w_norm_sq).abs() > 1e-8 {
        return Err(Error::numerical(format!(
            "controlled powers: measured W {} differs from the step formula {w_formula}",
            certificate.w_norm_sq
        )));
    }
    Ok(PowerState { state, t, transducer: comp, certificate, w_formula, theta: rm.theta })
}

/// A power state produced with a scaled-down catalyst, together with its
/// distance from the exact state.
#[derive(Debug, Clone)]
pub struct DegradedPowerState {
    pub state: CVec,
    pub scale: f64,
    /// Actual distance to the exact output on the full composed space.
    pub distance: f64,
    /// The 2(1-c)||w|| a-priori bound on that distance.
    pub bound: f64,
}

/// Run the composed transducer with catalyst c * w instead of w, the regime
/// where the output is only `target`-close to the exact power state.
pub fn controlled_power_state_degraded(
    g: &Graph,
    t: usize,
    target: f64,
) -> Result<DegradedPowerState> {
    if !(target > 0.0 && target < 2.0) {
        return Err(Error::validation(format!("degraded powers: bad target {target}")));
    }
    let ps = controlled_power_state(g, t)?;
    let wn = ps.certificate.w_norm_sq.sqrt();
    let scale = if wn > 0.0 { (1.0 - target / (2.0 * wn)).max(0.0) } else { 1.0 };
    let fed = &ps.certificate.xi + ps.certificate.w.map(|z| z * c(scale));
    let out = &ps.transducer.s * fed - ps.certificate.w.map(|z| z * c(scale));
    let distance = dist(&out, &ps.certificate.tau);
    let bound = 2.0 * (1.0 - scale) * wn;
    // Read the arc (x) counter part off the same slots as the exact state.
    let d = ps.state.len() / t;
    let mut state = CVec::zeros(d * t);
    for slot in 1..=t {
        for a in 0..d {
            state[a * t + (slot - 1)] = out[(slot * d + a) * t + (slot - 1)];
        }
    }
    Ok(DegradedPowerState { state, scale, distance, bound })
}

/// Counter-measurement probabilities after the inverse QFT on the state
/// (1/sqrt(T)) sum_j R^j psi |j>.
pub fn qpe_probabilities(r: &CMat, psi: &CVec, t: usize) -> Vec<f64> {
    let d = psi.len();
    let mut powers: Vec<CVec> = Vec::with_capacity(t);
    let mut v = psi.clone();
    for _ in 0..t {
        powers.push(v.clone());
        v = r * &v;
    }
    let tf = t as f64;
    (0..t)
        .map(|k| {
            let mut amp = CVec::zeros(d);
            for (j, pj) in powers.iter().enumerate() {
                let phase = Complex64::from_polar(1.0 / tf, -2.0 * PI * (k as f64) * (j as f64) / tf);
                amp += pj.map(|z| z * phase);
            }
            amp.norm_squared()
        })
        .collect()
}

/// Same readout computed from an explicit arc (x) counter state vector.
pub fn qpe_probabilities_from_state(state: &CVec, d: usize, t: usize) -> Vec<f64> {
    let tf = t as f64;
    (0..t)
        .map(|k| {
            let mut p = 0.0;
            for a in 0..d {
                let mut amp = Complex64::new(0.0, 0.0);
                for j in 0..t {
                    let phase =
                        Complex64::from_polar(1.0 / tf.sqrt(), -2.0 * PI * (k as f64) * (j as f64) / tf);
                    amp += state[a * t + j] * phase;
                }
                p += amp.norm_sqr();
            }
            p
        })
        .collect()
}

/// Map a sampled counter value to an angle in [0, pi/2]: the eigenphase is
/// 2 theta = 2 pi j / T, read on whichever branch lands in range.
pub fn theta_from_counter(j: usize, t: usize) -> f64 {
    PI * (j.min(t - j) as f64) / (t as f64)
}

fn sample_counter(probs: &[f64], rng: &mut impl Rng) -> usize {
    let total: f64 = probs.iter().sum();
    let mut u = rng.gen::<f64>() * total;
    for (j, p) in probs.iter().enumerate() {
        u -= p;
        if u <= 0.0 {
            return j;
        }
    }
    probs.len() - 1
}

/// Outcome of one estimation run.
#[derive(Debug, Clone, Serialize)]
pub struct EstimateRecord {
    /// Point estimate of R_s d_s (or of the generic witness size).
    pub estimate: f64,
    /// Estimate of 1/sqrt(R_s d_s) (resp. 1/sqrt(omega)).
    pub inv_sqrt_estimate: f64,
    pub theta_estimate: f64,
    /// Counter length used by phase estimation.
    pub t: usize,
    /// Complexity bound per controlled power.
    pub tau: f64,
    /// Accounted walk-step budget, tau * T per QPE run.
    pub walk_steps: f64,
    pub iterations: usize,
    pub success: bool,
}

/// One phase-estimation run on the graph's rotation: sample the counter,
/// read theta off the sampled phase, and return 1/(2 sin^2 theta) as the
/// estimate of R_s d_s. `tau` is the caller's bound on ET_s/(R_s d_s).
pub fn qpe_estimate(g: &Graph, tau: f64, t: usize, seed: u64) -> Result<EstimateRecord> {
    if !(tau >= 1.0) {
        return Err(Error::validation(format!("qpe: tau = {tau} below the trivial bound 1")));
    }
    if t < 2 {
        return Err(Error::validation("qpe: counter length must be >= 2".to_string()));
    }
    let es = edge_space::build(g)?;
    let rm = rotation_model(&es)?;
    let probs = qpe_probabilities(&rm.r, &es.phi_s, t);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let j = sample_counter(&probs, &mut rng);
    Ok(record_from_theta(theta_from_counter(j, t), tau, t, 1))
}

fn record_from_theta(theta: f64, tau: f64, t: usize, iterations: usize) -> EstimateRecord {
    let s = theta.sin();
    let (estimate, success) = if s > 0.0 { (1.0 / (2.0 * s * s), true) } else { (f64::INFINITY, false) };
    EstimateRecord {
        estimate,
        inv_sqrt_estimate: std::f64::consts::SQRT_2 * s,
        theta_estimate: theta,
        t,
        tau,
        walk_steps: tau * t as f64,
        iterations,
        success,
    }
}

/// Median-of-means amplification of [`qpe_estimate`] to failure probability
/// `fail_prob`: 15 groups of repeated samples, group means of sin(theta),
/// median across groups.
pub fn qpe_estimate_median(
    g: &Graph,
    tau: f64,
    t: usize,
    seed: u64,
    fail_prob: f64,
) -> Result<EstimateRecord> {
    if !(fail_prob > 0.0 && fail_prob < 1.0) {
        return Err(Error::validation(format!("qpe: bad failure probability {fail_prob}")));
    }
    let groups = 15usize;
    let per_group = ((1.0 / fail_prob).ln().ceil() as usize).max(2);
    let es = edge_space::build(g)?;
    let rm = rotation_model(&es)?;
    let probs = qpe_probabilities(&rm.r, &es.phi_s, t);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut means: Vec<f64> = (0..groups)
        .map(|_| {
            let sum: f64 = (0..per_group)
                .map(|_| theta_from_counter(sample_counter(&probs, &mut rng), t).sin())
                .sum();
            sum / per_group as f64
        })
        .collect();
    means.sort_by(|a, b| a.total_cmp(b));
    let med = means[groups / 2];
    let mut rec = record_from_theta(med.asin(), tau, t, 1);
    rec.walk_steps = tau * t as f64 * (groups * per_group) as f64;
    Ok(rec)
}

/// Estimate R_s d_s to multiplicative error O(eps), given an escape-time
/// bound `et_bar >= ET_s` and a constant-factor estimate
/// `R_s d_s / 2 <= p <= R_s d_s`: attach the source stub with eta = et_bar/p,
/// estimate the modified product by QPE, and map back via (p_hat - 1)/eta.
pub fn estimate_known(g: &Graph, et_bar: f64, p: f64, eps: f64, seed: u64) -> Result<EstimateRecord> {
    if !(p > 0.0) || !(eps > 0.0 && eps < 1.0) || !(et_bar >= 1.0) {
        return Err(Error::validation(format!(
            "estimate-known: bad parameters et_bar={et_bar} p={p} eps={eps}"
        )));
    }
    let eta = et_bar / p;
    let mg = attach_source_stub(g, eta)?;
    let t = known_estimate_counter(et_bar, eps);
    // On the stub graph the escape-time ratio is at most 3.
    let rec = qpe_estimate(&mg.graph, 3.0, t, seed)?;
    let estimate = (rec.estimate - 1.0) / eta;
    let success = rec.success && estimate > 0.0;
    Ok(EstimateRecord {
        estimate,
        inv_sqrt_estimate: if success { 1.0 / estimate.sqrt() } else { 0.0 },
        theta_estimate: rec.theta_estimate,
        t,
        tau: 3.0,
        walk_steps: 3.0 * t as f64,
        iterations: 1,
        success,
    })
}

/// Counter length used by [`estimate_known`].
pub fn known_estimate_counter(et_bar: f64, eps: f64) -> usize {
    (2.0 * std::f64::consts::SQRT_2 * PI * (1.0 + 2.0 * et_bar).sqrt() / eps).ceil() as usize
}

/// Outcome of the halving search for an unknown R_s d_s.
#[derive(Debug, Clone, Serialize)]
pub struct BinarySearchRecord {
    /// The returned scale: with constant probability 7/18 <= p_tilde R_s d_s <= 16.
    pub p_tilde: f64,
    /// 1/p_tilde, the implied constant-factor estimate of R_s d_s.
    pub rd_estimate: f64,
    pub iterations: usize,
    pub t: usize,
    pub walk_steps: f64,
}

/// Halving search: attach the stub with eta = p_tilde * et_bar, phase-estimate
/// 1/sqrt of the modified product with a T = ceil(18 sqrt(et_bar)) counter,
/// and halve p_tilde while the estimate stays below 1/(2 sqrt(et_bar)).
pub fn binary_search_estimate(g: &Graph, et_bar: f64, seed: u64) -> Result<BinarySearchRecord> {
    if !(et_bar >= 1.0) {
        return Err(Error::validation(format!("halving search: bad bound {et_bar}")));
    }
    let t = (18.0 * et_bar.sqrt()).ceil() as usize;
    let threshold = 1.0 / (2.0 * et_bar.sqrt());
    let max_iterations = et_bar.log2().ceil() as usize + 2;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut p_tilde = 1.0f64;
    let mut iterations = 0usize;
    let mut walk_steps = 0.0f64;
    loop {
        let mg = attach_source_stub(g, p_tilde * et_bar)?;
        let rec = qpe_estimate(&mg.graph, 3.0, t, rng.gen::<u64>())?;
        iterations += 1;
        walk_steps += rec.walk_steps;
        let a = rec.inv_sqrt_estimate;
        if a <= threshold && p_tilde >= 2.0 / et_bar {
            p_tilde /= 2.0;
            if iterations > max_iterations {
                return Err(Error::budget(format!(
                    "halving search: {iterations} iterations exceed the log bound {max_iterations}"
                )));
            }
        } else {
            return Ok(BinarySearchRecord {
                p_tilde,
                rd_estimate: 1.0 / p_tilde,
                iterations,
                t,
                walk_steps,
            });
        }
    }
}

/// The two-hypothesis instance behind the 1/eps optimality argument: skewed
/// two-edge paths with weights 1/2 +- delta, whose products differ
/// multiplicatively while the walk reflections almost coincide.
#[derive(Debug, Clone)]
pub struct LowerBoundPair {
    pub plus: Graph,
    pub minus: Graph,
    /// R_s d_s = 1/(1/2 - delta) on the + instance.
    pub rd_plus: f64,
    /// R_s d_s = 1/(1/2 + delta) on the - instance.
    pub rd_minus: f64,
    /// Multiplicative gap between the two hypotheses.
    pub gap_ratio: f64,
    /// |<phi_x(+)|phi_x(-)>| = sqrt(1 - 4 delta^2): the overlap of the two
    /// reflection axes, the quantity a distinguisher has to resolve.
    pub star_overlap: f64,
}

/// Build the lower-bound pair and cross-check the closed forms against the
/// electric solver.
pub fn lower_bound_fixture(delta: f64) -> Result<LowerBoundPair> {
    if !(delta > 0.0 && delta < 0.5) {
        return Err(Error::validation(format!("lower-bound pair: delta = {delta} out of range")));
    }
    let plus = fixtures::skew_path(delta);
    let minus = fixtures::skew_path(-delta);
    let rd_plus = 1.0 / (0.5 - delta);
    let rd_minus = 1.0 / (0.5 + delta);
    for (g, rd) in [(&plus, rd_plus), (&minus, rd_minus)] {
        let sol = solve_electric(g)?;
        let measured = sol.r_s * g.degrees[g.s];
        if (measured - rd).abs() > 1e-10 {
            return Err(Error::numerical(format!(
                "lower-bound pair: solver gives R_s d_s = {measured}, closed form {rd}"
            )));
        }
    }
    Ok(LowerBoundPair {
        plus,
        minus,
        rd_plus,
        rd_minus,
        gap_ratio: rd_plus / rd_minus,
        star_overlap: (1.0 - 4.0 * delta * delta).sqrt(),
    })
}

/// Generic witness-size estimation: for projectors Pi, Delta and
/// psi in ker(Pi), estimate omega = 1/||P psi||^2 with
/// P the projector onto ker(Pi) `cap` ker(Delta), by phase estimation on the
/// rotation (I - 2|psi><psi|)(2P - I). Costs are accounted as tau * T calls
/// to (2 Pi - I)(2 Delta - I).
pub fn witness_size_estimate(
    pi: &CMat,
    delta: &CMat,
    psi: &CVec,
    tau: f64,
    t: usize,
    seed: u64,
) -> Result<EstimateRecord> {
    if (pi * psi).norm() > 1e-10 {
        return Err(Error::validation(
            "witness size: initial state must lie in the kernel of Pi".to_string(),
        ));
    }
    if t < 2 {
        return Err(Error::validation("witness size: counter length must be >= 2".to_string()));
    }
    let d = psi.len();
    let p = invariant_projector(pi, delta)?;
    let refl = eye(d) - (psi * psi.adjoint()).map(|z| z * c(2.0));
    let r = &refl * (p.map(|z| z * c(2.0)) - eye(d));
    let probs = qpe_probabilities(&r, psi, t);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let j = sample_counter(&probs, &mut rng);
    let theta = theta_from_counter(j, t);
    let s = theta.sin();
    let (estimate, success) = if s > 0.0 { (1.0 / (s * s), true) } else { (f64::INFINITY, false) };
    Ok(EstimateRecord {
        estimate,
        inv_sqrt_estimate: s,
        theta_estimate: theta,
        t,
        tau,
        walk_steps: tau * t as f64,
        iterations: 1,
        success,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{fixtures, random_connected_weighted};
    use crate::walk::walk_quantities;
    use approx::assert_abs_diff_eq;

    #[test]
    fn rotation_eigenphases_on_fixtures_and_random_graphs() {
        for (name, g) in fixtures::all_named() {
            let es = edge_space::build(&g).unwrap();
            let rm = rotation_model(&es).unwrap();
            let sol = solve_electric(&g).unwrap();
            let rd = sol.r_s * g.degrees[g.s];
            assert!(
                (rm.theta.sin() - 1.0 / (2.0f64 * rd).sqrt()).abs() < 1e-10,
                "sin theta mismatch on {name}"
            );
        }
        for seed in 0..50 {
            let g = random_connected_weighted(6, 3, 1, seed).unwrap();
            let es = edge_space::build(&g).unwrap();
            let rm = rotation_model(&es).unwrap();
            let sol = solve_electric(&g).unwrap();
            let rd = sol.r_s * g.degrees[g.s];
            assert!((rm.theta.sin() - 1.0 / (2.0f64 * rd).sqrt()).abs() < 1e-10, "seed {seed}");
        }
    }

    #[test]
    fn power_state_single_edge_two_steps() {
        let g = fixtures::single_edge();
        let ps = controlled_power_state(&g, 2).unwrap();
        assert_abs_diff_eq!(ps.theta, PI / 4.0, epsilon = 1e-12);
        let es = edge_space::build(&g).unwrap();
        let rm = rotation_model(&es).unwrap();
        let rphi = &rm.r * &es.phi_s;
        let d = es.basis.dim();
        for a in 0..d {
            assert!((ps.state[a * 2] - es.phi_s[a] * c(1.0 / 2f64.sqrt())).norm() < 1e-12);
            assert!((ps.state[a * 2 + 1] - rphi[a] * c(1.0 / 2f64.sqrt())).norm() < 1e-12);
        }
        // No interior vertices: the catalyst is just the in-flight
        // component at slot 1, of squared norm 1/2.
        assert_abs_diff_eq!(ps.certificate.w_norm_sq, 0.5, epsilon = 1e-12);
    }

    #[test]
    fn power_state_trivial_counter_is_the_star_state() {
        let g = fixtures::path3();
        let ps = controlled_power_state(&g, 1).unwrap();
        let es = edge_space::build(&g).unwrap();
        assert!(dist(&ps.state, &es.phi_s) < 1e-12);
    }

    #[test]
    fn power_state_readout_peaks_exactly_on_path3() {
        // theta = pi/6, so the eigenphases 2 theta = +-pi/3 sit exactly on
        // counter values 1 and 5 of a length-6 counter.
        let g = fixtures::path3();
        let ps = controlled_power_state(&g, 6).unwrap();
        let d = ps.state.len() / 6;
        let probs = qpe_probabilities_from_state(&ps.state, d, 6);
        assert_abs_diff_eq!(probs[1], 0.5, epsilon = 1e-10);
        assert_abs_diff_eq!(probs[5], 0.5, epsilon = 1e-10);
        for j in [0, 2, 3, 4] {
            assert!(probs[j] < 1e-10, "stray mass at {j}");
        }
        // The step formula bounds W by (ET/(R d)) T = (3/2) T.
        assert!(ps.w_formula <= 1.5 * 6.0 + 1e-9, "W = {}", ps.w_formula);
        assert_abs_diff_eq!(ps.w_formula, ps.certificate.w_norm_sq, epsilon = 1e-8);
    }

    #[test]
    fn power_state_dimension_cap() {
        let err = controlled_power_state(&fixtures::path3(), 40).unwrap_err();
        assert!(matches!(err, Error::Validation(_)));
    }

    #[test]
    fn degraded_power_state_hits_the_target_band() {
        let dg = controlled_power_state_degraded(&fixtures::path3(), 6, 0.1).unwrap();
        assert!(dg.scale < 1.0 && dg.scale > 0.0);
        assert!(dg.distance <= dg.bound + 1e-12);
        assert!(dg.bound <= 0.1 + 1e-12);
        assert!(dg.distance > 1e-6, "truncation should actually perturb the state");
    }

    #[test]
    fn qpe_exact_readouts() {
        // path3 with T = 6: every seed reads sin(theta) = 1/2 and the exact
        // product 2.
        for seed in 0..20 {
            let rec = qpe_estimate(&fixtures::path3(), 1.5, 6, seed).unwrap();
            assert_abs_diff_eq!(rec.estimate, 2.0, epsilon = 1e-10);
            assert_abs_diff_eq!(rec.walk_steps, 9.0, epsilon = 1e-12);
        }
        // Single edge with T = 4: theta = pi/4 sits exactly on counter 1.
        for seed in 0..20 {
            let rec = qpe_estimate(&fixtures::single_edge(), 1.0, 4, seed).unwrap();
            assert_abs_diff_eq!(rec.theta_estimate, PI / 4.0, epsilon = 1e-12);
            assert_abs_diff_eq!(rec.estimate, 1.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn qpe_tail_bound_on_the_skew_path() {
        // Off-grid phase: at least 2/3 of seeds land within 2 pi / T.
        let g = fixtures::skew_path(0.1);
        let t = 64usize;
        let es = edge_space::build(&g).unwrap();
        let rm = rotation_model(&es).unwrap();
        let probs = qpe_probabilities(&rm.r, &es.phi_s, t);
        let target = 1.0 / 5f64.sqrt(); // sin theta = 1/sqrt(2 * 2.5)
        let mut hits = 0usize;
        let runs = 1000usize;
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..runs {
            let j = sample_counter(&probs, &mut rng);
            let s = theta_from_counter(j, t).sin();
            if (s - target).abs() <= 2.0 * PI / t as f64 {
                hits += 1;
            }
        }
        assert!(hits as f64 >= 2.0 / 3.0 * runs as f64, "{hits}/{runs} within the band");
    }

    #[test]
    fn known_estimate_hits_the_multiplicative_band() {
        // (fixture, et_bar, p, eps, exact R_s d_s, band)
        let cases: [(Graph, f64, f64, f64, f64); 3] = [
            (fixtures::path3(), 3.0, 1.0, 0.1, 2.0),
            (fixtures::single_edge(), 1.0, 1.0, 0.25, 1.0),
            (fixtures::skew_path(0.1), 4.0, 1.25, 0.05, 2.5),
        ];
        for (g, et_bar, p, eps, exact) in cases {
            let mut hits = 0usize;
            let runs = 200usize;
            for seed in 0..runs as u64 {
                let rec = estimate_known(&g, et_bar, p, eps, seed).unwrap();
                if rec.success && (rec.estimate - exact).abs() <= eps * exact {
                    hits += 1;
                }
            }
            assert!(
                hits as f64 >= 2.0 / 3.0 * runs as f64,
                "{hits}/{runs} within {eps} of {exact}"
            );
        }
    }

    #[test]
    fn known_estimate_budget_scales_as_inverse_eps() {
        // Budget tau * T against sqrt(et_bar)/eps: constant across the grid
        // within a factor 8, and log-log slope in [0.8, 1.2] against 1/eps.
        let grid_eps = [0.2, 0.1, 0.05];
        let cases = [(fixtures::path3(), 3.0), (fixtures::single_edge(), 1.0), (fixtures::skew_path(0.1), 4.0)];
        let mut ratios: Vec<f64> = Vec::new();
        for (g, et_bar) in &cases {
            let mut xs: Vec<f64> = Vec::new();
            let mut ys: Vec<f64> = Vec::new();
            for &eps in &grid_eps {
                let rec = estimate_known(g, *et_bar, 1.0, eps, 1).unwrap();
                ratios.push(rec.walk_steps / (et_bar.sqrt() / eps));
                xs.push((1.0 / eps).ln());
                ys.push(rec.walk_steps.ln());
            }
            // Least-squares slope over the three points.
            let n = xs.len() as f64;
            let mx = xs.iter().sum::<f64>() / n;
            let my = ys.iter().sum::<f64>() / n;
            let slope = xs
                .iter()
                .zip(&ys)
                .map(|(x, y)| (x - mx) * (y - my))
                .sum::<f64>()
                / xs.iter().map(|x| (x - mx) * (x - mx)).sum::<f64>();
            assert!((0.8..=1.2).contains(&slope), "slope {slope}");
        }
        let lo = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = ratios.iter().cloned().fold(0.0f64, f64::max);
        assert!(hi / lo <= 8.0, "budget drift {lo}..{hi}");
    }

    #[test]
    fn halving_search_guarantee() {
        // Single edge terminates immediately with p_tilde = 1.
        let rec = binary_search_estimate(&fixtures::single_edge(), 1.0, 3).unwrap();
        assert_eq!(rec.iterations, 1);
        assert_abs_diff_eq!(rec.p_tilde, 1.0, epsilon = 0.0);

        // path3: 7/18 <= p_tilde R_s d_s <= 16 for at least 2/3 of seeds.
        let mut hits = 0usize;
        let runs = 300usize;
        for seed in 0..runs as u64 {
            let rec = binary_search_estimate(&fixtures::path3(), 3.0, seed).unwrap();
            let v = rec.p_tilde * 2.0;
            if (7.0 / 18.0..=16.0).contains(&v) {
                hits += 1;
            }
        }
        assert!(hits as f64 >= 2.0 / 3.0 * runs as f64, "{hits}/{runs} in the guarantee band");
    }

    #[test]
    fn halving_search_iteration_bound_on_a_long_path() {
        let g = fixtures::path_end_to_end(9);
        let sol = solve_electric(&g).unwrap();
        let stats = walk_quantities(&g, &sol);
        let et_bar = stats.et;
        assert_abs_diff_eq!(et_bar, 43.0, epsilon = 1e-9);
        let cap = et_bar.log2().ceil() as usize;
        for seed in 0..40 {
            let rec = binary_search_estimate(&g, et_bar, seed).unwrap();
            assert!(rec.iterations <= cap, "{} iterations at seed {seed}", rec.iterations);
        }
    }

    #[test]
    fn witness_size_on_the_walk_projectors() {
        // (Pi_*, Pi_+, phi_s) on path3: omega = 2 R_s d_s = 4, and theta
        // sits exactly on a length-12 counter.
        let g = fixtures::path3();
        let es = edge_space::build(&g).unwrap();
        let rec = witness_size_estimate(&es.projs.pi_star, &es.projs.pi_plus, &es.phi_s, 2.0, 12, 5)
            .unwrap();
        assert_abs_diff_eq!(rec.estimate, 4.0, epsilon = 1e-9);
        assert_abs_diff_eq!(rec.walk_steps, 24.0, epsilon = 1e-12);
    }

    #[test]
    fn witness_size_with_trivial_pi_matches_dense_omega() {
        // Pi = 0: P projects onto ker(Delta); omega from the dense projector
        // must match the estimate within the QPE resolution.
        let g = fixtures::skew_path(0.1);
        let es = edge_space::build(&g).unwrap();
        let d = es.basis.dim();
        let zero = CMat::zeros(d, d);
        let p = invariant_projector(&zero, &es.projs.pi_plus).unwrap();
        let omega = 1.0 / (&p * &es.phi_s).norm_squared();
        let t = 64usize;
        let mut hits = 0usize;
        let runs = 120usize;
        for seed in 0..runs as u64 {
            let rec = witness_size_estimate(&zero, &es.projs.pi_plus, &es.phi_s, 1.0, t, seed).unwrap();
            if (rec.inv_sqrt_estimate - 1.0 / omega.sqrt()).abs() <= 2.0 * PI / t as f64 {
                hits += 1;
            }
        }
        assert!(hits as f64 >= 2.0 / 3.0 * runs as f64, "{hits}/{runs}");
    }

    #[test]
    fn witness_size_rejects_states_outside_the_kernel() {
        let g = fixtures::path3();
        let es = edge_space::build(&g).unwrap();
        let x = g.interior()[0];
        let bad = crate::edge_space::star_state(&g, &es.basis, x).unwrap();
        let err =
            witness_size_estimate(&es.projs.pi_star, &es.projs.pi_plus, &bad, 2.0, 8, 0).unwrap_err();
        assert!(matches!(err, Error::Validation(_)));
    }

    #[test]
    fn lower_bound_pair_closed_forms() {
        let pair = lower_bound_fixture(0.1).unwrap();
        assert_abs_diff_eq!(pair.rd_plus, 2.5, epsilon = 1e-12);
        assert_abs_diff_eq!(pair.rd_minus, 5.0 / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(pair.star_overlap, (1.0f64 - 0.04).sqrt(), epsilon = 1e-12);
        let wide = lower_bound_fixture(0.25).unwrap();
        assert_abs_diff_eq!(wide.gap_ratio, 3.0, epsilon = 1e-12);
        // delta -> 0: the hypotheses coincide.
        let tiny = lower_bound_fixture(1e-9).unwrap();
        assert!((tiny.rd_plus - tiny.rd_minus).abs() < 1e-7);
        assert!(lower_bound_fixture(0.5).is_err());
    }

    #[test]
    fn median_amplification_tightens_the_tail() {
        let g = fixtures::skew_path(0.1);
        let t = 64usize;
        let target = 1.0 / 5f64.sqrt();
        let mut hits = 0usize;
        let runs = 50usize;
        for seed in 0..runs as u64 {
            let rec = qpe_estimate_median(&g, 2.0, t, seed, 0.05).unwrap();
            if (rec.theta_estimate.sin() - target).abs() <= 2.0 * PI / t as f64 {
                hits += 1;
            }
        }
        assert!(hits >= 45, "{hits}/{runs} after amplification");
    }
}
