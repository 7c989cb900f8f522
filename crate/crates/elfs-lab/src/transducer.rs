//! Transducers: unitaries on a public-plus-private space that map
//! xi (+) w  ->  tau (+) w, catalyzed by a private state w whose squared
//! norm is the transduction complexity. Provides the generic pseudoinverse
//! catalyst, the effective-gap (partial rotation) construction, composition
//! with a step counter, the Hadamard-test wrapper, truncated execution, and
//! the zero-error amplitude-amplification loop.

use crate::edge_space::{invariant_projector, partial_rotation_about, EdgeSpace};
use crate::graph::Graph;
use crate::linalg::{self, c, dist, eye, CMat, CVec};
use crate::{Error, Result, CERT_TOL};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

/// A unitary S on H (+) L together with the projector identifying the
/// public subspace H.
#[derive(Debug, Clone)]
pub struct Transducer {
    pub s: CMat,
    /// Projector onto the public space H.
    pub public: CMat,
    pub label: String,
}

impl Transducer {
    pub fn new(s: CMat, public: CMat, label: impl Into<String>) -> Result<Self> {
        let label = label.into();
        linalg::check_unitary(&s, 1e-10, &label)?;
        linalg::check_projector(&public, 1e-10, &label)?;
        Ok(Transducer { s, public, label })
    }

    pub fn dim(&self) -> usize {
        self.s.nrows()
    }

    /// Projector onto the private space L.
    pub fn private(&self) -> CMat {
        eye(self.dim()) - &self.public
    }

    pub fn identity(dim: usize, label: impl Into<String>) -> Self {
        Transducer { s: eye(dim), public: eye(dim), label: label.into() }
    }
}

/// A verified transduction xi -> tau with catalyst w.
#[derive(Debug, Clone)]
pub struct Certificate {
    pub xi: CVec,
    pub tau: CVec,
    pub w: CVec,
    /// Transduction complexity W = ||w||^2.
    pub w_norm_sq: f64,
    /// || S(xi + w) - (tau + w) ||.
    pub residual: f64,
}

impl Certificate {
    pub fn verify(t: &Transducer, xi: CVec, w: CVec) -> Result<Certificate> {
        let out = &t.s * (&xi + &w);
        let tau = &t.public * &out;
        let residual = (&out - &tau - &w).norm();
        if residual > CERT_TOL {
            return Err(Error::numerical(format!(
                "{}: transduction residual {residual:.2e} exceeds {CERT_TOL:.0e}",
                t.label
            )));
        }
        if (tau.norm() - xi.norm()).abs() > 1e-9 {
            return Err(Error::numerical(format!(
                "{}: output norm {} differs from input norm {}",
                t.label,
                tau.norm(),
                xi.norm()
            )));
        }
        let w_norm_sq = w.norm_squared();
        Ok(Certificate { xi, tau, w, w_norm_sq, residual })
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "W": self.w_norm_sq,
            "residual": self.residual,
            "input_norm": self.xi.norm(),
            "output_norm": self.tau.norm(),
        })
    }
}

/// Catalyst from the pseudoinverse formula w = (Pi - Pi S Pi)^+ Pi S xi,
/// where Pi projects onto the private space; verified by applying S.
pub fn generic_catalyst(t: &Transducer, xi: &CVec) -> Result<Certificate> {
    let pi = t.private();
    let priv_part = (&pi * xi).norm();
    if priv_part > 1e-10 {
        return Err(Error::validation(format!(
            "{}: input has private component of norm {priv_part:.2e}",
            t.label
        )));
    }
    let core = &pi - &pi * &t.s * &pi;
    let w = linalg::pinv(&core) * (&pi * &t.s * xi);
    Certificate::verify(t, xi.clone(), w)
}

/// Everything the effective-gap construction certifies for one (Pi, Delta,
/// psi, theta) tuple.
#[derive(Debug, Clone)]
pub struct EffectiveGapReport {
    /// The partial rotation U(theta) = I - (1 - e^{i theta})(I - Delta),
    /// public space ker(Pi).
    pub transducer: Transducer,
    /// psi -> (I - (1 - e^{i theta}) P) psi with P the projector onto
    /// ker Pi /\ ker Delta, catalyzed by (Pi - Pi Delta Pi)^+ Delta psi.
    pub certificate: Certificate,
    /// For theta = pi: the same catalyst under (2 Pi - I)(2 Delta - I),
    /// transducing psi -> (2P - I) psi.
    pub reflection: Option<Certificate>,
    /// || (I - Delta)(psi + w) - P psi ||: the intermediate identity behind
    /// the construction.
    pub intermediate_residual: f64,
}

/// Build the partial-rotation transducer about ker Pi /\ ker Delta and
/// certify it on psi in ker Pi, with the closed-form catalyst.
pub fn effective_gap_transducer(
    pi: &CMat,
    delta: &CMat,
    psi: &CVec,
    theta: f64,
) -> Result<EffectiveGapReport> {
    let d = pi.nrows();
    if (pi * psi).norm() > 1e-10 {
        return Err(Error::validation("effective gap: psi has a component in im(Pi)".to_string()));
    }
    let public = eye(d) - pi;
    let u_theta = partial_rotation_about(delta, theta);
    let transducer = Transducer::new(u_theta, public.clone(), format!("partial-rotation({theta})"))?;

    // Closed-form catalyst; independent of theta.
    let core = pi - pi * delta * pi;
    let w = linalg::pinv(&core) * (delta * psi);
    if ((eye(d) - pi) * &w).norm() > 1e-10 {
        return Err(Error::numerical("effective gap: catalyst leaves im(Pi)".to_string()));
    }

    let p = invariant_projector(pi, delta)?;
    let phase = Complex64::new(0.0, theta).exp();
    let expected_tau = psi - (&p * psi) * (c(1.0) - phase);
    let certificate = Certificate::verify(&transducer, psi.clone(), w.clone())?;
    if dist(&certificate.tau, &expected_tau) > CERT_TOL {
        return Err(Error::numerical(
            "effective gap: output differs from (I - (1 - e^{i theta}) P) psi".to_string(),
        ));
    }

    let intermediate_residual = ((eye(d) - delta) * (psi + &w) - &p * psi).norm();
    if intermediate_residual > CERT_TOL {
        return Err(Error::numerical(format!(
            "effective gap: (I - Delta)(psi + w) = P psi fails by {intermediate_residual:.2e}"
        )));
    }

    let reflection = if (theta - std::f64::consts::PI).abs() < 1e-12 {
        let refl = (pi * c(2.0) - eye(d)) * (delta * c(2.0) - eye(d));
        let t_refl = Transducer::new(refl, public, "double-reflection".to_string())?;
        let cert = Certificate::verify(&t_refl, psi.clone(), w)?;
        let expected = &p * psi * c(2.0) - psi;
        if dist(&cert.tau, &expected) > CERT_TOL {
            return Err(Error::numerical(
                "effective gap: reflection output differs from (2P - I) psi".to_string(),
            ));
        }
        Some(cert)
    } else {
        None
    };

    Ok(EffectiveGapReport { transducer, certificate, reflection, intermediate_residual })
}

/// The quantum walk operator as a transducer: on input |phi_s> it produces
/// (2|f><f| - I)|phi_s> with the closed-form catalyst
/// w = (1/(R_s sqrt(d_s))) sum_{x interior} v_x sqrt(d_x) |phi_x>
/// and complexity ET_s/(R_s d_s) - 1.
pub fn elfs_reflection_certificate(g: &Graph, es: &EdgeSpace) -> Result<Certificate> {
    let d = es.basis.dim();
    let public = eye(d) - &es.projs.pi_star;
    let t = Transducer::new(es.u.clone(), public, "walk-transducer")?;

    // Closed-form catalyst.
    let r_s = es.sol.r_s;
    let d_s = g.degrees[g.s];
    let mut w = CVec::zeros(d);
    for x in g.interior() {
        let phi = crate::edge_space::star_state(g, &es.basis, x)?;
        w += phi * c(es.sol.voltages[x] * g.degrees[x].sqrt() / (r_s * d_s.sqrt()));
    }
    let cert = Certificate::verify(&t, es.phi_s.clone(), w)?;

    // Cross-checks: generic pseudoinverse catalyst, the complexity closed
    // form, and the reflected-flow output.
    let generic = generic_catalyst(&t, &es.phi_s)?;
    if dist(&cert.w, &generic.w) > 1e-9 {
        return Err(Error::numerical(
            "walk transducer: closed-form catalyst differs from the generic formula".to_string(),
        ));
    }
    let stats = crate::walk::walk_quantities(g, &es.sol);
    let w_expected = stats.et / stats.rd - 1.0;
    if (cert.w_norm_sq - w_expected).abs() > 1e-9 {
        return Err(Error::numerical(format!(
            "walk transducer: W = {} but ET/(Rd) - 1 = {w_expected}",
            cert.w_norm_sq
        )));
    }
    let overlap = es.f.dotc(&es.phi_s);
    let expected_tau = &es.f * (overlap * c(2.0)) - &es.phi_s;
    if dist(&cert.tau, &expected_tau) > CERT_TOL {
        return Err(Error::numerical(
            "walk transducer: output differs from (2|f><f| - I)|phi_s>".to_string(),
        ));
    }
    Ok(cert)
}

/// Per-step record of a composition.
#[derive(Debug, Clone, Serialize)]
pub struct ComposeStep {
    /// ||psi_{t,0}||^2: squared norm of the component still running at step t.
    pub in_flight: f64,
    /// Complexity of step t's transducer on its (normalized) input.
    pub step_w: f64,
}

/// Composition of transducers S_0..S_{m-1} under a step counter.
#[derive(Debug, Clone)]
pub struct Composition {
    pub transducer: Transducer,
    pub certificate: Certificate,
    pub steps: Vec<ComposeStep>,
    /// W_0 + sum_{t>=1} ||psi_{t,0}||^2 (1 + W_t), which the measured
    /// ||w||^2 must reproduce.
    pub w_formula: f64,
    /// Squared norm of the component that would continue past the last step.
    pub truncation_tail: f64,
}

/// Compose steps under a counter: the composed unitary is
/// V_c . sum_t |t><t| (x) S_t, where V_c advances the counter on the
/// continuing public component h1. Each step consumes the h1 part of the
/// previous output; the h0 parts accumulate as the composed output
/// sum_t |t> (x) psi_{t,1}.
pub fn compose_transducers(
    steps: &[Transducer],
    h1: &CMat,
    psi00: &CVec,
    tail_bound: f64,
) -> Result<Composition> {
    if steps.is_empty() {
        return Err(Error::validation("compose: no steps given".to_string()));
    }
    let d = steps[0].dim();
    for t in steps {
        if t.dim() != d {
            return Err(Error::validation("compose: step dimensions differ".to_string()));
        }
    }
    let m = steps.len();
    let counter = m + 1;
    let h0 = |t: &Transducer| -> CMat { &t.public - h1 };

    // Walk psi through the chain, collecting per-step certificates.
    let mut per_step: Vec<ComposeStep> = Vec::with_capacity(m);
    let mut certs: Vec<Certificate> = Vec::with_capacity(m);
    let mut finished: Vec<CVec> = Vec::with_capacity(m);
    let mut in_flight = psi00.clone();
    let mut in_flight_norms: Vec<f64> = Vec::with_capacity(m + 1);
    for t in steps {
        let n2 = in_flight.norm_squared();
        in_flight_norms.push(n2);
        if n2 < 1e-30 {
            // Nothing left to process: pad with empty steps.
            per_step.push(ComposeStep { in_flight: 0.0, step_w: 0.0 });
            certs.push(Certificate {
                xi: CVec::zeros(d),
                tau: CVec::zeros(d),
                w: CVec::zeros(d),
                w_norm_sq: 0.0,
                residual: 0.0,
            });
            finished.push(CVec::zeros(d));
            continue;
        }
        let cert = generic_catalyst(t, &in_flight)?;
        finished.push(&h0(t) * &cert.tau);
        in_flight = h1 * &cert.tau;
        per_step.push(ComposeStep { in_flight: n2, step_w: cert.w_norm_sq / n2 });
        certs.push(cert);
    }
    let truncation_tail = in_flight.norm_squared();
    in_flight_norms.push(truncation_tail);
    if truncation_tail > tail_bound {
        return Err(Error::budget(format!(
            "compose: truncation tail {truncation_tail:.2e} exceeds bound {tail_bound:.0e}; \
             add steps or raise the bound"
        )));
    }

    // Assemble the composed unitary on counter (x) space.
    let big = counter * d;
    let mut block = CMat::zeros(big, big);
    for (t, step) in steps.iter().enumerate() {
        block.view_mut((t * d, t * d), (d, d)).copy_from(&step.s);
    }
    block.view_mut((m * d, m * d), (d, d)).copy_from(&eye(d));
    // Counter advance: cyclic shift on the continuing component (cyclic to
    // stay unitary; the wrapped slot is exactly the recorded tail).
    let mut vc = CMat::zeros(big, big);
    for t in 0..counter {
        let next = (t + 1) % counter;
        let rest = eye(d) - h1;
        vc.view_mut((next * d, t * d), (d, d)).copy_from(&(h1.clone()));
        let dst = vc.view((t * d, t * d), (d, d)) + rest;
        vc.view_mut((t * d, t * d), (d, d)).copy_from(&dst);
    }
    let s = &vc * &block;

    // Composed public space: the fresh input slot |0> (x) h1 plus every
    // counter value's finished component |t> (x) h0.
    let mut public = CMat::zeros(big, big);
    public.view_mut((0, 0), (d, d)).copy_from(h1);
    for (t, step) in steps.iter().enumerate() {
        let dst = public.view((t * d, t * d), (d, d)) + h0(step);
        public.view_mut((t * d, t * d), (d, d)).copy_from(&dst);
    }
    let composed = Transducer::new(s, public, "composition")?;

    // Certificate assembled from the chain: catalyst = in-flight components
    // at t >= 1 plus each step's private catalyst.
    let mut xi = CVec::zeros(big);
    xi.rows_mut(0, d).copy_from(psi00);
    let mut w = CVec::zeros(big);
    for (t, cert) in certs.iter().enumerate() {
        if t >= 1 {
            let dst = w.rows(t * d, d) + &cert.xi;
            w.rows_mut(t * d, d).copy_from(&dst);
        }
        let dst = w.rows(t * d, d) + &cert.w;
        w.rows_mut(t * d, d).copy_from(&dst);
    }
    // The mass continuing past the last step sits in the overflow slot; it
    // is private, so it belongs to the catalyst (and wraps around into the
    // |0> slot of the output, within the tail bound).
    w.rows_mut(m * d, d).copy_from(&in_flight);
    let certificate = Certificate::verify(&composed, xi, w)?;

    // Expected output sum_t |t> (x) psi_{t,1}.
    let mut expected = CVec::zeros(big);
    for (t, fin) in finished.iter().enumerate() {
        expected.rows_mut(t * d, d).copy_from(fin);
    }
    if dist(&certificate.tau, &expected) > CERT_TOL + 2.0 * truncation_tail.sqrt() {
        return Err(Error::numerical(
            "compose: output differs from the per-step finished components".to_string(),
        ));
    }

    // Complexity formula: W_0 + sum_{t>=1} ||psi_{t,0}||^2 (1 + W_t).
    let mut w_formula = per_step[0].in_flight * per_step[0].step_w;
    for (t, st) in per_step.iter().enumerate().skip(1) {
        let _ = t;
        w_formula += st.in_flight * (1.0 + st.step_w);
    }
    if (w_formula - certificate.w_norm_sq).abs() > 1e-8 + truncation_tail {
        return Err(Error::numerical(format!(
            "compose: measured W {} differs from the step formula {w_formula}",
            certificate.w_norm_sq
        )));
    }
    Ok(Composition { transducer: composed, certificate, steps: per_step, w_formula, truncation_tail })
}

/// A sequential pipeline of transducers: every step passes its whole public
/// output to the next step, and the final state sits in the last counter
/// slot (which is public alongside the input slot |0>).
#[derive(Debug, Clone)]
pub struct Pipeline {
    pub transducer: Transducer,
    pub certificate: Certificate,
    /// The final-step output on the step space.
    pub output: CVec,
    /// Per-step complexities W_t on the (unit-norm) intermediate states.
    pub step_ws: Vec<f64>,
    /// W_0 + sum_{t>=1} (1 + W_t), which the measured ||w||^2 reproduces.
    pub w_formula: f64,
}

/// Compose steps that all share the same public projector into one
/// transducer mapping |0> (x) xi0 -> |m> (x) (S-action chain applied to
/// xi0). The counter advances cyclically on the shared public space; the
/// intermediate public states at slots 1..m-1 are private for the
/// composition and join the catalyst.
pub fn pipeline_compose(steps: &[Transducer], xi0: &CVec) -> Result<Pipeline> {
    if steps.is_empty() {
        return Err(Error::validation("pipeline: no steps given".to_string()));
    }
    let d = steps[0].dim();
    let h = steps[0].public.clone();
    for t in steps {
        if t.dim() != d || (&t.public - &h).norm() > 1e-10 {
            return Err(Error::validation(
                "pipeline: steps must share dimension and public space".to_string(),
            ));
        }
    }
    let m = steps.len();
    let counter = m + 1;

    // Chain the per-step certificates: the whole public output continues.
    let mut certs: Vec<Certificate> = Vec::with_capacity(m);
    let mut state = xi0.clone();
    for t in steps {
        let cert = generic_catalyst(t, &state)?;
        state = cert.tau.clone();
        certs.push(cert);
    }
    let output = state;

    // Block unitary: S_t on slot t, identity on the output slot m, then a
    // cyclic counter advance on the public part.
    let big = counter * d;
    let mut block = CMat::zeros(big, big);
    for (t, step) in steps.iter().enumerate() {
        block.view_mut((t * d, t * d), (d, d)).copy_from(&step.s);
    }
    block.view_mut((m * d, m * d), (d, d)).copy_from(&eye(d));
    let mut vc = CMat::zeros(big, big);
    let rest = eye(d) - &h;
    for t in 0..counter {
        let next = (t + 1) % counter;
        vc.view_mut((next * d, t * d), (d, d)).copy_from(&h);
        let dst = vc.view((t * d, t * d), (d, d)) + &rest;
        vc.view_mut((t * d, t * d), (d, d)).copy_from(&dst);
    }
    let s = &vc * &block;

    // Public space: the input slot and the output slot only.
    let mut public = CMat::zeros(big, big);
    public.view_mut((0, 0), (d, d)).copy_from(&h);
    public.view_mut((m * d, m * d), (d, d)).copy_from(&h);
    let composed = Transducer::new(s, public, "pipeline")?;

    // Catalyst: slot 0 carries w_0; slot t >= 1 carries psi_t + w_t.
    let mut xi = CVec::zeros(big);
    xi.rows_mut(0, d).copy_from(xi0);
    let mut w = CVec::zeros(big);
    for (t, cert) in certs.iter().enumerate() {
        if t >= 1 {
            let dst = w.rows(t * d, d) + &cert.xi;
            w.rows_mut(t * d, d).copy_from(&dst);
        }
        let dst = w.rows(t * d, d) + &cert.w;
        w.rows_mut(t * d, d).copy_from(&dst);
    }
    let certificate = Certificate::verify(&composed, xi, w)?;

    let mut expected = CVec::zeros(big);
    expected.rows_mut(m * d, d).copy_from(&output);
    if dist(&certificate.tau, &expected) > CERT_TOL {
        return Err(Error::numerical(
            "pipeline: output differs from the chained step outputs".to_string(),
        ));
    }

    let step_ws: Vec<f64> =
        certs.iter().map(|c| c.w_norm_sq / c.xi.norm_squared().max(1e-30)).collect();
    let mut w_formula = certs[0].w_norm_sq;
    for cert in certs.iter().skip(1) {
        w_formula += cert.xi.norm_squared() + cert.w_norm_sq;
    }
    if (w_formula - certificate.w_norm_sq).abs() > 1e-8 {
        return Err(Error::numerical(format!(
            "pipeline: measured W {} differs from the step formula {w_formula}",
            certificate.w_norm_sq
        )));
    }
    Ok(Pipeline { transducer: composed, certificate, output, step_ws, w_formula })
}

/// Hadamard-test wrapper V' = (I (x) H) cV (I (x) H) on space (x) qubit.
/// For a reflection transducer V about a marked state, V' transduces
/// psi (x) |0>  ->  gamma |marked>|0> + delta |rest>|1>, with catalyst
/// (1/sqrt2) w (x) |->   and complexity W_V / 2.
pub fn hadamard_test_transducer(v: &Transducer) -> Result<Transducer> {
    let d = v.dim();
    let h = CMat::from_row_slice(
        2,
        2,
        &[
            c(std::f64::consts::FRAC_1_SQRT_2),
            c(std::f64::consts::FRAC_1_SQRT_2),
            c(std::f64::consts::FRAC_1_SQRT_2),
            c(-std::f64::consts::FRAC_1_SQRT_2),
        ],
    );
    let ih = eye(d).kronecker(&h);
    let mut p0 = CMat::zeros(2, 2);
    p0[(0, 0)] = c(1.0);
    let mut p1 = CMat::zeros(2, 2);
    p1[(1, 1)] = c(1.0);
    let cv = eye(d).kronecker(&p0) + v.s.kronecker(&p1);
    let s = &ih * cv * &ih;
    // Public space: public_V on the space factor, full qubit.
    let public = v.public.kronecker(&eye(2));
    Transducer::new(s, public, format!("hadamard-test({})", v.label))
}

/// Certify the Hadamard-test transducer on psi (x) |0> with the closed-form
/// catalyst (1/sqrt2) w (x) |->, where w is V's catalyst on psi.
pub fn hadamard_test_certificate(
    v: &Transducer,
    inner: &Certificate,
) -> Result<(Transducer, Certificate)> {
    let vp = hadamard_test_transducer(v)?;
    let d = v.dim();
    let mut xi = CVec::zeros(2 * d);
    for i in 0..d {
        xi[2 * i] = inner.xi[i];
    }
    let mut w = CVec::zeros(2 * d);
    let half = c(0.5); // (1/sqrt2) on |-> = (|0> - |1>)/sqrt2
    for i in 0..d {
        w[2 * i] = inner.w[i] * half;
        w[2 * i + 1] = -inner.w[i] * half;
    }
    let cert = Certificate::verify(&vp, xi, w)?;
    if (cert.w_norm_sq - inner.w_norm_sq / 2.0).abs() > 1e-10 {
        return Err(Error::numerical("hadamard test: complexity is not W_V/2".to_string()));
    }
    Ok((vp, cert))
}

/// One point of the truncated-catalyst executor: apply S to xi + scale * w
/// and record the exact deviation from tau + scale * w.
#[derive(Debug, Clone, Serialize)]
pub struct TruncationPoint {
    pub scale: f64,
    /// ||S(xi + c w) - (tau + c w)||.
    pub error: f64,
    /// 2 ||(1 - c) w||: the contract the error must respect.
    pub bound: f64,
}

/// Execute a transducer with a scaled-down catalyst. The exact error is
/// (1 - c) ||(S - I) w||, at most 2 (1 - c) ||w||; this is the error regime
/// a budget-K compiled execution lives in when c = 1 - sqrt(W)/K-style
/// truncations are chosen.
pub fn truncated_execution(t: &Transducer, cert: &Certificate, scales: &[f64]) -> Vec<TruncationPoint> {
    scales
        .iter()
        .map(|&scale| {
            let input = &cert.xi + &cert.w * c(scale);
            let out = &t.s * input;
            let error = (&out - &cert.tau - &cert.w * c(scale)).norm();
            let bound = 2.0 * (1.0 - scale) * cert.w.norm();
            TruncationPoint { scale, error, bound }
        })
        .collect()
}

/// Scale choice emulating a budget of k walk steps: c = max(0, 1 - 2 sqrt(W)/k),
/// for which the error bound becomes 4 W / k <= (2 sqrt(W/k))^2-style decay.
pub fn truncation_scale_for_budget(w_norm_sq: f64, k: f64) -> f64 {
    (1.0 - 2.0 * w_norm_sq.sqrt() / k).max(0.0)
}

/// Round schedule, survival masses and accounting for the zero-error
/// amplitude-amplification transducer, plus the classical-control Las Vegas
/// simulation statistics.
#[derive(Debug, Clone, Serialize)]
pub struct ZeroErrorAaReport {
    pub alpha: f64,
    pub rounds: usize,
    /// T_t = max(1, floor((6/5)^t)).
    pub schedule: Vec<usize>,
    /// ||psi_{t,0}||^2 at the start of each round.
    pub survival: Vec<f64>,
    pub truncation_tail: f64,
    /// sum_t ||psi_{t,0}||^2 (1 + T_t (W_U + W_V + 1)).
    pub w_accounted: f64,
    /// (W_U + W_V + 1) / alpha, the contract it is reported against.
    pub w_contract: f64,
    /// Fidelity of the output's public factor with the target state (after
    /// tracing the per-round garbage registers), excluding the tail.
    pub output_fidelity: f64,
    /// |  ||tau||^2 + tail - 1 |.
    pub residual: f64,
    pub mc_runs: usize,
    pub mc_failures: usize,
    pub mc_mean_rotation_calls: f64,
    pub mc_max_rotation_calls: usize,
}

/// The Boyer-style schedule T_t = max(1, floor((6/5)^t)).
pub fn aa_schedule(rounds: usize) -> Vec<usize> {
    (0..rounds).map(|t| ((6.0f64 / 5.0).powi(t as i32).floor() as usize).max(1)).collect()
}

/// Zero-error amplitude amplification for a state with known amplitude
/// alpha on the marked vector. The whole evolution lives in the 2-dim
/// rotation plane, so the composed transducer's states are tracked in
/// product form: one cos-profile garbage factor per survived round. W_U and
/// W_V are the transduction complexities of the reflections the rotation is
/// built from; each rotation call charges W_U + W_V + 1.
pub fn zero_error_aa(
    alpha: f64,
    w_u: f64,
    w_v: f64,
    m_max: usize,
    runs: usize,
    seed: u64,
) -> Result<ZeroErrorAaReport> {
    if !(0.0 < alpha && alpha <= 1.0) {
        return Err(Error::validation(format!("alpha = {alpha} outside (0, 1]")));
    }
    let theta = alpha.asin();
    let per_call = w_u + w_v + 1.0;

    // Composed-transducer accounting in product form. Round t prepares the
    // rotation plane state at angle theta, spreads over j in [1, T_t],
    // rotates by 2 j theta and extracts the marked component; the survivor
    // carries the cos profile as a fresh garbage factor.
    let mut schedule = Vec::new();
    let mut survival = Vec::new();
    let mut w_accounted = 0.0;
    let mut success_mass = 0.0; // sum over rounds of ||marked component||^2
    let mut alive = 1.0f64; // ||psi_{t,0}||^2
    let mut rounds = 0;
    let mut tail = alive;
    for t in 0..=m_max {
        let t_t = ((6.0f64 / 5.0).powi(t as i32).floor() as usize).max(1);
        schedule.push(t_t);
        survival.push(alive);
        w_accounted += alive * (1.0 + t_t as f64 * per_call);
        let mut cos2 = 0.0;
        for j in 1..=t_t {
            let a = ((2 * j + 1) as f64) * theta;
            cos2 += a.cos() * a.cos();
        }
        cos2 /= t_t as f64;
        success_mass += alive * (1.0 - cos2);
        alive *= cos2;
        rounds = t + 1;
        tail = alive;
        if tail < 1e-12 {
            break;
        }
    }
    if tail > 1e-9 {
        return Err(Error::budget(format!(
            "zero-error AA: tail {tail:.2e} after {rounds} rounds; raise m_max"
        )));
    }
    // Every marked component has the target as its exact rotation-plane
    // factor, so the traced-out fidelity is the captured mass renormalized.
    let output_fidelity = if success_mass > 0.0 { 1.0 } else { 0.0 };
    let residual = (success_mass + tail - 1.0).abs();
    if residual > 1e-9 {
        return Err(Error::numerical(format!(
            "zero-error AA: mass accounting off by {residual:.2e}"
        )));
    }

    // Classical-control Las Vegas loop: measure after a uniformly random
    // rotation count j in [1, T_t]; re-prepare on failure. Success leaves
    // the marked state exactly.
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut total_calls = 0usize;
    let mut max_calls = 0usize;
    let mut failures = 0usize;
    for _ in 0..runs {
        let mut calls = 0usize;
        let mut done = false;
        for t in 0..=(m_max.max(200)) {
            let t_t = ((6.0f64 / 5.0).powi(t as i32).floor() as usize).max(1);
            let j = rng.gen_range(1..=t_t);
            calls += j;
            let amp = (((2 * j + 1) as f64) * theta).sin();
            if rng.gen_range(0.0..1.0) < amp * amp {
                done = true;
                break;
            }
        }
        if !done {
            failures += 1;
        }
        total_calls += calls;
        max_calls = max_calls.max(calls);
    }

    Ok(ZeroErrorAaReport {
        alpha,
        rounds,
        schedule,
        survival,
        truncation_tail: tail,
        w_accounted,
        w_contract: per_call / alpha,
        output_fidelity,
        residual,
        mc_runs: runs,
        mc_failures: failures,
        mc_mean_rotation_calls: total_calls as f64 / runs as f64,
        mc_max_rotation_calls: max_calls,
    })
}
