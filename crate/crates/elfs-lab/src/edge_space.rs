//! The 2|E|-dimensional complex arc space: star states, the symmetric /
//! star / closed-flow projectors, the quantum walk unitary, partial
//! rotations, the flow state, and the joint-kernel projector identity.

use crate::electric::ElectricSolution;
use crate::graph::Graph;
use crate::linalg::{self, c, eye, CMat, CVec};
use crate::{Error, Result, IDENTITY_TOL, PINV_CUT};
use num_complex::Complex64;
use std::collections::HashMap;

/// Bijection between ordered arcs (x, y) and basis indices. The two
/// orientations of an edge occupy adjacent indices, so SWAP flips the low bit.
#[derive(Debug, Clone)]
pub struct ArcBasis {
    pub arcs: Vec<(usize, usize)>,
    index: HashMap<(usize, usize), usize>,
}

impl ArcBasis {
    pub fn new(g: &Graph) -> Self {
        let mut arcs = Vec::with_capacity(2 * g.edges.len());
        let mut index = HashMap::new();
        for &(u, v, _) in &g.edges {
            index.insert((u, v), arcs.len());
            arcs.push((u, v));
            index.insert((v, u), arcs.len());
            arcs.push((v, u));
        }
        ArcBasis { arcs, index }
    }

    pub fn dim(&self) -> usize {
        self.arcs.len()
    }

    pub fn index_of(&self, x: usize, y: usize) -> usize {
        self.index[&(x, y)]
    }

    /// Index of the reversed arc.
    pub fn swapped(&self, i: usize) -> usize {
        i ^ 1
    }

    /// The SWAP permutation as a matrix.
    pub fn swap_matrix(&self) -> CMat {
        let d = self.dim();
        let mut m = CMat::zeros(d, d);
        for i in 0..d {
            m[(self.swapped(i), i)] = c(1.0);
        }
        m
    }
}

/// Unit star state |phi_x> = (1/sqrt d_x) sum_y sqrt(w_xy) |xy>.
pub fn star_state(g: &Graph, basis: &ArcBasis, x: usize) -> Result<CVec> {
    if g.adj[x].is_empty() {
        return Err(Error::validation(format!("vertex {x} is isolated")));
    }
    let mut v = CVec::zeros(basis.dim());
    let d = g.degrees[x];
    for &(y, w) in &g.adj[x] {
        v[basis.index_of(x, y)] = c((w / d).sqrt());
    }
    Ok(v)
}

/// The three structural projectors of the arc space.
#[derive(Debug, Clone)]
pub struct Projectors {
    /// Onto the symmetric subspace span{|xy> + |yx>}.
    pub pi_plus: CMat,
    /// Onto span{|phi_x> : x interior} (outside {s} and the sinks).
    pub pi_star: CMat,
    /// Onto flows closed outside M: antisymmetric states orthogonal to every
    /// |phi_x> with x outside M, and orthogonal to the flow state.
    pub pi_cl: CMat,
}

pub fn build_projectors(g: &Graph, basis: &ArcBasis, sol: &ElectricSolution) -> Result<Projectors> {
    let d = basis.dim();
    // Symmetric projector from the orthonormal pairs (|xy> + |yx>)/sqrt2.
    let mut pi_plus = CMat::zeros(d, d);
    for i in (0..d).step_by(2) {
        let j = i + 1;
        pi_plus[(i, i)] += c(0.5);
        pi_plus[(j, j)] += c(0.5);
        pi_plus[(i, j)] += c(0.5);
        pi_plus[(j, i)] += c(0.5);
    }
    // Star projector: the |phi_x> for distinct x are orthonormal (disjoint
    // arc supports).
    let mut pi_star = CMat::zeros(d, d);
    for x in g.interior() {
        let phi = star_state(g, basis, x)?;
        pi_star += &phi * phi.adjoint();
    }
    // Closed flows: kernel of the stacked constraints {symmetric part = 0,
    // <phi_x|g> = 0 for x outside M, <f|g> = 0}.
    let f = flow_state(g, basis, sol);
    let n_constraints = d / 2 + (g.n - g.sinks.len()) + 1;
    let mut cons = CMat::zeros(n_constraints, d);
    let mut r = 0;
    for i in (0..d).step_by(2) {
        cons[(r, i)] = c(std::f64::consts::FRAC_1_SQRT_2);
        cons[(r, i + 1)] = c(std::f64::consts::FRAC_1_SQRT_2);
        r += 1;
    }
    for x in 0..g.n {
        if !g.is_sink(x) {
            let phi = star_state(g, basis, x)?;
            cons.row_mut(r).copy_from(&phi.adjoint());
            r += 1;
        }
    }
    cons.row_mut(r).copy_from(&f.adjoint());
    let kernel = linalg::kernel_basis(&cons);
    let pi_cl = linalg::projector_from_basis(&kernel);

    for (p, label) in [(&pi_plus, "pi_plus"), (&pi_star, "pi_star"), (&pi_cl, "pi_cl")] {
        linalg::check_projector(p, 1e-10, label)?;
    }
    Ok(Projectors { pi_plus, pi_star, pi_cl })
}

/// Quantum walk unitary U = (2 Pi_* - I)(2 Pi_+ - I); identical to
/// (2 Pi_* - I) * SWAP since 2 Pi_+ - I is the arc swap.
pub fn walk_unitary(basis: &ArcBasis, projs: &Projectors) -> Result<CMat> {
    let d = basis.dim();
    let refl_star = &projs.pi_star * c(2.0) - eye(d);
    let refl_plus = &projs.pi_plus * c(2.0) - eye(d);
    let u = &refl_star * &refl_plus;
    let via_swap = &refl_star * basis.swap_matrix();
    if (&u - &via_swap).norm() > 1e-10 {
        return Err(Error::numerical("walk unitary: SWAP form disagrees".to_string()));
    }
    linalg::check_unitary(&u, 1e-10, "walk unitary")?;
    Ok(u)
}

/// Partial rotation U(theta) = I - (1 - e^{i theta})(I - Delta) with
/// Delta = Pi_+ : rotates the complement of the symmetric subspace.
pub fn partial_rotation(projs: &Projectors, theta: f64) -> CMat {
    partial_rotation_about(&projs.pi_plus, theta)
}

/// I - (1 - e^{i theta}) (I - Delta) for an arbitrary projector Delta.
pub fn partial_rotation_about(delta: &CMat, theta: f64) -> CMat {
    let d = delta.nrows();
    let phase = Complex64::new(0.0, theta).exp();
    eye(d) - (eye(d) - delta) * (c(1.0) - phase)
}

/// Unit flow state |f> = (1/sqrt(2 R_s)) sum_xy (f_xy / sqrt w_xy) |xy>.
pub fn flow_state(g: &Graph, basis: &ArcBasis, sol: &ElectricSolution) -> CVec {
    let mut v = CVec::zeros(basis.dim());
    let norm = (2.0 * sol.r_s).sqrt();
    for (i, &(x, y)) in basis.arcs.iter().enumerate() {
        let w = g.weight(x, y);
        let f = w * (sol.voltages[x] - sol.voltages[y]);
        v[i] = c(f / w.sqrt() / norm);
    }
    v
}

/// Projector onto ker(Pi) and ker(Delta) jointly, computed two ways: the pseudoinverse
/// identity (I-Delta)[I - (Pi - Pi Delta Pi)^+ (I-Delta)] and a direct
/// joint-kernel SVD. Errors if they disagree (a rank-cut misconfiguration).
pub fn invariant_projector(pi: &CMat, delta: &CMat) -> Result<CMat> {
    let d = pi.nrows();
    let core = pi - pi * delta * pi;
    let p1 = (eye(d) - delta) * (eye(d) - linalg::pinv(&core) * (eye(d) - delta));
    // Joint kernel: stack Pi over Delta.
    let mut stacked = CMat::zeros(2 * d, d);
    stacked.view_mut((0, 0), (d, d)).copy_from(pi);
    stacked.view_mut((d, 0), (d, d)).copy_from(delta);
    let kernel = linalg::kernel_basis(&stacked);
    let p2 = linalg::projector_from_basis(&kernel);
    let dev = (&p1 - &p2).norm();
    if dev > IDENTITY_TOL {
        return Err(Error::numerical(format!(
            "joint-kernel projector mismatch {dev:.2e} (pseudoinverse rank cut {PINV_CUT:.0e})"
        )));
    }
    linalg::check_projector(&p2, 1e-9, "invariant projector")?;
    Ok(p2)
}

/// Everything needed to work on one graph's arc space.
pub struct EdgeSpace {
    pub basis: ArcBasis,
    pub projs: Projectors,
    pub u: CMat,
    pub f: CVec,
    pub phi_s: CVec,
    pub sol: ElectricSolution,
}

pub fn build(g: &Graph) -> Result<EdgeSpace> {
    let sol = crate::electric::solve_electric(g)?;
    let basis = ArcBasis::new(g);
    let projs = build_projectors(g, &basis, &sol)?;
    let u = walk_unitary(&basis, &projs)?;
    let f = flow_state(g, &basis, &sol);
    let phi_s = star_state(g, &basis, g.s)?;
    Ok(EdgeSpace { basis, projs, u, f, phi_s, sol })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::fixtures;

    #[test]
    fn builds_on_all_fixtures() {
        for (name, g) in fixtures::all_named() {
            let es = build(&g).unwrap_or_else(|e| panic!("{name}: {e}"));
            assert_eq!(es.basis.dim(), 2 * g.edges.len());
            assert!((es.f.norm() - 1.0).abs() < 1e-10, "{name}: flow state norm");
            assert!((es.phi_s.norm() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn arc_pairing_and_swap() {
        let g = fixtures::path4_mid();
        let basis = ArcBasis::new(&g);
        for i in 0..basis.dim() {
            assert_eq!(basis.swapped(basis.swapped(i)), i);
            let (x, y) = basis.arcs[i];
            assert_eq!(basis.arcs[basis.swapped(i)], (y, x));
        }
        let s = basis.swap_matrix();
        assert!((&s * &s - eye(basis.dim())).norm() < 1e-12);
    }

    #[test]
    fn star_flow_overlap_is_escape_amplitude() {
        // <phi_s | f> = 1 / sqrt(2 R_s d_s)
        let cases = [
            (fixtures::single_edge(), 1.0 / 2.0_f64.sqrt()),
            (fixtures::path3(), 0.5),
            (fixtures::skew_path(0.1), 1.0 / 5.0_f64.sqrt()),
        ];
        for (g, expected) in cases {
            let es = build(&g).unwrap();
            let ov = es.phi_s.dotc(&es.f);
            assert!(ov.im.abs() < 1e-12);
            assert!((ov.re - expected).abs() < 1e-10, "overlap {} vs {expected}", ov.re);
        }
    }

    #[test]
    fn flow_state_is_walk_invariant() {
        for (name, g) in fixtures::all_named() {
            let es = build(&g).unwrap();
            assert!((&es.u * &es.f - &es.f).norm() < 1e-10, "{name}: U|f> != |f>");
            // And every closed flow outside M is fixed as well.
            let img = &es.u * &es.projs.pi_cl - &es.projs.pi_cl;
            assert!(img.norm() < 1e-9, "{name}: U does not fix closed flows");
        }
    }

    #[test]
    fn closed_flow_rank_on_cycle() {
        let g = fixtures::cycle6();
        let es = build(&g).unwrap();
        let rank: f64 = es.projs.pi_cl.trace().re;
        assert!((rank - 2.0).abs() < 1e-8, "rank {rank}");
        // A tree with a single sink has no closed flows beyond |f> itself.
        let es = build(&fixtures::path3()).unwrap();
        assert!(es.projs.pi_cl.trace().re.abs() < 1e-8);
        // With two sinks the sink-to-sink through-flow survives: it is
        // divergence-free at both free vertices and orthogonal to |f>.
        let es = build(&fixtures::path4_mid()).unwrap();
        assert!((es.projs.pi_cl.trace().re - 1.0).abs() < 1e-8);
    }

    #[test]
    fn joint_kernel_projector_on_tree() {
        // On a tree the joint kernel of Pi_* and Pi_+ is spanned by |f>,
        // so the star state projects exactly onto the escape amplitude.
        let g = fixtures::path3();
        let es = build(&g).unwrap();
        let p = invariant_projector(&es.projs.pi_star, &es.projs.pi_plus).unwrap();
        let proj = &p * &es.phi_s;
        let expect = &es.f * c(0.5);
        assert!((proj - expect).norm() < 1e-9);
        assert!((&p * &es.f - &es.f).norm() < 1e-9);
    }

    #[test]
    fn partial_rotations() {
        let g = fixtures::path3();
        let es = build(&g).unwrap();
        let d = es.basis.dim();
        assert!((partial_rotation(&es.projs, 0.0) - eye(d)).norm() < 1e-12);
        let refl = partial_rotation(&es.projs, std::f64::consts::PI);
        let expect = &es.projs.pi_plus * c(2.0) - eye(d);
        assert!((refl - expect).norm() < 1e-10);
        let u = partial_rotation(&es.projs, 0.7);
        linalg::check_unitary(&u, 1e-10, "partial rotation").unwrap();
    }
}
