//! Span programs: the data model, positive/negative witness sizes, the
//! pseudoinverse identity for the optimal min-error negative witness, and
//! the bridge to the projector-pair witness-size estimator.

use crate::edge_space::invariant_projector;
use crate::linalg::{self, c, eye, CMat, CVec};
use crate::{Error, Result};
use serde::Deserialize;

/// A span program (H, V, tau, A): H decomposes into per-coordinate blocks
/// H_j (plus an always-available part H_true), each H_j covered by the
/// assignment subspaces H_{j,a}; an input x makes
/// H(x) = H_{1,x_1} + ... + H_{n,x_n} + H_true available. The target is
/// rescaled at construction so the normalization state w_0 = A^+ tau has
/// unit norm.
#[derive(Debug, Clone)]
pub struct SpanProgram {
    /// A : H -> V (rows index V, columns index H).
    pub a: CMat,
    /// Rescaled target (|| A^+ tau || = 1).
    pub tau: CVec,
    /// Target as given at construction.
    pub tau_raw: CVec,
    /// w_0 = A^+ tau, unit norm.
    pub w0: CVec,
    /// blocks[j][a]: spanning columns of H_{j,a} (may be empty = {0}).
    pub blocks: Vec<Vec<CMat>>,
    /// Spanning columns of H_true (may have zero columns).
    pub h_true: CMat,
}

/// A single standard-basis column of C^{h_dim}.
pub fn basis_column(h_dim: usize, idx: usize) -> CMat {
    CMat::from_fn(h_dim, 1, |i, _| if i == idx { c(1.0) } else { c(0.0) })
}

/// The zero subspace (a matrix with no columns).
pub fn no_columns(h_dim: usize) -> CMat {
    CMat::zeros(h_dim, 0)
}

/// Per-coordinate blocks with H_{j,1} = span{e_j} and H_{j,0} = {0}:
/// coordinate j of H is available exactly when bit j of the input is 1.
pub fn coordinate_blocks(h_dim: usize) -> Vec<Vec<CMat>> {
    (0..h_dim)
        .map(|j| vec![no_columns(h_dim), basis_column(h_dim, j)])
        .collect()
}

/// Small reference programs with hand-computable witnesses.
pub mod fixtures {
    use super::*;

    /// H = C^2, A = (1 1), tau = 1, coordinate blocks: computes OR of two
    /// bits; w_plus(1,1) = 1, w_plus(1,0) = 2, w_tilde_minus(0,0) via the
    /// forced one-dimensional witness.
    pub fn or_pair() -> SpanProgram {
        let a = CMat::from_fn(1, 2, |_, _| c(1.0));
        let tau = CVec::from_element(1, c(1.0));
        SpanProgram::new(a, tau, coordinate_blocks(2), no_columns(2)).unwrap()
    }

    /// H = C^3, V = C^2 with rows (1 1 0) and (0 1 2), tau = (1, 1): a
    /// two-dimensional target, so the optimal negative witness ranges over
    /// a one-complex-parameter family.
    pub fn two_by_three() -> SpanProgram {
        let rows = [[1.0, 1.0, 0.0], [0.0, 1.0, 2.0]];
        let a = CMat::from_fn(2, 3, |i, j| c(rows[i][j]));
        let tau = CVec::from_fn(2, |_, _| c(1.0));
        SpanProgram::new(a, tau, coordinate_blocks(3), no_columns(3)).unwrap()
    }
}

/// Projector onto the column space of an arbitrary (not necessarily
/// orthonormal) set of columns.
fn column_space_projector(b: &CMat) -> CMat {
    if b.ncols() == 0 {
        return CMat::zeros(b.nrows(), b.nrows());
    }
    b * linalg::pinv(b)
}

impl SpanProgram {
    pub fn new(a: CMat, tau: CVec, blocks: Vec<Vec<CMat>>, h_true: CMat) -> Result<Self> {
        let h_dim = a.ncols();
        if tau.len() != a.nrows() {
            return Err(Error::validation("span program: tau length differs from rows of A"));
        }
        for (j, assigns) in blocks.iter().enumerate() {
            if assigns.is_empty() {
                return Err(Error::validation(format!("span program: coordinate {j} has no assignment subspaces")));
            }
            for b in assigns {
                if b.nrows() != h_dim {
                    return Err(Error::validation(format!("span program: block of coordinate {j} has wrong row count")));
                }
            }
        }
        if h_true.nrows() != h_dim {
            return Err(Error::validation("span program: H_true has wrong row count"));
        }
        let w0_raw = linalg::pinv(&a) * &tau;
        let norm = w0_raw.norm();
        if norm < 1e-12 {
            return Err(Error::validation("span program: tau is orthogonal to the range of A"));
        }
        let tau_scaled = &tau * c(1.0 / norm);
        let w0 = &w0_raw * c(1.0 / norm);
        Ok(SpanProgram { a, tau: tau_scaled, tau_raw: tau, w0, blocks, h_true })
    }

    pub fn h_dim(&self) -> usize {
        self.a.ncols()
    }

    pub fn v_dim(&self) -> usize {
        self.a.nrows()
    }

    /// Projector onto H(x) = H_{1,x_1} + ... + H_{n,x_n} + H_true.
    pub fn h_projector(&self, x: &[usize]) -> Result<CMat> {
        if x.len() != self.blocks.len() {
            return Err(Error::validation(format!(
                "input has {} coordinates, program has {}",
                x.len(),
                self.blocks.len()
            )));
        }
        let mut cols: Vec<CVec> = Vec::new();
        for (j, &xj) in x.iter().enumerate() {
            let assigns = &self.blocks[j];
            if xj >= assigns.len() {
                return Err(Error::validation(format!("coordinate {j} has no assignment {xj}")));
            }
            for k in 0..assigns[xj].ncols() {
                cols.push(assigns[xj].column(k).into_owned());
            }
        }
        for k in 0..self.h_true.ncols() {
            cols.push(self.h_true.column(k).into_owned());
        }
        if cols.is_empty() {
            return Ok(CMat::zeros(self.h_dim(), self.h_dim()));
        }
        let b = CMat::from_columns(&cols.iter().map(|v| v.column(0)).collect::<Vec<_>>());
        Ok(column_space_projector(&b))
    }

    /// Projector onto T = ker A + span{w_0}.
    pub fn t_projector(&self) -> CMat {
        let ker = linalg::kernel_basis(&self.a);
        // w_0 lies in the row space of A, orthogonal to ker A.
        column_space_projector(&ker) + &self.w0 * self.w0.adjoint()
    }

    /// Whether tau is in the range of A restricted to H(x).
    pub fn is_positive(&self, x: &[usize]) -> Result<bool> {
        Ok(positive_witness(self, x).is_ok())
    }
}

/// Minimum-norm positive witness: the least-norm w in H(x) with A w = tau,
/// and its squared norm w_+(x). Also asserts the positive-witness-subspace
/// identity ||P_{Q_x} w_0||^2 = 1/w_+(x) with Q_x = T intersect H(x).
pub fn positive_witness(p: &SpanProgram, x: &[usize]) -> Result<(f64, CVec)> {
    let pi_hx = p.h_projector(x)?;
    let restricted = &p.a * &pi_hx;
    let w = linalg::pinv(&restricted) * &p.tau;
    let residual = (&restricted * &w - &p.tau).norm();
    if residual > 1e-9 * (1.0 + p.tau.norm()) {
        return Err(Error::validation(format!(
            "negative input: tau misses Im(A P_H(x)) by {residual:.2e}"
        )));
    }
    let w_plus = w.norm_squared();
    if w_plus < 1.0 - 1e-9 {
        return Err(Error::numerical(format!(
            "positive witness size {w_plus} below 1 on a normalized program"
        )));
    }
    // Q_x = T intersect H(x) as a joint kernel of the complement projectors.
    let d = p.h_dim();
    let pi_t_perp = eye(d) - p.t_projector();
    let pi_hx_perp = eye(d) - &pi_hx;
    let q_x = invariant_projector(&pi_t_perp, &pi_hx_perp)?;
    let overlap = (&q_x * &p.w0).norm_squared();
    if (overlap * w_plus - 1.0).abs() > 1e-9 {
        return Err(Error::numerical(format!(
            "||P_Qx w0||^2 * w_+ = {} differs from 1",
            overlap * w_plus
        )));
    }
    Ok((w_plus, w))
}

/// The two-stage negative-witness minimization for a positive input:
/// first minimize ||P_H(x) A^dag omega||^2 subject to tau^dag omega = 1
/// (the negative error e_-), then minimize ||A^dag omega||^2 over that
/// argmin set (the optimal min-error negative witness size w-tilde_-).
pub fn negative_witness(p: &SpanProgram, x: &[usize]) -> Result<(f64, f64, CVec)> {
    let pi_hx = p.h_projector(x)?;
    let m = &pi_hx * p.a.adjoint();
    // Feasible point and the constraint's null directions.
    let tau_norm_sq = p.tau.norm_squared();
    let omega0 = &p.tau * c(1.0 / tau_norm_sq);
    let tau_row = CMat::from_fn(1, p.v_dim(), |_, j| p.tau[j].conj());
    let k = linalg::kernel_basis(&tau_row);

    // Stage 1: least squares in the null-direction coefficients.
    let (omega_star, e_minus) = if k.ncols() == 0 {
        let e = (&m * &omega0).norm_squared();
        (omega0.clone(), e)
    } else {
        let mk = &m * &k;
        let coef = -(linalg::pinv(&mk) * (&m * &omega0));
        let omega = &omega0 + &k * &coef;
        let e = (&m * &omega).norm_squared();
        (omega, e)
    };

    // Stage 2: move inside ker(M K) to minimize the full norm ||A^dag omega||.
    let omega_final = if k.ncols() == 0 {
        omega_star
    } else {
        let mk = &m * &k;
        let null = linalg::kernel_basis(&mk);
        if null.ncols() == 0 {
            omega_star
        } else {
            let dirs = &k * &null;
            let adag_dirs = p.a.adjoint() * &dirs;
            let coef = -(linalg::pinv(&adag_dirs) * (p.a.adjoint() * &omega_star));
            &omega_star + &dirs * &coef
        }
    };
    let e_check = (&m * &omega_final).norm_squared();
    if (e_check - e_minus).abs() > 1e-9 * (1.0 + e_minus) {
        return Err(Error::numerical("stage 2 left the stage-1 argmin set".to_string()));
    }
    let w_tilde = (p.a.adjoint() * &omega_final).norm_squared();
    Ok((e_minus, w_tilde, omega_final))
}

/// Both sides of the pseudoinverse identity
/// w-tilde_-(x) = 1 + ||(P_Tperp P_H(x) P_Tperp)^+ P_H(x)perp w_0||^2.
#[derive(Debug, Clone)]
pub struct PseudoinverseReport {
    pub w_tilde_minus: f64,
    pub pseudoinverse_side: f64,
}

pub fn pseudoinverse_identity(p: &SpanProgram, x: &[usize]) -> Result<PseudoinverseReport> {
    let (_, w_tilde, _) = negative_witness(p, x)?;
    let d = p.h_dim();
    let pi_hx = p.h_projector(x)?;
    let pi_t_perp = eye(d) - p.t_projector();
    let core = &pi_t_perp * &pi_hx * &pi_t_perp;
    let nu = linalg::pinv(&core) * ((eye(d) - &pi_hx) * &p.w0);
    let rhs = 1.0 + nu.norm_squared();
    if (w_tilde - rhs).abs() > 1e-8 * (1.0 + w_tilde) {
        return Err(Error::numerical(format!(
            "pseudoinverse identity mismatch: {w_tilde} vs {rhs}"
        )));
    }
    Ok(PseudoinverseReport { w_tilde_minus: w_tilde, pseudoinverse_side: rhs })
}

/// The projector-pair instance consumed by the witness-size estimator:
/// Pi = P_Tperp, Delta = P_H(x)perp, psi = w_0. Construction asserts the
/// two consistency identities against the witness computations.
#[derive(Debug, Clone)]
pub struct ProjectorInstance {
    pub pi: CMat,
    pub delta: CMat,
    pub psi: CVec,
    /// The quantity the estimator targets: w_+(x) = 1/||P_{ker/\ker} psi||^2.
    pub w_plus: f64,
    /// Transduction complexity of the reflection: w-tilde_-(x) - 1.
    pub w_expected: f64,
}

pub fn to_projector_instance(p: &SpanProgram, x: &[usize]) -> Result<ProjectorInstance> {
    let (w_plus, _) = positive_witness(p, x)?;
    let (_, w_tilde, _) = negative_witness(p, x)?;
    let d = p.h_dim();
    let pi_hx = p.h_projector(x)?;
    let pi = eye(d) - p.t_projector();
    let delta = eye(d) - &pi_hx;
    linalg::check_projector(&pi, 1e-9, "P_Tperp")?;
    linalg::check_projector(&delta, 1e-9, "P_H(x)perp")?;

    let joint = invariant_projector(&pi, &delta)?;
    let overlap = (&joint * &p.w0).norm_squared();
    if (overlap - 1.0 / w_plus).abs() > 1e-8 {
        return Err(Error::numerical(format!(
            "||P psi||^2 = {overlap} differs from 1/w_+ = {}",
            1.0 / w_plus
        )));
    }
    let core = &pi - &pi * &delta * &pi;
    let w_catalyst = (linalg::pinv(&core) * (&delta * &p.w0)).norm_squared();
    if (w_catalyst - (w_tilde - 1.0)).abs() > 1e-8 * (1.0 + w_tilde) {
        return Err(Error::numerical(format!(
            "catalyst W = {w_catalyst} differs from w-tilde_- - 1 = {}",
            w_tilde - 1.0
        )));
    }
    Ok(ProjectorInstance { pi, delta, psi: p.w0.clone(), w_plus, w_expected: w_tilde - 1.0 })
}

#[derive(Deserialize)]
struct SpanProgramJson {
    /// [v_dim, h_dim].
    dims: [usize; 2],
    /// Dense rows of A (v_dim rows of h_dim reals).
    a: Vec<Vec<f64>>,
    tau: Vec<f64>,
    /// blocks[j][assignment] = list of spanning columns (each h_dim reals).
    blocks: Vec<Vec<Vec<Vec<f64>>>>,
    #[serde(default)]
    h_true: Vec<Vec<f64>>,
}

/// Load a span program from the JSON schema
/// {dims: [v, h], a: [[..]], tau: [..], blocks: [[[col..]..]..], h_true}.
pub fn from_json(text: &str) -> Result<SpanProgram> {
    let raw: SpanProgramJson =
        serde_json::from_str(text).map_err(|e| Error::validation(format!("span program JSON: {e}")))?;
    let [v_dim, h_dim] = raw.dims;
    if raw.a.len() != v_dim || raw.a.iter().any(|r| r.len() != h_dim) {
        return Err(Error::validation("span program JSON: A has wrong shape"));
    }
    if raw.tau.len() != v_dim {
        return Err(Error::validation("span program JSON: tau has wrong length"));
    }
    let a = CMat::from_fn(v_dim, h_dim, |i, j| c(raw.a[i][j]));
    let tau = CVec::from_fn(v_dim, |i, _| c(raw.tau[i]));
    let to_block = |cols: &Vec<Vec<f64>>| -> Result<CMat> {
        for col in cols {
            if col.len() != h_dim {
                return Err(Error::validation("span program JSON: block column has wrong length"));
            }
        }
        Ok(CMat::from_fn(h_dim, cols.len(), |i, j| c(cols[j][i])))
    };
    let blocks = raw
        .blocks
        .iter()
        .map(|assigns| assigns.iter().map(to_block).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    let h_true = to_block(&raw.h_true)?;
    SpanProgram::new(a, tau, blocks, h_true)
}
