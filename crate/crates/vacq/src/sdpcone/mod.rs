//! Floating-point companion for the cone of positive semidefinite matrices:
//! projection, its directional derivative, spectral frames and the block
//! conditions of the normal-cone derivatives.

mod cq;

use nalgebra::{DMatrix, SymmetricEigen};
use thiserror::Error;

pub use cq::{nlsd_cq_verify, nlsd_falsify, CandidateReport, Falsified, NlsdCq, SdpSystem};

pub const DEFAULT_TAU: f64 = 1e-9;
pub const MEMBERSHIP_TOL: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SdpError {
    #[error("matrix is not symmetric (defect {0:e})")]
    NotSymmetric(f64),
    #[error("eigendecomposition failed")]
    EigenFailure,
    #[error("inconsistent frame: {0}")]
    BadFrame(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
}

/// Symmetric matrix; symmetry is checked to 1e-12 (relative to the entry scale).
#[derive(Debug, Clone, PartialEq)]
pub struct SymMat(pub DMatrix<f64>);

impl SymMat {
    pub fn new(m: DMatrix<f64>) -> Result<Self, SdpError> {
        if !m.is_square() {
            return Err(SdpError::DimensionMismatch(format!("{}×{} is not square", m.nrows(), m.ncols())));
        }
        let defect = (&m - m.transpose()).amax();
        if defect > 1e-12 * m.amax().max(1.0) {
            return Err(SdpError::NotSymmetric(defect));
        }
        Ok(SymMat((&m + m.transpose()) * 0.5))
    }

    pub fn from_rows(rows: &[&[f64]]) -> Result<Self, SdpError> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(SdpError::DimensionMismatch("rows of unequal length".into()));
        }
        SymMat::new(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    /// Row-major upper triangle `[a11, a12, …, a1m, a22, …]`.
    pub fn from_upper(m: usize, upper: &[f64]) -> Result<Self, SdpError> {
        if upper.len() != m * (m + 1) / 2 {
            return Err(SdpError::DimensionMismatch(format!("{} entries for a {m}×{m} upper triangle", upper.len())));
        }
        let mut a = DMatrix::zeros(m, m);
        let mut k = 0;
        for i in 0..m {
            for j in i..m {
                a[(i, j)] = upper[k];
                a[(j, i)] = upper[k];
                k += 1;
            }
        }
        Ok(SymMat(a))
    }

    pub fn to_upper(&self) -> Vec<f64> {
        let m = self.dim();
        let mut out = vec![];
        for i in 0..m {
            for j in i..m {
                out.push(self.0[(i, j)]);
            }
        }
        out
    }

    pub fn zeros(m: usize) -> Self {
        SymMat(DMatrix::zeros(m, m))
    }

    pub fn identity(m: usize) -> Self {
        SymMat(DMatrix::identity(m, m))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn norm(&self) -> f64 {
        self.0.norm()
    }

    pub fn inner(&self, other: &SymMat) -> f64 {
        self.0.dot(&other.0)
    }

    pub fn scale(&self, s: f64) -> SymMat {
        SymMat(&self.0 * s)
    }

    pub fn add(&self, other: &SymMat) -> SymMat {
        SymMat(&self.0 + &other.0)
    }

    pub fn sub(&self, other: &SymMat) -> SymMat {
        SymMat(&self.0 - &other.0)
    }
}

/// Eigenvectors (columns) and eigenvalues in nonincreasing order.
pub fn eig(m: &SymMat) -> Result<(DMatrix<f64>, Vec<f64>), SdpError> {
    let n = m.dim();
    if n == 0 {
        return Ok((DMatrix::zeros(0, 0), vec![]));
    }
    let e = SymmetricEigen::try_new(m.0.clone(), f64::EPSILON, 0).ok_or(SdpError::EigenFailure)?;
    if e.eigenvalues.iter().any(|x| !x.is_finite()) {
        return Err(SdpError::EigenFailure);
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| e.eigenvalues[b].total_cmp(&e.eigenvalues[a]).then(a.cmp(&b)));
    let p = DMatrix::from_fn(n, n, |i, j| e.eigenvectors[(i, idx[j])]);
    Ok((p, idx.iter().map(|&i| e.eigenvalues[i]).collect()))
}

fn rebuild(p: &DMatrix<f64>, d: &[f64]) -> SymMat {
    let n = d.len();
    let l = DMatrix::from_fn(n, n, |i, j| if i == j { d[i] } else { 0.0 });
    SymMat(p * l * p.transpose())
}

pub fn min_eig(m: &SymMat) -> Result<f64, SdpError> {
    Ok(eig(m)?.1.last().copied().unwrap_or(0.0))
}

pub fn max_eig(m: &SymMat) -> Result<f64, SdpError> {
    Ok(eig(m)?.1.first().copied().unwrap_or(0.0))
}

/// Projection onto the positive semidefinite cone.
pub fn proj_psd(m: &SymMat) -> Result<SymMat, SdpError> {
    let (p, l) = eig(m)?;
    let d: Vec<f64> = l.iter().map(|x| x.max(0.0)).collect();
    Ok(rebuild(&p, &d))
}

pub fn proj_nsd(m: &SymMat) -> Result<SymMat, SdpError> {
    Ok(proj_psd(&m.scale(-1.0))?.scale(-1.0))
}

fn split_indices(l: &[f64], tau: f64) -> (Vec<usize>, Vec<usize>, Vec<usize>) {
    let alpha = (0..l.len()).filter(|&i| l[i] > tau).collect();
    let beta = (0..l.len()).filter(|&i| l[i].abs() <= tau).collect();
    let gamma = (0..l.len()).filter(|&i| l[i] < -tau).collect();
    (alpha, beta, gamma)
}

fn block(m: &DMatrix<f64>, r: &[usize], c: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(r.len(), c.len(), |i, j| m[(r[i], c[j])])
}

fn set_block(m: &mut DMatrix<f64>, r: &[usize], c: &[usize], b: &DMatrix<f64>) {
    for (i, &ri) in r.iter().enumerate() {
        for (j, &cj) in c.iter().enumerate() {
            m[(ri, cj)] = b[(i, j)];
            m[(cj, ri)] = b[(i, j)];
        }
    }
}

/// Directional derivative of the projection at A in direction H.
pub fn proj_dir_derivative(a: &SymMat, h: &SymMat) -> Result<SymMat, SdpError> {
    proj_dir_derivative_tau(a, h, DEFAULT_TAU)
}

pub fn proj_dir_derivative_tau(a: &SymMat, h: &SymMat, tau: f64) -> Result<SymMat, SdpError> {
    if a.dim() != h.dim() {
        return Err(SdpError::DimensionMismatch("A and H differ in size".into()));
    }
    let (p, l) = eig(a)?;
    let t = tau * a.0.amax().max(1.0);
    let (al, be, ga) = split_indices(&l, t);
    let ht = p.transpose() * &h.0 * &p;
    let n = a.dim();
    let mut r = DMatrix::zeros(n, n);
    set_block(&mut r, &al, &al, &block(&ht, &al, &al));
    set_block(&mut r, &al, &be, &block(&ht, &al, &be));
    let mut ag = block(&ht, &al, &ga);
    for (i, &ii) in al.iter().enumerate() {
        for (j, &jj) in ga.iter().enumerate() {
            ag[(i, j)] *= l[ii] / (l[ii] - l[jj]);
        }
    }
    set_block(&mut r, &al, &ga, &ag);
    let bb = proj_psd(&SymMat(block(&ht, &be, &be)))?;
    set_block(&mut r, &be, &be, &bb.0);
    Ok(SymMat(&p * r * p.transpose()))
}

/// Spectral frame of `g(x̄) + Ω` with the index sets of positive, zero and negative eigenvalues.
#[derive(Debug, Clone)]
pub struct PsdFrame {
    pub p: DMatrix<f64>,
    pub lambda: Vec<f64>,
    pub alpha: Vec<usize>,
    pub beta: Vec<usize>,
    pub gamma: Vec<usize>,
    /// `Ξ_ij = −λ_j/λ_i`, i ∈ α, j ∈ γ.
    pub xi: DMatrix<f64>,
    /// Some eigenvalue lies in [τ, 100τ] in absolute value: the index sets may flip under perturbation.
    pub sensitive: bool,
}

impl PsdFrame {
    pub fn new(g: &SymMat, omega: &SymMat, tau: f64) -> Result<Self, SdpError> {
        if g.dim() != omega.dim() {
            return Err(SdpError::DimensionMismatch("g(x̄) and Ω differ in size".into()));
        }
        let sum = g.add(omega);
        let (p, lambda) = eig(&sum)?;
        let scale = sum.0.amax().max(1.0);
        let t = tau * scale;
        if rebuild(&p, &lambda).sub(&sum).0.amax() > 1e-9 * scale {
            return Err(SdpError::BadFrame("PΛPᵀ does not reproduce g(x̄) + Ω".into()));
        }
        let pos: Vec<f64> = lambda.iter().map(|x| if *x > t { *x } else { 0.0 }).collect();
        if rebuild(&p, &pos).sub(g).0.amax() > 1e-8 * scale {
            return Err(SdpError::BadFrame("g(x̄) is not the positive part of g(x̄) + Ω".into()));
        }
        let (alpha, beta, gamma) = split_indices(&lambda, t);
        let xi = DMatrix::from_fn(alpha.len(), gamma.len(), |i, j| -lambda[gamma[j]] / lambda[alpha[i]]);
        let sensitive = lambda.iter().any(|x| x.abs() >= t && x.abs() <= 100.0 * t);
        Ok(PsdFrame { p, lambda, alpha, beta, gamma, xi, sensitive })
    }

    pub fn dim(&self) -> usize {
        self.lambda.len()
    }

    /// `Qᴾ = PᵀQP`.
    pub fn rotate(&self, q: &SymMat) -> DMatrix<f64> {
        self.p.transpose() * &q.0 * &self.p
    }

    pub fn unrotate(&self, q: &DMatrix<f64>) -> SymMat {
        SymMat(&self.p * q * self.p.transpose())
    }

    pub fn reconstruction_error(&self, g: &SymMat, omega: &SymMat) -> f64 {
        rebuild(&self.p, &self.lambda).sub(&g.add(omega)).0.amax()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConeKind {
    /// Ω ∈ N(g(x̄)): αα, αβ, αγ blocks zero, (β∪γ) block negative semidefinite.
    Omega,
    /// Conditions on ∇g(x̄)u: βγ, γγ blocks zero, ββ block positive semidefinite.
    GradU,
    /// Ω̃ in the graphical derivative of the normal-cone map (context: ∇g(x̄)u).
    OmegaTildeDerivative,
    /// Ω̃ in the outer estimate of the graphical subderivative (context: ∇g(x̄)u).
    OmegaTildeSubderivative,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Membership {
    pub ok: bool,
    pub residuals: Vec<(String, f64)>,
}

/// Violation size: positive part of the largest eigenvalue (0 for an empty block).
fn nsd_violation(b: &DMatrix<f64>) -> Result<f64, SdpError> {
    if b.nrows() == 0 {
        return Ok(0.0);
    }
    Ok(max_eig(&SymMat(b.clone()))?.max(0.0))
}

fn psd_violation(b: &DMatrix<f64>) -> Result<f64, SdpError> {
    nsd_violation(&(-b))
}

fn amax(b: &DMatrix<f64>) -> f64 {
    if b.is_empty() {
        0.0
    } else {
        b.amax()
    }
}

/// Block conditions for `candidate` in the given frame; every residual must be ≤ 1e-8.
pub fn nlsd_cone_membership(frame: &PsdFrame, which: ConeKind, candidate: &SymMat, context: Option<&SymMat>) -> Result<Membership, SdpError> {
    if candidate.dim() != frame.dim() || context.is_some_and(|c| c.dim() != frame.dim()) {
        return Err(SdpError::BadFrame("matrix size differs from the frame".into()));
    }
    let (a, b, c) = (&frame.alpha, &frame.beta, &frame.gamma);
    let q = frame.rotate(candidate);
    let mut res: Vec<(String, f64)> = vec![];
    let bc: Vec<usize> = b.iter().chain(c).copied().collect();
    match which {
        ConeKind::Omega => {
            res.push(("αα".into(), amax(&block(&q, a, a))));
            res.push(("αβ".into(), amax(&block(&q, a, b))));
            res.push(("αγ".into(), amax(&block(&q, a, c))));
            res.push(("(β∪γ) nsd".into(), nsd_violation(&block(&q, &bc, &bc))?));
        }
        ConeKind::GradU => {
            res.push(("βγ".into(), amax(&block(&q, b, c))));
            res.push(("γγ".into(), amax(&block(&q, c, c))));
            res.push(("ββ psd".into(), psd_violation(&block(&q, b, b))?));
        }
        ConeKind::OmegaTildeDerivative | ConeKind::OmegaTildeSubderivative => {
            let ctx = context.ok_or_else(|| SdpError::BadFrame("∇g(x̄)u is required".into()))?;
            let gu = frame.rotate(ctx);
            res.push(("αα".into(), amax(&block(&q, a, a))));
            res.push(("αβ".into(), amax(&block(&q, a, b))));
            let target = if which == ConeKind::OmegaTildeDerivative {
                frame.xi.component_mul(&block(&gu, a, c))
            } else {
                DMatrix::zeros(a.len(), c.len())
            };
            res.push(("αγ Hadamard".into(), amax(&(block(&q, a, c) - target))));
            let qbb = block(&q, b, b);
            res.push(("ββ nsd".into(), nsd_violation(&qbb)?));
            res.push(("⟨Ω̃ββ, [∇gu]ββ⟩".into(), qbb.dot(&block(&gu, b, b)).abs()));
        }
    }
    let ok = res.iter().all(|r| r.1 <= MEMBERSHIP_TOL);
    Ok(Membership { ok, residuals: res })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn projection_basics() {
        let i = SymMat::identity(3);
        assert!(proj_psd(&i).unwrap().sub(&i).norm() < 1e-12);
        assert!(proj_psd(&i.scale(-1.0)).unwrap().norm() < 1e-12);
        let m = SymMat::from_rows(&[&[1.0, 2.0], &[2.0, -3.0]]).unwrap();
        let p = proj_psd(&m).unwrap();
        assert!(proj_psd(&p).unwrap().sub(&p).norm() < 1e-9);
        assert!(min_eig(&p).unwrap() > -1e-12);
    }

    #[test]
    fn derivative_at_definite_points() {
        let h = SymMat::from_rows(&[&[0.3, -1.0], &[-1.0, 2.0]]).unwrap();
        let i = SymMat::identity(2);
        assert!(proj_dir_derivative(&i, &h).unwrap().sub(&h).norm() < 1e-12);
        assert!(proj_dir_derivative(&i.scale(-1.0), &h).unwrap().norm() < 1e-12);
        // at 0 the derivative is the projection of H
        let z = SymMat::zeros(2);
        assert!(proj_dir_derivative(&z, &h).unwrap().sub(&proj_psd(&h).unwrap()).norm() < 1e-12);
    }

    #[test]
    fn symmetry_is_enforced() {
        assert!(matches!(SymMat::from_rows(&[&[1.0, 2.0], &[2.1, 0.0]]), Err(SdpError::NotSymmetric(_))));
        let u = SymMat::from_upper(2, &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(u.0[(1, 0)], 2.0);
        assert_eq!(u.to_upper(), vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn frame_and_memberships() {
        let g = SymMat::from_rows(&[&[2.0, 0.0], &[0.0, 0.0]]).unwrap();
        let om = SymMat::from_rows(&[&[0.0, 0.0], &[0.0, -1.0]]).unwrap();
        let f = PsdFrame::new(&g, &om, DEFAULT_TAU).unwrap();
        assert_eq!((f.alpha.clone(), f.beta.clone(), f.gamma.clone()), (vec![0], vec![], vec![1]));
        assert!((f.xi[(0, 0)] - 0.5).abs() < 1e-12);
        assert!(f.reconstruction_error(&g, &om) < 1e-9);
        assert!(nlsd_cone_membership(&f, ConeKind::Omega, &om, None).unwrap().ok);
        assert!(!nlsd_cone_membership(&f, ConeKind::Omega, &om.scale(-1.0), None).unwrap().ok);
        // g(x̄) ≻ 0, Ω = 0: everything vacuous
        let f = PsdFrame::new(&SymMat::identity(2), &SymMat::zeros(2), DEFAULT_TAU).unwrap();
        assert!(f.beta.is_empty() && f.gamma.is_empty());
        assert!(nlsd_cone_membership(&f, ConeKind::Omega, &SymMat::zeros(2), None).unwrap().ok);
        // Ω not complementary to g
        assert!(matches!(PsdFrame::new(&SymMat::identity(2), &om, DEFAULT_TAU), Err(SdpError::BadFrame(_))));
    }

    #[test]
    fn beta_block_instance() {
        // β = {0, 1}: Ω̃ββ = −diag(0, 1) is nsd and orthogonal to [∇gu]ββ = diag(1, 0)
        let z = SymMat::zeros(2);
        let f = PsdFrame::new(&z, &z, DEFAULT_TAU).unwrap();
        let gu = SymMat::from_rows(&[&[1.0, 0.0], &[0.0, 0.0]]).unwrap();
        let ot = SymMat::from_rows(&[&[0.0, 0.0], &[0.0, -1.0]]).unwrap();
        for kind in [ConeKind::OmegaTildeDerivative, ConeKind::OmegaTildeSubderivative] {
            assert!(nlsd_cone_membership(&f, kind, &ot, Some(&gu)).unwrap().ok);
        }
        assert!(nlsd_cone_membership(&f, ConeKind::GradU, &gu, None).unwrap().ok);
        let bad = SymMat::from_rows(&[&[-1.0, 0.0], &[0.0, -1.0]]).unwrap();
        let r = nlsd_cone_membership(&f, ConeKind::OmegaTildeDerivative, &bad, Some(&gu)).unwrap();
        assert!(!r.ok && r.residuals.iter().any(|x| x.0.starts_with('⟨') && x.1 > 0.5));
    }

    #[test]
    fn hadamard_line_perturbed() {
        let g = SymMat::from_rows(&[&[2.0, 0.0], &[0.0, 0.0]]).unwrap();
        let om = SymMat::from_rows(&[&[0.0, 0.0], &[0.0, -1.0]]).unwrap();
        let f = PsdFrame::new(&g, &om, DEFAULT_TAU).unwrap();
        let gu = SymMat::from_rows(&[&[0.0, 4.0], &[4.0, 0.0]]).unwrap();
        let gup = f.rotate(&gu);
        let want = f.xi[(0, 0)] * gup[(f.alpha[0], f.gamma[0])];
        let mut ot = DMatrix::zeros(2, 2);
        set_block(&mut ot, &f.alpha, &f.gamma, &DMatrix::from_element(1, 1, want));
        let ot = f.unrotate(&ot);
        assert!(nlsd_cone_membership(&f, ConeKind::OmegaTildeDerivative, &ot, Some(&gu)).unwrap().ok);
        let off = ot.add(&f.unrotate(&{
            let mut e = DMatrix::zeros(2, 2);
            set_block(&mut e, &f.alpha, &f.gamma, &DMatrix::from_element(1, 1, 1e-3));
            e
        }));
        let r = nlsd_cone_membership(&f, ConeKind::OmegaTildeDerivative, &off, Some(&gu)).unwrap();
        assert!(!r.ok);
        let had = r.residuals.iter().find(|x| x.0 == "αγ Hadamard").unwrap().1;
        assert!((had - 1e-3).abs() < 1e-9);
    }
}
