//! The two second-order implications for `g(x) ∈ S₊`: verification of supplied
//! multiplier pairs and a randomized search for violating pairs. The search never
//! certifies that an implication holds.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::constraint2::SmoothMapData;
use crate::exactnum::to_f64;

/// `g(x̄)`, the partial derivatives `∂g/∂x_k` and second derivatives `∂²g/∂x_k∂x_l`.
#[derive(Debug, Clone)]
pub struct SdpSystem {
    pub g0: SymMat,
    pub jac: Vec<SymMat>,
    pub hess: Vec<Vec<SymMat>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NlsdCq {
    /// Premise with the second-order equation; conclusion Ω = 0.
    II,
    /// Premise with ∇g*Ω̃ = 0; conclusion Ω̃ = 0.
    I,
}

impl SdpSystem {
    pub fn new(g0: SymMat, jac: Vec<SymMat>, hess: Vec<Vec<SymMat>>) -> Result<Self, SdpError> {
        let (m, n) = (g0.dim(), jac.len());
        if jac.iter().any(|j| j.dim() != m) || hess.len() != n || hess.iter().any(|r| r.len() != n || r.iter().any(|h| h.dim() != m)) {
            return Err(SdpError::DimensionMismatch("derivative data does not match g(x̄) and n".into()));
        }
        for k in 0..n {
            for l in 0..k {
                if hess[k][l].sub(&hess[l][k]).0.amax() > 1e-12 {
                    return Err(SdpError::DimensionMismatch(format!("second derivatives ({k},{l}) and ({l},{k}) differ")));
                }
            }
        }
        if min_eig(&g0)? < -1e-9 * g0.0.amax().max(1.0) {
            return Err(SdpError::BadFrame("g(x̄) is not positive semidefinite".into()));
        }
        Ok(SdpSystem { g0, jac, hess })
    }

    /// 1×1 embedding of a scalar constraint `g(x) ≥ 0`.
    pub fn from_scalar(map: &SmoothMapData) -> Result<Self, SdpError> {
        if map.m() != 1 {
            return Err(SdpError::DimensionMismatch("scalar embedding needs m = 1".into()));
        }
        let one = |x: f64| SymMat(DMatrix::from_element(1, 1, x));
        let n = map.n();
        SdpSystem::new(
            one(to_f64(&map.gval[0])),
            (0..n).map(|k| one(to_f64(&map.jac[0][k]))).collect(),
            (0..n).map(|k| (0..n).map(|l| one(to_f64(&map.hess[0][k][l]))).collect()).collect(),
        )
    }

    pub fn m(&self) -> usize {
        self.g0.dim()
    }

    pub fn n(&self) -> usize {
        self.jac.len()
    }

    pub fn grad_u(&self, u: &[f64]) -> SymMat {
        let mut s = SymMat::zeros(self.m());
        for (j, uk) in self.jac.iter().zip(u) {
            s = s.add(&j.scale(*uk));
        }
        s
    }

    pub fn adjoint(&self, om: &SymMat) -> Vec<f64> {
        self.jac.iter().map(|j| j.inner(om)).collect()
    }

    /// `∇²⟨Ω,g⟩(x̄)(u)`.
    pub fn hess_term(&self, om: &SymMat, u: &[f64]) -> Vec<f64> {
        self.hess.iter().map(|row| row.iter().zip(u).map(|(h, ul)| h.inner(om) * ul).sum()).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CandidateReport {
    pub premise_ii: Vec<(String, bool)>,
    pub premise_i: Vec<(String, bool)>,
    /// Consequences of the premise that are rechecked numerically.
    pub derived: Vec<(String, bool)>,
    pub omega_zero: bool,
    pub omega_tilde_zero: bool,
    pub sensitive: bool,
}

impl CandidateReport {
    pub fn violates(&self, cq: NlsdCq) -> bool {
        match cq {
            NlsdCq::II => self.premise_ii.iter().all(|l| l.1) && !self.omega_zero,
            NlsdCq::I => self.premise_i.iter().all(|l| l.1) && !self.omega_tilde_zero,
        }
    }
}

fn small(v: &[f64], scale: f64) -> bool {
    v.iter().all(|x| x.abs() <= MEMBERSHIP_TOL * scale)
}

fn check_u(sys: &SdpSystem, u: &[f64]) -> Result<(), SdpError> {
    if u.len() != sys.n() {
        return Err(SdpError::DimensionMismatch(format!("u has length {}, expected {}", u.len(), sys.n())));
    }
    Ok(())
}

/// Checks each (Ω, Ω̃) against both premises and conclusions, to 1e-8.
pub fn nlsd_cq_verify(sys: &SdpSystem, u: &[f64], candidates: &[(SymMat, SymMat)], tau: f64) -> Result<Vec<CandidateReport>, SdpError> {
    check_u(sys, u)?;
    let gu = sys.grad_u(u);
    let mut out = vec![];
    for (om, ot) in candidates {
        if om.dim() != sys.m() || ot.dim() != sys.m() {
            return Err(SdpError::DimensionMismatch("candidate size differs from g(x̄)".into()));
        }
        let scale = 1f64.max(om.norm()).max(ot.norm());
        let omega_zero = om.norm() <= MEMBERSHIP_TOL;
        let omega_tilde_zero = ot.norm() <= MEMBERSHIP_TOL;
        let adj = ("∇g*Ω = 0".to_string(), small(&sys.adjoint(om), scale));
        let frame = match PsdFrame::new(&sys.g0, om, tau) {
            Ok(f) => f,
            Err(SdpError::BadFrame(_)) => {
                let bad = vec![adj.clone(), ("Ω ∈ N(g(x̄))".to_string(), false)];
                out.push(CandidateReport {
                    premise_ii: bad.clone(),
                    premise_i: bad,
                    derived: vec![],
                    omega_zero,
                    omega_tilde_zero,
                    sensitive: false,
                });
                continue;
            }
            Err(e) => return Err(e),
        };
        let omega_ok = ("Ω ∈ N(g(x̄))".to_string(), nlsd_cone_membership(&frame, ConeKind::Omega, om, None)?.ok);
        let gu_ok = ("∇g(x̄)u block conditions".to_string(), nlsd_cone_membership(&frame, ConeKind::GradU, &gu, None)?.ok);
        let second: Vec<f64> = sys.hess_term(om, u).iter().zip(sys.adjoint(ot)).map(|(a, b)| a + b).collect();
        let premise_ii = vec![
            adj.clone(),
            ("∇²⟨Ω,g⟩(u) + ∇g*Ω̃ = 0".to_string(), small(&second, scale)),
            omega_ok.clone(),
            gu_ok.clone(),
            ("Ω̃ ∈ D N(g(x̄),Ω)(∇g(x̄)u)".to_string(), nlsd_cone_membership(&frame, ConeKind::OmegaTildeDerivative, ot, Some(&gu))?.ok),
        ];
        let premise_i = vec![
            adj,
            ("∇g*Ω̃ = 0".to_string(), small(&sys.adjoint(ot), scale)),
            omega_ok.clone(),
            gu_ok.clone(),
            ("Ω̃ in the subderivative estimate".to_string(), nlsd_cone_membership(&frame, ConeKind::OmegaTildeSubderivative, ot, Some(&gu))?.ok),
        ];
        let mut derived = vec![];
        if omega_ok.1 && gu_ok.1 {
            let gup = frame.rotate(&gu);
            let chain: f64 = frame.gamma.iter().map(|&i| frame.lambda[i] * gup[(i, i)]).sum();
            let tol = MEMBERSHIP_TOL * scale * gu.norm().max(1.0);
            derived.push(("⟨Ω, ∇g(x̄)u⟩ = 0".to_string(), om.inner(&gu).abs() <= tol));
            derived.push(("Σ_γ λᵢ [∇g(x̄)u]ᴾᵢᵢ = 0".to_string(), chain.abs() <= tol));
        }
        out.push(CandidateReport { premise_ii, premise_i, derived, omega_zero, omega_tilde_zero, sensitive: frame.sensitive });
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct Falsified {
    pub cq: NlsdCq,
    pub omega: SymMat,
    pub omega_tilde: SymMat,
    pub iteration: usize,
}

/// Frobenius-orthonormal basis of symmetric matrices supported on `idx × idx`.
fn sym_basis(m: usize, idx: &[usize]) -> Vec<DMatrix<f64>> {
    let mut out = vec![];
    for (a, &i) in idx.iter().enumerate() {
        for &j in &idx[a..] {
            let mut e = DMatrix::zeros(m, m);
            if i == j {
                e[(i, i)] = 1.0;
            } else {
                let s = std::f64::consts::FRAC_1_SQRT_2;
                e[(i, j)] = s;
                e[(j, i)] = s;
            }
            out.push(e);
        }
    }
    out
}

fn combine(basis: &[DMatrix<f64>], c: &DVector<f64>, m: usize) -> DMatrix<f64> {
    let mut s = DMatrix::zeros(m, m);
    for (b, ci) in basis.iter().zip(c.iter()) {
        s += b * *ci;
    }
    s
}

fn coords(basis: &[DMatrix<f64>], s: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_iterator(basis.len(), basis.iter().map(|b| b.dot(s)))
}

/// Replaces the `idx × idx` block of `s` by its negative semidefinite part.
fn nsd_block(s: &DMatrix<f64>, idx: &[usize]) -> Result<DMatrix<f64>, SdpError> {
    let b = block(s, idx, idx);
    let p = proj_nsd(&SymMat((&b + b.transpose()) * 0.5))?;
    let mut out = s.clone();
    set_block(&mut out, idx, idx, &p.0);
    Ok(out)
}

/// Alternating projections onto `{c : A c = b}` and onto matrices whose `nsd`
/// block is negative semidefinite. With `unit`, the iterate is kept on the unit
/// sphere (homogeneous case). Returns a point satisfying both to 1e-10.
#[allow(clippy::too_many_arguments)]
fn affine_nsd_search(
    basis: &[DMatrix<f64>],
    fixed: &DMatrix<f64>,
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    nsd: &[usize],
    unit: bool,
    rng: &mut ChaCha8Rng,
    m: usize,
) -> Result<Option<DMatrix<f64>>, SdpError> {
    let p = basis.len();
    if p == 0 {
        return Ok(None);
    }
    let pinv = a.clone().pseudo_inverse(1e-12).map_err(|_| SdpError::EigenFailure)?;
    let project = |c: &DVector<f64>| c - &pinv * (a * c - b);
    let mut c = project(&DVector::from_fn(p, |_, _| rng.gen_range(-1.0..1.0)));
    for _ in 0..300 {
        if unit {
            let nrm = c.norm();
            if nrm < 1e-12 {
                return Ok(None);
            }
            c /= nrm;
        }
        let s = fixed + combine(basis, &c, m);
        let t = nsd_block(&s, nsd)?;
        c = project(&coords(basis, &(t - fixed)));
        let s = fixed + combine(basis, &c, m);
        let viol = if nsd.is_empty() { 0.0 } else { max_eig(&SymMat(block(&s, nsd, nsd)))?.max(0.0) };
        let aff = (a * &c - b).amax();
        if viol <= 1e-11 && aff <= 1e-11 && (!unit || c.norm() > 0.5) {
            return Ok(Some(s));
        }
    }
    Ok(None)
}

/// Randomized search for a pair violating either implication within `budget` samples of Ω.
pub fn nlsd_falsify(sys: &SdpSystem, u: &[f64], budget: usize, seed: u64, tau: f64) -> Result<Option<Falsified>, SdpError> {
    check_u(sys, u)?;
    let m = sys.m();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gu = sys.grad_u(u);
    let (p0, l0) = eig(&sys.g0)?;
    let t = tau * sys.g0.0.amax().max(1.0);
    let kern: Vec<usize> = (0..m).filter(|&i| l0[i] <= t).collect();
    if kern.is_empty() {
        return Ok(None);
    }
    // Ω = P₀ S P₀ᵀ with S supported on the kernel of g(x̄), S ⪯ 0, ∇g*Ω = 0
    let obasis = sym_basis(m, &kern);
    let jrot: Vec<DMatrix<f64>> = sys.jac.iter().map(|j| p0.transpose() * &j.0 * &p0).collect();
    let a_om = DMatrix::from_fn(sys.n(), obasis.len(), |r, c| jrot[r].dot(&obasis[c]));
    let zero_m = DMatrix::zeros(m, m);
    for it in 0..budget {
        let s = if it == 0 {
            Some(zero_m.clone())
        } else {
            affine_nsd_search(&obasis, &zero_m, &a_om, &DVector::zeros(sys.n()), &kern, true, &mut rng, m)?
        };
        let Some(s) = s else { continue };
        let om = SymMat(&p0 * s * p0.transpose());
        let Ok(frame) = PsdFrame::new(&sys.g0, &om, tau) else { continue };
        if !nlsd_cone_membership(&frame, ConeKind::GradU, &gu, None)?.ok {
            continue;
        }
        let bg: Vec<usize> = frame.beta.iter().chain(&frame.gamma).copied().collect();
        let tbasis = sym_basis(m, &bg);
        let jf: Vec<DMatrix<f64>> = sys.jac.iter().map(|j| frame.rotate(j)).collect();
        let gup = frame.rotate(&gu);
        let gbb = {
            let mut e = DMatrix::zeros(m, m);
            set_block(&mut e, &frame.beta, &frame.beta, &block(&gup, &frame.beta, &frame.beta));
            e
        };
        let mut a = DMatrix::from_fn(sys.n() + 1, tbasis.len(), |r, c| if r < sys.n() { jf[r].dot(&tbasis[c]) } else { gbb.dot(&tbasis[c]) });
        if tbasis.is_empty() {
            a = DMatrix::zeros(sys.n() + 1, 0);
        }
        for cq in [NlsdCq::II, NlsdCq::I] {
            if cq == NlsdCq::II && om.norm() <= MEMBERSHIP_TOL {
                continue;
            }
            let mut fixed = DMatrix::zeros(m, m);
            let mut rhs = DVector::zeros(sys.n() + 1);
            if cq == NlsdCq::II {
                let ag = frame.xi.component_mul(&block(&gup, &frame.alpha, &frame.gamma));
                set_block(&mut fixed, &frame.alpha, &frame.gamma, &ag);
                let h = sys.hess_term(&om, u);
                for k in 0..sys.n() {
                    rhs[k] = -h[k] - jf[k].dot(&fixed);
                }
            }
            let found = affine_nsd_search(&tbasis, &fixed, &a, &rhs, &frame.beta, cq == NlsdCq::I, &mut rng, m)?;
            let Some(otp) = found else { continue };
            let ot = frame.unrotate(&otp);
            let rep = nlsd_cq_verify(sys, u, &[(om.clone(), ot.clone())], tau)?;
            if rep[0].violates(cq) {
                return Ok(Some(Falsified { cq, omega: om, omega_tilde: ot, iteration: it }));
            }
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn degenerate() -> SdpSystem {
        // g(x) = diag(x², −x²) + x·0: ∇g(0) = 0, indefinite second derivative
        let h = SymMat::from_rows(&[&[2.0, 0.0], &[0.0, -2.0]]).unwrap();
        SdpSystem::new(SymMat::zeros(2), vec![SymMat::zeros(2)], vec![vec![h]]).unwrap()
    }

    #[test]
    fn zero_pair_meets_conclusions() {
        let sys = degenerate();
        let z = SymMat::zeros(2);
        let r = &nlsd_cq_verify(&sys, &[1.0], &[(z.clone(), z)], DEFAULT_TAU).unwrap()[0];
        assert!(!r.violates(NlsdCq::II) && !r.violates(NlsdCq::I));
        assert!(r.omega_zero && r.omega_tilde_zero);
    }

    #[test]
    fn degenerate_instance_is_falsified() {
        let sys = degenerate();
        let f = nlsd_falsify(&sys, &[1.0], 10_000, 7, DEFAULT_TAU).unwrap().expect("violation within budget");
        let r = &nlsd_cq_verify(&sys, &[1.0], &[(f.omega.clone(), f.omega_tilde.clone())], DEFAULT_TAU).unwrap()[0];
        assert!(r.violates(f.cq));
        assert!(r.derived.iter().all(|d| d.1));
        // hand-made violation of the second implication: Ω = −I balances the curvature
        let om = SymMat::identity(2).scale(-1.0);
        let r = &nlsd_cq_verify(&sys, &[1.0], &[(om, SymMat::zeros(2))], DEFAULT_TAU).unwrap()[0];
        assert!(r.violates(NlsdCq::II));
    }

    #[test]
    fn definite_constraint_has_nothing_to_falsify() {
        let sys = SdpSystem::new(SymMat::identity(2), vec![SymMat::identity(2)], vec![vec![SymMat::zeros(2)]]).unwrap();
        assert!(nlsd_falsify(&sys, &[1.0], 100, 1, DEFAULT_TAU).unwrap().is_none());
    }

    #[test]
    fn falsifier_is_deterministic() {
        let sys = degenerate();
        let a = nlsd_falsify(&sys, &[1.0], 200, 3, DEFAULT_TAU).unwrap().unwrap();
        let b = nlsd_falsify(&sys, &[1.0], 200, 3, DEFAULT_TAU).unwrap().unwrap();
        assert_eq!(a.omega, b.omega);
        assert_eq!(a.omega_tilde, b.omega_tilde);
    }
}
