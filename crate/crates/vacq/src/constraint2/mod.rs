//! Second-order objects for constraint maps `Φ(x) = g(x) − D` with polyhedral D,
//! taken at a feasible x̄ with ȳ = 0.

pub mod mcs;
pub mod poly;

use std::ops::Range;

use num::{Signed, Zero};
use thiserror::Error;

use crate::exactnum::*;
use crate::polygeo::GeoError;
use crate::polyset::*;

pub use mcs::{gfrerer2_condition_sets, pseudo_coderivative2_set, pseudo_coderivative2_set_coupled, CondPiece, Layout, MultiplierConditionSet, ZVariant};
pub use poly::{Poly, PolyModel};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum C2Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("direction must be nonzero")]
    ZeroDirection,
    #[error("g(x̄) is not in D")]
    InfeasiblePoint,
    #[error("Hessian {0} is not symmetric")]
    NonSymmetricHessian(usize),
    #[error("objective Hessian required for order (2,2)")]
    MissingObjectiveHessian,
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Set(#[from] SetError),
    #[error(transparent)]
    Geo(#[from] GeoError),
    #[error(transparent)]
    Exact(#[from] ExactError),
}

/// Value, Jacobian and component Hessians of g at x̄.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothMapData {
    pub xbar: RatVec,
    pub gval: RatVec,
    pub jac: RatMat,
    pub hess: Vec<RatMat>,
}

impl SmoothMapData {
    pub fn m(&self) -> usize {
        self.gval.len()
    }

    pub fn n(&self) -> usize {
        self.xbar.len()
    }

    pub fn validate(&self) -> Result<(), C2Error> {
        let (m, n) = (self.m(), self.n());
        if self.jac.len() != m || self.jac.iter().any(|r| r.len() != n) {
            return Err(C2Error::DimensionMismatch(format!("Jacobian must be {m}×{n}")));
        }
        if self.hess.len() != m {
            return Err(C2Error::DimensionMismatch(format!("expected {m} Hessians, got {}", self.hess.len())));
        }
        for (k, h) in self.hess.iter().enumerate() {
            if h.len() != n || h.iter().any(|r| r.len() != n) {
                return Err(C2Error::DimensionMismatch(format!("Hessian {k} must be {n}×{n}")));
            }
            for i in 0..n {
                for j in 0..i {
                    if h[i][j] != h[j][i] {
                        return Err(C2Error::NonSymmetricHessian(k));
                    }
                }
            }
        }
        Ok(())
    }

    pub(crate) fn check_n(&self, u: &[Rat]) -> Result<(), C2Error> {
        if u.len() != self.n() {
            return Err(C2Error::DimensionMismatch(format!("vector of length {} in X = R^{}", u.len(), self.n())));
        }
        Ok(())
    }

    pub(crate) fn check_m(&self, v: &[Rat]) -> Result<(), C2Error> {
        if v.len() != self.m() {
            return Err(C2Error::DimensionMismatch(format!("vector of length {} in Y = R^{}", v.len(), self.m())));
        }
        Ok(())
    }

    /// ∇g(x̄)u
    pub fn jac_u(&self, u: &[Rat]) -> RatVec {
        mat_vec(&self.jac, u)
    }

    /// ∇²g(x̄)[u,u], i.e. (uᵀH_i u)_i.
    pub fn quad(&self, u: &[Rat]) -> RatVec {
        self.hess.iter().map(|h| dot(u, &mat_vec(h, u))).collect()
    }

    /// n×m matrix with columns H_i u, so that `∇²⟨y*,g⟩(x̄)(u)` is `hess_u(u)·y*`.
    pub fn hess_u(&self, u: &[Rat]) -> RatMat {
        let cols: Vec<RatVec> = self.hess.iter().map(|h| mat_vec(h, u)).collect();
        (0..self.n()).map(|r| cols.iter().map(|c| c[r].clone()).collect()).collect()
    }

    pub fn weighted_hess_u(&self, y: &[Rat], u: &[Rat]) -> RatVec {
        mat_vec(&self.hess_u(u), y)
    }

    /// ∇g(x̄)*y
    pub fn adjoint(&self, y: &[Rat]) -> RatVec {
        mat_t_vec(&self.jac, y, self.n())
    }

    /// ∇g(x̄)* as an n×m matrix.
    pub fn jac_t(&self) -> RatMat {
        transpose(&self.jac, self.n())
    }
}

/// `factors`, when nonempty, records D = D₁ × … × D_k (in order); cone computations
/// then go factor by factor.
#[derive(Debug, Clone)]
pub struct ConstraintSystem {
    pub map: SmoothMapData,
    pub d: PolyhedralSet,
    pub factors: Vec<PolyhedralSet>,
}

impl ConstraintSystem {
    pub fn new(map: SmoothMapData, d: PolyhedralSet) -> Result<Self, C2Error> {
        map.validate()?;
        if d.dim != map.m() {
            return Err(C2Error::DimensionMismatch(format!("D lives in R^{}, g maps to R^{}", d.dim, map.m())));
        }
        if !d.contains_point(&map.gval) {
            return Err(C2Error::InfeasiblePoint);
        }
        Ok(ConstraintSystem { map, d, factors: vec![] })
    }

    pub fn with_factors(map: SmoothMapData, factors: Vec<PolyhedralSet>) -> Result<Self, C2Error> {
        let mut d = PolyhedralSet::new(0, vec![crate::polygeo::ConvexPolyhedron::full(0)])?;
        for f in &factors {
            d = product(&d, f);
        }
        let mut sys = ConstraintSystem::new(map, d)?;
        sys.factors = factors;
        Ok(sys)
    }

    /// Coordinate blocks of the factors (one block covering everything if unfactored).
    pub fn blocks(&self) -> Vec<(Range<usize>, &PolyhedralSet)> {
        if self.factors.is_empty() {
            return vec![(0..self.m(), &self.d)];
        }
        let mut off = 0;
        let mut out = vec![];
        for f in &self.factors {
            out.push((off..off + f.dim, f));
            off += f.dim;
        }
        out
    }

    fn per_factor<F>(&self, mut f: F) -> Result<UnionCone, C2Error>
    where
        F: FnMut(&PolyhedralSet, Range<usize>) -> Result<UnionCone, C2Error>,
    {
        let mut acc = UnionCone::single(crate::polygeo::PolyCone::full(0));
        for (r, d) in self.blocks() {
            acc = acc.product(&f(d, r)?).dedup();
            if acc.is_empty() {
                return Ok(UnionCone::empty(self.m()));
            }
        }
        Ok(acc)
    }

    /// N_D(g(x̄)), limiting.
    pub fn normal_d(&self) -> Result<UnionCone, C2Error> {
        self.per_factor(|d, r| Ok(limiting_normal_cone(d, &self.map.gval[r])?))
    }

    /// N_D(g(x̄); w) = N_{T_D(g(x̄))}(w).
    pub fn directional_normal_d(&self, w: &[Rat]) -> Result<UnionCone, C2Error> {
        self.map.check_m(w)?;
        self.per_factor(|d, r| Ok(directional_limiting_normal_cone(d, &self.map.gval[r.clone()], &w[r])?))
    }

    /// D N_D(g(x̄), y*)(w) from the graph of the normal-cone map.
    pub fn graphical_derivative_d(&self, ys: &[Rat], w: &[Rat]) -> Result<UnionCone, C2Error> {
        self.map.check_m(w)?;
        self.map.check_m(ys)?;
        self.per_factor(|d, r| {
            crate::ncmap::graphical_derivative(d, &self.map.gval[r.clone()], &ys[r.clone()], &w[r])
                .map_err(|e| C2Error::Parse(e.to_string()))
        })
    }

    /// Strata of T_D(g(x̄)) whose closure contains w, built factor by factor.
    pub fn strata_containing(&self, w: &[Rat]) -> Vec<NormalStratum> {
        let mut acc = vec![NormalStratum {
            closure: crate::polygeo::PolyCone::full(0),
            normal: crate::polygeo::PolyCone::full(0),
            relint: vec![],
        }];
        for (r, d) in self.blocks() {
            let t = tangent_cone(d, &self.map.gval[r.clone()]).expect("g(x̄) ∈ D");
            let local: Vec<NormalStratum> = normal_strata(&t).into_iter().filter(|st| st.closure.contains_point(&w[r.clone()])).collect();
            let mut next = vec![];
            for a in &acc {
                for b in &local {
                    let mut relint = a.relint.clone();
                    relint.extend(b.relint.iter().cloned());
                    next.push(NormalStratum { closure: a.closure.product(&b.closure), normal: a.normal.product(&b.normal), relint });
                }
            }
            acc = next;
        }
        acc
    }

    pub fn m(&self) -> usize {
        self.map.m()
    }

    pub fn n(&self) -> usize {
        self.map.n()
    }

    /// T_D(g(x̄))
    pub fn tangent_d(&self) -> UnionCone {
        if !self.factors.is_empty() {
            return self
                .per_factor(|d, r| Ok(tangent_cone(d, &self.map.gval[r]).expect("g(x̄) ∈ D")))
                .expect("tangent cones of factors");
        }
        tangent_cone(&self.d, &self.map.gval).expect("g(x̄) ∈ D checked at construction")
    }

    /// The convex piece that equals D near g(x̄), if D is convex there.
    pub fn convex_piece(&self) -> Option<crate::polygeo::ConvexPolyhedron> {
        let t = self.tangent_d();
        let p = t.pieces.iter().find(|p| t.pieces.iter().all(|q| p.contains_cone(q)))?;
        Some(crate::polygeo::ConvexPolyhedron::from_cone(p))
    }
}

/// **T**(u) = T_{T_D(g(x̄))}(∇g(x̄)u); empty when ∇g(x̄)u is not tangent.
pub fn big_t(sys: &ConstraintSystem, u: &[Rat]) -> Result<UnionCone, C2Error> {
    sys.map.check_n(u)?;
    let td = sys.tangent_d();
    let ju = sys.map.jac_u(u);
    if !td.contains_point(&ju) {
        return Ok(UnionCone::empty(sys.m()));
    }
    Ok(tangent_cone(&td.to_set(), &ju)?)
}

/// w_s(u,v) = ∇g(x̄)s + ½∇²g(x̄)[u,u] − v
pub fn w_s(sys: &ConstraintSystem, u: &[Rat], v: &[Rat], s: &[Rat]) -> Result<RatVec, C2Error> {
    sys.map.check_n(u)?;
    sys.map.check_n(s)?;
    sys.map.check_m(v)?;
    let half = rat(1, 2);
    let q = vec_scale(&sys.map.quad(u), &half);
    Ok(vec_sub(&vec_add(&sys.map.jac_u(s), &q), v))
}

/// Rows over s expressing `w_s(u,v) ∈ piece` for each piece of **T**(u).
fn w_in_pieces(sys: &ConstraintSystem, t: &UnionCone, u: &[Rat], v: &[Rat]) -> Vec<LinearSystem> {
    let n = sys.n();
    let c = vec_sub(&vec_scale(&sys.map.quad(u), &rat(1, 2)), v);
    t.pieces
        .iter()
        .map(|p| {
            let mut s = LinearSystem::new(n);
            for (r, b) in p.sys.a.iter().zip(&p.sys.b) {
                s.push_ineq(mat_t_vec(&sys.map.jac, r, n), b - dot(r, &c));
            }
            for (r, b) in p.sys.e.iter().zip(&p.sys.d) {
                s.push_eq(mat_t_vec(&sys.map.jac, r, n), b - dot(r, &c));
            }
            s
        })
        .collect()
}

/// An s with `w_s(u,v) ∈ **T**(u)`, i.e. a certificate for `v ∈ D₂Φ(x̄,0)(u)`.
pub fn d2_witness(sys: &ConstraintSystem, u: &[Rat], v: &[Rat]) -> Result<Option<RatVec>, C2Error> {
    sys.map.check_n(u)?;
    sys.map.check_m(v)?;
    if is_zero_vec(u) {
        return Err(C2Error::ZeroDirection);
    }
    let t = big_t(sys, u)?;
    Ok(w_in_pieces(sys, &t, u, v).iter().find_map(lp_feasible_point))
}

pub fn d2_membership(sys: &ConstraintSystem, u: &[Rat], v: &[Rat]) -> Result<bool, C2Error> {
    Ok(d2_witness(sys, u, v)?.is_some())
}

/// Smooth objective data at x̄.
#[derive(Debug, Clone)]
pub struct Objective {
    pub grad: RatVec,
    pub hess: Option<RatMat>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CriticalOrder {
    O11,
    O12,
    O22,
}

pub fn critical_direction(
    order: CriticalOrder,
    sys: &ConstraintSystem,
    obj: &Objective,
    u: &[Rat],
) -> Result<bool, C2Error> {
    sys.map.check_n(u)?;
    sys.map.check_n(&obj.grad)?;
    if is_zero_vec(u) {
        return Err(C2Error::ZeroDirection);
    }
    let slope = dot(&obj.grad, u);
    match order {
        CriticalOrder::O11 => Ok(!slope.is_positive() && sys.tangent_d().contains_point(&sys.map.jac_u(u))),
        CriticalOrder::O12 => Ok(!slope.is_positive() && d2_membership(sys, u, &zeros(sys.m()))?),
        CriticalOrder::O22 => {
            let h = obj.hess.as_ref().ok_or(C2Error::MissingObjectiveHessian)?;
            if slope.is_positive() {
                return Ok(false);
            }
            let t = big_t(sys, u)?;
            let mut pieces = w_in_pieces(sys, &t, u, &zeros(sys.m()));
            if slope.is_zero() {
                let curv = dot(u, &mat_vec(h, u)) * rat(1, 2);
                for p in &mut pieces {
                    p.push_ineq(obj.grad.clone(), -curv.clone());
                }
            }
            Ok(pieces.iter().any(|p| p.is_feasible()))
        }
    }
}
