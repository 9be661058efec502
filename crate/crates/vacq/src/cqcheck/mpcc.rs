//! Complementarity constraints `(Gᵢ(x), Hᵢ(x)) ∈ C`, C the complementarity angle,
//! written as `g = (G₁,H₁,…,G_m,H_m)` and `D = C^m`.

use num::{Signed, Zero};

use super::{check_u, i_new, pseudo_subreg_ii, CQVerdict, Certificate, CqError, LineReport};
use crate::constraint2::*;
use crate::exactnum::*;
use crate::ncmap::complementarity_angle;
use crate::polyset::*;

#[derive(Debug, Clone, PartialEq)]
pub struct MpccData {
    pub g: SmoothMapData,
    pub h: SmoothMapData,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MpccVerdicts {
    pub cq34: CQVerdict,
    pub cq35: CQVerdict,
}

fn interleave<T: Clone>(a: &[T], b: &[T]) -> Vec<T> {
    a.iter().zip(b).flat_map(|(x, y)| [x.clone(), y.clone()]).collect()
}

fn split(v: &[Rat]) -> (RatVec, RatVec) {
    (v.iter().step_by(2).cloned().collect(), v.iter().skip(1).step_by(2).cloned().collect())
}

impl MpccData {
    pub fn m(&self) -> usize {
        self.g.m()
    }

    pub fn n(&self) -> usize {
        self.g.n()
    }

    /// The interleaved constraint system over `C^m`.
    pub fn system(&self) -> Result<ConstraintSystem, CqError> {
        if self.g.xbar != self.h.xbar || self.g.m() != self.h.m() || self.g.n() != self.h.n() {
            return Err(CqError::DimensionMismatch("G and H must share x̄ and have equal sizes".into()));
        }
        self.g.validate()?;
        self.h.validate()?;
        for (a, b) in self.g.gval.iter().zip(&self.h.gval) {
            if a.is_negative() || b.is_negative() || !(a * b).is_zero() {
                return Err(CqError::InfeasiblePoint);
            }
        }
        let map = SmoothMapData {
            xbar: self.g.xbar.clone(),
            gval: interleave(&self.g.gval, &self.h.gval),
            jac: interleave(&self.g.jac, &self.h.jac),
            hess: interleave(&self.g.hess, &self.h.hess),
        };
        Ok(ConstraintSystem::with_factors(map, vec![complementarity_angle(); self.m()])?)
    }
}

fn relabel(mut v: CQVerdict, cq: &str) -> CQVerdict {
    v.cq = cq.into();
    if let Certificate::Witness { blocks, .. } = &mut v.certificate {
        let mut out = vec![];
        for (name, vals) in blocks.iter() {
            let (a, b) = split(vals);
            match name.as_str() {
                "y" => out.extend([("mu".to_string(), a), ("nu".to_string(), b)]),
                "z" => out.extend([("mu~".to_string(), a), ("nu~".to_string(), b)]),
                _ => out.push((name.clone(), vals.clone())),
            }
        }
        *blocks = out;
    }
    v
}

/// cq34: the premise over (μ, ν, μ̃, ν̃) forces μ = ν = 0; cq35: with
/// ∇G*μ̃ + ∇H*ν̃ = 0 in place of the second-order equation it forces μ̃ = ν̃ = 0.
pub fn mpcc_cq(data: &MpccData, u: &[Rat]) -> Result<MpccVerdicts, CqError> {
    let sys = data.system()?;
    check_u(&sys, u)?;
    if !sys.tangent_d().contains_point(&sys.map.jac_u(u)) {
        let inc = |cq: &str| CQVerdict::inconclusive(cq, u, "direction not linearized-feasible", "complementarity constraints");
        return Ok(MpccVerdicts { cq34: inc("cq34"), cq35: inc("cq35") });
    }
    let mut cq34 = relabel(pseudo_subreg_ii(&sys, u)?, "cq34");
    let mut cq35 = relabel(i_new(&sys, u)?, "cq35");
    cq34.basis = "complementarity constraints: mixed-order stationarity qualification".into();
    cq35.basis = "complementarity constraints: companion qualification forcing μ̃ = ν̃ = 0".into();
    Ok(MpccVerdicts { cq34, cq35 })
}

/// `D N_C((a,b),(μ,ν))(v)` by case analysis; returns the 1-based case index
/// (the last case is the empty set) and the cone.
pub fn dn_c_table(a: &Rat, b: &Rat, mu: &Rat, nu: &Rat, v: &[Rat]) -> (usize, UnionCone) {
    let z = |r: &Rat| r.is_zero();
    let p = |r: &Rat| r.is_positive();
    let ng = |r: &Rat| r.is_negative();
    let (v1, v2) = (&v[0], &v[1]);
    let vz = z(v1) && z(v2);
    let ab0 = z(a) && z(b);
    let cases: [(bool, &[&[i8]]); 12] = [
        (p(a) && z(b) && z(mu) && z(v2), &[&[0, 2]]),
        (z(a) && z(nu) && p(b) && z(v1), &[&[2, 0]]),
        (ab0 && ng(mu) && ng(nu) && vz, &[&[2, 2]]),
        (ab0 && z(mu) && ng(nu) && p(v1) && z(v2), &[&[0, 2]]),
        (ab0 && z(mu) && ng(nu) && vz, &[&[-1, 2]]),
        (ab0 && z(nu) && ng(mu) && z(v1) && p(v2), &[&[2, 0]]),
        (ab0 && z(nu) && ng(mu) && vz, &[&[2, -1]]),
        (ab0 && z(mu) && p(nu) && !ng(v1) && z(v2), &[&[0, 2]]),
        (ab0 && z(nu) && p(mu) && z(v1) && !ng(v2), &[&[2, 0]]),
        (ab0 && z(mu) && z(nu) && p(v1) && z(v2), &[&[0, 2]]),
        (ab0 && z(mu) && z(nu) && z(v1) && p(v2), &[&[2, 0]]),
        (ab0 && z(mu) && z(nu) && vz, &[&[-1, -1], &[0, 2], &[2, 0]]),
    ];
    for (i, (hit, pats)) in cases.iter().enumerate() {
        if *hit {
            return (i + 1, sign_union(pats));
        }
    }
    (13, UnionCone::empty(2))
}

/// Every line of the mixed-order stationarity system for complementarity constraints,
/// with the index sets computed from (G(x̄), H(x̄)) and u.
pub fn mpcc_mixed_order_verify(
    data: &MpccData,
    grad: &[Rat],
    u: &[Rat],
    mu: &[Rat],
    nu: &[Rat],
    mu_t: &[Rat],
    nu_t: &[Rat],
) -> Result<LineReport, CqError> {
    let (m, n) = (data.m(), data.n());
    for (name, v, len) in [("gradient", grad, n), ("u", u, n), ("μ", mu, m), ("ν", nu, m), ("μ̃", mu_t, m), ("ν̃", nu_t, m)] {
        if v.len() != len {
            return Err(CqError::DimensionMismatch(format!("{name} has length {}, expected {len}", v.len())));
        }
    }
    let (g, h) = (&data.g, &data.h);
    let (gu, hu) = (g.jac_u(u), h.jac_u(u));
    let mut rep = LineReport::default();
    let mut res = grad.to_vec();
    res = vec_add(&res, &g.weighted_hess_u(mu, u));
    res = vec_add(&res, &h.weighted_hess_u(nu, u));
    res = vec_add(&res, &g.adjoint(mu_t));
    res = vec_add(&res, &h.adjoint(nu_t));
    rep.lines.push(("0 = ∇φ + Σ(μᵢ∇²Gᵢ + νᵢ∇²Hᵢ)u + ∇G*μ̃ + ∇H*ν̃".into(), is_zero_vec(&res)));
    rep.lines.push(("0 = ∇G*μ + ∇H*ν".into(), is_zero_vec(&vec_add(&g.adjoint(mu), &h.adjoint(nu)))));
    let (mut lin, mut mu0, mut nu0, mut bi, mut dn) = (true, true, true, true, true);
    for i in 0..m {
        let (a, b) = (&g.gval[i], &h.gval[i]);
        let (va, vb) = (&gu[i], &hu[i]);
        let both = a.is_zero() && b.is_zero();
        let i_p0 = a.is_positive() || (both && va.is_positive() && vb.is_zero());
        let i_0p = b.is_positive() || (both && va.is_zero() && vb.is_positive());
        let i_00 = both && va.is_zero() && vb.is_zero();
        lin &= if a.is_positive() {
            vb.is_zero()
        } else if b.is_positive() {
            va.is_zero()
        } else {
            complementarity_angle().contains_point(&[va.clone(), vb.clone()])
        };
        if i_p0 {
            mu0 &= mu[i].is_zero();
        }
        if i_0p {
            nu0 &= nu[i].is_zero();
        }
        if i_00 {
            bi &= (!mu[i].is_positive() && !nu[i].is_positive()) || (&mu[i] * &nu[i]).is_zero();
        }
        let (_, cone) = dn_c_table(a, b, &mu[i], &nu[i], &[va.clone(), vb.clone()]);
        dn &= cone.contains_point(&[mu_t[i].clone(), nu_t[i].clone()]);
    }
    rep.lines.push(("u solves the linearized complementarity system".into(), lin));
    rep.lines.push(("μᵢ = 0 on I⁺⁰ ∪ I⁰⁰₊₀".into(), mu0));
    rep.lines.push(("νᵢ = 0 on I⁰⁺ ∪ I⁰⁰₀₊".into(), nu0));
    rep.lines.push(("μᵢ, νᵢ ≤ 0 or μᵢνᵢ = 0 on I⁰⁰₀₀".into(), bi));
    rep.lines.push(("(μ̃ᵢ, ν̃ᵢ) ∈ D N_C((Ḡᵢ,H̄ᵢ),(μᵢ,νᵢ))(∇Ḡᵢu, ∇H̄ᵢu)".into(), dn));
    Ok(rep)
}
