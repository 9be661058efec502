//! Line-by-line membership checks of stationarity systems and of the premises
//! behind Fails certificates. These go through the tangent/normal-cone and
//! graphical-derivative routines directly, not through the multiplier sets.

use num::Zero;

use super::{parse_variant, CQVerdict, Certificate, CqError};
use crate::constraint2::*;
use crate::exactnum::*;
use crate::polyset::*;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct LineReport {
    pub lines: Vec<(String, bool)>,
    /// The implication's right-hand side, when the report is about a CQ premise.
    pub conclusion: Option<(String, bool)>,
}

impl LineReport {
    fn push(&mut self, name: &str, ok: bool) {
        self.lines.push((name.to_string(), ok));
    }

    /// Every listed line holds.
    pub fn ok(&self) -> bool {
        self.lines.iter().all(|l| l.1)
    }

    pub fn failed(&self) -> Vec<&str> {
        self.lines.iter().filter(|l| !l.1).map(|l| l.0.as_str()).collect()
    }
}

fn len_check(name: &str, v: &[Rat], want: usize) -> Result<(), CqError> {
    if v.len() != want {
        return Err(CqError::DimensionMismatch(format!("{name} has length {}, expected {want}", v.len())));
    }
    Ok(())
}

fn in_dir_normal(sys: &ConstraintSystem, w: &[Rat], y: &[Rat]) -> bool {
    sys.directional_normal_d(w).map(|c| c.contains_point(y)).unwrap_or(false)
}

fn in_graph_derivative(sys: &ConstraintSystem, y: &[Rat], w: &[Rat], z: &[Rat]) -> bool {
    if !sys.normal_d().map(|c| c.contains_point(y)).unwrap_or(false) {
        return false;
    }
    sys.graphical_derivative_d(y, w).map(|c| c.contains_point(z)).unwrap_or(false)
}

/// Lines for `y*, z*` against **T**(u) at `w`.
fn pseudo_lines(rep: &mut LineReport, sys: &ConstraintSystem, u: &[Rat], w: &[Rat], y: &[Rat], z: &[Rat], variant: ZVariant) {
    let t = big_t(sys, u).unwrap_or_else(|_| UnionCone::empty(sys.m()));
    let in_t = t.contains_point(w);
    rep.push("w_s(u,v) ∈ T(u)", in_t);
    let n = if in_t { limiting_normal_cone(&t.to_set(), w).ok() } else { None };
    let y_ok = n.as_ref().is_some_and(|n| n.contains_point(y));
    rep.push("y* ∈ N_T(u)(w_s)", y_ok);
    let z_ok = match (&n, variant) {
        (Some(n), ZVariant::Normal) => n.contains_point(z),
        (Some(n), ZVariant::TangentOfNormal) => y_ok && tangent_cone(&n.to_set(), y).map(|c| c.contains_point(z)).unwrap_or(false),
        (None, _) => false,
    };
    rep.push(
        match variant {
            ZVariant::Normal => "z* ∈ N_T(u)(w_s)",
            ZVariant::TangentOfNormal => "z* ∈ T_N(y*)",
        },
        z_ok,
    );
}

fn stationarity_residual(sys: &ConstraintSystem, grad: &[Rat], u: &[Rat], y: &[Rat], z: &[Rat]) -> RatVec {
    vec_add(&vec_add(grad, &sys.map.weighted_hess_u(y, u)), &sys.map.adjoint(z))
}

/// M-stationarity: `0 = ∇φ(x̄) + ∇g(x̄)*λ`, `λ ∈ N_D(g(x̄))`.
pub fn mstat_verify(sys: &ConstraintSystem, grad: &[Rat], lam: &[Rat]) -> Result<LineReport, CqError> {
    len_check("gradient", grad, sys.n())?;
    len_check("λ", lam, sys.m())?;
    let mut rep = LineReport::default();
    rep.push("0 = ∇φ + ∇g*λ", is_zero_vec(&vec_add(grad, &sys.map.adjoint(lam))));
    rep.push("λ ∈ N_D(g(x̄))", sys.normal_d()?.contains_point(lam));
    Ok(rep)
}

/// How the second-order multipliers are tied to the constraint set.
#[derive(Debug, Clone, PartialEq)]
pub enum MixedVariant {
    /// `y* ∈ N_D(g(x̄); ∇g u)`, `z* ∈ D N_D(g(x̄), y*)(∇g u)`.
    GraphDerivative,
    /// `y*, z* ∈ N_{T_D(g(x̄))}(∇g u)`.
    NormalOfTangent,
    /// Through **T**(u) at `w_s(u,0)` for the given s.
    Pseudo { s: RatVec, z: ZVariant },
}

/// Mixed-order stationarity in direction u for smooth φ.
pub fn mixed_order_verify(
    sys: &ConstraintSystem,
    grad: &[Rat],
    u: &[Rat],
    y: &[Rat],
    z: &[Rat],
    variant: &MixedVariant,
) -> Result<LineReport, CqError> {
    len_check("gradient", grad, sys.n())?;
    len_check("u", u, sys.n())?;
    len_check("y*", y, sys.m())?;
    len_check("z*", z, sys.m())?;
    let mut rep = LineReport::default();
    rep.push("0 = ∇φ + ∇²⟨y*,g⟩(u) + ∇g*z*", is_zero_vec(&stationarity_residual(sys, grad, u, y, z)));
    rep.push("∇g*y* = 0", is_zero_vec(&sys.map.adjoint(y)));
    let ju = sys.map.jac_u(u);
    match variant {
        MixedVariant::GraphDerivative => {
            rep.push("y* ∈ N_D(g(x̄); ∇g u)", in_dir_normal(sys, &ju, y));
            rep.push("z* ∈ D N_D(g(x̄), y*)(∇g u)", in_graph_derivative(sys, y, &ju, z));
        }
        MixedVariant::NormalOfTangent => {
            rep.push("y* ∈ N_D(g(x̄); ∇g u)", in_dir_normal(sys, &ju, y));
            rep.push("z* ∈ N_D(g(x̄); ∇g u)", in_dir_normal(sys, &ju, z));
        }
        MixedVariant::Pseudo { s, z: zv } => {
            len_check("s", s, sys.n())?;
            let w = w_s(sys, u, &zeros(sys.m()), s)?;
            pseudo_lines(&mut rep, sys, u, &w, y, z, *zv);
        }
    }
    Ok(rep)
}

fn block(v: &CQVerdict, name: &str, len: usize) -> Result<RatVec, CqError> {
    let b = v.witness(name).cloned().ok_or_else(|| CqError::DimensionMismatch(format!("certificate lacks block {name}")))?;
    len_check(name, &b, len)?;
    Ok(b)
}

fn interleave(a: &[Rat], b: &[Rat]) -> RatVec {
    a.iter().zip(b).flat_map(|(x, y)| [x.clone(), y.clone()]).collect()
}

/// `x ∈ ∇g* K` for a union of cones K, by one feasibility problem per piece.
fn in_adjoint_image(sys: &ConstraintSystem, k: &UnionCone, x: &[Rat]) -> bool {
    let jt = sys.map.jac_t();
    k.pieces.iter().any(|c| {
        let mut s = c.sys.clone();
        for (row, xi) in jt.iter().zip(x) {
            s.push_eq(row.clone(), xi.clone());
        }
        s.is_feasible()
    })
}

/// Premise lines and conclusion of the implication a Fails certificate violates.
pub fn premise_report(sys: &ConstraintSystem, v: &CQVerdict) -> Result<LineReport, CqError> {
    if let Some(rest) = v.note().and_then(|n| n.strip_prefix("qualification: ")) {
        let (cq, note) = rest.split_once("; ").unwrap_or((rest, ""));
        let mut inner = v.clone();
        inner.cq = cq.into();
        if let Certificate::Witness { note: nt, .. } = &mut inner.certificate {
            *nt = note.into();
        }
        return premise_report(sys, &inner);
    }
    let (m, n) = (sys.m(), sys.n());
    let u = &v.direction;
    len_check("direction", u, n)?;
    let ju = sys.map.jac_u(u);
    let mut rep = LineReport::default();
    let (y, z) = match v.cq.as_str() {
        "cq34" | "cq35" => {
            let h = m / 2;
            let y = interleave(&block(v, "mu", h)?, &block(v, "nu", h)?);
            let z = interleave(&block(v, "mu~", h)?, &block(v, "nu~", h)?);
            (y, Some(z))
        }
        "foscms" | "soscms" => (block(v, "y", m)?, None),
        _ => (block(v, "y", m)?, Some(block(v, "z", m)?)),
    };
    let zero_y = is_zero_vec(&y);
    rep.push("∇g*y* = 0", is_zero_vec(&sys.map.adjoint(&y)));
    match v.cq.as_str() {
        "foscms" | "soscms" => {
            rep.push("y* ∈ N_D(g(x̄); ∇g u)", in_dir_normal(sys, &ju, &y));
            if v.cq == "soscms" {
                rep.push("∇²⟨y*,g⟩[u,u] ≥ 0", dot(&y, &sys.map.quad(u)) >= Rat::zero());
            }
            rep.conclusion = Some(("y* = 0".into(), zero_y));
        }
        "two_regularity_dual" | "pseudo_reg_explicit" => {
            let z = z.expect("z block");
            let nd = sys.normal_d()?;
            rep.push("y* ∈ N_D(g(x̄))", nd.contains_point(&y));
            rep.push("z* ∈ N_D(g(x̄))", nd.contains_point(&z));
            rep.push("∇²⟨y*,g⟩(u) + ∇g*z* = 0", is_zero_vec(&stationarity_residual(sys, &zeros(n), u, &y, &z)));
            if v.cq == "pseudo_reg_explicit" {
                rep.push("⟨z*, ∇g u⟩ = 0", dot(&z, &ju).is_zero());
            }
            rep.conclusion = Some(("y* = 0".into(), zero_y));
        }
        "gfrerer_or_polyII" => {
            let z = z.expect("z block");
            let s = block(v, "s", n)?;
            let variant = v.note().and_then(parse_variant).unwrap_or(ZVariant::Normal);
            let w = w_s(sys, u, &zeros(m), &s)?;
            pseudo_lines(&mut rep, sys, u, &w, &y, &z, variant);
            rep.push("∇²⟨y*,g⟩(u) + ∇g*z* = 0", is_zero_vec(&stationarity_residual(sys, &zeros(n), u, &y, &z)));
            rep.conclusion = Some(("y* = 0".into(), zero_y));
        }
        "pseudo_subreg_ii" | "i_new" | "cq34" | "cq35" => {
            let z = z.expect("z block");
            rep.push("y* ∈ N_D(g(x̄); ∇g u)", in_dir_normal(sys, &ju, &y));
            rep.push("z* ∈ D N_D(g(x̄), y*)(∇g u)", in_graph_derivative(sys, &y, &ju, &z));
            if v.cq == "pseudo_subreg_ii" || v.cq == "cq34" {
                rep.push("∇²⟨y*,g⟩(u) + ∇g*z* = 0", is_zero_vec(&stationarity_residual(sys, &zeros(n), u, &y, &z)));
                rep.conclusion = Some(("y* = 0".into(), zero_y));
            } else {
                rep.push("∇g*z* = 0", is_zero_vec(&sys.map.adjoint(&z)));
                rep.conclusion = Some(("z* = 0".into(), is_zero_vec(&z)));
            }
        }
        c if c.starts_with("asymp_") => {
            let z = z.expect("z block");
            let s = block(v, "s", n)?;
            let vv = block(v, "v", m)?;
            let x = block(v, "x", n)?;
            let note = v.note().unwrap_or("");
            if note.contains("graph derivative") {
                rep.push("y* ∈ N_D(g(x̄); ∇g u)", in_dir_normal(sys, &ju, &y));
                rep.push("z* ∈ D N_D(g(x̄), y*)(∇g u)", in_graph_derivative(sys, &y, &ju, &z));
            } else {
                let variant = parse_variant(note).unwrap_or(ZVariant::Normal);
                let w = w_s(sys, u, &vv, &s)?;
                let coupled = note.contains("v = y");
                rep.push("v = 0 or v = y*", if coupled { vv == y } else { is_zero_vec(&vv) });
                pseudo_lines(&mut rep, sys, u, &w, &y, &z, variant);
            }
            rep.push("x* = ∇²⟨y*,g⟩(u) + ∇g*z*", x == stationarity_residual(sys, &zeros(n), u, &y, &z));
            let k = if note.contains("strong") { sys.directional_normal_d(&ju)? } else { sys.normal_d()? };
            rep.conclusion = Some(("x* ∈ ∇g* N".into(), in_adjoint_image(sys, &k, &x)));
        }
        other => return Err(CqError::DimensionMismatch(format!("unknown condition {other:?}"))),
    }
    Ok(rep)
}

/// Holds: every branch of the trace is settled. Fails: the witness satisfies every
/// premise line and violates the conclusion. Inconclusive verdicts carry nothing to check.
pub fn verify_certificate(sys: &ConstraintSystem, v: &CQVerdict) -> Result<bool, CqError> {
    match (&v.status, &v.certificate) {
        (super::Status::Holds, Certificate::Trace(bs)) => Ok(bs.iter().all(|b| b.verify())),
        (super::Status::Fails, Certificate::Witness { .. }) => {
            let rep = premise_report(sys, v)?;
            Ok(rep.ok() && rep.conclusion.is_some_and(|c| !c.1))
        }
        (super::Status::Inconclusive, _) => Ok(true),
        _ => Ok(false),
    }
}
