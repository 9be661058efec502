//! Finite unions of convex polyhedra and their variational cones.

pub mod cells;

use num::Zero;
use thiserror::Error;

use crate::exactnum::*;
use crate::polygeo::*;

pub use cells::{regular_normal_of_union, Arrangement, Cell};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SetError {
    #[error("point is not in the set")]
    PointNotInSet,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error(transparent)]
    Geo(#[from] GeoError),
}

/// Union of convex polyhedra; zero pieces is the empty set. Overlaps are allowed.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyhedralSet {
    pub dim: usize,
    pub pieces: Vec<ConvexPolyhedron>,
}

/// Union of polyhedral cones. No pieces means the empty set, which is how
/// "u is not tangent" is reported.
#[derive(Debug, Clone, PartialEq)]
pub struct UnionCone {
    pub dim: usize,
    pub pieces: Vec<PolyCone>,
}

impl PolyhedralSet {
    pub fn new(dim: usize, pieces: Vec<ConvexPolyhedron>) -> Result<Self, SetError> {
        for p in &pieces {
            if p.dim() != dim {
                return Err(SetError::DimensionMismatch(format!("piece of dim {} in a set of dim {}", p.dim(), dim)));
            }
            p.sys.validate().map_err(GeoError::from)?;
        }
        Ok(PolyhedralSet { dim, pieces })
    }

    pub fn single(p: ConvexPolyhedron) -> Self {
        PolyhedralSet { dim: p.dim(), pieces: vec![p] }
    }

    pub fn empty(dim: usize) -> Self {
        PolyhedralSet { dim, pieces: vec![] }
    }

    pub fn contains_point(&self, x: &[Rat]) -> bool {
        self.pieces.iter().any(|p| p.contains_point(x))
    }

    pub fn is_empty(&self) -> bool {
        self.pieces.iter().all(|p| p.is_empty())
    }

    pub fn is_convex_repr(&self) -> bool {
        self.pieces.len() == 1
    }

    /// A piece containing all others, if any (the set is then convex).
    pub fn dominant_piece(&self) -> Option<&ConvexPolyhedron> {
        self.pieces.iter().find(|p| self.pieces.iter().all(|q| q.subset_of(p)))
    }

    fn pieces_at(&self, x: &[Rat]) -> Result<Vec<&ConvexPolyhedron>, SetError> {
        if x.len() != self.dim {
            return Err(SetError::DimensionMismatch(format!("point of length {} in dim {}", x.len(), self.dim)));
        }
        let ps: Vec<_> = self.pieces.iter().filter(|p| p.contains_point(x)).collect();
        if ps.is_empty() {
            return Err(SetError::PointNotInSet);
        }
        Ok(ps)
    }

    pub fn intersect(&self, other: &PolyhedralSet) -> PolyhedralSet {
        let mut pieces = vec![];
        for p in &self.pieces {
            for q in &other.pieces {
                let r = p.intersect(q);
                if !r.is_empty() {
                    pieces.push(r);
                }
            }
        }
        PolyhedralSet { dim: self.dim, pieces }
    }

    pub fn union(&self, other: &PolyhedralSet) -> PolyhedralSet {
        let mut pieces = self.pieces.clone();
        pieces.extend(other.pieces.iter().cloned());
        PolyhedralSet { dim: self.dim, pieces }
    }
}

impl UnionCone {
    pub fn empty(dim: usize) -> Self {
        UnionCone { dim, pieces: vec![] }
    }

    pub fn single(c: PolyCone) -> Self {
        UnionCone { dim: c.dim(), pieces: vec![c] }
    }

    pub fn is_empty(&self) -> bool {
        self.pieces.is_empty()
    }

    pub fn contains_point(&self, x: &[Rat]) -> bool {
        self.pieces.iter().any(|p| p.contains_point(x))
    }

    pub fn to_set(&self) -> PolyhedralSet {
        PolyhedralSet { dim: self.dim, pieces: self.pieces.iter().map(ConvexPolyhedron::from_cone).collect() }
    }

    pub fn is_trivial(&self) -> bool {
        !self.is_empty() && self.pieces.iter().all(|p| p.is_trivial())
    }

    /// Drops pieces contained in another piece.
    pub fn dedup(self) -> UnionCone {
        let n = self.pieces.len();
        let mut keep = vec![true; n];
        for i in 0..n {
            for j in 0..n {
                if i == j || !keep[j] {
                    continue;
                }
                if self.pieces[j].contains_cone(&self.pieces[i]) {
                    let equal = self.pieces[i].contains_cone(&self.pieces[j]);
                    if !equal || j < i {
                        keep[i] = false;
                        break;
                    }
                }
            }
        }
        let pieces = self.pieces.into_iter().zip(keep).filter(|(_, k)| *k).map(|(p, _)| p).collect();
        UnionCone { dim: self.dim, pieces }
    }

    /// Set equality of the unions.
    pub fn set_eq(&self, other: &UnionCone) -> bool {
        contains(&self.to_set(), &other.to_set()) && contains(&other.to_set(), &self.to_set())
    }

    pub fn product(&self, other: &UnionCone) -> UnionCone {
        let mut pieces = vec![];
        for p in &self.pieces {
            for q in &other.pieces {
                pieces.push(p.product(q));
            }
        }
        UnionCone { dim: self.dim + other.dim, pieces }
    }
}

pub fn tangent_cone(s: &PolyhedralSet, x: &[Rat]) -> Result<UnionCone, SetError> {
    let ps = s.pieces_at(x)?;
    let mut pieces = vec![];
    for p in ps {
        pieces.push(tangent_cone_convex(p, x)?);
    }
    Ok(UnionCone { dim: s.dim, pieces }.dedup())
}

pub fn regular_normal_cone(s: &PolyhedralSet, x: &[Rat]) -> Result<PolyCone, SetError> {
    let ps = s.pieces_at(x)?;
    let mut acc: Option<PolyCone> = None;
    for p in ps {
        let n = normal_cone_convex(p, x)?;
        acc = Some(match acc {
            None => n,
            Some(a) => a.intersect(&n),
        });
    }
    Ok(acc.expect("at least one piece").simplified())
}

/// Limiting normal cone at 0 of a union of cones: union over arrangement cells
/// of the regular normal cone at a relative-interior point.
pub fn limiting_of_cones(t: &UnionCone) -> UnionCone {
    if t.is_empty() {
        return UnionCone::empty(t.dim);
    }
    let arr = Arrangement::new(t.dim, &t.pieces);
    let mut pieces = vec![];
    for cell in arr.cells_in_union() {
        if let Some(n) = regular_normal_of_union(&t.pieces, &cell.point) {
            pieces.push(n.simplified());
        }
    }
    UnionCone { dim: t.dim, pieces }.dedup()
}

/// One stratum of a union of cones: the closed cell and its regular normal cone.
#[derive(Debug, Clone)]
pub struct NormalStratum {
    pub closure: PolyCone,
    pub normal: PolyCone,
    pub relint: RatVec,
}

/// For every w in the union, `N(w)` is the union of `normal` over strata whose closure holds w.
pub fn normal_strata(t: &UnionCone) -> Vec<NormalStratum> {
    if t.is_empty() {
        return vec![];
    }
    let arr = Arrangement::new(t.dim, &t.pieces);
    let mut out = vec![];
    for cell in arr.cells_in_union() {
        if let Some(n) = regular_normal_of_union(&t.pieces, &cell.point) {
            let closure = PolyCone { sys: fm::remove_redundant(&arr.closure(&cell.signs)) };
            out.push(NormalStratum { closure, normal: n.simplified(), relint: cell.point });
        }
    }
    out
}

pub fn limiting_normal_cone(s: &PolyhedralSet, x: &[Rat]) -> Result<UnionCone, SetError> {
    Ok(limiting_of_cones(&tangent_cone(s, x)?))
}

pub fn directional_limiting_normal_cone(s: &PolyhedralSet, x: &[Rat], u: &[Rat]) -> Result<UnionCone, SetError> {
    let t = tangent_cone(s, x)?;
    if u.len() != s.dim {
        return Err(SetError::DimensionMismatch("direction length".into()));
    }
    if !t.contains_point(u) {
        return Ok(UnionCone::empty(s.dim));
    }
    let tt = tangent_cone(&t.to_set(), u)?;
    Ok(limiting_of_cones(&tt))
}

pub fn product(s1: &PolyhedralSet, s2: &PolyhedralSet) -> PolyhedralSet {
    let mut pieces = vec![];
    for p in &s1.pieces {
        for q in &s2.pieces {
            pieces.push(p.product(q));
        }
    }
    PolyhedralSet { dim: s1.dim + s2.dim, pieces }
}

#[derive(Debug, Clone)]
struct StrictPiece {
    closed: LinearSystem,
    strict: Vec<(RatVec, Rat)>,
}

impl StrictPiece {
    fn nonempty(&self) -> bool {
        strict_feasible_point(&self.closed, &self.strict).is_some()
    }

    fn closure(&self) -> ConvexPolyhedron {
        let mut s = self.closed.clone();
        for (r, c) in &self.strict {
            s.push_ineq(r.clone(), c.clone());
        }
        ConvexPolyhedron::new(s)
    }
}

fn split_against(sp: &StrictPiece, q: &ConvexPolyhedron) -> Vec<StrictPiece> {
    let mut out = vec![];
    let mut prefix = sp.closed.clone();
    let emit = |prefix: &LinearSystem, extra: (RatVec, Rat), out: &mut Vec<StrictPiece>| {
        let mut strict = sp.strict.clone();
        strict.push(extra);
        let cand = StrictPiece { closed: prefix.clone(), strict };
        if cand.nonempty() {
            out.push(cand);
        }
    };
    for (r, c) in q.sys.a.iter().zip(&q.sys.b) {
        emit(&prefix, (vec_scale(r, &ri(-1)), -c.clone()), &mut out);
        prefix.push_ineq(r.clone(), c.clone());
    }
    for (r, f) in q.sys.e.iter().zip(&q.sys.d) {
        emit(&prefix, (r.clone(), f.clone()), &mut out);
        emit(&prefix, (vec_scale(r, &ri(-1)), -f.clone()), &mut out);
        prefix.push_eq(r.clone(), f.clone());
    }
    out
}

fn strict_difference(s1: &PolyhedralSet, s2: &PolyhedralSet) -> Vec<StrictPiece> {
    let mut cur: Vec<StrictPiece> = s1
        .pieces
        .iter()
        .map(|p| StrictPiece { closed: p.sys.clone(), strict: vec![] })
        .filter(|p| p.nonempty())
        .collect();
    for q in &s2.pieces {
        cur = cur.iter().flat_map(|sp| split_against(sp, q)).collect();
        if cur.is_empty() {
            break;
        }
    }
    cur
}

/// Closed pieces whose union is the closure of s1 \ s2; every emitted piece
/// has nonempty interior relative to s1 \ s2, so emptiness is exact.
pub fn difference(s1: &PolyhedralSet, s2: &PolyhedralSet) -> Result<PolyhedralSet, SetError> {
    if s1.dim != s2.dim {
        return Err(SetError::DimensionMismatch(format!("{} vs {}", s1.dim, s2.dim)));
    }
    let pieces = strict_difference(s1, s2).iter().map(|p| p.closure()).collect();
    Ok(PolyhedralSet { dim: s1.dim, pieces })
}

/// s2 ⊆ s1.
pub fn contains(s1: &PolyhedralSet, s2: &PolyhedralSet) -> bool {
    assert_eq!(s1.dim, s2.dim, "contains: dimension mismatch");
    strict_difference(s2, s1).is_empty()
}

/// A point of s2 outside s1, if any.
pub fn containment_counterexample(s1: &PolyhedralSet, s2: &PolyhedralSet) -> Option<RatVec> {
    strict_difference(s2, s1).first().and_then(|p| strict_feasible_point(&p.closed, &p.strict))
}

/// Orthant-style helpers for tests and examples.
pub fn halfspace(dim: usize, row: &[i64], rhs: i64) -> ConvexPolyhedron {
    let mut s = LinearSystem::new(dim);
    s.push_ineq(rvec(row), ri(rhs));
    ConvexPolyhedron::new(s)
}

/// Cone from sign pattern per coordinate: -1 → ≤ 0, 1 → ≥ 0, 0 → = 0, 2 → free.
pub fn sign_cone(pattern: &[i8]) -> PolyCone {
    let n = pattern.len();
    let mut a = vec![];
    let mut e = vec![];
    for (i, &s) in pattern.iter().enumerate() {
        match s {
            -1 => a.push(unit(n, i)),
            1 => a.push(vec_scale(&unit(n, i), &ri(-1))),
            0 => e.push(unit(n, i)),
            _ => {}
        }
    }
    PolyCone::from_rows(n, a, e)
}

pub fn sign_set(patterns: &[&[i8]]) -> PolyhedralSet {
    let dim = patterns[0].len();
    PolyhedralSet { dim, pieces: patterns.iter().map(|p| ConvexPolyhedron::from_cone(&sign_cone(p))).collect() }
}

pub fn sign_union(patterns: &[&[i8]]) -> UnionCone {
    let dim = patterns[0].len();
    UnionCone { dim, pieces: patterns.iter().map(|p| sign_cone(p)).collect() }
}

pub fn zero_vec_is(x: &[Rat]) -> bool {
    x.iter().all(|v| v.is_zero())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c_angle() -> PolyhedralSet {
        sign_set(&[&[1, 0], &[0, 1]])
    }

    fn d513() -> PolyhedralSet {
        sign_set(&[&[1, 2], &[2, 1]])
    }

    #[test]
    fn tangent_examples() {
        let c = c_angle();
        assert!(tangent_cone(&c, &rvec(&[0, 0])).unwrap().set_eq(&sign_union(&[&[1, 0], &[0, 1]])));
        assert!(tangent_cone(&c, &rvec(&[1, 0])).unwrap().set_eq(&sign_union(&[&[2, 0]])));
        assert!(tangent_cone(&d513(), &rvec(&[0, 0])).unwrap().set_eq(&sign_union(&[&[1, 2], &[2, 1]])));
        assert_eq!(tangent_cone(&c, &rvec(&[1, 1])), Err(SetError::PointNotInSet));
    }

    #[test]
    fn regular_examples() {
        let c = c_angle();
        assert!(regular_normal_cone(&c, &rvec(&[1, 0])).unwrap().equals(&sign_cone(&[0, 2])));
        assert!(regular_normal_cone(&c, &rvec(&[0, 0])).unwrap().equals(&sign_cone(&[-1, -1])));
        assert!(regular_normal_cone(&d513(), &rvec(&[1, 0])).unwrap().is_trivial());
    }

    #[test]
    fn limiting_examples() {
        let c = c_angle();
        let n = limiting_normal_cone(&c, &rvec(&[0, 0])).unwrap();
        assert!(n.set_eq(&sign_union(&[&[0, 2], &[2, 0], &[-1, -1]])));
        let neg = PolyhedralSet::single(halfspace(1, &[1], 0));
        assert!(limiting_normal_cone(&neg, &rvec(&[0])).unwrap().set_eq(&sign_union(&[&[1]])));
    }

    #[test]
    fn directional_examples() {
        let d = d513();
        let z = rvec(&[0, 0]);
        let n = directional_limiting_normal_cone(&d, &z, &rvec(&[-1, 0])).unwrap();
        assert!(n.set_eq(&sign_union(&[&[0, -1]])));
        let n = directional_limiting_normal_cone(&d, &z, &rvec(&[1, 0])).unwrap();
        assert!(n.set_eq(&sign_union(&[&[0, 0]])));
        let neg = PolyhedralSet::single(halfspace(1, &[1], 0));
        let n = directional_limiting_normal_cone(&neg, &rvec(&[0]), &rvec(&[-1])).unwrap();
        assert!(n.set_eq(&sign_union(&[&[0]])));
        let n = directional_limiting_normal_cone(&neg, &rvec(&[0]), &rvec(&[1])).unwrap();
        assert!(n.is_empty());
        // zero direction gives the limiting cone
        let c = c_angle();
        let n0 = directional_limiting_normal_cone(&c, &z, &z).unwrap();
        assert!(n0.set_eq(&limiting_normal_cone(&c, &z).unwrap()));
    }

    #[test]
    fn set_operations() {
        let c = c_angle();
        assert_eq!(product(&c, &c).pieces.len(), 4);
        let r2 = sign_set(&[&[2, 2]]);
        let quad = sign_set(&[&[1, 1]]);
        assert!(!difference(&r2, &quad).unwrap().is_empty());
        assert!(contains(&r2, &c));
        assert!(contains(&d513(), &quad));
        assert!(!contains(&quad, &d513()));
        // equality pieces are handled exactly
        assert!(contains(&c, &sign_set(&[&[0, 0]])));
        assert!(!contains(&sign_set(&[&[1, 0]]), &c));
    }
}
