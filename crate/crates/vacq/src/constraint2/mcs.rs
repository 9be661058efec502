//! Multiplier condition sets: finite unions of relatively open polyhedra over
//! stacked variables (y*, z*, s, …).

use std::ops::Range;

use num::{Signed, Zero};

use super::{big_t, C2Error, ConstraintSystem, SmoothMapData};
use crate::exactnum::*;
use crate::polygeo::{ConvexPolyhedron, PolyCone};
use crate::polyset::*;

#[derive(Debug, Clone, PartialEq)]
pub struct Layout {
    pub blocks: Vec<(String, usize, usize)>,
}

impl Layout {
    pub fn new(spec: &[(&str, usize)]) -> Self {
        let mut off = 0;
        let mut blocks = vec![];
        for (name, len) in spec {
            blocks.push((name.to_string(), off, *len));
            off += len;
        }
        Layout { blocks }
    }

    pub fn dim(&self) -> usize {
        self.blocks.iter().map(|b| b.2).sum()
    }

    pub fn has(&self, name: &str) -> bool {
        self.blocks.iter().any(|b| b.0 == name)
    }

    pub fn range(&self, name: &str) -> Range<usize> {
        let b = self.blocks.iter().find(|b| b.0 == name).unwrap_or_else(|| panic!("no block {name}"));
        b.1..b.1 + b.2
    }

    pub fn get(&self, x: &[Rat], name: &str) -> RatVec {
        x[self.range(name)].to_vec()
    }
}

/// `closed` together with strict rows `r·x < c`.
#[derive(Debug, Clone, PartialEq)]
pub struct CondPiece {
    pub closed: LinearSystem,
    pub strict: Vec<(RatVec, Rat)>,
    pub tag: String,
}

impl CondPiece {
    pub fn point(&self) -> Option<RatVec> {
        strict_feasible_point(&self.closed, &self.strict)
    }

    pub fn contains(&self, x: &[Rat]) -> bool {
        self.closed.satisfied_by(x) && self.strict.iter().all(|(r, c)| dot(r, x) < *c)
    }

    /// Closure; exact for nonempty pieces.
    pub fn closure(&self) -> LinearSystem {
        let mut s = self.closed.clone();
        for (r, c) in &self.strict {
            s.push_ineq(r.clone(), c.clone());
        }
        s
    }

    /// A member with some coordinate in `range` nonzero.
    pub fn nonzero_member(&self, range: Range<usize>) -> Option<RatVec> {
        let p = self.point()?;
        if p[range.clone()].iter().any(|v| !v.is_zero()) {
            return Some(p);
        }
        let cl = self.closure();
        for i in range {
            for sgn in [1i64, -1] {
                let c = vec_scale(&unit(cl.dim, i), &ri(sgn));
                match lp_solve(&c, &cl).expect("consistent dimensions") {
                    LpOutcome::Optimal { value, point } if value.is_positive() => {
                        // the open segment from p to point stays in the piece
                        return Some(vec_scale(&vec_add(&p, &point), &rat(1, 2)));
                    }
                    LpOutcome::Unbounded { ray, .. } if !ray[i].is_zero() => return Some(vec_add(&p, &ray)),
                    LpOutcome::Unbounded { point, ray } => {
                        // ray improves the objective, so it moves coordinate i
                        let q = vec_add(&point, &ray);
                        return Some(vec_scale(&vec_add(&p, &q), &rat(1, 2)));
                    }
                    _ => {}
                }
            }
        }
        None
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultiplierConditionSet {
    pub layout: Layout,
    pub pieces: Vec<CondPiece>,
}

impl MultiplierConditionSet {
    pub fn dim(&self) -> usize {
        self.layout.dim()
    }

    pub fn is_empty(&self) -> bool {
        self.pieces.iter().all(|p| p.point().is_none())
    }

    pub fn contains_point(&self, x: &[Rat]) -> bool {
        self.pieces.iter().any(|p| p.contains(x))
    }

    pub fn point(&self) -> Option<RatVec> {
        self.pieces.iter().find_map(|p| p.point())
    }

    pub fn prune(&mut self) {
        self.pieces.retain(|p| p.point().is_some());
    }

    pub fn add_eq(&mut self, row: RatVec, rhs: Rat) {
        for p in &mut self.pieces {
            p.closed.push_eq(row.clone(), rhs.clone());
        }
        self.prune();
    }

    pub fn add_ineq(&mut self, row: RatVec, rhs: Rat) {
        for p in &mut self.pieces {
            p.closed.push_ineq(row.clone(), rhs.clone());
        }
        self.prune();
    }

    /// Adds `M·x[block] = 0` row by row, where M has `len(block)` columns.
    pub fn add_block_eqs(&mut self, block: &str, m: &RatMat) {
        let r = self.layout.range(block);
        for row in m {
            let mut full = zeros(self.dim());
            for (k, v) in r.clone().zip(row) {
                full[k] = v.clone();
            }
            self.add_eq(full, Rat::zero());
        }
    }

    /// Member with a nonzero entry in `block`, with the index of its piece.
    pub fn nonzero_member(&self, block: &str) -> Option<(usize, RatVec)> {
        let r = self.layout.range(block);
        self.pieces.iter().enumerate().find_map(|(i, p)| p.nonzero_member(r.clone()).map(|x| (i, x)))
    }

    /// The projection onto `block` is {0} (or the set is empty).
    pub fn block_trivial(&self, block: &str) -> bool {
        self.nonzero_member(block).is_none()
    }

    /// Closure of the image under `x ↦ M x`, M with `dim()` columns.
    pub fn image(&self, m: &RatMat) -> Result<PolyhedralSet, C2Error> {
        let dim = self.dim();
        let k = m.len();
        let mut pieces = vec![];
        for p in &self.pieces {
            if p.point().is_none() {
                continue;
            }
            let mut s = p.closure().embed(dim + k, 0);
            for (i, row) in m.iter().enumerate() {
                let mut r = vec_scale(row, &ri(-1));
                r.extend(zeros(k));
                r[dim + i] = ri(1);
                s.push_eq(r, Rat::zero());
            }
            let elim: Vec<usize> = (0..dim).collect();
            pieces.push(ConvexPolyhedron::new(fm::fm_eliminate(&s, &elim)?));
        }
        Ok(PolyhedralSet { dim: k, pieces })
    }

    pub fn projection(&self, block: &str) -> Result<PolyhedralSet, C2Error> {
        let r = self.layout.range(block);
        let m: RatMat = r.map(|i| unit(self.dim(), i)).collect();
        self.image(&m)
    }

    /// Closure of `{∇²⟨y*,g⟩(x̄)(u) + ∇g(x̄)*z*}` over the set.
    pub fn x_image(&self, map: &SmoothMapData, u: &[Rat]) -> Result<PolyhedralSet, C2Error> {
        self.image(&x_map(&self.layout, map, u))
    }

    pub fn to_polyhedral_set(&self) -> PolyhedralSet {
        let pieces = self.pieces.iter().filter(|p| p.point().is_some()).map(|p| ConvexPolyhedron::new(p.closure())).collect();
        PolyhedralSet { dim: self.dim(), pieces }
    }
}

/// Rows of `(y*, z*, …) ↦ ∇²⟨y*,g⟩(x̄)(u) + ∇g(x̄)*z*`.
pub fn x_map(layout: &Layout, map: &SmoothMapData, u: &[Rat]) -> RatMat {
    let hu = map.hess_u(u);
    let jt = map.jac_t();
    let (ry, rz) = (layout.range("y"), layout.range("z"));
    (0..map.n())
        .map(|i| {
            let mut row = zeros(layout.dim());
            for (k, j) in ry.clone().enumerate() {
                row[j] = hu[i][k].clone();
            }
            for (k, j) in rz.clone().enumerate() {
                row[j] = jt[i][k].clone();
            }
            row
        })
        .collect()
}

/// How z* enters: `z* ∈ N_K(w)` or `z* ∈ T_{N_K(w)}(y*)`; the latter equals the
/// graphical-derivative form `z* ∈ D N_K(0,y*)(w)` for polyhedral K.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ZVariant {
    Normal,
    TangentOfNormal,
}

/// `w = W x + c` over stacked variables.
pub(crate) struct AffineW {
    pub rows: RatMat,
    pub c: RatVec,
}

fn w_in_cone(w: &AffineW, cone: &PolyCone, dim: usize) -> LinearSystem {
    let mut s = LinearSystem::new(dim);
    for r in &cone.sys.a {
        s.push_ineq(mat_t_vec(&w.rows, r, dim), -dot(r, &w.c));
    }
    for r in &cone.sys.e {
        s.push_eq(mat_t_vec(&w.rows, r, dim), -dot(r, &w.c));
    }
    s
}

/// Active-row patterns of the nonempty relatively open faces of a cone.
pub fn cone_faces(c: &PolyCone) -> Vec<Vec<bool>> {
    let k = c.sys.a.len();
    let mut out = vec![];
    let mut cur = vec![];
    faces_dfs(c, k, &mut cur, &mut out);
    out
}

fn faces_dfs(c: &PolyCone, k: usize, cur: &mut Vec<bool>, out: &mut Vec<Vec<bool>>) {
    let mut closed = LinearSystem::new(c.dim());
    for (r, d) in c.sys.e.iter().zip(&c.sys.d) {
        closed.push_eq(r.clone(), d.clone());
    }
    let mut strict = vec![];
    for (i, r) in c.sys.a.iter().enumerate() {
        match cur.get(i) {
            Some(true) => closed.push_eq(r.clone(), Rat::zero()),
            Some(false) => strict.push((r.clone(), Rat::zero())),
            None => closed.push_ineq(r.clone(), Rat::zero()),
        }
    }
    if strict_feasible_point(&closed, &strict).is_none() {
        return;
    }
    if cur.len() == k {
        out.push(cur.clone());
        return;
    }
    for b in [true, false] {
        cur.push(b);
        faces_dfs(c, k, cur, out);
        cur.pop();
    }
}

/// Intersects every base piece with `y ∈ N_K(w)` and the z-condition, K given by its strata.
pub(crate) fn attach_normal_conditions(
    base: &[CondPiece],
    strata: &[NormalStratum],
    w: &AffineW,
    y_off: usize,
    z: Option<(usize, ZVariant)>,
) -> Vec<CondPiece> {
    let mut out = vec![];
    for b in base {
        let dim = b.closed.dim;
        for (i, c1) in strata.iter().enumerate() {
            let mut p1 = b.clone();
            p1.closed = p1.closed.intersect(&w_in_cone(w, &c1.closure, dim)).intersect(&c1.normal.sys.embed(dim, y_off));
            p1.tag = format!("{}C{}", b.tag, i);
            if p1.point().is_none() {
                continue;
            }
            match z {
                None => out.push(p1),
                Some((z_off, ZVariant::Normal)) => {
                    for (j, c2) in strata.iter().enumerate() {
                        let mut p = p1.clone();
                        p.closed = p.closed.intersect(&w_in_cone(w, &c2.closure, dim)).intersect(&c2.normal.sys.embed(dim, z_off));
                        p.tag = format!("{}/C{}", p1.tag, j);
                        if p.point().is_some() {
                            out.push(p);
                        }
                    }
                }
                Some((z_off, ZVariant::TangentOfNormal)) => {
                    let nc = &c1.normal;
                    for face in cone_faces(nc) {
                        let mut p = p1.clone();
                        for (r, e) in nc.sys.e.iter().zip(&nc.sys.d) {
                            p.closed.push_eq(embed_row(r, dim, z_off), e.clone());
                        }
                        let mut bits = String::new();
                        for (r, &act) in nc.sys.a.iter().zip(&face) {
                            if act {
                                p.closed.push_eq(embed_row(r, dim, y_off), Rat::zero());
                                p.closed.push_ineq(embed_row(r, dim, z_off), Rat::zero());
                                bits.push('1');
                            } else {
                                p.strict.push((embed_row(r, dim, y_off), Rat::zero()));
                                bits.push('0');
                            }
                        }
                        p.tag = format!("{}/F{}", p1.tag, bits);
                        if p.point().is_some() {
                            out.push(p);
                        }
                    }
                }
            }
        }
    }
    out
}

fn embed_row(r: &[Rat], dim: usize, off: usize) -> RatVec {
    let mut v = zeros(dim);
    for (j, x) in r.iter().enumerate() {
        v[off + j] = x.clone();
    }
    v
}

pub(crate) fn kernel_base(map: &SmoothMapData, layout: &Layout) -> CondPiece {
    let dim = layout.dim();
    let ry = layout.range("y");
    let mut closed = LinearSystem::new(dim);
    for row in map.jac_t() {
        closed.push_eq(embed_row(&row, dim, ry.start), Rat::zero());
    }
    CondPiece { closed, strict: vec![], tag: String::new() }
}

fn check_direction(sys: &ConstraintSystem, u: &[Rat], v: &[Rat]) -> Result<(), C2Error> {
    if u.len() != sys.n() || v.len() != sys.m() {
        return Err(C2Error::DimensionMismatch("direction / v length".into()));
    }
    if is_zero_vec(u) {
        return Err(C2Error::ZeroDirection);
    }
    Ok(())
}

fn pc2(sys: &ConstraintSystem, u: &[Rat], v: Option<&[Rat]>, variant: ZVariant) -> Result<MultiplierConditionSet, C2Error> {
    let (m, n) = (sys.m(), sys.n());
    let layout = Layout::new(&[("y", m), ("z", m), ("s", n)]);
    let dim = layout.dim();
    let t = big_t(sys, u)?;
    let strata = normal_strata(&t);
    let half_q = vec_scale(&sys.map.quad(u), &rat(1, 2));
    let rs = layout.range("s");
    let mut rows = vec![];
    for i in 0..m {
        let mut r = zeros(dim);
        for (k, j) in rs.clone().enumerate() {
            r[j] = sys.map.jac[i][k].clone();
        }
        if v.is_none() {
            r[i] = ri(-1);
        }
        rows.push(r);
    }
    let c = match v {
        Some(v) => vec_sub(&half_q, v),
        None => half_q,
    };
    let w = AffineW { rows, c };
    let base = kernel_base(&sys.map, &layout);
    let pieces = attach_normal_conditions(&[base], &strata, &w, 0, Some((m, variant)));
    Ok(MultiplierConditionSet { layout, pieces })
}

/// `{(y*, z*, s) : y* ∈ N_{T(u)}(w_s(u,v)) ∩ ker ∇g(x̄)*, z* per variant}`.
pub fn pseudo_coderivative2_set(
    sys: &ConstraintSystem,
    u: &[Rat],
    v: &[Rat],
    variant: ZVariant,
) -> Result<MultiplierConditionSet, C2Error> {
    check_direction(sys, u, v)?;
    pc2(sys, u, Some(v), variant)
}

/// Same set with v tied to y* (v = y*). Up to scaling of (y*, z*) this covers every
/// `v = αy*` with α > 0.
pub fn pseudo_coderivative2_set_coupled(
    sys: &ConstraintSystem,
    u: &[Rat],
    variant: ZVariant,
) -> Result<MultiplierConditionSet, C2Error> {
    check_direction(sys, u, &zeros(sys.m()))?;
    pc2(sys, u, None, variant)
}

/// `{(y*, z*) : y* ∈ N_{T_D(g(x̄))}(∇g(x̄)u − v) ∩ ker ∇g(x̄)*, z* per variant}`.
pub fn gfrerer2_condition_sets(
    sys: &ConstraintSystem,
    u: &[Rat],
    v: &[Rat],
    variant: ZVariant,
) -> Result<MultiplierConditionSet, C2Error> {
    check_direction(sys, u, v)?;
    let m = sys.m();
    let layout = Layout::new(&[("y", m), ("z", m)]);
    let w0 = vec_sub(&sys.map.jac_u(u), v);
    let strata = sys.strata_containing(&w0);
    let w = AffineW { rows: vec![zeros(2 * m); m], c: w0 };
    let base = kernel_base(&sys.map, &layout);
    let pieces = attach_normal_conditions(&[base], &strata, &w, 0, Some((m, variant)));
    Ok(MultiplierConditionSet { layout, pieces })
}
