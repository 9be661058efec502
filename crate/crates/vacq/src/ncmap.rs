//! Graphs and graphical derivatives of normal-cone maps of polyhedral sets.

use thiserror::Error;

use crate::exactnum::*;
use crate::polygeo::*;
use crate::polyset::*;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NcError {
    #[error("point is not on the graph of the normal-cone map")]
    PointNotOnGraph,
    #[error("direction must be nonzero")]
    ZeroDirection,
    #[error(transparent)]
    Set(#[from] SetError),
    #[error(transparent)]
    Geo(#[from] GeoError),
}

/// `cl(cell) × N̂_D(cell)` for one stratum of D.
#[derive(Debug, Clone)]
pub struct GraphCell {
    pub base: ConvexPolyhedron,
    pub fiber: PolyCone,
    pub relint: RatVec,
}

#[derive(Debug, Clone)]
pub struct NormalConeGraph {
    pub base_dim: usize,
    pub cells: Vec<GraphCell>,
}

impl NormalConeGraph {
    pub fn graph(&self) -> PolyhedralSet {
        let pieces = self
            .cells
            .iter()
            .map(|c| c.base.product(&ConvexPolyhedron::from_cone(&c.fiber)))
            .collect();
        PolyhedralSet { dim: 2 * self.base_dim, pieces }
    }

    /// Union of the fibers over y; equals the limiting normal cone at y.
    pub fn slice(&self, y: &[Rat]) -> UnionCone {
        let pieces = self.cells.iter().filter(|c| c.base.contains_point(y)).map(|c| c.fiber.clone()).collect();
        UnionCone { dim: self.base_dim, pieces }.dedup()
    }

    pub fn contains(&self, y: &[Rat], ys: &[Rat]) -> bool {
        self.cells.iter().any(|c| c.base.contains_point(y) && c.fiber.contains_point(ys))
    }
}

pub fn build_graph(d: &PolyhedralSet) -> NormalConeGraph {
    let live: Vec<ConvexPolyhedron> = d.pieces.iter().filter(|p| !p.is_empty()).cloned().collect();
    let set = PolyhedralSet { dim: d.dim, pieces: live };
    let systems: Vec<&LinearSystem> = set.pieces.iter().map(|p| &p.sys).collect();
    let arr = Arrangement::affine(d.dim, &systems);
    let mut cells = vec![];
    for cell in arr.cells_in_union() {
        let fiber = regular_normal_cone(&set, &cell.point).expect("relint point lies in the set");
        let base = ConvexPolyhedron::new(fm::remove_redundant(&arr.closure(&cell.signs)));
        cells.push(GraphCell { base, fiber, relint: cell.point });
    }
    let n = cells.len();
    let mut keep = vec![true; n];
    for i in 0..n {
        for j in 0..n {
            if i == j || !keep[j] {
                continue;
            }
            let inside = cells[i].base.subset_of(&cells[j].base) && cells[j].fiber.contains_cone(&cells[i].fiber);
            if inside {
                let back = cells[j].base.subset_of(&cells[i].base) && cells[i].fiber.contains_cone(&cells[j].fiber);
                if !back || j < i {
                    keep[i] = false;
                    break;
                }
            }
        }
    }
    let cells = cells.into_iter().zip(keep).filter(|(_, k)| *k).map(|(c, _)| c).collect();
    NormalConeGraph { base_dim: d.dim, cells }
}

/// `D N_D(y, y*)(u)` from the tangent cone of the graph (works for any polyhedral D).
pub fn graphical_derivative(d: &PolyhedralSet, y: &[Rat], ys: &[Rat], u: &[Rat]) -> Result<UnionCone, NcError> {
    let g = build_graph(d);
    graphical_derivative_on(&g, y, ys, u)
}

pub fn graphical_derivative_on(g: &NormalConeGraph, y: &[Rat], ys: &[Rat], u: &[Rat]) -> Result<UnionCone, NcError> {
    let m = g.base_dim;
    if y.len() != m || ys.len() != m || u.len() != m {
        return Err(SetError::DimensionMismatch("graphical derivative arguments".into()).into());
    }
    if !g.contains(y, ys) {
        return Err(NcError::PointNotOnGraph);
    }
    let mut pieces = vec![];
    for c in &g.cells {
        if !c.base.contains_point(y) || !c.fiber.contains_point(ys) {
            continue;
        }
        let tb = tangent_cone_convex(&c.base, y)?;
        if tb.contains_point(u) {
            pieces.push(tangent_cone_convex(&ConvexPolyhedron::from_cone(&c.fiber), ys)?);
        }
    }
    Ok(UnionCone { dim: m, pieces }.dedup())
}

/// Convex D: `N_K(u)` for the critical cone `K = T_D(y) ∩ [y*]^⊥`, empty when u ∉ K.
pub fn graphical_derivative_convex(d: &ConvexPolyhedron, y: &[Rat], ys: &[Rat], u: &[Rat]) -> Result<UnionCone, NcError> {
    let m = d.dim();
    if !d.contains_point(y) || !normal_cone_convex(d, y)?.contains_point(ys) {
        return Err(NcError::PointNotOnGraph);
    }
    let mut k = tangent_cone_convex(d, y)?;
    k.sys.push_eq(ys.to_vec(), num::Zero::zero());
    if !k.contains_point(u) {
        return Ok(UnionCone::empty(m));
    }
    let n = normal_cone_convex(&ConvexPolyhedron::from_cone(&k), u)?;
    Ok(UnionCone::single(n))
}

/// Membership of v in the graphical (= sub-) derivative, for nonzero u, v.
pub fn graphical_subderivative_polyhedral(
    d: &PolyhedralSet,
    y: &[Rat],
    ys: &[Rat],
    u: &[Rat],
    v: &[Rat],
) -> Result<bool, NcError> {
    if is_zero_vec(u) || is_zero_vec(v) {
        return Err(NcError::ZeroDirection);
    }
    Ok(graphical_derivative(d, y, ys, u)?.contains_point(v))
}

/// Componentwise derivative for `D = D_1 × … × D_k`.
pub fn product_graphical_derivative(parts: &[(PolyhedralSet, RatVec, RatVec, RatVec)]) -> Result<UnionCone, NcError> {
    let mut acc = UnionCone::single(PolyCone::full(0));
    for (d, y, ys, u) in parts {
        let part = graphical_derivative(d, y, ys, u)?;
        acc = acc.product(&part);
    }
    Ok(acc)
}

/// The complementarity angle C = (R₊×{0}) ∪ ({0}×R₊).
pub fn complementarity_angle() -> PolyhedralSet {
    sign_set(&[&[1, 0], &[0, 1]])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn graph_of_c_has_three_pieces() {
        let g = build_graph(&complementarity_angle());
        assert_eq!(g.cells.len(), 3);
        let expected = sign_set(&[&[1, 0, 0, 2], &[0, 1, 2, 0], &[0, 0, -1, -1]]);
        let got = g.graph();
        assert!(contains(&got, &expected) && contains(&expected, &got));
    }

    #[test]
    fn graph_of_halfline() {
        let d = PolyhedralSet::single(halfspace(1, &[1], 0));
        let got = build_graph(&d).graph();
        let expected = sign_set(&[&[-1, 0], &[0, 1]]);
        assert!(contains(&got, &expected) && contains(&expected, &got));
    }

    #[test]
    fn derivative_rows() {
        let c = complementarity_angle();
        let z = rvec(&[0, 0]);
        let d = graphical_derivative(&c, &z, &rvec(&[0, 1]), &rvec(&[3, 0])).unwrap();
        assert!(d.set_eq(&sign_union(&[&[0, 2]])));
        let d = graphical_derivative(&c, &z, &z, &z).unwrap();
        assert!(d.set_eq(&sign_union(&[&[0, 2], &[2, 0], &[-1, -1]])));
        let neg = PolyhedralSet::single(halfspace(1, &[1], 0));
        let d = graphical_derivative(&neg, &rvec(&[0]), &rvec(&[0]), &rvec(&[-1])).unwrap();
        assert!(d.set_eq(&sign_union(&[&[0]])));
        assert_eq!(
            graphical_derivative(&c, &z, &rvec(&[1, 1]), &z).unwrap_err(),
            NcError::PointNotOnGraph
        );
    }

    #[test]
    fn subderivative_rows() {
        let c = complementarity_angle();
        let z = rvec(&[0, 0]);
        assert!(graphical_subderivative_polyhedral(&c, &z, &rvec(&[0, 1]), &rvec(&[1, 0]), &rvec(&[0, 1])).unwrap());
        assert!(!graphical_subderivative_polyhedral(&c, &z, &rvec(&[0, 1]), &rvec(&[1, 0]), &rvec(&[1, 0])).unwrap());
    }

    #[test]
    fn convex_paths_agree_on_halfplane() {
        // D = {y₁ + y₂ ≤ 0}, smooth boundary point, outward normal
        let p = halfspace(2, &[1, 1], 0);
        let d = PolyhedralSet::single(p.clone());
        let y = rvec(&[1, -1]);
        let ys = rvec(&[1, 1]);
        let u = rvec(&[1, -1]);
        let a = graphical_derivative(&d, &y, &ys, &u).unwrap();
        let b = graphical_derivative_convex(&p, &y, &ys, &u).unwrap();
        assert!(a.set_eq(&b));
        assert!(graphical_subderivative_polyhedral(&d, &y, &ys, &u, &ys).unwrap());
    }

    #[test]
    fn product_rule_smoke() {
        let c = complementarity_angle();
        let z = rvec(&[0, 0]);
        let parts = vec![
            (c.clone(), z.clone(), rvec(&[0, 1]), rvec(&[1, 0])),
            (c.clone(), z.clone(), z.clone(), z.clone()),
        ];
        let d = product_graphical_derivative(&parts).unwrap();
        assert_eq!(d.dim, 4);
        assert_eq!(d.pieces.len(), 3);
        let parts = vec![
            (c.clone(), z.clone(), rvec(&[0, 1]), rvec(&[0, 1])),
            (c, z.clone(), z.clone(), z),
        ];
        assert!(product_graphical_derivative(&parts).unwrap().is_empty());
    }
}
