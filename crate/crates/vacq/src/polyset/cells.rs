//! Sign-vector cells of the hyperplane arrangement spanned by the rows of a union of polyhedra.

use std::collections::BTreeMap;

use crate::exactnum::*;
use crate::polygeo::{normal_cone_convex, ConvexPolyhedron, PolyCone};

/// One nonempty cell: its sign vector and a relative-interior point.
#[derive(Debug, Clone)]
pub struct Cell {
    pub signs: Vec<i8>,
    pub point: RatVec,
}

/// Hyperplanes deduplicated up to scaling, plus for each
/// piece its rows as (hyperplane index, orientation, is_equality).
pub struct Arrangement {
    pub dim: usize,
    pub planes: Vec<RatVec>,
    pub rows: Vec<Vec<(usize, i8, bool)>>,
}

impl Arrangement {
    pub fn new(dim: usize, pieces: &[PolyCone]) -> Self {
        let systems: Vec<&LinearSystem> = pieces.iter().map(|p| &p.sys).collect();
        Self::affine(dim, &systems)
    }

    /// Affine hyperplanes `h·y = c` from all rows; planes are stored as `(h, c)` concatenated.
    pub fn affine(dim: usize, systems: &[&LinearSystem]) -> Self {
        let mut planes: Vec<RatVec> = vec![];
        let mut index: BTreeMap<RatVec, usize> = BTreeMap::new();
        let mut rows = vec![];
        for sys in systems {
            let mut pr = vec![];
            let all = sys
                .a
                .iter()
                .zip(&sys.b)
                .map(|(r, b)| (r, b, false))
                .chain(sys.e.iter().zip(&sys.d).map(|(r, d)| (r, d, true)));
            for (r, c, is_eq) in all {
                if is_zero_vec(r) {
                    continue;
                }
                let mut aug = r.clone();
                aug.push(c.clone());
                let h = primitive_signed(&aug);
                let orient = if primitive(&aug) == h { 1 } else { -1 };
                let k = *index.entry(h.clone()).or_insert_with(|| {
                    planes.push(h);
                    planes.len() - 1
                });
                pr.push((k, orient, is_eq));
            }
            rows.push(pr);
        }
        Arrangement { dim, planes, rows }
    }

    fn normal(&self, k: usize) -> (&[Rat], &Rat) {
        let h = &self.planes[k];
        (&h[..self.dim], &h[self.dim])
    }

    /// Closed system of the cell with the given signs.
    pub fn closure(&self, signs: &[i8]) -> LinearSystem {
        let mut s = LinearSystem::new(self.dim);
        for (k, &sg) in signs.iter().enumerate() {
            let (h, c) = self.normal(k);
            match sg {
                0 => s.push_eq(h.to_vec(), c.clone()),
                1 => s.push_ineq(vec_scale(h, &ri(-1)), -c.clone()),
                _ => s.push_ineq(h.to_vec(), c.clone()),
            }
        }
        s
    }

    /// A piece with no violated row among the planes already signed.
    fn piece_compatible(&self, piece: usize, signs: &[i8]) -> bool {
        self.rows[piece].iter().all(|&(k, o, is_eq)| {
            if k >= signs.len() {
                return true;
            }
            let s = signs[k] * o;
            if is_eq {
                s == 0
            } else {
                s <= 0
            }
        })
    }

    fn cell_point(&self, signs: &[i8]) -> Option<RatVec> {
        let mut closed = LinearSystem::new(self.dim);
        let mut strict = vec![];
        for (k, &s) in signs.iter().enumerate() {
            let (h, c) = self.normal(k);
            match s {
                0 => closed.push_eq(h.to_vec(), c.clone()),
                1 => strict.push((vec_scale(h, &ri(-1)), -c.clone())),
                _ => strict.push((h.to_vec(), c.clone())),
            }
        }
        strict_feasible_point(&closed, &strict)
    }

    /// All nonempty cells lying inside the union of the pieces.
    pub fn cells_in_union(&self) -> Vec<Cell> {
        let mut out = vec![];
        let mut signs = vec![];
        self.dfs(&mut signs, &mut out);
        out
    }

    fn dfs(&self, signs: &mut Vec<i8>, out: &mut Vec<Cell>) {
        if !(0..self.rows.len()).any(|p| self.piece_compatible(p, signs)) {
            return;
        }
        let Some(point) = self.cell_point(signs) else { return };
        if signs.len() == self.planes.len() {
            out.push(Cell { signs: signs.clone(), point });
            return;
        }
        for s in [-1i8, 0, 1] {
            signs.push(s);
            self.dfs(signs, out);
            signs.pop();
        }
    }
}

/// Regular normal cone of a union of cones at a point: intersection of the
/// normal cones of the pieces containing it.
pub fn regular_normal_of_union(pieces: &[PolyCone], y: &[Rat]) -> Option<PolyCone> {
    let mut acc: Option<PolyCone> = None;
    for p in pieces {
        if !p.contains_point(y) {
            continue;
        }
        let n = normal_cone_convex(&ConvexPolyhedron::from_cone(p), y).expect("point checked");
        acc = Some(match acc {
            None => n,
            Some(a) => a.intersect(&n),
        });
    }
    acc
}
