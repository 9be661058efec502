//! Convex polyhedra and polyhedral cones.

mod dd;

pub use dd::double_description;

use num::{Signed, Zero};
use thiserror::Error;

use crate::exactnum::*;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeoError {
    #[error("point is not in the set")]
    PointNotInSet,
    #[error("system is not homogeneous")]
    NotHomogeneous,
    #[error(transparent)]
    Exact(#[from] ExactError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvexPolyhedron {
    pub sys: LinearSystem,
    pub label: Option<String>,
}

/// Homogeneous system; the set is a closed convex cone.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyCone {
    pub sys: LinearSystem,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorForm {
    pub dim: usize,
    pub rays: Vec<RatVec>,
    pub lines: Vec<RatVec>,
}

impl ConvexPolyhedron {
    pub fn new(sys: LinearSystem) -> Self {
        ConvexPolyhedron { sys, label: None }
    }

    pub fn labeled(sys: LinearSystem, label: &str) -> Self {
        ConvexPolyhedron { sys, label: Some(label.to_string()) }
    }

    pub fn dim(&self) -> usize {
        self.sys.dim
    }

    pub fn contains_point(&self, x: &[Rat]) -> bool {
        self.sys.satisfied_by(x)
    }

    pub fn is_empty(&self) -> bool {
        !self.sys.is_feasible()
    }

    pub fn full(dim: usize) -> Self {
        ConvexPolyhedron::new(LinearSystem::new(dim))
    }

    pub fn from_cone(c: &PolyCone) -> Self {
        ConvexPolyhedron::new(c.sys.clone())
    }

    /// Self ⊆ other, decided row by row with LPs.
    pub fn subset_of(&self, other: &ConvexPolyhedron) -> bool {
        if self.is_empty() {
            return true;
        }
        for (r, b) in other.sys.a.iter().zip(&other.sys.b) {
            match lp_solve(r, &self.sys).expect("dimensions checked") {
                LpOutcome::Optimal { value, .. } if value <= *b => {}
                _ => return false,
            }
        }
        for (r, d) in other.sys.e.iter().zip(&other.sys.d) {
            for s in [1i64, -1] {
                let c = vec_scale(r, &ri(s));
                match lp_solve(&c, &self.sys).expect("dimensions checked") {
                    LpOutcome::Optimal { value, .. } if value <= d * ri(s) => {}
                    _ => return false,
                }
            }
        }
        true
    }

    pub fn intersect(&self, other: &ConvexPolyhedron) -> ConvexPolyhedron {
        ConvexPolyhedron::new(self.sys.intersect(&other.sys))
    }

    pub fn product(&self, other: &ConvexPolyhedron) -> ConvexPolyhedron {
        let n = self.dim() + other.dim();
        let s = self.sys.embed(n, 0).intersect(&other.sys.embed(n, self.dim()));
        ConvexPolyhedron::new(s)
    }

    pub fn active_rows(&self, x: &[Rat]) -> Vec<usize> {
        (0..self.sys.a.len()).filter(|&i| dot(&self.sys.a[i], x) == self.sys.b[i]).collect()
    }
}

impl PolyCone {
    pub fn new(sys: LinearSystem) -> Result<Self, GeoError> {
        sys.validate()?;
        if !sys.is_homogeneous() {
            return Err(GeoError::NotHomogeneous);
        }
        Ok(PolyCone { sys })
    }

    pub fn from_rows(dim: usize, a: RatMat, e: RatMat) -> Self {
        let sys = LinearSystem { dim, b: zeros(a.len()), d: zeros(e.len()), a, e };
        PolyCone { sys }
    }

    pub fn dim(&self) -> usize {
        self.sys.dim
    }

    pub fn full(dim: usize) -> Self {
        PolyCone { sys: LinearSystem::new(dim) }
    }

    pub fn zero(dim: usize) -> Self {
        PolyCone::from_rows(dim, vec![], (0..dim).map(|i| unit(dim, i)).collect())
    }

    pub fn contains_point(&self, x: &[Rat]) -> bool {
        self.sys.satisfied_by(x)
    }

    pub fn is_trivial(&self) -> bool {
        cone_is_trivial(&self.sys).expect("homogeneous by construction")
    }

    /// other ⊆ self.
    pub fn contains_cone(&self, other: &PolyCone) -> bool {
        ConvexPolyhedron::from_cone(other).subset_of(&ConvexPolyhedron::from_cone(self))
    }

    pub fn equals(&self, other: &PolyCone) -> bool {
        self.contains_cone(other) && other.contains_cone(self)
    }

    pub fn intersect(&self, other: &PolyCone) -> PolyCone {
        PolyCone { sys: self.sys.intersect(&other.sys) }
    }

    pub fn product(&self, other: &PolyCone) -> PolyCone {
        let n = self.dim() + other.dim();
        PolyCone { sys: self.sys.embed(n, 0).intersect(&other.sys.embed(n, self.dim())) }
    }

    /// Irredundant rows.
    pub fn simplified(&self) -> PolyCone {
        PolyCone { sys: fm::remove_redundant(&self.sys) }
    }
}

pub fn hrep_to_vrep(c: &PolyCone) -> GeneratorForm {
    double_description(c.dim(), &c.sys.a, &c.sys.e)
}

/// {x = Σ λ r + Σ μ l, λ ≥ 0} in H-form: the polar of the polar.
pub fn vrep_to_hrep(g: &GeneratorForm) -> PolyCone {
    let polar = double_description(g.dim, &g.rays, &g.lines);
    PolyCone::from_rows(g.dim, polar.rays, polar.lines)
}

pub fn polar(c: &PolyCone) -> PolyCone {
    vrep_to_hrep(&GeneratorForm { dim: c.dim(), rays: c.sys.a.clone(), lines: c.sys.e.clone() })
}

pub fn tangent_cone_convex(p: &ConvexPolyhedron, x: &[Rat]) -> Result<PolyCone, GeoError> {
    if x.len() != p.dim() {
        return Err(ExactError::DimensionMismatch("point length".into()).into());
    }
    if !p.contains_point(x) {
        return Err(GeoError::PointNotInSet);
    }
    let a = p.active_rows(x).into_iter().map(|i| p.sys.a[i].clone()).collect();
    Ok(PolyCone::from_rows(p.dim(), a, p.sys.e.clone()))
}

pub fn normal_cone_convex(p: &ConvexPolyhedron, x: &[Rat]) -> Result<PolyCone, GeoError> {
    if x.len() != p.dim() {
        return Err(ExactError::DimensionMismatch("point length".into()).into());
    }
    if !p.contains_point(x) {
        return Err(GeoError::PointNotInSet);
    }
    let rays = p.active_rows(x).into_iter().map(|i| p.sys.a[i].clone()).collect();
    Ok(vrep_to_hrep(&GeneratorForm { dim: p.dim(), rays, lines: p.sys.e.clone() }))
}

impl GeneratorForm {
    /// Membership by LP over generator weights.
    pub fn contains_point(&self, x: &[Rat]) -> bool {
        let k = self.rays.len() + self.lines.len();
        let mut s = LinearSystem::new(k);
        for i in 0..self.rays.len() {
            s.push_ineq(vec_scale(&unit(k, i), &ri(-1)), Rat::zero());
        }
        for j in 0..self.dim {
            let row: RatVec = self.rays.iter().chain(self.lines.iter()).map(|g| g[j].clone()).collect();
            s.push_eq(row, x[j].clone());
        }
        s.is_feasible()
    }

    pub fn is_trivial(&self) -> bool {
        self.rays.is_empty() && self.lines.is_empty()
    }

    pub fn all_generators_in(&self, c: &PolyCone) -> bool {
        self.rays.iter().all(|r| c.contains_point(r))
            && self.lines.iter().all(|l| c.contains_point(l) && c.contains_point(&vec_scale(l, &ri(-1))))
    }
}

/// Sign of a·x − b per row for a point (used for arrangement bookkeeping).
pub fn row_signs(sys: &LinearSystem, x: &[Rat]) -> Vec<i8> {
    sys.a.iter().zip(&sys.b).map(|(r, b)| sign(&(dot(r, x) - b))).collect()
}

pub fn is_nonpositive(v: &Rat) -> bool {
    !v.is_positive()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cone(dim: usize, a: &[&[i64]], e: &[&[i64]]) -> PolyCone {
        PolyCone::from_rows(dim, a.iter().map(|r| rvec(r)).collect(), e.iter().map(|r| rvec(r)).collect())
    }

    #[test]
    fn tangent_examples() {
        // R₊×{0}
        let p = ConvexPolyhedron::new(
            LinearSystem::from_parts(2, rmat(&[&[-1, 0]]), rvec(&[0]), rmat(&[&[0, 1]]), rvec(&[0])).unwrap(),
        );
        let t = tangent_cone_convex(&p, &rvec(&[1, 0])).unwrap();
        assert!(t.equals(&cone(2, &[], &[&[0, 1]])));
        let t0 = tangent_cone_convex(&p, &rvec(&[0, 0])).unwrap();
        assert!(t0.equals(&cone(2, &[&[-1, 0]], &[&[0, 1]])));
        let h = ConvexPolyhedron::new(LinearSystem::from_parts(2, rmat(&[&[1, 1]]), rvec(&[1]), vec![], vec![]).unwrap());
        let th = tangent_cone_convex(&h, &rvec(&[1, 0])).unwrap();
        assert!(th.equals(&cone(2, &[&[1, 1]], &[])));
        assert_eq!(tangent_cone_convex(&h, &rvec(&[1, 1])), Err(GeoError::PointNotInSet));
    }

    #[test]
    fn normal_examples() {
        let neg = ConvexPolyhedron::new(LinearSystem::from_parts(1, rmat(&[&[1]]), rvec(&[0]), vec![], vec![]).unwrap());
        let n = normal_cone_convex(&neg, &rvec(&[0])).unwrap();
        assert!(n.equals(&cone(1, &[&[-1]], &[])));
        let rplus_r = ConvexPolyhedron::new(LinearSystem::from_parts(2, rmat(&[&[-1, 0]]), rvec(&[0]), vec![], vec![]).unwrap());
        assert!(normal_cone_convex(&rplus_r, &rvec(&[1, 0])).unwrap().is_trivial());
        let r_rplus = ConvexPolyhedron::new(LinearSystem::from_parts(2, rmat(&[&[0, -1]]), rvec(&[0]), vec![], vec![]).unwrap());
        let n2 = normal_cone_convex(&r_rplus, &rvec(&[1, 0])).unwrap();
        assert!(n2.equals(&cone(2, &[&[0, 1]], &[&[1, 0]])));
    }

    #[test]
    fn polar_examples() {
        assert!(polar(&PolyCone::full(2)).is_trivial());
        // R₊×R₋ -> R₋×R₊
        let c = cone(2, &[&[-1, 0], &[0, 1]], &[]);
        assert!(polar(&c).equals(&cone(2, &[&[1, 0], &[0, -1]], &[])));
        assert!(polar(&PolyCone::zero(3)).equals(&PolyCone::full(3)));
    }

    #[test]
    fn vrep_examples() {
        let g = hrep_to_vrep(&cone(1, &[&[1]], &[]));
        assert_eq!(g.rays, vec![rvec(&[-1])]);
        assert!(g.lines.is_empty());
        let g = hrep_to_vrep(&cone(2, &[&[-1, 0], &[0, -1]], &[]));
        assert_eq!(g.rays, vec![rvec(&[0, 1]), rvec(&[1, 0])]);
    }
}
