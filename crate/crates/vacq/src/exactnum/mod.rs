//! Exact rational kernel: linear systems, simplex LP, Fourier–Motzkin.

pub mod fm;
pub mod lp;
pub mod rat;

pub use fm::{cone_is_trivial, cone_witness, fm_eliminate, projection_trivial_witness};
pub use lp::{lp_feasible_point, lp_solve, strict_feasible_point, verify_farkas, LpOutcome};
pub use rat::*;

use num::Zero;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExactError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("system is not homogeneous")]
    NotHomogeneous,
    #[error("index {0} out of range")]
    IndexOutOfRange(usize),
    #[error("cannot parse rational {0:?}")]
    Parse(String),
}

/// `{x : A x ≤ b, E x = d}` in R^dim.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearSystem {
    pub dim: usize,
    pub a: RatMat,
    pub b: RatVec,
    pub e: RatMat,
    pub d: RatVec,
}

impl LinearSystem {
    pub fn new(dim: usize) -> Self {
        LinearSystem { dim, a: vec![], b: vec![], e: vec![], d: vec![] }
    }

    pub fn from_parts(dim: usize, a: RatMat, b: RatVec, e: RatMat, d: RatVec) -> Result<Self, ExactError> {
        let s = LinearSystem { dim, a, b, e, d };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<(), ExactError> {
        if self.a.len() != self.b.len() {
            return Err(ExactError::DimensionMismatch(format!("A has {} rows, b has {}", self.a.len(), self.b.len())));
        }
        if self.e.len() != self.d.len() {
            return Err(ExactError::DimensionMismatch(format!("E has {} rows, d has {}", self.e.len(), self.d.len())));
        }
        for r in self.a.iter().chain(self.e.iter()) {
            if r.len() != self.dim {
                return Err(ExactError::DimensionMismatch(format!("row of length {} in dim {}", r.len(), self.dim)));
            }
        }
        Ok(())
    }

    pub fn is_homogeneous(&self) -> bool {
        self.b.iter().chain(self.d.iter()).all(|x| x.is_zero())
    }

    /// Same rows with zero right-hand sides.
    pub fn cone(&self) -> LinearSystem {
        LinearSystem {
            dim: self.dim,
            a: self.a.clone(),
            b: zeros(self.a.len()),
            e: self.e.clone(),
            d: zeros(self.e.len()),
        }
    }

    pub fn push_ineq(&mut self, row: RatVec, rhs: Rat) {
        debug_assert_eq!(row.len(), self.dim);
        self.a.push(row);
        self.b.push(rhs);
    }

    pub fn push_eq(&mut self, row: RatVec, rhs: Rat) {
        debug_assert_eq!(row.len(), self.dim);
        self.e.push(row);
        self.d.push(rhs);
    }

    pub fn satisfied_by(&self, x: &[Rat]) -> bool {
        x.len() == self.dim
            && self.a.iter().zip(&self.b).all(|(r, b)| dot(r, x) <= *b)
            && self.e.iter().zip(&self.d).all(|(r, d)| dot(r, x) == *d)
    }

    pub fn intersect(&self, other: &LinearSystem) -> LinearSystem {
        assert_eq!(self.dim, other.dim, "intersect: dimension mismatch");
        let mut s = self.clone();
        s.a.extend(other.a.iter().cloned());
        s.b.extend(other.b.iter().cloned());
        s.e.extend(other.e.iter().cloned());
        s.d.extend(other.d.iter().cloned());
        s
    }

    /// Re-express in R^new_dim, placing old coordinate j at offset + j.
    pub fn embed(&self, new_dim: usize, offset: usize) -> LinearSystem {
        let lift = |r: &RatVec| {
            let mut v = zeros(new_dim);
            for (j, x) in r.iter().enumerate() {
                v[offset + j] = x.clone();
            }
            v
        };
        LinearSystem {
            dim: new_dim,
            a: self.a.iter().map(lift).collect(),
            b: self.b.clone(),
            e: self.e.iter().map(lift).collect(),
            d: self.d.clone(),
        }
    }

    /// Keeps only columns `cols`; callers ensure the other columns are zero.
    pub fn select_columns(&self, cols: &[usize]) -> LinearSystem {
        let pick = |r: &RatVec| cols.iter().map(|&c| r[c].clone()).collect::<RatVec>();
        LinearSystem {
            dim: cols.len(),
            a: self.a.iter().map(pick).collect(),
            b: self.b.clone(),
            e: self.e.iter().map(pick).collect(),
            d: self.d.clone(),
        }
    }

    pub fn is_feasible(&self) -> bool {
        lp_feasible_point(self).is_some()
    }

    /// Trivially infeasible marker {0 ≤ −1}.
    pub fn infeasible(dim: usize) -> LinearSystem {
        let mut s = LinearSystem::new(dim);
        s.push_ineq(zeros(dim), ri(-1));
        s
    }

    pub fn box_constraints(dim: usize, idx: &[usize], bound: &Rat) -> LinearSystem {
        let mut s = LinearSystem::new(dim);
        for &i in idx {
            s.push_ineq(unit(dim, i), bound.clone());
            s.push_ineq(vec_scale(&unit(dim, i), &ri(-1)), bound.clone());
        }
        s
    }
}
