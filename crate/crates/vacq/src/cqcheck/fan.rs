//! Finite direction representatives: one relative-interior point per cell of the fan
//! `{u : ∇g(x̄)u ∈ T_D(g(x̄))}` cut by the pulled-back hyperplanes of T_D.

use crate::constraint2::ConstraintSystem;
use crate::exactnum::*;
use crate::polygeo::PolyCone;
use crate::polyset::Arrangement;

use super::CqError;

pub const DEFAULT_DIM_BOUND: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct DirectionCover {
    pub reps: Vec<RatVec>,
    /// Some cell is a linear subspace; its single representative stands for the
    /// whole subspace (both signs included).
    pub subspace_cell: bool,
}

pub fn direction_enumeration(sys: &ConstraintSystem, bound: usize) -> Result<DirectionCover, CqError> {
    let n = sys.n();
    if n > bound {
        return Err(CqError::DimensionTooLarge(n, bound));
    }
    if n == 1 {
        return Ok(DirectionCover { reps: vec![rvec(&[1]), rvec(&[-1])], subspace_cell: false });
    }
    let jac = &sys.map.jac;
    let pulled: Vec<PolyCone> = sys
        .tangent_d()
        .pieces
        .iter()
        .map(|p| {
            let a = p.sys.a.iter().map(|r| mat_t_vec(jac, r, n)).collect();
            let e = p.sys.e.iter().map(|r| mat_t_vec(jac, r, n)).collect();
            PolyCone::from_rows(n, a, e)
        })
        .collect();
    let arr = Arrangement::new(n, &pulled);
    let mut reps = vec![];
    let mut subspace_cell = false;
    for cell in arr.cells_in_union() {
        if !is_zero_vec(&cell.point) {
            reps.push(primitive(&cell.point));
        } else if cell.signs.iter().all(|&s| s == 0) {
            let all: Vec<usize> = (0..n).collect();
            if let Ok(Some(p)) = projection_trivial_witness(&arr.closure(&cell.signs), &all) {
                reps.push(primitive(&p));
                subspace_cell = true;
            }
        }
    }
    Ok(DirectionCover { reps, subspace_cell })
}
