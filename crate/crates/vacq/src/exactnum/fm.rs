//! Fourier–Motzkin projection and cone triviality tests.

use num::{One, Signed, Zero};
use std::collections::BTreeSet;

use super::lp::{lp_feasible_point, lp_solve, LpOutcome};
use super::rat::*;
use super::{ExactError, LinearSystem};

fn norm_row(row: &[Rat], rhs: &Rat) -> (RatVec, Rat) {
    let mut v = row.to_vec();
    v.push(rhs.clone());
    let mut p = primitive(&v);
    let r = p.pop().unwrap();
    (p, r)
}

fn norm_eq(row: &[Rat], rhs: &Rat) -> (RatVec, Rat) {
    let mut v = row.to_vec();
    v.push(rhs.clone());
    let mut p = primitive_signed(&v);
    let r = p.pop().unwrap();
    (p, r)
}

/// Normalizes, dedupes, strips zero rows. None if a zero row is violated.
fn tidy(sys: &LinearSystem) -> Option<LinearSystem> {
    let mut out = LinearSystem::new(sys.dim);
    let mut seen = BTreeSet::new();
    for (r, b) in sys.a.iter().zip(&sys.b) {
        if is_zero_vec(r) {
            if b.is_negative() {
                return None;
            }
            continue;
        }
        let (r, b) = norm_row(r, b);
        if seen.insert((r.clone(), b.clone())) {
            out.push_ineq(r, b);
        }
    }
    let mut seen = BTreeSet::new();
    for (r, d) in sys.e.iter().zip(&sys.d) {
        if is_zero_vec(r) {
            if !d.is_zero() {
                return None;
            }
            continue;
        }
        let (r, d) = norm_eq(r, d);
        if seen.insert((r.clone(), d.clone())) {
            out.push_eq(r, d);
        }
    }
    Some(out)
}

/// Drops redundant inequalities (one LP each) and dependent equalities.
/// Assumes `sys` feasible.
pub fn remove_redundant(sys: &LinearSystem) -> LinearSystem {
    let mut s = sys.clone();
    if !s.e.is_empty() {
        let aug: RatMat = s.e.iter().zip(&s.d).map(|(r, d)| {
            let mut v = r.clone();
            v.push(d.clone());
            v
        }).collect();
        let basis = row_basis(&aug, s.dim + 1);
        s.e.clear();
        s.d.clear();
        for mut v in basis {
            let d = v.pop().unwrap();
            let (r, d) = norm_eq(&v, &d);
            s.push_eq(r, d);
        }
    }
    let mut i = 0;
    while i < s.a.len() {
        let row = s.a.remove(i);
        let rhs = s.b.remove(i);
        let redundant = match lp_solve(&row, &s) {
            Ok(LpOutcome::Optimal { value, .. }) => value <= rhs,
            _ => false,
        };
        if !redundant {
            s.a.insert(i, row);
            s.b.insert(i, rhs);
            i += 1;
        }
    }
    s
}

fn substitute(sys: &mut LinearSystem, piv_row: &[Rat], piv_rhs: &Rat, v: usize) {
    let pv = piv_row[v].clone();
    let apply = |r: &mut RatVec, b: &mut Rat| {
        if r[v].is_zero() {
            return;
        }
        let f = &r[v] / &pv;
        for (x, p) in r.iter_mut().zip(piv_row) {
            if !p.is_zero() {
                *x -= p * &f;
            }
        }
        *b -= piv_rhs * &f;
    };
    for (r, b) in sys.a.iter_mut().zip(sys.b.iter_mut()) {
        apply(r, b);
    }
    for (r, d) in sys.e.iter_mut().zip(sys.d.iter_mut()) {
        apply(r, d);
    }
}

fn fm_step(sys: &LinearSystem, v: usize) -> LinearSystem {
    let mut out = LinearSystem::new(sys.dim);
    out.e = sys.e.clone();
    out.d = sys.d.clone();
    let mut pos = vec![];
    let mut neg = vec![];
    for (i, r) in sys.a.iter().enumerate() {
        if r[v].is_positive() {
            pos.push(i);
        } else if r[v].is_negative() {
            neg.push(i);
        } else {
            out.push_ineq(r.clone(), sys.b[i].clone());
        }
    }
    for &p in &pos {
        for &n in &neg {
            let cp = sys.a[p][v].clone();
            let cn = -sys.a[n][v].clone();
            let row: RatVec = sys.a[p].iter().zip(&sys.a[n]).map(|(x, y)| x * &cn + y * &cp).collect();
            let rhs = &sys.b[p] * &cn + &sys.b[n] * &cp;
            out.push_ineq(row, rhs);
        }
    }
    out
}

/// Projects out the coordinates in `vars`; the result lives in the remaining coordinates (in order).
pub fn fm_eliminate(sys: &LinearSystem, vars: &[usize]) -> Result<LinearSystem, ExactError> {
    sys.validate()?;
    if vars.is_empty() {
        return Ok(sys.clone());
    }
    for &v in vars {
        if v >= sys.dim {
            return Err(ExactError::IndexOutOfRange(v));
        }
    }
    let elim: BTreeSet<usize> = vars.iter().copied().collect();
    let keep: Vec<usize> = (0..sys.dim).filter(|j| !elim.contains(j)).collect();
    if lp_feasible_point(sys).is_none() {
        return Ok(LinearSystem::infeasible(keep.len()));
    }
    let mut s = match tidy(sys) {
        Some(s) => remove_redundant(&s),
        None => return Ok(LinearSystem::infeasible(keep.len())),
    };
    let mut todo: Vec<usize> = elim.iter().copied().collect();
    // equality pivots first
    loop {
        let found = todo.iter().enumerate().find_map(|(ti, &v)| {
            s.e.iter().position(|r| !r[v].is_zero()).map(|ei| (ti, v, ei))
        });
        let Some((ti, v, ei)) = found else { break };
        let row = s.e.remove(ei);
        let rhs = s.d.remove(ei);
        substitute(&mut s, &row, &rhs, v);
        todo.remove(ti);
        s = tidy(&s).expect("substitution preserves feasibility");
    }
    while !todo.is_empty() {
        let (ti, v) = todo
            .iter()
            .enumerate()
            .min_by_key(|(_, &v)| {
                let p = s.a.iter().filter(|r| r[v].is_positive()).count();
                let n = s.a.iter().filter(|r| r[v].is_negative()).count();
                (p * n, v)
            })
            .map(|(i, &v)| (i, v))
            .unwrap();
        todo.remove(ti);
        let stepped = fm_step(&s, v);
        s = remove_redundant(&tidy(&stepped).expect("projection of a feasible system is feasible"));
    }
    Ok(s.select_columns(&keep))
}

fn check_homogeneous(sys: &LinearSystem) -> Result<(), ExactError> {
    sys.validate()?;
    if !sys.is_homogeneous() {
        return Err(ExactError::NotHomogeneous);
    }
    Ok(())
}

/// A point of the cone with some kept coordinate nonzero, or None when the
/// projection of the cone onto `keep` is {0}.
pub fn projection_trivial_witness(sys: &LinearSystem, keep: &[usize]) -> Result<Option<RatVec>, ExactError> {
    check_homogeneous(sys)?;
    let boxed = sys.intersect(&LinearSystem::box_constraints(sys.dim, keep, &Rat::one()));
    for &i in keep {
        if i >= sys.dim {
            return Err(ExactError::IndexOutOfRange(i));
        }
        for sgn in [1i64, -1] {
            let c = vec_scale(&unit(sys.dim, i), &ri(sgn));
            if let LpOutcome::Optimal { value, point } = lp_solve(&c, &boxed)? {
                if value.is_positive() {
                    return Ok(Some(point));
                }
            }
        }
    }
    Ok(None)
}

/// Nonzero member of the cone, if any.
pub fn cone_witness(sys: &LinearSystem) -> Result<Option<RatVec>, ExactError> {
    let all: Vec<usize> = (0..sys.dim).collect();
    projection_trivial_witness(sys, &all)
}

pub fn cone_is_trivial(sys: &LinearSystem) -> Result<bool, ExactError> {
    Ok(cone_witness(sys)?.is_none())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn textbook_step() {
        // x − y ≤ 0, y ≤ 1 ; eliminate y
        let s = LinearSystem::from_parts(2, rmat(&[&[1, -1], &[0, 1]]), rvec(&[0, 1]), vec![], vec![]).unwrap();
        let p = fm_eliminate(&s, &[1]).unwrap();
        assert_eq!(p.a, rmat(&[&[1]]));
        assert_eq!(p.b, rvec(&[1]));
        assert!(p.e.is_empty());
    }

    #[test]
    fn equality_pivot() {
        // y = x, y ≤ 0
        let s = LinearSystem::from_parts(2, rmat(&[&[0, 1]]), rvec(&[0]), rmat(&[&[-1, 1]]), rvec(&[0])).unwrap();
        let p = fm_eliminate(&s, &[1]).unwrap();
        assert_eq!(p.a, rmat(&[&[1]]));
        assert_eq!(p.b, rvec(&[0]));
    }

    #[test]
    fn empty_index_set_is_identity() {
        let s = LinearSystem::from_parts(2, rmat(&[&[2, -2]]), rvec(&[4]), vec![], vec![]).unwrap();
        assert_eq!(fm_eliminate(&s, &[]).unwrap(), s);
    }

    #[test]
    fn infeasible_projection() {
        let s = LinearSystem::from_parts(2, rmat(&[&[1, 1], &[-1, -1]]), rvec(&[0, -1]), vec![], vec![]).unwrap();
        let p = fm_eliminate(&s, &[1]).unwrap();
        assert!(!p.is_feasible());
    }

    #[test]
    fn trivial_cones() {
        let s = LinearSystem::from_parts(1, rmat(&[&[1], &[-1]]), rvec(&[0, 0]), vec![], vec![]).unwrap();
        assert!(cone_is_trivial(&s).unwrap());
        let h = LinearSystem::from_parts(2, rmat(&[&[0, 1]]), rvec(&[0]), vec![], vec![]).unwrap();
        let w = cone_witness(&h).unwrap().unwrap();
        assert!(w == rvec(&[1, 0]) || w == rvec(&[0, -1]));
        let bad = LinearSystem::from_parts(1, rmat(&[&[1]]), rvec(&[1]), vec![], vec![]).unwrap();
        assert_eq!(cone_is_trivial(&bad), Err(ExactError::NotHomogeneous));
    }
}
