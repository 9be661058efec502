//! Two-phase tableau simplex over the rationals, Bland's rule throughout.

use num::{One, Signed, Zero};

use super::rat::*;
use super::{ExactError, LinearSystem};

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal { value: Rat, point: RatVec },
    /// `point` is feasible, `ray` a recession direction with positive objective.
    Unbounded { point: RatVec, ray: RatVec },
    /// `farkas = (y, z)`, y ≥ 0: Aᵀy + Eᵀz = 0 and b·y + d·z < 0.
    Infeasible { farkas: RatVec },
}

impl LpOutcome {
    pub fn is_optimal(&self) -> bool {
        matches!(self, LpOutcome::Optimal { .. })
    }

    pub fn value(&self) -> Option<&Rat> {
        match self {
            LpOutcome::Optimal { value, .. } => Some(value),
            _ => None,
        }
    }

    /// Exact re-check of whatever certificate is carried.
    pub fn verify(&self, c: &[Rat], sys: &LinearSystem) -> bool {
        match self {
            LpOutcome::Optimal { value, point } => sys.satisfied_by(point) && dot(c, point) == *value,
            LpOutcome::Unbounded { point, ray } => {
                sys.satisfied_by(point)
                    && ray.len() == sys.dim
                    && sys.a.iter().all(|r| !dot(r, ray).is_positive())
                    && sys.e.iter().all(|r| dot(r, ray).is_zero())
                    && dot(c, ray).is_positive()
            }
            LpOutcome::Infeasible { farkas } => verify_farkas(sys, farkas),
        }
    }
}

pub fn verify_farkas(sys: &LinearSystem, farkas: &[Rat]) -> bool {
    let m = sys.a.len();
    let p = sys.e.len();
    if farkas.len() != m + p {
        return false;
    }
    let (y, z) = farkas.split_at(m);
    if y.iter().any(|v| v.is_negative()) {
        return false;
    }
    let mut comb = mat_t_vec(&sys.a, y, sys.dim);
    let ez = mat_t_vec(&sys.e, z, sys.dim);
    for (c, v) in comb.iter_mut().zip(ez) {
        *c += v;
    }
    is_zero_vec(&comb) && (dot(&sys.b, y) + dot(&sys.d, z)).is_negative()
}

struct Tableau {
    rows: Vec<RatVec>,
    basis: Vec<usize>,
    ncols: usize,
}

impl Tableau {
    fn rhs(&self, i: usize) -> &Rat {
        &self.rows[i][self.ncols]
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let piv = self.rows[r][c].clone();
        if !piv.is_one() {
            for v in self.rows[r].iter_mut() {
                if !v.is_zero() {
                    *v /= &piv;
                }
            }
        }
        let prow = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r || row[c].is_zero() {
                continue;
            }
            let f = row[c].clone();
            for (v, p) in row.iter_mut().zip(&prow) {
                if !p.is_zero() {
                    *v -= p * &f;
                }
            }
        }
        self.basis[r] = c;
    }

    fn objective(&self, cost: &[Rat]) -> Rat {
        let mut s = Rat::zero();
        for (i, &b) in self.basis.iter().enumerate() {
            if !cost[b].is_zero() {
                s += &cost[b] * self.rhs(i);
            }
        }
        s
    }

    /// Maximizes cost over the current basis. Err(col) when unbounded along col.
    fn optimize(&mut self, cost: &[Rat], allowed: &[bool]) -> Result<(), usize> {
        loop {
            let mut enter = None;
            for j in 0..self.ncols {
                if !allowed[j] || self.basis.contains(&j) {
                    continue;
                }
                let mut rc = -cost[j].clone();
                for (i, &b) in self.basis.iter().enumerate() {
                    if !cost[b].is_zero() && !self.rows[i][j].is_zero() {
                        rc += &cost[b] * &self.rows[i][j];
                    }
                }
                if rc.is_negative() {
                    enter = Some(j);
                    break;
                }
            }
            let Some(c) = enter else { return Ok(()) };
            let mut best: Option<(usize, Rat)> = None;
            for i in 0..self.rows.len() {
                let a = &self.rows[i][c];
                if !a.is_positive() {
                    continue;
                }
                let ratio = self.rhs(i) / a;
                best = match best {
                    None => Some((i, ratio)),
                    Some((bi, br)) => {
                        if ratio < br || (ratio == br && self.basis[i] < self.basis[bi]) {
                            Some((i, ratio))
                        } else {
                            Some((bi, br))
                        }
                    }
                };
            }
            match best {
                None => return Err(c),
                Some((r, _)) => self.pivot(r, c),
            }
        }
    }

    fn column_values(&self) -> RatVec {
        let mut v = zeros(self.ncols);
        for (i, &b) in self.basis.iter().enumerate() {
            v[b] = self.rhs(i).clone();
        }
        v
    }
}

struct Prepared {
    tab: Tableau,
    n: usize,
    art_start: usize,
}

/// Builds the standard form and runs phase I. None when infeasible.
fn phase_one(sys: &LinearSystem) -> Option<Prepared> {
    let n = sys.dim;
    let m = sys.a.len();
    let p = sys.e.len();
    let n_art = sys.b.iter().filter(|b| b.is_negative()).count() + p;
    let art_start = 2 * n + m;
    let ncols = art_start + n_art;
    let mut rows = Vec::with_capacity(m + p);
    let mut basis = Vec::with_capacity(m + p);
    let mut next_art = art_start;
    for (i, (r, b)) in sys.a.iter().zip(&sys.b).enumerate() {
        let mut row = zeros(ncols + 1);
        for j in 0..n {
            row[j] = r[j].clone();
            row[n + j] = -r[j].clone();
        }
        row[2 * n + i] = Rat::one();
        row[ncols] = b.clone();
        if b.is_negative() {
            for v in row.iter_mut() {
                *v = -v.clone();
            }
            row[next_art] = Rat::one();
            basis.push(next_art);
            next_art += 1;
        } else {
            basis.push(2 * n + i);
        }
        rows.push(row);
    }
    for (r, d) in sys.e.iter().zip(&sys.d) {
        let mut row = zeros(ncols + 1);
        let s = if d.is_negative() { -Rat::one() } else { Rat::one() };
        for j in 0..n {
            row[j] = &r[j] * &s;
            row[n + j] = -(&r[j] * &s);
        }
        row[ncols] = d * &s;
        row[next_art] = Rat::one();
        basis.push(next_art);
        next_art += 1;
        rows.push(row);
    }
    let mut tab = Tableau { rows, basis, ncols };
    if n_art > 0 {
        let mut cost = zeros(ncols);
        for c in cost.iter_mut().skip(art_start) {
            *c = -Rat::one();
        }
        let allowed = vec![true; ncols];
        tab.optimize(&cost, &allowed).expect("phase I is bounded");
        if tab.objective(&cost).is_negative() {
            return None;
        }
        // drive zero-level artificials out of the basis
        let mut i = 0;
        while i < tab.rows.len() {
            if tab.basis[i] >= art_start {
                match (0..art_start).find(|&j| !tab.rows[i][j].is_zero()) {
                    Some(j) => {
                        tab.pivot(i, j);
                        i += 1;
                    }
                    None => {
                        tab.rows.remove(i);
                        tab.basis.remove(i);
                    }
                }
            } else {
                i += 1;
            }
        }
    }
    Some(Prepared { tab, n, art_start })
}

fn extract_x(vals: &[Rat], n: usize) -> RatVec {
    (0..n).map(|j| &vals[j] - &vals[n + j]).collect()
}

/// Some feasible point, or None.
pub fn lp_feasible_point(sys: &LinearSystem) -> Option<RatVec> {
    let prep = phase_one(sys)?;
    Some(extract_x(&prep.tab.column_values(), prep.n))
}

fn farkas_certificate(sys: &LinearSystem) -> RatVec {
    let m = sys.a.len();
    let p = sys.e.len();
    let dim = m + p;
    let mut alt = LinearSystem::new(dim);
    for i in 0..m {
        alt.push_ineq(vec_scale(&unit(dim, i), &ri(-1)), Rat::zero());
    }
    for k in 0..sys.dim {
        let mut row = zeros(dim);
        for i in 0..m {
            row[i] = sys.a[i][k].clone();
        }
        for j in 0..p {
            row[m + j] = sys.e[j][k].clone();
        }
        alt.push_eq(row, Rat::zero());
    }
    let mut last: RatVec = sys.b.clone();
    last.extend(sys.d.iter().cloned());
    alt.push_eq(last, ri(-1));
    lp_feasible_point(&alt).expect("Farkas alternative must be feasible")
}

/// Maximizes c·x over sys.
pub fn lp_solve(c: &[Rat], sys: &LinearSystem) -> Result<LpOutcome, ExactError> {
    sys.validate()?;
    if c.len() != sys.dim {
        return Err(ExactError::DimensionMismatch(format!("objective has {} entries, dim {}", c.len(), sys.dim)));
    }
    let Some(mut prep) = phase_one(sys) else {
        return Ok(LpOutcome::Infeasible { farkas: farkas_certificate(sys) });
    };
    let n = prep.n;
    let ncols = prep.tab.ncols;
    let mut cost = zeros(ncols);
    for j in 0..n {
        cost[j] = c[j].clone();
        cost[n + j] = -c[j].clone();
    }
    let allowed: Vec<bool> = (0..ncols).map(|j| j < prep.art_start).collect();
    match prep.tab.optimize(&cost, &allowed) {
        Ok(()) => {
            let point = extract_x(&prep.tab.column_values(), n);
            let value = dot(c, &point);
            Ok(LpOutcome::Optimal { value, point })
        }
        Err(col) => {
            let point = extract_x(&prep.tab.column_values(), n);
            let mut dir = zeros(ncols);
            dir[col] = Rat::one();
            for (i, &b) in prep.tab.basis.iter().enumerate() {
                dir[b] = -prep.tab.rows[i][col].clone();
            }
            Ok(LpOutcome::Unbounded { point, ray: extract_x(&dir, n) })
        }
    }
}

/// A point with `closed` satisfied and every strict row `r·x < c` strict, if one exists.
pub fn strict_feasible_point(closed: &LinearSystem, strict: &[(RatVec, Rat)]) -> Option<RatVec> {
    if strict.is_empty() {
        return lp_feasible_point(closed);
    }
    let n = closed.dim;
    let mut s = closed.embed(n + 1, 0);
    for (r, c) in strict {
        let mut row = r.clone();
        row.push(Rat::one());
        s.push_ineq(row, c.clone());
    }
    s.push_ineq(unit(n + 1, n), Rat::one());
    match lp_solve(&unit(n + 1, n), &s).expect("consistent dimensions") {
        LpOutcome::Optimal { value, mut point } if value.is_positive() => {
            point.truncate(n);
            Some(point)
        }
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sys1(a: &[&[i64]], b: &[i64]) -> LinearSystem {
        LinearSystem::from_parts(a[0].len(), rmat(a), rvec(b), vec![], vec![]).unwrap()
    }

    #[test]
    fn bounded_max() {
        let s = sys1(&[&[1]], &[1]);
        let out = lp_solve(&rvec(&[1]), &s).unwrap();
        assert_eq!(out, LpOutcome::Optimal { value: ri(1), point: rvec(&[1]) });
    }

    #[test]
    fn unbounded_ray() {
        let s = sys1(&[&[-1]], &[0]);
        let out = lp_solve(&rvec(&[1]), &s).unwrap();
        match &out {
            LpOutcome::Unbounded { ray, .. } => assert_eq!(ray, &rvec(&[1])),
            o => panic!("{o:?}"),
        }
        assert!(out.verify(&rvec(&[1]), &s));
    }

    #[test]
    fn contradictory_bounds() {
        let s = sys1(&[&[1], &[-1]], &[0, -1]);
        let out = lp_solve(&rvec(&[0]), &s).unwrap();
        assert!(matches!(out, LpOutcome::Infeasible { .. }));
        assert!(out.verify(&rvec(&[0]), &s));
    }

    #[test]
    fn equality_with_free_vars() {
        // max x + y, x + y = 3/2, x ≤ 1, y ≤ 1
        let mut s = sys1(&[&[1, 0], &[0, 1]], &[1, 1]);
        s.push_eq(rvec(&[1, 1]), rat(3, 2));
        let c = rvec(&[1, 1]);
        let out = lp_solve(&c, &s).unwrap();
        assert_eq!(out.value(), Some(&rat(3, 2)));
        assert!(out.verify(&c, &s));
    }

    #[test]
    fn mismatched_objective() {
        let s = sys1(&[&[1, 0]], &[1]);
        assert!(matches!(lp_solve(&rvec(&[1]), &s), Err(ExactError::DimensionMismatch(_))));
    }

    #[test]
    fn zero_dimensional() {
        let mut s = LinearSystem::new(0);
        s.push_ineq(vec![], ri(-1));
        assert!(matches!(lp_solve(&[], &s).unwrap(), LpOutcome::Infeasible { .. }));
        let s = LinearSystem::new(0);
        assert!(lp_solve(&[], &s).unwrap().is_optimal());
    }
}
