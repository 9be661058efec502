use num::Zero;

use super::*;
use crate::constraint2::{Poly, PolyModel};
use crate::constraint2::poly::eval;
use crate::polygeo::ConvexPolyhedron;
use crate::polyset::PolyhedralSet;

pub const EVIDENCE_TAG: &str = "numeric evidence, not proof";

/// min φ(x) s.t. g(x) ∈ D, around x̄ = `g.xbar`, with ȳ = 0.
#[derive(Debug, Clone)]
pub struct PenaltyProblem {
    pub phi: Poly,
    pub g: PolyModel,
    pub d: PolyhedralSet,
}

/// Box `[lo, hi]`, `resolution` intervals per axis, `depth` zoom levels around the incumbent.
#[derive(Debug, Clone)]
pub struct GridSpec {
    pub lo: RatVec,
    pub hi: RatVec,
    pub resolution: usize,
    pub depth: usize,
    pub max_evals: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PenaltyStep {
    pub k: u64,
    pub x: RatVec,
    pub y: RatVec,
    /// k(y_k − ȳ)
    pub lambda: RatVec,
    pub lambda_norm: f64,
    /// λ_k‖y_k − ȳ‖/‖x_k − x̄‖, empty when x_k = x̄.
    pub y_star: Vec<f64>,
    pub direction: Vec<f64>,
    pub objective: Rat,
    /// Incumbent value after each grid level; nonincreasing.
    pub trace: Vec<Rat>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum RunClass {
    BoundedMultipliers,
    DivergingMultipliers { u: Vec<f64> },
    Inconclusive(String),
}

#[derive(Debug, Clone)]
pub struct PenalizedRun {
    pub steps: Vec<PenaltyStep>,
    pub class: RunClass,
    pub tag: &'static str,
    /// Final grid spacing per axis.
    pub resolution: RatVec,
    pub evals: usize,
}

impl PenalizedRun {
    /// Columns k, x_k…, y_k…, ‖λ_k‖, y*_k….
    pub fn to_csv(&self) -> String {
        let Some(first) = self.steps.first() else { return "k\n".into() };
        let (n, m) = (first.x.len(), first.y.len());
        let mut head = vec!["k".to_string()];
        head.extend((1..=n).map(|i| format!("x{i}")));
        head.extend((1..=m).map(|i| format!("y{i}")));
        head.push("lambda_norm".into());
        head.extend((1..=m).map(|i| format!("ystar{i}")));
        let mut out = head.join(",") + "\n";
        for s in &self.steps {
            let mut row = vec![s.k.to_string()];
            row.extend(s.x.iter().map(fmt_rat));
            row.extend(s.y.iter().map(fmt_rat));
            row.push(format!("{:e}", s.lambda_norm));
            if s.y_star.is_empty() {
                row.extend((0..m).map(|_| String::new()));
            } else {
                row.extend(s.y_star.iter().map(|v| format!("{v:e}")));
            }
            out += &(row.join(",") + "\n");
        }
        out
    }
}

/// Gauss–Jordan on a consistent system; free variables are set to zero.
fn solve_consistent(mut a: RatMat, mut b: RatVec, cols: usize) -> Option<RatVec> {
    let mut piv_cols = vec![];
    let mut r = 0;
    for c in 0..cols {
        let Some(p) = (r..a.len()).find(|&i| !a[i][c].is_zero()) else { continue };
        a.swap(r, p);
        b.swap(r, p);
        let pv = a[r][c].clone();
        for j in 0..cols {
            a[r][j] = &a[r][j] / &pv;
        }
        b[r] = &b[r] / &pv;
        for i in 0..a.len() {
            if i != r && !a[i][c].is_zero() {
                let f = a[i][c].clone();
                for j in 0..cols {
                    let t = &a[r][j] * &f;
                    a[i][j] -= t;
                }
                let t = &b[r] * &f;
                b[i] -= t;
            }
        }
        piv_cols.push(c);
        r += 1;
    }
    if b[r..].iter().any(|v| !v.is_zero()) {
        return None;
    }
    let mut x = zeros(cols);
    for (i, c) in piv_cols.into_iter().enumerate() {
        x[c] = b[i].clone();
    }
    Some(x)
}

/// Projection of w onto a convex polyhedron: the closest feasible point among projections
/// onto the affine hulls of the equality rows plus subsets of the inequality rows.
fn project_convex(p: &ConvexPolyhedron, w: &[Rat]) -> Option<(Rat, RatVec)> {
    if p.contains_point(w) {
        return Some((Rat::zero(), w.to_vec()));
    }
    let s = &p.sys;
    let k = s.a.len();
    let mut best: Option<(Rat, RatVec)> = None;
    for mask in 0u64..(1u64 << k) {
        if mask.count_ones() as usize > s.dim {
            continue;
        }
        let mut rows = s.e.clone();
        let mut rhs = s.d.clone();
        for i in 0..k {
            if mask >> i & 1 == 1 {
                rows.push(s.a[i].clone());
                rhs.push(s.b[i].clone());
            }
        }
        let gram: RatMat = rows.iter().map(|r| rows.iter().map(|q| dot(r, q)).collect()).collect();
        let res: RatVec = rows.iter().zip(&rhs).map(|(r, c)| dot(r, w) - c).collect();
        let Some(mu) = solve_consistent(gram, res, rows.len()) else { continue };
        let q = vec_sub(w, &mat_t_vec(&rows, &mu, s.dim));
        if !p.contains_point(&q) {
            continue;
        }
        let diff = vec_sub(w, &q);
        let d2 = dot(&diff, &diff);
        if best.as_ref().is_none_or(|b| d2 < b.0) {
            best = Some((d2, q));
        }
    }
    best
}

fn project(d: &PolyhedralSet, w: &[Rat]) -> Option<(Rat, RatVec)> {
    let mut best: Option<(Rat, RatVec)> = None;
    for p in &d.pieces {
        if let Some(c) = project_convex(p, w) {
            if best.as_ref().is_none_or(|b| c.0 < b.0) {
                best = Some(c);
            }
        }
    }
    best
}

struct Eval<'a> {
    prob: &'a PenaltyProblem,
    k: Rat,
    evals: usize,
    max: usize,
}

impl Eval<'_> {
    /// φ(x) + k/2·dist²(g(x), D) + ½‖x − x̄‖², with the minimizing y.
    fn at(&mut self, x: &[Rat]) -> Result<(Rat, RatVec), SeqError> {
        self.evals += 1;
        if self.evals > self.max {
            return Err(SeqError::BudgetExceeded(self.max));
        }
        let gx = self.prob.g.value_at(x);
        let (d2, proj) = project(&self.prob.d, &gx).ok_or_else(|| SeqError::Invalid("D is empty".into()))?;
        let dx = vec_sub(x, &self.prob.g.xbar);
        let half = rat(1, 2);
        let v = eval(&self.prob.phi, x) + &self.k * &half * d2 + half * dot(&dx, &dx);
        Ok((v, vec_sub(&gx, &proj)))
    }
}

fn grid_points(lo: &[Rat], hi: &[Rat], res: usize) -> Vec<RatVec> {
    let mut pts = vec![vec![]];
    for (l, h) in lo.iter().zip(hi) {
        let step = (h - l) / Rat::from_integer((res as i64).into());
        let mut next = vec![];
        for p in &pts {
            for i in 0..=res {
                let mut q: RatVec = p.clone();
                q.push(l + &step * Rat::from_integer((i as i64).into()));
                next.push(q);
            }
        }
        pts = next;
    }
    pts
}

/// Grid search with zoom-in refinement of the penalized problem for each k in the schedule.
pub fn penalization_explore(prob: &PenaltyProblem, ks: &[u64], grid: &GridSpec) -> Result<PenalizedRun, SeqError> {
    let n = prob.g.n;
    if n > 2 {
        return Err(SeqError::DimensionMismatch(format!("explorer supports n ≤ 2, got {n}")));
    }
    if prob.d.dim != prob.g.components.len() || prob.phi.keys().any(|e| e.len() != n) {
        return Err(SeqError::DimensionMismatch("objective, map and D".into()));
    }
    if grid.lo.len() != n || grid.hi.len() != n || grid.resolution == 0 || grid.lo.iter().zip(&grid.hi).any(|(l, h)| l >= h) {
        return Err(SeqError::Invalid("search box".into()));
    }
    let xbar = &prob.g.xbar;
    if xbar.iter().zip(grid.lo.iter().zip(&grid.hi)).any(|(x, (l, h))| x < l || x > h) {
        return Err(SeqError::Invalid("x̄ lies outside the search box".into()));
    }
    if !prob.d.contains_point(&prob.g.value_at(xbar)) {
        return Err(SeqError::Invalid("g(x̄) ∉ D".into()));
    }
    let mut evals = 0;
    let mut steps = vec![];
    let mut spacing = zeros(n);
    for &k in ks {
        let mut ev = Eval { prob, k: Rat::from_integer(k.into()), evals, max: grid.max_evals };
        let (mut lo, mut hi) = (grid.lo.clone(), grid.hi.clone());
        let mut best: Option<(Rat, RatVec, RatVec)> = None;
        let mut trace = vec![];
        for _level in 0..=grid.depth {
            for x in grid_points(&lo, &hi, grid.resolution) {
                let (v, y) = ev.at(&x)?;
                if best.as_ref().is_none_or(|b| v < b.0) {
                    best = Some((v, x, y));
                }
            }
            let b = best.as_ref().expect("grid is nonempty");
            trace.push(b.0.clone());
            let res = Rat::from_integer((grid.resolution as i64).into());
            for i in 0..n {
                let h = (&hi[i] - &lo[i]) / &res;
                spacing[i] = h.clone();
                lo[i] = (&b.1[i] - &h).max(grid.lo[i].clone());
                hi[i] = (&b.1[i] + &h).min(grid.hi[i].clone());
            }
        }
        evals = ev.evals;
        let (objective, x, y) = best.expect("grid is nonempty");
        assert!(trace.windows(2).all(|w| w[1] <= w[0]), "refinement trace must be nonincreasing");
        let kr = Rat::from_integer(k.into());
        let lambda = vec_scale(&y, &kr);
        // λ_k/‖λ_k‖ = (y_k − ȳ)/‖y_k − ȳ‖ by construction
        assert!(lambda.iter().zip(&y).all(|(l, yi)| *l == yi * &kr));
        let (xf, yf, lf) = (fvec(&x), fvec(&y), fvec(&lambda));
        let dx = fdiff(&xf, &fvec(xbar));
        let (y_star, direction) = if dx > 0.0 {
            (fscale(&lf, fnorm(&yf) / dx), xf.iter().zip(fvec(xbar)).map(|(a, b)| (a - b) / dx).collect())
        } else {
            (vec![], vec![])
        };
        steps.push(PenaltyStep { k, x, y, lambda_norm: fnorm(&lf), lambda, y_star, direction, objective, trace });
    }
    let class = classify(&steps);
    Ok(PenalizedRun { steps, class, tag: EVIDENCE_TAG, resolution: spacing, evals })
}

/// Growth exponent of ‖λ_k‖ in k between the first nonzero multiplier and the last step,
/// with a nondecreasing last third, separates the two alternatives.
fn classify(steps: &[PenaltyStep]) -> RunClass {
    if steps.len() < 2 {
        return RunClass::Inconclusive("a single penalty parameter says nothing about trends".into());
    }
    let norms: Vec<f64> = steps.iter().map(|s| s.lambda_norm).collect();
    let last = steps.last().expect("nonempty");
    let Some(first) = steps.iter().position(|s| s.lambda_norm > 0.0) else {
        return RunClass::BoundedMultipliers;
    };
    if last.lambda_norm == 0.0 {
        return RunClass::BoundedMultipliers;
    }
    let kf = steps[first].k as f64;
    let kl = last.k as f64;
    if kl <= kf {
        return RunClass::Inconclusive("multipliers vanish until the last step".into());
    }
    let slope = (last.lambda_norm / steps[first].lambda_norm).ln() / (kl / kf).ln();
    let tail = (norms.len() as f64 / 3.0).ceil().max(2.0) as usize;
    let rising = norms[norms.len() - tail..].windows(2).all(|w| w[1] >= w[0]);
    if slope >= 0.1 && rising && !last.direction.is_empty() {
        RunClass::DivergingMultipliers { u: last.direction.clone() }
    } else if slope < 0.1 {
        RunClass::BoundedMultipliers
    } else {
        RunClass::Inconclusive(format!("growth exponent {slope:.3} without a monotone tail"))
    }
}
