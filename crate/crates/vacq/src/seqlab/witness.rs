use num::{Signed, Zero};

use super::*;
use crate::constraint2::{Poly, PolyModel};
use crate::polygeo::PolyCone;
use crate::polyset::{directional_limiting_normal_cone, limiting_normal_cone, regular_normal_cone, PolyhedralSet};

/// `{(x,y) : h(x,y) ∈ D}` with polynomial h.
#[derive(Debug, Clone)]
pub struct GraphPiece {
    pub h: Vec<Poly>,
    pub d: PolyhedralSet,
}

/// gph Φ as a finite union of pieces, Φ: Rⁿ ⇉ Rᵐ.
#[derive(Debug, Clone)]
pub struct GraphSpec {
    pub n: usize,
    pub m: usize,
    pub pieces: Vec<GraphPiece>,
}

impl GraphPiece {
    fn model(&self, nm: usize) -> PolyModel {
        PolyModel { n: nm, components: self.h.clone(), xbar: zeros(nm) }
    }
}

impl GraphSpec {
    pub fn new(n: usize, m: usize, pieces: Vec<GraphPiece>) -> Result<Self, SeqError> {
        for (i, p) in pieces.iter().enumerate() {
            if p.h.len() != p.d.dim || p.h.iter().flat_map(|q| q.keys()).any(|e| e.len() != n + m) {
                return Err(SeqError::DimensionMismatch(format!("graph piece {i}")));
            }
        }
        Ok(GraphSpec { n, m, pieces })
    }

    /// gph of x ↦ g(x) − D, i.e. the single piece g(x) − y ∈ D.
    pub fn constraint(g: &PolyModel, d: &PolyhedralSet) -> Result<Self, SeqError> {
        let (n, m) = (g.n, g.components.len());
        if d.dim != m {
            return Err(SeqError::DimensionMismatch("D and g".into()));
        }
        let h = g
            .components
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let mut q: Poly = p
                    .iter()
                    .map(|(e, c)| {
                        let mut e = e.clone();
                        e.resize(n + m, 0);
                        (e, c.clone())
                    })
                    .collect();
                let mut e = vec![0u32; n + m];
                e[n + i] = 1;
                *q.entry(e).or_insert_with(Rat::zero) -= ri(1);
                q
            })
            .collect();
        GraphSpec::new(n, m, vec![GraphPiece { h, d: d.clone() }])
    }

    fn point(x: &[Rat], y: &[Rat]) -> RatVec {
        x.iter().chain(y).cloned().collect()
    }

    pub fn contains(&self, x: &[Rat], y: &[Rat]) -> bool {
        let z = Self::point(x, y);
        self.pieces.iter().any(|p| p.d.contains_point(&p.model(z.len()).value_at(&z)))
    }

    /// Multipliers μᵢ ∈ N̂_{Dᵢ}(hᵢ(z)) with ∇hᵢ(z)ᵀμᵢ = (x*, −λ), one per piece containing z.
    /// Their existence proves x* ∈ D̂*Φ(x,y)(λ).
    pub fn regular_coderivative_multipliers(&self, x: &[Rat], y: &[Rat], xs: &[Rat], lam: &[Rat]) -> Result<Option<Vec<RatVec>>, SeqError> {
        let z = Self::point(x, y);
        let target: RatVec = xs.iter().cloned().chain(lam.iter().map(|l| -l.clone())).collect();
        let mut out = vec![];
        for p in &self.pieces {
            let model = p.model(z.len());
            let w = model.value_at(&z);
            if !p.d.contains_point(&w) {
                continue;
            }
            let cone = regular_normal_cone(&p.d, &w)?;
            match preimage_point(&cone, &model.jacobian_at(&z), &target, z.len()) {
                Some(mu) => out.push(mu),
                None => return Ok(None),
            }
        }
        Ok(if out.is_empty() { None } else { Some(out) })
    }

    /// Decides x* ∉ Im D*Φ(z̄) (or the directional version for `dir = (u,0)`) through the union of
    /// the piecewise limiting normals, which contains the limiting normal cone of the union.
    /// `Err` text when some piece has a rank-deficient derivative at z̄.
    fn image_outer_contains(&self, xbar: &[Rat], ybar: &[Rat], dir: Option<&[Rat]>, xs: &[Rat]) -> Result<Result<bool, String>, SeqError> {
        let z = Self::point(xbar, ybar);
        let nm = z.len();
        for (i, p) in self.pieces.iter().enumerate() {
            let model = p.model(nm);
            let w = model.value_at(&z);
            if !p.d.contains_point(&w) {
                continue;
            }
            let jac = model.jacobian_at(&z);
            if rank(&jac) < p.h.len() {
                return Ok(Err(format!("derivative of graph piece {i} is not onto at the reference point")));
            }
            let cones = match dir {
                None => limiting_normal_cone(&p.d, &w)?,
                Some(u) => {
                    let mut dz = u.to_vec();
                    dz.resize(nm, Rat::zero());
                    directional_limiting_normal_cone(&p.d, &w, &mat_vec(&jac, &dz))?
                }
            };
            let jx: RatMat = jac.iter().map(|r| r[..self.n].to_vec()).collect();
            if cones.pieces.iter().any(|c| preimage_point(c, &jx, xs, self.n).is_some()) {
                return Ok(Ok(true));
            }
        }
        Ok(Ok(false))
    }
}

/// μ ∈ cone with Jᵀμ = target, where J has `cols` columns.
fn preimage_point(cone: &PolyCone, jac: &RatMat, target: &[Rat], cols: usize) -> Option<RatVec> {
    let mut s = cone.sys.clone();
    for (row, t) in transpose(jac, cols).into_iter().zip(target) {
        s.push_eq(row, t.clone());
    }
    lp_feasible_point(&s)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Notion {
    /// No direction; limits x_k → x̄, y_k → ȳ, x*_k → x* only.
    Plain,
    Directional,
    /// Limit tested against the directional coderivative at (u, 0).
    Strong,
}

#[derive(Debug, Clone)]
pub struct WitnessSequence {
    pub x: Seq,
    pub y: Seq,
    pub x_star: Seq,
    pub lambda: Seq,
    pub ks: Vec<u64>,
    pub xbar: RatVec,
    pub ybar: RatVec,
    pub x_star_limit: RatVec,
    pub y_star_limit: Option<RatVec>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KCheck {
    pub k: u64,
    pub x: RatVec,
    pub y: RatVec,
    pub lambda: RatVec,
    pub in_graph: bool,
    /// x_k ≠ x̄ and y_k ≠ ȳ.
    pub moved: bool,
    /// x_k ∉ Φ⁻¹(ȳ).
    pub outside_fiber: bool,
    pub multipliers: Option<Vec<RatVec>>,
    pub error: Option<String>,
}

impl KCheck {
    pub fn ok(&self) -> bool {
        self.error.is_none() && self.in_graph && self.moved && self.multipliers.is_some()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum RegularityFlag {
    /// Every per-k check and trend passed and x* lies outside the image.
    Violated,
    /// x* lies in the outer estimate of the image.
    NotRefuted,
    Undetermined(String),
}

#[derive(Debug, Clone)]
pub struct WitnessReport {
    pub notion: Notion,
    pub per_k: Vec<KCheck>,
    pub trends: Vec<TrendItem>,
    pub memberships_exact: bool,
    /// x_k ∉ Φ⁻¹(ȳ) for every k; reported separately from `flag`.
    pub fiber_condition: bool,
    pub flag: RegularityFlag,
    pub xbar: RatVec,
    pub ybar: RatVec,
}

impl WitnessReport {
    pub fn trends_ok(&self) -> bool {
        self.trends.iter().all(|t| t.satisfied)
    }

    /// Columns k, x_k…, y_k…, ‖λ_k‖, y*_k… with y*_k = ‖y_k − ȳ‖/‖x_k − x̄‖ λ_k.
    pub fn to_csv(&self) -> String {
        let (n, m) = (self.xbar.len(), self.ybar.len());
        let mut head = vec!["k".to_string()];
        head.extend((1..=n).map(|i| format!("x{i}")));
        head.extend((1..=m).map(|i| format!("y{i}")));
        head.push("lambda_norm".into());
        head.extend((1..=m).map(|i| format!("ystar{i}")));
        let mut out = head.join(",") + "\n";
        let (xb, yb) = (fvec(&self.xbar), fvec(&self.ybar));
        for c in &self.per_k {
            if c.x.len() != n || c.y.len() != m || c.lambda.len() != m {
                continue;
            }
            let (x, y, l) = (fvec(&c.x), fvec(&c.y), fvec(&c.lambda));
            let ys = fscale(&l, fdiff(&y, &yb) / fdiff(&x, &xb));
            let mut row = vec![c.k.to_string()];
            row.extend(c.x.iter().map(fmt_rat));
            row.extend(c.y.iter().map(fmt_rat));
            row.push(format!("{:e}", fnorm(&l)));
            row.extend(ys.iter().map(|v| format!("{v:e}")));
            out += &(row.join(",") + "\n");
        }
        out
    }
}

fn sample_dims(spec: &GraphSpec, seq: &WitnessSequence, u: &[Rat]) -> Result<(), SeqError> {
    let (n, m) = (spec.n, spec.m);
    if seq.xbar.len() != n || seq.ybar.len() != m || seq.x_star_limit.len() != n || (!u.is_empty() && u.len() != n) {
        return Err(SeqError::DimensionMismatch("reference point, limits or direction".into()));
    }
    if seq.y_star_limit.as_ref().is_some_and(|v| v.len() != m) {
        return Err(SeqError::DimensionMismatch("y* limit".into()));
    }
    if !spec.contains(&seq.xbar, &seq.ybar) {
        return Err(SeqError::Invalid("reference point is not on the graph".into()));
    }
    Ok(())
}

/// Per-k exact memberships, trends for the convergence list and the image test for x*.
pub fn verify_witness(seq: &WitnessSequence, spec: &GraphSpec, u: &[Rat], notion: Notion, cfg: &TrendConfig) -> Result<WitnessReport, SeqError> {
    let directional = notion != Notion::Plain;
    if directional && (u.len() != spec.n || is_zero_vec(u)) {
        return Err(SeqError::DimensionMismatch("a nonzero direction in Rⁿ is required".into()));
    }
    sample_dims(spec, seq, if directional { u } else { &[] })?;
    if directional && seq.y_star_limit.is_none() {
        return Err(SeqError::Invalid("directional notions need a claimed y* limit".into()));
    }
    let (n, m) = (spec.n, spec.m);
    let mut per_k = vec![];
    let mut samples = vec![];
    for &k in &seq.ks {
        let got = (|| -> Result<_, SeqError> { Ok((seq.x.at(k)?, seq.y.at(k)?, seq.x_star.at(k)?, seq.lambda.at(k)?)) })();
        let (x, y, xs, lam) = match got {
            Ok(v) => v,
            Err(e) => {
                per_k.push(KCheck {
                    k,
                    x: vec![],
                    y: vec![],
                    lambda: vec![],
                    in_graph: false,
                    moved: false,
                    outside_fiber: false,
                    multipliers: None,
                    error: Some(e.to_string()),
                });
                continue;
            }
        };
        if x.len() != n || xs.len() != n || y.len() != m || lam.len() != m {
            return Err(SeqError::DimensionMismatch(format!("sample at k = {k}")));
        }
        let in_graph = spec.contains(&x, &y);
        let moved = !directional || (x != seq.xbar && y != seq.ybar);
        let outside_fiber = !spec.contains(&x, &seq.ybar);
        let multipliers = if in_graph { spec.regular_coderivative_multipliers(&x, &y, &xs, &lam)? } else { None };
        let error = if in_graph { None } else { Some("point off the graph".into()) };
        samples.push((fvec(&x), fvec(&y), fvec(&xs), fvec(&lam)));
        per_k.push(KCheck { k, x, y, lambda: lam, in_graph, moved, outside_fiber, multipliers, error });
    }
    let (xb, yb, xsl) = (fvec(&seq.xbar), fvec(&seq.ybar), fvec(&seq.x_star_limit));
    let errs = |f: &dyn Fn(&(Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>)) -> f64| samples.iter().map(f).collect::<Vec<f64>>();
    let mut trends = vec![
        trend("x_k -> xbar", &errs(&|s| fdiff(&s.0, &xb)), 0.0, cfg),
        trend("y_k -> ybar", &errs(&|s| fdiff(&s.1, &yb)), 0.0, cfg),
        trend("x*_k -> x*", &errs(&|s| fdiff(&s.2, &xsl)), fnorm(&xsl), cfg),
    ];
    if directional {
        let uf = fvec(u);
        let uf = fscale(&uf, 1.0 / fnorm(&uf));
        let ysl = fvec(seq.y_star_limit.as_ref().expect("checked above"));
        let dx = |s: &(Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>)| fdiff(&s.0, &xb);
        let dy = |s: &(Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>)| fdiff(&s.1, &yb);
        let ymove = |s: &(Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>)| s.1.iter().zip(&yb).map(|(a, b)| a - b).collect::<Vec<f64>>();
        trends.push(trend(
            "(x_k - xbar)/|x_k - xbar| -> u",
            &errs(&|s| {
                let d: Vec<f64> = s.0.iter().zip(&xb).map(|(a, b)| a - b).collect();
                fdiff(&fscale(&d, 1.0 / dx(s)), &uf)
            }),
            1.0,
            cfg,
        ));
        trends.push(trend("(y_k - ybar)/|x_k - xbar| -> 0", &errs(&|s| dy(s) / dx(s)), 0.0, cfg));
        trends.push(trend("|y_k - ybar|/|x_k - xbar| lambda_k -> y*", &errs(&|s| fdiff(&fscale(&s.3, dy(s) / dx(s)), &ysl)), fnorm(&ysl), cfg));
        trends.push(trend("|lambda_k| -> infinity", &errs(&|s| 1.0 / fnorm(&s.3)), 0.0, cfg));
        trends.push(trend(
            "(y_k - ybar)/|y_k - ybar| - lambda_k/|lambda_k| -> 0",
            &errs(&|s| fdiff(&fscale(&ymove(s), 1.0 / dy(s)), &fscale(&s.3, 1.0 / fnorm(&s.3)))),
            1.0,
            cfg,
        ));
    }
    let memberships_exact = !per_k.is_empty() && per_k.iter().all(|c| c.ok());
    let fiber_condition = per_k.iter().all(|c| c.outside_fiber);
    let trends_ok = trends.iter().all(|t| t.satisfied);
    let dir = if notion == Notion::Strong { Some(u) } else { None };
    let flag = match spec.image_outer_contains(&seq.xbar, &seq.ybar, dir, &seq.x_star_limit)? {
        Err(why) => RegularityFlag::Undetermined(why),
        Ok(true) => RegularityFlag::NotRefuted,
        Ok(false) if memberships_exact && trends_ok => RegularityFlag::Violated,
        Ok(false) => RegularityFlag::Undetermined("x* is outside the image but the sequence does not qualify".into()),
    };
    Ok(WitnessReport { notion, per_k, trends, memberships_exact, fiber_condition, flag, xbar: seq.xbar.clone(), ybar: seq.ybar.clone() })
}

/// Sequences for directional pseudo-/quasi-normality of x ↦ g(x) − D at (x̄, 0):
/// y_k := g(x_k) − z_k with z_k ∈ D, η_k ∈ D̂*Φ(x_k,y_k)(λ_k).
#[derive(Debug, Clone)]
pub struct QuasiWitness {
    pub x: Seq,
    pub z: Seq,
    pub lambda: Seq,
    pub eta: Seq,
    pub ks: Vec<u64>,
    pub lambda_limit: RatVec,
    pub basis: Vec<RatVec>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuasiCheck {
    pub k: u64,
    pub y: RatVec,
    pub x_moved: bool,
    pub z_in_d: bool,
    pub lambda_regular_normal: bool,
    pub eta_identity: bool,
    pub pseudo_sign: bool,
    /// Per basis vector: `None` when ⟨λ,eᵢ⟩ = 0 (condition vacuous).
    pub quasi_signs: Vec<Option<bool>>,
    pub error: Option<String>,
}

impl QuasiCheck {
    fn memberships(&self) -> bool {
        self.error.is_none() && self.x_moved && self.z_in_d && self.lambda_regular_normal && self.eta_identity
    }
}

#[derive(Debug, Clone)]
pub struct QuasiReport {
    /// λ ≠ 0, ∇g(x̄)ᵀλ = 0, λ ∈ N_D(g(x̄); ∇g(x̄)u).
    pub lambda_in_kernel: bool,
    pub basis_orthonormal: bool,
    pub vacuous: Vec<usize>,
    pub per_k: Vec<QuasiCheck>,
    pub trends: Vec<TrendItem>,
    pub refutes_pseudo_normality: bool,
    pub refutes_quasi_normality: bool,
}

pub fn verify_quasi_normality_witness(w: &QuasiWitness, g: &PolyModel, d: &PolyhedralSet, u: &[Rat], cfg: &TrendConfig) -> Result<QuasiReport, SeqError> {
    let (n, m) = (g.n, g.components.len());
    if d.dim != m || u.len() != n || w.lambda_limit.len() != m || w.basis.len() != m || w.basis.iter().any(|e| e.len() != m) {
        return Err(SeqError::DimensionMismatch("system, direction, λ or basis".into()));
    }
    if is_zero_vec(u) {
        return Err(SeqError::Invalid("direction must be nonzero".into()));
    }
    let xbar = &g.xbar;
    let gbar = g.value_at(xbar);
    if !d.contains_point(&gbar) {
        return Err(SeqError::Invalid("g(x̄) ∉ D".into()));
    }
    let lam = &w.lambda_limit;
    let jac = g.jacobian_at(xbar);
    let in_normal = directional_limiting_normal_cone(d, &gbar, &mat_vec(&jac, u))?.contains_point(lam);
    let lambda_in_kernel = !is_zero_vec(lam) && is_zero_vec(&mat_t_vec(&jac, lam, n)) && in_normal;
    let basis_orthonormal = (0..m).all(|i| (0..m).all(|j| dot(&w.basis[i], &w.basis[j]) == if i == j { ri(1) } else { Rat::zero() }));
    let coeffs: Vec<Rat> = w.basis.iter().map(|e| dot(lam, e)).collect();
    let vacuous: Vec<usize> = (0..m).filter(|&i| coeffs[i].is_zero()).collect();

    let mut per_k = vec![];
    let mut samples = vec![];
    for &k in &w.ks {
        let got = (|| -> Result<_, SeqError> { Ok((w.x.at(k)?, w.z.at(k)?, w.lambda.at(k)?, w.eta.at(k)?)) })();
        let (x, z, lk, eta) = match got {
            Ok(v) => v,
            Err(e) => {
                per_k.push(QuasiCheck {
                    k,
                    y: vec![],
                    x_moved: false,
                    z_in_d: false,
                    lambda_regular_normal: false,
                    eta_identity: false,
                    pseudo_sign: false,
                    quasi_signs: vec![],
                    error: Some(e.to_string()),
                });
                continue;
            }
        };
        if x.len() != n || z.len() != m || lk.len() != m || eta.len() != n {
            return Err(SeqError::DimensionMismatch(format!("sample at k = {k}")));
        }
        let y = vec_sub(&g.value_at(&x), &z);
        let z_in_d = d.contains_point(&z);
        let lambda_regular_normal = z_in_d && regular_normal_cone(d, &z)?.contains_point(&lk);
        let eta_identity = mat_t_vec(&g.jacobian_at(&x), &lk, n) == eta;
        let pseudo_sign = dot(lam, &y).is_positive();
        let quasi_signs = (0..m)
            .map(|i| if coeffs[i].is_zero() { None } else { Some((&coeffs[i] * dot(&y, &w.basis[i])).is_positive()) })
            .collect();
        samples.push((fvec(&x), fvec(&y), fvec(&lk), fvec(&eta)));
        per_k.push(QuasiCheck { k, x_moved: x != *xbar, y, z_in_d, lambda_regular_normal, eta_identity, pseudo_sign, quasi_signs, error: None });
    }
    let (xb, lf) = (fvec(xbar), fvec(lam));
    let uf = fvec(u);
    let uf = fscale(&uf, 1.0 / fnorm(&uf));
    let col = |f: &dyn Fn(&(Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>)) -> f64| samples.iter().map(f).collect::<Vec<f64>>();
    let trends = vec![
        trend("x_k -> xbar", &col(&|s| fdiff(&s.0, &xb)), 0.0, cfg),
        trend("y_k -> 0", &col(&|s| fnorm(&s.1)), 0.0, cfg),
        trend("lambda_k -> lambda", &col(&|s| fdiff(&s.2, &lf)), fnorm(&lf), cfg),
        trend("eta_k -> 0", &col(&|s| fnorm(&s.3)), 0.0, cfg),
        trend(
            "(x_k - xbar)/|x_k - xbar| -> u",
            &col(&|s| {
                let d: Vec<f64> = s.0.iter().zip(&xb).map(|(a, b)| a - b).collect();
                fdiff(&fscale(&d, 1.0 / fnorm(&d)), &uf)
            }),
            1.0,
            cfg,
        ),
        trend("y_k/|x_k - xbar| -> 0", &col(&|s| fnorm(&s.1) / fdiff(&s.0, &xb)), 0.0, cfg),
    ];
    let base = lambda_in_kernel && !per_k.is_empty() && per_k.iter().all(|c| c.memberships()) && trends.iter().all(|t| t.satisfied);
    let refutes_pseudo_normality = base && per_k.iter().all(|c| c.pseudo_sign);
    let refutes_quasi_normality = base && basis_orthonormal && per_k.iter().all(|c| c.quasi_signs.iter().all(|s| s.unwrap_or(true)));
    Ok(QuasiReport { lambda_in_kernel, basis_orthonormal, vacuous, per_k, trends, refutes_pseudo_normality, refutes_quasi_normality })
}
