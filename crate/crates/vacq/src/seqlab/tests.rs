use super::*;
use crate::constraint2::{Poly, PolyModel};
use crate::exactnum::LinearSystem;
use crate::polygeo::ConvexPolyhedron;
use crate::polyset::{halfspace, PolyhedralSet};

fn poly(terms: &[(i64, &[u32])]) -> Poly {
    let mut p = Poly::new();
    for (c, e) in terms {
        *p.entry(e.to_vec()).or_insert_with(Rat::zero) += ri(*c);
    }
    p
}

fn origin(dim: usize) -> PolyhedralSet {
    let mut s = LinearSystem::new(dim);
    for i in 0..dim {
        s.push_eq(unit(dim, i), Rat::zero());
    }
    PolyhedralSet::single(ConvexPolyhedron::new(s))
}

fn nonpos() -> PolyhedralSet {
    PolyhedralSet::single(halfspace(1, &[1], 0))
}

/// Φ(x) = {0, x²}
fn two_branches() -> GraphSpec {
    GraphSpec::new(
        1,
        1,
        vec![
            GraphPiece { h: vec![poly(&[(1, &[0, 1])])], d: origin(1) },
            GraphPiece { h: vec![poly(&[(1, &[0, 1]), (-1, &[2, 0])])], d: origin(1) },
        ],
    )
    .unwrap()
}

/// Φ(x) = R for x ≤ 0, [x², ∞) for x > 0
fn half_parabola() -> GraphSpec {
    GraphSpec::new(
        1,
        1,
        vec![
            GraphPiece { h: vec![poly(&[(1, &[1, 0])])], d: nonpos() },
            GraphPiece { h: vec![poly(&[(1, &[2, 0]), (-1, &[0, 1])])], d: nonpos() },
        ],
    )
    .unwrap()
}

fn standard_sequence() -> WitnessSequence {
    WitnessSequence {
        x: Seq::parse(&["1/k"]).unwrap(),
        y: Seq::parse(&["1/k^2"]).unwrap(),
        x_star: Seq::parse(&["1"]).unwrap(),
        lambda: Seq::parse(&["k/2"]).unwrap(),
        ks: (1..=60).collect(),
        xbar: rvec(&[0]),
        ybar: rvec(&[0]),
        x_star_limit: rvec(&[1]),
        y_star_limit: Some(vec![rat(1, 2)]),
    }
}

#[test]
fn sequence_expressions() {
    assert_eq!(KExpr::parse("k/2").unwrap().eval(4), Some(ri(2)));
    assert_eq!(KExpr::parse("1/k^2").unwrap().eval(2), Some(rat(1, 4)));
    assert_eq!(KExpr::parse("3*(1/k - 2)").unwrap().eval(3), Some(ri(-5)));
    assert_eq!(KExpr::parse("(k+1)/k").unwrap().eval(2), Some(rat(3, 2)));
    assert_eq!(KExpr::parse("k^-1 - -k").unwrap().eval(2), Some(rat(5, 2)));
    assert!(KExpr::parse("1/(k+1)").is_err());
    assert!(KExpr::parse("0.5").is_err());
    assert_eq!(KExpr::parse("1/k").unwrap().eval(0), None);
    for s in ["k/2 - 3", "-1/k^2 + 7*k", "0", "-k"] {
        let e = KExpr::parse(s).unwrap();
        assert_eq!(KExpr::parse(&e.to_string()).unwrap(), e, "{s}");
    }
}

#[test]
fn two_branch_witness_flags_violation() {
    let r = verify_witness(&standard_sequence(), &two_branches(), &rvec(&[1]), Notion::Directional, &TrendConfig::default()).unwrap();
    assert!(r.memberships_exact);
    assert!(r.trends_ok(), "{:?}", r.trends);
    assert_eq!(r.flag, RegularityFlag::Violated);
    // every x_k lies in Φ⁻¹(0) = R
    assert!(!r.fiber_condition);
    let c = &r.per_k[3];
    assert_eq!(c.multipliers.as_ref().unwrap()[0], vec![rat(-4, 2)]);
}

#[test]
fn half_parabola_strong_violation_only() {
    let spec = half_parabola();
    let cfg = TrendConfig::default();
    let r = verify_witness(&standard_sequence(), &spec, &rvec(&[1]), Notion::Strong, &cfg).unwrap();
    assert!(r.memberships_exact && r.trends_ok() && r.fiber_condition);
    assert_eq!(r.flag, RegularityFlag::Violated);
    let r = verify_witness(&standard_sequence(), &spec, &rvec(&[1]), Notion::Directional, &cfg).unwrap();
    assert_eq!(r.flag, RegularityFlag::NotRefuted);
    let csv = r.to_csv();
    assert!(csv.starts_with("k,x1,y1,lambda_norm,ystar1\n1,1,1,"));
    assert_eq!(csv.lines().count(), 61);
}

#[test]
fn resting_sequence_is_rejected() {
    let mut s = standard_sequence();
    s.x = Seq::parse(&["0"]).unwrap();
    s.y = Seq::parse(&["1/k"]).unwrap();
    let r = verify_witness(&s, &half_parabola(), &rvec(&[1]), Notion::Strong, &TrendConfig::default()).unwrap();
    assert!(r.per_k.iter().all(|c| c.in_graph && !c.moved && !c.outside_fiber));
    assert!(!r.memberships_exact);
    assert_ne!(r.flag, RegularityFlag::Violated);
}

#[test]
fn off_graph_samples_are_reported() {
    let mut s = standard_sequence();
    s.y = Seq::parse(&["-1/k^2"]).unwrap();
    let r = verify_witness(&s, &half_parabola(), &rvec(&[1]), Notion::Strong, &TrendConfig::default()).unwrap();
    assert!(r.per_k.iter().all(|c| !c.in_graph && c.error.is_some()));
    let mut s = standard_sequence();
    s.ks = vec![0, 1];
    let r = verify_witness(&s, &half_parabola(), &rvec(&[1]), Notion::Strong, &TrendConfig::default()).unwrap();
    assert!(r.per_k[0].error.as_ref().unwrap().contains("k = 0"));
}

#[test]
fn constraint_map_graph() {
    // Φ(x) = x² − R₋ = [x², ∞) as a constraint map
    let g = PolyModel::from_terms(1, &[&[(1, &[2])]], rvec(&[0]));
    let spec = GraphSpec::constraint(&g, &nonpos()).unwrap();
    assert!(spec.contains(&rvec(&[1]), &rvec(&[1])) && !spec.contains(&rvec(&[1]), &rvec(&[0])));
    let r = verify_witness(&standard_sequence(), &spec, &rvec(&[1]), Notion::Strong, &TrendConfig::default()).unwrap();
    assert_eq!(r.flag, RegularityFlag::Violated);
}

fn square_witness() -> QuasiWitness {
    QuasiWitness {
        x: Seq::parse(&["1/k"]).unwrap(),
        z: Seq::parse(&["0"]).unwrap(),
        lambda: Seq::parse(&["1"]).unwrap(),
        eta: Seq::parse(&["2/k"]).unwrap(),
        ks: (1..=40).collect(),
        lambda_limit: rvec(&[1]),
        basis: vec![rvec(&[1])],
    }
}

#[test]
fn square_refutes_both_normalities() {
    let g = PolyModel::from_terms(1, &[&[(1, &[2])]], rvec(&[0]));
    let r = verify_quasi_normality_witness(&square_witness(), &g, &nonpos(), &rvec(&[1]), &TrendConfig::default()).unwrap();
    assert!(r.lambda_in_kernel && r.basis_orthonormal);
    assert!(r.refutes_pseudo_normality && r.refutes_quasi_normality);
    // wrong η breaks the identity
    let mut w = square_witness();
    w.eta = Seq::parse(&["1/k"]).unwrap();
    let r = verify_quasi_normality_witness(&w, &g, &nonpos(), &rvec(&[1]), &TrendConfig::default()).unwrap();
    assert!(!r.refutes_pseudo_normality && !r.per_k[0].eta_identity);
}

#[test]
fn rotated_basis_vacuous_index() {
    // g(x) = (2x², x²), D = R₋², λ = (3,4) and basis (3/5,4/5), (−4/5,3/5)
    let g = PolyModel::from_terms(1, &[&[(2, &[2])], &[(1, &[2])]], rvec(&[0]));
    let d = PolyhedralSet::single(crate::polygeo::ConvexPolyhedron::new(
        LinearSystem::from_parts(2, rmat(&[&[1, 0], &[0, 1]]), rvec(&[0, 0]), vec![], vec![]).unwrap(),
    ));
    let w = QuasiWitness {
        x: Seq::parse(&["1/k"]).unwrap(),
        z: Seq::parse(&["0", "0"]).unwrap(),
        lambda: Seq::parse(&["3", "4"]).unwrap(),
        eta: Seq::parse(&["20/k"]).unwrap(),
        ks: (1..=40).collect(),
        lambda_limit: rvec(&[3, 4]),
        basis: vec![vec![rat(3, 5), rat(4, 5)], vec![rat(-4, 5), rat(3, 5)]],
    };
    let cfg = TrendConfig::default();
    let r = verify_quasi_normality_witness(&w, &g, &d, &rvec(&[1]), &cfg).unwrap();
    assert_eq!(r.vacuous, vec![1]);
    // ⟨y_k, e₂⟩ < 0, yet the condition does not apply
    assert!(dot(&r.per_k[0].y, &w.basis[1]).is_negative());
    assert!(r.per_k.iter().all(|c| c.quasi_signs[1].is_none()));
    assert!(r.refutes_quasi_normality && r.refutes_pseudo_normality);
    let mut bad = w.clone();
    bad.basis = vec![rvec(&[1, 1]), rvec(&[1, -1])];
    assert!(!verify_quasi_normality_witness(&bad, &g, &d, &rvec(&[1]), &cfg).unwrap().basis_orthonormal);
}

#[test]
fn trend_detector_scale_invariant() {
    let cfg = TrendConfig::default();
    let errs: Vec<f64> = (1..30).map(|k| 1.0 / k as f64).collect();
    let a = trend("t", &errs, 0.0, &cfg);
    let b = trend("t", &fscale(&errs, 37.5), 0.0, &cfg);
    assert_eq!(a.satisfied, b.satisfied);
    assert!(a.satisfied);
    let bumpy: Vec<f64> = (1..30).map(|k| if k % 2 == 0 { 1.0 } else { 0.01 }).collect();
    assert!(!trend("t", &bumpy, 0.0, &cfg).satisfied);
}

fn grid() -> GridSpec {
    GridSpec { lo: rvec(&[-1]), hi: rvec(&[1]), resolution: 20, depth: 5, max_evals: 100_000 }
}

#[test]
fn penalty_bounded_multipliers() {
    let prob = PenaltyProblem {
        phi: poly(&[(1, &[2])]),
        g: PolyModel::from_terms(1, &[&[(1, &[1])]], rvec(&[0])),
        d: nonpos(),
    };
    let run = penalization_explore(&prob, &[1, 10, 100, 1000], &grid()).unwrap();
    assert_eq!(run.class, RunClass::BoundedMultipliers);
    assert!(run.steps.iter().all(|s| s.lambda_norm == 0.0 && s.x == rvec(&[0])));
    assert_eq!(run.tag, EVIDENCE_TAG);
}

#[test]
fn penalty_diverging_multipliers() {
    // φ(x) = −x, feasible set {0} through g(x) = x² ∈ R₋
    let prob = PenaltyProblem {
        phi: poly(&[(-1, &[1])]),
        g: PolyModel::from_terms(1, &[&[(1, &[2])]], rvec(&[0])),
        d: nonpos(),
    };
    let run = penalization_explore(&prob, &[10, 100, 1000, 10_000], &grid()).unwrap();
    match &run.class {
        RunClass::DivergingMultipliers { u } => assert!((u[0] - 1.0).abs() < 1e-12),
        c => panic!("{c:?}"),
    }
    for s in &run.steps {
        // root of 2k x³ + x − 1
        let mut expect = 0.5f64;
        for _ in 0..50 {
            expect -= (2.0 * s.k as f64 * expect.powi(3) + expect - 1.0) / (6.0 * s.k as f64 * expect.powi(2) + 1.0);
        }
        assert!((to_f64(&s.x[0]) - expect).abs() < 1e-4, "{} {}", s.k, to_f64(&s.x[0]));
        assert!(s.trace.windows(2).all(|w| w[1] <= w[0]));
    }
    assert!(run.to_csv().starts_with("k,x1,y1,lambda_norm,ystar1\n10,"));
    let single = penalization_explore(&prob, &[10], &grid()).unwrap();
    assert!(matches!(single.class, RunClass::Inconclusive(_)));
    let tight = GridSpec { max_evals: 50, ..grid() };
    assert_eq!(penalization_explore(&prob, &[10], &tight).unwrap_err(), SeqError::BudgetExceeded(50));
}
