use super::*;
use crate::constraint2::tests::ex310;

fn ex312() -> ConstraintSystem {
    let g = PolyModel::from_terms(2, &[&[(1, &[2, 0])], &[(1, &[0, 2])], &[(1, &[1, 1])]], rvec(&[0, 0])).smooth_data();
    ConstraintSystem::new(g, sign_set(&[&[0, 0, 0]])).unwrap()
}

fn ex513() -> ConstraintSystem {
    ex310(sign_set(&[&[1, 2], &[2, 1]]))
}

fn checked(sys: &ConstraintSystem, v: CQVerdict) -> CQVerdict {
    assert!(verify_certificate(sys, &v).unwrap(), "certificate of {} does not verify: {:?}", v.cq, v);
    v
}

#[test]
fn two_regularity_examples() {
    let u = rvec(&[-1]);
    let d1 = ex310(sign_set(&[&[2, 1]]));
    let d2 = ex310(sign_set(&[&[-1, 1]]));
    assert!(checked(&d1, two_regularity_dual(&d1, &u).unwrap()).holds());
    let v = checked(&d2, two_regularity_dual(&d2, &u).unwrap());
    assert!(v.fails());
    assert_eq!(v.witness("y"), Some(&rvec(&[0, -1])));
    assert_eq!(v.witness("z"), Some(&rvec(&[2, 0])));
    assert!(checked(&d1, pseudo_reg_explicit(&d1, &u).unwrap()).holds());
    assert!(checked(&d2, pseudo_reg_explicit(&d2, &u).unwrap()).holds());
    assert!(checked(&d2, gfrerer_or_polyii(&d2, &u).unwrap()).holds());
}

#[test]
fn nonconvex_d_rejected() {
    let sys = ex513();
    assert_eq!(two_regularity_dual(&sys, &rvec(&[1])).unwrap_err(), CqError::NonConvexD);
}

#[test]
fn three_quadratics() {
    let sys = ex312();
    for u in [rvec(&[1, 0]), rvec(&[0, 1]), rvec(&[1, 1]), rvec(&[3, -2])] {
        assert!(checked(&sys, two_regularity_dual(&sys, &u).unwrap()).fails());
        assert!(checked(&sys, pseudo_reg_explicit(&sys, &u).unwrap()).fails());
        assert!(checked(&sys, gfrerer_or_polyii(&sys, &u).unwrap()).holds());
    }
    let cover = direction_enumeration(&sys, DEFAULT_DIM_BOUND).unwrap();
    assert_eq!(cover.reps.len(), 1);
    assert!(cover.subspace_cell);
}

#[test]
fn first_and_second_order_sufficient() {
    let sys = ex513();
    let v = checked(&sys, foscms_u(&sys, &rvec(&[-1])).unwrap());
    assert!(v.fails());
    assert_eq!(v.witness("y"), Some(&rvec(&[0, -1])));
    let v = checked(&sys, soscms_u(&sys, &rvec(&[-1])).unwrap());
    assert_eq!(v.witness("y"), Some(&rvec(&[0, -1])));
    assert!(checked(&sys, foscms_u(&sys, &rvec(&[1])).unwrap()).holds());
    assert!(checked(&sys, soscms_u(&sys, &rvec(&[1])).unwrap()).holds());
    assert_eq!(foscms_u(&sys, &rvec(&[0])).unwrap_err(), CqError::ZeroDirection);

    let full = ex310(sign_set(&[&[2, 2]]));
    assert!(foscms_u(&full, &rvec(&[1])).unwrap().holds());
}

#[test]
fn asymptotic_regularity_modes() {
    let sys = ex513();
    for u in [rvec(&[1]), rvec(&[-1])] {
        for mode in [AsympMode::PolyIIRelaxed, AsympMode::PolyIIExact] {
            let v = asymp_reg_sufficient(&sys, &u, mode).unwrap();
            assert!(v.holds(), "{mode:?} at {u:?}: {v:?}");
            assert!(verify_certificate(&sys, &v).unwrap());
        }
    }
    let v = asymp_reg_sufficient(&sys, &rvec(&[-1]), AsympMode::PolyIIRelaxed).unwrap();
    assert_eq!(v.mode, Mode::Relaxed);
    assert!(asymp_reg_sufficient(&sys, &rvec(&[1]), AsympMode::NonpolyTheorem).unwrap().holds());
    // at u = −1 the companion condition fails: z* = (0,−1) ∈ N_{T_D}((−1,0)) ∩ ker ∇g*
    let v = asymp_reg_sufficient(&sys, &rvec(&[-1]), AsympMode::NonpolyTheorem).unwrap();
    assert!(v.fails());
    assert_eq!(v.witness("z"), Some(&rvec(&[0, -1])));
    assert!(verify_certificate(&sys, &v).unwrap());
    // the image at u = −1 is {2y₂ : y₂ ≤ 0} = R₋, inside ∇g* N_D(0) = R₋
    let img = {
        let set = gfrerer2_condition_sets(&sys, &rvec(&[-1]), &rvec(&[0, 0]), ZVariant::Normal).unwrap();
        set.x_image(&sys.map, &rvec(&[-1])).unwrap()
    };
    assert!(img.contains_point(&rvec(&[-4])));
    assert!(!img.contains_point(&rvec(&[1])));
    assert!(image_target(&sys, &rvec(&[-1]), false).unwrap().contains_point(&rvec(&[-4])));
}

#[test]
fn asymptotic_failure_is_reverified() {
    // D = {0}² with g = (x, −x²): ∇g* N_D = R, so use D = R₊ × {0} where the image escapes
    let sys = ex310(sign_set(&[&[1, 0]]));
    for mode in [AsympMode::NonpolyTheorem, AsympMode::PolyIIExact] {
        for u in [rvec(&[1]), rvec(&[-1])] {
            let v = asymp_reg_sufficient(&sys, &u, mode).unwrap();
            assert!(verify_certificate(&sys, &v).unwrap(), "{v:?}");
        }
    }
}

#[test]
fn complementarity_example() {
    let g = PolyModel::from_terms(1, &[&[(1, &[1])]], rvec(&[0])).smooth_data();
    let h = PolyModel::from_terms(1, &[&[(1, &[2])]], rvec(&[0])).smooth_data();
    let data = MpccData { g, h };
    let sys = data.system().unwrap();
    let r = mpcc_cq(&data, &rvec(&[1])).unwrap();
    assert!(r.cq34.holds());
    assert!(r.cq35.fails());
    for (k, want) in [("mu", 0), ("nu", 1), ("mu~", 0), ("nu~", 1)] {
        assert_eq!(r.cq35.witness(k), Some(&rvec(&[want])), "{k}");
    }
    assert!(verify_certificate(&sys, &r.cq34).unwrap());
    assert!(verify_certificate(&sys, &r.cq35).unwrap());
    // u = −1 makes G negative to first order
    let r = mpcc_cq(&data, &rvec(&[-1])).unwrap();
    assert_eq!(r.cq34.status, Status::Inconclusive);
}

#[test]
fn complementarity_infeasible_point() {
    let g = PolyModel::from_terms(1, &[&[(1, &[0])]], rvec(&[0])).smooth_data();
    let h = PolyModel::from_terms(1, &[&[(1, &[0])]], rvec(&[0])).smooth_data();
    assert_eq!(mpcc_cq(&MpccData { g, h }, &rvec(&[1])).unwrap_err(), CqError::InfeasiblePoint);
}

#[test]
fn strictly_complementary_index() {
    // G(x) = 1 + a·x > 0, H(x) = x: only ν is active; both conditions hold iff ∇H ≠ 0
    for (hc, holds) in [(1, true), (0, false)] {
        let g = PolyModel::from_terms(1, &[&[(1, &[0]), (1, &[1])]], rvec(&[0])).smooth_data();
        let h = PolyModel::from_terms(1, &[&[(hc, &[1])]], rvec(&[0])).smooth_data();
        let data = MpccData { g, h };
        let u = if hc == 1 { rvec(&[0]) } else { rvec(&[1]) };
        if is_zero_vec(&u) {
            // only u = 0 is linearized-feasible when ∇H ≠ 0 at an I⁺⁰ index
            let r = mpcc_cq(&data, &rvec(&[1])).unwrap();
            assert_eq!(r.cq34.status, Status::Inconclusive);
            let sys = data.system().unwrap();
            assert!(foscms_u(&sys, &rvec(&[1])).unwrap().holds() == holds);
            continue;
        }
        let r = mpcc_cq(&data, &u).unwrap();
        assert_eq!(r.cq34.holds() && r.cq35.holds(), holds);
    }
}

#[test]
fn stationarity_lines() {
    let g = PolyModel::from_terms(1, &[&[(1, &[1])]], rvec(&[0])).smooth_data();
    let sys = ConstraintSystem::new(g, sign_set(&[&[-1]])).unwrap();
    assert!(mstat_verify(&sys, &rvec(&[0]), &rvec(&[0])).unwrap().ok());
    let bad = mstat_verify(&sys, &rvec(&[0]), &rvec(&[-1])).unwrap();
    assert_eq!(bad.failed(), vec!["0 = ∇φ + ∇g*λ", "λ ∈ N_D(g(x̄))"]);

    let d2 = ex310(sign_set(&[&[-1, 1]]));
    let v = two_regularity_dual(&d2, &rvec(&[-1])).unwrap();
    let rep = premise_report(&d2, &v).unwrap();
    assert!(rep.ok());
    assert!(!rep.conclusion.unwrap().1);
    let mut broken = v.clone();
    if let Certificate::Witness { blocks, .. } = &mut broken.certificate {
        blocks[1].1[0] = ri(3);
    }
    let rep = premise_report(&d2, &broken).unwrap();
    assert_eq!(rep.failed(), vec!["∇²⟨y*,g⟩(u) + ∇g*z* = 0"]);
    assert!(!verify_certificate(&d2, &broken).unwrap());

    // with ∇φ = −(∇²⟨y*,g⟩(u) + ∇g*z*) the mixed-order system is solved
    let y = rvec(&[0, -1]);
    let z = rvec(&[0, 0]);
    let grad = vec_scale(&d2.map.weighted_hess_u(&y, &rvec(&[-1])), &ri(-1));
    let rep = mixed_order_verify(&d2, &grad, &rvec(&[-1]), &y, &z, &MixedVariant::NormalOfTangent).unwrap();
    assert!(rep.ok(), "{rep:?}");
}

#[test]
fn complementarity_stationarity_lines() {
    let g = PolyModel::from_terms(1, &[&[(1, &[1])]], rvec(&[0])).smooth_data();
    let h = PolyModel::from_terms(1, &[&[(1, &[2])]], rvec(&[0])).smooth_data();
    let data = MpccData { g, h };
    let one = rvec(&[1]);
    let zero = rvec(&[0]);
    // φ(x) = −x²: ∇φ = 0 and 0 = 2ν·u + μ̃ with ν = 1 needs μ̃ = −2 ∉ {0}
    let rep = mpcc_mixed_order_verify(&data, &zero, &one, &zero, &one, &zero, &one).unwrap();
    assert_eq!(rep.failed(), vec!["0 = ∇φ + Σ(μᵢ∇²Gᵢ + νᵢ∇²Hᵢ)u + ∇G*μ̃ + ∇H*ν̃"]);
    let rep = mpcc_mixed_order_verify(&data, &rvec(&[-2]), &one, &zero, &one, &zero, &one).unwrap();
    assert!(rep.ok(), "{rep:?}");
}

#[test]
fn table_cases() {
    let r = |x| ri(x);
    let (k, c) = dn_c_table(&r(0), &r(0), &r(0), &r(1), &rvec(&[1, 0]));
    assert_eq!(k, 8);
    assert!(c.contains_point(&rvec(&[0, 5])) && !c.contains_point(&rvec(&[1, 0])));
    assert_eq!(dn_c_table(&r(0), &r(0), &r(0), &r(0), &rvec(&[0, 0])).0, 12);
    assert_eq!(dn_c_table(&r(1), &r(0), &r(0), &r(0), &rvec(&[0, 1])).0, 13);
}

#[test]
fn one_dimensional_fan() {
    let cover = direction_enumeration(&ex513(), DEFAULT_DIM_BOUND).unwrap();
    assert_eq!(cover.reps, vec![rvec(&[1]), rvec(&[-1])]);
    let g = PolyModel::from_terms(5, &[&[(1, &[1, 0, 0, 0, 0])]], zeros(5)).smooth_data();
    let sys = ConstraintSystem::new(g, sign_set(&[&[-1]])).unwrap();
    assert_eq!(direction_enumeration(&sys, 4).unwrap_err(), CqError::DimensionTooLarge(5, 4));
}

#[test]
fn verdict_json_shape() {
    let sys = ex513();
    let v = foscms_u(&sys, &rvec(&[-1])).unwrap();
    let j = v.to_json();
    assert_eq!(j["status"], "fails");
    assert_eq!(j["certificate"]["multipliers"]["y"], serde_json::json!(["0", "-1"]));
    assert_eq!(j["mode"], "exact");
}
