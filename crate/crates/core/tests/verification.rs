use std::f64::consts::{FRAC_PI_2, PI};

use foliation_lab::chart::{Point, VectorFieldSpec};
use foliation_lab::foliation::JetFrame;
use foliation_lab::sampling::SamplingPlan;
use foliation_lab::scenario::{builtin, Scenario};
use foliation_lab::verification::{CheckRequest, Verifier};
use foliation_lab::Error;

fn plan() -> SamplingPlan {
    SamplingPlan::new(60, 7)
}

fn field(s: &Scenario, src: &[&str]) -> VectorFieldSpec {
    VectorFieldSpec::parse(&s.chart, src).unwrap()
}

#[test]
fn flat_torus_stability_density_has_closed_form() {
    // V = sin(x)∂z on flat T³: ∇V = cos(x) dx ⊗ ∂z, so both f_{V,V} and
    // |α_V|² equal cos²x pointwise.
    let s = builtin("S1").unwrap();
    let v = field(&s, &["0", "0", "sin(x)"]);
    let ver = Verifier::new(&s, plan()).unwrap();
    for p in ver.points() {
        let frame = JetFrame::new(&s.chart, &s.foliation, p).unwrap();
        let vb = frame.bot(&frame.field(&v).unwrap());
        let expected = p.coords[0].cos().powi(2);
        assert!((frame.f_vw(&vb, &vb) - expected).abs() < 1e-12);
        assert!((frame.alpha_inner(&vb, &vb) - expected).abs() < 1e-12);
    }
}

#[test]
fn lemmas_pass_where_hypotheses_hold() {
    for name in ["S1", "S5", "S5b"] {
        let s = builtin(name).unwrap();
        let ver = Verifier::new(&s, plan()).unwrap();
        let pairs = ver.random_pairs(1, 4);
        for rep in [ver.lemma2(&pairs, 1e-6).unwrap(), ver.lemma3(&pairs, 1e-6).unwrap()] {
            assert!(rep.pass && !rep.informational, "{name}: {}", rep.summary());
            assert_eq!(rep.samples, 60);
        }
    }
}

#[test]
fn lemma_on_hopf_fibration_is_informational() {
    // The horizontal distribution of the Hopf fibration is not integrable.
    let s = builtin("S4").unwrap();
    let ver = Verifier::new(&s, plan()).unwrap();
    assert!(!ver.hypotheses().integrable_perp);
    let rep = ver.lemma2(&ver.random_pairs(1, 2), 1e-6).unwrap();
    assert!(rep.informational);
    assert!(!rep.fails(false));
    assert_eq!(rep.fails(true), !rep.pass);
}

#[test]
fn killing_residual_of_a_conformal_stretch() {
    // L_X g = 2 cos(x) dx² for X = sin(x)∂x; its largest eigenvalue is 2|cos x|.
    let s = builtin("S1").unwrap();
    let ver = Verifier::new(&s, SamplingPlan::new(400, 3)).unwrap();
    let rep = ver.killing("sin(x)dx", &field(&s, &["sin(x)", "0", "0"]), 1e-6).unwrap();
    assert!(!rep.pass);
    assert!(rep.max_residual <= 2.0 + 1e-12 && rep.max_residual > 1.99, "{}", rep.max_residual);
    let top = &rep.worst_points[0];
    assert!((2.0 * top.coords[0].cos().abs() - top.residual).abs() < 1e-12);
    // Tangent to the leaves, it still preserves the foliation.
    assert!(ver.preserving("sin(x)dx", &field(&s, &["sin(x)", "0", "0"]), 1e-6).unwrap().pass);
}

#[test]
fn hopf_vertical_field_is_killing_and_preserving() {
    let s = builtin("S4").unwrap();
    let ver = Verifier::new(&s, plan()).unwrap();
    let k0 = &s.field("K0").unwrap().field;
    assert!(ver.killing("K0", k0, 1e-6).unwrap().pass);
    assert!(ver.preserving("K0", k0, 1e-6).unwrap().pass);
}

#[test]
fn preserving_residual_is_the_largest_alpha_on_an_orthonormal_frame() {
    // On S1 the spanning fields are orthonormal and D is integrable, so
    // [X, F_j]^⊥ = α_{X^⊥}(F_j).
    let s = builtin("S1").unwrap();
    let ver = Verifier::new(&s, plan()).unwrap();
    for (x, _) in ver.random_pairs(9, 3) {
        let rep = ver.preserving("random", &x, 1e-6).unwrap();
        let mut expected = 0.0f64;
        for p in ver.points() {
            let frame = JetFrame::new(&s.chart, &s.foliation, p).unwrap();
            let xb = frame.bot(&frame.field(&x).unwrap());
            for e in frame.tangent_frame() {
                expected = expected.max(frame.norm_values(&frame.alpha(&xb, e).values()));
            }
        }
        assert!((rep.max_residual - expected).abs() < 1e-12, "{} vs {expected}", rep.max_residual);
    }
}

#[test]
fn coordinate_field_along_the_leaves_has_zero_residuals() {
    let s = builtin("S1").unwrap();
    let ver = Verifier::new(&s, plan()).unwrap();
    let dx = field(&s, &["1", "0", "0"]);
    for rep in [ver.killing("dx", &dx, 1e-6).unwrap(), ver.preserving("dx", &dx, 1e-6).unwrap()] {
        assert_eq!(rep.max_residual, 0.0);
    }
}

#[test]
fn killing_transversal_fields_are_jacobi() {
    let s = builtin("S5b").unwrap();
    let ver = Verifier::new(&s, plan()).unwrap();
    for name in ["Y", "Z"] {
        let rep = ver.jacobi_field(name, &s.field(name).unwrap().field, 1e-6).unwrap();
        assert!(rep.pass && !rep.informational, "{}", rep.summary());
    }
}

#[test]
fn prop3_correction_vanishes_for_coordinate_foliations() {
    let s = builtin("S2").unwrap();
    let rep = Verifier::new(&s, plan()).unwrap().prop3(4, 1e-6).unwrap();
    assert!(rep.pass, "{}", rep.summary());
    assert!(rep.extras["max_correction"] < 1e-12);
    let s1 = builtin("S1").unwrap();
    assert!(matches!(Verifier::new(&s1, plan()).unwrap().prop3(4, 1e-6), Err(Error::Misuse(_))));
}

#[test]
fn transport_keeps_a_constant_normal_part() {
    // X = sin(z)∂z restricted to the leaf z = π/2 is the unit normal.
    let s = builtin("S1").unwrap();
    let ver = Verifier::new(&s, plan()).unwrap();
    let x = field(&s, &["0", "0", "sin(z)"]);
    let starts = [Point::new([0.3, 1.1, FRAC_PI_2]), Point::new([4.0, 2.5, FRAC_PI_2])];
    let rep = ver.prop4_from("sin(z)dz", &x, &starts, 2.0 * PI, 1e-8).unwrap();
    assert!(rep.extras["max_alpha"] < 1e-12);
    assert!((rep.extras["max_normal_part"] - 1.0).abs() < 1e-12);
    assert!(rep.worst_points.iter().all(|w| (w.residual - 1.0).abs() < 1e-12));
    assert!(rep.extras["max_speed_drift"] < 1e-10);
    assert!(rep.extras["max_leaf_drift"] < 1e-10);
}

#[test]
fn run_dispatches_and_reports_unknown_fields() {
    let s = builtin("S1").unwrap();
    let ver = Verifier::new(&s, plan()).unwrap().without_timestamps();
    let rep = ver.run(&CheckRequest::Minimality, None).unwrap();
    assert!(rep.pass && rep.wall_ms.is_none());
    assert_eq!(rep.tolerance, 1e-8);
    assert!(matches!(
        ver.run(&CheckRequest::Killing("nope".into()), None),
        Err(Error::UnknownItem { .. })
    ));
    for req in ver.standard_requests() {
        assert!(!ver.run(&req, None).unwrap().fails(false), "{req:?}");
    }
}
