use std::f64::consts::PI;

use foliation_lab::chart::VectorFieldSpec;
use foliation_lab::leaf::{integrate_leaf, leaf_volume, second_variation_direct, stability_report, VariationField};
use foliation_lab::scenario::builtin;

#[test]
fn flat_leaf_volume_and_integral() {
    let s = builtin("S1").unwrap();
    let leaf = s.leaf("z0").unwrap();
    assert!((leaf_volume(&s.chart, leaf).unwrap() - 4.0 * PI * PI).abs() < 1e-10);
    let i = integrate_leaf(&s.chart, leaf, |p| Ok(p.coords[0].cos().powi(2))).unwrap();
    assert!((i - 2.0 * PI * PI).abs() < 1e-10);
}

#[test]
fn zero_variation_has_zero_second_variation() {
    let s = builtin("S1").unwrap();
    let leaf = s.leaf("z0").unwrap().with_resolution(16);
    let r = second_variation_direct(&s.chart, &s.foliation, &leaf, &VariationField::zero("0", &s.chart), 1e-3).unwrap();
    assert_eq!(r.d2vol, 0.0);
    assert_eq!(r.i_f, 0.0);
}

#[test]
fn flat_torus_second_variation_matches_the_stability_integral() {
    // ∫ cos²x over the unit-speed leaf [0, 2π]² is 2π².
    let s = builtin("S1").unwrap();
    let leaf = s.leaf("z0").unwrap().with_resolution(32);
    let v = VariationField::new("V", VectorFieldSpec::parse(&s.chart, &["0", "0", "sin(x)"]).unwrap());
    let st = stability_report(&s.chart, &s.foliation, &leaf, &v).unwrap();
    assert!((st.i_f - 2.0 * PI * PI).abs() < 1e-10);
    assert!(st.stable && st.warnings.is_empty());
    let errs: Vec<f64> = [4e-3, 2e-3]
        .iter()
        .map(|&t| {
            let r = second_variation_direct(&s.chart, &s.foliation, &leaf, &v, t).unwrap();
            assert!((r.d2vol - 2.0 * PI * PI).abs() < 0.01 * 2.0 * PI * PI);
            (r.d2vol - r.i_f).abs()
        })
        .collect();
    let ratio = errs[0] / errs[1];
    assert!((3.5..4.5).contains(&ratio), "halving ratio {ratio}");
}

#[test]
fn non_minimal_leaves_carry_a_warning() {
    let s = builtin("S6").unwrap();
    let leaf = s.leaf("sphere").unwrap().with_resolution(16);
    let v = VariationField::new("Dr", s.field("Dr").unwrap().field.clone());
    let st = stability_report(&s.chart, &s.foliation, &leaf, &v).unwrap();
    assert!(st.warnings.iter().any(|w| w.contains("not minimal")), "{:?}", st.warnings);
}
