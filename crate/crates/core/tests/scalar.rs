use hypcert::cocycle::nue_certificate;
use hypcert::periodic::find_periodic_points;
use hypcert::{Model, Model32, Point32};

#[test]
fn f32_doubling_matches_f64() {
    let set32 = find_periodic_points(&Model32::doubling(), 6).unwrap();
    let set64 = find_periodic_points(&Model::doubling(), 6).unwrap();
    assert!(set32.is_complete(), "{:?}", set32.gaps.first());
    for n in 1..=6 {
        assert_eq!(set32.fixed_point_count(n), (1 << n) - 1);
    }
    assert_eq!(set32.orbits.len(), set64.orbits.len());
    let c32 = nue_certificate(&set32.orbits).unwrap();
    let c64 = nue_certificate(&set64.orbits).unwrap();
    assert!((c32.varsigma as f64 - c64.varsigma).abs() < 1e-6);
}

#[test]
fn f32_cat_step() {
    let a = Model32::cat_map();
    let p = a.eval(&Point32::torus(0.25, 0.5));
    assert!((p.x() - 0.0).abs() < 1e-6 && (p.y() - 0.75).abs() < 1e-6);
}
