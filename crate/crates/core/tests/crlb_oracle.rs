mod common;

use approx::assert_relative_eq;
use common::{default_geometry, fim_oracle_worst, numeric_fim};
use rotdoa::crlb::{crlb, crlb_aligned, crlb_initial, fim_entries};
use rotdoa::geometry::{rotation_matrix, Direction, Orientation};
use rotdoa::pattern::PatternParams;
use rotdoa::rotation_loop::rotation_update;
use rotdoa::signal::SourceParams;

#[test]
fn fim_matches_finite_differences_on_random_draws() {
    let worst = fim_oracle_worst(100, 11);
    assert!(worst <= 1e-4, "worst relative error {worst:e}");
}

#[test]
fn fim_matches_finite_differences_at_initial_attitude() {
    let geom = default_geometry();
    let src = SourceParams::new(0.1, 1e-13, 100, 0).unwrap();
    for p in [0.0, 1.0, 2.0] {
        let pat = PatternParams::new(p, geom.panel_area(), 250.0).unwrap();
        for (t, f) in [(75.0, 90.0), (45.0, 60.0), (15.0, 120.0)] {
            let d = Direction::from_degrees(t, f);
            let id = Orientation::identity();
            let e = fim_entries(&geom, &pat, &src, &d, &id).unwrap();
            let (np, _, nr) = numeric_fim(&geom, &pat, &src, &d, &id, 1e-6);
            assert_relative_eq!(e.p, np, max_relative = 1e-5);
            assert_relative_eq!(e.r, nr, max_relative = 1e-5);
        }
    }
}

#[test]
fn closed_forms_agree_with_inversion() {
    let geom = default_geometry();
    let src = SourceParams::new(0.1, 1e-12, 50, 0).unwrap();
    let pat = PatternParams::new(1.0, geom.panel_area(), 250.0).unwrap();
    let d = Direction::from_degrees(60.0, 70.0);
    let a = crlb(&geom, &pat, &src, &d, &Orientation::identity()).unwrap();
    let b = crlb_initial(&geom, &pat, &src, &d).unwrap();
    assert_relative_eq!(a.var_theta_lb, b.var_theta_lb, max_relative = 1e-9);
    assert_relative_eq!(a.var_phi_lb, b.var_phi_lb, max_relative = 1e-9);

    // exact alignment through the update rule
    let o = rotation_update(&d);
    let c = crlb(&geom, &pat, &src, &d, &o).unwrap();
    let (vt, vp) = crlb_aligned(&geom, &pat, &src, d.theta).unwrap();
    assert_relative_eq!(c.var_theta_lb, vt, max_relative = 1e-6);
    assert_relative_eq!(c.var_phi_lb, vp, max_relative = 1e-6);
}

#[test]
fn rotation_towards_emitter_never_loosens_the_bound() {
    let geom = default_geometry();
    let src = SourceParams::new(0.1, 1e-12, 100, 0).unwrap();
    let pat = PatternParams::new(1.0, geom.panel_area(), 250.0).unwrap();
    for t in [15.0, 45.0, 75.0] {
        let d = Direction::from_degrees(t, 90.0);
        let fixed = crlb(&geom, &pat, &src, &d, &Orientation::identity()).unwrap();
        let half = rotation_matrix((90.0f64 - t).to_radians() / 2.0, 0.0);
        let mid = crlb(&geom, &pat, &src, &d, &half).unwrap();
        let (vt, _) = crlb_aligned(&geom, &pat, &src, d.theta).unwrap();
        assert!(vt <= mid.var_theta_lb * (1.0 + 1e-12));
        assert!(mid.var_theta_lb <= fixed.var_theta_lb * (1.0 + 1e-12));
    }
}
