//! Quick invariant checks behind `rotdoa selftest`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::crlb::{crlb, crlb_aligned, crlb_initial};
use crate::estimator::estimate;
use crate::geometry::{restore_direction, rotate_direction, rotation_matrix, ArrayGeometry, Direction, Orientation};
use crate::pattern::{pattern_power_integral, PatternParams};
use crate::scalar::{deg, rad, wrapped_diff};
use crate::signal::{synthesize, SourceParams};

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, worst: f64, limit: f64) -> Check {
    Check {
        name,
        passed: worst <= limit,
        detail: format!("worst {worst:e}, limit {limit:e}"),
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs())
}

pub fn run_all(seed: u64) -> Vec<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let geom = ArrayGeometry::half_wavelength(6, 6, 0.125).expect("valid geometry");
    let mut out = Vec::new();

    let mut worst = 0.0f64;
    for _ in 0..200 {
        let d = Direction::new(rng.random_range(0.0..std::f64::consts::PI), rng.random_range(0.0..std::f64::consts::TAU));
        let o = rotation_matrix(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
        let back = restore_direction(&rotate_direction(&d, &o), &o);
        worst = worst.max((back - d.unit_vector()).amax());
        worst = worst.max((o.rotation.transpose() * o.rotation - nalgebra::Matrix3::identity()).amax());
    }
    out.push(check("frame round trip and orthogonality", worst, 1e-12));

    let mut worst = 0.0f64;
    for p in [0.0, 0.5, 1.0, 2.0] {
        let pp = PatternParams::new(p, 1.0, 1.0).expect("valid pattern");
        worst = worst.max(rel(pattern_power_integral(&pp, 2000, 8), 4.0 * std::f64::consts::PI));
    }
    out.push(check("pattern radiates like an isotropic element", worst, 1e-3));

    let mut worst = 0.0f64;
    let pp = PatternParams::new(1.0, geom.panel_area(), 250.0).expect("valid pattern");
    for i in 0..10 {
        let truth: Direction<f64> = Direction::new(rad(rng.random_range(10.0..170.0)), rad(rng.random_range(10.0..170.0)));
        let src = SourceParams::new(0.1, 1e-30, 20, i).expect("valid source");
        let block = synthesize(&geom, &pp, &truth, &Orientation::identity(), &src);
        match estimate(&block) {
            Ok(e) => {
                worst = worst.max(deg(e.theta_hat - truth.theta).abs());
                worst = worst.max(deg(wrapped_diff(e.phi_hat, truth.phi)).abs());
            }
            Err(_) => worst = f64::INFINITY,
        }
    }
    out.push(check("noiseless estimates within 0.01 deg", worst, 0.01));

    let mut worst = 0.0f64;
    let src = SourceParams::new(0.1, 1e-13, 100, 0).expect("valid source");
    for p in [0.0, 0.5, 1.0, 2.0] {
        let pp = PatternParams::new(p, geom.panel_area(), 250.0).expect("valid pattern");
        for _ in 0..10 {
            let d = Direction::new(rad(rng.random_range(20.0..160.0)), rad(rng.random_range(20.0..160.0)));
            if let (Ok(a), Ok(b)) = (
                crlb(&geom, &pp, &src, &d, &Orientation::identity()),
                crlb_initial(&geom, &pp, &src, &d),
            ) {
                worst = worst.max(rel(a.var_theta_lb, b.var_theta_lb)).max(rel(a.var_phi_lb, b.var_phi_lb));
            }
            let on = rotation_matrix(std::f64::consts::FRAC_PI_2 - d.theta, std::f64::consts::FRAC_PI_2 - d.phi);
            if let (Ok(a), Ok((t, f))) = (crlb(&geom, &pp, &src, &d, &on), crlb_aligned(&geom, &pp, &src, d.theta)) {
                worst = worst.max(rel(a.var_theta_lb, t)).max(rel(a.var_phi_lb, f));
            }
        }
    }
    out.push(check("bound special cases agree with the general form", worst, 1e-9));
    out
}
