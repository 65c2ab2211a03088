use proptest::prelude::*;

use rotdoa::estimator::estimate;
use rotdoa::geometry::{restore_direction, rotate_direction, rotation_matrix, ArrayGeometry, Direction, Orientation};
use rotdoa::harness::mse::{fixed_estimate, mse_of, rotating_runs};
use rotdoa::harness::{worker_pool, ExperimentConfig};
use rotdoa::pattern::PatternParams;
use rotdoa::rotation_loop::{estimate_at, rotation_update, run, Scenario};
use rotdoa::scalar::{deg, wrapped_diff};
use rotdoa::signal::{synthesize, SourceParams};

fn geom() -> ArrayGeometry<f64> {
    ArrayGeometry::half_wavelength(6, 6, 0.125).unwrap()
}

fn noiseless(theta_deg: f64, phi_deg: f64) -> Scenario<f64> {
    let g = geom();
    Scenario {
        geom: g,
        pattern: PatternParams::new(1.0, g.panel_area(), 250.0).unwrap(),
        truth: Direction::from_degrees(theta_deg, phi_deg),
        source: SourceParams::new(0.1, 1e-30, 50, 3).unwrap(),
    }
}

fn cfg_scenario(cfg: &ExperimentConfig, theta_deg: f64, snr_db: f64, seed: u64) -> Scenario<f64> {
    let pattern = cfg.pattern().unwrap();
    Scenario {
        geom: cfg.geometry().unwrap(),
        pattern,
        truth: Direction::from_degrees(theta_deg, cfg.phi_deg),
        source: cfg.source_at_snr(&pattern, snr_db, seed).unwrap(),
    }
}

proptest! {
    #[test]
    fn frame_round_trip(t in 0.0..std::f64::consts::PI, p in -7.0..7.0f64, dt in -4.0..4.0f64, dp in -4.0..4.0f64) {
        let d = Direction::new(t, p);
        let o = rotation_matrix(dt, dp);
        let back = restore_direction(&rotate_direction(&d, &o), &o);
        prop_assert!((back - d.unit_vector()).amax() <= 1e-12);
        prop_assert!((o.rotation.transpose() * o.rotation - nalgebra::Matrix3::identity()).amax() <= 1e-12);
        prop_assert!((o.rotation.determinant() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn update_puts_estimate_on_boresight(
        t in 0.05..3.09f64, p in 0.0..std::f64::consts::TAU,
        dt in -1.0..1.0f64, dp in -1.0..1.0f64,
    ) {
        let o = rotation_matrix(dt, dp);
        let local = Direction::new(t, p);
        let next = o.then(&rotation_update(&local));
        let world = o.to_world_frame(&local.unit_vector());
        prop_assert!((next.boresight() - world).amax() <= 1e-12);
        prop_assert!((next.rotation.transpose() * next.rotation - nalgebra::Matrix3::identity()).amax() <= 1e-12);
    }

    #[test]
    fn composed_orientation_matches_sequential_frames(
        a in -1.5..1.5f64, b in -3.0..3.0f64, c in -1.5..1.5f64, d in -3.0..3.0f64,
        t in 0.0..std::f64::consts::PI, p in 0.0..std::f64::consts::TAU,
    ) {
        let first = rotation_matrix(a, b);
        let step = rotation_matrix(c, d);
        let v = Direction::new(t, p).unit_vector();
        let composed = first.then(&step).to_array_frame(&v);
        let sequential = step.to_array_frame(&first.to_array_frame(&v));
        prop_assert!((composed - sequential).amax() <= 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn estimate_is_scale_and_order_invariant(
        t in 20.0..160.0f64, p in 20.0..160.0f64, scale in 1e-3..1e3f64, seed in 0u64..1000,
    ) {
        let g = geom();
        let pat = PatternParams::new(1.0, g.panel_area(), 250.0).unwrap();
        let src = SourceParams::new(0.1, 1e-8, 40, seed).unwrap();
        let block = synthesize(&g, &pat, &Direction::from_degrees(t, p), &Orientation::identity(), &src);
        let base = estimate(&block).unwrap();

        let mut scaled = block.clone();
        scaled.data *= nalgebra::Complex::new(scale, 0.0);
        let s = estimate(&scaled).unwrap();
        prop_assert!((s.theta_hat - base.theta_hat).abs() <= 1e-9);
        prop_assert!(wrapped_diff(s.phi_hat, base.phi_hat).abs() <= 1e-9);

        let mut shuffled = block.clone();
        let n = shuffled.data.ncols();
        for k in 0..n {
            shuffled.data.set_column(k, &block.data.column(n - 1 - k));
        }
        let r = estimate(&shuffled).unwrap();
        prop_assert!((r.theta_hat - base.theta_hat).abs() <= 1e-9);
        prop_assert!(wrapped_diff(r.phi_hat, base.phi_hat).abs() <= 1e-9);
    }

    #[test]
    fn noiseless_runs_settle_and_stay_consistent(t in 10.0..170.0f64, p in 10.0..170.0f64) {
        let s = noiseless(t, p);
        let opts = ExperimentConfig::default().loop_options();
        let res = run(&s, &Orientation::identity(), &opts).unwrap();
        prop_assert!(res.converged);
        prop_assert!(res.iterations_used <= opts.max_iterations);
        let last = res.history.last().unwrap();
        prop_assert!(deg((last.world.theta - s.truth.theta).abs()) <= 0.01);
        prop_assert!(deg(wrapped_diff(last.world.phi, s.truth.phi).abs()) <= 0.01);
        for w in res.history.windows(2).skip(1) {
            prop_assert!(w[1].deflection <= w[0].deflection + 1e-9);
        }
        for r in &res.history {
            let back = r.orientation.to_world_frame(&r.local.unit_vector());
            prop_assert!((back - r.world.unit_vector()).amax() <= 1e-10);
            let recomputed = rotdoa::geometry::deflection_angle(&s.truth, &r.orientation);
            prop_assert!((recomputed - r.deflection).abs() <= 1e-12);
        }
        let n = res.history.len();
        let (a, b) = (&res.history[n - 2], &res.history[n - 1]);
        prop_assert!(deg((a.world.theta - b.world.theta).abs()) <= 0.01);
        prop_assert!(deg(wrapped_diff(a.world.phi, b.world.phi).abs()) <= 0.01);
    }
}

#[test]
fn converged_runs_stay_put_for_one_more_rotation() {
    let cfg = ExperimentConfig::default();
    let opts = cfg.loop_options();
    let pool = worker_pool(None).unwrap();
    let eps = 2.0 * opts.epsilon;
    for snr in [0.0, 10.0] {
        let s = cfg_scenario(&cfg, 45.0, snr, 77);
        let runs = rotating_runs(&pool, &s, &Orientation::identity(), &opts, 100);
        let (mut converged, mut stable) = (0, 0);
        for (l, r) in runs.iter().enumerate() {
            let Some(r) = r.as_ref().filter(|r| r.converged) else { continue };
            converged += 1;
            let last = r.history.last().unwrap();
            let next = last.orientation.then(&rotation_update(&last.local));
            let trial = Scenario {
                source: s.source.with_seed(rotdoa::harness::mse::trial_seed(s.source.seed, l)),
                ..s
            };
            let local = estimate_at(&trial, &next, last.index + 1, &opts).unwrap();
            let world = Direction::from_vector(&next.to_world_frame(&local.unit_vector()));
            if (world.theta - last.world.theta).abs() <= eps && wrapped_diff(world.phi, last.world.phi).abs() <= eps {
                stable += 1;
            }
        }
        assert!(converged >= 95, "snr {snr}: {converged} converged");
        assert!(stable as f64 >= 0.95 * converged as f64, "snr {snr}: {stable}/{converged} stable");
    }
}

#[test]
fn single_shot_mse_falls_with_snr() {
    let cfg = ExperimentConfig::default();
    let opts = cfg.loop_options();
    let id = Orientation::identity();
    let mut prev = (f64::INFINITY, f64::INFINITY);
    for snr in [10.0, 20.0, 30.0] {
        let s = cfg_scenario(&cfg, 60.0, snr, 5);
        let est: Vec<_> = (0..200)
            .map(|l| {
                let trial = Scenario {
                    source: s.source.with_seed(l),
                    ..s
                };
                fixed_estimate(&trial, &id, &opts)
            })
            .collect();
        let m = mse_of(&s.truth, &est);
        assert_eq!(m.trials_valid, 200);
        assert!(m.mse_theta <= prev.0 && m.mse_phi <= prev.1, "snr {snr}: {m:?} after {prev:?}");
        prev = (m.mse_theta, m.mse_phi);
    }
}

#[test]
fn single_and_double_precision_agree_without_noise() {
    let g32 = ArrayGeometry::<f32>::half_wavelength(6, 6, 0.125).unwrap();
    let pat = PatternParams::<f32>::new(1.0, g32.panel_area(), 250.0).unwrap();
    let src = SourceParams::<f32>::new(0.1, 1e-20, 40, 9).unwrap();
    let truth = Direction::<f32>::from_degrees(50.0, 70.0);
    let e32 = estimate(&synthesize(&g32, &pat, &truth, &Orientation::identity(), &src)).unwrap();
    let s = noiseless(50.0, 70.0);
    let e64 = estimate(&synthesize(&s.geom, &s.pattern, &s.truth, &Orientation::identity(), &s.source)).unwrap();
    assert!((deg(e32.theta_hat as f64) - deg(e64.theta_hat)).abs() < 0.02);
    assert!((deg(e32.phi_hat as f64) - deg(e64.phi_hat)).abs() < 0.02);
}
