//! Desk-scale acceptance run. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any criterion fails.

mod common;

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rotdoa::estimator::estimate;
use rotdoa::geometry::{restore_direction, rotate_direction, rotation_matrix, Direction, Orientation};
use rotdoa::harness::{worker_pool, write_outputs, ExperimentConfig, ExperimentKind, Table};
use rotdoa::pattern::{pattern_power_integral, PatternParams};
use rotdoa::scalar::{deg, wrapped_diff};
use rotdoa::signal::{synthesize, SourceParams};

const TRIALS: usize = 200;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn fim_oracle() -> Outcome {
    let worst = common::fim_oracle_worst(100, 2024);
    outcome(worst <= 1e-4, format!("worst relative error {worst:.2e} over 100 draws (limit 1e-4)"))
}

fn pattern_normalization() -> Outcome {
    let mut worst = 0.0f64;
    for p in [0.0, 0.5, 1.0, 2.0] {
        let pp = PatternParams::new(p, 1.0, 1.0).unwrap();
        let v = pattern_power_integral(&pp, 4000, 16);
        worst = worst.max((v / (4.0 * std::f64::consts::PI) - 1.0).abs());
    }
    outcome(worst <= 1e-3, format!("worst relative deviation from 4pi {worst:.2e} (limit 1e-3)"))
}

fn noiseless_exactness() -> Outcome {
    let geom = common::default_geometry();
    let pp = PatternParams::new(1.0, geom.panel_area(), 250.0).unwrap();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
    let (mut worst_truth, mut worst_oracle) = (0.0f64, 0.0f64);
    for i in 0..50 {
        let truth = Direction::<f64>::from_degrees(rng.random_range(10.0..170.0), rng.random_range(10.0..170.0));
        let src = SourceParams::new(0.1, 1e-30, 100, i).unwrap();
        let block = synthesize(&geom, &pp, &truth, &Orientation::identity(), &src);
        let Ok(e) = estimate(&block) else {
            return outcome(false, format!("estimator failed at {truth:?}"));
        };
        worst_truth = worst_truth
            .max(deg(e.theta_hat - truth.theta).abs())
            .max(deg(wrapped_diff(e.phi_hat, truth.phi)).abs());
        let (ot, op) = common::BruteMusic::new(&block.data, &geom).grid_search(0.001f64.to_radians());
        worst_oracle = worst_oracle
            .max(deg(e.theta_hat - ot).abs())
            .max(deg(wrapped_diff(e.phi_hat, op)).abs());
    }
    outcome(
        worst_truth <= 0.01 && worst_oracle <= 0.01,
        format!("worst error vs truth {worst_truth:.2e} deg, vs grid oracle {worst_oracle:.2e} deg (limit 0.01)"),
    )
}

fn config() -> ExperimentConfig {
    ExperimentConfig {
        trials: TRIALS,
        ..ExperimentConfig::default()
    }
}

fn rows(t: &Table) -> impl Iterator<Item = usize> + '_ {
    0..t.rows.len()
}

fn convergence_counts(summary: &Table) -> Outcome {
    let median_at = |snr: f64| {
        rows(summary)
            .find(|&r| summary.value(r, "theta_deg") == Some(15.0) && summary.value(r, "snr_db") == Some(snr))
            .and_then(|r| summary.value(r, "median_iterations"))
            .unwrap_or(f64::NAN)
    };
    let (low, high) = (median_at(-10.0), median_at(30.0));
    outcome(
        low <= 15.0 && high <= 2.0,
        format!("theta 15 deg median iterations: {low} at -10 dB (limit 15), {high} at 30 dB (limit 2)"),
    )
}

fn crlb_ordering(summary: &Table) -> Outcome {
    let (mut lowest, mut worst_high) = (f64::INFINITY, 0.0f64);
    for r in rows(summary) {
        for axis in ["theta", "phi"] {
            let mse = summary.value(r, &format!("final_mse_{axis}")).unwrap_or(f64::NAN);
            let bound = summary.value(r, &format!("crlb_aligned_{axis}")).unwrap_or(f64::NAN);
            let ratio = mse / bound;
            lowest = lowest.min(if ratio.is_nan() { f64::NEG_INFINITY } else { ratio });
            if summary.value(r, "snr_db") == Some(30.0) {
                worst_high = worst_high.max(if ratio.is_nan() { f64::INFINITY } else { ratio });
            }
        }
    }
    outcome(
        lowest >= 0.5 && worst_high <= 10.0,
        format!("final MSE / CRLB: minimum {lowest:.3} (limit 0.5), maximum at 30 dB {worst_high:.3} (limit 10)"),
    )
}

fn rotation_gain() -> Outcome {
    let mut cfg = config();
    cfg.theta_sweep.transmit_power_dbm = vec![20.0];
    let pool = worker_pool(Some(8)).unwrap();
    let tables = match ExperimentKind::ThetaSweep.run(&cfg, &pool) {
        Ok(t) => t,
        Err(e) => return outcome(false, e.to_string()),
    };
    let t = &tables[0];
    let Some(r) = rows(t).find(|&r| t.value(r, "theta_deg") == Some(15.0)) else {
        return outcome(false, "theta 15 deg missing from sweep".into());
    };
    let fixed = t.value(r, "mse_fixed_theta").unwrap_or(f64::NAN);
    let rr = t.value(r, "mse_rr_theta").unwrap_or(f64::NAN);
    let ratio = fixed / rr;
    outcome(
        ratio >= 1e4,
        format!("theta 15 deg, 20 dBm: fixed {fixed:.3e} deg2, rotating {rr:.3e} deg2, ratio {ratio:.1} (limit 1e4)"),
    )
}

fn frame_round_trip() -> Outcome {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
    let (mut worst_rt, mut worst_orth) = (0.0f64, 0.0f64);
    for _ in 0..1000 {
        let d = Direction::new(
            rng.random_range(0.0..std::f64::consts::PI),
            rng.random_range(0.0..std::f64::consts::TAU),
        );
        let o = rotation_matrix(rng.random_range(-3.2..3.2), rng.random_range(-3.2..3.2));
        worst_rt = worst_rt.max((restore_direction(&rotate_direction(&d, &o), &o) - d.unit_vector()).amax());
        worst_orth = worst_orth.max((o.rotation.transpose() * o.rotation - nalgebra::Matrix3::identity()).amax());
    }
    outcome(
        worst_rt <= 1e-12 && worst_orth <= 1e-12,
        format!("worst round trip {worst_rt:.1e}, worst orthogonality {worst_orth:.1e} (limit 1e-12)"),
    )
}

fn csv_bytes(cfg: &ExperimentConfig, workers: usize) -> rotdoa::Result<(Vec<Vec<u8>>, Vec<Table>)> {
    let pool = worker_pool(Some(workers))?;
    let tables = ExperimentKind::Convergence.run(cfg, &pool)?;
    let dir = tempfile::tempdir()?;
    let paths = write_outputs(dir.path(), "convergence", cfg, &tables, Some(workers), 0.0)?;
    let bytes = paths
        .iter()
        .filter(|p| p.extension().is_some_and(|e| e == "csv"))
        .map(std::fs::read)
        .collect::<std::io::Result<Vec<_>>>()?;
    Ok((bytes, tables))
}

fn main() {
    let mut results: Vec<(&str, Outcome, f64)> = Vec::new();
    let mut timed = |name: &'static str, f: &mut dyn FnMut() -> Outcome| {
        let start = Instant::now();
        let o = f();
        let secs = start.elapsed().as_secs_f64();
        println!("{} criterion {name}: {} [{secs:.1} s]", if o.passed { "PASS" } else { "FAIL" }, o.detail);
        results.push((name, o, secs));
    };

    timed("1 fim oracle", &mut fim_oracle);
    timed("2 pattern normalization", &mut pattern_normalization);
    timed("3 noiseless exactness", &mut noiseless_exactness);

    let cfg = config();
    let start = Instant::now();
    let eight = csv_bytes(&cfg, 8);
    let secs = start.elapsed().as_secs_f64();
    match &eight {
        Ok((_, tables)) => {
            let summary = &tables[1];
            timed("4 convergence counts", &mut || convergence_counts(summary));
            timed("6 crlb ordering", &mut || crlb_ordering(summary));
        }
        Err(e) => {
            let msg = e.to_string();
            timed("4 convergence counts", &mut || outcome(false, msg.clone()));
            timed("6 crlb ordering", &mut || outcome(false, msg.clone()));
        }
    }
    println!("  (convergence experiment, {TRIALS} trials, 8 workers: {secs:.1} s)");

    timed("5 rotation gain", &mut rotation_gain);
    timed("7 frame round trip", &mut frame_round_trip);
    timed("8 determinism", &mut || match (&eight, csv_bytes(&cfg, 1)) {
        (Ok((a, _)), Ok((b, _))) => outcome(
            !a.is_empty() && a == &b,
            format!("{} csv files, 1 vs 8 workers byte-identical: {}", a.len(), a == &b),
        ),
        (Err(e), _) => outcome(false, e.to_string()),
        (_, Err(e)) => outcome(false, e.to_string()),
    });

    let failed: Vec<_> = results.iter().filter(|r| !r.1.passed).map(|r| r.0).collect();
    println!(
        "acceptance: {} passed, {} failed",
        results.len() - failed.len(),
        failed.len()
    );
    if !failed.is_empty() {
        println!("failed: {}", failed.join(", "));
        std::process::exit(1);
    }
}
