//! The four experiment families. Each returns its tables; writing them is
//! left to [`super::output`].
//!
//! Seeding: experiment `e`, scenario point `i` and trial `l` use
//! `child(child(child(master, e), i), l)`. Fixed and rotating methods at the
//! same point share trial seeds.

use rayon::ThreadPool;
use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::mse::{
    crlb_aligned_deg2, crlb_deg2, fixed_estimate, median, mse_of, rotating_runs, run_mse, run_trials, squared_errors,
    Method,
};
use super::output::{num, opt, Table};
use crate::error::Result;
use crate::geometry::{rotation_matrix, Direction, Orientation};
use crate::pattern::channel_gain;
use crate::rotation_loop::{run, Scenario};
use crate::scalar::deg;
use crate::seed::child_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Convergence,
    ThetaSweep,
    UavPath,
    DeflectionSweep,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 4] = [
        ExperimentKind::Convergence,
        ExperimentKind::ThetaSweep,
        ExperimentKind::UavPath,
        ExperimentKind::DeflectionSweep,
    ];

    /// File-name stem.
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::Convergence => "convergence",
            ExperimentKind::ThetaSweep => "theta_sweep",
            ExperimentKind::UavPath => "uav_path",
            ExperimentKind::DeflectionSweep => "deflection_sweep",
        }
    }

    fn tag(&self) -> u64 {
        match self {
            ExperimentKind::Convergence => 1,
            ExperimentKind::ThetaSweep => 2,
            ExperimentKind::UavPath => 3,
            ExperimentKind::DeflectionSweep => 4,
        }
    }

    pub fn run(&self, cfg: &ExperimentConfig, pool: &ThreadPool) -> Result<Vec<Table>> {
        match self {
            ExperimentKind::Convergence => experiment_convergence(cfg, pool),
            ExperimentKind::ThetaSweep => experiment_theta_sweep(cfg, pool),
            ExperimentKind::UavPath => experiment_uav_path(cfg, pool),
            ExperimentKind::DeflectionSweep => experiment_deflection_sweep(cfg, pool),
        }
    }
}

fn point_seed(cfg: &ExperimentConfig, kind: ExperimentKind, index: usize) -> u64 {
    child_seed(child_seed(cfg.master_seed, kind.tag()), index as u64)
}

fn element_snr_db(s: &Scenario<f64>, orient: &Orientation<f64>) -> f64 {
    let g = channel_gain(&s.pattern, &s.truth, orient);
    let db = 10.0 * (g * g * s.source.transmit_power / s.source.noise_power).log10();
    if db.is_finite() {
        db
    } else {
        f64::NAN
    }
}

/// MSE per rotation index for the rotating loop, plus a per-point summary.
///
/// Runs that stop early keep contributing their final estimate to later
/// iteration rows. The `_l1` columns follow trial 0 alone.
pub fn experiment_convergence(cfg: &ExperimentConfig, pool: &ThreadPool) -> Result<Vec<Table>> {
    let geom = cfg.geometry()?;
    let pattern = cfg.pattern()?;
    let opts = cfg.loop_options();
    let id = Orientation::identity();
    let mut main = Table::new(
        "main",
        &[
            "theta_deg",
            "phi_deg",
            "snr_db",
            "iteration",
            "mse_theta",
            "mse_phi",
            "mse_theta_l1",
            "mse_phi_l1",
            "crlb_fixed_theta",
            "crlb_fixed_phi",
            "crlb_aligned_theta",
            "crlb_aligned_phi",
            "converged_fraction",
            "trials_valid",
        ],
    );
    let mut summary = Table::new(
        "summary",
        &[
            "theta_deg",
            "phi_deg",
            "snr_db",
            "median_iterations",
            "mean_iterations",
            "converged_fraction",
            "fixed_mse_theta",
            "fixed_mse_phi",
            "final_mse_theta",
            "final_mse_phi",
            "crlb_fixed_theta",
            "crlb_fixed_phi",
            "crlb_aligned_theta",
            "crlb_aligned_phi",
            "trials_valid",
            "degenerate",
        ],
    );
    let mut index = 0;
    for &theta in &cfg.convergence.theta_deg {
        for &snr in &cfg.convergence.snr_db {
            let seed = point_seed(cfg, ExperimentKind::Convergence, index);
            index += 1;
            let s = Scenario {
                geom,
                pattern,
                truth: Direction::from_degrees(theta, cfg.phi_deg),
                source: cfg.source_at_snr(&pattern, snr, seed)?,
            };
            let runs = rotating_runs(pool, &s, &id, &opts, cfg.trials);
            let (cft, cfp) = crlb_deg2(&s, &id);
            let (cat, cap) = crlb_aligned_deg2(&s);
            let depth = runs.iter().flatten().map(|r| r.history.len()).max().unwrap_or(0);
            let valid: Vec<_> = runs.iter().flatten().collect();
            for i in 0..depth {
                let est: Vec<_> = runs
                    .iter()
                    .map(|r| r.as_ref().map(|r| r.history[i.min(r.history.len() - 1)].world))
                    .collect();
                let stats = mse_of(&s.truth, &est);
                let l1 = est[0].map(|e| squared_errors(&s.truth, &e));
                let done = valid.iter().filter(|r| r.converged && r.iterations_used <= i).count();
                main.push(vec![
                    num(theta),
                    num(cfg.phi_deg),
                    num(snr),
                    i.to_string(),
                    num(stats.mse_theta),
                    num(stats.mse_phi),
                    opt(l1.map(|v| v.0)),
                    opt(l1.map(|v| v.1)),
                    num(cft),
                    num(cfp),
                    num(cat),
                    num(cap),
                    num(done as f64 / valid.len().max(1) as f64),
                    stats.trials_valid.to_string(),
                ]);
            }
            let first: Vec<_> = runs.iter().map(|r| r.as_ref().map(|r| r.history[0].world)).collect();
            let last: Vec<_> = runs.iter().map(|r| r.as_ref().map(|r| r.final_estimate())).collect();
            let fixed = mse_of(&s.truth, &first);
            let fin = mse_of(&s.truth, &last);
            let mut its: Vec<f64> = valid.iter().map(|r| r.iterations_used as f64).collect();
            let mean_its = if its.is_empty() {
                f64::NAN
            } else {
                its.iter().sum::<f64>() / its.len() as f64
            };
            let conv = valid.iter().filter(|r| r.converged).count() as f64 / valid.len().max(1) as f64;
            summary.push(vec![
                num(theta),
                num(cfg.phi_deg),
                num(snr),
                opt(median(&mut its)),
                num(mean_its),
                num(conv),
                num(fixed.mse_theta),
                num(fixed.mse_phi),
                num(fin.mse_theta),
                num(fin.mse_phi),
                num(cft),
                num(cfp),
                num(cat),
                num(cap),
                fin.trials_valid.to_string(),
                fin.degenerate.to_string(),
            ]);
        }
    }
    Ok(vec![main, summary])
}

const COMPARE_COLUMNS: [&str; 13] = [
    "element_snr_fixed_db",
    "mse_fixed_theta",
    "mse_fixed_phi",
    "mse_rr_theta",
    "mse_rr_phi",
    "crlb_fixed_theta",
    "crlb_fixed_phi",
    "crlb_aligned_theta",
    "crlb_aligned_phi",
    "valid_fixed",
    "valid_rr",
    "median_iterations",
    "degenerate",
];

fn header(prefix: &[&'static str]) -> Vec<&'static str> {
    prefix.iter().copied().chain(COMPARE_COLUMNS).collect()
}

/// Fixed vs rotating MSE and both bounds at one point, in [`COMPARE_COLUMNS`] order.
fn compare_point(cfg: &ExperimentConfig, pool: &ThreadPool, s: &Scenario<f64>) -> Vec<String> {
    let opts = cfg.loop_options();
    let id = Orientation::identity();
    let fixed = run_mse(pool, s, &id, Method::Fixed, &opts, cfg.trials);
    let rr = run_mse(pool, s, &id, Method::Rotating, &opts, cfg.trials);
    vec![
        num(element_snr_db(s, &id)),
        num(fixed.stats.mse_theta),
        num(fixed.stats.mse_phi),
        num(rr.stats.mse_theta),
        num(rr.stats.mse_phi),
        num(fixed.crlb_theta),
        num(fixed.crlb_phi),
        num(rr.crlb_theta),
        num(rr.crlb_phi),
        fixed.stats.trials_valid.to_string(),
        rr.stats.trials_valid.to_string(),
        opt(rr.median_iterations),
        (fixed.stats.degenerate || rr.stats.degenerate).to_string(),
    ]
}

/// Fixed single-shot vs rotating loop over elevation, for each transmit
/// power, at the configured noise power.
pub fn experiment_theta_sweep(cfg: &ExperimentConfig, pool: &ThreadPool) -> Result<Vec<Table>> {
    let geom = cfg.geometry()?;
    let pattern = cfg.pattern()?;
    let mut t = Table::new("main", &header(&["transmit_power_dbm", "theta_deg", "phi_deg"]));
    let mut index = 0;
    for &pt in &cfg.theta_sweep.transmit_power_dbm {
        let c = ExperimentConfig {
            transmit_power_dbm: pt,
            ..cfg.clone()
        };
        for &theta in &cfg.theta_sweep.theta_deg {
            let seed = point_seed(cfg, ExperimentKind::ThetaSweep, index);
            index += 1;
            let s = Scenario {
                geom,
                pattern,
                truth: Direction::from_degrees(theta, cfg.phi_deg),
                source: c.source(seed)?,
            };
            let mut row = vec![num(pt), num(theta), num(cfg.phi_deg)];
            row.extend(compare_point(cfg, pool, &s));
            t.push(row);
        }
    }
    Ok(vec![t])
}

/// Waypoint `w` of `count` on the semicircle in the y–z plane from `−y`
/// over the zenith to `+y`; returns the elevation of the path point and its
/// direction.
pub fn uav_waypoint(w: usize, count: usize) -> (f64, Direction<f64>) {
    let psi = 180.0 * w as f64 / (count - 1) as f64;
    let (s, c) = psi.to_radians().sin_cos();
    (psi, Direction::from_vector(&nalgebra::Vector3::new(0.0, -c, s)))
}

fn angle_sq(truth: &Direction<f64>, est: &Direction<f64>) -> f64 {
    let c = truth.unit_vector().dot(&est.unit_vector()).clamp(-1.0, 1.0);
    deg(c.acos()).powi(2)
}

fn mean_of(v: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = v.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        f64::NAN
    } else {
        s / n as f64
    }
}

/// Emitter flying a semicircle around the array. The fixed array faces `+y`
/// and sees nothing while the emitter is behind it. The rotating array
/// starts facing the first waypoint and carries its attitude from one
/// waypoint to the next within a trial.
pub fn experiment_uav_path(cfg: &ExperimentConfig, pool: &ThreadPool) -> Result<Vec<Table>> {
    let geom = cfg.geometry()?;
    let opts = cfg.loop_options();
    let id = Orientation::identity();
    let count = cfg.uav_path.waypoints;
    let mut t = Table::new(
        "main",
        &[
            "radius_m",
            "waypoint",
            "path_angle_deg",
            "theta_deg",
            "phi_deg",
            "element_snr_fixed_db",
            "mse_fixed_theta",
            "mse_fixed_phi",
            "mse_fixed_angle",
            "mse_rr_theta",
            "mse_rr_phi",
            "mse_rr_angle",
            "crlb_fixed_theta",
            "crlb_fixed_phi",
            "crlb_aligned_theta",
            "crlb_aligned_phi",
            "valid_fixed",
            "valid_rr",
            "median_iterations",
        ],
    );
    for (ri, &radius) in cfg.uav_path.radii_m.iter().enumerate() {
        let pattern = cfg.pattern_with(cfg.p, radius)?;
        let base = point_seed(cfg, ExperimentKind::UavPath, ri);
        let scenario_at = |w: usize, seed: u64| -> Result<Scenario<f64>> {
            Ok(Scenario {
                geom,
                pattern,
                truth: uav_waypoint(w, count).1,
                source: cfg.source(seed)?,
            })
        };
        // one sequential flight per trial
        let flights = run_trials(pool, base, cfg.trials, |_, seed| {
            let mut orient = rotation_matrix(0.0, std::f64::consts::PI);
            let mut out = Vec::with_capacity(count);
            for w in 0..count {
                let s = match scenario_at(w, child_seed(seed, w as u64)) {
                    Ok(s) => s,
                    Err(_) => {
                        out.push(None);
                        continue;
                    }
                };
                match run(&s, &orient, &opts) {
                    Ok(r) => {
                        orient = r.final_orientation();
                        out.push(Some((r.final_estimate(), r.iterations_used)));
                    }
                    Err(_) => out.push(None),
                }
            }
            out
        });
        for w in 0..count {
            let (psi, truth) = uav_waypoint(w, count);
            let s = scenario_at(w, child_seed(base, (count + w) as u64))?;
            let fixed = run_trials(pool, s.source.seed, cfg.trials, |_, seed| {
                let st = Scenario {
                    source: s.source.with_seed(seed),
                    ..s
                };
                fixed_estimate(&st, &id, &opts)
            });
            let rr: Vec<_> = flights.iter().map(|f| f[w].map(|(d, _)| d)).collect();
            let mut its: Vec<f64> = flights.iter().filter_map(|f| f[w].map(|(_, i)| i as f64)).collect();
            let fs = mse_of(&truth, &fixed);
            let rs = mse_of(&truth, &rr);
            let (cft, cfp) = crlb_deg2(&s, &id);
            let (cat, cap) = crlb_aligned_deg2(&s);
            t.push(vec![
                num(radius),
                w.to_string(),
                num(psi),
                num(deg(truth.theta)),
                num(deg(truth.phi)),
                num(element_snr_db(&s, &id)),
                num(fs.mse_theta),
                num(fs.mse_phi),
                num(mean_of(fixed.iter().flatten().map(|e| angle_sq(&truth, e)))),
                num(rs.mse_theta),
                num(rs.mse_phi),
                num(mean_of(rr.iter().flatten().map(|e| angle_sq(&truth, e)))),
                num(cft),
                num(cfp),
                num(cat),
                num(cap),
                fs.trials_valid.to_string(),
                rs.trials_valid.to_string(),
                opt(median(&mut its)),
            ]);
        }
    }
    Ok(vec![t])
}

/// Emitter in the horizontal plane (`θ = 90°`) at azimuth `90° + ϕ`, so the
/// fixed array sees it at boresight deflection `ϕ`, for each directivity `p`.
pub fn experiment_deflection_sweep(cfg: &ExperimentConfig, pool: &ThreadPool) -> Result<Vec<Table>> {
    let geom = cfg.geometry()?;
    let mut t = Table::new("main", &header(&["p", "deflection_deg", "theta_deg", "phi_deg"]));
    let mut index = 0;
    for &p in &cfg.deflection_sweep.p_values {
        let pattern = cfg.pattern_with(p, cfg.range_m)?;
        for &defl in &cfg.deflection_sweep.deflection_deg {
            let seed = point_seed(cfg, ExperimentKind::DeflectionSweep, index);
            index += 1;
            let s = Scenario {
                geom,
                pattern,
                truth: Direction::from_degrees(90.0, 90.0 + defl),
                source: cfg.source(seed)?,
            };
            let mut row = vec![num(p), num(defl), num(90.0), num(90.0 + defl)];
            row.extend(compare_point(cfg, pool, &s));
            t.push(row);
        }
    }
    Ok(vec![t])
}
