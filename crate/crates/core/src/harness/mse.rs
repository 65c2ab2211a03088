//! Monte Carlo trials and mean-square error.

use rayon::prelude::*;
use rayon::ThreadPool;
use serde::Serialize;

use crate::crlb::{crlb, crlb_aligned};
use crate::error::{Error, Result};
use crate::estimator::estimate_with;
use crate::geometry::{Direction, Orientation};
use crate::rotation_loop::{run, LoopOptions, RunResult, Scenario};
use crate::scalar::{deg, wrapped_diff};
use crate::seed::child_seed;
use crate::signal::synthesize;

/// Worker pool for trial-level parallelism. `None` uses every core.
pub fn worker_pool(workers: Option<usize>) -> Result<ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(n) = workers {
        if n == 0 {
            return Err(Error::param("workers", "must be at least 1"));
        }
        b = b.num_threads(n);
    }
    b.build().map_err(|e| Error::Config(e.to_string()))
}

/// Seed of trial `l` under a scenario seed.
pub fn trial_seed(scenario_seed: u64, trial: usize) -> u64 {
    child_seed(scenario_seed, trial as u64)
}

/// Run `f(trial, seed)` for every trial; results come back in trial order
/// regardless of scheduling.
pub fn run_trials<R, F>(pool: &ThreadPool, scenario_seed: u64, trials: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize, u64) -> R + Sync,
{
    pool.install(|| {
        (0..trials)
            .into_par_iter()
            .map(|l| f(l, trial_seed(scenario_seed, l)))
            .collect()
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MseStats {
    /// deg².
    pub mse_theta: f64,
    /// deg², azimuth error wrapped to (−180°, 180°].
    pub mse_phi: f64,
    pub trials: usize,
    pub trials_valid: usize,
    /// More than half the trials failed.
    pub degenerate: bool,
}

/// Squared errors in deg², azimuth wrapped.
pub fn squared_errors(truth: &Direction<f64>, est: &Direction<f64>) -> (f64, f64) {
    let dt = deg(est.theta - truth.theta);
    let dp = deg(wrapped_diff(est.phi, truth.phi));
    (dt * dt, dp * dp)
}

/// Summed in trial order so the result does not depend on scheduling.
pub fn mse_of(truth: &Direction<f64>, estimates: &[Option<Direction<f64>>]) -> MseStats {
    let mut st = 0.0;
    let mut sp = 0.0;
    let mut valid = 0usize;
    for e in estimates.iter().flatten() {
        let (a, b) = squared_errors(truth, e);
        st += a;
        sp += b;
        valid += 1;
    }
    let (mse_theta, mse_phi) = if valid > 0 {
        (st / valid as f64, sp / valid as f64)
    } else {
        (f64::NAN, f64::NAN)
    };
    MseStats {
        mse_theta,
        mse_phi,
        trials: estimates.len(),
        trials_valid: valid,
        degenerate: 2 * valid < estimates.len(),
    }
}

/// One estimate with the array held at `orient`, in world coordinates.
/// `None` when the emitter is behind the array or the estimator fails.
pub fn fixed_estimate(scenario: &Scenario<f64>, orient: &Orientation<f64>, opts: &LoopOptions<f64>) -> Option<Direction<f64>> {
    let block = synthesize(&scenario.geom, &scenario.pattern, &scenario.truth, orient, &scenario.source);
    if !block.front_hemisphere {
        return None;
    }
    let local = estimate_with(&block, &opts.refine).ok()?.direction();
    Some(Direction::from_vector(&orient.to_world_frame(&local.unit_vector())))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Single estimate at the initial attitude.
    Fixed,
    /// Full rotate-and-re-estimate loop.
    Rotating,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MseRecord {
    pub theta_deg: f64,
    pub phi_deg: f64,
    pub method: Method,
    pub stats: MseStats,
    /// deg²; fixed-array bound for [`Method::Fixed`], on-boresight bound for
    /// [`Method::Rotating`]. NaN where no bound exists.
    pub crlb_theta: f64,
    pub crlb_phi: f64,
    /// Median rotations over valid rotating trials.
    pub median_iterations: Option<f64>,
}

pub fn median(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(|a, b| a.total_cmp(b));
    let n = values.len();
    Some(if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    })
}

/// Rotating-loop runs for every trial; `None` where the loop aborted.
pub fn rotating_runs(
    pool: &ThreadPool,
    scenario: &Scenario<f64>,
    initial: &Orientation<f64>,
    opts: &LoopOptions<f64>,
    trials: usize,
) -> Vec<Option<RunResult<f64>>> {
    run_trials(pool, scenario.source.seed, trials, |_, seed| {
        let s = Scenario {
            source: scenario.source.with_seed(seed),
            ..*scenario
        };
        run(&s, initial, opts).ok()
    })
}

/// CRLB pair in deg², NaN where it does not exist.
pub fn crlb_deg2(scenario: &Scenario<f64>, orient: &Orientation<f64>) -> (f64, f64) {
    match crlb(&scenario.geom, &scenario.pattern, &scenario.source, &scenario.truth, orient) {
        Ok(r) => (deg(deg(r.var_theta_lb)), deg(deg(r.var_phi_lb))),
        Err(_) => (f64::NAN, f64::NAN),
    }
}

pub fn crlb_aligned_deg2(scenario: &Scenario<f64>) -> (f64, f64) {
    match crlb_aligned(&scenario.geom, &scenario.pattern, &scenario.source, scenario.truth.theta) {
        Ok((a, b)) => (deg(deg(a)), deg(deg(b))),
        Err(_) => (f64::NAN, f64::NAN),
    }
}

/// `L` trials of one method at one scenario point. Trial seeds are children
/// of `scenario.source.seed`.
pub fn run_mse(
    pool: &ThreadPool,
    scenario: &Scenario<f64>,
    initial: &Orientation<f64>,
    method: Method,
    opts: &LoopOptions<f64>,
    trials: usize,
) -> MseRecord {
    let (estimates, median_iterations, crlb_pair) = match method {
        Method::Fixed => {
            let est = run_trials(pool, scenario.source.seed, trials, |_, seed| {
                let s = Scenario {
                    source: scenario.source.with_seed(seed),
                    ..*scenario
                };
                fixed_estimate(&s, initial, opts)
            });
            (est, None, crlb_deg2(scenario, initial))
        }
        Method::Rotating => {
            let runs = rotating_runs(pool, scenario, initial, opts, trials);
            let est: Vec<_> = runs.iter().map(|r| r.as_ref().map(|r| r.final_estimate())).collect();
            let mut its: Vec<f64> = runs.iter().flatten().map(|r| r.iterations_used as f64).collect();
            (est, median(&mut its), crlb_aligned_deg2(scenario))
        }
    };
    MseRecord {
        theta_deg: deg(scenario.truth.theta),
        phi_deg: deg(scenario.truth.phi),
        method,
        stats: mse_of(&scenario.truth, &estimates),
        crlb_theta: crlb_pair.0,
        crlb_phi: crlb_pair.1,
        median_iterations,
    }
}
