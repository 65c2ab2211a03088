//! Closed-loop rotate-and-re-estimate tracking.
//!
//! Each pass estimates in the current array frame, maps the estimate back to
//! the world and, unless it moved by less than `epsilon` in both angles since
//! the previous pass, turns the array so the estimate lands on boresight.

use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimator::{estimate_with, RefineOptions};
use crate::geometry::{deflection_angle, rotation_matrix, ArrayGeometry, Direction, Orientation};
use crate::pattern::{channel_gain, PatternParams};
use crate::scalar::{deg, rad, wrapped_diff, Scalar};
use crate::seed::child_seed;
use crate::signal::{synthesize, SourceParams};

/// How snapshot noise relates across iterations of one run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoisePolicy {
    /// Every iteration reuses the run seed: same symbol phases, same noise
    /// draws, only the array attitude changes.
    #[default]
    Frozen,
    /// Independent draws per iteration.
    Fresh,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoopOptions<T> {
    /// Convergence threshold on both angles, radians.
    pub epsilon: T,
    /// Maximum number of rotations.
    pub max_iterations: usize,
    pub noise: NoisePolicy,
    /// Extra attempts with reseeded data when a single estimate fails.
    pub max_retries: usize,
    pub refine: RefineOptions<T>,
}

impl<T: Scalar> Default for LoopOptions<T> {
    fn default() -> Self {
        Self {
            epsilon: rad(T::lit(0.01)),
            max_iterations: 50,
            noise: NoisePolicy::Frozen,
            max_retries: 3,
            refine: RefineOptions::default(),
        }
    }
}

/// Emitter, array and link parameters for one run. `source.seed` is the run seed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scenario<T: Scalar> {
    pub geom: ArrayGeometry<T>,
    pub pattern: PatternParams<T>,
    pub truth: Direction<T>,
    pub source: SourceParams<T>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord<T> {
    pub index: usize,
    /// Attitude the block was collected with.
    pub orientation: Orientation<T>,
    /// Estimate in that array frame.
    pub local: Direction<T>,
    /// Same estimate in world coordinates.
    pub world: Direction<T>,
    /// True emitter deflection from boresight, radians.
    pub deflection: T,
    /// Per-element SNR, dB.
    pub element_snr_db: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult<T> {
    pub history: Vec<IterationRecord<T>>,
    pub converged: bool,
    /// Rotations performed.
    pub iterations_used: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub converged: bool,
    pub iterations_used: usize,
    pub theta_deg: f64,
    pub phi_deg: f64,
    pub final_deflection_deg: f64,
    pub final_element_snr_db: f64,
}

impl<T: Scalar> RunResult<T> {
    pub fn final_estimate(&self) -> Direction<T> {
        self.history.last().expect("history is never empty").world
    }

    pub fn final_orientation(&self) -> Orientation<T> {
        self.history.last().expect("history is never empty").orientation
    }

    pub fn summary(&self) -> RunSummary {
        let last = self.history.last().expect("history is never empty");
        RunSummary {
            converged: self.converged,
            iterations_used: self.iterations_used,
            theta_deg: deg(last.world.theta).as_f64(),
            phi_deg: deg(last.world.phi).as_f64(),
            final_deflection_deg: deg(last.deflection).as_f64(),
            final_element_snr_db: last.element_snr_db.as_f64(),
        }
    }

    /// One row per iteration, angles in degrees.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "iteration",
            "delta_theta_deg",
            "delta_phi_deg",
            "theta_local_deg",
            "phi_local_deg",
            "theta_deg",
            "phi_deg",
            "deflection_deg",
            "element_snr_db",
        ])?;
        for r in &self.history {
            let f = |x: T| format!("{}", deg(x).as_f64());
            w.write_record([
                r.index.to_string(),
                f(r.orientation.delta_theta),
                f(r.orientation.delta_phi),
                f(r.local.theta),
                f(r.local.phi),
                f(r.world.theta),
                f(r.world.phi),
                f(r.deflection),
                format!("{}", r.element_snr_db.as_f64()),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Step, in the current array frame, that brings `estimate` onto boresight.
pub fn rotation_update<T: Scalar>(estimate: &Direction<T>) -> Orientation<T> {
    rotation_matrix(T::frac_pi_2() - estimate.theta, T::frac_pi_2() - estimate.phi)
}

fn attempt_seed(policy: NoisePolicy, run_seed: u64, iteration: usize, attempt: usize) -> u64 {
    match policy {
        NoisePolicy::Frozen if attempt == 0 => run_seed,
        NoisePolicy::Frozen => child_seed(run_seed, attempt as u64),
        NoisePolicy::Fresh => child_seed(child_seed(run_seed, iteration as u64), attempt as u64),
    }
}

/// Single estimate at a fixed attitude, retried with reseeded data on failure.
pub fn estimate_at<T: Scalar>(
    scenario: &Scenario<T>,
    orient: &Orientation<T>,
    iteration: usize,
    opts: &LoopOptions<T>,
) -> Result<Direction<T>> {
    let mut last = None;
    for attempt in 0..=opts.max_retries {
        let seed = attempt_seed(opts.noise, scenario.source.seed, iteration, attempt);
        let src = scenario.source.with_seed(seed);
        let block = synthesize(&scenario.geom, &scenario.pattern, &scenario.truth, orient, &src);
        match estimate_with(&block, &opts.refine) {
            Ok(e) => return Ok(e.direction()),
            Err(e) => last = Some(e),
        }
    }
    Err(Error::RetriesExhausted {
        attempts: opts.max_retries + 1,
        last: last.map(|e| e.to_string()).unwrap_or_default(),
    })
}

/// Track the emitter starting from `initial`.
pub fn run<T: Scalar>(scenario: &Scenario<T>, initial: &Orientation<T>, opts: &LoopOptions<T>) -> Result<RunResult<T>> {
    if !(opts.epsilon > T::zero()) {
        return Err(Error::param("epsilon", "must be positive"));
    }
    let mut orient = *initial;
    let mut history: Vec<IterationRecord<T>> = Vec::new();
    let mut converged = false;
    for index in 0..=opts.max_iterations {
        let local = estimate_at(scenario, &orient, index, opts)?;
        let world = Direction::from_vector(&orient.to_world_frame(&local.unit_vector()));
        let gain = channel_gain(&scenario.pattern, &scenario.truth, &orient);
        let snr = gain * gain * scenario.source.transmit_power / scenario.source.noise_power;
        let record = IterationRecord {
            index,
            orientation: orient,
            local,
            world,
            deflection: deflection_angle(&scenario.truth, &orient),
            element_snr_db: T::lit(10.0) * snr.log10(),
        };
        let settled = history.last().is_some_and(|prev| {
            (world.theta - prev.world.theta).abs() <= opts.epsilon && wrapped_diff(world.phi, prev.world.phi).abs() <= opts.epsilon
        });
        history.push(record);
        if settled {
            converged = true;
            break;
        }
        if index < opts.max_iterations {
            orient = orient.then(&rotation_update(&local));
        }
    }
    let iterations_used = history.len() - 1;
    Ok(RunResult {
        history,
        converged,
        iterations_used,
    })
}
