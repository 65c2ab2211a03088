//! Experiment configuration, loaded from JSON with every field optional.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::RefineOptions;
use crate::geometry::ArrayGeometry;
use crate::pattern::PatternParams;
use crate::rotation_loop::{LoopOptions, NoisePolicy};
use crate::scalar::rad;
use crate::signal::SourceParams;

/// dBm → W.
pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConvergenceGrid {
    pub theta_deg: Vec<f64>,
    /// Per-element boresight SNR `g0² P_t / σ²`, dB.
    pub snr_db: Vec<f64>,
}

impl Default for ConvergenceGrid {
    fn default() -> Self {
        Self {
            theta_deg: vec![75.0, 45.0, 15.0],
            snr_db: vec![-10.0, 10.0, 30.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ThetaSweepGrid {
    pub theta_deg: Vec<f64>,
    pub transmit_power_dbm: Vec<f64>,
}

impl Default for ThetaSweepGrid {
    fn default() -> Self {
        Self {
            theta_deg: (1..=18).map(|k| 5.0 * k as f64).collect(),
            transmit_power_dbm: vec![0.0, 20.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UavPathGrid {
    pub radii_m: Vec<f64>,
    /// Points on the semicircle, both ends included.
    pub waypoints: usize,
}

impl Default for UavPathGrid {
    fn default() -> Self {
        Self {
            radii_m: vec![150.0, 250.0],
            waypoints: 37,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DeflectionSweepGrid {
    /// Boresight deflection of the emitter for the fixed array, degrees.
    pub deflection_deg: Vec<f64>,
    pub p_values: Vec<f64>,
}

impl Default for DeflectionSweepGrid {
    fn default() -> Self {
        Self {
            deflection_deg: (0..18).map(|k| 5.0 * k as f64).collect(),
            p_values: vec![0.0, 0.5, 1.0, 2.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Elements along x (N).
    pub n_x: usize,
    /// Elements along z (M).
    pub n_z: usize,
    /// Spacing along x, m; `null` means half a wavelength.
    pub d_x: Option<f64>,
    pub d_z: Option<f64>,
    pub wavelength: f64,
    pub p: f64,
    /// Collecting area, m²; `null` means the panel area `N d_x · M d_z`.
    pub aperture_area: Option<f64>,
    pub range_m: f64,
    pub transmit_power_dbm: f64,
    pub noise_power_dbm: f64,
    pub snapshots: usize,
    /// Emitter azimuth for the elevation experiments, degrees.
    pub phi_deg: f64,
    pub trials: usize,
    pub epsilon_deg: f64,
    pub max_iterations: usize,
    pub max_retries: usize,
    pub noise_policy: NoisePolicy,
    pub refine_half_width_deg: f64,
    pub refine_step_deg: f64,
    pub master_seed: u64,
    pub convergence: ConvergenceGrid,
    pub theta_sweep: ThetaSweepGrid,
    pub uav_path: UavPathGrid,
    pub deflection_sweep: DeflectionSweepGrid,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            n_x: 6,
            n_z: 6,
            d_x: None,
            d_z: None,
            wavelength: 0.125,
            p: 1.0,
            aperture_area: None,
            range_m: 250.0,
            transmit_power_dbm: 20.0,
            noise_power_dbm: -100.0,
            snapshots: 100,
            phi_deg: 90.0,
            trials: 2000,
            epsilon_deg: 0.01,
            max_iterations: 50,
            max_retries: 3,
            noise_policy: NoisePolicy::Frozen,
            refine_half_width_deg: 0.5,
            refine_step_deg: 0.01,
            master_seed: 1,
            convergence: ConvergenceGrid::default(),
            theta_sweep: ThetaSweepGrid::default(),
            uav_path: UavPathGrid::default(),
            deflection_sweep: DeflectionSweepGrid::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FieldError {
    pub field: String,
    pub reason: String,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    /// Every violated constraint, empty when the config is usable.
    pub fn validate(&self) -> Vec<FieldError> {
        let mut errs = Vec::new();
        let mut check = |ok: bool, field: &str, reason: &str| {
            if !ok {
                errs.push(FieldError {
                    field: field.into(),
                    reason: reason.into(),
                });
            }
        };
        let pos = |x: f64| x.is_finite() && x > 0.0;
        let fin = |x: f64| x.is_finite();
        check(self.n_x >= 2, "n_x", "need at least 2 elements");
        check(self.n_z >= 2, "n_z", "need at least 2 elements");
        check(self.d_x.is_none_or(pos), "d_x", "must be positive");
        check(self.d_z.is_none_or(pos), "d_z", "must be positive");
        check(pos(self.wavelength), "wavelength", "must be positive");
        check(fin(self.p) && self.p >= 0.0, "p", "must be nonnegative");
        check(self.aperture_area.is_none_or(pos), "aperture_area", "must be positive");
        check(pos(self.range_m), "range_m", "must be positive");
        check(fin(self.transmit_power_dbm), "transmit_power_dbm", "must be finite");
        check(fin(self.noise_power_dbm), "noise_power_dbm", "must be finite");
        check(self.snapshots >= 1, "snapshots", "must be at least 1");
        check(fin(self.phi_deg), "phi_deg", "must be finite");
        check(self.trials >= 1, "trials", "must be at least 1");
        check(pos(self.epsilon_deg), "epsilon_deg", "must be positive");
        check(self.max_iterations >= 1, "max_iterations", "must be at least 1");
        check(pos(self.refine_half_width_deg), "refine_half_width_deg", "must be positive");
        check(
            pos(self.refine_step_deg) && self.refine_step_deg <= self.refine_half_width_deg,
            "refine_step_deg",
            "must be positive and no larger than the half-width",
        );
        let grid = |v: &[f64]| !v.is_empty() && v.iter().all(|x| x.is_finite());
        check(grid(&self.convergence.theta_deg), "convergence.theta_deg", "must be a nonempty list of finite values");
        check(grid(&self.convergence.snr_db), "convergence.snr_db", "must be a nonempty list of finite values");
        check(grid(&self.theta_sweep.theta_deg), "theta_sweep.theta_deg", "must be a nonempty list of finite values");
        check(
            grid(&self.theta_sweep.transmit_power_dbm),
            "theta_sweep.transmit_power_dbm",
            "must be a nonempty list of finite values",
        );
        check(
            grid(&self.uav_path.radii_m) && self.uav_path.radii_m.iter().all(|r| *r > 0.0),
            "uav_path.radii_m",
            "must be a nonempty list of positive values",
        );
        check(self.uav_path.waypoints >= 2, "uav_path.waypoints", "must be at least 2");
        check(
            grid(&self.deflection_sweep.deflection_deg),
            "deflection_sweep.deflection_deg",
            "must be a nonempty list of finite values",
        );
        check(
            grid(&self.deflection_sweep.p_values) && self.deflection_sweep.p_values.iter().all(|p| *p >= 0.0),
            "deflection_sweep.p_values",
            "must be a nonempty list of nonnegative values",
        );
        errs
    }

    pub fn geometry(&self) -> Result<ArrayGeometry<f64>> {
        let half = self.wavelength / 2.0;
        ArrayGeometry::new(
            self.n_x,
            self.n_z,
            self.d_x.unwrap_or(half),
            self.d_z.unwrap_or(half),
            self.wavelength,
        )
    }

    pub fn pattern(&self) -> Result<PatternParams<f64>> {
        self.pattern_with(self.p, self.range_m)
    }

    pub fn pattern_with(&self, p: f64, range: f64) -> Result<PatternParams<f64>> {
        let area = match self.aperture_area {
            Some(a) => a,
            None => self.geometry()?.panel_area(),
        };
        PatternParams::new(p, area, range)
    }

    /// Physical link from the dBm settings.
    pub fn source(&self, seed: u64) -> Result<SourceParams<f64>> {
        SourceParams::new(
            dbm_to_watts(self.transmit_power_dbm),
            dbm_to_watts(self.noise_power_dbm),
            self.snapshots,
            seed,
        )
    }

    /// Link whose per-element boresight SNR `g0² P_t / σ²` equals `snr_db`.
    pub fn source_at_snr(&self, pattern: &PatternParams<f64>, snr_db: f64, seed: u64) -> Result<SourceParams<f64>> {
        let pt = dbm_to_watts(self.transmit_power_dbm);
        let g0 = pattern.g0();
        SourceParams::new(pt, g0 * g0 * pt / db_to_linear(snr_db), self.snapshots, seed)
    }

    pub fn loop_options(&self) -> LoopOptions<f64> {
        LoopOptions {
            epsilon: rad(self.epsilon_deg),
            max_iterations: self.max_iterations,
            noise: self.noise_policy,
            max_retries: self.max_retries,
            refine: self.refine_options(),
        }
    }

    pub fn refine_options(&self) -> RefineOptions<f64> {
        RefineOptions {
            half_width: rad(self.refine_half_width_deg),
            step: rad(self.refine_step_deg),
            subgrid: true,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn defaults_are_valid_and_physical() {
        let c = ExperimentConfig::default();
        assert!(c.validate().is_empty());
        assert_relative_eq!(dbm_to_watts(20.0), 0.1);
        assert_relative_eq!(dbm_to_watts(-100.0), 1e-13);
        let g = c.geometry().unwrap();
        assert_relative_eq!(g.d_x, 0.0625);
        let pp = c.pattern().unwrap();
        assert_relative_eq!(pp.aperture_area, 0.140625);
        let src = c.source(0).unwrap();
        let snr = pp.g0().powi(2) * src.transmit_power / src.noise_power;
        assert!((10.0 * snr.log10() - 60.6).abs() < 0.5);
    }

    #[test]
    fn snr_parametrization() {
        let c = ExperimentConfig::default();
        let pp = c.pattern().unwrap();
        let s = c.source_at_snr(&pp, -10.0, 3).unwrap();
        assert_relative_eq!(pp.g0().powi(2) * s.transmit_power / s.noise_power, 0.1, max_relative = 1e-12);
    }

    #[test]
    fn json_round_trip_and_unknown_keys() {
        let c = ExperimentConfig::default();
        let back = ExperimentConfig::from_json(&c.to_json()).unwrap();
        assert_eq!(c, back);
        let partial = ExperimentConfig::from_json(r#"{"trials": 5, "convergence": {"snr_db": [0]}}"#).unwrap();
        assert_eq!(partial.trials, 5);
        assert_eq!(partial.convergence.theta_deg, vec![75.0, 45.0, 15.0]);
        assert!(ExperimentConfig::from_json(r#"{"trails": 5}"#).is_err());
    }

    #[test]
    fn validation_lists_fields() {
        let c = ExperimentConfig {
            trials: 0,
            epsilon_deg: -1.0,
            ..Default::default()
        };
        let errs = c.validate();
        let fields: Vec<_> = errs.iter().map(|e| e.field.as_str()).collect();
        assert_eq!(fields, vec!["trials", "epsilon_deg"]);
    }
}
