use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use rotdoa::crlb::{crlb, crlb_sweep, write_sweep_csv, CrlbGrid};
use rotdoa::estimator::estimate_with;
use rotdoa::geometry::{rotation_matrix, Direction};
use rotdoa::harness::{worker_pool, write_outputs, ExperimentConfig, ExperimentKind, FieldError};
use rotdoa::rotation_loop::{run, Scenario};
use rotdoa::scalar::{deg, rad};
use rotdoa::selftest;
use rotdoa::signal::synthesize;
use rotdoa::Error;

#[derive(Parser, Debug)]
#[command(name = "rotdoa", version, about = "Direction finding with a rotatable directive planar array")]
struct Cli {
    /// JSON experiment config; missing keys take their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory for experiment files.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Monte Carlo trials per scenario point.
    #[arg(long, global = true)]
    trials: Option<usize>,
    /// Worker threads (default: all cores). Does not affect results.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Override any config field, e.g. `--set p=2 --set convergence.theta_deg=[15]`.
    #[arg(long = "set", value_name = "KEY=JSON", global = true)]
    set: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Synthesize one snapshot block and estimate the direction (JSON).
    Estimate {
        #[command(flatten)]
        point: Point,
        /// Write the snapshot block as CSV.
        #[arg(long)]
        dump: Option<PathBuf>,
    },
    /// Run one rotate-and-re-estimate loop; history CSV on stdout or in `--out`.
    RrRun {
        #[command(flatten)]
        point: Point,
    },
    /// Cramér-Rao bounds as CSV; comma lists sweep the grid.
    Crlb {
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        theta: Vec<f64>,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        phi: Vec<f64>,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_value = "0")]
        delta_theta: Vec<f64>,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_value = "0")]
        delta_phi: Vec<f64>,
        /// Directivity factors; default from the config.
        #[arg(long, value_delimiter = ',')]
        p: Vec<f64>,
        /// Per-element boresight SNR, dB; default from the configured powers.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        snr: Vec<f64>,
        /// Report deg² instead of rad².
        #[arg(long)]
        deg2: bool,
    },
    /// Run one experiment family and write CSV tables plus a manifest.
    Experiment {
        kind: Kind,
        /// Replace the SNR list of the convergence experiment, dB.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        snr: Vec<f64>,
    },
    /// Run the built-in invariant checks.
    Selftest,
}

#[derive(clap::Args, Debug)]
struct Point {
    /// Emitter polar angle, degrees.
    #[arg(long, allow_hyphen_values = true)]
    theta: f64,
    /// Emitter azimuth, degrees.
    #[arg(long, allow_hyphen_values = true)]
    phi: f64,
    /// Initial tilt about x, degrees.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    delta_theta: f64,
    /// Initial turn about z, degrees.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    delta_phi: f64,
    /// Per-element boresight SNR, dB; default from the configured powers.
    #[arg(long, allow_hyphen_values = true)]
    snr: Option<f64>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Kind {
    Convergence,
    ThetaSweep,
    UavPath,
    DeflectionSweep,
}

impl From<Kind> for ExperimentKind {
    fn from(k: Kind) -> Self {
        match k {
            Kind::Convergence => ExperimentKind::Convergence,
            Kind::ThetaSweep => ExperimentKind::ThetaSweep,
            Kind::UavPath => ExperimentKind::UavPath,
            Kind::DeflectionSweep => ExperimentKind::DeflectionSweep,
        }
    }
}

enum Failure {
    Config(Vec<FieldError>),
    Run(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Run(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Run(e.into())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Run(e.into())
    }
}

fn config_error(field: &str, reason: impl Into<String>) -> Failure {
    Failure::Config(vec![FieldError {
        field: field.into(),
        reason: reason.into(),
    }])
}

fn set_path(root: &mut Value, key: &str, value: Value) -> Result<(), Failure> {
    let mut cur = root;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let obj = cur.as_object_mut().ok_or_else(|| config_error(key, "not an object path"))?;
        if !obj.contains_key(*part) {
            return Err(config_error(key, "unknown field"));
        }
        if i + 1 == parts.len() {
            obj.insert(part.to_string(), value);
            return Ok(());
        }
        cur = obj.get_mut(*part).expect("checked above");
    }
    Ok(())
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig, Failure> {
    let mut value = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path)?;
            let cfg = ExperimentConfig::from_json(&text).map_err(|e| config_error("config", e.to_string()))?;
            serde_json::to_value(cfg)?
        }
        None => serde_json::to_value(ExperimentConfig::default())?,
    };
    for item in &cli.set {
        let (key, raw) = item
            .split_once('=')
            .ok_or_else(|| config_error(item, "expected KEY=VALUE"))?;
        // bare words are taken as strings
        let v = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
        set_path(&mut value, key, v)?;
    }
    if let Some(s) = cli.seed {
        value["master_seed"] = json!(s);
    }
    if let Some(t) = cli.trials {
        value["trials"] = json!(t);
    }
    let cfg: ExperimentConfig = serde_json::from_value(value).map_err(|e| config_error("config", e.to_string()))?;
    let errs = cfg.validate();
    if !errs.is_empty() {
        return Err(Failure::Config(errs));
    }
    Ok(cfg)
}

fn scenario_for(cfg: &ExperimentConfig, point: &Point) -> Result<Scenario<f64>, Failure> {
    let geom = cfg.geometry()?;
    let pattern = cfg.pattern()?;
    let source = match point.snr {
        Some(s) => cfg.source_at_snr(&pattern, s, cfg.master_seed)?,
        None => cfg.source(cfg.master_seed)?,
    };
    Ok(Scenario {
        geom,
        pattern,
        truth: Direction::from_degrees(point.theta, point.phi),
        source,
    })
}

fn execute(cli: &Cli) -> Result<(), Failure> {
    let mut cfg = load_config(cli)?;
    let stdout = std::io::stdout();
    match &cli.command {
        Command::Estimate { point, dump } => {
            let s = scenario_for(&cfg, point)?;
            let orient = rotation_matrix(rad(point.delta_theta), rad(point.delta_phi));
            let block = synthesize(&s.geom, &s.pattern, &s.truth, &orient, &s.source);
            if let Some(path) = dump {
                block.write_csv(std::io::BufWriter::new(fs::File::create(path)?))?;
            }
            let est = estimate_with(&block, &cfg.refine_options())?;
            let world = Direction::from_vector(&orient.to_world_frame(&est.direction().unit_vector()));
            let out = json!({
                "theta_deg": deg(est.theta_hat),
                "phi_deg": deg(est.phi_hat),
                "world_theta_deg": deg(world.theta),
                "world_phi_deg": deg(world.phi),
                "spectrum_value": est.spectrum_value,
                "candidates": est.candidates.iter().map(|c| json!({
                    "theta_deg": deg(c.theta), "phi_deg": deg(c.phi), "spectrum": c.spectrum
                })).collect::<Vec<_>>(),
                "element_snr_db": 10.0 * block.element_snr().log10(),
                "front_hemisphere": block.front_hemisphere,
            });
            writeln!(stdout.lock(), "{}", serde_json::to_string_pretty(&out)?)?;
        }
        Command::RrRun { point } => {
            let s = scenario_for(&cfg, point)?;
            let orient = rotation_matrix(rad(point.delta_theta), rad(point.delta_phi));
            let result = run(&s, &orient, &cfg.loop_options())?;
            match &cli.out {
                Some(dir) => {
                    fs::create_dir_all(dir)?;
                    result.write_csv(std::io::BufWriter::new(fs::File::create(dir.join("rr_run.csv"))?))?;
                    let summary = serde_json::to_string_pretty(&result.summary())?;
                    fs::write(dir.join("rr_run_summary.json"), &summary)?;
                    writeln!(stdout.lock(), "{summary}")?;
                }
                None => result.write_csv(stdout.lock())?,
            }
        }
        Command::Crlb {
            theta,
            phi,
            delta_theta,
            delta_phi,
            p,
            snr,
            deg2,
        } => {
            let geom = cfg.geometry()?;
            let pattern = cfg.pattern()?;
            let source = cfg.source(cfg.master_seed)?;
            let single = [theta, phi, delta_theta, delta_phi].iter().all(|v| v.len() == 1) && p.len() <= 1 && snr.len() <= 1;
            let grid = CrlbGrid {
                theta_deg: theta.clone(),
                phi_deg: phi.clone(),
                delta_theta_deg: delta_theta.clone(),
                delta_phi_deg: delta_phi.clone(),
                p: if p.is_empty() { vec![cfg.p] } else { p.clone() },
                snr_db: snr.clone(),
            };
            let rows = crlb_sweep(&geom, &pattern, &source, &grid);
            if single && rows[0].var_theta.is_none() {
                // surface the reason for a lone point
                let pat = cfg.pattern_with(grid.p[0], cfg.range_m)?;
                let src = match snr.first() {
                    Some(&s) => cfg.source_at_snr(&pat, s, 0)?,
                    None => source,
                };
                crlb(
                    &geom,
                    &pat,
                    &src,
                    &Direction::from_degrees(theta[0], phi[0]),
                    &rotation_matrix(rad(delta_theta[0]), rad(delta_phi[0])),
                )?;
            }
            write_sweep_csv(&rows, stdout.lock(), *deg2)?;
        }
        Command::Experiment { kind, snr } => {
            if !snr.is_empty() {
                cfg.convergence.snr_db = snr.clone();
            }
            let kind = ExperimentKind::from(*kind);
            let pool = worker_pool(cli.workers)?;
            let start = Instant::now();
            let tables = kind.run(&cfg, &pool)?;
            let dir = cli.out.clone().unwrap_or_else(|| PathBuf::from("results"));
            let paths = write_outputs(&dir, kind.name(), &cfg, &tables, cli.workers, start.elapsed().as_secs_f64())?;
            let mut lock = stdout.lock();
            for p in paths {
                writeln!(lock, "{}", p.display())?;
            }
        }
        Command::Selftest => {
            let checks = selftest::run_all(cfg.master_seed);
            let mut lock = stdout.lock();
            for c in &checks {
                writeln!(lock, "{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail)?;
            }
            if checks.iter().any(|c| !c.passed) {
                return Err(Failure::Run(Error::Config("selftest failed".into())));
            }
        }
    }
    Ok(())
}

fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::InvalidParameter { .. } | Error::InvalidElementIndex { .. } => "invalid_parameter",
        Error::OutsidePatternSupport { .. } => "outside_pattern_support",
        Error::UnidentifiableGeometry { .. } => "unidentifiable_geometry",
        Error::Io(_) => "io",
        Error::Csv(_) | Error::Json(_) => "serialization",
        _ => "estimation",
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(fields)) => {
            eprintln!("{}", json!({ "error": "config_validation", "fields": fields }));
            ExitCode::from(3)
        }
        Err(Failure::Run(e)) => {
            eprintln!("{}", json!({ "error": error_kind(&e), "message": e.to_string() }));
            ExitCode::from(1)
        }
    }
}
