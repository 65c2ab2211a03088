//! Cramér-Rao lower bounds on `(θ, φ)` for the rotated directive array.
//!
//! The single-snapshot Fisher information, with the deterministic signal
//! amplitude factored out, is `[[P, Q], [Q, R]]` with
//!
//! ```text
//! P = g0² α^{2p-2} (MN p² β1² + d1 α² P1)
//! Q = g0² α^{2p-2} (MN p² β1 β2 + d1 α² Q1)
//! R = g0² α^{2p-2} (MN p² β2² + d1 α² R1)
//! ```
//!
//! and `K` snapshots scale it by `γ = 2 K P_t / σ²`. Inverting gives
//!
//! ```text
//! var θ ≥ (d2 β2² + d1 α² R1) / (γ d4 α^{2p} [d2 G + d3 sin²θ α⁴])
//! var φ ≥ (d2 β1² + d1 α² P1) / (γ d4 α^{2p} [d2 G + d3 sin²θ α⁴])
//! ```
//!
//! with `d1 = (2π/λ)²`, `d2 = MN p²`, `d3 = d1 MN S_m S_n`, `d4 = d1 g0²` and
//! `G = β1² R1 + β2² P1 − 2 β1 β2 Q1`. The `α⁴` comes from the identity
//! `P1 R1 − Q1² = MN S_n S_m sin²θ α²`; versions of this formula printed with
//! `α²` there disagree with the numerically differentiated information.
//!
//! At the initial attitude the same algebra gives
//!
//! ```text
//! var θ ≥ (N p² cos²φ + d1 S_n cos²ϕ sin²φ)
//!         / (γ g0² cos^{2p}ϕ d1 N [M p² S_n cos²θ + N p² S_m sin²θ cos²φ + d1 S_m S_n cos⁴ϕ])
//! var φ ≥ (MN p² sin²φ cos²θ + d1 cos²ϕ (M S_n cos²θ cos²φ + N S_m sin²θ))
//!         / (γ g0² cos^{2p}ϕ d1 MN sin²θ [same bracket])
//! ```
//!
//! (`cos⁴ϕ` in the bracket, not `cos²ϕ`), and with the emitter on boresight
//! `var θ ≥ 1/(γ d1 g0² N S_m)`, `var φ ≥ 1/(γ d1 g0² M S_n sin²θ)`, where
//! the wavenumber enters squared.
//!
//! `N` counts elements along x and `M` along z. Bounds are in rad². The
//! attitude enters only through `(Δθ, Δφ)`; for attitudes built by
//! composition those are recovered from the boresight, which fixes the gain
//! terms exactly but drops any roll about boresight from the phase terms.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{ArrayGeometry, Direction, Orientation};
use crate::pattern::{gain_alpha_beta, PatternParams};
use crate::scalar::{deg, rad, Scalar};
use crate::signal::SourceParams;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FimEntries<T> {
    pub p: T,
    pub q: T,
    pub r: T,
    /// `2 K P_t / σ²`.
    pub gamma: T,
    pub d1: T,
    pub d2: T,
    pub d3: T,
    pub d4: T,
    pub s_n: T,
    pub s_m: T,
}

impl<T: Scalar> FimEntries<T> {
    pub fn determinant(&self) -> T {
        self.p * self.r - self.q * self.q
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    RotatedGeneral,
    InitialOrientation,
    BoresightAligned,
}

impl Regime {
    pub fn as_str(&self) -> &'static str {
        match self {
            Regime::RotatedGeneral => "rotated_general",
            Regime::InitialOrientation => "initial_orientation",
            Regime::BoresightAligned => "boresight_aligned",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrlbReport<T> {
    /// rad².
    pub var_theta_lb: T,
    /// rad².
    pub var_phi_lb: T,
    pub fim: FimEntries<T>,
    pub regime: Regime,
}

/// Per-axis phase-rate factors `(x, z)` for `∂ψ/∂θ` and `∂ψ/∂φ`, divided by `2π/λ`.
fn phase_rates<T: Scalar>(dir: &Direction<T>, orient: &Orientation<T>) -> ((T, T), (T, T)) {
    let (st, ct) = dir.theta.sin_cos();
    let (sa, ca) = orient.delta_theta.sin_cos();
    let (sp, cp) = (dir.phi + orient.delta_phi).sin_cos();
    let d_theta = (ct * cp, -(st * ca + ct * sa * sp));
    let d_phi = (-st * sp, -st * sa * cp);
    (d_theta, d_phi)
}

pub fn fim_entries<T: Scalar>(
    geom: &ArrayGeometry<T>,
    pattern: &PatternParams<T>,
    source: &SourceParams<T>,
    dir: &Direction<T>,
    orient: &Orientation<T>,
) -> Result<FimEntries<T>> {
    let ab = gain_alpha_beta(dir, orient);
    if ab.alpha <= T::zero() {
        return Err(Error::OutsidePatternSupport {
            alpha: ab.alpha.as_f64(),
        });
    }
    let (s_n, s_m) = geom.moment_sums();
    let (nn, mm) = (T::lit(geom.n_x as f64), T::lit(geom.n_z as f64));
    let mn = nn * mm;
    let k = geom.wavenumber();
    let d1 = k * k;
    let g0 = pattern.g0();
    let p = pattern.p;
    let d2 = mn * p * p;

    let ((tx, tz), (px, pz)) = phase_rates(dir, orient);
    let p1 = tx * tx * mm * s_n + tz * tz * nn * s_m;
    let q1 = tx * px * mm * s_n + tz * pz * nn * s_m;
    let r1 = px * px * mm * s_n + pz * pz * nn * s_m;

    // g0² α^{2p-2}, written so p = 0 stays finite
    let a2 = ab.alpha * ab.alpha;
    let scale = g0 * g0 * ab.alpha.powf(T::lit(2.0) * p) / a2;
    let fim = FimEntries {
        p: scale * (d2 * ab.beta1 * ab.beta1 + d1 * a2 * p1),
        q: scale * (d2 * ab.beta1 * ab.beta2 + d1 * a2 * q1),
        r: scale * (d2 * ab.beta2 * ab.beta2 + d1 * a2 * r1),
        gamma: T::lit(2.0) * T::lit(source.snapshots as f64) * source.transmit_power / source.noise_power,
        d1,
        d2,
        d3: d1 * mn * s_m * s_n,
        d4: d1 * g0 * g0,
        s_n,
        s_m,
    };
    Ok(fim)
}

fn invert<T: Scalar>(fim: &FimEntries<T>) -> Result<(T, T)> {
    let det = fim.determinant();
    if !(det > T::tol(1e-12, 64.0) * fim.p * fim.r) || !(fim.p > T::zero()) || !(fim.r > T::zero()) {
        return Err(Error::UnidentifiableGeometry { det: det.as_f64() });
    }
    Ok((fim.r / (fim.gamma * det), fim.p / (fim.gamma * det)))
}

fn closed_form<T: Scalar>(
    fim: &FimEntries<T>,
    pattern: &PatternParams<T>,
    dir: &Direction<T>,
    orient: &Orientation<T>,
    geom: &ArrayGeometry<T>,
) -> (T, T) {
    let ab = gain_alpha_beta(dir, orient);
    let ((tx, tz), (px, pz)) = phase_rates(dir, orient);
    let (nn, mm) = (T::lit(geom.n_x as f64), T::lit(geom.n_z as f64));
    let p1 = tx * tx * mm * fim.s_n + tz * tz * nn * fim.s_m;
    let q1 = tx * px * mm * fim.s_n + tz * pz * nn * fim.s_m;
    let r1 = px * px * mm * fim.s_n + pz * pz * nn * fim.s_m;
    let (a, b1, b2) = (ab.alpha, ab.beta1, ab.beta2);
    let g = b1 * b1 * r1 + b2 * b2 * p1 - T::lit(2.0) * b1 * b2 * q1;
    let st2 = dir.theta.sin().powi(2);
    let a2 = a * a;
    let den = fim.gamma * fim.d4 * a.powf(T::lit(2.0) * pattern.p) * (fim.d2 * g + fim.d3 * st2 * a2 * a2);
    (
        (fim.d2 * b2 * b2 + fim.d1 * a2 * r1) / den,
        (fim.d2 * b1 * b1 + fim.d1 * a2 * p1) / den,
    )
}

fn rel_diff<T: Scalar>(a: T, b: T) -> T {
    (a - b).abs() / a.abs().max(b.abs())
}

fn regime_of<T: Scalar>(dir: &Direction<T>, orient: &Orientation<T>) -> Regime {
    if gain_alpha_beta(dir, orient).alpha >= T::one() - T::tol(1e-12, 64.0) {
        Regime::BoresightAligned
    } else if orient.delta_theta == T::zero() && orient.delta_phi == T::zero() {
        Regime::InitialOrientation
    } else {
        Regime::RotatedGeneral
    }
}

/// Bounds by direct inversion of the Fisher information, cross-checked
/// against the expanded closed form.
pub fn crlb<T: Scalar>(
    geom: &ArrayGeometry<T>,
    pattern: &PatternParams<T>,
    source: &SourceParams<T>,
    dir: &Direction<T>,
    orient: &Orientation<T>,
) -> Result<CrlbReport<T>> {
    let fim = fim_entries(geom, pattern, source, dir, orient)?;
    let (vt, vp) = invert(&fim)?;
    let (ct, cp) = closed_form(&fim, pattern, dir, orient, geom);
    let tol = T::tol(1e-9, 1e5);
    debug_assert!(
        rel_diff(vt, ct) <= tol && rel_diff(vp, cp) <= tol,
        "closed form disagrees with inversion: {} vs {}, {} vs {}",
        vt.as_f64(),
        ct.as_f64(),
        vp.as_f64(),
        cp.as_f64()
    );
    Ok(CrlbReport {
        var_theta_lb: vt,
        var_phi_lb: vp,
        fim,
        regime: regime_of(dir, orient),
    })
}

/// Closed form at the initial attitude, in terms of `cos ϕ = sinθ sinφ`.
pub fn crlb_initial<T: Scalar>(
    geom: &ArrayGeometry<T>,
    pattern: &PatternParams<T>,
    source: &SourceParams<T>,
    dir: &Direction<T>,
) -> Result<CrlbReport<T>> {
    let id = Orientation::identity();
    let fim = fim_entries(geom, pattern, source, dir, &id)?;
    invert(&fim)?;
    let (st, ct) = dir.theta.sin_cos();
    let (sp, cp) = dir.phi.sin_cos();
    let cv = st * sp;
    let cv2 = cv * cv;
    let (nn, mm) = (T::lit(geom.n_x as f64), T::lit(geom.n_z as f64));
    let (s_n, s_m, d1, p) = (fim.s_n, fim.s_m, fim.d1, pattern.p);
    let p2 = p * p;
    let g0 = pattern.g0();
    let bracket = mm * p2 * s_n * ct * ct + nn * p2 * s_m * st * st * cp * cp + d1 * s_m * s_n * cv2 * cv2;
    let common = fim.gamma * g0 * g0 * cv.powf(T::lit(2.0) * p) * d1;
    let var_theta = (nn * p2 * cp * cp + d1 * s_n * cv2 * sp * sp) / (common * nn * bracket);
    let var_phi = (mm * nn * p2 * sp * sp * ct * ct + d1 * cv2 * (mm * s_n * ct * ct * cp * cp + nn * s_m * st * st))
        / (common * mm * nn * st * st * bracket);
    Ok(CrlbReport {
        var_theta_lb: var_theta,
        var_phi_lb: var_phi,
        fim,
        regime: if cv >= T::one() - T::tol(1e-12, 64.0) {
            Regime::BoresightAligned
        } else {
            Regime::InitialOrientation
        },
    })
}

/// Bounds with the emitter on boresight: `(1/(γ d1 g0² N S_m), 1/(γ d1 g0² M S_n sin²θ))`.
pub fn crlb_aligned<T: Scalar>(
    geom: &ArrayGeometry<T>,
    pattern: &PatternParams<T>,
    source: &SourceParams<T>,
    theta: T,
) -> Result<(T, T)> {
    let st = theta.sin();
    if !(st.abs() > T::tol(1e-12, 64.0)) {
        return Err(Error::UnidentifiableGeometry { det: 0.0 });
    }
    let (s_n, s_m) = geom.moment_sums();
    let k = geom.wavenumber();
    let g0 = pattern.g0();
    let gamma = T::lit(2.0) * T::lit(source.snapshots as f64) * source.transmit_power / source.noise_power;
    let base = gamma * k * k * g0 * g0;
    Ok((
        T::one() / (base * T::lit(geom.n_x as f64) * s_m),
        T::one() / (base * T::lit(geom.n_z as f64) * s_n * st * st),
    ))
}

/// Cartesian grid of CRLB inputs; angles in degrees, SNR is the per-element
/// boresight SNR `g0² P_t / σ²` in dB. An empty SNR list keeps the noise
/// power of the base source.
#[derive(Debug, Clone, PartialEq)]
pub struct CrlbGrid {
    pub theta_deg: Vec<f64>,
    pub phi_deg: Vec<f64>,
    pub delta_theta_deg: Vec<f64>,
    pub delta_phi_deg: Vec<f64>,
    pub p: Vec<f64>,
    pub snr_db: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrlbRow {
    pub theta_deg: f64,
    pub phi_deg: f64,
    pub delta_theta_deg: f64,
    pub delta_phi_deg: f64,
    pub p: f64,
    pub snr_db: f64,
    /// `None` where the bound does not exist (emitter behind the array,
    /// singular information).
    pub var_theta: Option<f64>,
    pub var_phi: Option<f64>,
    pub regime: Option<Regime>,
}

/// Evaluate every grid point. The base parameters supply aperture, range,
/// transmit power, snapshot count and, without an SNR list, noise power.
/// Each row reports the effective boresight SNR.
pub fn crlb_sweep(
    geom: &ArrayGeometry<f64>,
    base_pattern: &PatternParams<f64>,
    base_source: &SourceParams<f64>,
    grid: &CrlbGrid,
) -> Vec<CrlbRow> {
    let snrs: Vec<Option<f64>> = if grid.snr_db.is_empty() {
        vec![None]
    } else {
        grid.snr_db.iter().map(|&s| Some(s)).collect()
    };
    let mut points = Vec::new();
    for &t in &grid.theta_deg {
        for &f in &grid.phi_deg {
            for &dt in &grid.delta_theta_deg {
                for &df in &grid.delta_phi_deg {
                    for &p in &grid.p {
                        for &s in &snrs {
                            points.push((t, f, dt, df, p, s));
                        }
                    }
                }
            }
        }
    }
    points
        .par_iter()
        .map(|&(t, f, dt, df, p, s)| {
            let pt = base_source.transmit_power;
            let g0 = PatternParams::new(p, base_pattern.aperture_area, base_pattern.range)
                .map(|pp| pp.g0())
                .unwrap_or(f64::NAN);
            let noise = match s {
                Some(db) => g0 * g0 * pt / 10f64.powf(db / 10.0),
                None => base_source.noise_power,
            };
            let snr_db = 10.0 * (g0 * g0 * pt / noise).log10();
            let eval = || -> Result<CrlbReport<f64>> {
                let pattern = PatternParams::new(p, base_pattern.aperture_area, base_pattern.range)?;
                let source = SourceParams::new(pt, noise, base_source.snapshots, 0)?;
                crlb(
                    geom,
                    &pattern,
                    &source,
                    &Direction::from_degrees(t, f),
                    &Orientation::from_angles(rad(dt), rad(df)),
                )
            };
            let report = eval().ok();
            CrlbRow {
                theta_deg: t,
                phi_deg: f,
                delta_theta_deg: dt,
                delta_phi_deg: df,
                p,
                snr_db,
                var_theta: report.map(|r| r.var_theta_lb),
                var_phi: report.map(|r| r.var_phi_lb),
                regime: report.map(|r| r.regime),
            }
        })
        .collect()
}

/// CSV with one row per grid point; empty cells for missing bounds.
pub fn write_sweep_csv<W: Write>(rows: &[CrlbRow], out: W, degrees_squared: bool) -> Result<()> {
    let unit = if degrees_squared { "deg2" } else { "rad2" };
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "theta_deg".to_string(),
        "phi_deg".into(),
        "delta_theta_deg".into(),
        "delta_phi_deg".into(),
        "p".into(),
        "snr_db".into(),
        format!("crlb_theta_{unit}"),
        format!("crlb_phi_{unit}"),
        "regime".into(),
    ])?;
    let conv = |v: Option<f64>| match v {
        Some(x) if degrees_squared => format!("{:e}", deg(deg(x))),
        Some(x) => format!("{x:e}"),
        None => String::new(),
    };
    for r in rows {
        w.write_record([
            r.theta_deg.to_string(),
            r.phi_deg.to_string(),
            r.delta_theta_deg.to_string(),
            r.delta_phi_deg.to_string(),
            r.p.to_string(),
            r.snr_db.to_string(),
            conv(r.var_theta),
            conv(r.var_phi),
            r.regime.map(|g| g.as_str().to_string()).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
