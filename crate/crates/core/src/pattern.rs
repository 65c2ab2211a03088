//! Directive element pattern and emitter-to-array channel gain.
//!
//! Every element has the power pattern `G0 cos^{2p}(ϕ)` over the front
//! hemisphere and nothing behind it, with `G0 = 2(2p + 1)` so the pattern
//! radiates the same total power as an isotropic element. The amplitude gain
//! between emitter and array is `g(ϕ) = g0 cos^p(ϕ)` with
//! `g0 = sqrt(A / (4π r²) · G0)`.

use crate::error::{Error, Result};
use crate::geometry::{cos_deflection, deflection_angle, Direction, Orientation};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PatternParams<T> {
    /// Directivity factor `p ≥ 0`; `p = 0` is hemispherically isotropic.
    pub p: T,
    /// Collecting area of the array, m².
    pub aperture_area: T,
    /// Emitter range, m.
    pub range: T,
}

impl<T: Scalar> PatternParams<T> {
    pub fn new(p: T, aperture_area: T, range: T) -> Result<Self> {
        if !(p >= T::zero()) || !p.is_finite() {
            return Err(Error::param("p", format!("must be a finite nonnegative real, got {}", p.as_f64())));
        }
        if !(aperture_area > T::zero()) || !aperture_area.is_finite() {
            return Err(Error::param("aperture_area", "must be positive"));
        }
        if !(range > T::zero()) || !range.is_finite() {
            return Err(Error::param("range", "must be positive"));
        }
        Ok(Self {
            p,
            aperture_area,
            range,
        })
    }

    /// Peak (boresight) power gain `G0 = 2(2p + 1)`.
    #[inline]
    pub fn peak_gain(&self) -> T {
        T::lit(2.0) * (T::lit(2.0) * self.p + T::one())
    }

    /// Boresight amplitude gain `g0`.
    #[inline]
    pub fn g0(&self) -> T {
        (self.aperture_area / (T::lit(4.0) * T::pi() * self.range * self.range) * self.peak_gain()).sqrt()
    }

    /// Element amplitude pattern `sqrt(G0) cos^p(ϕ)`, zero outside `|ϕ| < π/2`.
    pub fn element_pattern(&self, varphi: T) -> T {
        self.peak_gain().sqrt() * self.cos_power(varphi)
    }

    #[inline]
    fn cos_power(&self, varphi: T) -> T {
        if varphi.abs() < T::frac_pi_2() {
            let c = varphi.cos();
            if self.p == T::zero() {
                T::one()
            } else {
                c.powf(self.p)
            }
        } else {
            T::zero()
        }
    }
}

/// `g(ϕ) = g0 cos^p(ϕ)` in front of the array, zero behind it.
pub fn directive_gain<T: Scalar>(params: &PatternParams<T>, varphi: T) -> T {
    params.g0() * params.cos_power(varphi)
}

/// Gain toward `dir` for an array at `orient`.
pub fn channel_gain<T: Scalar>(params: &PatternParams<T>, dir: &Direction<T>, orient: &Orientation<T>) -> T {
    directive_gain(params, deflection_angle(dir, orient))
}

/// `α = cos ϕ` and its partial derivatives `β1 = ∂α/∂θ`, `β2 = ∂α/∂φ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlphaBeta<T> {
    pub alpha: T,
    pub beta1: T,
    pub beta2: T,
}

pub fn gain_alpha_beta<T: Scalar>(dir: &Direction<T>, orient: &Orientation<T>) -> AlphaBeta<T> {
    let (st, ct) = dir.theta.sin_cos();
    let (sdt, cdt) = orient.delta_theta.sin_cos();
    let (sp, cp) = (dir.phi + orient.delta_phi).sin_cos();
    AlphaBeta {
        alpha: cos_deflection(dir, orient),
        beta1: ct * cdt * sp - st * sdt,
        beta2: st * cdt * cp,
    }
}

/// `(∂g/∂θ, ∂g/∂φ) = g0 p α^{p−1} (β1, β2)`.
///
/// Behind the array (`α ≤ 0`) the gain is identically zero, so integer `p`
/// yields zero derivatives there; fractional `p` has no derivative at the
/// support edge and is rejected.
pub fn gain_derivatives<T: Scalar>(
    params: &PatternParams<T>,
    dir: &Direction<T>,
    orient: &Orientation<T>,
) -> Result<(T, T)> {
    if params.p == T::zero() {
        return Ok((T::zero(), T::zero()));
    }
    let ab = gain_alpha_beta(dir, orient);
    if ab.alpha <= T::zero() {
        if params.p.fract() != T::zero() {
            return Err(Error::OutsidePatternSupport {
                alpha: ab.alpha.as_f64(),
            });
        }
        return Ok((T::zero(), T::zero()));
    }
    let common = params.g0() * params.p * ab.alpha.powf(params.p - T::one());
    Ok((common * ab.beta1, common * ab.beta2))
}

/// `∮ G(ϕ)² dΩ` over the whole sphere by the midpoint rule in
/// boresight-polar coordinates, with the emitter direction routed through
/// [`deflection_angle`] at the initial attitude. Equals `4π` for any `p`.
pub fn pattern_power_integral<T: Scalar>(params: &PatternParams<T>, n_polar: usize, n_azimuth: usize) -> T {
    let id = Orientation::identity();
    let h_polar = T::pi() / T::lit(n_polar as f64);
    let h_az = T::two_pi() / T::lit(n_azimuth as f64);
    let mut total = T::zero();
    for i in 0..n_polar {
        let v = (T::lit(i as f64) + T::lit(0.5)) * h_polar;
        let (sv, cv) = v.sin_cos();
        let mut ring = T::zero();
        for j in 0..n_azimuth {
            let (sa, ca) = (T::lit(j as f64) * h_az).sin_cos();
            // boresight is +y
            let u = nalgebra::Vector3::new(sv * ca, cv, sv * sa);
            let g = params.element_pattern(deflection_angle(&Direction::from_vector(&u), &id));
            ring += g * g;
        }
        total += ring * sv;
    }
    total * h_polar * h_az
}
