//! Array geometry, direction vectors and the rotating array frame.
//!
//! The array lies in the x–z plane of its own frame with boresight along +y.
//! Elements are indexed `(m, n)` with `m` running along z and `n` along x;
//! flattened vectors are row-major over `(m, n)`, i.e. index `m * n_x + n`,
//! which is the Kronecker ordering `a_z ⊗ a_x`.
//!
//! An [`Orientation`] stores the array attitude: the matrix whose columns are
//! the array axes written in world coordinates. A direction `u` in the world
//! is seen by the array as `rotationᵀ · u`.

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};
use crate::scalar::{acos_clamped, wrap_two_pi, Scalar};

/// Uniform planar array: `n_x` columns along x, `n_z` rows along z.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArrayGeometry<T> {
    pub n_x: usize,
    pub n_z: usize,
    /// Spacing along x in meters.
    pub d_x: T,
    /// Spacing along z in meters.
    pub d_z: T,
    /// Carrier wavelength in meters.
    pub wavelength: T,
}

impl<T: Scalar> ArrayGeometry<T> {
    pub fn new(n_x: usize, n_z: usize, d_x: T, d_z: T, wavelength: T) -> Result<Self> {
        if n_x == 0 {
            return Err(Error::param("n_x", "must be at least 1"));
        }
        if n_z == 0 {
            return Err(Error::param("n_z", "must be at least 1"));
        }
        for (name, v) in [("d_x", d_x), ("d_z", d_z), ("wavelength", wavelength)] {
            if !(v > T::zero()) || !v.is_finite() {
                return Err(Error::param(name, format!("must be positive, got {}", v.as_f64())));
            }
        }
        Ok(Self {
            n_x,
            n_z,
            d_x,
            d_z,
            wavelength,
        })
    }

    /// Square-pitch array with half-wavelength spacing on both axes.
    pub fn half_wavelength(n_x: usize, n_z: usize, wavelength: T) -> Result<Self> {
        let d = wavelength * T::lit(0.5);
        Self::new(n_x, n_z, d, d, wavelength)
    }

    #[inline]
    pub fn n_elements(&self) -> usize {
        self.n_x * self.n_z
    }

    /// `2π/λ`.
    #[inline]
    pub fn wavenumber(&self) -> T {
        T::two_pi() / self.wavelength
    }

    #[inline]
    pub fn flat_index(&self, m: usize, n: usize) -> usize {
        m * self.n_x + n
    }

    /// x coordinate of column `n` (no bounds check).
    #[inline]
    pub fn x_coord(&self, n: usize) -> T {
        (T::lit(n as f64) - T::lit((self.n_x as f64 - 1.0) / 2.0)) * self.d_x
    }

    /// z coordinate of row `m` (no bounds check).
    #[inline]
    pub fn z_coord(&self, m: usize) -> T {
        (T::lit(m as f64) - T::lit((self.n_z as f64 - 1.0) / 2.0)) * self.d_z
    }

    pub fn check_index(&self, m: usize, n: usize) -> Result<()> {
        if m >= self.n_z || n >= self.n_x {
            return Err(Error::InvalidElementIndex {
                m,
                n,
                n_z: self.n_z,
                n_x: self.n_x,
            });
        }
        Ok(())
    }

    /// Position of element `(m, n)` in the array frame, meters.
    pub fn element_position(&self, m: usize, n: usize) -> Result<Vector3<T>> {
        self.check_index(m, n)?;
        Ok(Vector3::new(self.x_coord(n), T::zero(), self.z_coord(m)))
    }

    /// `(Σ x_n², Σ z_m²)` by direct summation over one row and one column.
    pub fn moment_sums(&self) -> (T, T) {
        let s_n = (0..self.n_x).fold(T::zero(), |acc, n| acc + self.x_coord(n).powi(2));
        let s_m = (0..self.n_z).fold(T::zero(), |acc, m| acc + self.z_coord(m).powi(2));
        (s_n, s_m)
    }

    /// Closed form `N(N²−1)/12 · d²` of [`Self::moment_sums`].
    pub fn moment_sums_closed_form(&self) -> (T, T) {
        let f = |k: usize, d: T| {
            let k = k as f64;
            T::lit(k * (k * k - 1.0) / 12.0) * d * d
        };
        (f(self.n_x, self.d_x), f(self.n_z, self.d_z))
    }

    /// Physical panel area `(N d_x)(M d_z)`.
    pub fn panel_area(&self) -> T {
        T::lit(self.n_x as f64) * self.d_x * T::lit(self.n_z as f64) * self.d_z
    }
}

/// Emitter direction: polar angle from +z and azimuth from +x, radians.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Direction<T> {
    pub theta: T,
    pub phi: T,
}

impl<T: Scalar> Direction<T> {
    pub fn new(theta: T, phi: T) -> Self {
        Self { theta, phi }
    }

    pub fn from_degrees(theta_deg: T, phi_deg: T) -> Self {
        Self::new(crate::scalar::rad(theta_deg), crate::scalar::rad(phi_deg))
    }

    /// `[sinθ cosφ, sinθ sinφ, cosθ]`.
    pub fn unit_vector(&self) -> Vector3<T> {
        let (st, ct) = self.theta.sin_cos();
        let (sp, cp) = self.phi.sin_cos();
        Vector3::new(st * cp, st * sp, ct)
    }

    /// Angles of a (not necessarily normalized) direction vector; azimuth in `[0, 2π)`.
    pub fn from_vector(v: &Vector3<T>) -> Self {
        let v = v.normalize();
        Self {
            theta: acos_clamped(v.z),
            phi: wrap_two_pi(v.y.atan2(v.x)),
        }
    }
}

/// Attitude of the rotatable array relative to the world frame.
///
/// `delta_theta` / `delta_phi` are the tilt about x and the turn about z that
/// point the boresight where it currently points. For an orientation built by
/// [`rotation_matrix`] they are exactly its arguments; after composing steps
/// they are recovered from the boresight direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Orientation<T> {
    pub delta_theta: T,
    pub delta_phi: T,
    pub rotation: Matrix3<T>,
}

impl<T: Scalar> Orientation<T> {
    pub fn identity() -> Self {
        Self {
            delta_theta: T::zero(),
            delta_phi: T::zero(),
            rotation: Matrix3::identity(),
        }
    }

    /// Tilt counter-clockwise about x by `delta_theta`, then turn clockwise
    /// about z by `delta_phi`.
    ///
    /// The stored attitude is
    ///
    /// ```text
    ///     [  cΔφ   sΔφ cΔθ  -sΔφ sΔθ ]
    /// A = [ -sΔφ   cΔφ cΔθ  -cΔφ sΔθ ]
    ///     [   0      sΔθ       cΔθ   ]
    /// ```
    ///
    /// whose transpose `Rx(Δθ)·Rz(Δφ)`, with
    /// `Rz(b) = [[cb,-sb,0],[sb,cb,0],[0,0,1]]` and
    /// `Rx(a) = [[1,0,0],[0,ca,sa],[0,-sa,ca]]`, maps world directions into
    /// the array frame.
    pub fn from_angles(delta_theta: T, delta_phi: T) -> Self {
        let (sa, ca) = delta_theta.sin_cos();
        let (sb, cb) = delta_phi.sin_cos();
        #[rustfmt::skip]
        let rotation = Matrix3::new(
            cb,         sb * ca,   -sb * sa,
            -sb,        cb * ca,   -cb * sa,
            T::zero(),  sa,         ca,
        );
        Self {
            delta_theta,
            delta_phi,
            rotation,
        }
    }

    /// Boresight (array +y axis) in world coordinates.
    pub fn boresight(&self) -> Vector3<T> {
        self.rotation.column(1).into_owned()
    }

    /// Apply `step`, expressed in the current array frame, on top of `self`.
    pub fn then(&self, step: &Orientation<T>) -> Self {
        let rotation = self.rotation * step.rotation;
        let b = rotation.column(1);
        Self {
            delta_theta: b.z.clamp(-T::one(), T::one()).asin(),
            delta_phi: b.x.atan2(b.y),
            rotation,
        }
    }

    /// World vector seen in the array frame.
    #[inline]
    pub fn to_array_frame(&self, v: &Vector3<T>) -> Vector3<T> {
        self.rotation.transpose() * v
    }

    /// Array-frame vector expressed in the world.
    #[inline]
    pub fn to_world_frame(&self, v: &Vector3<T>) -> Vector3<T> {
        self.rotation * v
    }
}

impl<T: Scalar> Default for Orientation<T> {
    fn default() -> Self {
        Self::identity()
    }
}

pub fn element_position<T: Scalar>(geom: &ArrayGeometry<T>, m: usize, n: usize) -> Result<Vector3<T>> {
    geom.element_position(m, n)
}

pub fn unit_vector<T: Scalar>(dir: &Direction<T>) -> Vector3<T> {
    dir.unit_vector()
}

/// Angle between the emitter and the array boresight, `[0, π]`.
pub fn deflection_angle<T: Scalar>(dir: &Direction<T>, orient: &Orientation<T>) -> T {
    acos_clamped(cos_deflection(dir, orient))
}

/// `sinθ cosΔθ sin(φ+Δφ) + cosθ sinΔθ`.
#[inline]
pub(crate) fn cos_deflection<T: Scalar>(dir: &Direction<T>, orient: &Orientation<T>) -> T {
    let (st, ct) = dir.theta.sin_cos();
    let (sdt, cdt) = orient.delta_theta.sin_cos();
    st * cdt * (dir.phi + orient.delta_phi).sin() + ct * sdt
}

pub fn rotation_matrix<T: Scalar>(delta_theta: T, delta_phi: T) -> Orientation<T> {
    Orientation::from_angles(delta_theta, delta_phi)
}

/// Emitter direction expressed in the rotated array frame.
pub fn rotate_direction<T: Scalar>(dir: &Direction<T>, orient: &Orientation<T>) -> Vector3<T> {
    orient.to_array_frame(&dir.unit_vector())
}

/// Inverse of [`rotate_direction`]: array-frame vector back to world coordinates.
pub fn restore_direction<T: Scalar>(v: &Vector3<T>, orient: &Orientation<T>) -> Vector3<T> {
    orient.to_world_frame(v)
}

/// Received phase at element `(m, n)`, radians.
pub fn phase_term<T: Scalar>(
    geom: &ArrayGeometry<T>,
    m: usize,
    n: usize,
    dir: &Direction<T>,
    orient: &Orientation<T>,
) -> Result<T> {
    geom.check_index(m, n)?;
    let u = rotate_direction(dir, orient);
    Ok(phase_from_local(geom, m, n, &u))
}

#[inline]
pub(crate) fn phase_from_local<T: Scalar>(geom: &ArrayGeometry<T>, m: usize, n: usize, u: &Vector3<T>) -> T {
    geom.wavenumber() * (geom.x_coord(n) * u.x + geom.z_coord(m) * u.z)
}
