//! Scalar abstraction shared by every numeric module.
//!
//! The math is written once over [`Scalar`] and instantiated for `f32` and
//! `f64`. The Monte Carlo harness and the CLI run in `f64`.

use nalgebra::{Complex, RealField};
use num_traits::{FromPrimitive, ToPrimitive};

/// Real floating-point type the array model is evaluated in.
pub trait Scalar: RealField + Copy + FromPrimitive + ToPrimitive + Send + Sync + 'static {
    /// Lossy conversion from an `f64` literal.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable in scalar type")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Tolerance proportional to the type's epsilon, floored at `floor`.
    #[inline]
    fn tol(floor: f64, eps_multiple: f64) -> Self {
        let eps = Self::default_epsilon() * Self::lit(eps_multiple);
        let floor = Self::lit(floor);
        if eps > floor {
            eps
        } else {
            floor
        }
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// `e^{j theta}`.
#[inline]
pub fn cis<T: Scalar>(theta: T) -> Complex<T> {
    let (s, c) = theta.sin_cos();
    Complex::new(c, s)
}

#[inline]
pub fn deg<T: Scalar>(x: T) -> T {
    x * T::lit(180.0) / T::pi()
}

#[inline]
pub fn rad<T: Scalar>(x: T) -> T {
    x * T::pi() / T::lit(180.0)
}

/// `acos` with its argument clamped into `[-1, 1]`.
#[inline]
pub fn acos_clamped<T: Scalar>(x: T) -> T {
    x.clamp(-T::one(), T::one()).acos()
}

/// Wrap an angle into `[0, 2pi)`.
#[inline]
pub fn wrap_two_pi<T: Scalar>(x: T) -> T {
    let tau = T::two_pi();
    let mut y = x % tau;
    if y < T::zero() {
        y += tau;
    }
    if y >= tau {
        y -= tau;
    }
    y
}

/// Signed difference `a - b` wrapped into `(-pi, pi]`.
#[inline]
pub fn wrapped_diff<T: Scalar>(a: T, b: T) -> T {
    let mut d = wrap_two_pi(a - b);
    if d > T::pi() {
        d -= T::two_pi();
    }
    d
}
