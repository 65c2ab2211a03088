//! Narrowband snapshot synthesis for one emitter seen by the directive array.
//!
//! Column `k` of a block is `s_k g(ϕ) a + n_k`, where `s_k = sqrt(P_t) e^{jω_k}`
//! has constant modulus and uniform phase, `a` is the steering vector in the
//! current array frame and `n_k` is circular white Gaussian noise with
//! variance `σ²` per complex sample. All powers are linear (watts).
//!
//! # Debug dump format
//!
//! [`SnapshotBlock::write_csv`] emits a header line `element,snapshot,re,im`
//! followed by one row per sample, element-major within each snapshot.
//! `element` is the flat index `m * n_x + n` (z row `m`, x column `n`).

use std::io::Write;

use nalgebra::{Complex, DMatrix, DVector, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::geometry::{deflection_angle, ArrayGeometry, Direction, Orientation};
use crate::pattern::{directive_gain, PatternParams};
use crate::scalar::{cis, Scalar};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SourceParams<T> {
    /// `E|s|² = P_t`, watts.
    pub transmit_power: T,
    /// Noise variance per complex sample, watts.
    pub noise_power: T,
    pub snapshots: usize,
    pub seed: u64,
}

impl<T: Scalar> SourceParams<T> {
    pub fn new(transmit_power: T, noise_power: T, snapshots: usize, seed: u64) -> Result<Self> {
        if !(transmit_power > T::zero()) || !transmit_power.is_finite() {
            return Err(Error::param("transmit_power", "must be positive"));
        }
        if !(noise_power > T::zero()) || !noise_power.is_finite() {
            return Err(Error::param("noise_power", "must be positive"));
        }
        if snapshots == 0 {
            return Err(Error::param("snapshots", "must be at least 1"));
        }
        Ok(Self {
            transmit_power,
            noise_power,
            snapshots,
            seed,
        })
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

/// `K` snapshots across all `M·N` elements plus the ground truth that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotBlock<T: Scalar> {
    /// `(M·N) × K`.
    pub data: DMatrix<Complex<T>>,
    pub geom: ArrayGeometry<T>,
    pub orient: Orientation<T>,
    pub truth: Direction<T>,
    pub source: SourceParams<T>,
    /// Amplitude gain `g(ϕ)` the block was synthesized with.
    pub gain: T,
    /// `false` when the emitter sits behind the array and the block is pure noise.
    pub front_hemisphere: bool,
}

impl<T: Scalar> SnapshotBlock<T> {
    pub fn n_snapshots(&self) -> usize {
        self.data.ncols()
    }

    /// Per-element SNR `g² P_t / σ²`, linear.
    pub fn element_snr(&self) -> T {
        self.gain * self.gain * self.source.transmit_power / self.source.noise_power
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["element", "snapshot", "re", "im"])?;
        for k in 0..self.data.ncols() {
            for e in 0..self.data.nrows() {
                let z = self.data[(e, k)];
                w.write_record(&[
                    e.to_string(),
                    k.to_string(),
                    format!("{:e}", z.re.as_f64()),
                    format!("{:e}", z.im.as_f64()),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// The two one-dimensional factors `(a_z, a_x)` for an array-frame direction `u`.
pub fn axis_factors<T: Scalar>(geom: &ArrayGeometry<T>, u: &Vector3<T>) -> (DVector<Complex<T>>, DVector<Complex<T>>) {
    let k = geom.wavenumber();
    let a_z = DVector::from_fn(geom.n_z, |m, _| cis(k * geom.z_coord(m) * u.z));
    let a_x = DVector::from_fn(geom.n_x, |n, _| cis(k * geom.x_coord(n) * u.x));
    (a_z, a_x)
}

/// Steering vector for an array-frame direction vector.
pub fn steering_vector_local<T: Scalar>(geom: &ArrayGeometry<T>, u: &Vector3<T>) -> DVector<Complex<T>> {
    let k = geom.wavenumber();
    DVector::from_fn(geom.n_elements(), |i, _| {
        let (m, n) = (i / geom.n_x, i % geom.n_x);
        cis(k * (geom.x_coord(n) * u.x + geom.z_coord(m) * u.z))
    })
}

/// Unit-modulus response of every element to a plane wave from `dir`.
pub fn steering_vector<T: Scalar>(
    geom: &ArrayGeometry<T>,
    dir: &Direction<T>,
    orient: &Orientation<T>,
) -> DVector<Complex<T>> {
    steering_vector_local(geom, &orient.to_array_frame(&dir.unit_vector()))
}

pub fn synthesize<T: Scalar>(
    geom: &ArrayGeometry<T>,
    pattern: &PatternParams<T>,
    dir: &Direction<T>,
    orient: &Orientation<T>,
    source: &SourceParams<T>,
) -> SnapshotBlock<T> {
    let varphi = deflection_angle(dir, orient);
    let gain = directive_gain(pattern, varphi);
    let a = steering_vector(geom, dir, orient);
    let amplitude = source.transmit_power.sqrt() * gain;
    let sigma = (source.noise_power.as_f64() / 2.0).sqrt();

    let mut rng = ChaCha8Rng::seed_from_u64(source.seed);
    let phases: Vec<T> = (0..source.snapshots)
        .map(|_| T::lit(rng.random::<f64>() * std::f64::consts::TAU))
        .collect();
    let mut normal = || {
        let x: f64 = rng.sample(StandardNormal);
        T::lit(sigma * x)
    };
    let mut data = DMatrix::from_element(geom.n_elements(), source.snapshots, Complex::new(T::zero(), T::zero()));
    for (k, &w) in phases.iter().enumerate() {
        let s = cis(w) * amplitude;
        for (i, ai) in a.iter().enumerate() {
            let re = normal();
            let im = normal();
            data[(i, k)] = s * ai + Complex::new(re, im);
        }
    }
    SnapshotBlock {
        data,
        geom: *geom,
        orient: *orient,
        truth: *dir,
        source: *source,
        gain,
        front_hemisphere: varphi < T::frac_pi_2(),
    }
}
