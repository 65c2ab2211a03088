//! Single-shot two-angle direction finding from one snapshot block.
//!
//! Pipeline: sample covariance → Hermitian eigendecomposition (rank-one
//! signal subspace) → Root-MUSIC on each array axis → mirror-candidate
//! selection → local 2-D MUSIC refinement.
//!
//! Axis rooting. On the unit circle the MUSIC null spectrum
//! `a(z_x, z_z)ᴴ U_n U_nᴴ a(z_x, z_z)` is a Laurent polynomial in both
//! variables. Averaging it over the unit circle in one variable keeps only
//! the terms of degree zero in that variable, which is the partial trace of
//! the noise projector over that axis. The result is a univariate
//! polynomial whose roots near the unit circle carry `cos θ` (z axis) or
//! `sin θ cos φ` (x axis). Without noise the true root is an exact zero, so
//! the marginalization is unbiased.
//!
//! Mirror candidates. Every element of the planar array sits at `y = 0`, so
//! `φ` and `2π − φ` produce the same manifold and the same spectrum. The
//! candidate in front of the array (`sin φ ≥ 0`) wins ties; the directive
//! elements cannot receive from behind.

use nalgebra::{Complex, ComplexField, DMatrix, DVector, Vector3};

use crate::error::{Error, Result};
use crate::geometry::{ArrayGeometry, Direction};
use crate::scalar::{acos_clamped, cis, rad, wrap_two_pi, Scalar};
use crate::signal::{steering_vector_local, SnapshotBlock};

/// Lower clamp on the null-spectrum denominator.
pub const SPECTRUM_FLOOR: f64 = 1e-18;

#[derive(Debug, Clone, PartialEq)]
pub struct SubspaceDecomposition<T: Scalar> {
    pub covariance: DMatrix<Complex<T>>,
    /// Eigenvector of the largest eigenvalue.
    pub signal_basis: DVector<Complex<T>>,
    /// Remaining `M·N − 1` eigenvectors, columns in descending eigenvalue order.
    pub noise_basis: DMatrix<Complex<T>>,
    /// Descending.
    pub eigenvalues: DVector<T>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Candidate<T> {
    pub theta: T,
    pub phi: T,
    pub spectrum: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DoaEstimate<T> {
    pub theta_hat: T,
    pub phi_hat: T,
    /// MUSIC pseudo-spectrum at the estimate.
    pub spectrum_value: T,
    /// Mirror candidates from the azimuth ambiguity; the first one was kept.
    pub candidates: Vec<Candidate<T>>,
}

impl<T: Scalar> DoaEstimate<T> {
    pub fn direction(&self) -> Direction<T> {
        Direction::new(self.theta_hat, self.phi_hat)
    }
}

/// Local grid refinement around the rooted solution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefineOptions<T> {
    /// Half-width of the square search window, radians.
    pub half_width: T,
    /// Grid pitch, radians.
    pub step: T,
    /// Fit a quadratic to the 3×3 neighbourhood of the grid optimum.
    pub subgrid: bool,
}

impl<T: Scalar> Default for RefineOptions<T> {
    fn default() -> Self {
        Self {
            half_width: rad(T::lit(0.5)),
            step: rad(T::lit(0.01)),
            subgrid: true,
        }
    }
}

/// `(1/K) Σ_k y_k y_kᴴ`.
pub fn sample_covariance<T: Scalar>(block: &SnapshotBlock<T>) -> Result<DMatrix<Complex<T>>> {
    covariance_of(&block.data)
}

pub fn covariance_of<T: Scalar>(data: &DMatrix<Complex<T>>) -> Result<DMatrix<Complex<T>>> {
    let k = data.ncols();
    if k == 0 || data.nrows() == 0 {
        return Err(Error::EmptyBlock);
    }
    let mut cov = data * data.adjoint();
    cov /= Complex::new(T::lit(k as f64), T::zero());
    // exact Hermitian symmetry despite rounding in the product
    let n = cov.nrows();
    for i in 0..n {
        cov[(i, i)].im = T::zero();
        for j in (i + 1)..n {
            cov[(j, i)] = cov[(i, j)].conj();
        }
    }
    Ok(cov)
}

pub fn eigendecompose<T: Scalar>(cov: &DMatrix<Complex<T>>) -> Result<SubspaceDecomposition<T>> {
    let n = cov.nrows();
    if n == 0 || cov.ncols() != n {
        return Err(Error::param("covariance", "must be a nonempty square matrix"));
    }
    let scale = cov.norm();
    let residual = (cov - cov.adjoint()).norm();
    let tol = T::tol(1e-10, 100.0);
    if residual > tol * scale {
        return Err(Error::NonHermitian {
            residual: (residual / scale).as_f64(),
        });
    }
    let eig = cov.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].partial_cmp(&eig.eigenvalues[a]).unwrap_or(std::cmp::Ordering::Equal));
    let eigenvalues = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    if eigenvalues.iter().any(|v| !v.is_finite()) {
        return Err(Error::Eigen("non-finite eigenvalue".into()));
    }
    let vectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    Ok(SubspaceDecomposition {
        covariance: cov.clone(),
        signal_basis: vectors.column(0).into_owned(),
        noise_basis: vectors.columns(1, n - 1).into_owned(),
        eigenvalues,
    })
}

/// `1 / max(‖U_nᴴ a‖², floor)` for an array-frame direction.
pub fn music_spectrum<T: Scalar>(decomp: &SubspaceDecomposition<T>, geom: &ArrayGeometry<T>, dir: &Direction<T>) -> T {
    let a = steering_vector_local(geom, &dir.unit_vector());
    let proj = decomp.noise_basis.adjoint() * a;
    T::one() / proj.norm_squared().max(T::lit(SPECTRUM_FLOOR))
}

pub fn music_spectrum_grid<T: Scalar>(
    decomp: &SubspaceDecomposition<T>,
    geom: &ArrayGeometry<T>,
    grid: &[Direction<T>],
) -> Vec<T> {
    grid.iter().map(|d| music_spectrum(decomp, geom, d)).collect()
}

/// Fast null-spectrum evaluation through the signal vector:
/// `‖U_nᴴ a‖² = ‖a‖² − |u_sᴴ a|²` for a unitary eigenbasis.
struct NullSpectrum<'a, T: Scalar> {
    geom: &'a ArrayGeometry<T>,
    /// `conj(u_s)` reshaped to `n_z × n_x`.
    signal_conj: DMatrix<Complex<T>>,
}

impl<'a, T: Scalar> NullSpectrum<'a, T> {
    fn new(decomp: &SubspaceDecomposition<T>, geom: &'a ArrayGeometry<T>) -> Self {
        let signal_conj = DMatrix::from_fn(geom.n_z, geom.n_x, |m, n| decomp.signal_basis[geom.flat_index(m, n)].conj());
        Self { geom, signal_conj }
    }

    /// Projection of the z-factor, `Σ_m conj(u[m, ·]) a_z[m]`, for a given `cos θ`.
    fn row_weights(&self, cos_theta: T) -> DVector<Complex<T>> {
        let k = self.geom.wavenumber();
        let mut w = DVector::from_element(self.geom.n_x, Complex::new(T::zero(), T::zero()));
        for m in 0..self.geom.n_z {
            let az = cis(k * self.geom.z_coord(m) * cos_theta);
            for n in 0..self.geom.n_x {
                w[n] += self.signal_conj[(m, n)] * az;
            }
        }
        w
    }

    fn eval_with(&self, w: &DVector<Complex<T>>, u_x: T) -> T {
        let k = self.geom.wavenumber();
        let mut acc = Complex::new(T::zero(), T::zero());
        for n in 0..self.geom.n_x {
            acc += w[n] * cis(k * self.geom.x_coord(n) * u_x);
        }
        T::lit(self.geom.n_elements() as f64) - acc.norm_sqr()
    }

    fn eval(&self, theta: T, phi: T) -> T {
        let w = self.row_weights(theta.cos());
        self.eval_with(&w, theta.sin() * phi.cos())
    }
}

/// Roots of `Σ_i c_i z^i` from the eigenvalues of the companion matrix.
pub fn polynomial_roots<T: Scalar>(coeffs: &[Complex<T>]) -> Result<Vec<Complex<T>>> {
    let scale = coeffs.iter().fold(T::zero(), |m, c| m.max(c.modulus()));
    if scale == T::zero() {
        return Err(Error::Rooting("zero polynomial".into()));
    }
    let tiny = scale * T::default_epsilon();
    let hi = coeffs.iter().rposition(|c| c.modulus() > tiny).unwrap_or(0);
    let lo = coeffs.iter().position(|c| c.modulus() > tiny).unwrap_or(0);
    let mut roots = vec![Complex::new(T::zero(), T::zero()); lo];
    let c = &coeffs[lo..=hi];
    let degree = c.len() - 1;
    if degree == 0 {
        return Ok(roots);
    }
    let lead = c[degree];
    let mut companion = DMatrix::from_element(degree, degree, Complex::new(T::zero(), T::zero()));
    for i in 1..degree {
        companion[(i, i - 1)] = Complex::new(T::one(), T::zero());
    }
    for i in 0..degree {
        companion[(i, degree - 1)] = -c[i] / lead;
    }
    let eig = companion
        .eigenvalues()
        .ok_or_else(|| Error::Rooting("companion eigenvalues did not converge".into()))?;
    roots.extend(eig.iter().copied());
    if roots.iter().any(|r| !r.re.is_finite() || !r.im.is_finite()) {
        return Err(Error::Rooting("non-finite root".into()));
    }
    Ok(roots)
}

/// Laurent coefficients of the null spectrum averaged over the other axis,
/// ascending from `z^{-(L-1)}`; `along_z` selects which axis is kept.
fn axis_polynomial<T: Scalar>(decomp: &SubspaceDecomposition<T>, geom: &ArrayGeometry<T>, along_z: bool) -> Vec<Complex<T>> {
    let (len, other) = if along_z { (geom.n_z, geom.n_x) } else { (geom.n_x, geom.n_z) };
    let idx = |keep: usize, o: usize| if along_z { geom.flat_index(keep, o) } else { geom.flat_index(o, keep) };
    let u = &decomp.signal_basis;
    let zero = Complex::new(T::zero(), T::zero());
    let mut coeffs = vec![zero; 2 * len - 1];
    for a in 0..len {
        for b in 0..len {
            // [Tr_other(I − u uᴴ)]_{a,b}
            let mut entry = zero;
            for o in 0..other {
                entry -= u[idx(a, o)] * u[idx(b, o)].conj();
            }
            if a == b {
                entry += Complex::new(T::lit(other as f64), T::zero());
            }
            // conj(z^a) z^b = z^{b-a} on the unit circle
            coeffs[b + len - 1 - a] += entry;
        }
    }
    coeffs
}

/// Root of the axis polynomial nearest the unit circle, from inside.
fn axis_root<T: Scalar>(decomp: &SubspaceDecomposition<T>, geom: &ArrayGeometry<T>, along_z: bool) -> Result<Complex<T>> {
    let coeffs = axis_polynomial(decomp, geom, along_z);
    let roots = polynomial_roots(&coeffs)?;
    let inside: Vec<_> = roots.iter().copied().filter(|r| r.modulus() <= T::one()).collect();
    let pool = if inside.is_empty() { roots } else { inside };
    pool.into_iter()
        .filter(|r| r.modulus() > T::zero())
        .min_by(|a, b| {
            let da = (a.modulus() - T::one()).abs();
            let db = (b.modulus() - T::one()).abs();
            da.partial_cmp(&db).unwrap_or(std::cmp::Ordering::Equal)
        })
        .ok_or_else(|| Error::Rooting("no usable root".into()))
}

/// Direction in the current array frame from the two axis polynomials.
pub fn root_music<T: Scalar>(decomp: &SubspaceDecomposition<T>, geom: &ArrayGeometry<T>) -> Result<DoaEstimate<T>> {
    if geom.n_z < 2 || geom.n_x < 2 {
        return Err(Error::param("geometry", "both axes need at least two elements"));
    }
    let zz = axis_root(decomp, geom, true)?;
    let cos_theta = zz.argument() / (geom.wavenumber() * geom.d_z);
    if cos_theta.abs() > T::one() {
        return Err(Error::ElevationRootOutOfRange {
            value: cos_theta.as_f64(),
        });
    }
    let theta = cos_theta.acos();
    let sin_theta = theta.sin();
    if sin_theta < T::lit(1e-3) {
        return Err(Error::AzimuthUnobservable {
            sin_theta: sin_theta.as_f64(),
        });
    }
    let zx = axis_root(decomp, geom, false)?;
    let cos_phi = zx.argument() / (geom.wavenumber() * geom.d_x) / sin_theta;
    if cos_phi.abs() > T::one() + T::tol(1e-9, 16.0) {
        return Err(Error::AzimuthRootOutOfRange { value: cos_phi.as_f64() });
    }
    let front = acos_clamped(cos_phi);
    let mirror = wrap_two_pi(T::two_pi() - front);
    let mut candidates: Vec<Candidate<T>> = [front, mirror]
        .into_iter()
        .map(|phi| {
            let spectrum = music_spectrum(decomp, geom, &Direction::new(theta, phi));
            Candidate { theta, phi, spectrum }
        })
        .collect();
    let tie = T::tol(1e-9, 64.0) * candidates[0].spectrum.max(candidates[1].spectrum);
    if candidates[1].spectrum > candidates[0].spectrum + tie {
        candidates.swap(0, 1);
    }
    let best = candidates[0];
    Ok(DoaEstimate {
        theta_hat: best.theta,
        phi_hat: best.phi,
        spectrum_value: best.spectrum,
        candidates,
    })
}

/// Grid search (plus optional quadratic sub-grid step) of the MUSIC spectrum
/// around `start`.
pub fn refine<T: Scalar>(
    decomp: &SubspaceDecomposition<T>,
    geom: &ArrayGeometry<T>,
    start: &DoaEstimate<T>,
    opts: &RefineOptions<T>,
) -> DoaEstimate<T> {
    let null = NullSpectrum::new(decomp, geom);
    let half = (opts.half_width / opts.step).round().to_i64().unwrap_or(0).max(0);
    let width = (2 * half + 1) as usize;
    let (t0, p0) = (start.theta_hat, start.phi_hat);
    let theta_at = |i: i64| t0 + T::lit(i as f64) * opts.step;
    let phi_at = |j: i64| p0 + T::lit(j as f64) * opts.step;

    let mut table = vec![T::max_value().unwrap(); width * width];
    let mut best = (0i64, 0i64, T::max_value().unwrap());
    for i in -half..=half {
        let theta = theta_at(i);
        if theta <= T::zero() || theta >= T::pi() {
            continue;
        }
        let w = null.row_weights(theta.cos());
        let st = theta.sin();
        for j in -half..=half {
            let d = null.eval_with(&w, st * phi_at(j).cos());
            table[((i + half) as usize) * width + (j + half) as usize] = d;
            if d < best.2 {
                best = (i, j, d);
            }
        }
    }
    let (bi, bj, bd) = best;
    let mut theta = theta_at(bi);
    let mut phi = phi_at(bj);
    let mut d_best = bd;
    if opts.subgrid && bi.abs() < half && bj.abs() < half {
        let at = |di: i64, dj: i64| table[((bi + di + half) as usize) * width + (bj + dj + half) as usize];
        let two = T::lit(2.0);
        let gx = (at(1, 0) - at(-1, 0)) / two;
        let gy = (at(0, 1) - at(0, -1)) / two;
        let hxx = at(1, 0) - two * bd + at(-1, 0);
        let hyy = at(0, 1) - two * bd + at(0, -1);
        let hxy = (at(1, 1) - at(1, -1) - at(-1, 1) + at(-1, -1)) / T::lit(4.0);
        let det = hxx * hyy - hxy * hxy;
        if hxx > T::zero() && det > T::zero() {
            let dx = -(hyy * gx - hxy * gy) / det;
            let dy = -(hxx * gy - hxy * gx) / det;
            if dx.abs() <= T::one() && dy.abs() <= T::one() {
                let (tc, pc) = (theta + dx * opts.step, phi + dy * opts.step);
                let dc = null.eval(tc, pc);
                if dc <= d_best && tc > T::zero() && tc < T::pi() {
                    theta = tc;
                    phi = pc;
                    d_best = dc;
                }
            }
        }
    }
    DoaEstimate {
        theta_hat: theta,
        phi_hat: wrap_two_pi(phi),
        spectrum_value: T::one() / d_best.max(T::lit(SPECTRUM_FLOOR)),
        candidates: start.candidates.clone(),
    }
}

/// Covariance, eigendecomposition, Root-MUSIC and local refinement.
pub fn estimate<T: Scalar>(block: &SnapshotBlock<T>) -> Result<DoaEstimate<T>> {
    estimate_with(block, &RefineOptions::default())
}

pub fn estimate_with<T: Scalar>(block: &SnapshotBlock<T>, opts: &RefineOptions<T>) -> Result<DoaEstimate<T>> {
    let cov = sample_covariance(block)?;
    let decomp = eigendecompose(&cov)?;
    let rooted = root_music(&decomp, &block.geom)?;
    Ok(refine(&decomp, &block.geom, &rooted, opts))
}

/// Array-frame unit vector of an estimate.
pub fn estimate_vector<T: Scalar>(est: &DoaEstimate<T>) -> Vector3<T> {
    est.direction().unit_vector()
}
