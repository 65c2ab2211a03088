//! Test-only oracles.
#![allow(dead_code)]

use nalgebra::{Complex, DMatrix, DVector};
use rotdoa::geometry::{ArrayGeometry, Direction, Orientation};
use rotdoa::pattern::{channel_gain, PatternParams};
use rotdoa::signal::{steering_vector, SourceParams};

/// Noise-free model mean `sqrt(P_t) g(ϕ) a(θ, φ)` for every element.
pub fn model_mean(
    geom: &ArrayGeometry<f64>,
    pattern: &PatternParams<f64>,
    source: &SourceParams<f64>,
    dir: &Direction<f64>,
    orient: &Orientation<f64>,
) -> DVector<Complex<f64>> {
    let amp = source.transmit_power.sqrt() * channel_gain(pattern, dir, orient);
    steering_vector(geom, dir, orient) * Complex::new(amp, 0.0)
}

/// Single-snapshot Fisher information divided by `2 P_t / σ²`, from central
/// differences of the model mean: `Σ Re{∂_i μ ∂_j μ*} / P_t`.
pub fn numeric_fim(
    geom: &ArrayGeometry<f64>,
    pattern: &PatternParams<f64>,
    source: &SourceParams<f64>,
    dir: &Direction<f64>,
    orient: &Orientation<f64>,
    h: f64,
) -> (f64, f64, f64) {
    let mu = |t: f64, p: f64| model_mean(geom, pattern, source, &Direction::new(t, p), orient);
    let dt = (mu(dir.theta + h, dir.phi) - mu(dir.theta - h, dir.phi)) / Complex::new(2.0 * h, 0.0);
    let dp = (mu(dir.theta, dir.phi + h) - mu(dir.theta, dir.phi - h)) / Complex::new(2.0 * h, 0.0);
    let dot = |a: &DVector<Complex<f64>>, b: &DVector<Complex<f64>>| -> f64 {
        a.iter().zip(b.iter()).map(|(x, y)| (x * y.conj()).re).sum::<f64>() / source.transmit_power
    };
    (dot(&dt, &dt), dot(&dt, &dp), dot(&dp, &dp))
}

/// MUSIC null spectrum `‖U_nᴴ a‖²` built from scratch: own covariance, own
/// eigendecomposition, steering phases from explicit element coordinates.
pub struct BruteMusic {
    projector: DMatrix<Complex<f64>>,
    positions: Vec<(f64, f64)>,
    k: f64,
}

impl BruteMusic {
    pub fn new(data: &DMatrix<Complex<f64>>, geom: &ArrayGeometry<f64>) -> Self {
        let cov = data * data.adjoint() / Complex::new(data.ncols() as f64, 0.0);
        let eig = cov.clone().symmetric_eigen();
        let top = (0..eig.eigenvalues.len())
            .max_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]))
            .unwrap();
        let u = eig.eigenvectors.column(top).into_owned();
        let n = u.len();
        let projector = DMatrix::identity(n, n) - &u * u.adjoint();
        let mut positions = Vec::new();
        for m in 0..geom.n_z {
            for nx in 0..geom.n_x {
                let x = (nx as f64 - (geom.n_x as f64 - 1.0) / 2.0) * geom.d_x;
                let z = (m as f64 - (geom.n_z as f64 - 1.0) / 2.0) * geom.d_z;
                positions.push((x, z));
            }
        }
        Self {
            projector,
            positions,
            k: 2.0 * std::f64::consts::PI / geom.wavelength,
        }
    }

    pub fn null(&self, theta: f64, phi: f64) -> f64 {
        let (ux, uz) = (theta.sin() * phi.cos(), theta.cos());
        let a = DVector::from_iterator(
            self.positions.len(),
            self.positions.iter().map(|&(x, z)| {
                let ph = self.k * (x * ux + z * uz);
                Complex::new(ph.cos(), ph.sin())
            }),
        );
        (a.adjoint() * &self.projector * &a)[(0, 0)].re
    }

    /// Multiscale exhaustive search over `θ ∈ (0, π)`, `φ ∈ [0, π]`, ending at
    /// `resolution` radians.
    pub fn grid_search(&self, resolution: f64) -> (f64, f64) {
        let mut step = 1f64.to_radians();
        let mut best = (f64::INFINITY, 0.0, 0.0);
        let mut t = step;
        while t < std::f64::consts::PI {
            let mut p = 0.0;
            while p <= std::f64::consts::PI + 1e-12 {
                let v = self.null(t, p);
                if v < best.0 {
                    best = (v, t, p);
                }
                p += step;
            }
            t += step;
        }
        while step > resolution * 1.0001 {
            let (t0, p0) = (best.1, best.2);
            let fine = (step / 10.0).max(resolution);
            let span = (10.0 * step / fine).round() as i64;
            for i in -span..=span {
                for j in -span..=span {
                    let (t, p) = (t0 + i as f64 * fine, p0 + j as f64 * fine);
                    let v = self.null(t, p);
                    if v < best.0 {
                        best = (v, t, p);
                    }
                }
            }
            step = fine;
        }
        (best.1, best.2)
    }
}

pub fn default_geometry() -> ArrayGeometry<f64> {
    ArrayGeometry::half_wavelength(6, 6, 0.125).unwrap()
}

/// Worst relative disagreement between analytic and finite-difference FIM
/// entries over `draws` random directions/attitudes with `α > 0.1`. The
/// cross term is measured against `sqrt(P R)` when it is itself tiny.
pub fn fim_oracle_worst(draws: usize, seed: u64) -> f64 {
    use rand::{Rng, SeedableRng};
    use rotdoa::crlb::fim_entries;
    use rotdoa::geometry::rotation_matrix;
    use rotdoa::pattern::gain_alpha_beta;

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let geom = default_geometry();
    let src = SourceParams::new(0.1, 1e-13, 100, 0).unwrap();
    let mut worst = 0.0f64;
    let mut done = 0;
    while done < draws {
        let dir = Direction::<f64>::from_degrees(rng.random_range(10.0..170.0), rng.random_range(10.0..170.0));
        let o = rotation_matrix(
            rng.random_range(-45f64..45.0).to_radians(),
            rng.random_range(-45f64..45.0).to_radians(),
        );
        let p = [0.0, 0.5, 1.0, 2.0][rng.random_range(0..4)];
        if gain_alpha_beta(&dir, &o).alpha <= 0.1 {
            continue;
        }
        let pat = PatternParams::new(p, geom.panel_area(), 250.0).unwrap();
        let f = fim_entries(&geom, &pat, &src, &dir, &o).unwrap();
        let (np, nq, nr) = numeric_fim(&geom, &pat, &src, &dir, &o, 1e-6);
        let rel = |a: f64, b: f64, floor: f64| (a - b).abs() / a.abs().max(b.abs()).max(floor);
        worst = worst
            .max(rel(f.p, np, 0.0))
            .max(rel(f.r, nr, 0.0))
            .max(rel(f.q, nq, 1e-6 * (f.p * f.r).sqrt()));
        done += 1;
    }
    worst
}
