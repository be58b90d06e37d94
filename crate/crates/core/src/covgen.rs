//! Ground-truth covariance models and Gaussian replicate simulation.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::geometry::LocationSet;
use crate::special::matern_correlation;

#[derive(Debug, Clone, PartialEq)]
pub enum CovarianceModel {
    /// variance · M_nu(d / range)
    Matern { variance: f64, range: f64, smoothness: f64 },
    /// theta1 · exp(-theta2 · d / 2)
    Exponential { theta1: f64, theta2: f64 },
    /// variance · (1 + (d / range)^alpha)^(-beta / alpha)
    Cauchy { variance: f64, range: f64, alpha: f64, beta: f64 },
    /// Kernel-convolution Matérn with local kernels
    /// diag(x_range², (y_intercept + y_slope · s_y)²). Two-dimensional sites only.
    NonstatAnisoMatern {
        variance: f64,
        smoothness: f64,
        x_range: f64,
        y_intercept: f64,
        y_slope: f64,
    },
}

impl CovarianceModel {
    /// Nonstationary anisotropic Matérn with x-range 0.05 and y-range 0.05 + 0.45 s_y.
    pub fn paciorek(variance: f64, smoothness: f64) -> Self {
        CovarianceModel::NonstatAnisoMatern {
            variance,
            smoothness,
            x_range: 0.05,
            y_intercept: 0.05,
            y_slope: 0.45,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidInput(format!("{name} must be positive, got {v}")))
            }
        };
        match *self {
            CovarianceModel::Matern { variance, range, smoothness } => {
                positive("variance", variance)?;
                positive("range", range)?;
                positive("smoothness", smoothness)
            }
            CovarianceModel::Exponential { theta1, theta2 } => {
                positive("theta1", theta1)?;
                positive("theta2", theta2)
            }
            CovarianceModel::Cauchy { variance, range, alpha, beta } => {
                positive("variance", variance)?;
                positive("range", range)?;
                positive("alpha", alpha)?;
                positive("beta", beta)
            }
            CovarianceModel::NonstatAnisoMatern { variance, smoothness, x_range, y_intercept, y_slope } => {
                positive("variance", variance)?;
                positive("smoothness", smoothness)?;
                positive("x_range", x_range)?;
                positive("y_intercept", y_intercept)?;
                if !(y_slope >= 0.0 && y_slope.is_finite()) {
                    return Err(Error::InvalidInput("y_slope must be non-negative".into()));
                }
                Ok(())
            }
        }
    }

    /// Stationary covariance at distance `d`; `None` for the nonstationary model.
    pub fn stationary(&self, d: f64) -> Option<f64> {
        match *self {
            CovarianceModel::Matern { variance, range, smoothness } => {
                Some(variance * matern_correlation(d / range, smoothness))
            }
            CovarianceModel::Exponential { theta1, theta2 } => Some(theta1 * (-theta2 * d / 2.0).exp()),
            CovarianceModel::Cauchy { variance, range, alpha, beta } => {
                Some(variance * (1.0 + (d / range).powf(alpha)).powf(-beta / alpha))
            }
            CovarianceModel::NonstatAnisoMatern { .. } => None,
        }
    }

    /// Covariance between two sites.
    pub fn evaluate(&self, a: &[f64], b: &[f64]) -> f64 {
        if let Some(v) = self.stationary(euclid(a, b)) {
            return v;
        }
        let CovarianceModel::NonstatAnisoMatern { variance, smoothness, x_range, y_intercept, y_slope } = *self
        else {
            unreachable!()
        };
        let ry = |s: &[f64]| y_intercept + y_slope * s[1];
        // local kernels are diagonal, so every matrix below is diagonal
        let (ax, ay) = (x_range * x_range, ry(a).powi(2));
        let (bx, by) = (x_range * x_range, ry(b).powi(2));
        let (mx, my) = (0.5 * (ax + bx), 0.5 * (ay + by));
        let prefactor = (ax * ay).powf(0.25) * (bx * by).powf(0.25) / (mx * my).sqrt();
        let dx = a[0] - b[0];
        let dy = a[1] - b[1];
        let q = (dx * dx / mx + dy * dy / my).sqrt();
        variance * prefactor * matern_correlation(q, smoothness)
    }
}

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Dense n × n covariance of `model` over `locs`.
pub fn build_covariance(model: &CovarianceModel, locs: &LocationSet) -> Result<DMatrix<f64>> {
    model.validate()?;
    if matches!(model, CovarianceModel::NonstatAnisoMatern { .. }) && locs.dim() != 2 {
        return Err(Error::InvalidInput("the nonstationary model needs two-dimensional sites".into()));
    }
    let n = locs.len();
    let mut sigma = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let v = model.evaluate(locs.point(i), locs.point(j));
            if !v.is_finite() {
                return Err(Error::ModelEvaluation { row: i, col: j });
            }
            sigma[(i, j)] = v;
            sigma[(j, i)] = v;
        }
    }
    Ok(sigma)
}

/// Cholesky factor of `sigma`. If plain factorization fails, a diagonal
/// jitter of 1e-10, 1e-9, ..., 1e-6 times the mean diagonal is tried in turn.
pub fn cholesky_with_jitter(sigma: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if let Some(c) = sigma.clone().cholesky() {
        return Ok(c.unpack());
    }
    let n = sigma.nrows();
    let scale = sigma.diagonal().mean();
    let mut jitter = 1e-10 * scale;
    while jitter <= 1e-6 * scale * 1.0001 {
        let mut s = sigma.clone();
        for i in 0..n {
            s[(i, i)] += jitter;
        }
        if let Some(c) = s.cholesky() {
            log::warn!("covariance factorized after adding jitter {jitter:e}");
            return Ok(c.unpack());
        }
        jitter *= 10.0;
    }
    Err(Error::NotPositiveDefinite)
}

/// `nrep` iid N(0, sigma) rows, generated as L z from a seeded stream.
pub fn simulate_replicates(sigma: &DMatrix<f64>, nrep: usize, seed: u64) -> Result<DMatrix<f64>> {
    let l = cholesky_with_jitter(sigma)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(simulate_with_factor(&l, nrep, &mut rng))
}

/// Rows of `L z` for a lower-triangular factor `l`.
pub fn simulate_with_factor<R: rand::Rng + ?Sized>(l: &DMatrix<f64>, nrep: usize, rng: &mut R) -> DMatrix<f64> {
    let n = l.nrows();
    let mut y = DMatrix::zeros(nrep, n);
    for r in 0..nrep {
        let z = DVector::from_fn(n, |_, _| StandardNormal.sample(rng));
        let x = l * z;
        y.row_mut(r).copy_from(&x.transpose());
    }
    y
}

/// Elementwise product with exp(-d / taper_range), plus `nugget` on the diagonal.
pub fn taper(sigma: &DMatrix<f64>, locs: &LocationSet, taper_range: f64, nugget: f64) -> Result<DMatrix<f64>> {
    let n = locs.len();
    if sigma.nrows() != n || sigma.ncols() != n {
        return Err(Error::GeometryMismatch("matrix and sites disagree in size".into()));
    }
    if !(taper_range > 0.0) || !(nugget >= 0.0) {
        return Err(Error::InvalidInput("taper range must be positive and nugget non-negative".into()));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| {
        let t = sigma[(i, j)] * (-locs.euclidean(i, j) / taper_range).exp();
        if i == j {
            t + nugget
        } else {
            t
        }
    }))
}
