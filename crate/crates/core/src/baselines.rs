//! Reference estimators: sample covariance, tapered sample covariance,
//! per-column least squares and a fitted exponential covariance.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};

use crate::assembly::{assemble, SparseICF};
use crate::covgen::taper;
use crate::error::{Error, Result};
use crate::geometry::{LocationSet, OrderedGeometry};
use crate::par;
use crate::regress::extract_regression;

/// Nugget added by [`scovt`] unless overridden.
pub const DEFAULT_TAPER_NUGGET: f64 = 1e-5;
/// Relative singular value cutoff of the least-squares pseudo-inverse.
pub const PINV_TOLERANCE: f64 = 1e-10;
/// Floor for residual variances of interpolating fits.
pub const MIN_RESIDUAL_VARIANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Estimator {
    Scov,
    Scovt,
    Mle,
    Exp,
    OursMap,
    OursBayes,
}

impl Estimator {
    pub const ALL: [Estimator; 6] =
        [Estimator::Scov, Estimator::Scovt, Estimator::Mle, Estimator::Exp, Estimator::OursMap, Estimator::OursBayes];

    pub fn tag(&self) -> &'static str {
        match self {
            Estimator::Scov => "scov",
            Estimator::Scovt => "scovt",
            Estimator::Mle => "mle",
            Estimator::Exp => "exp",
            Estimator::OursMap => "ours-map",
            Estimator::OursBayes => "ours-bayes",
        }
    }
}

impl fmt::Display for Estimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Estimator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Estimator::ALL
            .into_iter()
            .find(|e| e.tag() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown estimator '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Estimate {
    Dense(DMatrix<f64>),
    Factor(SparseICF),
}

impl Estimate {
    /// Dense covariance in original site order.
    pub fn dense(&self) -> Result<DMatrix<f64>> {
        match self {
            Estimate::Dense(s) => Ok(s.clone()),
            Estimate::Factor(f) => f.dense_covariance(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorOutput {
    pub estimator: Estimator,
    pub estimate: Estimate,
    /// Fitted parameters by name.
    pub params: Vec<(String, f64)>,
    pub runtime_secs: f64,
}

impl EstimatorOutput {
    pub fn label(&self) -> &'static str {
        self.estimator.tag()
    }
}

/// Y'Y / N (zero-mean model). With `center`, column means are removed first.
pub fn sample_cov_with(y: &DMatrix<f64>, center: bool) -> Result<DMatrix<f64>> {
    let nrep = y.nrows();
    if nrep == 0 {
        return Err(Error::InsufficientReplicates(0));
    }
    let s = if center {
        let mut c = y.clone();
        for mut col in c.column_iter_mut() {
            let m = col.mean();
            col.add_scalar_mut(-m);
        }
        c.tr_mul(&c)
    } else {
        y.tr_mul(y)
    };
    let s = s / nrep as f64;
    Ok((&s + s.transpose()) * 0.5)
}

pub fn sample_cov(y: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    sample_cov_with(y, false)
}

/// Sample covariance tapered by exp(-d / taper_range) plus a diagonal nugget.
pub fn scovt(y: &DMatrix<f64>, locs: &LocationSet, taper_range: f64, nugget: f64) -> Result<DMatrix<f64>> {
    if y.ncols() != locs.len() {
        return Err(Error::GeometryMismatch(format!("data has {} columns for {} sites", y.ncols(), locs.len())));
    }
    taper(&sample_cov(y)?, locs, taper_range, nugget)
}

/// Least-squares solution through the pseudo-inverse of X'X.
pub fn least_squares(x: &DMatrix<f64>, y: &DVector<f64>) -> DVector<f64> {
    if x.ncols() == 0 {
        return DVector::zeros(0);
    }
    let xtx = x.tr_mul(x);
    let svd = xtx.svd(true, true);
    let smax = svd.singular_values.max();
    let tol = PINV_TOLERANCE * smax;
    let u = svd.u.as_ref().expect("requested U");
    let vt = svd.v_t.as_ref().expect("requested V'");
    let b = u.tr_mul(&x.tr_mul(y));
    let scaled = DVector::from_fn(b.len(), |k, _| {
        let s = svd.singular_values[k];
        if s > tol && s > 0.0 {
            b[k] / s
        } else {
            0.0
        }
    });
    vt.tr_mul(&scaled)
}

/// Per-column maximum likelihood factor with m_i = min(m_ours, N - 1, i).
pub fn mle_regression(y_ordered: &DMatrix<f64>, geometry: &OrderedGeometry, m_ours: usize) -> Result<SparseICF> {
    let nrep = y_ordered.nrows();
    if nrep < 2 {
        return Err(Error::InsufficientReplicates(nrep));
    }
    if y_ordered.ncols() != geometry.len() {
        return Err(Error::GeometryMismatch(format!(
            "data has {} columns for {} sites",
            y_ordered.ncols(),
            geometry.len()
        )));
    }
    let m = m_ours.min(nrep - 1);
    let cols = par::map_range(geometry.len(), |i| {
        let g = geometry.neighbors_m(i, m);
        let reg = extract_regression(y_ordered, g, i)?;
        let u = least_squares(&reg.x, &reg.y);
        let resid = &reg.y - &reg.x * &u;
        let mut d = resid.norm_squared() / nrep as f64;
        if d < MIN_RESIDUAL_VARIANCE || !d.is_finite() {
            log::warn!("column {i}: residual variance {d:e} clamped to {MIN_RESIDUAL_VARIANCE:e}");
            d = MIN_RESIDUAL_VARIANCE;
        }
        Ok((g.to_vec(), u.as_slice().to_vec(), d))
    });
    assemble(cols.into_iter().collect::<Result<Vec<_>>>()?, geometry.perm().to_vec())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExponentialFit {
    pub variance: f64,
    pub range: f64,
    pub log_likelihood: f64,
    pub sigma: DMatrix<f64>,
}

/// Search bracket for the range, as multiples of the largest site distance.
pub const EXP_RANGE_BRACKET: (f64, f64) = (1e-3, 10.0);

fn exp_correlation(locs: &LocationSet, range: f64) -> DMatrix<f64> {
    let n = locs.len();
    DMatrix::from_fn(n, n, |i, j| (-locs.euclidean(i, j) / range).exp())
}

/// Profile log-likelihood at `range`, with the profiled variance.
fn exp_profile(locs: &LocationSet, s: &DMatrix<f64>, nrep: usize, range: f64) -> Option<(f64, f64)> {
    let n = locs.len() as f64;
    let chol = exp_correlation(locs, range).cholesky()?;
    let log_det = 2.0 * chol.l_dirty().diagonal().iter().map(|v| v.ln()).sum::<f64>();
    let v = chol.solve(s).trace() / n;
    if !(v > 0.0 && v.is_finite() && log_det.is_finite()) {
        return None;
    }
    let ll = -(nrep as f64) / 2.0 * (n * (2.0 * std::f64::consts::PI).ln() + n * v.ln() + log_det + n);
    Some((ll, v))
}

/// Fits v · exp(-d / range) by maximizing the Gaussian likelihood: v is
/// profiled out and log range found by golden-section search.
pub fn exponential_fit(y: &DMatrix<f64>, locs: &LocationSet) -> Result<ExponentialFit> {
    let n = locs.len();
    if y.ncols() != n {
        return Err(Error::GeometryMismatch(format!("data has {} columns for {n} sites", y.ncols())));
    }
    if n > crate::assembly::DEFAULT_DENSE_LIMIT {
        return Err(Error::DenseLimitExceeded { n, limit: crate::assembly::DEFAULT_DENSE_LIMIT });
    }
    let s = sample_cov(y)?;
    let nrep = y.nrows();
    let dmax = locs.max_distance();
    if !(dmax > 0.0) {
        return Err(Error::InvalidInput("at least two distinct sites are required".into()));
    }
    let mut lo = (EXP_RANGE_BRACKET.0 * dmax).ln();
    let mut hi = (EXP_RANGE_BRACKET.1 * dmax).ln();
    let eval = |t: f64| exp_profile(locs, &s, nrep, t.exp());
    // shrink the bracket until both ends factorize
    let mut tries = 0;
    while eval(hi).is_none() && tries < 60 {
        hi -= 0.25 * (hi - lo);
        tries += 1;
    }
    while eval(lo).is_none() && tries < 120 {
        lo += 0.25 * (hi - lo);
        tries += 1;
    }
    if tries > 0 {
        log::warn!("exponential fit bracket shrunk to [{:e}, {:e}]", lo.exp(), hi.exp());
    }
    let score = |t: f64| eval(t).map_or(f64::NEG_INFINITY, |(ll, _)| ll);
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let (mut fc, mut fd) = (score(c), score(d));
    while b - a > 1e-8 {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = score(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = score(d);
        }
    }
    let mid = 0.5 * (a + b);
    let best_t = [mid, lo, hi]
        .into_iter()
        .max_by(|x, y| score(*x).total_cmp(&score(*y)))
        .expect("non-empty");
    let (ll, v) = eval(best_t).ok_or(Error::NotPositiveDefinite)?;
    let range = best_t.exp();
    let sigma = exp_correlation(locs, range) * v;
    Ok(ExponentialFit { variance: v, range, log_likelihood: ll, sigma })
}

/// Log-likelihood of `y` under v · exp(-d / range); used to check fits.
pub fn exponential_log_likelihood(y: &DMatrix<f64>, locs: &LocationSet, variance: f64, range: f64) -> Result<f64> {
    let s = sample_cov(y)?;
    let n = locs.len() as f64;
    let r = exp_correlation(locs, range);
    let chol = (r * variance).cholesky().ok_or(Error::NotPositiveDefinite)?;
    let log_det = 2.0 * chol.l_dirty().diagonal().iter().map(|v| v.ln()).sum::<f64>();
    let quad = chol.solve(&s).trace();
    Ok(-(y.nrows() as f64) / 2.0 * (n * (2.0 * std::f64::consts::PI).ln() + log_det + quad))
}
