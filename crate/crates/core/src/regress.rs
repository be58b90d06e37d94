//! Per-column Bayesian regressions: conjugate normal-inverse-gamma posteriors
//! and the integrated likelihood of the hyperparameters.
//!
//! Column i regresses the data at ordered site i on the negated data at its
//! conditioning set, y_i = X_i u_i + e with e ~ N(0, d_i I). Under the prior
//! u_i | d_i ~ N(0, d_i V_i), d_i ~ IG(alpha_i, beta_i) the posterior is
//! NIG(u_hat, G, alpha + N/2, beta_tilde) and the marginal of y_i is a
//! multivariate t.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};

use crate::error::{Error, Result};
use crate::geometry::OrderedGeometry;
use crate::par;
use crate::prior::{column_prior, select_m, ColumnPrior, Hyperparameters};
use crate::special::ln_gamma;

#[derive(Debug, Clone, PartialEq)]
pub struct ColumnRegression {
    /// Ordered position of the response site.
    pub column: usize,
    pub y: DVector<f64>,
    /// Row l holds the negated neighbor data of replicate l.
    pub x: DMatrix<f64>,
}

/// Builds the regression for ordered position `i` (zero-based).
pub fn extract_regression(y_ordered: &DMatrix<f64>, g: &[usize], i: usize) -> Result<ColumnRegression> {
    let n = y_ordered.ncols();
    if i >= n {
        return Err(Error::GeometryMismatch(format!("column {i} out of range for {n} sites")));
    }
    if let Some(&bad) = g.iter().find(|&&j| j >= i) {
        return Err(Error::GeometryMismatch(format!("neighbor {bad} of column {i} is not previously ordered")));
    }
    let nrep = y_ordered.nrows();
    let x = DMatrix::from_fn(nrep, g.len(), |l, j| -y_ordered[(l, g[j])]);
    Ok(ColumnRegression { column: i, y: y_ordered.column(i).into_owned(), x })
}

/// Which linear system to factor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SolvePath {
    /// Precision when m <= N, Woodbury otherwise.
    #[default]
    Auto,
    /// Factor the m × m matrix X'X + V^{-1}.
    Precision,
    /// Factor the N × N matrix I + X V X'.
    Woodbury,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ColumnPosterior {
    pub u_hat: DVector<f64>,
    /// (X'X + V^{-1})^{-1}
    pub g: DMatrix<f64>,
    /// Lower Cholesky factor of G.
    pub g_chol: DMatrix<f64>,
    pub alpha_t: f64,
    pub beta_t: f64,
    /// Log marginal density of y_i under the prior.
    pub log_marginal: f64,
}

impl ColumnPosterior {
    pub fn m(&self) -> usize {
        self.u_hat.len()
    }

    /// Posterior mean of d_i.
    pub fn mean_d(&self) -> f64 {
        self.beta_t / (self.alpha_t - 1.0)
    }

    /// Marginal posterior variances of the entries of u_i.
    pub fn u_variances(&self) -> DVector<f64> {
        self.g.diagonal() * self.mean_d()
    }
}

struct Solved {
    u_hat: DVector<f64>,
    beta_t: f64,
    /// log|G| - log|V|
    log_det_ratio: f64,
    g: Option<DMatrix<f64>>,
}

fn resolve_path(path: SolvePath, m: usize, nrep: usize) -> SolvePath {
    match path {
        SolvePath::Auto if m <= nrep => SolvePath::Precision,
        SolvePath::Auto => SolvePath::Woodbury,
        p => p,
    }
}

fn solve(reg: &ColumnRegression, prior: &ColumnPrior, path: SolvePath, want_g: bool) -> Result<Solved> {
    let m = reg.x.ncols();
    let nrep = reg.y.len();
    if prior.v.len() != m {
        return Err(Error::GeometryMismatch(format!(
            "prior has {} variance multipliers for {m} regressors",
            prior.v.len()
        )));
    }
    let fail = || Error::PosteriorFactorization { column: reg.column };
    if nrep == 0 || m == 0 {
        let yy = reg.y.norm_squared();
        return Ok(Solved {
            u_hat: DVector::zeros(m),
            beta_t: prior.beta + yy / 2.0,
            log_det_ratio: 0.0,
            g: want_g.then(|| DMatrix::from_diagonal(&DVector::from_column_slice(&prior.v))),
        });
    }
    let yy = reg.y.norm_squared();
    match resolve_path(path, m, nrep) {
        SolvePath::Precision | SolvePath::Auto => {
            let mut a = reg.x.tr_mul(&reg.x);
            for (j, v) in prior.v.iter().enumerate() {
                a[(j, j)] += 1.0 / v;
            }
            let chol = a.cholesky().ok_or_else(fail)?;
            let b = reg.x.tr_mul(&reg.y);
            let u_hat = chol.solve(&b);
            let quad = (yy - b.dot(&u_hat)).max(0.0);
            let log_det_a = 2.0 * chol.l_dirty().diagonal().iter().map(|v| v.ln()).sum::<f64>();
            let log_det_v: f64 = prior.v.iter().map(|v| v.ln()).sum();
            let g = want_g.then(|| chol.inverse());
            Ok(Solved { u_hat, beta_t: prior.beta + quad / 2.0, log_det_ratio: -log_det_a - log_det_v, g })
        }
        SolvePath::Woodbury => {
            let v = DVector::from_column_slice(&prior.v);
            let mut xv = reg.x.clone();
            for (j, mut col) in xv.column_iter_mut().enumerate() {
                col *= v[j];
            }
            let mut big = &xv * reg.x.transpose();
            for l in 0..nrep {
                big[(l, l)] += 1.0;
            }
            let chol = big.cholesky().ok_or_else(fail)?;
            let w = chol.solve(&reg.y);
            let quad = reg.y.dot(&w).max(0.0);
            let u_hat = xv.tr_mul(&w);
            let log_det_m = 2.0 * chol.l_dirty().diagonal().iter().map(|v| v.ln()).sum::<f64>();
            let g = want_g.then(|| {
                let inner = chol.solve(&xv);
                DMatrix::from_diagonal(&v) - xv.tr_mul(&inner)
            });
            Ok(Solved { u_hat, beta_t: prior.beta + quad / 2.0, log_det_ratio: -log_det_m, g })
        }
    }
}

fn log_marginal_from(solved: &Solved, prior: &ColumnPrior, nrep: usize) -> f64 {
    let alpha_t = prior.alpha + nrep as f64 / 2.0;
    -(nrep as f64) / 2.0 * (2.0 * PI).ln() + 0.5 * solved.log_det_ratio + prior.alpha * prior.beta.ln()
        - alpha_t * solved.beta_t.ln()
        + ln_gamma(alpha_t)
        - ln_gamma(prior.alpha)
}

pub fn nig_posterior(reg: &ColumnRegression, prior: &ColumnPrior) -> Result<ColumnPosterior> {
    nig_posterior_with(reg, prior, SolvePath::Auto)
}

pub fn nig_posterior_with(reg: &ColumnRegression, prior: &ColumnPrior, path: SolvePath) -> Result<ColumnPosterior> {
    let solved = solve(reg, prior, path, true)?;
    let nrep = reg.y.len();
    let log_marginal = log_marginal_from(&solved, prior, nrep);
    let mut g = solved.g.expect("requested");
    g = (&g + g.transpose()) * 0.5;
    let g_chol = if g.nrows() == 0 {
        DMatrix::zeros(0, 0)
    } else {
        g.clone()
            .cholesky()
            .ok_or(Error::PosteriorFactorization { column: reg.column })?
            .unpack()
    };
    Ok(ColumnPosterior {
        u_hat: solved.u_hat,
        g,
        g_chol,
        alpha_t: prior.alpha + nrep as f64 / 2.0,
        beta_t: solved.beta_t,
        log_marginal,
    })
}

/// log p(y_i | theta) for one column, without forming G.
pub fn column_log_marginal(reg: &ColumnRegression, prior: &ColumnPrior) -> Result<f64> {
    let solved = solve(reg, prior, SolvePath::Auto, false)?;
    Ok(log_marginal_from(&solved, prior, reg.y.len()))
}

fn check_inputs(y_ordered: &DMatrix<f64>, geometry: &OrderedGeometry) -> Result<()> {
    if y_ordered.ncols() != geometry.len() {
        return Err(Error::GeometryMismatch(format!(
            "data has {} columns for {} sites",
            y_ordered.ncols(),
            geometry.len()
        )));
    }
    Ok(())
}

/// Conditioning-set size implied by theta for this geometry.
pub fn implied_m(theta: &Hyperparameters, geometry: &OrderedGeometry) -> usize {
    select_m(theta.theta3(), geometry.m_max())
}

/// log p(Y | theta) including the (2 pi)^{-Nn/2} constant. Columns are
/// evaluated in parallel and summed sequentially in column order.
pub fn integrated_log_likelihood(
    y_ordered: &DMatrix<f64>,
    geometry: &OrderedGeometry,
    theta: &Hyperparameters,
    p: usize,
) -> Result<f64> {
    check_inputs(y_ordered, geometry)?;
    let m = implied_m(theta, geometry);
    let terms = par::map_range(geometry.len(), |i| {
        let g = geometry.neighbors_m(i, m);
        let reg = extract_regression(y_ordered, g, i)?;
        let prior = column_prior(i + 1, theta, p, g.len());
        column_log_marginal(&reg, &prior)
    });
    let mut total = 0.0;
    for t in terms {
        total += t?;
    }
    Ok(total)
}

/// Posteriors of every column at fixed theta.
pub fn column_posteriors(
    y_ordered: &DMatrix<f64>,
    geometry: &OrderedGeometry,
    theta: &Hyperparameters,
    p: usize,
) -> Result<Vec<ColumnPosterior>> {
    check_inputs(y_ordered, geometry)?;
    let m = implied_m(theta, geometry);
    par::map_range(geometry.len(), |i| {
        let g = geometry.neighbors_m(i, m);
        let reg = extract_regression(y_ordered, g, i)?;
        nig_posterior(&reg, &column_prior(i + 1, theta, p, g.len()))
    })
    .into_iter()
    .collect()
}

/// Point estimate of d_i.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MapConvention {
    /// Mode of the marginal IG posterior, beta / (alpha + 1).
    #[default]
    Marginal,
    /// d-coordinate of the joint (u, d) mode, beta / (alpha + m/2 + 1).
    Joint,
}

pub fn column_map(post: &ColumnPosterior) -> (DVector<f64>, f64) {
    column_map_with(post, MapConvention::Marginal)
}

pub fn column_map_with(post: &ColumnPosterior, convention: MapConvention) -> (DVector<f64>, f64) {
    let d = match convention {
        MapConvention::Marginal => post.beta_t / (post.alpha_t + 1.0),
        MapConvention::Joint => post.beta_t / (post.alpha_t + post.m() as f64 / 2.0 + 1.0),
    };
    (post.u_hat.clone(), d)
}

/// Draws d ~ IG(alpha_t, beta_t), then u ~ N(u_hat, d G).
pub fn column_sample<R: Rng + ?Sized>(post: &ColumnPosterior, rng: &mut R) -> (DVector<f64>, f64) {
    let gamma = Gamma::new(post.alpha_t, 1.0 / post.beta_t).expect("valid posterior");
    let d = 1.0 / gamma.sample(rng);
    let m = post.m();
    let z = DVector::from_fn(m, |_, _| StandardNormal.sample(rng));
    let u = &post.u_hat + (&post.g_chol * z) * d.sqrt();
    (u, d)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn prior(alpha: f64, beta: f64, v: &[f64]) -> ColumnPrior {
        ColumnPrior { alpha, beta, v: v.to_vec() }
    }

    #[test]
    fn extraction_sign_and_shapes() {
        let y = DMatrix::from_row_slice(1, 2, &[1.0, 2.0]);
        let r = extract_regression(&y, &[0], 1).unwrap();
        assert_eq!(r.y.as_slice(), &[2.0]);
        assert_eq!(r.x, DMatrix::from_row_slice(1, 1, &[-1.0]));
        let r0 = extract_regression(&y, &[], 0).unwrap();
        assert_eq!(r0.x.ncols(), 0);
        assert_eq!(r0.y.as_slice(), &[1.0]);
        assert!(matches!(extract_regression(&y, &[1], 1), Err(Error::GeometryMismatch(_))));
        assert!(matches!(extract_regression(&y, &[], 2), Err(Error::GeometryMismatch(_))));
    }

    #[test]
    fn extraction_round_trip() {
        let y = DMatrix::from_row_slice(3, 4, &[1., 2., 3., 4., 5., 6., 7., 8., 9., 10., 11., 12.]);
        let g = [2, 0];
        let r = extract_regression(&y, &g, 3).unwrap();
        for (j, &gj) in g.iter().enumerate() {
            assert_eq!(-r.x.column(j), y.column(gj));
        }
    }

    #[test]
    fn empty_data_returns_prior() {
        let reg = ColumnRegression { column: 1, y: DVector::zeros(0), x: DMatrix::zeros(0, 2) };
        let pr = prior(6.0, 1.5, &[0.5, 0.25]);
        let post = nig_posterior(&reg, &pr).unwrap();
        assert_eq!(post.u_hat, DVector::zeros(2));
        assert_eq!(post.g, DMatrix::from_diagonal(&DVector::from_vec(vec![0.5, 0.25])));
        assert_eq!(post.alpha_t, 6.0);
        assert_eq!(post.beta_t, 1.5);
        assert_eq!(post.log_marginal, 0.0);
    }

    #[test]
    fn hand_case_both_paths() {
        // G = 1 / (0.25 + 1) = 0.8, u = 0.8 * (-0.5) = -0.4,
        // beta = 1 + (1 - 0.4 * 0.5) / 2 = 1.4
        let reg = ColumnRegression {
            column: 1,
            y: DVector::from_vec(vec![1.0]),
            x: DMatrix::from_row_slice(1, 1, &[-0.5]),
        };
        let pr = prior(6.0, 1.0, &[1.0]);
        for path in [SolvePath::Precision, SolvePath::Woodbury] {
            let post = nig_posterior_with(&reg, &pr, path).unwrap();
            assert!((post.g[(0, 0)] - 0.8).abs() < 1e-14);
            assert!((post.u_hat[0] + 0.4).abs() < 1e-14);
            assert_eq!(post.alpha_t, 6.5);
            assert!((post.beta_t - 1.4).abs() < 1e-14);
            let (u, d) = column_map(&post);
            assert!((u[0] + 0.4).abs() < 1e-14);
            assert!((d - 1.4 / 7.5).abs() < 1e-14);
        }
    }

    #[test]
    fn zero_response() {
        let reg = ColumnRegression {
            column: 2,
            y: DVector::zeros(3),
            x: DMatrix::from_row_slice(3, 2, &[1.0, 0.3, -2.0, 0.1, 0.5, 0.7]),
        };
        let pr = prior(6.0, 0.7, &[1.0, 0.5]);
        let post = nig_posterior(&reg, &pr).unwrap();
        assert!(post.u_hat.amax() < 1e-15);
        assert_eq!(post.beta_t, 0.7);
    }

    #[test]
    fn prior_mode_map() {
        let reg = ColumnRegression { column: 0, y: DVector::zeros(0), x: DMatrix::zeros(0, 0) };
        let post = nig_posterior(&reg, &prior(6.0, 1.0, &[])).unwrap();
        let (u, d) = column_map(&post);
        assert_eq!(u.len(), 0);
        assert!((d - 1.0 / 7.0).abs() < 1e-15);
        let (_, dj) = column_map_with(&post, MapConvention::Joint);
        assert!((dj - 1.0 / 7.0).abs() < 1e-15);
    }

    #[test]
    fn sampling_moments_and_determinism() {
        let reg = ColumnRegression {
            column: 3,
            y: DVector::from_vec(vec![0.4, -1.2, 0.8, 0.1]),
            x: DMatrix::from_row_slice(4, 2, &[-0.3, 0.2, 1.1, -0.4, -0.7, 0.9, 0.2, 0.05]),
        };
        let post = nig_posterior(&reg, &prior(6.0, 2.0, &[0.8, 0.4])).unwrap();
        let mut rng = crate::rng::seeded(11);
        let draws = 100_000;
        let mut su = DVector::zeros(2);
        let mut sd = 0.0;
        let mut sd2 = 0.0;
        let mut su2 = DVector::zeros(2);
        for _ in 0..draws {
            let (u, d) = column_sample(&post, &mut rng);
            su2 += u.component_mul(&u);
            su += u;
            sd += d;
            sd2 += d * d;
        }
        let nd = draws as f64;
        let mean_u = &su / nd;
        let var_u = &su2 / nd - mean_u.component_mul(&mean_u);
        for j in 0..2 {
            let se = (var_u[j] / nd).sqrt();
            assert!((mean_u[j] - post.u_hat[j]).abs() < 3.0 * se, "u[{j}]");
        }
        let mean_d = sd / nd;
        let se_d = ((sd2 / nd - mean_d * mean_d) / nd).sqrt();
        assert!((mean_d - post.mean_d()).abs() < 3.0 * se_d);

        let a = column_sample(&post, &mut crate::rng::seeded(5));
        let b = column_sample(&post, &mut crate::rng::seeded(5));
        assert_eq!(a, b);
    }
}
