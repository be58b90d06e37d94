#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use statrs::function::gamma::ln_gamma;

use sicf::covgen::{build_covariance, simulate_replicates, CovarianceModel};
use sicf::geometry::{LocationSet, OrderedGeometry};
use sicf::prior::Hyperparameters;

pub struct Scenario {
    pub locs: LocationSet,
    pub sigma: DMatrix<f64>,
    pub y: DMatrix<f64>,
}

pub fn simulate(model: &CovarianceModel, locs: LocationSet, nrep: usize, seed: u64) -> Scenario {
    let sigma = build_covariance(model, &locs).unwrap();
    let y = simulate_replicates(&sigma, nrep, seed).unwrap();
    Scenario { locs, sigma, y }
}

pub fn matern(variance: f64, range: f64, smoothness: f64) -> CovarianceModel {
    CovarianceModel::Matern { variance, range, smoothness }
}

pub fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// log det and inverse through LU, independent of any Cholesky code path.
pub fn lu_logdet_inverse(a: &DMatrix<f64>) -> (f64, DMatrix<f64>) {
    let lu = a.clone().lu();
    let det = lu.determinant();
    assert!(det > 0.0, "matrix must have positive determinant");
    (det.ln(), lu.try_inverse().unwrap())
}

/// log density of the multivariate t with `dof` degrees of freedom, location
/// zero and scale matrix `scale`.
pub fn mvt_log_density(y: &DVector<f64>, scale: &DMatrix<f64>, dof: f64) -> f64 {
    let k = y.len() as f64;
    let (logdet, inv) = lu_logdet_inverse(scale);
    let q = (y.transpose() * inv * y)[(0, 0)];
    ln_gamma((dof + k) / 2.0) - ln_gamma(dof / 2.0) - k / 2.0 * (dof * std::f64::consts::PI).ln() - 0.5 * logdet
        - (dof + k) / 2.0 * (1.0 + q / dof).ln()
}

/// Oracle for the integrated likelihood. Every column's marginal is the
/// multivariate t, t_{2a}(0, (b / a)(I + X V X')), with the prior recomputed
/// here from its definition.
pub fn oracle_log_likelihood(y_ordered: &DMatrix<f64>, geometry: &OrderedGeometry, theta: &Hyperparameters, p: usize) -> f64 {
    let [t1, t2, t3] = theta.linear();
    let mut m = 0;
    for j in 1..=geometry.m_max() {
        if (-t3 * j as f64).exp() > 1e-3 {
            m = j;
        }
    }
    let m = m.max(1);
    let nrep = y_ordered.nrows();
    let mut total = 0.0;
    for i in 0..geometry.len() {
        let g = &geometry.neighbors(i)[..m.min(geometry.neighbors(i).len())];
        let f = 1.0 - (-t2 * ((i + 1) as f64).powf(-1.0 / p as f64)).exp();
        let alpha = 6.0;
        let beta = 5.0 * t1 * f;
        let v: Vec<f64> = (1..=g.len()).map(|j| (-t3 * j as f64).exp() / (t1 * f)).collect();
        let x = DMatrix::from_fn(nrep, g.len(), |l, j| -y_ordered[(l, g[j])]);
        let mut cov = DMatrix::<f64>::identity(nrep, nrep);
        for (j, vj) in v.iter().enumerate() {
            cov += x.column(j) * x.column(j).transpose() * *vj;
        }
        let y = y_ordered.column(i).into_owned();
        total += mvt_log_density(&y, &(cov * (beta / alpha)), 2.0 * alpha);
    }
    total
}

/// KL divergence through the eigenvalues of L^{-1} S_hat L^{-T}.
pub fn eigen_kl(sigma_hat: &DMatrix<f64>, sigma: &DMatrix<f64>) -> f64 {
    let l = sigma.clone().cholesky().unwrap().l();
    let linv = l.clone().try_inverse().unwrap();
    let m = &linv * sigma_hat * linv.transpose();
    let m = (&m + m.transpose()) * 0.5;
    m.symmetric_eigen().eigenvalues.iter().map(|lam| lam - lam.ln() - 1.0).sum()
}

/// Random SPD matrix A A' + n I / 4 from a seeded stream.
pub fn random_spd(n: usize, seed: u64) -> DMatrix<f64> {
    use rand::Rng;
    let mut rng = sicf::rng::seeded(seed);
    let a = DMatrix::from_fn(n, n, |_, _| rng.random::<f64>() * 2.0 - 1.0);
    &a * a.transpose() + DMatrix::identity(n, n) * (n as f64 / 4.0)
}
