//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Everything the page needs is computed here; the page only draws.

use nalgebra::DMatrix;
use wasm_bindgen::prelude::*;

use sicf::fit::{fit_map, FitOptions};
use sicf::geometry::{DistanceMetric, OrderedGeometry};
use sicf::prior::{column_prior, select_m};
use sicf::rng::seeded;
use sicf::{build_covariance, kl_divergence, simulate_replicates, CovarianceModel, Hyperparameters, LocationSet, SparseICF};

fn js_err(e: impl std::fmt::Display) -> JsError {
    JsError::new(&e.to_string())
}

fn coords(locs: &LocationSet, axis: usize) -> Vec<f64> {
    (0..locs.len()).map(|i| locs.point(i)[axis]).collect()
}

/// Maximin ordering of a grid with its conditioning sets.
#[wasm_bindgen]
pub struct Ordering {
    locs: LocationSet,
    geometry: OrderedGeometry,
}

#[wasm_bindgen]
impl Ordering {
    #[wasm_bindgen(constructor)]
    pub fn new(rows: usize, cols: usize, m: usize) -> Result<Ordering, JsError> {
        let locs = LocationSet::grid(rows, cols).map_err(js_err)?;
        let geometry = OrderedGeometry::build(&locs, &DistanceMetric::Euclidean, m).map_err(js_err)?;
        Ok(Ordering { locs, geometry })
    }

    pub fn len(&self) -> usize {
        self.locs.len()
    }

    pub fn x(&self) -> Vec<f64> {
        coords(&self.locs, 0)
    }

    pub fn y(&self) -> Vec<f64> {
        coords(&self.locs, 1)
    }

    /// Site index at each ordered position.
    pub fn perm(&self) -> Vec<u32> {
        self.geometry.perm().iter().map(|&i| i as u32).collect()
    }

    /// Site indices conditioned on by ordered position `k`, nearest first.
    pub fn neighbors(&self, k: usize) -> Vec<u32> {
        if k >= self.geometry.len() {
            return Vec::new();
        }
        let perm = self.geometry.perm();
        self.geometry.neighbors(k).iter().map(|&j| perm[j] as u32).collect()
    }
}

/// Simulated Matérn data on a grid and the fitted factor.
#[wasm_bindgen]
pub struct Experiment {
    locs: LocationSet,
    sigma: DMatrix<f64>,
    y: DMatrix<f64>,
    fitted: Option<(Hyperparameters, usize, SparseICF, DMatrix<f64>)>,
}

#[wasm_bindgen]
impl Experiment {
    #[wasm_bindgen(constructor)]
    pub fn new(side: usize, range: f64, smoothness: f64, nrep: usize, seed: u64) -> Result<Experiment, JsError> {
        let locs = LocationSet::grid(side, side).map_err(js_err)?;
        let model = CovarianceModel::Matern { variance: 1.0, range, smoothness };
        model.validate().map_err(js_err)?;
        let sigma = build_covariance(&model, &locs).map_err(js_err)?;
        let y = simulate_replicates(&sigma, nrep, seed).map_err(js_err)?;
        Ok(Experiment { locs, sigma, y, fitted: None })
    }

    pub fn len(&self) -> usize {
        self.locs.len()
    }

    pub fn x(&self) -> Vec<f64> {
        coords(&self.locs, 0)
    }

    pub fn y(&self) -> Vec<f64> {
        coords(&self.locs, 1)
    }

    /// Empirical Bayes fit; returns theta1, theta2, theta3 and the selected m.
    pub fn fit(&mut self, m_max: usize) -> Result<Vec<f64>, JsError> {
        let opts = FitOptions { m_max, ..FitOptions::default() };
        let fit = fit_map(&self.y, &self.locs, &DistanceMetric::Euclidean, &opts).map_err(js_err)?;
        let sigma_hat = fit.factor.dense_covariance().map_err(js_err)?;
        let [a, b, c] = fit.theta().linear();
        let out = vec![a, b, c, fit.m as f64];
        self.fitted = Some((fit.theta(), fit.m, fit.factor, sigma_hat));
        Ok(out)
    }

    /// KL divergence of the fitted covariance from the truth.
    pub fn kl(&self) -> Result<f64, JsError> {
        let (_, _, _, s) = self.fitted.as_ref().ok_or_else(|| js_err("call fit first"))?;
        kl_divergence(s, &self.sigma).map_err(js_err)
    }

    /// Covariances between `site` and every site under the true model.
    pub fn true_row(&self, site: usize) -> Vec<f64> {
        row(&self.sigma, site)
    }

    /// Covariances between `site` and every site under the fit.
    pub fn fitted_row(&self, site: usize) -> Result<Vec<f64>, JsError> {
        let (_, _, _, s) = self.fitted.as_ref().ok_or_else(|| js_err("call fit first"))?;
        Ok(row(s, site))
    }

    /// One replicate of the simulated data.
    pub fn data(&self, k: usize) -> Vec<f64> {
        if k >= self.y.nrows() {
            return Vec::new();
        }
        self.y.row(k).iter().copied().collect()
    }

    /// A field drawn from the fitted model.
    pub fn sample(&self, seed: u64) -> Result<Vec<f64>, JsError> {
        let (_, _, f, _) = self.fitted.as_ref().ok_or_else(|| js_err("call fit first"))?;
        Ok(f.sample_field(&mut seeded(seed)))
    }
}

fn row(m: &DMatrix<f64>, site: usize) -> Vec<f64> {
    if site >= m.nrows() {
        return Vec::new();
    }
    m.row(site).iter().copied().collect()
}

/// Prior mean of the conditional variance d_i at ordered positions 1..=n.
#[wasm_bindgen]
pub fn prior_mean_d(theta1: f64, theta2: f64, theta3: f64, n: usize, p: usize) -> Result<Vec<f64>, JsError> {
    let theta = Hyperparameters::try_new(theta1, theta2, theta3).ok_or_else(|| js_err("theta must be positive"))?;
    Ok((1..=n).map(|i| column_prior(i, &theta, p.max(1), 0).mean_d()).collect())
}

/// Prior variance of the regression coefficients on the j-th nearest
/// neighbor for j = 1..=m_max at ordered position `i`, relative to d_i.
#[wasm_bindgen]
pub fn prior_coefficient_scale(theta1: f64, theta2: f64, theta3: f64, i: usize, p: usize, m_max: usize) -> Result<Vec<f64>, JsError> {
    let theta = Hyperparameters::try_new(theta1, theta2, theta3).ok_or_else(|| js_err("theta must be positive"))?;
    Ok(column_prior(i.max(1), &theta, p.max(1), m_max).v)
}

/// Conditioning-set size implied by theta3.
#[wasm_bindgen]
pub fn implied_m(theta3: f64, m_max: usize) -> usize {
    select_m(theta3, m_max)
}
