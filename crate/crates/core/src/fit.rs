//! End-to-end fitting: order the sites, estimate the hyperparameters and
//! assemble a factor.

use nalgebra::DMatrix;

use crate::assembly::SparseICF;
use crate::error::Result;
use crate::geometry::{DistanceMetric, LocationSet, OrderedGeometry, DEFAULT_M_MAX};
use crate::infer::optimize::{default_init, empirical_bayes_with, EmpiricalBayesFit, NelderMeadOptions};
use crate::prior::Hyperparameters;
use crate::regress::{column_posteriors, implied_m, MapConvention};

#[derive(Debug, Clone, PartialEq)]
pub struct FitOptions {
    pub m_max: usize,
    pub init: Option<Hyperparameters>,
    pub convention: MapConvention,
    pub optimizer: NelderMeadOptions,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            m_max: DEFAULT_M_MAX,
            init: None,
            convention: MapConvention::default(),
            optimizer: NelderMeadOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MapFit {
    pub geometry: OrderedGeometry,
    /// Data with columns in maximin order.
    pub y_ordered: DMatrix<f64>,
    pub eb: EmpiricalBayesFit,
    /// Conditioning-set size implied by the fitted theta3.
    pub m: usize,
    pub factor: SparseICF,
}

impl MapFit {
    pub fn theta(&self) -> Hyperparameters {
        self.eb.theta
    }
}

/// Point-estimate factor at fixed theta.
pub fn factor_at(
    y_ordered: &DMatrix<f64>,
    geometry: &OrderedGeometry,
    theta: &Hyperparameters,
    p: usize,
    convention: MapConvention,
) -> Result<SparseICF> {
    let posts = column_posteriors(y_ordered, geometry, theta, p)?;
    SparseICF::from_map(&posts, geometry, convention)
}

/// One posterior draw of the factor at fixed theta.
pub fn factor_draw(
    y_ordered: &DMatrix<f64>,
    geometry: &OrderedGeometry,
    theta: &Hyperparameters,
    p: usize,
    seed: u64,
) -> Result<SparseICF> {
    let posts = column_posteriors(y_ordered, geometry, theta, p)?;
    SparseICF::sample_posterior(&posts, geometry, seed)
}

/// Empirical-Bayes fit of `y` (replicates × sites, original order).
pub fn fit_map(y: &DMatrix<f64>, locs: &LocationSet, metric: &DistanceMetric, opts: &FitOptions) -> Result<MapFit> {
    let geometry = OrderedGeometry::build(locs, metric, opts.m_max)?;
    fit_map_with_geometry(y, geometry, locs.dim(), opts)
}

pub fn fit_map_with_geometry(
    y: &DMatrix<f64>,
    geometry: OrderedGeometry,
    p: usize,
    opts: &FitOptions,
) -> Result<MapFit> {
    let y_ordered = geometry.order_columns(y)?;
    let init = opts.init.unwrap_or_else(|| default_init(y));
    let eb = empirical_bayes_with(&y_ordered, &geometry, p, init, &opts.optimizer)?;
    let factor = factor_at(&y_ordered, &geometry, &eb.theta, p, opts.convention)?;
    let m = implied_m(&eb.theta, &geometry);
    Ok(MapFit { geometry, y_ordered, eb, m, factor })
}
