//! Gibbs sampler for noisy observations W = Y + e, e ~ N(0, tau2 I), with the
//! latent field Y modelled by the sparse inverse Cholesky prior.
//!
//! One sweep: theta | Y (a few Metropolis steps on the integrated likelihood),
//! then (U, D) | theta, Y, then Y | U, D, W, tau2, then tau2 | Y, W.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};

use crate::assembly::SparseICF;
use crate::error::{Error, Result};
use crate::geometry::OrderedGeometry;
use crate::infer::mcmc::{metropolis_step, AdaptiveProposal, MhConfig};
use crate::infer::optimize::default_init;
use crate::par;
use crate::prior::{in_support, Hyperparameters};
use crate::regress::{column_posteriors, integrated_log_likelihood};
use crate::rng::{derive_seed, substream};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseModel {
    Fixed(f64),
    /// tau2 ~ IG(a0, b0).
    Unknown { a0: f64, b0: f64 },
}

impl Default for NoiseModel {
    fn default() -> Self {
        NoiseModel::Unknown { a0: 0.01, b0: 0.01 }
    }
}

impl NoiseModel {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            NoiseModel::Fixed(t) => t > 0.0 && t.is_finite(),
            NoiseModel::Unknown { a0, b0 } => a0 > 0.0 && b0 > 0.0 && a0.is_finite() && b0.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!("invalid noise model {self:?}")))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GibbsConfig {
    pub n_sweeps: usize,
    pub n_burn: usize,
    /// Metropolis steps on theta per sweep; 0 keeps theta at `init_theta`.
    pub mh_steps: usize,
    pub adapt_start: usize,
    /// Defaults to the usual starting point computed from W.
    pub init_theta: Option<Hyperparameters>,
    /// Starting tau2 when it is unknown; defaults to a tenth of mean(W²).
    pub init_tau2: Option<f64>,
    /// Keep every post burn-in latent draw (ordered by original site).
    pub keep_latent: bool,
    pub seed: u64,
}

impl GibbsConfig {
    pub fn new(n_sweeps: usize, seed: u64) -> Self {
        GibbsConfig {
            n_sweeps,
            n_burn: n_sweeps / 2,
            mh_steps: 5,
            adapt_start: 1000,
            init_theta: None,
            init_tau2: None,
            keep_latent: false,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GibbsOutput {
    /// theta after each post burn-in sweep.
    pub theta: Vec<Hyperparameters>,
    /// tau2 after each post burn-in sweep (constant when fixed).
    pub tau2: Vec<f64>,
    /// Posterior mean of the latent field, N × n in original site order.
    pub latent_mean: DMatrix<f64>,
    pub latent_draws: Vec<DMatrix<f64>>,
    pub acceptance_rate: f64,
}

impl GibbsOutput {
    pub fn tau2_mean(&self) -> f64 {
        if self.tau2.is_empty() {
            return f64::NAN;
        }
        self.tau2.iter().sum::<f64>() / self.tau2.len() as f64
    }
}

/// Cholesky factor of Q = U D^{-1} U' + I / tau2 in ordered positions.
fn latent_precision_chol(factor: &SparseICF, tau2: f64) -> Result<nalgebra::Cholesky<f64, nalgebra::Dyn>> {
    let mut q = factor.dense_precision_ordered();
    for k in 0..q.nrows() {
        q[(k, k)] += 1.0 / tau2;
    }
    q.cholesky().ok_or(Error::NotPositiveDefinite)
}

fn check_latent_inputs(factor: &SparseICF, w_ordered: &DMatrix<f64>, tau2: f64) -> Result<()> {
    if w_ordered.ncols() != factor.n() {
        return Err(Error::GeometryMismatch(format!("{} columns for {} sites", w_ordered.ncols(), factor.n())));
    }
    if !(tau2 > 0.0 && tau2.is_finite()) {
        return Err(Error::InvalidInput(format!("tau2 = {tau2}")));
    }
    Ok(())
}

/// E[Y | W] = Q^{-1} W / tau2 for each replicate row; ordered positions in and out.
pub fn latent_posterior_mean(factor: &SparseICF, w_ordered: &DMatrix<f64>, tau2: f64) -> Result<DMatrix<f64>> {
    check_latent_inputs(factor, w_ordered, tau2)?;
    let chol = latent_precision_chol(factor, tau2)?;
    let rhs = w_ordered.transpose() / tau2;
    Ok(chol.solve(&rhs).transpose())
}

/// One draw of Y | U, D, W, tau2; replicate l uses substream l of `seed`.
/// Ordered positions in and out.
pub fn sample_latent(factor: &SparseICF, w_ordered: &DMatrix<f64>, tau2: f64, seed: u64) -> Result<DMatrix<f64>> {
    check_latent_inputs(factor, w_ordered, tau2)?;
    let chol = latent_precision_chol(factor, tau2)?;
    let l = chol.l();
    let n = factor.n();
    let rows = par::map_range(w_ordered.nrows(), |r| {
        let mut rng = substream(seed, r as u64);
        let b = w_ordered.row(r).transpose() / tau2;
        let mean = chol.solve(&b);
        let z = nalgebra::DVector::from_fn(n, |_, _| StandardNormal.sample(&mut rng));
        // L' x = z gives x ~ N(0, Q^{-1})
        let x = l.transpose().solve_upper_triangular(&z).expect("nonsingular Cholesky factor");
        mean + x
    });
    let mut y = DMatrix::zeros(w_ordered.nrows(), n);
    for (r, v) in rows.into_iter().enumerate() {
        y.row_mut(r).copy_from(&v.transpose());
    }
    Ok(y)
}

fn draw_tau2<R: Rng + ?Sized>(a0: f64, b0: f64, w: &DMatrix<f64>, y: &DMatrix<f64>, rng: &mut R) -> f64 {
    let ss = (w - y).norm_squared();
    let shape = a0 + w.len() as f64 / 2.0;
    let rate = b0 + ss / 2.0;
    let g = Gamma::new(shape, 1.0 / rate).expect("positive IG parameters");
    1.0 / g.sample(rng)
}

pub fn gibbs_noisy(
    w: &DMatrix<f64>,
    geometry: &OrderedGeometry,
    p: usize,
    noise: NoiseModel,
    config: &GibbsConfig,
) -> Result<GibbsOutput> {
    noise.validate()?;
    if config.n_burn > config.n_sweeps {
        return Err(Error::InvalidInput("n_burn exceeds n_sweeps".into()));
    }
    let w_ord = geometry.order_columns(w)?;
    let init = config.init_theta.unwrap_or_else(|| default_init(w));
    let mut tau2 = match noise {
        NoiseModel::Fixed(t) => t,
        NoiseModel::Unknown { .. } => config.init_tau2.unwrap_or_else(|| {
            let ms = w.norm_squared() / w.len().max(1) as f64;
            if ms > 0.0 {
                0.1 * ms
            } else {
                1.0
            }
        }),
    };
    if !(tau2 > 0.0 && tau2.is_finite()) {
        return Err(Error::InvalidInput(format!("initial tau2 = {tau2}")));
    }

    let mh = MhConfig { adapt_start: config.adapt_start, ..MhConfig::new(0, init, config.seed) };
    let mut proposal = AdaptiveProposal::new(&mh);
    let mut theta_rng = substream(derive_seed(config.seed, 1), 0);
    let mut tau_rng = substream(derive_seed(config.seed, 2), 0);

    let mut y = w_ord.clone();
    let mut state = init.log();
    let log_lik = |y: &DMatrix<f64>, x: &[f64; 3]| {
        if !in_support(x) {
            return f64::NEG_INFINITY;
        }
        integrated_log_likelihood(y, geometry, &Hyperparameters::from_log(*x), p).unwrap_or(f64::NEG_INFINITY)
    };
    proposal.observe(&state);

    let kept = config.n_sweeps - config.n_burn;
    let mut theta_out = Vec::with_capacity(kept);
    let mut tau_out = Vec::with_capacity(kept);
    let mut draws = Vec::new();
    let mut sum = DMatrix::zeros(w.nrows(), w.ncols());
    let mut accepted = 0usize;
    let mut proposed = 0usize;

    for sweep in 0..config.n_sweeps {
        if config.mh_steps > 0 {
            // the latent field changed, so the current log posterior must be refreshed
            let mut lp = log_lik(&y, &state);
            if !lp.is_finite() {
                return Err(Error::GibbsFactor { sweep });
            }
            let mut target = |x: &[f64; 3]| log_lik(&y, x);
            for _ in 0..config.mh_steps {
                accepted += metropolis_step(&mut state, &mut lp, &proposal, &mut target, &mut theta_rng) as usize;
                proposed += 1;
                proposal.observe(&state);
            }
        }
        let theta = Hyperparameters::from_log(state);
        let posts = column_posteriors(&y, geometry, &theta, p).map_err(|_| Error::GibbsFactor { sweep })?;
        let factor = SparseICF::sample_posterior(&posts, geometry, derive_seed(config.seed, 3 + 2 * sweep as u64))
            .map_err(|_| Error::GibbsFactor { sweep })?;
        y = sample_latent(&factor, &w_ord, tau2, derive_seed(config.seed, 4 + 2 * sweep as u64))
            .map_err(|_| Error::GibbsFactor { sweep })?;
        if let NoiseModel::Unknown { a0, b0 } = noise {
            tau2 = draw_tau2(a0, b0, &w_ord, &y, &mut tau_rng);
        }
        if sweep >= config.n_burn {
            theta_out.push(theta);
            tau_out.push(tau2);
            let y_orig = restore_rows(geometry, &y);
            sum += &y_orig;
            if config.keep_latent {
                draws.push(y_orig);
            }
        }
    }
    let latent_mean = if kept > 0 { sum / kept as f64 } else { DMatrix::from_element(w.nrows(), w.ncols(), f64::NAN) };
    let acceptance_rate = if proposed > 0 { accepted as f64 / proposed as f64 } else { 0.0 };
    Ok(GibbsOutput { theta: theta_out, tau2: tau_out, latent_mean, latent_draws: draws, acceptance_rate })
}

fn restore_rows(geometry: &OrderedGeometry, y_ordered: &DMatrix<f64>) -> DMatrix<f64> {
    let inv = geometry.inv_perm();
    DMatrix::from_fn(y_ordered.nrows(), y_ordered.ncols(), |r, c| y_ordered[(r, inv[c])])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::assemble;
    use crate::rng::seeded;

    fn identity_factor(n: usize) -> SparseICF {
        assemble((0..n).map(|_| (vec![], vec![], 1.0)).collect(), (0..n).collect()).unwrap()
    }

    #[test]
    fn identity_prior_halves_observations() {
        let f = identity_factor(3);
        let w = DMatrix::from_row_slice(2, 3, &[1.0, -2.0, 4.0, 0.5, 0.0, 3.0]);
        let mean = latent_posterior_mean(&f, &w, 1.0).unwrap();
        assert!((mean - &w / 2.0).abs().max() < 1e-14);
    }

    #[test]
    fn vanishing_noise_returns_observations() {
        let f = assemble(vec![(vec![], vec![], 2.0), (vec![0], vec![-0.7], 0.5)], vec![1, 0]).unwrap();
        let w = DMatrix::from_row_slice(1, 2, &[1.3, -0.4]);
        let y = sample_latent(&f, &w, 1e-12, 5).unwrap();
        assert!((y - w).abs().max() < 1e-4);
    }

    #[test]
    fn latent_draw_moments() {
        // Sigma = I, tau2 = 1: Y | W ~ N(W/2, I/2)
        let f = identity_factor(2);
        let reps = 20_000;
        let w = DMatrix::from_fn(reps, 2, |_, c| if c == 0 { 2.0 } else { -1.0 });
        let y = sample_latent(&f, &w, 1.0, 9).unwrap();
        let m0 = y.column(0).mean();
        let v0 = y.column(0).map(|v| (v - m0).powi(2)).mean();
        assert!((m0 - 1.0).abs() < 4.0 * (0.5f64 / reps as f64).sqrt());
        assert!((v0 - 0.5).abs() < 0.03);
    }

    #[test]
    fn noise_model_validation() {
        assert!(NoiseModel::Fixed(0.0).validate().is_err());
        assert!(NoiseModel::Unknown { a0: 1.0, b0: -1.0 }.validate().is_err());
        assert!(NoiseModel::default().validate().is_ok());
    }

    #[test]
    fn tau2_full_conditional_mean() {
        let w = DMatrix::from_element(10, 10, 1.0);
        let y = DMatrix::zeros(10, 10);
        // IG(1 + 50, 1 + 50): mean 51 / 50
        let draws: Vec<f64> = (0..4000).map(|s| draw_tau2(1.0, 1.0, &w, &y, &mut seeded(s))).collect();
        let mean = draws.iter().sum::<f64>() / draws.len() as f64;
        assert!((mean - 51.0 / 50.0).abs() < 0.02, "{mean}");
    }
}
