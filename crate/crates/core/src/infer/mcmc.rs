//! Adaptive random-walk Metropolis on log theta (Haario-style: the proposal
//! covariance tracks the running covariance of the chain).

use nalgebra::{Matrix3, Vector3};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::geometry::OrderedGeometry;
use crate::prior::{in_support, Hyperparameters};
use crate::regress::integrated_log_likelihood;
use crate::rng::seeded;
use nalgebra::DMatrix;

#[derive(Debug, Clone, PartialEq)]
pub struct MhConfig {
    pub n_iter: usize,
    pub n_burn: usize,
    pub thin: usize,
    pub init: Hyperparameters,
    /// Iteration at which the proposal switches to the learned covariance.
    pub adapt_start: usize,
    /// Standard deviation (log scale) of the proposal before adaptation.
    pub initial_scale: f64,
    /// s_d multiplying the learned covariance.
    pub scale_factor: f64,
    /// Ridge added to the learned covariance.
    pub epsilon: f64,
    pub adapt: bool,
    pub seed: u64,
}

impl MhConfig {
    pub fn new(n_iter: usize, init: Hyperparameters, seed: u64) -> Self {
        MhConfig {
            n_iter,
            n_burn: n_iter / 2,
            thin: 1,
            init,
            adapt_start: 1000,
            initial_scale: 0.1,
            scale_factor: 2.38 * 2.38 / 3.0,
            epsilon: 1e-6,
            adapt: true,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_iter < self.n_burn {
            return Err(Error::InvalidInput("n_iter must be at least n_burn".into()));
        }
        if self.thin == 0 {
            return Err(Error::InvalidInput("thin must be at least 1".into()));
        }
        if !(self.scale_factor > 0.0 && self.epsilon > 0.0 && self.initial_scale > 0.0) {
            return Err(Error::InvalidInput("proposal scales must be positive".into()));
        }
        Ok(())
    }
}

/// Proposal state: streaming mean and covariance of the visited states.
#[derive(Debug, Clone)]
pub struct AdaptiveProposal {
    count: usize,
    mean: Vector3<f64>,
    m2: Matrix3<f64>,
    adapt_start: usize,
    initial_scale: f64,
    scale_factor: f64,
    epsilon: f64,
    adapt: bool,
}

impl AdaptiveProposal {
    pub fn new(config: &MhConfig) -> Self {
        AdaptiveProposal {
            count: 0,
            mean: Vector3::zeros(),
            m2: Matrix3::zeros(),
            adapt_start: config.adapt_start,
            initial_scale: config.initial_scale,
            scale_factor: config.scale_factor,
            epsilon: config.epsilon,
            adapt: config.adapt,
        }
    }

    /// Welford update with one more chain state.
    pub fn observe(&mut self, x: &[f64; 3]) {
        let x = Vector3::from_column_slice(x);
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        let delta2 = x - self.mean;
        self.m2 += delta * delta2.transpose();
    }

    pub fn chain_covariance(&self) -> Option<Matrix3<f64>> {
        (self.count >= 2).then(|| self.m2 / (self.count - 1) as f64)
    }

    pub fn is_adapted(&self) -> bool {
        self.adapt && self.count >= self.adapt_start.max(2)
    }

    /// Proposal covariance currently in use.
    pub fn covariance(&self) -> Matrix3<f64> {
        if self.is_adapted() {
            if let Some(c) = self.chain_covariance() {
                return (c + Matrix3::identity() * self.epsilon) * self.scale_factor;
            }
        }
        Matrix3::identity() * self.initial_scale * self.initial_scale
    }

    pub fn propose<R: Rng + ?Sized>(&self, x: &[f64; 3], rng: &mut R) -> [f64; 3] {
        let cov = self.covariance();
        let l = cov
            .cholesky()
            .map(|c| c.l())
            .unwrap_or_else(|| Matrix3::identity() * self.initial_scale);
        let z = Vector3::from_fn(|_, _| StandardNormal.sample(rng));
        let step = l * z;
        [x[0] + step[0], x[1] + step[1], x[2] + step[2]]
    }
}

/// Log Metropolis ratio for a symmetric proposal.
pub fn log_acceptance_ratio(current_log_post: f64, proposed_log_post: f64) -> f64 {
    proposed_log_post - current_log_post
}

/// One Metropolis step. Returns whether the proposal was accepted.
pub fn metropolis_step<R, F>(
    state: &mut [f64; 3],
    log_post: &mut f64,
    proposal: &AdaptiveProposal,
    target: &mut F,
    rng: &mut R,
) -> bool
where
    R: Rng + ?Sized,
    F: FnMut(&[f64; 3]) -> f64,
{
    let candidate = proposal.propose(state, rng);
    let lp = target(&candidate);
    if !lp.is_finite() {
        return false;
    }
    let log_ratio = log_acceptance_ratio(*log_post, lp);
    let u: f64 = rng.random();
    if log_ratio >= 0.0 || u.ln() < log_ratio {
        *state = candidate;
        *log_post = lp;
        true
    } else {
        false
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainRecord {
    pub iter: usize,
    pub theta: Hyperparameters,
    pub log_post: f64,
    pub accepted: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MhOutput {
    /// Post burn-in, thinned states.
    pub chain: Vec<ChainRecord>,
    pub acceptance_rate: f64,
    /// ESS of each log-theta coordinate over the post burn-in (unthinned) chain.
    pub ess: [f64; 3],
    /// Set when no proposal was ever accepted.
    pub degenerate: bool,
}

/// Runs the chain against an arbitrary log posterior on log theta.
pub fn adaptive_mh_target<F>(mut target: F, config: &MhConfig) -> Result<MhOutput>
where
    F: FnMut(&[f64; 3]) -> f64,
{
    config.validate()?;
    let mut rng = seeded(config.seed);
    let mut state = config.init.log();
    let mut log_post = target(&state);
    if !log_post.is_finite() {
        return Err(Error::Initialization);
    }
    let mut proposal = AdaptiveProposal::new(config);
    proposal.observe(&state);
    let mut accepted_total = 0usize;
    let mut chain = Vec::new();
    let mut post_burn: [Vec<f64>; 3] = Default::default();
    for iter in 0..config.n_iter {
        let accepted = metropolis_step(&mut state, &mut log_post, &proposal, &mut target, &mut rng);
        accepted_total += accepted as usize;
        proposal.observe(&state);
        if iter >= config.n_burn {
            for k in 0..3 {
                post_burn[k].push(state[k]);
            }
            if (iter - config.n_burn) % config.thin == 0 {
                chain.push(ChainRecord { iter, theta: Hyperparameters::from_log(state), log_post, accepted });
            }
        }
    }
    let acceptance_rate = if config.n_iter == 0 { 0.0 } else { accepted_total as f64 / config.n_iter as f64 };
    let degenerate = config.n_iter > 0 && accepted_total == 0;
    if degenerate {
        log::warn!("Metropolis chain accepted no proposals in {} iterations", config.n_iter);
    }
    let ess = [
        effective_sample_size(&post_burn[0]),
        effective_sample_size(&post_burn[1]),
        effective_sample_size(&post_burn[2]),
    ];
    Ok(MhOutput { chain, acceptance_rate, ess, degenerate })
}

/// Adaptive MH over theta with a flat prior on log theta.
pub fn adaptive_mh(
    y_ordered: &DMatrix<f64>,
    geometry: &OrderedGeometry,
    p: usize,
    config: &MhConfig,
) -> Result<MhOutput> {
    let target = |x: &[f64; 3]| {
        if !in_support(x) {
            return f64::NEG_INFINITY;
        }
        integrated_log_likelihood(y_ordered, geometry, &Hyperparameters::from_log(*x), p)
            .unwrap_or(f64::NEG_INFINITY)
    };
    adaptive_mh_target(target, config)
}

/// Effective sample size from autocorrelations, truncated with Geyer's
/// initial monotone positive sequence.
pub fn effective_sample_size(x: &[f64]) -> f64 {
    let n = x.len();
    if n < 4 {
        return n as f64;
    }
    let mean = x.iter().sum::<f64>() / n as f64;
    let centered: Vec<f64> = x.iter().map(|v| v - mean).collect();
    let var = centered.iter().map(|v| v * v).sum::<f64>() / n as f64;
    if var <= 0.0 {
        return 0.0;
    }
    let autocorr = |lag: usize| -> f64 {
        centered[..n - lag].iter().zip(&centered[lag..]).map(|(a, b)| a * b).sum::<f64>() / (n as f64 * var)
    };
    let mut sum_pairs = 0.0;
    let mut prev_pair = f64::INFINITY;
    let mut k = 0;
    while 2 * k + 1 < n {
        let mut pair = autocorr(2 * k) + autocorr(2 * k + 1);
        if pair <= 0.0 {
            break;
        }
        pair = pair.min(prev_pair);
        sum_pairs += pair;
        prev_pair = pair;
        k += 1;
    }
    let tau = (-1.0 + 2.0 * sum_pairs).max(1.0 / n as f64);
    n as f64 / tau
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ess_of_white_noise_is_near_n() {
        let mut rng = seeded(3);
        let x: Vec<f64> = (0..20_000).map(|_| StandardNormal.sample(&mut rng)).collect();
        let ess = effective_sample_size(&x);
        assert!(ess > 15_000.0 && ess < 25_000.0, "{ess}");
    }

    #[test]
    fn ess_of_ar1_matches_theory() {
        // AR(1) with phi: ESS / n = (1 - phi) / (1 + phi)
        let phi: f64 = 0.9;
        let mut rng = seeded(4);
        let mut x = Vec::with_capacity(200_000);
        let mut v = 0.0;
        for _ in 0..200_000 {
            let e: f64 = StandardNormal.sample(&mut rng);
            v = phi * v + e;
            x.push(v);
        }
        let ratio = effective_sample_size(&x) / x.len() as f64;
        let want = (1.0 - phi) / (1.0 + phi);
        assert!((ratio - want).abs() < 0.2 * want, "{ratio} vs {want}");
    }

    #[test]
    fn gaussian_target_recovered() {
        let target = |x: &[f64; 3]| -0.5 * (x[0] * x[0] + (x[1] - 1.0).powi(2) / 4.0 + x[2] * x[2] * 9.0);
        let mut cfg = MhConfig::new(40_000, Hyperparameters::new(1.0, 1.0, 1.0), 8);
        cfg.n_burn = 5000;
        let out = adaptive_mh_target(target, &cfg).unwrap();
        let n = out.chain.len() as f64;
        let mean1 = out.chain.iter().map(|r| r.theta.log()[1]).sum::<f64>() / n;
        let var1 = out.chain.iter().map(|r| (r.theta.log()[1] - mean1).powi(2)).sum::<f64>() / n;
        assert!((mean1 - 1.0).abs() < 0.15, "{mean1}");
        assert!((var1 - 4.0).abs() < 0.8, "{var1}");
        assert!(out.acceptance_rate > 0.1 && out.acceptance_rate < 0.6);
    }

    #[test]
    fn empty_chain_when_all_burn_in() {
        let cfg = MhConfig { n_burn: 50, ..MhConfig::new(50, Hyperparameters::new(1.0, 1.0, 1.0), 1) };
        let out = adaptive_mh_target(|_| 0.0, &cfg).unwrap();
        assert!(out.chain.is_empty());
    }

    #[test]
    fn invalid_config() {
        let mut cfg = MhConfig::new(10, Hyperparameters::new(1.0, 1.0, 1.0), 1);
        cfg.n_burn = 20;
        assert!(cfg.validate().is_err());
        cfg.n_burn = 0;
        cfg.thin = 0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn thinning_and_determinism() {
        let target = |x: &[f64; 3]| -0.5 * (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]);
        let cfg = MhConfig { n_burn: 100, thin: 7, ..MhConfig::new(1000, Hyperparameters::new(1.0, 1.0, 1.0), 2) };
        let a = adaptive_mh_target(target, &cfg).unwrap();
        let b = adaptive_mh_target(target, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.chain.len(), 900usize.div_ceil(7));
        assert!(a.chain.iter().all(|r| (r.iter - 100) % 7 == 0));
        assert!(a.chain.iter().all(|r| r.theta.linear().iter().all(|v| *v > 0.0 && v.is_finite())));
    }
}
