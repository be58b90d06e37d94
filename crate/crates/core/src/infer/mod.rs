//! Hyperparameter inference and the noisy-data sampler.

pub mod gibbs;
pub mod mcmc;
pub mod optimize;

pub use gibbs::{gibbs_noisy, latent_posterior_mean, sample_latent, GibbsConfig, GibbsOutput, NoiseModel};
pub use mcmc::{adaptive_mh, effective_sample_size, MhConfig, MhOutput};
pub use optimize::{default_init, empirical_bayes, empirical_bayes_with, EmpiricalBayesFit, NelderMeadOptions};
