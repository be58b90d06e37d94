mod common;

use nalgebra::DMatrix;

use common::{matern, median, oracle_log_likelihood, simulate};
use sicf::covgen::CovarianceModel;
use sicf::geometry::{DistanceMetric, LocationSet, OrderedGeometry};
use sicf::infer::{
    adaptive_mh, default_init, effective_sample_size, empirical_bayes, gibbs_noisy, GibbsConfig, MhConfig, NoiseModel,
};
use sicf::infer::mcmc::{log_acceptance_ratio, metropolis_step, AdaptiveProposal};
use sicf::prior::Hyperparameters;
use sicf::rng::seeded;
use sicf::integrated_log_likelihood;

fn ordered(locs: &LocationSet, y: &DMatrix<f64>, m_max: usize) -> (OrderedGeometry, DMatrix<f64>) {
    let g = OrderedGeometry::build(locs, &DistanceMetric::Euclidean, m_max).unwrap();
    let yo = g.order_columns(y).unwrap();
    (g, yo)
}

#[test]
fn empirical_bayes_improves_and_is_deterministic() {
    // a case whose optimum is interior rather than on the theta1 * theta2 ridge
    let model = CovarianceModel::Exponential { theta1: 3.0, theta2: 10.0 };
    let sc = simulate(&model, LocationSet::grid(15, 15).unwrap(), 30, 2);
    let (g, yo) = ordered(&sc.locs, &sc.y, 20);
    let init = default_init(&sc.y);
    let a = empirical_bayes(&yo, &g, 2, init).unwrap();
    assert!(a.log_likelihood >= a.initial_log_likelihood);
    let at_init = integrated_log_likelihood(&yo, &g, &init, 2).unwrap();
    assert_eq!(a.initial_log_likelihood, at_init);
    let at_fit = integrated_log_likelihood(&yo, &g, &a.theta, 2).unwrap();
    assert!((at_fit - a.log_likelihood).abs() < 1e-9 * at_fit.abs());
    let b = empirical_bayes(&yo, &g, 2, init).unwrap();
    assert_eq!(a, b);
    let flipped = DMatrix::from_fn(30, 225, |r, c| yo[(29 - r, c)]);
    let c = empirical_bayes(&flipped, &g, 2, init).unwrap();
    for (x, z) in a.theta.log().iter().zip(c.theta.log()) {
        assert!((x - z).abs() < 1e-3, "{:?} vs {:?}", a.theta, c.theta);
    }
    assert!(a.theta.theta2() > 1e-3, "optimum on the ridge: {:?}", a.theta);
}

#[test]
fn empirical_bayes_recovers_the_variance_scale() {
    let fits: Vec<f64> = (0..5u64)
        .map(|s| {
            let model = CovarianceModel::Exponential { theta1: 3.0, theta2: 10.0 };
            let sc = simulate(&model, LocationSet::uniform(400, 2, 100 + s).unwrap(), 50, 200 + s);
            let (g, yo) = ordered(&sc.locs, &sc.y, 30);
            empirical_bayes(&yo, &g, 2, default_init(&sc.y)).unwrap().theta.theta1()
        })
        .collect();
    let med = median(fits.clone());
    assert!(med > 1.5 && med < 6.0, "{fits:?}");
}

#[test]
fn log_acceptance_ratio_is_antisymmetric() {
    for (a, b) in [(-3.2, -1.1), (10.0, 10.0), (-1e4, 7.5)] {
        assert_eq!(log_acceptance_ratio(a, b), -log_acceptance_ratio(b, a));
        assert_eq!((log_acceptance_ratio(a, b) + log_acceptance_ratio(b, a)).exp(), 1.0);
    }
}

#[test]
fn fixed_proposal_samples_a_known_target() {
    // standard normal in each coordinate; adaptation off
    let cfg = MhConfig { adapt: false, initial_scale: 1.5, ..MhConfig::new(60_000, Hyperparameters::new(1.0, 1.0, 1.0), 4) };
    let proposal = AdaptiveProposal::new(&cfg);
    let mut target = |x: &[f64; 3]| -0.5 * x.iter().map(|v| v * v).sum::<f64>();
    let mut state = [0.0; 3];
    let mut lp = target(&state);
    let mut rng = seeded(5);
    let mut xs = Vec::new();
    for _ in 0..cfg.n_iter {
        metropolis_step(&mut state, &mut lp, &proposal, &mut target, &mut rng);
        xs.push(state[0]);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    let se = (1.0 / effective_sample_size(&xs)).sqrt();
    assert!(mean.abs() < 4.0 * se, "{mean} {se}");
    assert!((var - 1.0).abs() < 6.0 * se);
}

#[test]
fn matern_chain_mixes() {
    let sc = simulate(&matern(1.0, 0.15, 1.0), LocationSet::uniform(400, 2, 31).unwrap(), 20, 32);
    let (g, yo) = ordered(&sc.locs, &sc.y, 30);
    let init = empirical_bayes(&yo, &g, 2, default_init(&sc.y)).unwrap().theta;
    let cfg = MhConfig::new(50_000, init, 33);
    let out = adaptive_mh(&yo, &g, 2, &cfg).unwrap();
    assert!(out.acceptance_rate > 0.1 && out.acceptance_rate < 0.6, "{}", out.acceptance_rate);
    assert!(out.ess.iter().all(|&e| e > 100.0), "{:?}", out.ess);
    assert!(out.chain.iter().all(|r| r.theta.linear().iter().all(|v| v.is_finite() && *v > 0.0)));
}

/// Latent moments from the Gibbs sampler at fixed theta and tau2 against a
/// 2-D quadrature of p(y | theta) N(w | y, tau2 I).
#[test]
fn gibbs_matches_two_site_posterior() {
    let locs = LocationSet::from_rows(&[vec![0.2, 0.3], vec![0.45, 0.35]]).unwrap();
    let geom = OrderedGeometry::build(&locs, &DistanceMetric::Euclidean, 1).unwrap();
    let theta = Hyperparameters::new(1.2, 0.8, 0.4);
    let tau2 = 0.5;
    let w = DMatrix::from_row_slice(1, 2, &[0.9, -0.4]);

    let k = 600usize;
    let (lo, hi) = (-7.0, 7.0);
    let h = (hi - lo) / k as f64;
    let mut z = 0.0;
    let mut m1 = [0.0; 2];
    let mut m2 = [0.0; 2];
    for a in 0..=k {
        for b in 0..=k {
            let y = [lo + a as f64 * h, lo + b as f64 * h];
            let yo = geom.order_columns(&DMatrix::from_row_slice(1, 2, &y)).unwrap();
            let lw = -((w[(0, 0)] - y[0]).powi(2) + (w[(0, 1)] - y[1]).powi(2)) / (2.0 * tau2);
            let dens = (oracle_log_likelihood(&yo, &geom, &theta, 2) + lw).exp();
            z += dens;
            for j in 0..2 {
                m1[j] += dens * y[j];
                m2[j] += dens * y[j] * y[j];
            }
        }
    }
    let mean: Vec<f64> = m1.iter().map(|v| v / z).collect();
    let second: Vec<f64> = m2.iter().map(|v| v / z).collect();

    let cfg = GibbsConfig {
        n_burn: 500,
        mh_steps: 0,
        init_theta: Some(theta),
        keep_latent: true,
        ..GibbsConfig::new(40_500, 41)
    };
    let out = gibbs_noisy(&w, &geom, 2, NoiseModel::Fixed(tau2), &cfg).unwrap();
    for j in 0..2 {
        let xs: Vec<f64> = out.latent_draws.iter().map(|d| d[(0, j)]).collect();
        let sq: Vec<f64> = xs.iter().map(|x| x * x).collect();
        let n = xs.len() as f64;
        let var = second[j] - mean[j] * mean[j];
        let got = xs.iter().sum::<f64>() / n;
        let se = (var / effective_sample_size(&xs)).sqrt();
        assert!((got - mean[j]).abs() < 3.0 * se, "site {j} mean {got} vs {}", mean[j]);
        let got2 = sq.iter().sum::<f64>() / n;
        let v2 = sq.iter().map(|s| (s - got2).powi(2)).sum::<f64>() / n;
        let se2 = (v2 / effective_sample_size(&sq)).sqrt();
        assert!((got2 - second[j]).abs() < 3.0 * se2, "site {j} second moment {got2} vs {}", second[j]);
    }
}
