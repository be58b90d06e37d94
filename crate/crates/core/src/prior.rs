//! Hyperparameters and the per-column normal-inverse-gamma priors they imply.

/// IG shape shared by every column; fixes the prior sd of d_i at half its mean.
pub const PRIOR_SHAPE: f64 = 6.0;

/// Threshold on exp(-theta3 j) below which neighbor j is dropped.
pub const NEIGHBOR_PRIOR_CUTOFF: f64 = 1e-3;

/// Support of the flat hyperprior: every log theta_k lies in [-B, B]. For small
/// theta2 the likelihood depends on theta1 and theta2 only through their
/// product, so without a bound that ridge carries infinite prior mass.
pub const LOG_THETA_BOUND: f64 = 50.0;

/// True when `log` lies in the hyperprior support.
pub fn in_support(log: &[f64; 3]) -> bool {
    log.iter().all(|v| v.is_finite() && v.abs() <= LOG_THETA_BOUND)
}

/// theta = (theta1, theta2, theta3), stored on the log scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hyperparameters {
    log: [f64; 3],
}

impl Hyperparameters {
    /// Panics unless all three values are finite and strictly positive.
    pub fn new(theta1: f64, theta2: f64, theta3: f64) -> Self {
        Self::try_new(theta1, theta2, theta3).expect("hyperparameters must be finite and positive")
    }

    pub fn try_new(theta1: f64, theta2: f64, theta3: f64) -> Option<Self> {
        let ok = |v: f64| v > 0.0 && v.is_finite();
        (ok(theta1) && ok(theta2) && ok(theta3)).then(|| Hyperparameters { log: [theta1.ln(), theta2.ln(), theta3.ln()] })
    }

    pub fn from_log(log: [f64; 3]) -> Self {
        Hyperparameters { log }
    }

    pub fn log(&self) -> [f64; 3] {
        self.log
    }

    pub fn theta1(&self) -> f64 {
        self.log[0].exp()
    }

    pub fn theta2(&self) -> f64 {
        self.log[1].exp()
    }

    pub fn theta3(&self) -> f64 {
        self.log[2].exp()
    }

    pub fn linear(&self) -> [f64; 3] {
        [self.theta1(), self.theta2(), self.theta3()]
    }
}

/// f(i) = 1 - exp(-theta2 · i^{-1/p}) for the 1-based ordered index `i`.
pub fn f_decay(i: usize, theta2: f64, p: usize) -> f64 {
    debug_assert!(i >= 1 && p >= 1);
    let t = theta2 * (i as f64).powf(-1.0 / p as f64);
    -(-t).exp_m1()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ColumnPrior {
    pub alpha: f64,
    pub beta: f64,
    /// Diagonal of V_i, indexed by neighbor rank (nearest first).
    pub v: Vec<f64>,
}

impl ColumnPrior {
    pub fn mean_d(&self) -> f64 {
        self.beta / (self.alpha - 1.0)
    }

    pub fn sd_d(&self) -> f64 {
        let a = self.alpha;
        (self.beta * self.beta / ((a - 1.0).powi(2) * (a - 2.0))).sqrt()
    }
}

/// Prior for the 1-based ordered index `i` with `m_i` regressors.
pub fn column_prior(i: usize, theta: &Hyperparameters, p: usize, m_i: usize) -> ColumnPrior {
    let scale = theta.theta1() * f_decay(i, theta.theta2(), p);
    let theta3 = theta.theta3();
    ColumnPrior {
        alpha: PRIOR_SHAPE,
        beta: (PRIOR_SHAPE - 1.0) * scale,
        // log-space with clamping so that extreme theta still give usable positive entries
        v: (1..=m_i)
            .map(|j| (-theta3 * j as f64 - scale.ln()).exp().clamp(f64::MIN_POSITIVE, f64::MAX))
            .collect(),
    }
}

/// Largest j with exp(-theta3 j) > 1e-3, clamped to [1, m_max].
pub fn select_m(theta3: f64, m_max: usize) -> usize {
    let m_max = m_max.max(1);
    let bound = -NEIGHBOR_PRIOR_CUTOFF.ln() / theta3;
    if !bound.is_finite() || bound > m_max as f64 + 1.0 {
        return m_max;
    }
    // strict inequality: j < bound
    let mut j = (bound.ceil() as i64 - 1).max(0);
    while (-theta3 * (j + 1) as f64).exp() > NEIGHBOR_PRIOR_CUTOFF {
        j += 1;
    }
    while j > 0 && (-theta3 * j as f64).exp() <= NEIGHBOR_PRIOR_CUTOFF {
        j -= 1;
    }
    (j as usize).clamp(1, m_max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn f_decay_values() {
        assert!((f_decay(1, 1.0, 2) - (1.0 - (-1f64).exp())).abs() < 1e-15);
        assert!((f_decay(1, 1.0, 2) - 0.632_121).abs() < 1e-6);
        assert!(f_decay(1, 1e-12, 2) < 1e-11);
        assert!((f_decay(100, 2.0, 2) - 0.181_269).abs() < 1e-6);
    }

    #[test]
    fn prior_moments() {
        let theta = Hyperparameters::new(2.5, 0.7, 0.3);
        for i in [1, 2, 10, 500] {
            let pr = column_prior(i, &theta, 2, 5);
            let mean = theta.theta1() * f_decay(i, theta.theta2(), 2);
            assert!((pr.mean_d() - mean).abs() < 1e-14 * mean);
            assert!((pr.sd_d() - mean / 2.0).abs() < 1e-14 * mean);
        }
    }

    #[test]
    fn first_prior_variance_multiplier() {
        let theta = Hyperparameters::new(1.0, 1.0, 0.5);
        let pr = column_prior(1, &theta, 2, 1);
        assert!((pr.v[0] - 0.959_517_375_667_472).abs() < 1e-12);
    }

    #[test]
    fn select_m_cases() {
        assert_eq!(select_m(0.5, 50), 13);
        assert_eq!(select_m(10.0, 50), 1);
        assert_eq!(select_m(0.05, 50), 50);
        // ln(1000) / theta3 exactly 7: j = 7 sits on the boundary and is excluded
        let theta3 = 1000f64.ln() / 7.0;
        assert!(select_m(theta3, 50) <= 7);
        assert_eq!(select_m(0.65, 50), 10);
    }
}
