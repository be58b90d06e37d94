use std::fs::File;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use nalgebra::DMatrix;

use sicf::baselines::{exponential_fit, mle_regression, sample_cov, scovt, Estimator, DEFAULT_TAPER_NUGGET};
use sicf::fit::{factor_at, fit_map, FitOptions, MapFit};
use sicf::infer::{adaptive_mh, MhConfig};
use sicf::rng::derive_seed;
use sicf::{build_covariance, kl_divergence, log_score, simulate_replicates, Error, Hyperparameters, LocationSet};

use crate::args::BenchmarkArgs;
use crate::error::{CliError, CliResult};
use crate::scenario;

pub const KL_FILE: &str = "kl_table.csv";
pub const LOGSCORE_FILE: &str = "logscore_table.csv";
pub const TIMING_FILE: &str = "timings.csv";

/// Outcome of one estimator on one data set.
enum Fitted {
    Dense(DMatrix<f64>),
    Failed(Error),
}

struct Context<'a> {
    args: &'a BenchmarkArgs,
    locs: &'a LocationSet,
    y: DMatrix<f64>,
    seed: u64,
    ours: Option<Result<MapFit, String>>,
}

impl Context<'_> {
    fn ours(&mut self) -> Result<&MapFit, Error> {
        if self.ours.is_none() {
            let fitted = scenario::metric(self.args.metric, &self.y, self.locs)
                .map_err(|e| e.to_string())
                .and_then(|metric| {
                    let opts = FitOptions { m_max: self.args.m_max, ..FitOptions::default() };
                    fit_map(&self.y, self.locs, &metric, &opts).map_err(|e| e.to_string())
                });
            self.ours = Some(fitted);
        }
        match self.ours.as_ref().expect("just set") {
            Ok(f) => Ok(f),
            Err(msg) => Err(Error::InvalidInput(format!("ours-map fit failed: {msg}"))),
        }
    }

    fn run(&mut self, est: Estimator) -> Fitted {
        let taper = self.args.taper_range.unwrap_or(0.5 * self.locs.max_distance());
        let result = match est {
            Estimator::Scov => sample_cov(&self.y),
            Estimator::Scovt => scovt(&self.y, self.locs, taper, DEFAULT_TAPER_NUGGET),
            Estimator::Exp => exponential_fit(&self.y, self.locs).map(|f| f.sigma),
            Estimator::OursMap => self.ours().and_then(|f| f.factor.dense_covariance()),
            Estimator::Mle => self
                .ours()
                .and_then(|f| mle_regression(&f.y_ordered, &f.geometry, f.m))
                .and_then(|f| f.dense_covariance()),
            Estimator::OursBayes => {
                let (n_iter, seed, p) = (self.args.n_iter, self.seed, self.locs.dim());
                self.ours().and_then(|f| {
                    let cfg = MhConfig::new(n_iter, f.theta(), seed);
                    let out = adaptive_mh(&f.y_ordered, &f.geometry, p, &cfg)?;
                    let k = out.chain.len().max(1) as f64;
                    let mut sum = [0.0; 3];
                    for r in &out.chain {
                        for (s, v) in sum.iter_mut().zip(r.theta.linear()) {
                            *s += v;
                        }
                    }
                    let pm = if out.chain.is_empty() {
                        f.theta()
                    } else {
                        Hyperparameters::try_new(sum[0] / k, sum[1] / k, sum[2] / k).ok_or(Error::Initialization)?
                    };
                    factor_at(&f.y_ordered, &f.geometry, &pm, p, sicf::MapConvention::default())?
                        .dense_covariance()
                })
            }
        };
        match result {
            Ok(s) => Fitted::Dense(s),
            Err(e) => Fitted::Failed(e),
        }
    }
}

fn format_value(v: Result<f64, Error>, what: &str, est: Estimator) -> String {
    match v {
        Ok(x) if x.is_finite() => x.to_string(),
        Ok(_) | Err(Error::SingularEstimate) | Err(Error::NotPositiveDefinite) => "inf".into(),
        Err(e) => {
            log::warn!("{est}: {what} unavailable: {e}");
            "nan".into()
        }
    }
}

pub fn run(args: &BenchmarkArgs, seed: u64, out: &Path) -> CliResult<()> {
    let estimators = args
        .estimators
        .iter()
        .map(|t| Estimator::from_str(t.trim()).map_err(|_| CliError::Usage(format!("unknown estimator `{t}`"))))
        .collect::<CliResult<Vec<_>>>()?;
    if args.nreps.is_empty() || args.nreps.contains(&0) {
        return Err(CliError::Usage("--nreps needs positive replicate counts".into()));
    }
    if args.test_nrep == 0 {
        return Err(CliError::Usage("--test-nrep must be positive".into()));
    }
    let model = scenario::model(&args.scenario)?;
    let label = scenario::scenario_label(&args.scenario);
    let max_n = *args.nreps.iter().max().expect("non-empty");

    let header = ["scenario", "estimator", "nrep", "seed", "value"];
    let mut kl = csv_writer(&out.join(KL_FILE), &header)?;
    let mut ls = csv_writer(&out.join(LOGSCORE_FILE), &header)?;
    let mut timing = csv_writer(&out.join(TIMING_FILE), &["scenario", "estimator", "nrep", "seed", "seconds"])?;

    for s in 0..args.seeds {
        let run_seed = derive_seed(seed, s as u64);
        let locs = scenario::locations(&args.scenario, derive_seed(run_seed, 0))?;
        let sigma = build_covariance(&model, &locs)?;
        let train = simulate_replicates(&sigma, max_n, derive_seed(run_seed, 1))?;
        let test = simulate_replicates(&sigma, args.test_nrep, derive_seed(run_seed, 2))?;
        for &nrep in &args.nreps {
            let y = train.rows(0, nrep).into_owned();
            let mut ctx = Context { args, locs: &locs, y, seed: derive_seed(run_seed, 3 + nrep as u64), ours: None };
            for &est in &estimators {
                let start = Instant::now();
                let fitted = ctx.run(est);
                let secs = start.elapsed().as_secs_f64();
                let (kl_v, ls_v) = match &fitted {
                    Fitted::Dense(s) => (kl_divergence(s, &sigma), log_score(s, &test)),
                    Fitted::Failed(e) => {
                        log::warn!("{est} at N = {nrep}, seed {s}: {e}");
                        let tag = || match e {
                            Error::SingularEstimate | Error::NotPositiveDefinite => Error::SingularEstimate,
                            other => Error::InvalidInput(other.to_string()),
                        };
                        (Err(tag()), Err(tag()))
                    }
                };
                let row = |v: String| [label.clone(), est.to_string(), nrep.to_string(), s.to_string(), v];
                kl.write_record(row(format_value(kl_v, "KL", est))).map_err(sicf::Error::from)?;
                ls.write_record(row(format_value(ls_v, "log score", est))).map_err(sicf::Error::from)?;
                timing
                    .write_record([label.clone(), est.to_string(), nrep.to_string(), s.to_string(), secs.to_string()])
                    .map_err(sicf::Error::from)?;
                log::info!("{label} {est} N={nrep} seed={s}: {secs:.2} s");
            }
        }
    }
    for w in [&mut kl, &mut ls, &mut timing] {
        w.flush()?;
    }
    Ok(())
}

fn csv_writer(path: &Path, header: &[&str]) -> CliResult<csv::Writer<File>> {
    let mut w = csv::Writer::from_path(path).map_err(sicf::Error::from)?;
    w.write_record(header).map_err(sicf::Error::from)?;
    Ok(w)
}
