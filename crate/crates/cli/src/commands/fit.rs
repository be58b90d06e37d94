use std::path::Path;

use serde_json::json;

use sicf::fit::{factor_at, fit_map, FitOptions};
use sicf::infer::{adaptive_mh, MhConfig};
use sicf::io::{read_locations, read_matrix, write_chain, write_factor, write_ordering, write_text};
use sicf::Hyperparameters;

use crate::args::{FitArgs, FitMode, Metric};
use crate::error::{CliError, CliResult};
use crate::scenario::{self, summary_stats, theta_json};

pub const SUMMARY_FILE: &str = "summary.json";
pub const ORDERING_FILE: &str = "ordering.csv";
pub const CHAIN_FILE: &str = "chain.csv";

pub fn run(args: &FitArgs, seed: u64, out: &Path) -> CliResult<()> {
    let y = read_matrix(&args.y)?;
    let locs = read_locations(&args.locations)?;
    if y.ncols() != locs.len() {
        return Err(CliError::Usage(format!(
            "{} has {} columns but {} lists {} sites",
            args.y.display(),
            y.ncols(),
            args.locations.display(),
            locs.len()
        )));
    }
    if y.nrows() == 0 {
        return Err(CliError::Usage("data file has no replicates".into()));
    }
    let metric = scenario::metric(args.metric, &y, &locs)?;
    let opts = FitOptions {
        m_max: args.m_max,
        init: args.init.as_deref().map(scenario::parse_theta).transpose()?,
        convention: scenario::convention(args.convention),
        ..FitOptions::default()
    };
    let p = locs.dim();
    let fit = fit_map(&y, &locs, &metric, &opts)?;
    write_ordering(&out.join(ORDERING_FILE), &fit.geometry)?;

    let mut summary = json!({
        "mode": match args.mode { FitMode::Eb => "eb", FitMode::Bayes => "bayes" },
        "metric": match args.metric { Metric::Euclid => "euclid", Metric::Corr => "corr" },
        "n": locs.len(),
        "p": p,
        "nrep": y.nrows(),
        "m_max": fit.geometry.m_max(),
        "eb": {
            "theta": theta_json(&fit.eb.theta),
            "log_likelihood": fit.eb.log_likelihood,
            "initial_log_likelihood": fit.eb.initial_log_likelihood,
            "iterations": fit.eb.iterations,
            "evaluations": fit.eb.evaluations,
            "converged": fit.eb.converged,
        },
    });

    let (theta, factor) = match args.mode {
        FitMode::Eb => (fit.theta(), fit.factor.clone()),
        FitMode::Bayes => {
            let mut cfg = MhConfig::new(args.n_iter, fit.theta(), seed);
            cfg.thin = args.thin;
            if let Some(b) = args.n_burn {
                cfg.n_burn = b;
            }
            cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;
            let chain = adaptive_mh(&fit.y_ordered, &fit.geometry, p, &cfg)?;
            write_chain(&out.join(CHAIN_FILE), &chain.chain)?;
            if chain.chain.is_empty() {
                return Err(CliError::Usage("the chain is empty after burn-in and thinning".into()));
            }
            let cols: Vec<Vec<f64>> =
                (0..3).map(|k| chain.chain.iter().map(|r| r.theta.linear()[k]).collect()).collect();
            let pm = Hyperparameters::try_new(scenario::mean(&cols[0]), scenario::mean(&cols[1]), scenario::mean(&cols[2]))
                .ok_or(sicf::Error::Initialization)?;
            summary["mcmc"] = json!({
                "n_iter": cfg.n_iter,
                "n_burn": cfg.n_burn,
                "thin": cfg.thin,
                "kept": chain.chain.len(),
                "acceptance_rate": chain.acceptance_rate,
                "degenerate": chain.degenerate,
                "ess": { "theta1": chain.ess[0], "theta2": chain.ess[1], "theta3": chain.ess[2] },
                "posterior": {
                    "theta1": summary_stats(&cols[0]),
                    "theta2": summary_stats(&cols[1]),
                    "theta3": summary_stats(&cols[2]),
                },
            });
            let factor = factor_at(&fit.y_ordered, &fit.geometry, &pm, p, opts.convention)?;
            (pm, factor)
        }
    };
    write_factor(out, &factor)?;
    summary["theta"] = theta_json(&theta);
    summary["m"] = json!(sicf::regress::implied_m(&theta, &fit.geometry));
    summary["nnz"] = json!(factor.nnz());
    write_text(&out.join(SUMMARY_FILE), &serde_json::to_string_pretty(&summary).expect("serializable"))?;
    let [t1, t2, t3] = theta.linear();
    log::info!("fitted theta = ({t1:.4e}, {t2:.4e}, {t3:.4e})");
    Ok(())
}
