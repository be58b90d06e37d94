use std::path::Path;

use nalgebra::DMatrix;
use serde_json::json;

use sicf::geometry::{DistanceMetric, OrderedGeometry};
use sicf::infer::{gibbs_noisy, GibbsConfig, NoiseModel};
use sicf::io::{read_locations, read_matrix, write_matrix, write_matrix_with_header, write_text};

use crate::args::GibbsArgs;
use crate::error::{CliError, CliResult};
use crate::scenario::summary_stats;

pub const GIBBS_CHAIN_FILE: &str = "gibbs_chain.csv";
pub const LATENT_FILE: &str = "latent_mean.csv";

pub fn run(args: &GibbsArgs, seed: u64, out: &Path) -> CliResult<()> {
    let w = read_matrix(&args.w)?;
    let locs = read_locations(&args.locations)?;
    if w.ncols() != locs.len() {
        return Err(CliError::Usage(format!("W has {} columns but there are {} sites", w.ncols(), locs.len())));
    }
    if w.nrows() == 0 {
        return Err(CliError::Usage("data file has no replicates".into()));
    }
    let noise = match args.tau2 {
        Some(t) => NoiseModel::Fixed(t),
        None => NoiseModel::Unknown { a0: args.a0, b0: args.b0 },
    };
    noise.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    let mut cfg = GibbsConfig::new(args.sweeps, seed);
    cfg.mh_steps = args.mh_steps;
    if let Some(b) = args.n_burn {
        if b > args.sweeps {
            return Err(CliError::Usage("--n-burn exceeds --sweeps".into()));
        }
        cfg.n_burn = b;
    }
    let geometry = OrderedGeometry::build(&locs, &DistanceMetric::Euclidean, args.m_max)?;
    let result = gibbs_noisy(&w, &geometry, locs.dim(), noise, &cfg)?;

    let kept = result.theta.len();
    let chain = DMatrix::from_fn(kept, 5, |r, c| match c {
        0 => (cfg.n_burn + r) as f64,
        1..=3 => result.theta[r].linear()[c - 1],
        _ => result.tau2[r],
    });
    let header = ["sweep", "theta1", "theta2", "theta3", "tau2"].map(String::from);
    write_matrix_with_header(&out.join(GIBBS_CHAIN_FILE), &chain, &header)?;
    write_matrix(&out.join(LATENT_FILE), &result.latent_mean)?;

    let col = |k: usize| -> Vec<f64> { result.theta.iter().map(|t| t.linear()[k]).collect() };
    let summary = json!({
        "noise": match noise { NoiseModel::Fixed(_) => "fixed", NoiseModel::Unknown { .. } => "unknown" },
        "n": locs.len(),
        "nrep": w.nrows(),
        "sweeps": cfg.n_sweeps,
        "n_burn": cfg.n_burn,
        "kept": kept,
        "acceptance_rate": result.acceptance_rate,
        "tau2": summary_stats(&result.tau2),
        "theta": { "theta1": summary_stats(&col(0)), "theta2": summary_stats(&col(1)), "theta3": summary_stats(&col(2)) },
    });
    write_text(&out.join(crate::commands::fit::SUMMARY_FILE), &serde_json::to_string_pretty(&summary).expect("serializable"))?;
    log::info!("gibbs kept {kept} sweeps, posterior mean tau2 = {:.4e}", result.tau2_mean());
    Ok(())
}
