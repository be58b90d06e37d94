use std::path::Path;

use nalgebra::DMatrix;
use rand::Rng;

use sicf::io::{read_chain, read_factor, read_matrix, read_ordering, write_matrix};
use sicf::rng::{derive_seed, substream};
use sicf::{column_posteriors, SparseICF};

use crate::args::{SampleArgs, SampleMode};
use crate::commands::fit::{CHAIN_FILE, ORDERING_FILE, SUMMARY_FILE};
use crate::error::{CliError, CliResult};

pub const SAMPLES_FILE: &str = "samples.csv";

fn summary_field(dir: &Path, key: &str) -> CliResult<usize> {
    let path = dir.join(SUMMARY_FILE);
    let text = std::fs::read_to_string(&path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    let json: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    json.get(key)
        .and_then(serde_json::Value::as_u64)
        .map(|v| v as usize)
        .ok_or_else(|| CliError::Usage(format!("{} lacks `{key}`", path.display())))
}

pub fn run(args: &SampleArgs, seed: u64, out: &Path) -> CliResult<()> {
    let (rows, n) = match args.mode {
        SampleMode::Map => {
            let factor = read_factor(&args.fit_dir)?;
            // one substream per draw keeps draws independent of the count
            let rows = (0..args.count).map(|k| factor.sample_field(&mut substream(seed, k as u64))).collect();
            (rows, factor.n())
        }
        SampleMode::Bayes => {
            let chain_path = args.fit_dir.join(CHAIN_FILE);
            if !chain_path.exists() {
                return Err(CliError::Usage(format!("bayes mode needs {}", chain_path.display())));
            }
            let y_path = args.y.as_ref().ok_or_else(|| CliError::Usage("bayes mode needs --y".into()))?;
            let chain = read_chain(&chain_path)?;
            if chain.is_empty() {
                return Err(CliError::Usage("chain file is empty".into()));
            }
            let m_max = summary_field(&args.fit_dir, "m_max")?;
            let p = summary_field(&args.fit_dir, "p")?;
            let geometry = read_ordering(&args.fit_dir.join(ORDERING_FILE), m_max)?;
            let y_ordered = geometry.order_columns(&read_matrix(y_path)?)?;
            let mut draws = Vec::with_capacity(args.count);
            for k in 0..args.count {
                let mut rng = substream(seed, k as u64);
                let theta = chain[rng.random_range(0..chain.len())].theta;
                let posts = column_posteriors(&y_ordered, &geometry, &theta, p)?;
                let factor = SparseICF::sample_posterior(&posts, &geometry, derive_seed(seed, k as u64))?;
                draws.push(factor.sample_field(&mut rng));
            }
            (draws, geometry.len())
        }
    };
    let m = DMatrix::from_fn(rows.len(), n, |r: usize, c: usize| rows[r][c]);
    write_matrix(&out.join(SAMPLES_FILE), &m)?;
    log::info!("wrote {} draws over {n} sites", rows.len());
    Ok(())
}
