use nalgebra::DMatrix;
use serde_json::{json, Value};

use sicf::geometry::{prior_correlation_guess, DistanceMetric};
use sicf::{CovarianceModel, Hyperparameters, LocationSet};

use crate::args::{Convention, Metric, ModelKind, ScenarioArgs};
use crate::error::{CliError, CliResult};

pub fn model(s: &ScenarioArgs) -> CliResult<CovarianceModel> {
    let m = match s.model {
        ModelKind::Matern => CovarianceModel::Matern { variance: s.variance, range: s.range, smoothness: s.smoothness },
        ModelKind::Exponential => {
            if !(s.range > 0.0) {
                return Err(CliError::Usage("range must be positive".into()));
            }
            CovarianceModel::Exponential { theta1: s.variance, theta2: 2.0 / s.range }
        }
        ModelKind::Cauchy => {
            CovarianceModel::Cauchy { variance: s.variance, range: s.range, alpha: s.alpha, beta: s.beta }
        }
        ModelKind::Paciorek => CovarianceModel::paciorek(s.variance, s.smoothness),
    };
    m.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(m)
}

pub fn parse_grid(spec: &str) -> CliResult<(usize, usize)> {
    let bad = || CliError::Usage(format!("grid must look like 20x20, got `{spec}`"));
    let (r, c) = spec.split_once(['x', 'X']).ok_or_else(bad)?;
    let r: usize = r.trim().parse().map_err(|_| bad())?;
    let c: usize = c.trim().parse().map_err(|_| bad())?;
    if r == 0 || c == 0 {
        return Err(bad());
    }
    Ok((r, c))
}

/// Sites for a scenario; random sites use `seed`. A 20x20 grid by default.
pub fn locations(s: &ScenarioArgs, seed: u64) -> CliResult<LocationSet> {
    let locs = match (&s.grid, s.random) {
        (Some(_), Some(_)) => return Err(CliError::Usage("give either --grid or --random".into())),
        (_, Some(n)) => {
            if n == 0 || s.dim == 0 {
                return Err(CliError::Usage("random sites need n > 0 and dim > 0".into()));
            }
            LocationSet::uniform(n, s.dim, seed)?
        }
        (Some(g), None) => {
            let (r, c) = parse_grid(g)?;
            LocationSet::grid(r, c)?
        }
        (None, None) => LocationSet::grid(20, 20)?,
    };
    if s.model == ModelKind::Paciorek && locs.dim() != 2 {
        return Err(CliError::Usage("the paciorek model needs two-dimensional sites".into()));
    }
    Ok(locs)
}

pub fn scenario_label(s: &ScenarioArgs) -> String {
    let model = match s.model {
        ModelKind::Matern => "matern",
        ModelKind::Exponential => "exponential",
        ModelKind::Cauchy => "cauchy",
        ModelKind::Paciorek => "paciorek",
    };
    match (&s.grid, s.random) {
        (_, Some(n)) => format!("{model}-random{n}"),
        (Some(g), None) => format!("{model}-grid{}", g.to_lowercase()),
        (None, None) => format!("{model}-grid20x20"),
    }
}

pub fn metric(kind: Metric, y: &DMatrix<f64>, locs: &LocationSet) -> CliResult<DistanceMetric> {
    Ok(match kind {
        Metric::Euclid => DistanceMetric::Euclidean,
        Metric::Corr => DistanceMetric::correlation(prior_correlation_guess(y, locs)?)?,
    })
}

pub fn convention(c: Convention) -> sicf::MapConvention {
    match c {
        Convention::Marginal => sicf::MapConvention::Marginal,
        Convention::Joint => sicf::MapConvention::Joint,
    }
}

pub fn parse_theta(spec: &str) -> CliResult<Hyperparameters> {
    let vals: Vec<f64> = spec
        .split(',')
        .map(|v| v.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| CliError::Usage(format!("theta must be three numbers, got `{spec}`")))?;
    match vals[..] {
        [a, b, c] => Hyperparameters::try_new(a, b, c)
            .ok_or_else(|| CliError::Usage(format!("theta entries must be positive, got `{spec}`"))),
        _ => Err(CliError::Usage(format!("theta must be three numbers, got `{spec}`"))),
    }
}

pub fn theta_json(t: &Hyperparameters) -> Value {
    let [a, b, c] = t.linear();
    json!({ "theta1": a, "theta2": b, "theta3": c })
}

/// Linear-interpolation quantile of unsorted values.
pub fn quantile(values: &[f64], q: f64) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let pos = q * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    v[lo] + (pos - lo as f64) * (v[hi] - v[lo])
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

pub fn summary_stats(values: &[f64]) -> Value {
    json!({
        "mean": mean(values),
        "q025": quantile(values, 0.025),
        "q50": quantile(values, 0.5),
        "q975": quantile(values, 0.975),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_specs() {
        assert_eq!(parse_grid("3x4").unwrap(), (3, 4));
        assert_eq!(parse_grid(" 10 X 2 ").unwrap(), (10, 2));
        assert!(parse_grid("3").is_err());
        assert!(parse_grid("0x4").is_err());
    }

    #[test]
    fn quantiles_interpolate() {
        let v = [4.0, 1.0, 3.0, 2.0, 5.0];
        assert_eq!(quantile(&v, 0.5), 3.0);
        assert_eq!(quantile(&v, 0.0), 1.0);
        assert_eq!(quantile(&v, 1.0), 5.0);
        assert!((quantile(&v, 0.1) - 1.4).abs() < 1e-15);
    }

    #[test]
    fn theta_parsing() {
        let t = parse_theta("1,2,0.5").unwrap().linear();
        assert!(t.iter().zip([1.0, 2.0, 0.5]).all(|(a, b)| (a - b).abs() < 1e-15));
        assert!(parse_theta("1,2").is_err());
        assert!(parse_theta("1,-2,3").is_err());
    }
}
