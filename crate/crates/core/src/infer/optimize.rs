//! Empirical Bayes: maximize the integrated likelihood over log theta with a
//! Nelder-Mead simplex.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::geometry::OrderedGeometry;
use crate::prior::{in_support, Hyperparameters};
use crate::regress::integrated_log_likelihood;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NelderMeadOptions {
    /// Convergence once every vertex lies within this distance of the best one.
    pub simplex_tol: f64,
    pub max_iter: usize,
    pub initial_step: f64,
    /// Extra runs started from the incumbent.
    pub restarts: usize,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        NelderMeadOptions { simplex_tol: 1e-6, max_iter: 500, initial_step: 0.5, restarts: 1 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Maximum<const D: usize> {
    pub x: [f64; D],
    pub value: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
}

/// Maximizes `f` starting from `x0`. Non-finite values count as -inf. The
/// returned value is never below `f(x0)`.
pub fn nelder_mead_max<const D: usize, F>(mut f: F, x0: [f64; D], opts: &NelderMeadOptions) -> Maximum<D>
where
    F: FnMut(&[f64; D]) -> f64,
{
    let mut evaluations = 0;
    let mut eval = |x: &[f64; D]| {
        evaluations += 1;
        let v = f(x);
        if v.is_finite() {
            -v
        } else {
            f64::INFINITY
        }
    };
    let mut best_x = x0;
    let mut best_cost = eval(&x0);
    let mut iterations = 0;
    let mut converged = false;
    for _run in 0..=opts.restarts {
        let mut simplex: Vec<([f64; D], f64)> = Vec::with_capacity(D + 1);
        simplex.push((best_x, best_cost));
        for k in 0..D {
            let mut x = best_x;
            x[k] += opts.initial_step;
            let c = eval(&x);
            simplex.push((x, c));
        }
        converged = false;
        for _ in 0..opts.max_iter {
            iterations += 1;
            simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
            let size = simplex[1..]
                .iter()
                .map(|(x, _)| dist(x, &simplex[0].0))
                .fold(0.0f64, f64::max);
            if size < opts.simplex_tol {
                converged = true;
                break;
            }
            let mut centroid = [0.0; D];
            for (x, _) in &simplex[..D] {
                for k in 0..D {
                    centroid[k] += x[k] / D as f64;
                }
            }
            let worst = simplex[D];
            let along = |t: f64| {
                let mut x = [0.0; D];
                for k in 0..D {
                    x[k] = centroid[k] + t * (worst.0[k] - centroid[k]);
                }
                x
            };
            let xr = along(-1.0);
            let cr = eval(&xr);
            if cr < simplex[0].1 {
                let xe = along(-2.0);
                let ce = eval(&xe);
                simplex[D] = if ce < cr { (xe, ce) } else { (xr, cr) };
            } else if cr < simplex[D - 1].1 {
                simplex[D] = (xr, cr);
            } else {
                let (xc, cc) = if cr < worst.1 {
                    let x = along(-0.5);
                    (x, eval(&x))
                } else {
                    let x = along(0.5);
                    (x, eval(&x))
                };
                if cc < worst.1.min(cr) {
                    simplex[D] = (xc, cc);
                } else {
                    let best = simplex[0].0;
                    for v in simplex.iter_mut().skip(1) {
                        for k in 0..D {
                            v.0[k] = best[k] + 0.5 * (v.0[k] - best[k]);
                        }
                        v.1 = eval(&v.0);
                    }
                }
            }
        }
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        if simplex[0].1 <= best_cost {
            best_x = simplex[0].0;
            best_cost = simplex[0].1;
        }
    }
    Maximum { x: best_x, value: -best_cost, iterations, evaluations, converged }
}

fn dist<const D: usize>(a: &[f64; D], b: &[f64; D]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalBayesFit {
    pub theta: Hyperparameters,
    pub log_likelihood: f64,
    pub initial_log_likelihood: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
}

/// Default starting point: (mean of y², 1, 0.5), the first entry being the
/// zero-mean sample marginal variance.
pub fn default_init(y: &DMatrix<f64>) -> Hyperparameters {
    let var = if y.is_empty() { 1.0 } else { y.norm_squared() / y.len() as f64 };
    Hyperparameters::try_new(var, 1.0, 0.5).unwrap_or(Hyperparameters::new(1.0, 1.0, 0.5))
}

pub fn empirical_bayes(
    y_ordered: &DMatrix<f64>,
    geometry: &OrderedGeometry,
    p: usize,
    init: Hyperparameters,
) -> Result<EmpiricalBayesFit> {
    empirical_bayes_with(y_ordered, geometry, p, init, &NelderMeadOptions::default())
}

pub fn empirical_bayes_with(
    y_ordered: &DMatrix<f64>,
    geometry: &OrderedGeometry,
    p: usize,
    init: Hyperparameters,
    opts: &NelderMeadOptions,
) -> Result<EmpiricalBayesFit> {
    let initial = integrated_log_likelihood(y_ordered, geometry, &init, p)?;
    if !initial.is_finite() {
        return Err(Error::Initialization);
    }
    let objective = |x: &[f64; 3]| {
        if !in_support(x) {
            return f64::NEG_INFINITY;
        }
        integrated_log_likelihood(y_ordered, geometry, &Hyperparameters::from_log(*x), p).unwrap_or(f64::NEG_INFINITY)
    };
    let best = nelder_mead_max(objective, init.log(), opts);
    Ok(EmpiricalBayesFit {
        theta: Hyperparameters::from_log(best.x),
        log_likelihood: best.value,
        initial_log_likelihood: initial,
        iterations: best.iterations,
        evaluations: best.evaluations,
        converged: best.converged,
    })
}
