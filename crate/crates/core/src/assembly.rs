//! The sparse inverse Cholesky factor Sigma^{-1} = U D^{-1} U' and what can be
//! computed from it: dense covariances, field samples, covariances of linear
//! combinations, plus the KL and log-score metrics.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::geometry::OrderedGeometry;
use crate::par;
use crate::regress::{column_map_with, column_sample, ColumnPosterior, MapConvention};
use crate::rng::substream;

/// Largest n for which dense covariance assembly is allowed by default.
pub const DEFAULT_DENSE_LIMIT: usize = 10_000;

/// Off-diagonal nonzeros of one column of U, at ordered row positions.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FactorColumn {
    pub rows: Vec<usize>,
    pub values: Vec<f64>,
}

/// Unit upper-triangular U (column storage, ordered indexing), diagonal D and
/// the permutation back to original site order.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseICF {
    columns: Vec<FactorColumn>,
    d: Vec<f64>,
    perm: Vec<usize>,
}

/// Builds a factor from per-column `(g_i, u_i, d_i)` and the ordering.
pub fn assemble(columns: Vec<(Vec<usize>, Vec<f64>, f64)>, perm: Vec<usize>) -> Result<SparseICF> {
    let n = columns.len();
    if perm.len() != n {
        return Err(Error::InvalidFactor(format!("{} columns for a permutation of {}", n, perm.len())));
    }
    let mut seen = vec![false; n];
    for &k in &perm {
        if k >= n || seen[k] {
            return Err(Error::InvalidFactor("not a permutation".into()));
        }
        seen[k] = true;
    }
    let mut cols = Vec::with_capacity(n);
    let mut d = Vec::with_capacity(n);
    for (i, (rows, values, di)) in columns.into_iter().enumerate() {
        if rows.len() != values.len() {
            return Err(Error::InvalidFactor(format!("column {i}: index and value lengths differ")));
        }
        if rows.iter().any(|&r| r >= i) {
            return Err(Error::InvalidFactor(format!("column {i}: entry on or below the diagonal")));
        }
        if !(di > 0.0 && di.is_finite()) {
            return Err(Error::InvalidFactor(format!("column {i}: d = {di} is not positive")));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidFactor(format!("column {i}: non-finite entry")));
        }
        cols.push(FactorColumn { rows, values });
        d.push(di);
    }
    Ok(SparseICF { columns: cols, d, perm })
}

impl SparseICF {
    /// Point estimate from column posteriors.
    pub fn from_map(posts: &[ColumnPosterior], geometry: &OrderedGeometry, convention: MapConvention) -> Result<Self> {
        let cols = posts
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let (u, d) = column_map_with(p, convention);
                (geometry.neighbors_m(i, p.m()).to_vec(), u.as_slice().to_vec(), d)
            })
            .collect();
        assemble(cols, geometry.perm().to_vec())
    }

    /// One posterior draw of (U, D); column i uses substream i of `seed`.
    pub fn sample_posterior(posts: &[ColumnPosterior], geometry: &OrderedGeometry, seed: u64) -> Result<Self> {
        let cols = par::map_range(posts.len(), |i| {
            let mut rng = substream(seed, i as u64);
            let (u, d) = column_sample(&posts[i], &mut rng);
            (geometry.neighbors_m(i, posts[i].m()).to_vec(), u.as_slice().to_vec(), d)
        });
        assemble(cols, geometry.perm().to_vec())
    }

    pub fn n(&self) -> usize {
        self.d.len()
    }

    pub fn d(&self) -> &[f64] {
        &self.d
    }

    pub fn perm(&self) -> &[usize] {
        &self.perm
    }

    pub fn column(&self, i: usize) -> &FactorColumn {
        &self.columns[i]
    }

    /// Stored nonzeros of U including the unit diagonal.
    pub fn nnz(&self) -> usize {
        self.n() + self.columns.iter().map(|c| c.rows.len()).sum::<usize>()
    }

    fn inv_perm(&self) -> Vec<usize> {
        let mut inv = vec![0; self.n()];
        for (k, &o) in self.perm.iter().enumerate() {
            inv[o] = k;
        }
        inv
    }

    /// Solves U x = b in place (ordered positions).
    pub fn solve_upper(&self, b: &mut [f64]) {
        for j in (0..self.n()).rev() {
            let xj = b[j];
            if xj == 0.0 {
                continue;
            }
            let col = &self.columns[j];
            for (&r, &v) in col.rows.iter().zip(&col.values) {
                b[r] -= v * xj;
            }
        }
    }

    /// Solves U' x = b in place (ordered positions).
    pub fn solve_upper_transpose(&self, b: &mut [f64]) {
        for j in 0..self.n() {
            let col = &self.columns[j];
            let mut acc = b[j];
            for (&r, &v) in col.rows.iter().zip(&col.values) {
                acc -= v * b[r];
            }
            b[j] = acc;
        }
    }

    /// U' y, i.e. the standardized innovations before scaling by D^{-1/2}.
    pub fn apply_upper_transpose(&self, y: &[f64]) -> Vec<f64> {
        (0..self.n())
            .map(|j| {
                let col = &self.columns[j];
                y[j] + col.rows.iter().zip(&col.values).map(|(&r, &v)| v * y[r]).sum::<f64>()
            })
            .collect()
    }

    /// Dense precision U D^{-1} U' in ordered positions.
    pub fn dense_precision_ordered(&self) -> DMatrix<f64> {
        let n = self.n();
        let mut q = DMatrix::zeros(n, n);
        for j in 0..n {
            // column j of U as (row, value) including the diagonal
            let col = &self.columns[j];
            let entries: Vec<(usize, f64)> =
                std::iter::once((j, 1.0)).chain(col.rows.iter().copied().zip(col.values.iter().copied())).collect();
            let w = 1.0 / self.d[j];
            for &(a, va) in &entries {
                for &(b, vb) in &entries {
                    q[(a, b)] += va * vb * w;
                }
            }
        }
        q
    }

    /// Dense precision in original site order.
    pub fn dense_precision(&self) -> DMatrix<f64> {
        self.to_original(&self.dense_precision_ordered())
    }

    fn to_original(&self, ordered: &DMatrix<f64>) -> DMatrix<f64> {
        let inv = self.inv_perm();
        let n = self.n();
        DMatrix::from_fn(n, n, |a, b| ordered[(inv[a], inv[b])])
    }

    pub fn dense_covariance(&self) -> Result<DMatrix<f64>> {
        self.dense_covariance_limited(DEFAULT_DENSE_LIMIT)
    }

    /// Sigma = (U')^{-1} D U^{-1} in original site order, column by column
    /// with one backward and one forward sparse solve each.
    pub fn dense_covariance_limited(&self, limit: usize) -> Result<DMatrix<f64>> {
        let n = self.n();
        if n > limit {
            return Err(Error::DenseLimitExceeded { n, limit });
        }
        let cols = par::map_range(n, |k| {
            let mut x = vec![0.0; n];
            x[k] = 1.0;
            self.solve_upper(&mut x);
            for (xi, di) in x.iter_mut().zip(&self.d) {
                *xi *= di;
            }
            self.solve_upper_transpose(&mut x);
            x
        });
        let mut s = DMatrix::zeros(n, n);
        for (k, c) in cols.iter().enumerate() {
            s.column_mut(k).copy_from_slice(c);
        }
        let s = (&s + s.transpose()) * 0.5;
        Ok(self.to_original(&s))
    }

    /// y = (U')^{-1} D^{1/2} z for a given standard-normal vector `z` in
    /// ordered positions; returned in original site order.
    pub fn field_from_innovations(&self, z: &[f64]) -> Vec<f64> {
        let mut y: Vec<f64> = z.iter().zip(&self.d).map(|(z, d)| z * d.sqrt()).collect();
        self.solve_upper_transpose(&mut y);
        let inv = self.inv_perm();
        inv.iter().map(|&k| y[k]).collect()
    }

    /// One draw from N(0, Sigma), original site order.
    pub fn sample_field<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let z: Vec<f64> = (0..self.n()).map(|_| StandardNormal.sample(rng)).collect();
        self.field_from_innovations(&z)
    }

    /// H Sigma H' = A'A with A = D^{1/2} U^{-1} H'. `h` is k × n in original
    /// site order.
    pub fn linear_comb_cov(&self, h: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let n = self.n();
        if h.ncols() != n {
            return Err(Error::GeometryMismatch(format!("H has {} columns for {n} sites", h.ncols())));
        }
        let k = h.nrows();
        let cols = par::map_range(k, |r| {
            let mut x: Vec<f64> = self.perm.iter().map(|&o| h[(r, o)]).collect();
            self.solve_upper(&mut x);
            for (xi, di) in x.iter_mut().zip(&self.d) {
                *xi *= di.sqrt();
            }
            x
        });
        let mut a = DMatrix::zeros(n, k);
        for (r, c) in cols.iter().enumerate() {
            a.column_mut(r).copy_from_slice(c);
        }
        Ok(a.tr_mul(&a))
    }
}

fn log_det_chol(c: &nalgebra::Cholesky<f64, nalgebra::Dyn>) -> f64 {
    2.0 * c.l_dirty().diagonal().iter().map(|v| v.ln()).sum::<f64>()
}

/// tr(S_hat S^{-1}) - log|S_hat S^{-1}| - n, without the factor 1/2.
pub fn kl_divergence(sigma_hat: &DMatrix<f64>, sigma_true: &DMatrix<f64>) -> Result<f64> {
    let n = sigma_true.nrows();
    if sigma_hat.shape() != (n, n) || sigma_true.ncols() != n {
        return Err(Error::InvalidInput("covariance matrices differ in shape".into()));
    }
    let chol_true = sigma_true.clone().cholesky().ok_or(Error::NotPositiveDefinite)?;
    let sym_hat = (sigma_hat + sigma_hat.transpose()) * 0.5;
    let chol_hat = sym_hat.clone().cholesky().ok_or(Error::SingularEstimate)?;
    let trace = chol_true.solve(&sym_hat).trace();
    let log_det = log_det_chol(&chol_hat) - log_det_chol(&chol_true);
    if !log_det.is_finite() {
        return Err(Error::SingularEstimate);
    }
    Ok(trace - log_det - n as f64)
}

/// The proper Gaussian KL divergence, half of [`kl_divergence`].
pub fn kl_divergence_halved(sigma_hat: &DMatrix<f64>, sigma_true: &DMatrix<f64>) -> Result<f64> {
    kl_divergence(sigma_hat, sigma_true).map(|v| v / 2.0)
}

/// Mean negative log N(0, sigma_hat) density over the rows of `y_test`.
pub fn log_score(sigma_hat: &DMatrix<f64>, y_test: &DMatrix<f64>) -> Result<f64> {
    let n = sigma_hat.nrows();
    if y_test.ncols() != n {
        return Err(Error::InvalidInput("test data and estimate differ in dimension".into()));
    }
    if y_test.nrows() == 0 {
        return Err(Error::InvalidInput("no test replicates".into()));
    }
    let sym = (sigma_hat + sigma_hat.transpose()) * 0.5;
    let chol = sym.cholesky().ok_or(Error::SingularEstimate)?;
    let log_det = log_det_chol(&chol);
    let constant = n as f64 * (2.0 * std::f64::consts::PI).ln() + log_det;
    let mut total = 0.0;
    for row in y_test.row_iter() {
        let mut w = row.transpose();
        chol.l_dirty().solve_lower_triangular_mut(&mut w);
        total += 0.5 * (constant + w.norm_squared());
    }
    Ok(total / y_test.nrows() as f64)
}
