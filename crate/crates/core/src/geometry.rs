//! Maximin ordering and nearest-neighbor conditioning sets.
//!
//! All indices are zero-based. `perm[k]` is the original index of the site
//! placed at position `k` of the ordering; conditioning sets are expressed in
//! ordered positions.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::par;

/// Default size of the stored conditioning sets.
pub const DEFAULT_M_MAX: usize = 50;

/// `n` sites in `p` dimensions, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct LocationSet {
    coords: Vec<f64>,
    n: usize,
    p: usize,
}

impl LocationSet {
    pub fn new(coords: Vec<f64>, p: usize) -> Result<Self> {
        if p == 0 {
            return Err(Error::InvalidInput("spatial dimension must be positive".into()));
        }
        if coords.is_empty() || coords.len() % p != 0 {
            return Err(Error::InvalidInput(format!(
                "{} coordinates cannot form rows of dimension {p}",
                coords.len()
            )));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidInput("non-finite coordinate".into()));
        }
        let n = coords.len() / p;
        Ok(LocationSet { coords, n, p })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let p = rows.first().map(|r| r.len()).unwrap_or(0);
        if rows.iter().any(|r| r.len() != p) {
            return Err(Error::InvalidInput("ragged location rows".into()));
        }
        Self::new(rows.concat(), p)
    }

    /// Regular `rows × cols` grid on the unit square, endpoints included.
    /// Points are listed with the x coordinate varying fastest.
    pub fn grid(rows: usize, cols: usize) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidInput("grid dimensions must be positive".into()));
        }
        let axis = |k: usize, len: usize| {
            if len == 1 {
                0.5
            } else {
                k as f64 / (len - 1) as f64
            }
        };
        let mut coords = Vec::with_capacity(2 * rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                coords.push(axis(c, cols));
                coords.push(axis(r, rows));
            }
        }
        Self::new(coords, 2)
    }

    /// `n` sites drawn uniformly on the unit hypercube of dimension `p`.
    pub fn uniform(n: usize, p: usize, seed: u64) -> Result<Self> {
        use rand::Rng;
        let mut rng = crate::rng::seeded(seed);
        let coords = (0..n * p).map(|_| rng.random::<f64>()).collect();
        Self::new(coords, p)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn dim(&self) -> usize {
        self.p
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.p..(i + 1) * self.p]
    }

    pub fn euclidean(&self, i: usize, j: usize) -> f64 {
        self.point(i)
            .iter()
            .zip(self.point(j))
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    pub fn max_distance(&self) -> f64 {
        let mut best = 0.0f64;
        for i in 0..self.n {
            for j in 0..i {
                best = best.max(self.euclidean(i, j));
            }
        }
        best
    }

    /// Copy with sites rearranged so that new site `k` is old site `order[k]`.
    pub fn permuted(&self, order: &[usize]) -> Self {
        let coords = order.iter().flat_map(|&k| self.point(k).iter().copied()).collect();
        LocationSet { coords, n: self.n, p: self.p }
    }
}

/// Distance used for ordering and neighbor selection.
#[derive(Debug, Clone, PartialEq)]
pub enum DistanceMetric {
    Euclidean,
    /// d(i, j) = sqrt(1 - |R_ij|)
    Correlation(DMatrix<f64>),
}

impl DistanceMetric {
    /// Validates symmetry, unit diagonal and `|R_ij| <= 1`.
    pub fn correlation(r: DMatrix<f64>) -> Result<Self> {
        let n = r.nrows();
        if r.ncols() != n {
            return Err(Error::InvalidInput("correlation matrix must be square".into()));
        }
        for i in 0..n {
            if (r[(i, i)] - 1.0).abs() > 1e-8 {
                return Err(Error::InvalidInput(format!("correlation diagonal {i} is not 1")));
            }
            for j in 0..i {
                let v = r[(i, j)];
                if !v.is_finite() || v.abs() > 1.0 + 1e-10 {
                    return Err(Error::InvalidInput(format!("correlation ({i}, {j}) out of range")));
                }
                if (v - r[(j, i)]).abs() > 1e-8 {
                    return Err(Error::InvalidInput("correlation matrix is not symmetric".into()));
                }
            }
        }
        Ok(DistanceMetric::Correlation(r))
    }

    pub fn distance(&self, locs: &LocationSet, i: usize, j: usize) -> f64 {
        match self {
            DistanceMetric::Euclidean => locs.euclidean(i, j),
            DistanceMetric::Correlation(r) => (1.0 - r[(i, j)].abs()).max(0.0).sqrt(),
        }
    }

    fn check(&self, locs: &LocationSet) -> Result<()> {
        if let DistanceMetric::Correlation(r) = self {
            if r.nrows() != locs.len() {
                return Err(Error::GeometryMismatch(format!(
                    "correlation matrix is {}×{} for {} sites",
                    r.nrows(),
                    r.ncols(),
                    locs.len()
                )));
            }
        }
        Ok(())
    }
}

/// Seed of the maximin ordering: the site closest to the coordinate centroid
/// (Euclidean) or the site with the largest total |R| row sum (Correlation).
pub fn maximin_seed(locs: &LocationSet, metric: &DistanceMetric) -> usize {
    let n = locs.len();
    let mut best = 0;
    match metric {
        DistanceMetric::Euclidean => {
            let p = locs.dim();
            let mut centroid = vec![0.0; p];
            for i in 0..n {
                for (c, x) in centroid.iter_mut().zip(locs.point(i)) {
                    *c += x;
                }
            }
            centroid.iter_mut().for_each(|c| *c /= n as f64);
            let dist2 = |i: usize| -> f64 {
                locs.point(i).iter().zip(&centroid).map(|(a, b)| (a - b) * (a - b)).sum()
            };
            let mut best_d = f64::INFINITY;
            for i in 0..n {
                let d = dist2(i);
                if d < best_d {
                    best_d = d;
                    best = i;
                }
            }
        }
        DistanceMetric::Correlation(r) => {
            let mut best_s = f64::NEG_INFINITY;
            for i in 0..n {
                let s: f64 = r.column(i).iter().map(|v| v.abs()).sum();
                if s > best_s {
                    best_s = s;
                    best = i;
                }
            }
        }
    }
    best
}

/// Greedy maximin ordering from the default seed.
pub fn maximin_order(locs: &LocationSet, metric: &DistanceMetric) -> Result<Vec<usize>> {
    metric.check(locs)?;
    maximin_order_seeded(locs, metric, maximin_seed(locs, metric))
}

/// Greedy maximin ordering from a given first site. Ties go to the smallest
/// original index.
pub fn maximin_order_seeded(
    locs: &LocationSet,
    metric: &DistanceMetric,
    seed: usize,
) -> Result<Vec<usize>> {
    metric.check(locs)?;
    let n = locs.len();
    if seed >= n {
        return Err(Error::InvalidInput(format!("seed {seed} out of range")));
    }
    let mut perm = Vec::with_capacity(n);
    let mut selected = vec![false; n];
    let mut min_dist = vec![f64::INFINITY; n];
    // nearest selected site, for duplicate reporting
    let mut nearest = vec![seed; n];
    let mut current = seed;
    loop {
        perm.push(current);
        selected[current] = true;
        if perm.len() == n {
            break;
        }
        let mut next = usize::MAX;
        let mut next_d = f64::NEG_INFINITY;
        for j in 0..n {
            if selected[j] {
                continue;
            }
            let d = metric.distance(locs, current, j);
            if d < min_dist[j] {
                min_dist[j] = d;
                nearest[j] = current;
            }
            if min_dist[j] <= 0.0 {
                let (a, b) = (nearest[j].min(j), nearest[j].max(j));
                return Err(Error::DuplicateLocation { first: a, second: b });
            }
            if min_dist[j] > next_d {
                next_d = min_dist[j];
                next = j;
            }
        }
        current = next;
    }
    Ok(perm)
}

/// For each ordered position `i`, the `min(m_max, i)` previously ordered
/// positions nearest to site `perm[i]`, nearest first; ties go to the smaller
/// ordered position.
pub fn conditioning_sets(
    locs: &LocationSet,
    perm: &[usize],
    metric: &DistanceMetric,
    m_max: usize,
) -> Result<Vec<Vec<usize>>> {
    metric.check(locs)?;
    if m_max == 0 {
        return Err(Error::InvalidInput("m_max must be at least 1".into()));
    }
    check_permutation(perm, locs.len())?;
    Ok(par::map_range(perm.len(), |i| {
        let k = m_max.min(i);
        let site = perm[i];
        // sorted ascending by (distance, position)
        let mut best: Vec<(f64, usize)> = Vec::with_capacity(k + 1);
        for j in 0..i {
            let d = metric.distance(locs, site, perm[j]);
            if best.len() == k {
                // j increases, so an equal distance never displaces an earlier entry
                if d >= best[k - 1].0 {
                    continue;
                }
                best.pop();
            }
            let at = best.partition_point(|&(bd, _)| bd <= d);
            best.insert(at, (d, j));
        }
        best.into_iter().map(|(_, j)| j).collect()
    }))
}

fn check_permutation(perm: &[usize], n: usize) -> Result<()> {
    if perm.len() != n {
        return Err(Error::GeometryMismatch(format!("permutation of length {} for {n} sites", perm.len())));
    }
    let mut seen = vec![false; n];
    for &k in perm {
        if k >= n || seen[k] {
            return Err(Error::GeometryMismatch("not a permutation".into()));
        }
        seen[k] = true;
    }
    Ok(())
}

/// Maximin permutation plus stored conditioning sets of size up to `m_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderedGeometry {
    perm: Vec<usize>,
    inv_perm: Vec<usize>,
    neighbors: Vec<Vec<usize>>,
    m_max: usize,
}

impl OrderedGeometry {
    pub fn build(locs: &LocationSet, metric: &DistanceMetric, m_max: usize) -> Result<Self> {
        let perm = maximin_order(locs, metric)?;
        let neighbors = conditioning_sets(locs, &perm, metric, m_max)?;
        Self::from_parts(perm, neighbors, m_max)
    }

    /// Assembles a geometry from stored parts, checking structure.
    pub fn from_parts(perm: Vec<usize>, neighbors: Vec<Vec<usize>>, m_max: usize) -> Result<Self> {
        let n = perm.len();
        check_permutation(&perm, n)?;
        if neighbors.len() != n {
            return Err(Error::GeometryMismatch("one neighbor list per site required".into()));
        }
        for (i, g) in neighbors.iter().enumerate() {
            if g.len() > m_max.min(i) {
                return Err(Error::GeometryMismatch(format!("neighbor list {i} is too long")));
            }
            let mut seen = std::collections::HashSet::new();
            if g.iter().any(|&j| j >= i || !seen.insert(j)) {
                return Err(Error::GeometryMismatch(format!("neighbor list {i} is invalid")));
            }
        }
        let mut inv_perm = vec![0; n];
        for (k, &orig) in perm.iter().enumerate() {
            inv_perm[orig] = k;
        }
        Ok(OrderedGeometry { perm, inv_perm, neighbors, m_max })
    }

    pub fn len(&self) -> usize {
        self.perm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.perm.is_empty()
    }

    pub fn perm(&self) -> &[usize] {
        &self.perm
    }

    pub fn inv_perm(&self) -> &[usize] {
        &self.inv_perm
    }

    pub fn m_max(&self) -> usize {
        self.m_max
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    /// First `min(m, |g(i)|)` entries of the stored set.
    pub fn neighbors_m(&self, i: usize, m: usize) -> &[usize] {
        let g = &self.neighbors[i];
        &g[..m.min(g.len())]
    }

    pub fn truncate_sets(&self, m: usize) -> Result<Vec<Vec<usize>>> {
        if m == 0 || m > self.m_max {
            return Err(Error::Truncation { m, m_max: self.m_max });
        }
        Ok((0..self.len()).map(|i| self.neighbors_m(i, m).to_vec()).collect())
    }

    /// Columns of `y` (N × n, original site order) rearranged into maximin order.
    pub fn order_columns(&self, y: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if y.ncols() != self.len() {
            return Err(Error::GeometryMismatch(format!(
                "data has {} columns for {} sites",
                y.ncols(),
                self.len()
            )));
        }
        Ok(y.select_columns(self.perm.iter()))
    }

    /// Maps a vector in ordered positions back to original site order.
    pub fn restore_order(&self, ordered: &[f64]) -> Vec<f64> {
        self.inv_perm.iter().map(|&k| ordered[k]).collect()
    }
}

/// Sample correlation tapered by an exponential correlation with range equal
/// to half the maximum pairwise distance. Zero-variance columns get zero
/// off-diagonal correlation.
pub fn prior_correlation_guess(y: &DMatrix<f64>, locs: &LocationSet) -> Result<DMatrix<f64>> {
    let nrep = y.nrows();
    if nrep < 2 {
        return Err(Error::InsufficientReplicates(nrep));
    }
    let n = locs.len();
    if y.ncols() != n {
        return Err(Error::GeometryMismatch(format!("data has {} columns for {n} sites", y.ncols())));
    }
    if n < 2 {
        return Err(Error::InvalidInput("at least two sites are required".into()));
    }
    let range = locs.max_distance() / 2.0;
    if range <= 0.0 {
        return Err(Error::InvalidInput("at least two distinct sites are required".into()));
    }
    let mut centered = y.clone();
    for mut col in centered.column_iter_mut() {
        let mean = col.mean();
        col.add_scalar_mut(-mean);
    }
    let cross = centered.transpose() * &centered;
    let sd: Vec<f64> = (0..n).map(|i| cross[(i, i)].sqrt()).collect();
    Ok(DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            return 1.0;
        }
        if sd[i] <= 0.0 || sd[j] <= 0.0 {
            return 0.0;
        }
        let corr = (cross[(i, j)] / (sd[i] * sd[j])).clamp(-1.0, 1.0);
        corr * (-locs.euclidean(i, j) / range).exp()
    }))
}
