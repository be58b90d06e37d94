//! CSV readers and writers for sites, data matrices, orderings, factors and
//! chains. Indices in files are zero-based. Data matrices are N rows
//! (replicates) by n columns (sites).

use std::fs::File;
use std::io::Write;
use std::path::Path;

use nalgebra::DMatrix;

use crate::assembly::{assemble, SparseICF};
use crate::error::{Error, Result};
use crate::geometry::{LocationSet, OrderedGeometry};
use crate::infer::mcmc::ChainRecord;
use crate::prior::Hyperparameters;

pub const FACTOR_U_FILE: &str = "factor_u.csv";
pub const FACTOR_D_FILE: &str = "factor_d.csv";

fn reader(path: &Path) -> Result<csv::Reader<File>> {
    Ok(csv::ReaderBuilder::new().has_headers(false).flexible(false).trim(csv::Trim::All).from_path(path)?)
}

fn parse_row(rec: &csv::StringRecord) -> Option<Vec<f64>> {
    rec.iter().map(|s| s.parse::<f64>().ok()).collect()
}

/// Numeric table with an optional header row (detected by the first row
/// failing to parse as numbers).
pub fn read_numeric_table(path: &Path) -> Result<(Option<Vec<String>>, Vec<Vec<f64>>)> {
    let mut rdr = reader(path)?;
    let mut header = None;
    let mut rows = Vec::new();
    for (k, rec) in rdr.records().enumerate() {
        let rec = rec?;
        match parse_row(&rec) {
            Some(r) => rows.push(r),
            None if k == 0 => header = Some(rec.iter().map(str::to_string).collect()),
            None => {
                return Err(Error::InvalidInput(format!("{}: non-numeric entry on line {}", path.display(), k + 1)))
            }
        }
    }
    Ok((header, rows))
}

pub fn read_locations(path: &Path) -> Result<LocationSet> {
    let (_, rows) = read_numeric_table(path)?;
    LocationSet::from_rows(&rows)
}

pub fn write_locations(path: &Path, locs: &LocationSet) -> Result<()> {
    let header: Vec<String> = match locs.dim() {
        2 => vec!["x".into(), "y".into()],
        p => (1..=p).map(|k| format!("s{k}")).collect(),
    };
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(&header)?;
    for i in 0..locs.len() {
        w.write_record(locs.point(i).iter().map(|v| v.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

/// Reads an N × n matrix; all rows must have the same length.
pub fn read_matrix(path: &Path) -> Result<DMatrix<f64>> {
    let (header, rows) = read_numeric_table(path)?;
    let ncols = rows.first().map_or_else(|| header.as_ref().map_or(0, Vec::len), Vec::len);
    Ok(DMatrix::from_fn(rows.len(), ncols, |r, c| rows[r][c]))
}

/// Writes a matrix with header `site_0, site_1, ...`.
pub fn write_matrix(path: &Path, m: &DMatrix<f64>) -> Result<()> {
    let header: Vec<String> = (0..m.ncols()).map(|c| format!("site_{c}")).collect();
    write_matrix_with_header(path, m, &header)
}

pub fn write_matrix_with_header(path: &Path, m: &DMatrix<f64>, header: &[String]) -> Result<()> {
    if header.len() != m.ncols() {
        return Err(Error::InvalidInput("header length differs from column count".into()));
    }
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for r in 0..m.nrows() {
        w.write_record(m.row(r).iter().map(|v| v.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

/// One line per ordered position: original index and the semicolon-separated
/// conditioning set (ordered positions).
pub fn write_ordering(path: &Path, geometry: &OrderedGeometry) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["ordered_index", "original_index", "neighbors"])?;
    for (k, &orig) in geometry.perm().iter().enumerate() {
        let nb: Vec<String> = geometry.neighbors(k).iter().map(|j| j.to_string()).collect();
        w.write_record([k.to_string(), orig.to_string(), nb.join(";")])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_ordering(path: &Path, m_max: usize) -> Result<OrderedGeometry> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_path(path)?;
    let mut perm = Vec::new();
    let mut neighbors = Vec::new();
    for (k, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let bad = || Error::InvalidInput(format!("{}: malformed line {}", path.display(), k + 2));
        let pos: usize = rec.get(0).and_then(|s| s.parse().ok()).ok_or_else(bad)?;
        if pos != k {
            return Err(bad());
        }
        perm.push(rec.get(1).and_then(|s| s.parse().ok()).ok_or_else(bad)?);
        let nb = rec.get(2).unwrap_or("");
        let g = if nb.is_empty() {
            Vec::new()
        } else {
            nb.split(';').map(|s| s.trim().parse::<usize>()).collect::<std::result::Result<Vec<_>, _>>().map_err(|_| bad())?
        };
        neighbors.push(g);
    }
    OrderedGeometry::from_parts(perm, neighbors, m_max)
}

/// Writes `factor_u.csv` (row, col, value of the off-diagonal entries, ordered
/// positions) and `factor_d.csv` (ordered_index, original_index, d) into `dir`.
pub fn write_factor(dir: &Path, factor: &SparseICF) -> Result<()> {
    let mut w = csv::Writer::from_path(dir.join(FACTOR_U_FILE))?;
    w.write_record(["row", "col", "value"])?;
    for j in 0..factor.n() {
        let col = factor.column(j);
        for (&r, &v) in col.rows.iter().zip(&col.values) {
            w.write_record([r.to_string(), j.to_string(), v.to_string()])?;
        }
    }
    w.flush()?;
    let mut w = csv::Writer::from_path(dir.join(FACTOR_D_FILE))?;
    w.write_record(["ordered_index", "original_index", "d"])?;
    for (k, (&d, &orig)) in factor.d().iter().zip(factor.perm()).enumerate() {
        w.write_record([k.to_string(), orig.to_string(), d.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_factor(dir: &Path) -> Result<SparseICF> {
    let (_, d_rows) = read_numeric_table(&dir.join(FACTOR_D_FILE))?;
    let n = d_rows.len();
    let mut perm = Vec::with_capacity(n);
    let mut cols: Vec<(Vec<usize>, Vec<f64>, f64)> = Vec::with_capacity(n);
    for (k, r) in d_rows.iter().enumerate() {
        if r.len() != 3 || r[0] as usize != k {
            return Err(Error::InvalidFactor(format!("{FACTOR_D_FILE}: malformed row {k}")));
        }
        perm.push(as_index(r[1])?);
        cols.push((Vec::new(), Vec::new(), r[2]));
    }
    let (_, u_rows) = read_numeric_table(&dir.join(FACTOR_U_FILE))?;
    for r in u_rows {
        if r.len() != 3 {
            return Err(Error::InvalidFactor(format!("{FACTOR_U_FILE}: expected three fields")));
        }
        let (row, col) = (as_index(r[0])?, as_index(r[1])?);
        let entry = cols.get_mut(col).ok_or_else(|| Error::InvalidFactor(format!("column {col} out of range")))?;
        entry.0.push(row);
        entry.1.push(r[2]);
    }
    assemble(cols, perm)
}

fn as_index(v: f64) -> Result<usize> {
    if v >= 0.0 && v.fract() == 0.0 && v < usize::MAX as f64 {
        Ok(v as usize)
    } else {
        Err(Error::InvalidFactor(format!("{v} is not an index")))
    }
}

pub fn write_chain(path: &Path, chain: &[ChainRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["iter", "theta1", "theta2", "theta3", "log_post", "accepted"])?;
    for r in chain {
        let [t1, t2, t3] = r.theta.linear();
        w.write_record([
            r.iter.to_string(),
            t1.to_string(),
            t2.to_string(),
            t3.to_string(),
            r.log_post.to_string(),
            (r.accepted as u8).to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_chain(path: &Path) -> Result<Vec<ChainRecord>> {
    let (_, rows) = read_numeric_table(path)?;
    rows.into_iter()
        .enumerate()
        .map(|(k, r)| {
            if r.len() != 6 {
                return Err(Error::InvalidInput(format!("{}: row {k} needs six fields", path.display())));
            }
            let theta = Hyperparameters::try_new(r[1], r[2], r[3])
                .ok_or_else(|| Error::InvalidInput(format!("{}: row {k} has invalid theta", path.display())))?;
            Ok(ChainRecord { iter: r[0] as usize, theta, log_post: r[4], accepted: r[5] != 0.0 })
        })
        .collect()
}

/// Writes `contents` followed by a newline.
pub fn write_text(path: &Path, contents: &str) -> Result<()> {
    let mut f = File::create(path)?;
    f.write_all(contents.as_bytes())?;
    f.write_all(b"\n")?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::DistanceMetric;

    #[test]
    fn matrix_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let m = DMatrix::from_row_slice(2, 3, &[0.1, -2.5e-17, 3.0, 1.0 / 3.0, 7.0, -0.0]);
        let p = dir.path().join("m.csv");
        write_matrix(&p, &m).unwrap();
        assert_eq!(read_matrix(&p).unwrap(), m);
    }

    #[test]
    fn headerless_locations() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("l.csv");
        std::fs::write(&p, "0,0\n1,0.5\n").unwrap();
        let l = read_locations(&p).unwrap();
        assert_eq!(l.len(), 2);
        assert_eq!(l.point(1), &[1.0, 0.5]);
        std::fs::write(&p, "x,y\n0,0\nfoo,1\n").unwrap();
        assert!(read_locations(&p).is_err());
    }

    #[test]
    fn ordering_and_factor_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let locs = LocationSet::grid(3, 3).unwrap();
        let g = OrderedGeometry::build(&locs, &DistanceMetric::Euclidean, 3).unwrap();
        write_ordering(&dir.path().join("ordering.csv"), &g).unwrap();
        let back = read_ordering(&dir.path().join("ordering.csv"), 3).unwrap();
        assert_eq!(back.perm(), g.perm());
        for i in 0..9 {
            assert_eq!(back.neighbors(i), g.neighbors(i));
        }
        let f = assemble(
            (0..9).map(|i| {
                let nb = g.neighbors(i).to_vec();
                let vals = nb.iter().map(|&j| 0.1 * (j as f64 + 1.0) - 0.05 * i as f64).collect();
                (nb, vals, 1.0 + i as f64 / 7.0)
            }).collect(),
            g.perm().to_vec(),
        )
        .unwrap();
        write_factor(dir.path(), &f).unwrap();
        assert_eq!(read_factor(dir.path()).unwrap(), f);
    }

    #[test]
    fn chain_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let chain = vec![
            ChainRecord { iter: 3, theta: Hyperparameters::new(1.5, 0.2, 0.7), log_post: -12.25, accepted: true },
            ChainRecord { iter: 4, theta: Hyperparameters::new(1.5, 0.2, 0.7), log_post: -12.25, accepted: false },
        ];
        let p = dir.path().join("chain.csv");
        write_chain(&p, &chain).unwrap();
        let back = read_chain(&p).unwrap();
        assert_eq!(back.len(), 2);
        assert!(back[0].accepted && !back[1].accepted);
        let (a, b) = (back[0].theta.linear(), chain[0].theta.linear());
        for k in 0..3 {
            assert!((a[k] - b[k]).abs() <= 1e-15 * b[k]);
        }
    }
}
