//! Dataset ingestion, splitting, standardization and synthetic surrogates.

use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rand::seq::{index, SliceRandom};
use rand::Rng as _;
use rand_distr::{Distribution, Normal, StandardNormal};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng::{RngSeed, Stream};
use crate::targets::GaussianMixture1D;

/// Reads a LIBSVM file (`label idx:val ...`, 1-based strictly increasing
/// indices). Absent entries are zero. Labels end up in {-1, +1}: a `{1, 2}`
/// label set maps 2 to -1, `{0, 1}` maps 0 to -1, `{-1, +1}` is kept.
pub fn parse_libsvm(path: impl AsRef<Path>, n_features: Option<usize>) -> Result<(Matrix, Vec<f64>)> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_libsvm(BufReader::new(file), path, n_features)
}

pub fn read_libsvm(reader: impl BufRead, path: &Path, n_features: Option<usize>) -> Result<(Matrix, Vec<f64>)> {
    let parse_err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut rows: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut labels = Vec::new();
    let mut width = n_features.unwrap_or(0);
    for (lineno, line) in reader.lines().enumerate() {
        let lineno = lineno + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let mut tokens = content.split_whitespace();
        let label_tok = tokens.next().expect("non-empty line");
        let label: f64 = label_tok
            .parse()
            .map_err(|_| parse_err(lineno, format!("bad label `{label_tok}`")))?;
        let mut entries = Vec::new();
        let mut last = 0usize;
        for tok in tokens {
            let (idx, val) = tok
                .split_once(':')
                .ok_or_else(|| parse_err(lineno, format!("expected idx:val, got `{tok}`")))?;
            let idx: usize = idx
                .parse()
                .map_err(|_| parse_err(lineno, format!("bad index `{idx}`")))?;
            let val: f64 = val
                .parse()
                .map_err(|_| parse_err(lineno, format!("bad value `{val}`")))?;
            if idx == 0 || idx <= last {
                return Err(parse_err(
                    lineno,
                    format!("indices must be 1-based and strictly increasing (saw {idx} after {last})"),
                ));
            }
            if let Some(k) = n_features {
                if idx > k {
                    return Err(parse_err(lineno, format!("index {idx} exceeds {k} features")));
                }
            }
            last = idx;
            entries.push((idx - 1, val));
        }
        width = width.max(last);
        rows.push(entries);
        labels.push(label);
    }
    if rows.is_empty() {
        return Err(Error::Data(format!("{}: no data lines", path.display())));
    }
    let labels = binary_labels(&labels)?;
    let mut x = Matrix::zeros(rows.len(), width);
    for (r, entries) in rows.iter().enumerate() {
        let row = x.row_mut(r);
        for &(c, v) in entries {
            row[c] = v;
        }
    }
    Ok((x, labels))
}

fn binary_labels(raw: &[f64]) -> Result<Vec<f64>> {
    let all_in = |set: &[f64]| raw.iter().all(|l| set.contains(l));
    let map: fn(f64) -> f64 = if all_in(&[-1.0, 1.0]) {
        |l| l
    } else if all_in(&[1.0, 2.0]) {
        |l| if l == 2.0 { -1.0 } else { 1.0 }
    } else if all_in(&[0.0, 1.0]) {
        |l| if l == 0.0 { -1.0 } else { 1.0 }
    } else {
        let mut distinct: Vec<f64> = raw.to_vec();
        distinct.sort_by(f64::total_cmp);
        distinct.dedup();
        distinct.truncate(5);
        return Err(Error::Data(format!("label set is not binary (saw {distinct:?})")));
    };
    Ok(raw.iter().map(|&l| map(l)).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CsvOptions {
    /// Zero-based column holding the regression target.
    pub target_column: usize,
    pub has_header: bool,
    /// Append a constant 1.0 feature after the data columns.
    pub append_bias: bool,
}

/// Reads a numeric CSV; every column but the target becomes a feature.
pub fn parse_csv_regression(path: impl AsRef<Path>, opts: CsvOptions) -> Result<(Matrix, Vec<f64>)> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv_regression(file, path, opts)
}

pub fn read_csv_regression(reader: impl std::io::Read, path: &Path, opts: CsvOptions) -> Result<(Matrix, Vec<f64>)> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(opts.has_header)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut rows = Vec::new();
    let mut y = Vec::new();
    let offset = usize::from(opts.has_header) + 1;
    for (r, rec) in rdr.records().enumerate() {
        let line = r + offset;
        let rec = rec.map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line,
            message: e.to_string(),
        })?;
        if opts.target_column >= rec.len() {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line,
                message: format!("target column {} missing ({} columns)", opts.target_column, rec.len()),
            });
        }
        let mut feats = Vec::with_capacity(rec.len());
        for (c, cell) in rec.iter().enumerate() {
            let v: f64 = cell.parse().map_err(|_| Error::Parse {
                path: path.to_path_buf(),
                line,
                message: format!("column {c}: `{cell}` is not a number"),
            })?;
            if c == opts.target_column {
                y.push(v);
            } else {
                feats.push(v);
            }
        }
        if opts.append_bias {
            feats.push(1.0);
        }
        rows.push(feats);
    }
    if rows.is_empty() {
        return Err(Error::Data(format!("{}: no data rows", path.display())));
    }
    let x = Matrix::from_rows(&rows).map_err(|_| Error::Data(format!("{}: ragged rows", path.display())))?;
    Ok((x, y))
}

/// Writes features and target as CSV, target at `target_column`.
pub fn write_csv_regression(path: impl AsRef<Path>, x: &Matrix, y: &[f64], target_column: usize) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::new();
    for r in 0..x.rows() {
        let mut cells: Vec<String> = x.row(r).iter().map(|v| v.to_string()).collect();
        cells.insert(target_column.min(cells.len()), y[r].to_string());
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    let mut f = File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(out.as_bytes()).map_err(|e| Error::io(path, e))
}

/// Seeded shuffle of `0..n` into train and test index sets. The test size
/// is `floor(n * (1 - train_fraction))`.
pub fn split(n: usize, train_fraction: f64, seed: RngSeed) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::argument(format!(
            "train fraction must lie in (0, 1), got {train_fraction}"
        )));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut seed.rng(Stream::Split));
    let test = ((n as f64) * (1.0 - train_fraction) + 1e-9).floor() as usize;
    let train_idx = idx.split_off(test);
    Ok((train_idx, idx))
}

/// `k` distinct indices out of `n`, in increasing order.
pub fn subsample(n: usize, k: usize, seed: RngSeed) -> Vec<usize> {
    if k >= n {
        return (0..n).collect();
    }
    let mut idx = index::sample(&mut seed.rng(Stream::Split), n, k).into_vec();
    idx.sort_unstable();
    idx
}

/// Per-column affine map to zero mean and unit variance, fitted on one set.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardizer {
    /// Constant columns keep scale 1.
    pub fn fit(x: &Matrix) -> Self {
        let (n, k) = (x.rows() as f64, x.cols());
        let mut mean = vec![0.0; k];
        for r in 0..x.rows() {
            for (m, v) in mean.iter_mut().zip(x.row(r)) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; k];
        for r in 0..x.rows() {
            for ((s, v), m) in var.iter_mut().zip(x.row(r)).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let std = var
            .into_iter()
            .map(|s| {
                let sd = (s / n).sqrt();
                if sd > 1e-12 {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        Standardizer { mean, std }
    }

    pub fn fit_values(y: &[f64]) -> Self {
        Self::fit(&Matrix::from_flat(y.len(), 1, y.to_vec()).expect("column"))
    }

    pub fn apply(&self, x: &Matrix) -> Matrix {
        let mut out = x.clone();
        for r in 0..out.rows() {
            for ((v, m), s) in out.row_mut(r).iter_mut().zip(&self.mean).zip(&self.std) {
                *v = (*v - m) / s;
            }
        }
        out
    }

    pub fn apply_values(&self, y: &[f64]) -> Vec<f64> {
        y.iter().map(|v| (v - self.mean[0]) / self.std[0]).collect()
    }

    pub fn invert_values(&self, y: &[f64]) -> Vec<f64> {
        y.iter().map(|v| v * self.std[0] + self.mean[0]).collect()
    }
}

/// `n` draws from the mixture's normalized density, as an `n x 1` matrix.
pub fn mixture_samples(model: &GaussianMixture1D, n: usize, seed: RngSeed) -> Matrix {
    let mut rng = seed.rng(Stream::Dataset);
    let data = (0..n).map(|_| model.sample(&mut rng)).collect();
    Matrix::from_flat(n, 1, data).expect("column")
}

/// Covertype-shaped binary classification surrogate: 10 Gaussian features,
/// a 4-way and a 40-way one-hot block (54 features), labels from a
/// logistic model with fixed random effects. Labels in {-1, +1}.
pub fn synthetic_logistic(n: usize, seed: RngSeed) -> (Matrix, Vec<f64>) {
    const CONT: usize = 10;
    const AREA: usize = 4;
    const SOIL: usize = 40;
    let k = CONT + AREA + SOIL;
    let mut rng = seed.rng(Stream::Dataset);
    let w_normal = Normal::new(0.0, 0.6).expect("valid");
    let w_cont: Vec<f64> = (0..CONT).map(|_| w_normal.sample(&mut rng)).collect();
    let w_area: Vec<f64> = (0..AREA).map(|_| w_normal.sample(&mut rng)).collect();
    let w_soil: Vec<f64> = (0..SOIL).map(|_| w_normal.sample(&mut rng)).collect();
    let mut x = Matrix::zeros(n, k);
    let mut t = Vec::with_capacity(n);
    for r in 0..n {
        let row = x.row_mut(r);
        let mut z = 0.0;
        for c in 0..CONT {
            let v: f64 = StandardNormal.sample(&mut rng);
            row[c] = v;
            z += w_cont[c] * v;
        }
        let area = rng.random_range(0..AREA);
        let soil = rng.random_range(0..SOIL);
        row[CONT + area] = 1.0;
        row[CONT + AREA + soil] = 1.0;
        z += w_area[area] + w_soil[soil];
        let p = crate::targets::sigmoid(z);
        t.push(if rng.random::<f64>() < p { 1.0 } else { -1.0 });
    }
    (x, t)
}

/// Regression surrogate `y = sin(3 x_1) + 0.1 η` with `features` inputs
/// drawn from `U(-1, 1)`; only the first input carries signal.
pub fn synthetic_regression(n: usize, features: usize, seed: RngSeed) -> (Matrix, Vec<f64>) {
    let mut rng = seed.rng(Stream::Dataset);
    let mut x = Matrix::zeros(n, features);
    let mut y = Vec::with_capacity(n);
    for r in 0..n {
        let row = x.row_mut(r);
        for v in row.iter_mut() {
            *v = rng.random_range(-1.0..1.0);
        }
        let noise: f64 = StandardNormal.sample(&mut rng);
        y.push((3.0 * row[0]).sin() + 0.1 * noise);
    }
    (x, y)
}
