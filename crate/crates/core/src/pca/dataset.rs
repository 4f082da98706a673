use std::io::{BufRead, Write};

use crate::matcore::DenseMatrix;
use crate::{Error, Result, SeededRng};

/// Points stored as the columns of a `d x N` matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub x: DenseMatrix<f64>,
    pub labels: Option<Vec<i64>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LabelColumn {
    /// The final field of every line is an integer label.
    Last,
    None,
}

impl std::str::FromStr for LabelColumn {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "last" => Ok(LabelColumn::Last),
            "none" => Ok(LabelColumn::None),
            _ => Err(Error::invalid(format!("label column must be 'last' or 'none', got {s:?}"))),
        }
    }
}

/// Disjoint train and test indices into a dataset.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

impl Dataset {
    pub fn new(x: DenseMatrix<f64>, labels: Option<Vec<i64>>) -> Result<Self> {
        if x.rows() == 0 || x.cols() == 0 {
            return Err(Error::invalid("empty dataset"));
        }
        if let Some(l) = &labels {
            if l.len() != x.cols() {
                return Err(Error::shape(
                    "Dataset",
                    format!("{} labels for {} points", l.len(), x.cols()),
                ));
            }
        }
        Ok(Self { x, labels })
    }

    pub fn dim(&self) -> usize {
        self.x.rows()
    }

    pub fn len(&self) -> usize {
        self.x.cols()
    }

    pub fn is_empty(&self) -> bool {
        self.x.cols() == 0
    }

    /// Seeded random split with `round(test_fraction * N)` test points (at
    /// least one point on each side).
    pub fn split(&self, test_fraction: f64, seed: u64) -> Result<Split> {
        let n = self.len();
        if !(0.0..1.0).contains(&test_fraction) || n < 2 {
            return Err(Error::invalid(format!(
                "cannot split {n} points with test fraction {test_fraction}"
            )));
        }
        let n_test = ((test_fraction * n as f64).round() as usize).clamp(1, n - 1);
        let mut idx: Vec<usize> = (0..n).collect();
        SeededRng::new(seed).shuffle(&mut idx);
        let mut test = idx.split_off(n - n_test);
        let mut train = idx;
        train.sort_unstable();
        test.sort_unstable();
        Ok(Split { train, test })
    }

    pub fn subset(&self, idx: &[usize]) -> Dataset {
        Dataset {
            x: self.x.select_cols(idx),
            labels: self.labels.as_ref().map(|l| idx.iter().map(|&i| l[i]).collect()),
        }
    }
}

/// One sample per line, comma-separated features, optionally followed by an
/// integer label.
pub fn read_dataset_csv<R: BufRead>(reader: R, label_col: LabelColumn) -> Result<Dataset> {
    let mut features: Vec<f64> = Vec::new();
    let mut labels: Vec<i64> = Vec::new();
    let mut d: Option<usize> = None;
    let mut n = 0;
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if label_col == LabelColumn::Last {
            let raw = fields.pop().unwrap_or_default();
            labels.push(parse_label(raw).ok_or_else(|| {
                Error::format("dataset CSV", format!("line {}: bad label {raw:?}", lineno + 1))
            })?);
        }
        match d {
            None => d = Some(fields.len()),
            Some(d) if d != fields.len() => {
                return Err(Error::format(
                    "dataset CSV",
                    format!("line {}: {} features, expected {d}", lineno + 1, fields.len()),
                ))
            }
            _ => {}
        }
        for f in fields {
            features.push(f.parse::<f64>().map_err(|e| {
                Error::format("dataset CSV", format!("line {}: {f:?}: {e}", lineno + 1))
            })?);
        }
        n += 1;
    }
    let d = d.unwrap_or(0);
    if n == 0 || d == 0 {
        return Err(Error::format("dataset CSV", "no samples"));
    }
    // Each line is one column of the d x N matrix.
    let x = DenseMatrix::from_col_major(d, n, features)?;
    Dataset::new(x, (label_col == LabelColumn::Last).then_some(labels))
}

pub fn write_dataset_csv<W: Write>(w: &mut W, data: &Dataset) -> Result<()> {
    for c in 0..data.len() {
        let mut line: Vec<String> = data.x.col(c).iter().map(|v| v.to_string()).collect();
        if let Some(l) = &data.labels {
            line.push(l[c].to_string());
        }
        w.write_all(line.join(",").as_bytes())?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

fn parse_label(raw: &str) -> Option<i64> {
    raw.parse::<i64>().ok().or_else(|| {
        let v = raw.parse::<f64>().ok()?;
        (v.fract() == 0.0 && v.abs() < 9.0e15).then_some(v as i64)
    })
}

/// Two Gaussian blobs with identity covariance centred at `+-3 v` for a random
/// unit vector `v`. Points alternate between label 0 (`-3 v`) and label 1.
pub fn two_blobs(d: usize, n: usize, seed: u64) -> Dataset {
    let mut rng = SeededRng::new(seed);
    let mut v: Vec<f64> = (0..d).map(|_| rng.normal()).collect();
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter_mut().for_each(|x| *x /= norm);
    let labels: Vec<i64> = (0..n).map(|i| (i % 2) as i64).collect();
    let x = DenseMatrix::from_fn(d, n, |t, i| {
        let sign = if labels[i] == 0 { -3.0 } else { 3.0 };
        sign * v[t]
    });
    // Noise drawn column by column so the stream order is independent of layout.
    let mut data = x.into_vec();
    for value in data.iter_mut() {
        *value += rng.normal();
    }
    Dataset {
        x: DenseMatrix::from_col_major(d, n, data).expect("finite by construction"),
        labels: Some(labels),
    }
}
