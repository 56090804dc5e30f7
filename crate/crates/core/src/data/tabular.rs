//! Rectangular numeric CSV files.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::dataset::Dataset;
use crate::error::{Error, Result};
use crate::nn::Matrix;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CsvOptions {
    #[serde(default)]
    pub has_header: bool,
    /// Zero-based column holding integer class labels.
    #[serde(default)]
    pub label_column: Option<usize>,
    /// Declared class count; labels must be below it.
    #[serde(default)]
    pub num_classes: Option<usize>,
}

/// Per-column min-max scaling to `[0, 1]`. Constant columns map to 0.
#[derive(Debug, Clone, PartialEq)]
pub struct MinMaxScaler {
    min: Vec<f64>,
    max: Vec<f64>,
}

impl MinMaxScaler {
    pub fn fit(m: &Matrix) -> Self {
        let mut min = vec![f64::INFINITY; m.cols()];
        let mut max = vec![f64::NEG_INFINITY; m.cols()];
        for r in 0..m.rows() {
            for (c, &v) in m.row(r).iter().enumerate() {
                min[c] = min[c].min(v);
                max[c] = max[c].max(v);
            }
        }
        Self { min, max }
    }

    /// Values outside the fitted range are clamped.
    pub fn transform(&self, m: &Matrix) -> Result<Matrix> {
        if m.cols() != self.min.len() {
            return Err(Error::dim(
                "MinMaxScaler::transform",
                self.min.len(),
                m.cols(),
            ));
        }
        let mut out = m.clone();
        for r in 0..out.rows() {
            for (c, v) in out.row_mut(r).iter_mut().enumerate() {
                let span = self.max[c] - self.min[c];
                *v = if span > 0.0 {
                    ((*v - self.min[c]) / span).clamp(0.0, 1.0)
                } else {
                    0.0
                };
            }
        }
        Ok(out)
    }
}

/// Reads a CSV without normalizing features.
pub fn load_csv_raw(path: &Path, opts: &CsvOptions) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(opts.has_header)
        .flexible(true)
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            other => Error::Format {
                path: path.to_path_buf(),
                msg: format!("{other:?}"),
            },
        })?;
    let fmt = |msg: String| Error::Format {
        path: path.to_path_buf(),
        msg,
    };

    let mut width = None;
    let mut data = Vec::new();
    let mut labels = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec?;
        let line = i + 1 + usize::from(opts.has_header);
        match width {
            None => width = Some(rec.len()),
            Some(w) if w != rec.len() => {
                return Err(fmt(format!(
                    "ragged row at line {line}: {} fields, expected {w}",
                    rec.len()
                )))
            }
            _ => {}
        }
        for (c, cell) in rec.iter().enumerate() {
            let cell = cell.trim();
            if Some(c) == opts.label_column {
                let label: usize = cell
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.fract() == 0.0 && *v >= 0.0)
                    .map(|v| v as usize)
                    .ok_or_else(|| fmt(format!("bad label {cell:?} at line {line}")))?;
                if let Some(k) = opts.num_classes {
                    if label >= k {
                        return Err(Error::LabelOutOfRange { label, classes: k });
                    }
                }
                labels.push(label);
            } else {
                let v: f64 = cell.parse().map_err(|_| {
                    fmt(format!(
                        "non-numeric cell {cell:?} at line {line}, column {c}"
                    ))
                })?;
                if !v.is_finite() {
                    return Err(fmt(format!("non-finite cell at line {line}, column {c}")));
                }
                data.push(v);
            }
        }
    }
    let width = width.unwrap_or(0);
    if let Some(lc) = opts.label_column {
        if lc >= width && width > 0 {
            return Err(fmt(format!("label column {lc} outside {width} columns")));
        }
    }
    let cols = width - usize::from(opts.label_column.is_some() && width > 0);
    let rows = data.len().checked_div(cols).unwrap_or(0);
    let features = Matrix::from_vec(rows, cols, data)?;
    let labels = opts.label_column.map(|_| labels);
    Dataset::with_sequential_ids(features, labels)
}

/// Reads a CSV and min-max normalizes every feature column to `[0, 1]`.
pub fn load_csv(path: &Path, opts: &CsvOptions) -> Result<Dataset> {
    let raw = load_csv_raw(path, opts)?;
    let scaled = MinMaxScaler::fit(raw.features()).transform(raw.features())?;
    Dataset::new(
        scaled,
        raw.labels().map(<[usize]>::to_vec),
        raw.entity_ids().to_vec(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    #[test]
    fn two_by_two_min_max() {
        let f = write("0,1\n2,3\n");
        let d = load_csv(f.path(), &CsvOptions::default()).unwrap();
        assert_eq!(d.features().as_slice(), &[0.0, 0.0, 1.0, 1.0]);
        assert!(d.labels().is_none());
    }

    #[test]
    fn constant_column_maps_to_zero() {
        let f = write("5,1\n5,3\n5,2\n");
        let d = load_csv(f.path(), &CsvOptions::default()).unwrap();
        assert_eq!(d.features().as_slice(), &[0.0, 0.0, 0.0, 1.0, 0.0, 0.5]);
    }

    #[test]
    fn label_column_is_extracted() {
        let f = write("a,b,y\n0.5,1,7\n1.5,2,3\n");
        let opts = CsvOptions {
            has_header: true,
            label_column: Some(2),
            num_classes: Some(10),
        };
        let d = load_csv(f.path(), &opts).unwrap();
        assert_eq!(d.labels().unwrap(), &[7, 3]);
        assert_eq!(d.dim(), 2);
    }

    #[test]
    fn label_beyond_declared_classes() {
        let f = write("0.5,12\n");
        let opts = CsvOptions {
            label_column: Some(1),
            num_classes: Some(10),
            ..Default::default()
        };
        assert!(matches!(
            load_csv(f.path(), &opts),
            Err(Error::LabelOutOfRange { .. })
        ));
    }

    #[test]
    fn ragged_rows_and_text_cells_are_errors() {
        let f = write("1,2\n3\n");
        assert!(matches!(
            load_csv(f.path(), &CsvOptions::default()),
            Err(Error::Format { .. })
        ));
        let f = write("1,x\n");
        assert!(matches!(
            load_csv(f.path(), &CsvOptions::default()),
            Err(Error::Format { .. })
        ));
    }

    #[test]
    fn scaler_clamps_out_of_range_test_values() {
        let train = Matrix::from_rows(&[vec![0.0], vec![10.0]]).unwrap();
        let s = MinMaxScaler::fit(&train);
        let test = Matrix::from_rows(&[vec![-5.0], vec![5.0], vec![20.0]]).unwrap();
        assert_eq!(s.transform(&test).unwrap().as_slice(), &[0.0, 0.5, 1.0]);
    }
}
