//! Sparse `label index:value ...` text format.

use std::io::{BufRead, Write};

use ndarray::{Array1, Array2};

use crate::dataset::Dataset;
use crate::error::{Error, Result};

/// Parsed file before densification.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseRows {
    pub labels: Vec<f64>,
    pub rows: Vec<Vec<(usize, f64)>>,
    /// Largest feature index seen (1-based), i.e. the dense width.
    pub width: usize,
    /// 1-based source line of each row.
    pub lines: Vec<usize>,
}

fn parse_error(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn parse_line(text: &str, line: usize) -> Result<(f64, Vec<(usize, f64)>)> {
    let mut tokens = text.split_whitespace();
    let label_tok = tokens
        .next()
        .ok_or_else(|| parse_error(line, "missing label"))?;
    let label: f64 = label_tok
        .parse()
        .map_err(|_| parse_error(line, format!("bad label `{label_tok}`")))?;
    if !label.is_finite() {
        return Err(parse_error(line, format!("non-finite label `{label_tok}`")));
    }
    let mut features = Vec::new();
    let mut last = 0usize;
    for tok in tokens {
        let (idx, val) = tok
            .split_once(':')
            .ok_or_else(|| parse_error(line, format!("malformed pair `{tok}`")))?;
        let idx: usize = idx
            .parse()
            .map_err(|_| parse_error(line, format!("bad index in `{tok}`")))?;
        if idx == 0 {
            return Err(parse_error(
                line,
                format!("index 0 in `{tok}`; indices are 1-based"),
            ));
        }
        if idx <= last {
            return Err(parse_error(
                line,
                format!("index {idx} does not increase past {last}"),
            ));
        }
        let val: f64 = val
            .parse()
            .map_err(|_| parse_error(line, format!("bad value in `{tok}`")))?;
        if !val.is_finite() {
            return Err(parse_error(line, format!("non-finite value in `{tok}`")));
        }
        last = idx;
        features.push((idx, val));
    }
    Ok((label, features))
}

/// Parse every non-blank line; errors carry the 1-based line number.
pub fn parse_sparse<R: BufRead>(reader: R) -> Result<SparseRows> {
    let mut out = SparseRows {
        labels: Vec::new(),
        rows: Vec::new(),
        width: 0,
        lines: Vec::new(),
    };
    for (k, text) in reader.lines().enumerate() {
        let line = k + 1;
        let text = text.map_err(|e| parse_error(line, e.to_string()))?;
        if text.trim().is_empty() {
            continue;
        }
        let (label, features) = parse_line(&text, line)?;
        if let Some(&(idx, _)) = features.last() {
            out.width = out.width.max(idx);
        }
        out.labels.push(label);
        out.rows.push(features);
        out.lines.push(line);
    }
    if out.rows.is_empty() {
        return Err(parse_error(0, "no examples"));
    }
    Ok(out)
}

impl SparseRows {
    pub fn to_dataset(&self) -> Result<Dataset> {
        let mut x = Array2::zeros((self.rows.len(), self.width));
        for (i, row) in self.rows.iter().enumerate() {
            for &(idx, v) in row {
                x[[i, idx - 1]] = v;
            }
        }
        Dataset::new(x, Array1::from(self.labels.clone()))
    }
}

/// Dense dataset with unmentioned features set to zero, labels as written.
pub fn parse_libsvm<R: BufRead>(reader: R) -> Result<Dataset> {
    parse_sparse(reader)?.to_dataset()
}

/// Map the smaller of exactly two distinct labels to `-1`, the larger to `+1`.
pub fn binarize_labels(data: &Dataset) -> Result<Dataset> {
    let mut distinct: Vec<f64> = data.y().to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() != 2 {
        return Err(Error::Domain(format!(
            "expected two distinct labels, found {}",
            distinct.len()
        )));
    }
    let low = distinct[0];
    let y = data.y().mapv(|v| if v == low { -1.0 } else { 1.0 });
    Dataset::new(data.x().clone(), y)
}

/// Write `data` in sparse form, omitting zero features.
pub fn write_libsvm<W: Write>(data: &Dataset, mut out: W) -> Result<()> {
    for (row, y) in data.x().rows().into_iter().zip(data.y()) {
        write!(out, "{y}")?;
        for (j, v) in row.iter().enumerate() {
            if *v != 0.0 {
                write!(out, " {}:{v}", j + 1)?;
            }
        }
        writeln!(out)?;
    }
    Ok(())
}
