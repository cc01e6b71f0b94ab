//! Matrix files and instance sidecars.
//!
//! Dense CSV: the first line holds the dimensions as `rows,cols`, followed
//! by one comma-separated line per matrix row. Values are written in the
//! shortest form that parses back to the same `f64`.
//!
//! Matrix Market: written in `array real general` layout (column-major, one
//! value per line); read in both `array` and `coordinate` layouts, with
//! `general` or `symmetric` symmetry and `real` or `integer` fields.
//!
//! An instance is a matrix file for `X` plus a JSON sidecar with the same
//! stem holding the outlier support, the labels and, for generated data,
//! the generation spec.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use faer::{Mat, MatRef};
use serde::{Deserialize, Serialize};

use crate::error::{LrrError, Result};
use crate::generate::{GenSpec, ProblemInstance};
use crate::linalg::{ColumnSupport, DenseMatrix};

fn parse_err(line: usize, msg: impl Into<String>) -> LrrError {
    LrrError::Parse { line, msg: msg.into() }
}

fn parse_value(tok: &str, line: usize) -> Result<f64> {
    let v: f64 = tok
        .trim()
        .parse()
        .map_err(|_| parse_err(line, format!("not a number: {:?}", tok.trim())))?;
    if !v.is_finite() {
        return Err(parse_err(line, format!("non-finite value {v}")));
    }
    Ok(v)
}

fn parse_dims<'a>(mut toks: impl Iterator<Item = &'a str>, line: usize, what: &str) -> Result<(usize, usize)> {
    let mut next = || -> Result<usize> {
        let tok = toks.next().ok_or_else(|| parse_err(line, format!("{what}: expected rows and cols")))?;
        tok.trim()
            .parse()
            .map_err(|_| parse_err(line, format!("{what}: bad dimension {:?}", tok.trim())))
    };
    Ok((next()?, next()?))
}

pub fn write_csv<W: Write>(m: MatRef<'_, f64>, out: W) -> Result<()> {
    let mut out = BufWriter::new(out);
    writeln!(out, "{},{}", m.nrows(), m.ncols())?;
    let mut line = String::new();
    for i in 0..m.nrows() {
        line.clear();
        for j in 0..m.ncols() {
            if j > 0 {
                line.push(',');
            }
            line.push_str(&format!("{:?}", m[(i, j)]));
        }
        writeln!(out, "{line}")?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_csv<R: Read>(input: R) -> Result<DenseMatrix> {
    let mut lines = BufReader::new(input).lines().enumerate().map(|(i, l)| (i + 1, l));
    let (first, header) = lines.next().ok_or_else(|| parse_err(1, "empty file"))?;
    let header = header?;
    let fields: Vec<&str> = header.split(',').collect();
    if fields.len() != 2 {
        return Err(parse_err(first, "header must be `rows,cols`"));
    }
    let (rows, cols) = parse_dims(fields.into_iter(), first, "header")?;
    let mut m = Mat::zeros(rows, cols);
    let mut row = 0;
    for (no, text) in lines {
        let text = text?;
        if text.trim().is_empty() {
            continue;
        }
        if row == rows {
            return Err(parse_err(no, format!("more than {rows} data rows")));
        }
        let mut count = 0;
        for (j, tok) in text.split(',').enumerate() {
            if j >= cols {
                return Err(parse_err(no, format!("more than {cols} fields")));
            }
            m[(row, j)] = parse_value(tok, no)?;
            count += 1;
        }
        if count != cols {
            return Err(parse_err(no, format!("expected {cols} fields, found {count}")));
        }
        row += 1;
    }
    if row != rows {
        return Err(parse_err(first, format!("header announces {rows} rows, found {row}")));
    }
    Ok(m)
}

pub fn write_matrix_market<W: Write>(m: MatRef<'_, f64>, out: W) -> Result<()> {
    let mut out = BufWriter::new(out);
    writeln!(out, "%%MatrixMarket matrix array real general")?;
    writeln!(out, "{} {}", m.nrows(), m.ncols())?;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            writeln!(out, "{:?}", m[(i, j)])?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn read_matrix_market<R: Read>(input: R) -> Result<DenseMatrix> {
    let mut lines = BufReader::new(input).lines().enumerate().map(|(i, l)| (i + 1, l));
    let (_, banner) = lines.next().ok_or_else(|| parse_err(1, "empty file"))?;
    let banner = banner?.to_ascii_lowercase();
    let words: Vec<&str> = banner.split_whitespace().collect();
    if words.len() != 5 || words[0] != "%%matrixmarket" || words[1] != "matrix" {
        return Err(parse_err(1, "missing `%%MatrixMarket matrix` banner"));
    }
    let coordinate = match words[2] {
        "array" => false,
        "coordinate" => true,
        other => return Err(parse_err(1, format!("unsupported layout {other}"))),
    };
    if !matches!(words[3], "real" | "integer" | "double") {
        return Err(parse_err(1, format!("unsupported field {}", words[3])));
    }
    let symmetric = match words[4] {
        "general" => false,
        "symmetric" => true,
        other => return Err(parse_err(1, format!("unsupported symmetry {other}"))),
    };

    let mut body = lines.filter(|(_, l)| match l {
        Ok(t) => !t.trim().is_empty() && !t.trim_start().starts_with('%'),
        Err(_) => true,
    });
    let (size_no, size) = body.next().ok_or_else(|| parse_err(2, "missing size line"))?;
    let size = size?;
    let mut toks = size.split_whitespace();
    let (rows, cols) = parse_dims(&mut toks, size_no, "size line")?;
    let mut m = Mat::zeros(rows, cols);
    if coordinate {
        let nnz: usize = toks
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| parse_err(size_no, "size line: missing entry count"))?;
        let mut seen = 0;
        for (no, text) in body {
            let text = text?;
            let t: Vec<&str> = text.split_whitespace().collect();
            if t.len() != 3 {
                return Err(parse_err(no, "expected `row col value`"));
            }
            let (i, j) = parse_dims(t[..2].iter().copied(), no, "entry")?;
            if i == 0 || j == 0 || i > rows || j > cols {
                return Err(parse_err(no, format!("entry ({i}, {j}) outside {rows}x{cols}")));
            }
            let v = parse_value(t[2], no)?;
            m[(i - 1, j - 1)] = v;
            if symmetric {
                m[(j - 1, i - 1)] = v;
            }
            seen += 1;
        }
        if seen != nnz {
            return Err(parse_err(size_no, format!("announced {nnz} entries, found {seen}")));
        }
    } else {
        // Symmetric arrays store the lower triangle only, column by column.
        let slots: Vec<(usize, usize)> = (0..cols)
            .flat_map(|j| (if symmetric { j } else { 0 }..rows).map(move |i| (i, j)))
            .collect();
        let mut k = 0;
        for (no, text) in body {
            let text = text?;
            for tok in text.split_whitespace() {
                let &(i, j) = slots
                    .get(k)
                    .ok_or_else(|| parse_err(no, format!("more than {} values", slots.len())))?;
                let v = parse_value(tok, no)?;
                m[(i, j)] = v;
                if symmetric {
                    m[(j, i)] = v;
                }
                k += 1;
            }
        }
        if k != slots.len() {
            return Err(parse_err(size_no, format!("expected {} values, found {k}", slots.len())));
        }
    }
    Ok(m)
}

fn is_matrix_market(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("mtx"))
}

/// Reads `.mtx` files as Matrix Market and everything else as CSV.
pub fn read_matrix(path: &Path) -> Result<DenseMatrix> {
    let f = File::open(path)?;
    if is_matrix_market(path) {
        read_matrix_market(f)
    } else {
        read_csv(f)
    }
}

pub fn write_matrix(path: &Path, m: MatRef<'_, f64>) -> Result<()> {
    let f = File::create(path)?;
    if is_matrix_market(path) {
        write_matrix_market(m, f)
    } else {
        write_csv(m, f)
    }
}

/// Ground truth stored next to an instance's data matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceSidecar {
    pub spec: Option<GenSpec>,
    pub seed: Option<u64>,
    pub ncols: usize,
    /// Outlier column indices.
    pub support: Vec<usize>,
    /// Subspace index of each authentic column, in column order.
    pub labels: Vec<usize>,
}

impl InstanceSidecar {
    pub fn of(inst: &ProblemInstance, spec: Option<&GenSpec>) -> Self {
        Self {
            spec: spec.cloned(),
            seed: spec.map(|s| s.seed),
            ncols: inst.ncols(),
            support: inst.support0.indices().to_vec(),
            labels: inst.labels.clone(),
        }
    }

    /// Splits `x` by the recorded support into `X₀` and `C₀`.
    pub fn instance(&self, x: DenseMatrix) -> Result<ProblemInstance> {
        if x.ncols() != self.ncols {
            return Err(LrrError::mismatch("sidecar: columns", self.ncols, x.ncols()));
        }
        let support = ColumnSupport::new(self.support.clone(), self.ncols)?;
        let mask = support.mask();
        let x0 = Mat::from_fn(x.nrows(), x.ncols(), |i, j| if mask[j] { 0.0 } else { x[(i, j)] });
        let c0 = Mat::from_fn(x.nrows(), x.ncols(), |i, j| if mask[j] { x[(i, j)] } else { 0.0 });
        ProblemInstance::from_parts(x0, c0, support, self.labels.clone())
    }
}

/// Sidecar path for a matrix file: same stem, `.json` extension.
pub fn sidecar_path(matrix_path: &Path) -> PathBuf {
    matrix_path.with_extension("json")
}

pub fn save_instance(matrix_path: &Path, inst: &ProblemInstance, spec: Option<&GenSpec>) -> Result<()> {
    write_matrix(matrix_path, inst.x.as_ref())?;
    write_json(&sidecar_path(matrix_path), &InstanceSidecar::of(inst, spec))
}

/// Reads a data matrix and, when present, its sidecar.
pub fn load_matrix_with_sidecar(matrix_path: &Path) -> Result<(DenseMatrix, Option<InstanceSidecar>)> {
    let x = read_matrix(matrix_path)?;
    let side = sidecar_path(matrix_path);
    if !side.exists() {
        return Ok((x, None));
    }
    let sidecar: InstanceSidecar = serde_json::from_reader(BufReader::new(File::open(side)?))?;
    Ok((x, Some(sidecar)))
}

pub fn load_instance(matrix_path: &Path) -> Result<ProblemInstance> {
    match load_matrix_with_sidecar(matrix_path)? {
        (x, Some(side)) => side.instance(x),
        (_, None) => Err(LrrError::MissingGroundTruth("instance sidecar")),
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}
