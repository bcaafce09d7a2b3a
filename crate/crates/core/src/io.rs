//! CSV readers and writers for signals, datasets, models and reports.
//!
//! Every file is UTF-8 with LF line endings and `.` as the decimal separator.
//! Lines starting with `#` are comments on input.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::gram::GramMatrix;
use crate::kernels::KernelSpec;
use crate::signals::{Dataset, PiecewiseConstantSignal};
use crate::solver::IdentifiedModel;

fn parse_err(path: &Path, line: u64, msg: impl Into<String>) -> Error {
    Error::Parse {
        path: path.display().to_string(),
        line,
        msg: msg.into(),
    }
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| Error::io(path, e))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

/// Two-column numeric CSV with the given header.
pub fn read_columns(path: &Path, header: [&str; 2]) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .has_headers(true)
        .from_reader(open(path)?);
    let got = rdr.headers().map_err(|e| csv_err(path, e))?.clone();
    let names: Vec<&str> = got.iter().collect();
    if names != header {
        let line = got.position().map_or(1, |p| p.line());
        return Err(parse_err(
            path,
            line,
            format!("expected header `{}`, found `{}`", header.join(","), names.join(",")),
        ));
    }
    let mut a = Vec::new();
    let mut b = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != 2 {
            return Err(parse_err(path, line, format!("expected 2 fields, found {}", rec.len())));
        }
        let num = |s: &str| -> Result<f64> {
            let v: f64 = s
                .parse()
                .map_err(|_| parse_err(path, line, format!("`{s}` is not a number")))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(parse_err(path, line, format!("`{s}` is not finite")))
            }
        };
        a.push(num(&rec[0])?);
        b.push(num(&rec[1])?);
    }
    Ok((a, b))
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line());
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        csv::ErrorKind::UnequalLengths { expected_len, len, .. } => parse_err(
            path,
            line,
            format!("expected {expected_len} fields, found {len}"),
        ),
        csv::ErrorKind::Utf8 { .. } => parse_err(path, line, "invalid UTF-8"),
        other => parse_err(path, line, format!("{other:?}")),
    }
}

/// Input signal as `t,level` rows: `level` holds from `t` until the next row.
pub fn read_signal_csv(path: &Path) -> Result<PiecewiseConstantSignal> {
    let (t, level) = read_columns(path, ["t", "level"])?;
    PiecewiseConstantSignal::new(t, level).map_err(|e| parse_err(path, 0, e.to_string()))
}

pub fn write_signal_csv(path: &Path, u: &PiecewiseConstantSignal) -> Result<()> {
    write_columns(path, ["t", "level"], u.breakpoints(), u.levels())
}

/// Output measurements as `t,y` rows.
pub fn read_dataset_csv(path: &Path) -> Result<Dataset> {
    let (t, y) = read_columns(path, ["t", "y"])?;
    Dataset::new(t, y).map_err(|e| parse_err(path, 0, e.to_string()))
}

pub fn write_dataset_csv(path: &Path, data: &Dataset) -> Result<()> {
    write_columns(path, ["t", "y"], data.times(), data.values())
}

pub fn write_columns(path: &Path, header: [&str; 2], a: &[f64], b: &[f64]) -> Result<()> {
    let mut w = create(path)?;
    let res = (|| -> std::io::Result<()> {
        writeln!(w, "{},{}", header[0], header[1])?;
        for (x, y) in a.iter().zip(b) {
            writeln!(w, "{x},{y}")?;
        }
        w.flush()
    })();
    res.map_err(|e| Error::io(path, e))
}

/// Curve samples such as `t,h` or `t,y`.
pub fn write_curve_csv(path: &Path, value_name: &str, ts: &[f64], values: &[f64]) -> Result<()> {
    write_columns(path, ["t", value_name], ts, values)
}

/// Model coefficients `t_i,c_i` preceded by `#` metadata lines.
pub fn write_model_csv(path: &Path, model: &IdentifiedModel) -> Result<()> {
    let mut w = create(path)?;
    let res = (|| -> std::io::Result<()> {
        writeln!(w, "# lambda = {}", model.lambda())?;
        for (weight, spec) in model.components() {
            writeln!(w, "# kernel = {weight} * {spec}")?;
        }
        writeln!(w, "t_i,c_i")?;
        for (t, c) in model.times().iter().zip(model.coefficients().iter()) {
            writeln!(w, "{t},{c}")?;
        }
        w.flush()
    })();
    res.map_err(|e| Error::io(path, e))
}

/// Contents of a model file.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelFile {
    pub lambda: f64,
    pub components: Vec<(f64, KernelSpec)>,
    pub times: Vec<f64>,
    pub coefficients: Vec<f64>,
}

pub fn read_model_csv(path: &Path) -> Result<ModelFile> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lambda = None;
    let mut components = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let Some(meta) = line.strip_prefix('#') else {
            continue;
        };
        let lineno = i as u64 + 1;
        let Some((key, value)) = meta.split_once('=') else {
            continue;
        };
        match key.trim() {
            "lambda" => {
                let v: f64 = value
                    .trim()
                    .parse()
                    .map_err(|_| parse_err(path, lineno, "bad lambda"))?;
                lambda = Some(v);
            }
            "kernel" => {
                let (w, spec) = value
                    .split_once('*')
                    .ok_or_else(|| parse_err(path, lineno, "expected `weight * spec`"))?;
                let w: f64 = w
                    .trim()
                    .parse()
                    .map_err(|_| parse_err(path, lineno, "bad kernel weight"))?;
                let spec: KernelSpec = spec
                    .trim()
                    .parse()
                    .map_err(|e: Error| parse_err(path, lineno, e.to_string()))?;
                components.push((w, spec));
            }
            _ => {}
        }
    }
    let lambda = lambda.ok_or_else(|| parse_err(path, 1, "missing `# lambda = ...` line"))?;
    let (times, coefficients) = read_columns(path, ["t_i", "c_i"])?;
    Ok(ModelFile {
        lambda,
        components,
        times,
        coefficients,
    })
}

/// Upper triangle of a Gram matrix as `i,j,value`.
pub fn write_gram_csv(path: &Path, gram: &GramMatrix) -> Result<()> {
    let mut w = create(path)?;
    let m = gram.matrix();
    let res = (|| -> std::io::Result<()> {
        writeln!(w, "i,j,value")?;
        for i in 0..m.nrows() {
            for j in i..m.ncols() {
                writeln!(w, "{i},{j},{}", m[(i, j)])?;
            }
        }
        w.flush()
    })();
    res.map_err(|e| Error::io(path, e))
}

/// MKL weights as `k,omega,d_k`.
pub fn write_weights_csv(path: &Path, omegas: &[f64], weights: &[f64]) -> Result<()> {
    let mut w = create(path)?;
    let res = (|| -> std::io::Result<()> {
        writeln!(w, "k,omega,d_k")?;
        for (k, (o, d)) in omegas.iter().zip(weights).enumerate() {
            writeln!(w, "{k},{o},{d}")?;
        }
        w.flush()
    })();
    res.map_err(|e| Error::io(path, e))
}
