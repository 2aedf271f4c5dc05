use std::fs::File;
use std::io::Write;
use std::path::Path;

use mint_core::diagnostics::SampleRun;
use mint_core::models::LabeledPoint;
use mint_core::ParameterVector;

use crate::error::{Error, Result};

/// Column layout expected of a dataset CSV.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Schema {
    /// One real column with the given header.
    Scalar { column: String },
    /// `x_0, …, x_{p−1}, label`; the bias feature is appended on load.
    Labeled { features: usize },
}

impl Schema {
    fn header(&self) -> Vec<String> {
        match self {
            Schema::Scalar { column } => vec![column.clone()],
            Schema::Labeled { features } => (0..*features).map(|j| format!("x_{j}")).chain(["label".to_string()]).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Observations {
    Scalar(Vec<f64>),
    Labeled(Vec<LabeledPoint>),
}

impl Observations {
    pub fn len(&self) -> usize {
        match self {
            Observations::Scalar(v) => v.len(),
            Observations::Labeled(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

fn csv_error(path: &Path, line: u64, message: impl Into<String>) -> Error {
    Error::Csv {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

fn reader(path: &Path) -> Result<csv::Reader<File>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::ReaderBuilder::new().has_headers(true).from_reader(file))
}

fn parse_real(path: &Path, line: u64, field: &str) -> Result<f64> {
    let v: f64 = field
        .trim()
        .parse()
        .map_err(|_| csv_error(path, line, format!("`{field}` is not a number")))?;
    if !v.is_finite() {
        return Err(csv_error(path, line, format!("`{field}` is not finite")));
    }
    Ok(v)
}

pub fn load_csv(path: &Path, schema: &Schema) -> Result<Observations> {
    let mut rdr = reader(path)?;
    let expected = schema.header();
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| csv_error(path, 1, e.to_string()))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    if header != expected {
        return Err(Error::Schema {
            path: path.to_path_buf(),
            message: format!("header {header:?}, expected {expected:?}"),
        });
    }
    let mut scalars = Vec::new();
    let mut labeled = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            csv_error(path, line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        match schema {
            Schema::Scalar { .. } => scalars.push(parse_real(path, line, &record[0])?),
            Schema::Labeled { features } => {
                let raw = (0..*features).map(|j| parse_real(path, line, &record[j])).collect::<Result<Vec<_>>>()?;
                let label = match record[*features].trim() {
                    "0" => 0,
                    "1" => 1,
                    other => return Err(csv_error(path, line, format!("label `{other}` is not 0 or 1"))),
                };
                labeled.push(LabeledPoint::with_bias(raw, label));
            }
        }
    }
    Ok(match schema {
        Schema::Scalar { .. } => Observations::Scalar(scalars),
        Schema::Labeled { .. } => Observations::Labeled(labeled),
    })
}

fn writer(path: &Path) -> Result<csv::Writer<File>> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::Writer::from_writer(file))
}

fn finish(path: &Path, mut w: csv::Writer<File>) -> Result<()> {
    w.flush().map_err(|e| Error::io(path, e))
}

fn write_err(path: &Path) -> impl Fn(csv::Error) -> Error + '_ {
    move |e| Error::io(path, e.into())
}

/// Values are written in shortest round-trip form.
pub fn write_scalar_csv(path: &Path, column: &str, values: &[f64]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record([column]).map_err(write_err(path))?;
    for v in values {
        w.write_record([v.to_string()]).map_err(write_err(path))?;
    }
    finish(path, w)
}

/// Drops each point's trailing bias feature, which `load_csv` restores.
pub fn write_labeled_csv(path: &Path, points: &[LabeledPoint]) -> Result<()> {
    let features = points.first().map_or(0, |p| p.features.len().saturating_sub(1));
    let mut w = writer(path)?;
    w.write_record(Schema::Labeled { features }.header()).map_err(write_err(path))?;
    for p in points {
        let row = p.features[..features].iter().map(f64::to_string).chain([p.label.to_string()]);
        w.write_record(row).map_err(write_err(path))?;
    }
    finish(path, w)
}

/// Stored chain output as read back from `samples.csv`.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleRows {
    pub iterations: Vec<u64>,
    pub accepted: Vec<bool>,
    pub samples: Vec<ParameterVector>,
}

impl SampleRows {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

pub fn samples_header(dim: usize) -> Vec<String> {
    ["iter".to_string(), "accepted".to_string()]
        .into_iter()
        .chain((0..dim).map(|j| format!("theta_{j}")))
        .collect()
}

/// `iter,accepted,theta_0,…` with 17 significant digits per float.
pub fn write_samples(path: &Path, run: &SampleRun, dim: usize) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = std::io::BufWriter::new(file);
    let io = |e| Error::io(path, e);
    writeln!(out, "{}", samples_header(dim).join(",")).map_err(io)?;
    for ((iter, accepted), theta) in run.iterations.iter().zip(&run.accepted).zip(&run.samples) {
        write!(out, "{iter},{}", *accepted as u8).map_err(io)?;
        for v in theta.iter() {
            write!(out, ",{v:.16e}").map_err(io)?;
        }
        writeln!(out).map_err(io)?;
    }
    out.flush().map_err(io)
}

pub fn read_samples(path: &Path) -> Result<SampleRows> {
    let mut rdr = reader(path)?;
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| csv_error(path, 1, e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    let dim = header.len().saturating_sub(2);
    if header != samples_header(dim) {
        return Err(Error::Schema {
            path: path.to_path_buf(),
            message: format!("header {header:?} is not iter,accepted,theta_0,…"),
        });
    }
    let mut rows = SampleRows {
        iterations: Vec::new(),
        accepted: Vec::new(),
        samples: Vec::new(),
    };
    for record in rdr.records() {
        let record = record.map_err(|e| csv_error(path, e.position().map_or(0, |p| p.line()), e.to_string()))?;
        let line = record.position().map_or(0, |p| p.line());
        let iter = record[0]
            .parse()
            .map_err(|_| csv_error(path, line, format!("`{}` is not an iteration index", &record[0])))?;
        let accepted = match &record[1] {
            "0" => false,
            "1" => true,
            other => return Err(csv_error(path, line, format!("accepted flag `{other}` is not 0 or 1"))),
        };
        let theta = (0..dim).map(|j| parse_real(path, line, &record[j + 2])).collect::<Result<Vec<_>>>()?;
        rows.iterations.push(iter);
        rows.accepted.push(accepted);
        rows.samples.push(ParameterVector::new(theta)?);
    }
    Ok(rows)
}
