//! Ordered `(y_t, x_t)` observations and their CSV form.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};

/// Where a sample came from.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SampleMeta {
    /// Generator name, e.g. `ar_arch` or `logistic_auto`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<String>,
    /// Target function id.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<String>,
    /// Geometric mixing proxy: the contraction factor of the generating recursion.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub contraction: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

/// A time series of responses `y_t` with covariate vectors `x_t` stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeriesSample {
    dim: usize,
    y: Vec<f64>,
    x: Vec<f64>,
    #[serde(default)]
    pub meta: SampleMeta,
}

impl TimeSeriesSample {
    pub fn new(dim: usize, y: Vec<f64>, x: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::validation("covariate dimension must be positive"));
        }
        check_dim(y.len() * dim, x.len())?;
        Ok(TimeSeriesSample { dim, y, x, meta: SampleMeta::default() })
    }

    pub fn with_meta(mut self, meta: SampleMeta) -> Self {
        self.meta = meta;
        self
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn x(&self, t: usize) -> &[f64] {
        &self.x[t * self.dim..(t + 1) * self.dim]
    }

    /// All covariates, row-major.
    pub fn x_block(&self) -> &[f64] {
        &self.x
    }

    pub fn xs(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.x.chunks_exact(self.dim)
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = (f64, &[f64])> + '_ {
        self.y.iter().copied().zip(self.x.chunks_exact(self.dim))
    }

    /// Observations `range` as a new sample.
    pub fn slice(&self, range: std::ops::Range<usize>) -> TimeSeriesSample {
        TimeSeriesSample {
            dim: self.dim,
            y: self.y[range.clone()].to_vec(),
            x: self.x[range.start * self.dim..range.end * self.dim].to_vec(),
            meta: self.meta.clone(),
        }
    }

    /// Writes `t,y,x_1,...,x_d` with `t` starting at 1.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["t".to_string(), "y".to_string()];
        header.extend((1..=self.dim).map(|j| format!("x_{j}")));
        w.write_record(&header)?;
        let mut record = Vec::with_capacity(self.dim + 2);
        for (t, (y, x)) in self.iter().enumerate() {
            record.clear();
            record.push((t + 1).to_string());
            record.push(y.to_string());
            record.extend(x.iter().map(|v| v.to_string()));
            w.write_record(&record)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let header = r.headers()?.clone();
        let cols: Vec<&str> = header.iter().map(str::trim).collect();
        if cols.len() < 3 || cols[0] != "t" || cols[1] != "y" {
            return Err(Error::validation("sample CSV header must be `t,y,x_1,...,x_d`"));
        }
        for (j, c) in cols[2..].iter().enumerate() {
            if *c != format!("x_{}", j + 1) {
                return Err(Error::validation(format!("unexpected column `{c}`")));
            }
        }
        let dim = cols.len() - 2;
        let mut y = Vec::new();
        let mut x = Vec::new();
        for (row, rec) in r.records().enumerate() {
            let rec = rec?;
            let parse = |i: usize| -> Result<f64> {
                rec.get(i)
                    .ok_or_else(|| Error::validation(format!("row {} is short", row + 1)))?
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| Error::validation(format!("row {}: {e}", row + 1)))
            };
            y.push(parse(1)?);
            for j in 0..dim {
                x.push(parse(j + 2)?);
            }
        }
        TimeSeriesSample::new(dim, y, x)
    }

    pub fn read_csv_path(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_csv(std::fs::File::open(path)?)
    }

    pub fn write_csv_path(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_csv(std::io::BufWriter::new(std::fs::File::create(path)?))
    }
}
