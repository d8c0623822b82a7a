//! Right-censored survival data: CSV ingestion, dummy coding and
//! standardization of the design matrix.

use std::io::Read;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const LARYNX_CSV: &str = include_str!("../data/larynx.csv");
const VETERAN_CSV: &str = include_str!("../data/veteran.csv");

/// How one input column enters the design matrix.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum CovariateSpec {
    Numeric(String),
    /// Reference-coded factor. `None` picks the smallest level.
    Categorical { column: String, reference: Option<String> },
}

impl CovariateSpec {
    /// Parses a comma list such as `age,cat:stage:1` or `karno,cat:celltype`.
    pub fn parse_list(spec: &str) -> Result<Vec<CovariateSpec>> {
        let mut out = Vec::new();
        for item in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            if let Some(rest) = item.strip_prefix("cat:") {
                let mut parts = rest.splitn(2, ':');
                let column = parts.next().unwrap_or("").trim();
                if column.is_empty() {
                    return Err(Error::InvalidCovariateSpec(item.to_string()));
                }
                let reference = parts.next().map(|r| r.trim().to_string()).filter(|r| !r.is_empty());
                out.push(CovariateSpec::Categorical { column: column.to_string(), reference });
            } else if item.contains(':') {
                return Err(Error::InvalidCovariateSpec(item.to_string()));
            } else {
                out.push(CovariateSpec::Numeric(item.to_string()));
            }
        }
        Ok(out)
    }
}

/// Resolved encoding of one input column, enough to encode new data the same way.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum ColumnEncoding {
    Numeric { column: String },
    Categorical { column: String, reference: String, levels: Vec<String> },
}

impl ColumnEncoding {
    fn output_names(&self) -> Vec<String> {
        match self {
            ColumnEncoding::Numeric { column } => vec![column.clone()],
            ColumnEncoding::Categorical { column, levels, .. } => {
                levels.iter().map(|l| format!("{column}{l}")).collect()
            }
        }
    }
}

/// Observed times, event indicators and an `n × p` design matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SurvivalDataset {
    times: Vec<f64>,
    status: Vec<u8>,
    design: DMatrix<f64>,
    column_names: Vec<String>,
    encoding: Vec<ColumnEncoding>,
}

impl SurvivalDataset {
    pub fn new(times: Vec<f64>, status: Vec<u8>, design: DMatrix<f64>, column_names: Vec<String>) -> Result<Self> {
        let n = times.len();
        if status.len() != n {
            return Err(Error::LengthMismatch(n, status.len()));
        }
        if design.nrows() != n {
            return Err(Error::DimensionMismatch { expected: n, got: design.nrows() });
        }
        if column_names.len() != design.ncols() {
            return Err(Error::DimensionMismatch { expected: design.ncols(), got: column_names.len() });
        }
        for (i, &t) in times.iter().enumerate() {
            if !(t > 0.0 && t.is_finite()) {
                return Err(Error::NonPositiveTime { row: i + 1 });
            }
        }
        if let Some(i) = status.iter().position(|&s| s > 1) {
            return Err(Error::InvalidStatus { row: i + 1 });
        }
        if let Some(idx) = design.iter().position(|v| !v.is_finite()) {
            return Err(Error::UnparseableCell {
                row: idx % n.max(1) + 1,
                col: column_names[idx / n.max(1)].clone(),
            });
        }
        let encoding = column_names.iter().map(|c| ColumnEncoding::Numeric { column: c.clone() }).collect();
        Ok(Self { times, status, design, column_names, encoding })
    }

    /// Dataset without covariates.
    pub fn baseline_only(times: Vec<f64>, status: Vec<u8>) -> Result<Self> {
        let n = times.len();
        Self::new(times, status, DMatrix::zeros(n, 0), Vec::new())
    }

    pub fn n(&self) -> usize {
        self.times.len()
    }

    pub fn p(&self) -> usize {
        self.design.ncols()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn status(&self) -> &[u8] {
        &self.status
    }

    pub fn design(&self) -> &DMatrix<f64> {
        &self.design
    }

    pub fn column_names(&self) -> &[String] {
        &self.column_names
    }

    pub fn encoding(&self) -> &[ColumnEncoding] {
        &self.encoding
    }

    pub fn events(&self) -> usize {
        self.status.iter().map(|&s| s as usize).sum()
    }

    pub fn max_time(&self) -> f64 {
        self.times.iter().copied().fold(0.0, f64::max)
    }

    /// Same records with a different design (e.g. standardized).
    pub fn with_design(&self, design: DMatrix<f64>) -> Result<Self> {
        if design.nrows() != self.n() || design.ncols() != self.p() {
            return Err(Error::DimensionMismatch { expected: self.p(), got: design.ncols() });
        }
        Ok(Self { design, ..self.clone() })
    }

    /// Same records without covariates.
    pub fn without_covariates(&self) -> Self {
        Self {
            design: DMatrix::zeros(self.n(), 0),
            column_names: Vec::new(),
            encoding: Vec::new(),
            ..self.clone()
        }
    }

    /// The first `k` records.
    pub fn head(&self, k: usize) -> Self {
        let k = k.min(self.n());
        Self {
            times: self.times[..k].to_vec(),
            status: self.status[..k].to_vec(),
            design: self.design.rows(0, k).into_owned(),
            ..self.clone()
        }
    }

    /// Records reordered by `perm`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        Self {
            times: perm.iter().map(|&i| self.times[i]).collect(),
            status: perm.iter().map(|&i| self.status[i]).collect(),
            design: self.design.select_rows(perm),
            ..self.clone()
        }
    }
}

/// Reads a survival dataset from a CSV file.
pub fn load_csv(
    path: impl AsRef<Path>,
    time_col: &str,
    status_col: &str,
    covariates: &[CovariateSpec],
) -> Result<SurvivalDataset> {
    let file = std::fs::File::open(path)?;
    read_csv(file, time_col, status_col, covariates)
}

struct Table {
    headers: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    fn read<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers()?.iter().map(str::to_string).collect();
        let mut rows = Vec::new();
        for rec in rdr.records() {
            rows.push(rec?.iter().map(str::to_string).collect());
        }
        Ok(Self { headers, rows })
    }

    fn column(&self, name: &str) -> Result<Vec<&str>> {
        let idx = self
            .headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))?;
        Ok(self.rows.iter().map(|r| r.get(idx).map(String::as_str).unwrap_or("")).collect())
    }
}

fn parse_numeric(cells: &[&str], col: &str) -> Result<Vec<f64>> {
    cells
        .iter()
        .enumerate()
        .map(|(i, c)| {
            c.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::UnparseableCell { row: i + 1, col: col.to_string() })
        })
        .collect()
}

/// Reads a survival dataset from any CSV source with a header row.
pub fn read_csv<R: Read>(
    reader: R,
    time_col: &str,
    status_col: &str,
    covariates: &[CovariateSpec],
) -> Result<SurvivalDataset> {
    let table = Table::read(reader)?;
    let time_cells = table.column(time_col)?;
    let status_cells = table.column(status_col)?;
    let mut times = Vec::with_capacity(time_cells.len());
    for (i, c) in time_cells.iter().enumerate() {
        let t: f64 = c.parse().map_err(|_| Error::UnparseableCell { row: i + 1, col: time_col.to_string() })?;
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::NonPositiveTime { row: i + 1 });
        }
        times.push(t);
    }
    let mut status = Vec::with_capacity(status_cells.len());
    for (i, c) in status_cells.iter().enumerate() {
        match c.parse::<f64>() {
            Ok(0.0) => status.push(0),
            Ok(1.0) => status.push(1),
            _ => return Err(Error::InvalidStatus { row: i + 1 }),
        }
    }
    let mut encoding = Vec::with_capacity(covariates.len());
    for spec in covariates {
        encoding.push(match spec {
            CovariateSpec::Numeric(column) => {
                table.column(column)?;
                ColumnEncoding::Numeric { column: column.clone() }
            }
            CovariateSpec::Categorical { column, reference } => {
                let cells = table.column(column)?;
                let labels: Vec<String> = cells.iter().map(|s| s.to_string()).collect();
                let reference = match reference {
                    Some(r) => r.clone(),
                    None => smallest_level(&labels).ok_or(Error::EmptyData)?,
                };
                let levels = dummy_levels(&labels, &reference, column)?;
                ColumnEncoding::Categorical { column: column.clone(), reference, levels }
            }
        });
    }
    let (design, column_names) = encode_table(&table, &encoding)?;
    let mut ds = SurvivalDataset::new(times, status, design, column_names)?;
    ds.encoding = encoding;
    Ok(ds)
}

/// Encodes covariate profiles (no time/status columns needed) exactly as the
/// fitted data were encoded.
pub fn encode_newdata<R: Read>(reader: R, encoding: &[ColumnEncoding]) -> Result<DMatrix<f64>> {
    let table = Table::read(reader)?;
    Ok(encode_table(&table, encoding)?.0)
}

fn encode_table(table: &Table, encoding: &[ColumnEncoding]) -> Result<(DMatrix<f64>, Vec<String>)> {
    let n = table.rows.len();
    let mut columns: Vec<Vec<f64>> = Vec::new();
    let mut names = Vec::new();
    for enc in encoding {
        match enc {
            ColumnEncoding::Numeric { column } => {
                columns.push(parse_numeric(&table.column(column)?, column)?);
            }
            ColumnEncoding::Categorical { column, reference, levels } => {
                let cells = table.column(column)?;
                for (i, c) in cells.iter().enumerate() {
                    if *c != reference && !levels.iter().any(|l| l == c) {
                        return Err(Error::UnparseableCell { row: i + 1, col: column.clone() });
                    }
                }
                for level in levels {
                    columns.push(cells.iter().map(|c| if c == level { 1.0 } else { 0.0 }).collect());
                }
            }
        }
        names.extend(enc.output_names());
    }
    let design = DMatrix::from_fn(n, columns.len(), |i, j| columns[j][i]);
    Ok((design, names))
}

fn smallest_level(labels: &[String]) -> Option<String> {
    let numeric: Option<Vec<f64>> = labels.iter().map(|l| l.parse::<f64>().ok()).collect();
    match numeric {
        Some(values) => {
            let idx = (0..values.len()).min_by(|&a, &b| values[a].total_cmp(&values[b]))?;
            Some(labels[idx].clone())
        }
        None => labels.iter().min().cloned(),
    }
}

fn dummy_levels(labels: &[String], reference: &str, column: &str) -> Result<Vec<String>> {
    if !labels.iter().any(|l| l == reference) {
        return Err(Error::UnknownReference { column: column.to_string(), reference: reference.to_string() });
    }
    let mut levels: Vec<String> = Vec::new();
    for l in labels {
        if l != reference && !levels.contains(l) {
            levels.push(l.clone());
        }
    }
    if levels.is_empty() {
        log::warn!("factor `{column}` has a single level; it contributes no columns");
    }
    Ok(levels)
}

/// Reference-coded indicators: one column per non-reference level, in order
/// of first appearance. Returns the indicator matrix and the level labels.
pub fn encode_dummies(raw: &[String], reference: &str) -> Result<(DMatrix<f64>, Vec<String>)> {
    if raw.is_empty() {
        return Err(Error::EmptyData);
    }
    let levels = dummy_levels(raw, reference, "factor")?;
    let m = DMatrix::from_fn(raw.len(), levels.len(), |i, j| if raw[i] == levels[j] { 1.0 } else { 0.0 });
    Ok((m, levels))
}

/// Column means and sample standard deviations used to standardize a design.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StandardizationParams {
    pub means: Vec<f64>,
    pub sds: Vec<f64>,
}

impl StandardizationParams {
    /// Means 0 and sds 1: standardization switched off.
    pub fn identity(p: usize) -> Self {
        Self { means: vec![0.0; p], sds: vec![1.0; p] }
    }

    pub fn p(&self) -> usize {
        self.means.len()
    }

    pub fn is_identity(&self) -> bool {
        self.means.iter().all(|&m| m == 0.0) && self.sds.iter().all(|&s| s == 1.0)
    }

    /// `z_ij = (x_ij − x̄_j) / s_j`.
    pub fn apply(&self, design: &DMatrix<f64>) -> DMatrix<f64> {
        DMatrix::from_fn(design.nrows(), design.ncols(), |i, j| (design[(i, j)] - self.means[j]) / self.sds[j])
    }

    /// Inverse of [`apply`](Self::apply).
    pub fn restore(&self, z: &DMatrix<f64>) -> DMatrix<f64> {
        DMatrix::from_fn(z.nrows(), z.ncols(), |i, j| z[(i, j)] * self.sds[j] + self.means[j])
    }

    /// Standardizes a single covariate profile.
    pub fn apply_row(&self, x: &[f64]) -> Vec<f64> {
        x.iter().enumerate().map(|(j, v)| (v - self.means[j]) / self.sds[j]).collect()
    }

    /// `Σ_j β*_j x̄_j / s_j`, the intercept shift induced by centering.
    pub fn offset(&self, beta_std: &[f64]) -> f64 {
        beta_std.iter().zip(self.means.iter().zip(&self.sds)).map(|(b, (m, s))| b * m / s).sum()
    }
}

/// Centers and scales every column to sample mean 0 and sd 1 (n−1 divisor).
pub fn standardize(design: &DMatrix<f64>) -> Result<(DMatrix<f64>, StandardizationParams)> {
    let n = design.nrows();
    if n < 2 {
        return Err(Error::DegenerateData(format!("standardization needs n >= 2, got {n}")));
    }
    let mut means = Vec::with_capacity(design.ncols());
    let mut sds = Vec::with_capacity(design.ncols());
    for (j, col) in design.column_iter().enumerate() {
        let values: Vec<f64> = col.iter().copied().collect();
        let mean = crate::numeric::mean(&values);
        let sd = crate::numeric::variance(&values).sqrt();
        if !(sd > 0.0) {
            return Err(Error::ZeroVariance(format!("column {}", j + 1)));
        }
        means.push(mean);
        sds.push(sd);
    }
    let params = StandardizationParams { means, sds };
    Ok((params.apply(design), params))
}

/// Standardizes a dataset's design; zero-variance errors carry the column name.
pub fn standardize_dataset(data: &SurvivalDataset) -> Result<(SurvivalDataset, StandardizationParams)> {
    if data.p() == 0 {
        return Ok((data.clone(), StandardizationParams::identity(0)));
    }
    let (z, params) = standardize(data.design()).map_err(|e| match e {
        Error::ZeroVariance(c) => {
            let j: usize = c.trim_start_matches("column ").parse().unwrap_or(1);
            Error::ZeroVariance(data.column_names()[j - 1].clone())
        }
        other => other,
    })?;
    Ok((data.with_design(z)?, params))
}

/// Column choices used when a fixture is loaded without explicit flags.
#[derive(Debug, Clone)]
pub struct FixtureDefaults {
    pub time_col: &'static str,
    pub status_col: &'static str,
    pub covariates: &'static str,
}

/// Raw CSV text of a built-in dataset (`larynx` or `veteran`).
pub fn fixture_csv(name: &str) -> Result<&'static str> {
    match name {
        "larynx" => Ok(LARYNX_CSV),
        "veteran" | "veterans" => Ok(VETERAN_CSV),
        other => Err(Error::UnknownFixture(other.to_string())),
    }
}

pub fn fixture_defaults(name: &str) -> Result<FixtureDefaults> {
    match name {
        "larynx" => Ok(FixtureDefaults { time_col: "time", status_col: "delta", covariates: "age,cat:stage:1" }),
        "veteran" | "veterans" => Ok(FixtureDefaults {
            time_col: "time",
            status_col: "status",
            covariates: "karno,cat:celltype:large",
        }),
        other => Err(Error::UnknownFixture(other.to_string())),
    }
}

/// Built-in dataset with its default covariates.
pub fn fixture(name: &str) -> Result<SurvivalDataset> {
    let d = fixture_defaults(name)?;
    let specs = CovariateSpec::parse_list(d.covariates)?;
    read_csv(fixture_csv(name)?.as_bytes(), d.time_col, d.status_col, &specs)
}
