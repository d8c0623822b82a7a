//! Versioned JSON store for fitted models.

use std::path::{Path, PathBuf};

use bpsurv::data::{fixture_csv, fixture_defaults, read_csv, ColumnEncoding};
use bpsurv::{BayesFit, CovariateSpec, MlFit, ParametricFit, SurvivalDataset};
use serde::{Deserialize, Serialize};

use crate::args::DataArgs;
use crate::CliError;

pub const FORMAT: &str = "bpsurv-fit";
pub const VERSION: u32 = 1;

/// Where the training data came from and how it was encoded.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DataSource {
    pub fixture: Option<String>,
    pub path: Option<PathBuf>,
    pub time_col: String,
    pub status_col: String,
    pub covariates: String,
    pub encoding: Vec<ColumnEncoding>,
    pub max_time: f64,
}

impl DataSource {
    /// Re-reads the training data.
    pub fn reload(&self) -> Result<SurvivalDataset, CliError> {
        let specs = CovariateSpec::parse_list(&self.covariates)?;
        let data = match (&self.fixture, &self.path) {
            (Some(name), _) => read_csv(fixture_csv(name)?.as_bytes(), &self.time_col, &self.status_col, &specs)?,
            (None, Some(path)) => bpsurv::load_csv(path, &self.time_col, &self.status_col, &specs)?,
            (None, None) => return Err(CliError::Usage("artifact has no data source".into())),
        };
        Ok(data)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum StoredFit {
    Ml(MlFit),
    Parametric(ParametricFit),
    Bayes(BayesFit),
}

impl StoredFit {
    pub fn model(&self) -> &dyn bpsurv::SurvivalModel {
        match self {
            StoredFit::Ml(f) => f,
            StoredFit::Parametric(f) => f,
            StoredFit::Bayes(f) => f,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Artifact {
    pub format: String,
    pub version: u32,
    pub source: DataSource,
    pub fit: StoredFit,
}

impl Artifact {
    pub fn new(source: DataSource, fit: StoredFit) -> Self {
        Self { format: FORMAT.into(), version: VERSION, source, fit }
    }

    pub fn save(&self, path: &Path) -> Result<(), CliError> {
        let file = std::fs::File::create(path).map_err(bpsurv::Error::from)?;
        serde_json::to_writer(std::io::BufWriter::new(file), self).map_err(bpsurv::Error::from)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(bpsurv::Error::from)?;
        let art: Artifact = serde_json::from_str(&text)
            .map_err(|e| CliError::Usage(format!("{}: not a fit artifact ({e})", path.display())))?;
        if art.format != FORMAT || art.version != VERSION {
            return Err(CliError::Usage(format!(
                "{}: unsupported artifact {} version {}",
                path.display(),
                art.format,
                art.version
            )));
        }
        Ok(art)
    }
}

/// Reads the dataset named by the data flags.
pub fn load_data(args: &DataArgs) -> Result<(SurvivalDataset, DataSource), CliError> {
    let (time_col, status_col, covariates, data) = match (&args.fixture, &args.data) {
        (Some(name), _) => {
            let d = fixture_defaults(name)?;
            let time_col = args.time_col.clone().unwrap_or_else(|| d.time_col.into());
            let status_col = args.status_col.clone().unwrap_or_else(|| d.status_col.into());
            let covariates = args.covariates.clone().unwrap_or_else(|| d.covariates.into());
            let specs = CovariateSpec::parse_list(&covariates)?;
            let data = read_csv(fixture_csv(name)?.as_bytes(), &time_col, &status_col, &specs)?;
            (time_col, status_col, covariates, data)
        }
        (None, Some(path)) => {
            let time_col = args.time_col.clone().unwrap_or_else(|| "time".into());
            let status_col = args.status_col.clone().unwrap_or_else(|| "status".into());
            let covariates = args.covariates.clone().unwrap_or_default();
            let specs = CovariateSpec::parse_list(&covariates)?;
            let data = bpsurv::load_csv(path, &time_col, &status_col, &specs)?;
            (time_col, status_col, covariates, data)
        }
        (None, None) => return Err(CliError::Usage("one of --data or --fixture is required".into())),
    };
    let source = DataSource {
        fixture: args.fixture.clone(),
        path: args.data.clone(),
        time_col,
        status_col,
        covariates,
        encoding: data.encoding().to_vec(),
        max_time: data.max_time(),
    };
    Ok((data, source))
}
