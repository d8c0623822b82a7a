//! Semi-parametric survival regression with Bernstein-polynomial baselines.
//!
//! Proportional hazards, proportional odds and accelerated failure time
//! models for right-censored data, fitted by maximum likelihood or by MCMC.
//!
//! ```
//! use bpsurv::{fit_ml, fixture, MlOptions, ModelKind};
//!
//! let data = fixture("larynx").unwrap();
//! let fit = fit_ml(ModelKind::Ph, &data, None, &MlOptions::default()).unwrap();
//! assert!(fit.converged);
//! ```
// `!(x > 0.0)` is used on purpose so that NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bayes;
pub mod bernstein;
pub mod data;
pub mod error;
pub mod likelihood;
pub mod mle;
pub mod numeric;
pub mod optim;
pub mod predict;
pub mod simulate;
pub mod special;

pub use bayes::{sample_posterior, summarize, BayesFit, BpPrior, McmcConfig, NormalPrior, PosteriorSummary, PriorSpec};
pub use bernstein::BernsteinBasis;
pub use data::{fixture, load_csv, CovariateSpec, StandardizationParams, SurvivalDataset};
pub use error::{Error, Result};
pub use likelihood::{ModelKind, ParameterVector, ParametricFamily, ParametricParams};
pub use mle::{fit_ml, fit_parametric, MlFit, MlOptions, ParametricFit};
pub use optim::Algorithm;
pub use predict::{survivor, SurvivalModel};
pub use simulate::{GeneratorSettings, McReport, Scenario};
