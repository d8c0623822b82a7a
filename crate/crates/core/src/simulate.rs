//! Synthetic data from Weibull and log-logistic AFT generators with
//! independent censoring, and a Monte-Carlo harness summarizing repeated fits.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::distr::Open01;
use rand::Rng;
use rand_distr::{Bernoulli, Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal as StdNormal};

use crate::bayes::{hpd_interval, rhat, sample_posterior, McmcConfig, PriorSpec};
use crate::data::SurvivalDataset;
use crate::error::{Error, Result};
use crate::likelihood::{ModelKind, ParametricFamily};
use crate::mle::{fit_ml, fit_parametric, MlOptions};
use crate::numeric::{mean, quantile, stream_rng};

const STREAM_COVARIATES: u64 = 0;
const STREAM_FAILURES: u64 = 1;
const STREAM_CENSORING: u64 = 2;

/// Marginal law of one simulated covariate column.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "lowercase")]
pub enum CovariateLaw {
    Normal { mean: f64, sd: f64 },
    /// A single draw from an urn with equal halves is Bernoulli(1/2).
    Bernoulli { p: f64 },
}

impl CovariateLaw {
    fn validate(&self) -> Result<()> {
        match *self {
            CovariateLaw::Normal { sd, .. } if !(sd > 0.0 && sd.is_finite()) => {
                Err(Error::Config(format!("normal covariate sd must be positive, got {sd}")))
            }
            CovariateLaw::Bernoulli { p } if !(0.0..=1.0).contains(&p) => {
                Err(Error::Config(format!("bernoulli probability must lie in [0,1], got {p}")))
            }
            _ => Ok(()),
        }
    }

    fn draw<R: Rng>(&self, rng: &mut R) -> f64 {
        match *self {
            CovariateLaw::Normal { mean, sd } => Normal::new(mean, sd).expect("validated").sample(rng),
            CovariateLaw::Bernoulli { p } => Bernoulli::new(p).expect("validated").sample(rng) as u8 as f64,
        }
    }
}

/// Generator model for one simulated scenario.
///
/// Failure times follow `S(t) = exp(-λ e^{-κη} t^κ)` (Weibull AFT) or
/// `S(t) = 1 / (1 + ν e^{-ζη} t^ζ)` (log-logistic AFT). Censoring times come
/// from the same family with `censor_scale`, `censor_shape` and no covariates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSettings {
    pub family: ParametricFamily,
    pub beta: Vec<f64>,
    pub shape: f64,
    pub baseline_scale: f64,
    pub censor_scale: f64,
    pub censor_shape: f64,
    pub n: usize,
    pub covariates: Vec<CovariateLaw>,
}

fn default_laws() -> Vec<CovariateLaw> {
    vec![CovariateLaw::Normal { mean: 0.0, sd: 1.0 }, CovariateLaw::Bernoulli { p: 0.5 }]
}

impl GeneratorSettings {
    /// β = (2, −1), shape 2, x₁ ~ N(0,1), x₂ ~ Bernoulli(1/2), unit baseline scale.
    pub fn weibull(n: usize) -> Self {
        Self {
            family: ParametricFamily::Waft,
            beta: vec![2.0, -1.0],
            shape: 2.0,
            baseline_scale: 1.0,
            censor_scale: 1.4,
            censor_shape: 2.0,
            n,
            covariates: default_laws(),
        }
    }

    /// Log-logistic analogue of [`weibull`](Self::weibull).
    pub fn log_logistic(n: usize) -> Self {
        Self { family: ParametricFamily::Llaft, censor_scale: 700.0, ..Self::weibull(n) }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64, what: &str| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Config(format!("{what} must be positive, got {v}")))
            }
        };
        positive(self.shape, "shape")?;
        positive(self.baseline_scale, "baseline_scale")?;
        positive(self.censor_scale, "censor_scale")?;
        positive(self.censor_shape, "censor_shape")?;
        if self.n < 2 {
            return Err(Error::Config(format!("n must be at least 2, got {}", self.n)));
        }
        if self.beta.len() != self.covariates.len() {
            return Err(Error::DimensionMismatch { expected: self.covariates.len(), got: self.beta.len() });
        }
        if self.beta.iter().any(|b| !b.is_finite()) {
            return Err(Error::Config("beta must be finite".into()));
        }
        self.covariates.iter().try_for_each(CovariateLaw::validate)
    }

    pub fn p(&self) -> usize {
        self.beta.len()
    }

    pub fn column_names(&self) -> Vec<String> {
        (1..=self.p()).map(|j| format!("x{j}")).collect()
    }
}

/// Inverts `S(t) = u` for a record with individual scale `scale_star`.
pub fn its_time(family: ParametricFamily, scale_star: f64, shape: f64, u: f64) -> f64 {
    match family {
        ParametricFamily::Waft => (-u.ln() / scale_star).powf(1.0 / shape),
        ParametricFamily::Llaft => ((1.0 / u - 1.0) / scale_star).powf(1.0 / shape),
    }
}

fn its_sample<R: Rng>(family: ParametricFamily, settings: &GeneratorSettings, eta: &[f64], rng: &mut R) -> Vec<f64> {
    eta.iter()
        .map(|&e| {
            let scale_star = settings.baseline_scale * (-settings.shape * e).exp();
            its_time(family, scale_star, settings.shape, rng.sample(Open01))
        })
        .collect()
}

/// Weibull AFT failure times for linear predictors `eta`.
pub fn its_sample_waft<R: Rng>(settings: &GeneratorSettings, eta: &[f64], rng: &mut R) -> Vec<f64> {
    its_sample(ParametricFamily::Waft, settings, eta, rng)
}

/// Log-logistic AFT failure times for linear predictors `eta`.
pub fn its_sample_llaft<R: Rng>(settings: &GeneratorSettings, eta: &[f64], rng: &mut R) -> Vec<f64> {
    its_sample(ParametricFamily::Llaft, settings, eta, rng)
}

/// `(min(T, C), 1{T ≤ C})` elementwise.
pub fn apply_censoring(failure: &[f64], censor: &[f64]) -> Result<(Vec<f64>, Vec<u8>)> {
    if failure.len() != censor.len() {
        return Err(Error::LengthMismatch(failure.len(), censor.len()));
    }
    Ok(failure.iter().zip(censor).map(|(&t, &c)| if t <= c { (t, 1) } else { (c, 0) }).unzip())
}

/// Raw draws of one dataset before censoring times are scaled.
struct Draws {
    design: DMatrix<f64>,
    failure: Vec<f64>,
    censor_u: Vec<f64>,
}

fn draw(settings: &GeneratorSettings, seed: u64) -> Draws {
    let (n, p) = (settings.n, settings.p());
    let mut rng = stream_rng(seed, STREAM_COVARIATES);
    let mut design = DMatrix::zeros(n, p);
    for i in 0..n {
        for (j, law) in settings.covariates.iter().enumerate() {
            design[(i, j)] = law.draw(&mut rng);
        }
    }
    let eta: Vec<f64> = (0..n).map(|i| (0..p).map(|j| design[(i, j)] * settings.beta[j]).sum()).collect();
    let failure = its_sample(settings.family, settings, &eta, &mut stream_rng(seed, STREAM_FAILURES));
    let mut rng = stream_rng(seed, STREAM_CENSORING);
    let censor_u = (0..n).map(|_| rng.sample(Open01)).collect();
    Draws { design, failure, censor_u }
}

fn censor_times(settings: &GeneratorSettings, censor_scale: f64, u: &[f64]) -> Vec<f64> {
    u.iter().map(|&u| its_time(settings.family, censor_scale, settings.censor_shape, u)).collect()
}

/// Simulates one dataset. Covariates, failure times and censoring times use
/// separate random streams, so a dataset of size `n` is the prefix of one of
/// size `n' > n` drawn with the same seed.
pub fn generate_dataset(settings: &GeneratorSettings, seed: u64) -> Result<SurvivalDataset> {
    settings.validate()?;
    let d = draw(settings, seed);
    let censor = censor_times(settings, settings.censor_scale, &d.censor_u);
    let (times, status) = apply_censoring(&d.failure, &censor)?;
    SurvivalDataset::new(times, status, d.design, settings.column_names())
}

pub fn censoring_rate(data: &SurvivalDataset) -> f64 {
    if data.n() == 0 {
        return 0.0;
    }
    1.0 - data.events() as f64 / data.n() as f64
}

/// Censoring scale giving an average censoring rate of `target` over `reps`
/// datasets drawn with seeds `seed..seed + reps`. The same draws are reused
/// for every candidate scale, so the rate is monotone in the scale.
pub fn calibrate_censor_scale(settings: &GeneratorSettings, target: f64, seed: u64, reps: usize) -> Result<f64> {
    settings.validate()?;
    if !(target > 0.0 && target < 1.0) {
        return Err(Error::Config(format!("target censoring rate must lie in (0,1), got {target}")));
    }
    if reps == 0 {
        return Err(Error::Config("calibration needs at least one replication".into()));
    }
    let draws: Vec<Draws> = (0..reps as u64).map(|r| draw(settings, seed + r)).collect();
    let rate = |scale: f64| {
        let censored: usize = draws
            .iter()
            .map(|d| {
                let c = censor_times(settings, scale, &d.censor_u);
                d.failure.iter().zip(&c).filter(|(t, c)| t > c).count()
            })
            .sum();
        censored as f64 / (reps * settings.n) as f64
    };
    // a larger scale shortens censoring times in both families
    let (mut lo, mut hi) = (-60.0f64, 60.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if rate(mid.exp()) < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-10 {
            break;
        }
    }
    Ok((0.5 * (lo + hi)).exp())
}

/// `100 (estimate − reference) / |reference|`.
pub fn relative_difference(estimate: f64, reference: f64) -> Result<f64> {
    if reference == 0.0 {
        return Err(Error::ZeroReference);
    }
    Ok(100.0 * (estimate - reference) / reference.abs())
}

/// Model fitted in a Monte-Carlo plan entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum PlanModel {
    Bp(ModelKind),
    Parametric(ParametricFamily),
}

impl FromStr for PlanModel {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        s.parse::<ModelKind>()
            .map(PlanModel::Bp)
            .or_else(|_| s.parse::<ParametricFamily>().map(PlanModel::Parametric))
            .map_err(|_| Error::Config(format!("unknown model `{s}`")))
    }
}

impl TryFrom<String> for PlanModel {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<PlanModel> for String {
    fn from(m: PlanModel) -> String {
        m.to_string()
    }
}

impl fmt::Display for PlanModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PlanModel::Bp(m) => write!(f, "{}", m.to_string().to_lowercase()),
            PlanModel::Parametric(p) => write!(f, "{}", p.to_string().to_lowercase()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Approach {
    Mle,
    Bayes,
}

fn default_level() -> f64 {
    0.95
}

/// One model fitted to every simulated dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitPlan {
    pub label: String,
    pub model: PlanModel,
    pub approach: Approach,
    #[serde(default)]
    pub degree: Option<usize>,
    #[serde(default)]
    pub ml: MlOptions,
    #[serde(default)]
    pub mcmc: McmcConfig,
    #[serde(default)]
    pub priors: PriorSpec,
    /// Overrides [`default_truth`].
    #[serde(default)]
    pub truth: Option<Vec<f64>>,
    #[serde(default = "default_level")]
    pub level: f64,
}

impl FitPlan {
    pub fn new(label: impl Into<String>, model: PlanModel, approach: Approach) -> Self {
        Self {
            label: label.into(),
            model,
            approach,
            degree: None,
            ml: MlOptions::default(),
            mcmc: McmcConfig::default(),
            priors: PriorSpec::default(),
            truth: None,
            level: default_level(),
        }
    }
}

/// Coefficients the fitted model estimates when data come from `settings`:
/// `−κβ` for PH on Weibull data, `−ζβ` for PO on log-logistic data and `β`
/// for AFT fits. Other pairings have no closed-form counterpart.
pub fn default_truth(settings: &GeneratorSettings, model: PlanModel) -> Option<Vec<f64>> {
    let scaled = |c: f64| settings.beta.iter().map(|b| c * b).collect();
    match (model, settings.family) {
        (PlanModel::Bp(ModelKind::Ph), ParametricFamily::Waft) => Some(scaled(-settings.shape)),
        (PlanModel::Bp(ModelKind::Po), ParametricFamily::Llaft) => Some(scaled(-settings.shape)),
        (PlanModel::Bp(ModelKind::Aft), _) => Some(settings.beta.clone()),
        (PlanModel::Parametric(f), g) if f == g => Some(settings.beta.clone()),
        _ => None,
    }
}

/// Outcome of one plan on one replication.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationRow {
    pub replication: usize,
    pub seed: u64,
    pub censoring_rate: f64,
    pub valid: bool,
    pub converged: bool,
    pub hessian_finite: bool,
    pub estimate: Vec<f64>,
    pub se: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub max_rhat: Option<f64>,
    pub error: Option<String>,
}

impl ReplicationRow {
    fn failed(replication: usize, seed: u64, censoring_rate: f64, error: String) -> Self {
        Self {
            replication,
            seed,
            censoring_rate,
            valid: false,
            converged: false,
            hessian_finite: false,
            estimate: Vec::new(),
            se: Vec::new(),
            lower: Vec::new(),
            upper: Vec::new(),
            max_rhat: None,
            error: Some(error),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientStats {
    pub name: String,
    pub truth: f64,
    /// Average estimate.
    pub est: f64,
    /// Average estimated standard error (posterior sd for Bayesian fits).
    pub se: f64,
    /// `Σ (est_r − est)² / (R − 1)`.
    pub sde_squared: f64,
    /// Square root of `sde_squared`.
    pub sde: f64,
    /// Relative bias in percent.
    pub rb: f64,
    pub coverage: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateSummary {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub mean: f64,
    pub q3: f64,
    pub max: f64,
}

impl RateSummary {
    pub fn of(xs: &[f64]) -> Self {
        if xs.is_empty() {
            return Self { min: f64::NAN, q1: f64::NAN, median: f64::NAN, mean: f64::NAN, q3: f64::NAN, max: f64::NAN };
        }
        Self {
            min: quantile(xs, 0.0),
            q1: quantile(xs, 0.25),
            median: quantile(xs, 0.5),
            mean: mean(xs),
            q3: quantile(xs, 0.75),
            max: quantile(xs, 1.0),
        }
    }
}

/// Aggregated Monte-Carlo results of one plan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McReport {
    pub label: String,
    pub model: PlanModel,
    pub approach: Approach,
    pub replications: usize,
    pub valid: usize,
    pub nonconverged: usize,
    pub nonfinite_hessian: usize,
    pub failed: usize,
    pub coefficients: Vec<CoefficientStats>,
    pub censoring: RateSummary,
    /// Fraction of valid replications whose largest R-hat is below 1.1.
    pub rhat_below_1_1: Option<f64>,
    pub rows: Vec<ReplicationRow>,
}

fn fit_one(plan: &FitPlan, data: &SurvivalDataset) -> Result<(bool, bool, Vec<f64>, Vec<f64>, Vec<(f64, f64)>, Option<f64>)> {
    let z = StdNormal::new(0.0, 1.0).expect("unit normal").inverse_cdf(0.5 + plan.level / 2.0);
    let wald = |est: &[f64], se: &[f64]| est.iter().zip(se).map(|(b, s)| (b - z * s, b + z * s)).collect::<Vec<_>>();
    match (plan.approach, plan.model) {
        (Approach::Mle, PlanModel::Bp(model)) => {
            let fit = fit_ml(model, data, plan.degree, &plan.ml)?;
            let se = fit.beta_se();
            let ci = wald(&fit.params_nat.beta, &se);
            Ok((fit.converged, fit.hessian_finite, fit.params_nat.beta, se, ci, None))
        }
        (Approach::Mle, PlanModel::Parametric(family)) => {
            let fit = fit_parametric(family, data, &plan.ml)?;
            let se = fit.beta_se();
            let ci = wald(&fit.params.beta, &se);
            Ok((fit.converged, fit.hessian_finite, fit.params.beta, se, ci, None))
        }
        (Approach::Bayes, PlanModel::Bp(model)) => {
            let fit = sample_posterior(model, data, &plan.priors, &plan.mcmc, plan.degree)?;
            let (mut est, mut sd, mut ci, mut worst) = (Vec::new(), Vec::new(), Vec::new(), 0.0f64);
            for j in 0..fit.p() {
                let chains = fit.natural_draws(j);
                let all = chains.concat();
                est.push(mean(&all));
                sd.push(crate::numeric::variance(&all).sqrt());
                ci.push(hpd_interval(&all, plan.level)?);
                if chains.len() >= 2 {
                    let refs: Vec<&[f64]> = chains.iter().map(Vec::as_slice).collect();
                    worst = worst.max(rhat(&refs).unwrap_or(f64::INFINITY));
                }
            }
            let max_rhat = (fit.chains.len() >= 2).then_some(worst);
            Ok((true, true, est, sd, ci, max_rhat))
        }
        (Approach::Bayes, PlanModel::Parametric(_)) => {
            Err(Error::Config("Bayesian fits are only available for BP models".into()))
        }
    }
}

fn summarize_plan(plan: &FitPlan, truth: &[f64], names: &[String], rows: Vec<ReplicationRow>) -> McReport {
    let valid: Vec<&ReplicationRow> = rows.iter().filter(|r| r.valid).collect();
    let coefficients = names
        .iter()
        .enumerate()
        .map(|(j, name)| {
            let est: Vec<f64> = valid.iter().map(|r| r.estimate[j]).collect();
            let se: Vec<f64> = valid.iter().map(|r| r.se[j]).collect();
            let avg = mean(&est);
            let sde_squared = if est.len() >= 2 {
                est.iter().map(|e| (e - avg).powi(2)).sum::<f64>() / (est.len() - 1) as f64
            } else {
                f64::NAN
            };
            let covered = valid.iter().filter(|r| r.lower[j] <= truth[j] && truth[j] <= r.upper[j]).count();
            CoefficientStats {
                name: name.clone(),
                truth: truth[j],
                est: avg,
                se: mean(&se),
                sde_squared,
                sde: sde_squared.sqrt(),
                rb: relative_difference(avg, truth[j]).unwrap_or(f64::NAN),
                coverage: if valid.is_empty() { f64::NAN } else { covered as f64 / valid.len() as f64 },
            }
        })
        .collect();
    let rates: Vec<f64> = rows.iter().map(|r| r.censoring_rate).collect();
    let rhat_below_1_1 = (plan.approach == Approach::Bayes && !valid.is_empty()).then(|| {
        valid.iter().filter(|r| r.max_rhat.is_some_and(|v| v < 1.1)).count() as f64 / valid.len() as f64
    });
    McReport {
        label: plan.label.clone(),
        model: plan.model,
        approach: plan.approach,
        replications: rows.len(),
        valid: valid.len(),
        nonconverged: rows.iter().filter(|r| r.error.is_none() && !r.converged).count(),
        nonfinite_hessian: rows.iter().filter(|r| r.error.is_none() && !r.hessian_finite).count(),
        failed: rows.iter().filter(|r| r.error.is_some()).count(),
        coefficients,
        censoring: RateSummary::of(&rates),
        rhat_below_1_1,
        rows,
    }
}

/// Fits every plan to `reps` datasets; replication `r` uses seed `seed + r`.
/// A replication counts as valid when the fit converged with a finite
/// Hessian (always, for successful Bayesian fits). Failures are counted.
pub fn mc_harness(settings: &GeneratorSettings, plans: &[FitPlan], reps: usize, seed: u64) -> Result<Vec<McReport>> {
    settings.validate()?;
    if reps == 0 {
        return Err(Error::Config("at least one replication is required".into()));
    }
    let truths = plans
        .iter()
        .map(|plan| {
            let truth = plan.truth.clone().or_else(|| default_truth(settings, plan.model)).ok_or_else(|| {
                Error::Config(format!("plan `{}` needs an explicit truth for {} data", plan.label, settings.family))
            })?;
            if truth.len() != settings.p() {
                return Err(Error::DimensionMismatch { expected: settings.p(), got: truth.len() });
            }
            Ok(truth)
        })
        .collect::<Result<Vec<_>>>()?;

    let per_rep: Vec<Vec<ReplicationRow>> = (0..reps)
        .into_par_iter()
        .map(|r| {
            let rep_seed = seed.wrapping_add(r as u64);
            let data = match generate_dataset(settings, rep_seed) {
                Ok(d) => d,
                Err(e) => return plans.iter().map(|_| ReplicationRow::failed(r, rep_seed, f64::NAN, e.to_string())).collect(),
            };
            let rate = censoring_rate(&data);
            plans
                .iter()
                .map(|plan| match fit_one(plan, &data) {
                    Ok((converged, hessian_finite, estimate, se, ci, max_rhat)) => {
                        let finite = estimate.iter().chain(&se).all(|v| v.is_finite());
                        ReplicationRow {
                            replication: r,
                            seed: rep_seed,
                            censoring_rate: rate,
                            valid: converged && hessian_finite && finite,
                            converged,
                            hessian_finite,
                            estimate,
                            se,
                            lower: ci.iter().map(|c| c.0).collect(),
                            upper: ci.iter().map(|c| c.1).collect(),
                            max_rhat,
                            error: None,
                        }
                    }
                    Err(e) => ReplicationRow::failed(r, rep_seed, rate, e.to_string()),
                })
                .collect()
        })
        .collect();

    let names = settings.column_names();
    Ok(plans
        .iter()
        .enumerate()
        .map(|(k, plan)| {
            let rows = per_rep.iter().map(|rep| rep[k].clone()).collect();
            summarize_plan(plan, &truths[k], &names, rows)
        })
        .collect())
}

/// Writes one CSV line per (plan, replication, coefficient).
pub fn write_replications_csv<W: std::io::Write>(reports: &[McReport], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([
        "plan", "replication", "seed", "censoring_rate", "valid", "converged", "hessian_finite", "max_rhat",
        "coefficient", "estimate", "se", "lower", "upper", "error",
    ])?;
    for report in reports {
        for row in &report.rows {
            let fmt_opt = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_default();
            let base = [
                report.label.clone(),
                row.replication.to_string(),
                row.seed.to_string(),
                row.censoring_rate.to_string(),
                row.valid.to_string(),
                row.converged.to_string(),
                row.hessian_finite.to_string(),
                fmt_opt(row.max_rhat),
            ];
            if row.estimate.is_empty() {
                let mut rec = base.to_vec();
                rec.extend(["", "", "", "", ""].map(String::from));
                rec.push(row.error.clone().unwrap_or_default());
                w.write_record(&rec)?;
                continue;
            }
            for (j, c) in report.coefficients.iter().enumerate() {
                let mut rec = base.to_vec();
                rec.push(c.name.clone());
                rec.extend([row.estimate[j], row.se[j], row.lower[j], row.upper[j]].map(|v| v.to_string()));
                rec.push(String::new());
                w.write_record(&rec)?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

fn default_calibration_reps() -> usize {
    200
}

fn default_seed() -> u64 {
    1
}

/// Declarative Monte-Carlo scenario, read from TOML or JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub generator: GeneratorSettings,
    pub replications: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// When set, `censor_scale` is recalibrated to this average censoring rate.
    #[serde(default)]
    pub target_censoring: Option<f64>,
    #[serde(default = "default_calibration_reps")]
    pub calibration_reps: usize,
    pub plans: Vec<FitPlan>,
}

impl Scenario {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Reads a `.json` file as JSON and anything else as TOML.
    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        match path.extension().and_then(|e| e.to_str()) {
            Some("json") => Self::from_json(&text),
            _ => Self::from_toml(&text),
        }
    }

    /// Generator settings after optional censoring calibration.
    pub fn resolved_generator(&self) -> Result<GeneratorSettings> {
        let mut settings = self.generator.clone();
        if let Some(target) = self.target_censoring {
            settings.censor_scale = calibrate_censor_scale(&settings, target, self.seed, self.calibration_reps)?;
        }
        Ok(settings)
    }

    pub fn run(&self) -> Result<(GeneratorSettings, Vec<McReport>)> {
        let settings = self.resolved_generator()?;
        let reports = mc_harness(&settings, &self.plans, self.replications, self.seed)?;
        Ok((settings, reports))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn censoring_hand_cases() {
        let (y, d) = apply_censoring(&[2.0, 3.0, 2.0], &[3.0, 2.0, 2.0]).unwrap();
        assert_eq!(y, vec![2.0, 2.0, 2.0]);
        assert_eq!(d, vec![1, 0, 1]);
        assert!(matches!(apply_censoring(&[1.0], &[]), Err(Error::LengthMismatch(1, 0))));
    }

    #[test]
    fn its_inverts_survival() {
        let lam: f64 = 0.7;
        assert!((its_time(ParametricFamily::Waft, lam, 2.0, (-lam).exp()) - 1.0).abs() < 1e-14);
        let nu: f64 = 3.0;
        assert!((its_time(ParametricFamily::Llaft, nu, 2.0, 0.5) - (1.0 / nu).sqrt()).abs() < 1e-14);
        assert!(its_time(ParametricFamily::Waft, 1.0, 2.0, 1.0 - 1e-16) < 1e-7);
    }

    #[test]
    fn relative_difference_values() {
        assert!((relative_difference(1.7991, 1.7060).unwrap() - 5.4572).abs() < 1e-3);
        assert!((relative_difference(-1.1058, -0.5866).unwrap() + 88.5101).abs() < 1e-2);
        assert!(matches!(relative_difference(1.0, 0.0), Err(Error::ZeroReference)));
    }

    #[test]
    fn truth_transforms() {
        let s = GeneratorSettings::weibull(10);
        assert_eq!(default_truth(&s, PlanModel::Bp(ModelKind::Ph)), Some(vec![-4.0, 2.0]));
        assert_eq!(default_truth(&s, PlanModel::Parametric(ParametricFamily::Waft)), Some(vec![2.0, -1.0]));
        assert_eq!(default_truth(&s, PlanModel::Bp(ModelKind::Po)), None);
        let s = GeneratorSettings::log_logistic(10);
        assert_eq!(default_truth(&s, PlanModel::Bp(ModelKind::Po)), Some(vec![-4.0, 2.0]));
    }

    #[test]
    fn plan_model_round_trip() {
        for s in ["ph", "po", "aft", "waft", "llaft"] {
            let m: PlanModel = s.parse().unwrap();
            assert_eq!(m.to_string(), s);
        }
    }

    #[test]
    fn sde_on_hand_rows() {
        let plan = FitPlan::new("x", PlanModel::Parametric(ParametricFamily::Waft), Approach::Mle);
        let rows = [1.9, 2.0, 2.1]
            .iter()
            .enumerate()
            .map(|(r, &e)| ReplicationRow {
                replication: r,
                seed: r as u64,
                censoring_rate: 0.25,
                valid: true,
                converged: true,
                hessian_finite: true,
                estimate: vec![e],
                se: vec![0.1],
                lower: vec![e - 0.2],
                upper: vec![e + 0.2],
                max_rhat: None,
                error: None,
            })
            .collect();
        let report = summarize_plan(&plan, &[2.0], &["x1".to_string()], rows);
        let c = &report.coefficients[0];
        assert!((c.est - 2.0).abs() < 1e-12 && c.rb.abs() < 1e-10);
        assert!((c.sde_squared - 0.01).abs() < 1e-12 && (c.sde - 0.1).abs() < 1e-12);
        assert_eq!(c.coverage, 1.0);
    }
}
