//! Posterior sampling for BP survival models with an adaptive random-walk
//! Metropolis sampler, posterior summaries and model criteria.

mod criteria;
mod diagnostics;

pub use criteria::{dic, lpml, waic, Criteria, Dic, PointwiseLoglik, Waic};
pub use diagnostics::{hpd_interval, n_eff, rhat};

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{Continuous, Gamma, InverseGamma};

use crate::bernstein::BernsteinBasis;
use crate::data::{standardize_dataset, StandardizationParams, SurvivalDataset};
use crate::error::{Error, Result};
use crate::likelihood::{BpLikelihood, ModelKind, ParameterVector};
use crate::mle::{default_degree, recover_estimates};
use crate::numeric::{mean, median, stream_rng, variance};

const INIT_ATTEMPTS: usize = 100;
const INIT_RADIUS: f64 = 2.0;
const STEPS_PER_PARAM: usize = 50;

/// Normal prior on each standardized regression coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalPrior {
    pub mu: f64,
    pub sigma: f64,
}

impl NormalPrior {
    fn log_density(&self, x: f64) -> f64 {
        let z = (x - self.mu) / self.sigma;
        -0.5 * z * z - self.sigma.ln() - 0.5 * (2.0 * std::f64::consts::PI).ln()
    }
}

/// Prior on each BP coefficient γ*_k.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum BpPrior {
    LogNormal { mu: f64, sigma: f64 },
    Gamma { shape: f64, rate: f64 },
    InverseGamma { shape: f64, scale: f64 },
}

impl BpPrior {
    /// Log density of `φ = log γ` (including the Jacobian `e^φ`).
    fn log_density_log_scale(&self, phi: f64) -> f64 {
        match *self {
            BpPrior::LogNormal { mu, sigma } => NormalPrior { mu, sigma }.log_density(phi),
            BpPrior::Gamma { shape, rate } => match Gamma::new(shape, rate) {
                Ok(d) => d.ln_pdf(phi.exp()) + phi,
                Err(_) => f64::NEG_INFINITY,
            },
            BpPrior::InverseGamma { shape, scale } => match InverseGamma::new(shape, scale) {
                Ok(d) => d.ln_pdf(phi.exp()) + phi,
                Err(_) => f64::NEG_INFINITY,
            },
        }
    }
}

/// Independent priors on `β*` and `γ*`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriorSpec {
    pub beta: NormalPrior,
    pub bp: BpPrior,
}

impl PriorSpec {
    /// Presets 1..=4: `N(0,4)` or `N(0,10)` for β*, `LN(0,4)` or `LN(0,10)` for γ*.
    pub fn preset(k: u8) -> Result<Self> {
        let (bs, gs) = match k {
            1 => (4.0, 4.0),
            2 => (4.0, 10.0),
            3 => (10.0, 4.0),
            4 => (10.0, 10.0),
            _ => return Err(Error::Config(format!("unknown prior preset {k}"))),
        };
        Ok(Self { beta: NormalPrior { mu: 0.0, sigma: bs }, bp: BpPrior::LogNormal { mu: 0.0, sigma: gs } })
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64, what: &str| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Config(format!("{what} must be positive, got {v}")))
            }
        };
        positive(self.beta.sigma, "beta prior sigma")?;
        match self.bp {
            BpPrior::LogNormal { sigma, .. } => positive(sigma, "sigma"),
            BpPrior::Gamma { shape, rate } => positive(shape, "shape").and(positive(rate, "rate")),
            BpPrior::InverseGamma { shape, scale } => positive(shape, "shape").and(positive(scale, "scale")),
        }
    }

    fn log_density(&self, theta: &[f64], p: usize) -> f64 {
        let b: f64 = theta[..p].iter().map(|&x| self.beta.log_density(x)).sum();
        let g: f64 = theta[p..].iter().map(|&x| self.bp.log_density_log_scale(x)).sum();
        b + g
    }
}

impl Default for PriorSpec {
    fn default() -> Self {
        Self::preset(2).expect("preset 2 exists")
    }
}

fn parse_call(s: &str) -> Result<(String, Vec<f64>)> {
    let s = s.trim();
    let bad = || Error::Config(format!("cannot parse prior `{s}`"));
    let open = s.find('(').ok_or_else(bad)?;
    let inner = s[open + 1..].strip_suffix(')').ok_or_else(bad)?;
    let args = inner.split(',').map(|a| a.trim().parse::<f64>().map_err(|_| bad())).collect::<Result<Vec<_>>>()?;
    Ok((s[..open].trim().to_ascii_lowercase(), args))
}

impl FromStr for NormalPrior {
    type Err = Error;
    /// `normal(mu, sigma)`.
    fn from_str(s: &str) -> Result<Self> {
        match parse_call(s)? {
            (name, a) if (name == "normal" || name == "n") && a.len() == 2 => Ok(NormalPrior { mu: a[0], sigma: a[1] }),
            _ => Err(Error::Config(format!("expected normal(mu, sigma), got `{s}`"))),
        }
    }
}

impl FromStr for BpPrior {
    type Err = Error;
    /// `lognormal(mu, sigma)`, `gamma(shape, rate)` or `invgamma(shape, scale)`.
    fn from_str(s: &str) -> Result<Self> {
        let (name, a) = parse_call(s)?;
        if a.len() != 2 {
            return Err(Error::Config(format!("prior `{s}` needs two arguments")));
        }
        match name.as_str() {
            "lognormal" | "ln" => Ok(BpPrior::LogNormal { mu: a[0], sigma: a[1] }),
            "gamma" => Ok(BpPrior::Gamma { shape: a[0], rate: a[1] }),
            "invgamma" | "inversegamma" => Ok(BpPrior::InverseGamma { shape: a[0], scale: a[1] }),
            _ => Err(Error::Config(format!("unknown prior family in `{s}`"))),
        }
    }
}

impl FromStr for PriorSpec {
    type Err = Error;
    /// `prior1` .. `prior4`.
    fn from_str(s: &str) -> Result<Self> {
        let k = s
            .trim()
            .to_ascii_lowercase()
            .strip_prefix("prior")
            .and_then(|d| d.trim().parse::<u8>().ok())
            .ok_or_else(|| Error::Config(format!("unknown prior preset `{s}`")))?;
        Self::preset(k)
    }
}

impl fmt::Display for BpPrior {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BpPrior::LogNormal { mu, sigma } => write!(f, "lognormal({mu}, {sigma})"),
            BpPrior::Gamma { shape, rate } => write!(f, "gamma({shape}, {rate})"),
            BpPrior::InverseGamma { shape, scale } => write!(f, "invgamma({shape}, {scale})"),
        }
    }
}

/// Shape of the random-walk proposal covariance learned during warmup.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProposalKind {
    Diagonal,
    Dense,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct McmcConfig {
    pub chains: usize,
    /// Iterations per chain, warmup included.
    pub iter: usize,
    pub warmup: usize,
    pub seed: u64,
    pub target_accept: f64,
    /// Metropolis proposals per iteration; `None` uses fifty per parameter.
    pub steps_per_iter: Option<usize>,
    pub proposal: ProposalKind,
    pub standardize: bool,
}

impl Default for McmcConfig {
    fn default() -> Self {
        Self {
            chains: 4,
            iter: 2000,
            warmup: 1000,
            seed: 1,
            target_accept: 0.30,
            steps_per_iter: None,
            proposal: ProposalKind::Diagonal,
            standardize: true,
        }
    }
}

impl McmcConfig {
    pub fn validate(&self) -> Result<()> {
        if self.chains == 0 {
            return Err(Error::Config("chains must be at least 1".into()));
        }
        if self.warmup >= self.iter {
            return Err(Error::Config(format!("warmup {} must be below iter {}", self.warmup, self.iter)));
        }
        if !(self.target_accept > 0.0 && self.target_accept < 1.0) {
            return Err(Error::Config("target_accept must lie in (0,1)".into()));
        }
        if self.steps_per_iter == Some(0) {
            return Err(Error::Config("steps_per_iter must be at least 1".into()));
        }
        Ok(())
    }

    pub fn kept(&self) -> usize {
        self.iter - self.warmup
    }
}

/// Draws from one chain after warmup.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Chain {
    /// Row-major `kept × d` draws of `(β*, log γ*)`.
    pub draws_std: Vec<f64>,
    /// Row-major `kept × d` draws of natural-scale `(β, γ)`.
    pub draws_nat: Vec<f64>,
    pub log_post: Vec<f64>,
    /// Row-major `kept × n` pointwise log-likelihood.
    #[serde(skip)]
    pub pointwise: Vec<f64>,
    pub acceptance_rate: f64,
}

/// Posterior sample for a BP model.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BayesFit {
    pub model: ModelKind,
    pub basis: BernsteinBasis,
    pub standardization: StandardizationParams,
    pub column_names: Vec<String>,
    pub priors: PriorSpec,
    pub config: McmcConfig,
    pub chains: Vec<Chain>,
    pub criteria: Criteria,
    pub n: usize,
    pub events: usize,
}

impl BayesFit {
    pub fn p(&self) -> usize {
        self.column_names.len()
    }

    pub fn dim(&self) -> usize {
        self.p() + self.basis.degree()
    }

    pub fn kept(&self) -> usize {
        self.chains.first().map_or(0, |c| c.log_post.len())
    }

    pub fn param_names(&self) -> Vec<String> {
        let mut names = self.column_names.clone();
        let sym = self.model.bp_symbol();
        names.extend((1..=self.basis.degree()).map(|k| format!("{sym}{k}")));
        names
    }

    /// Natural-scale draws of parameter `j`, one vector per chain.
    pub fn natural_draws(&self, j: usize) -> Vec<Vec<f64>> {
        let d = self.dim();
        self.chains.iter().map(|c| c.draws_nat.iter().skip(j).step_by(d).copied().collect()).collect()
    }

    /// Standardized-scale draws as `(β*, log γ*)` vectors, all chains in order.
    pub fn std_draws(&self) -> impl Iterator<Item = &[f64]> {
        let d = self.dim();
        self.chains.iter().flat_map(move |c| c.draws_std.chunks(d))
    }

    /// Pointwise log-likelihood of all kept draws, chains stacked in order.
    pub fn pointwise(&self) -> PointwiseLoglik {
        let values: Vec<f64> = self.chains.iter().flat_map(|c| c.pointwise.iter().copied()).collect();
        let draws = values.len().checked_div(self.n).unwrap_or(self.kept() * self.chains.len());
        PointwiseLoglik::new(draws, self.n, values)
    }

    pub fn acceptance_rates(&self) -> Vec<f64> {
        self.chains.iter().map(|c| c.acceptance_rate).collect()
    }
}

struct RawChain {
    draws: Vec<f64>,
    log_post: Vec<f64>,
    acceptance_rate: f64,
}

/// Running mean and covariance (Welford).
struct Moments {
    n: usize,
    mean: DVector<f64>,
    m2: DMatrix<f64>,
}

impl Moments {
    fn new(d: usize) -> Self {
        Self { n: 0, mean: DVector::zeros(d), m2: DMatrix::zeros(d, d) }
    }

    fn push(&mut self, x: &[f64]) {
        self.n += 1;
        let x = DVector::from_column_slice(x);
        let delta = &x - &self.mean;
        self.mean += &delta / self.n as f64;
        let delta2 = &x - &self.mean;
        self.m2.ger(1.0, &delta, &delta2, 1.0);
    }

    /// Covariance shrunk toward a small multiple of the identity.
    fn regularized(&self) -> DMatrix<f64> {
        let d = self.mean.len();
        let n = self.n as f64;
        let cov = &self.m2 / (n - 1.0).max(1.0);
        let cov = (&cov + cov.transpose()) * 0.5;
        cov * (n / (n + 5.0)) + DMatrix::identity(d, d) * (1e-3 * 5.0 / (n + 5.0))
    }
}

/// Adaptive random-walk Metropolis on an unconstrained density.
///
/// Warmup adapts a global log step size toward `target_accept` by a
/// Robbins-Monro recursion and re-estimates the proposal covariance at the end
/// of each slow window. Everything is frozen after warmup.
pub fn sample_chain<F>(log_density: F, dim: usize, config: &McmcConfig, chain: usize) -> Result<(Vec<f64>, Vec<f64>, f64)>
where
    F: Fn(&[f64]) -> f64,
{
    let raw = run_chain(&log_density, dim, config, chain)?;
    Ok((raw.draws, raw.log_post, raw.acceptance_rate))
}

/// Random-walk proposal with an adapted covariance factor and step size.
struct Kernel {
    factor: DMatrix<f64>,
    base: f64,
    log_scale: f64,
    rm_t: usize,
    moments: Moments,
}

impl Kernel {
    fn new(dim: usize) -> Self {
        Self {
            factor: DMatrix::identity(dim, dim) * 0.1,
            base: 2.38 / (dim as f64).sqrt(),
            log_scale: 0.0,
            rm_t: 0,
            moments: Moments::new(dim),
        }
    }

    fn propose<R: Rng>(&self, x: &[f64], rng: &mut R, z: &mut DVector<f64>, prop: &mut [f64]) {
        for v in z.iter_mut() {
            *v = rng.sample(StandardNormal);
        }
        let step = &self.factor * &*z;
        let scale = self.base * self.log_scale.exp();
        for (j, p) in prop.iter_mut().enumerate() {
            *p = x[j] + scale * step[j];
        }
    }

    fn adapt(&mut self, alpha: f64, target: f64) {
        self.rm_t += 1;
        self.log_scale += (alpha - target) / (self.rm_t as f64 + 10.0).powf(0.6);
    }

    /// Replaces the covariance factor by the regularized window estimate and
    /// restarts step-size adaptation.
    fn refresh(&mut self, kind: ProposalKind) {
        let dim = self.factor.nrows();
        if self.moments.n <= dim + 2 {
            return;
        }
        let cov = self.moments.regularized();
        let diagonal = || DMatrix::from_diagonal(&cov.diagonal().map(f64::sqrt));
        self.factor = match kind {
            ProposalKind::Dense => cov.clone().cholesky().map_or_else(diagonal, |c| c.l()),
            ProposalKind::Diagonal => diagonal(),
        };
        self.moments = Moments::new(dim);
        self.log_scale = 0.0;
        self.rm_t = 0;
    }
}

fn run_chain<F>(log_density: &F, dim: usize, config: &McmcConfig, chain: usize) -> Result<RawChain>
where
    F: Fn(&[f64]) -> f64,
{
    let mut rng = stream_rng(config.seed, chain as u64);
    let mut x = vec![0.0; dim];
    let mut lp = f64::NEG_INFINITY;
    for _ in 0..INIT_ATTEMPTS {
        for v in x.iter_mut() {
            *v = rng.random_range(-INIT_RADIUS..INIT_RADIUS);
        }
        lp = log_density(&x);
        if lp.is_finite() {
            break;
        }
    }
    if !lp.is_finite() {
        return Err(Error::NonFiniteInitialPoint(INIT_ATTEMPTS));
    }
    let kept = config.kept();
    let mut draws = Vec::with_capacity(kept * dim);
    let mut log_post = Vec::with_capacity(kept);
    if dim == 0 {
        log_post.resize(kept, lp);
        return Ok(RawChain { draws, log_post, acceptance_rate: 1.0 });
    }

    let mut kernel = Kernel::new(dim);
    let steps = config.steps_per_iter.unwrap_or(STEPS_PER_PARAM * dim).max(1);
    let warmup = config.warmup;
    // slow windows close at these fractions of warmup; covariance estimation
    // starts after the first fast window
    let boundaries: Vec<usize> = [0.15, 0.3, 0.5, 0.9].iter().map(|f| (f * warmup as f64) as usize).collect();
    let mut accepted_after = 0usize;
    let mut proposals_after = 0usize;
    let mut prop = vec![0.0; dim];
    let mut z = DVector::zeros(dim);

    for it in 0..config.iter {
        let adapting = it < warmup;
        if adapting && boundaries[1..].contains(&it) {
            kernel.refresh(config.proposal);
        }
        for _ in 0..steps {
            kernel.propose(&x, &mut rng, &mut z, &mut prop);
            let lp_new = log_density(&prop);
            let log_ratio = lp_new - lp;
            let alpha = if log_ratio.is_nan() { 0.0 } else { log_ratio.min(0.0).exp() };
            let u: f64 = rng.random();
            let accept = u < alpha;
            if accept {
                x.copy_from_slice(&prop);
                lp = lp_new;
            }
            if adapting {
                kernel.adapt(alpha, config.target_accept);
                if it >= boundaries[0] && it < boundaries[3] {
                    kernel.moments.push(&x);
                }
            } else {
                proposals_after += 1;
                accepted_after += accept as usize;
            }
        }
        if !adapting {
            draws.extend_from_slice(&x);
            log_post.push(lp);
        }
    }
    let acceptance_rate = accepted_after as f64 / proposals_after.max(1) as f64;
    Ok(RawChain { draws, log_post, acceptance_rate })
}

/// Samples the posterior of a BP model. Draws are taken on the standardized
/// `(β*, log γ*)` scale and mapped to the natural scale per draw.
pub fn sample_posterior(
    model: ModelKind,
    data: &SurvivalDataset,
    priors: &PriorSpec,
    config: &McmcConfig,
    degree: Option<usize>,
) -> Result<BayesFit> {
    config.validate()?;
    priors.validate()?;
    let degree = match degree {
        Some(0) => return Err(Error::OutOfRange("degree must be at least 1".into())),
        Some(m) => m,
        None => default_degree(data.n()),
    };
    let tau = if data.n() == 0 { 1.0 } else { data.max_time() };
    let basis = BernsteinBasis::new(degree, tau)?;
    let (work, standardization) = if config.standardize && data.p() > 0 && data.n() >= 2 {
        standardize_dataset(data).map_err(|e| match e {
            Error::ZeroVariance(c) => Error::DegenerateData(format!("column `{c}` is constant")),
            other => other,
        })?
    } else {
        (data.clone(), StandardizationParams::identity(data.p()))
    };
    let p = data.p();
    let n = data.n();
    let dim = p + degree;
    let lik = BpLikelihood::new(model, &work, basis);
    let log_density = |theta: &[f64]| {
        let prior = priors.log_density(theta, p);
        if !prior.is_finite() {
            return f64::NEG_INFINITY;
        }
        let v = lik.loglik(theta) + prior;
        if v.is_nan() {
            f64::NEG_INFINITY
        } else {
            v
        }
    };

    let raws: Vec<Result<RawChain>> =
        (0..config.chains).into_par_iter().map(|c| run_chain(&log_density, dim, config, c)).collect();
    let mut chains = Vec::with_capacity(config.chains);
    for raw in raws {
        let raw = raw?;
        let kept = raw.log_post.len();
        let mut pointwise = vec![0.0; kept * n];
        let mut draws_nat = Vec::with_capacity(kept * dim);
        for s in 0..kept {
            let theta = &raw.draws[s * dim..(s + 1) * dim];
            lik.pointwise(theta, &mut pointwise[s * n..(s + 1) * n]);
            let nat = recover_estimates(&ParameterVector::from_flat(theta, p), &standardization, model);
            draws_nat.extend_from_slice(&nat.beta);
            draws_nat.extend(nat.log_bp.iter().map(|v| v.exp()));
        }
        chains.push(Chain {
            draws_std: raw.draws,
            draws_nat,
            log_post: raw.log_post,
            pointwise,
            acceptance_rate: raw.acceptance_rate,
        });
    }

    let total = chains.iter().map(|c| c.log_post.len()).sum::<usize>().max(1);
    let mut theta_bar = vec![0.0; dim];
    for c in &chains {
        for row in c.draws_std.chunks(dim.max(1)) {
            for (t, v) in theta_bar.iter_mut().zip(row) {
                *t += v / total as f64;
            }
        }
    }
    let pointwise: Vec<f64> = chains.iter().flat_map(|c| c.pointwise.iter().copied()).collect();
    let ll = PointwiseLoglik::new(total, n, if n == 0 { Vec::new() } else { pointwise });
    let criteria = Criteria::compute(&ll, lik.loglik(&theta_bar));

    Ok(BayesFit {
        model,
        basis,
        standardization,
        column_names: data.column_names().to_vec(),
        priors: *priors,
        config: config.clone(),
        chains,
        criteria,
        n,
        events: data.events(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamSummary {
    pub name: String,
    pub mode: f64,
    pub mean: f64,
    pub se_mean: f64,
    pub sd: f64,
    pub median: f64,
    pub hpd_lower: f64,
    pub hpd_upper: f64,
    pub n_eff: f64,
    pub rhat: f64,
}

/// Summary of an exponentiated regression coefficient (HR, OR or TR).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpSummary {
    pub name: String,
    pub mean_exp: f64,
    pub median_exp: f64,
    pub sd_exp: f64,
    pub hpd_lower_exp: f64,
    pub hpd_upper_exp: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorSummary {
    pub prob: f64,
    pub params: Vec<ParamSummary>,
    pub exp: Vec<ExpSummary>,
    pub criteria: Criteria,
}

/// Per-parameter summaries on the natural scale. R-hat is NaN with one chain.
pub fn summarize(fit: &BayesFit, prob: f64) -> Result<PosteriorSummary> {
    if fit.chains.is_empty() || fit.kept() == 0 {
        return Err(Error::TooFewSamples { needed: 10, got: 0 });
    }
    let names = fit.param_names();
    let d = fit.dim();
    let (mode_chain, mode_idx, _) = fit
        .chains
        .iter()
        .enumerate()
        .flat_map(|(c, ch)| ch.log_post.iter().enumerate().map(move |(s, &lp)| (c, s, lp)))
        .fold((0, 0, f64::NEG_INFINITY), |best, cur| if cur.2 > best.2 { cur } else { best });
    let mode_row = &fit.chains[mode_chain].draws_nat[mode_idx * d..(mode_idx + 1) * d];
    let mut params = Vec::with_capacity(d);
    let mut exp = Vec::with_capacity(fit.p());
    for j in 0..d {
        let per_chain = fit.natural_draws(j);
        let refs: Vec<&[f64]> = per_chain.iter().map(Vec::as_slice).collect();
        let all: Vec<f64> = per_chain.concat();
        let sd = variance(&all).sqrt();
        let ne = n_eff(&refs).unwrap_or(f64::NAN);
        let (lo, hi) = hpd_interval(&all, prob)?;
        params.push(ParamSummary {
            name: names[j].clone(),
            mode: mode_row[j],
            mean: mean(&all),
            se_mean: sd / ne.sqrt(),
            sd,
            median: median(&all),
            hpd_lower: lo,
            hpd_upper: hi,
            n_eff: ne,
            rhat: if refs.len() >= 2 { rhat(&refs).unwrap_or(f64::NAN) } else { f64::NAN },
        });
        if j < fit.p() {
            let e: Vec<f64> = all.iter().map(|v| v.exp()).collect();
            let (lo, hi) = hpd_interval(&e, prob)?;
            exp.push(ExpSummary {
                name: names[j].clone(),
                mean_exp: mean(&e),
                median_exp: median(&e),
                sd_exp: variance(&e).sqrt(),
                hpd_lower_exp: lo,
                hpd_upper_exp: hi,
            });
        }
    }
    Ok(PosteriorSummary { prob, params, exp, criteria: fit.criteria })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_and_parsing() {
        let p2 = PriorSpec::preset(2).unwrap();
        assert_eq!(p2.beta.sigma, 4.0);
        assert_eq!(p2.bp, BpPrior::LogNormal { mu: 0.0, sigma: 10.0 });
        assert_eq!("prior3".parse::<PriorSpec>().unwrap().beta.sigma, 10.0);
        assert!("prior5".parse::<PriorSpec>().is_err());
        assert_eq!("gamma(2, 0.5)".parse::<BpPrior>().unwrap(), BpPrior::Gamma { shape: 2.0, rate: 0.5 });
        assert_eq!("normal(0,4)".parse::<NormalPrior>().unwrap(), NormalPrior { mu: 0.0, sigma: 4.0 });
        assert!("beta(1,1)".parse::<BpPrior>().is_err());
    }

    #[test]
    fn gamma_prior_on_log_scale() {
        // Gamma(a, b) on γ gives density ∝ exp(aφ − b e^φ) on φ
        let prior = BpPrior::Gamma { shape: 3.0, rate: 2.0 };
        let d = |phi: f64| prior.log_density_log_scale(phi) - (3.0 * phi - 2.0 * phi.exp());
        assert!((d(0.3) - d(-1.2)).abs() < 1e-12);
        let inv = BpPrior::InverseGamma { shape: 3.0, scale: 2.0 };
        let d = |phi: f64| inv.log_density_log_scale(phi) - (-3.0 * phi - 2.0 * (-phi).exp());
        assert!((d(0.3) - d(-1.2)).abs() < 1e-12);
    }

    #[test]
    fn config_validation() {
        let bad = McmcConfig { warmup: 10, iter: 10, ..Default::default() };
        assert!(bad.validate().is_err());
        let bad = McmcConfig { chains: 0, ..Default::default() };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn gaussian_target_moments() {
        let config = McmcConfig { chains: 1, iter: 3000, warmup: 1000, ..Default::default() };
        let target = |x: &[f64]| -0.5 * ((x[0] - 1.0).powi(2) / 4.0 + (x[1] + 2.0).powi(2));
        let (draws, _, acc) = sample_chain(target, 2, &config, 0).unwrap();
        let x0: Vec<f64> = draws.iter().step_by(2).copied().collect();
        let x1: Vec<f64> = draws.iter().skip(1).step_by(2).copied().collect();
        assert!((mean(&x0) - 1.0).abs() < 0.2 && (variance(&x0).sqrt() - 2.0).abs() < 0.2);
        assert!((mean(&x1) + 2.0).abs() < 0.1 && (variance(&x1).sqrt() - 1.0).abs() < 0.1);
        assert!((0.15..0.5).contains(&acc), "{acc}");
    }
}
