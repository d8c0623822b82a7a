//! Maximum-likelihood fitting of BP and parametric survival models.
//!
//! Fits run on the standardized design; estimates are mapped back to the
//! natural scale and their covariance is obtained by the Delta method.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

use crate::bernstein::BernsteinBasis;
use crate::data::{standardize_dataset, StandardizationParams, SurvivalDataset};
use crate::error::{Block, Error, Result};
use crate::likelihood::{BpLikelihood, ModelKind, ParameterVector, ParametricFamily, ParametricLikelihood, ParametricParams};
use crate::numeric::stream_rng;
use crate::optim::{minimize, Algorithm, OptimOptions, OptimResult};

/// Relative singular-value threshold below which a block counts as singular.
const SINGULAR_RCOND: f64 = 1e-13;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MlOptions {
    pub algorithm: Algorithm,
    pub restarts: usize,
    pub max_iter: usize,
    pub grad_tol: f64,
    pub seed: u64,
    /// Center and scale covariates before optimizing.
    pub standardize: bool,
}

impl Default for MlOptions {
    fn default() -> Self {
        Self { algorithm: Algorithm::Bfgs, restarts: 4, max_iter: 500, grad_tol: 1e-7, seed: 1, standardize: true }
    }
}

impl MlOptions {
    fn validate(&self) -> Result<()> {
        if self.restarts == 0 {
            return Err(Error::Config("restarts must be at least 1".into()));
        }
        if !(self.grad_tol > 0.0) {
            return Err(Error::Config("grad_tol must be positive".into()));
        }
        Ok(())
    }

    fn optim(&self) -> OptimOptions {
        OptimOptions { algorithm: self.algorithm, max_iter: self.max_iter, grad_tol: self.grad_tol, ..Default::default() }
    }
}

/// Default polynomial degree `⌈√n⌉`.
pub fn default_degree(n: usize) -> usize {
    ((n as f64).sqrt().ceil() as usize).max(1)
}

/// Result of a BP maximum-likelihood fit.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MlFit {
    pub model: ModelKind,
    pub basis: BernsteinBasis,
    pub standardization: StandardizationParams,
    pub column_names: Vec<String>,
    /// Estimates on the standardized scale `(β*, log γ*)`.
    pub params_std: ParameterVector,
    /// Estimates on the natural scale `(β, log γ)`.
    pub params_nat: ParameterVector,
    /// Inverse observed information in `(β*, log γ*)` coordinates.
    pub cov_std: DMatrix<f64>,
    /// Covariance of `(β, γ)` on the natural scale.
    pub cov_nat: DMatrix<f64>,
    pub loglik: f64,
    pub loglik_null: f64,
    pub converged: bool,
    pub hessian_finite: bool,
    pub n: usize,
    pub events: usize,
    pub restart: usize,
    pub iterations: usize,
}

impl MlFit {
    pub fn p(&self) -> usize {
        self.params_nat.beta.len()
    }

    /// Standard errors of the natural-scale regression coefficients.
    pub fn beta_se(&self) -> Vec<f64> {
        (0..self.p()).map(|j| self.cov_nat[(j, j)].max(0.0).sqrt()).collect()
    }
}

struct Best {
    index: usize,
    result: OptimResult,
}

fn pick_best(results: Vec<OptimResult>) -> Option<Best> {
    let mut best: Option<Best> = None;
    for (index, result) in results.into_iter().enumerate() {
        if !result.f.is_finite() {
            continue;
        }
        if best.as_ref().is_none_or(|b| result.f < b.result.f) {
            best = Some(Best { index, result });
        }
    }
    best
}

fn run_restarts(lik: &BpLikelihood, options: &MlOptions, stream_offset: u64) -> Vec<OptimResult> {
    let p = lik.p();
    let dim = lik.dim();
    let opts = options.optim();
    (0..options.restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream_rng(options.seed, stream_offset + r as u64);
            let x0: Vec<f64> = (0..dim)
                .map(|i| {
                    let z: f64 = rng.sample(StandardNormal);
                    if i < p {
                        0.5 * z
                    } else {
                        z
                    }
                })
                .collect();
            minimize(
                |x, g| {
                    let v = lik.loglik_grad(x, g);
                    g.iter_mut().for_each(|v| *v = -*v);
                    -v
                },
                &x0,
                &opts,
            )
        })
        .collect()
}

/// Fits a BP model by maximum likelihood with random restarts.
pub fn fit_ml(model: ModelKind, data: &SurvivalDataset, degree: Option<usize>, options: &MlOptions) -> Result<MlFit> {
    options.validate()?;
    if data.n() == 0 {
        return Err(Error::EmptyData);
    }
    if data.events() == 0 {
        return Err(Error::DegenerateData("no observed events".into()));
    }
    let degree = match degree {
        Some(0) => return Err(Error::OutOfRange("degree must be at least 1".into())),
        Some(m) => m,
        None => default_degree(data.n()),
    };
    let basis = BernsteinBasis::new(degree, data.max_time())?;
    let (work, standardization) = if options.standardize && data.p() > 0 {
        standardize_dataset(data)?
    } else {
        (data.clone(), StandardizationParams::identity(data.p()))
    };
    let p = data.p();

    let lik = BpLikelihood::new(model, &work, basis);
    let best = pick_best(run_restarts(&lik, options, 0)).ok_or(Error::AllRestartsFailed(options.restarts))?;
    let theta = best.result.x.clone();
    let loglik = -best.result.f;

    let loglik_null = if p == 0 {
        loglik
    } else {
        let null_data = work.without_covariates();
        let null_lik = BpLikelihood::new(model, &null_data, basis);
        let null_best = pick_best(run_restarts(&null_lik, options, options.restarts as u64))
            .ok_or(Error::AllRestartsFailed(options.restarts))?;
        -null_best.result.f
    };

    let params_std = ParameterVector::from_flat(&theta, p);
    let params_nat = recover_estimates(&params_std, &standardization, model);
    let (cov_std, mut hessian_finite) = match observed_information(model, &params_std, &work, &basis)
        .and_then(|info| boundary_aware_inverse(&info, p))
    {
        Ok(cov) => (cov, true),
        Err(e) => {
            log::warn!("information matrix unusable: {e}");
            (DMatrix::from_element(theta.len(), theta.len(), f64::NAN), false)
        }
    };
    if hessian_finite && (0..p).any(|j| !(cov_std[(j, j)] > 0.0)) {
        hessian_finite = false;
    }
    let cov_nat = delta_method_cov(&cov_std, &params_std, &standardization, model);
    Ok(MlFit {
        model,
        basis,
        standardization,
        column_names: data.column_names().to_vec(),
        params_std,
        params_nat,
        cov_std,
        cov_nat,
        loglik,
        loglik_null,
        converged: best.result.converged(),
        hessian_finite,
        n: data.n(),
        events: data.events(),
        restart: best.index,
        iterations: best.result.iterations,
    })
}

fn bp_sign(model: ModelKind) -> f64 {
    match model {
        ModelKind::Aft => 1.0,
        _ => -1.0,
    }
}

/// Maps standardized estimates to the natural scale:
/// `β = β*/s`, `γ = γ* exp(∓ β*ᵀ(x̄/s))` (minus for PH/PO, plus for AFT).
pub fn recover_estimates(
    params_std: &ParameterVector,
    standardization: &StandardizationParams,
    model: ModelKind,
) -> ParameterVector {
    let beta = params_std.beta.iter().zip(&standardization.sds).map(|(b, s)| b / s).collect();
    let shift = bp_sign(model) * standardization.offset(&params_std.beta);
    let log_bp = params_std.log_bp.iter().map(|v| v + shift).collect();
    ParameterVector { beta, log_bp }
}

/// Negated Hessian of the log-likelihood at `params_std`, by central finite
/// differences of the analytic gradient.
pub fn observed_information(
    model: ModelKind,
    params_std: &ParameterVector,
    data: &SurvivalDataset,
    basis: &BernsteinBasis,
) -> Result<DMatrix<f64>> {
    let lik = BpLikelihood::new(model, data, *basis);
    if params_std.len() != lik.dim() {
        return Err(Error::DimensionMismatch { expected: lik.dim(), got: params_std.len() });
    }
    let x = params_std.to_flat();
    let mut g = vec![0.0; x.len()];
    if !lik.loglik_grad(&x, &mut g).is_finite() {
        return Err(Error::NonFiniteLikelihood);
    }
    let h = numeric_hessian(|x, g| lik.loglik_grad(x, g), &x);
    let info = -h;
    if info.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteHessian);
    }
    Ok(info)
}

/// Symmetrized central-difference Jacobian of a gradient, step `1e-5(1+|x_j|)`.
pub fn numeric_hessian<F>(mut grad: F, x: &[f64]) -> DMatrix<f64>
where
    F: FnMut(&[f64], &mut [f64]) -> f64,
{
    let d = x.len();
    let mut h = DMatrix::zeros(d, d);
    let mut xp = x.to_vec();
    let mut gp = vec![0.0; d];
    let mut gm = vec![0.0; d];
    for j in 0..d {
        let step = 1e-5 * (1.0 + x[j].abs());
        xp[j] = x[j] + step;
        grad(&xp, &mut gp);
        xp[j] = x[j] - step;
        grad(&xp, &mut gm);
        xp[j] = x[j];
        for i in 0..d {
            h[(i, j)] = (gp[i] - gm[i]) / (2.0 * step);
        }
    }
    let ht = h.transpose();
    (h + ht) * 0.5
}

/// Inverse with Jacobi equilibration and an SVD rank check. `None` when singular.
fn equilibrated_inverse(a: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let n = a.nrows();
    if n == 0 {
        return Some(DMatrix::zeros(0, 0));
    }
    if a.iter().any(|v| !v.is_finite()) {
        return None;
    }
    let scale: Vec<f64> = (0..n)
        .map(|i| {
            let d = a[(i, i)].abs();
            if d > 0.0 && d.is_finite() {
                1.0 / d.sqrt()
            } else {
                1.0
            }
        })
        .collect();
    let scaled = DMatrix::from_fn(n, n, |i, j| a[(i, j)] * scale[i] * scale[j]);
    let svd = scaled.svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smax > 0.0) || smin <= SINGULAR_RCOND * smax {
        return None;
    }
    let inv = svd.pseudo_inverse(0.0).ok()?;
    Some(DMatrix::from_fn(n, n, |i, j| inv[(i, j)] * scale[i] * scale[j]))
}

/// Partitioned inverse with the regression block `A` (`p × p`) first:
/// `A⁻¹`, then the Schur complement `S = D − C A⁻¹ B`.
pub fn blockwise_inverse(mat: &DMatrix<f64>, p: usize) -> Result<DMatrix<f64>> {
    let n = mat.nrows();
    if mat.ncols() != n {
        return Err(Error::DimensionMismatch { expected: n, got: mat.ncols() });
    }
    if p > n {
        return Err(Error::DimensionMismatch { expected: n, got: p });
    }
    let q = n - p;
    let a = mat.view((0, 0), (p, p)).into_owned();
    let b = mat.view((0, p), (p, q)).into_owned();
    let c = mat.view((p, 0), (q, p)).into_owned();
    let d = mat.view((p, p), (q, q)).into_owned();
    let a_inv = equilibrated_inverse(&a).ok_or(Error::SingularBlock(Block::Regression))?;
    let ca = &c * &a_inv;
    let schur = &d - &ca * &b;
    let s_inv = equilibrated_inverse(&schur).ok_or(Error::SingularBlock(Block::Schur))?;
    let ab = &a_inv * &b;
    let top_left = &a_inv + &ab * &s_inv * &ca;
    let top_right = -(&ab * &s_inv);
    let bottom_left = -(&s_inv * &ca);
    let mut out = DMatrix::zeros(n, n);
    out.view_mut((0, 0), (p, p)).copy_from(&top_left);
    out.view_mut((0, p), (p, q)).copy_from(&top_right);
    out.view_mut((p, 0), (q, p)).copy_from(&bottom_left);
    out.view_mut((p, p), (q, q)).copy_from(&s_inv);
    Ok(out)
}

/// BP coefficients whose information vanishes relative to the rest of the BP
/// block sit on the `γ = 0` boundary and carry no curvature in log scale.
const BOUNDARY_RATIO: f64 = 1e-30;

/// Inverts the information treating boundary BP coefficients as fixed: their
/// rows and columns of the covariance are zero.
pub fn boundary_aware_inverse(info: &DMatrix<f64>, p: usize) -> Result<DMatrix<f64>> {
    let n = info.nrows();
    let bp_max = (p..n).map(|k| info[(k, k)]).filter(|v| v.is_finite()).fold(0.0, f64::max);
    let keep: Vec<usize> = (0..n)
        .filter(|&k| k < p || (info[(k, k)].is_finite() && info[(k, k)] > BOUNDARY_RATIO * bp_max))
        .collect();
    if keep.len() == n {
        return blockwise_inverse(info, p);
    }
    let reduced = info.select_rows(&keep).select_columns(&keep);
    let inv = blockwise_inverse(&reduced, p)?;
    let mut out = DMatrix::zeros(n, n);
    for (a, &i) in keep.iter().enumerate() {
        for (b, &j) in keep.iter().enumerate() {
            out[(i, j)] = inv[(a, b)];
        }
    }
    Ok(out)
}

/// Jacobian of `(β*, log γ*) ↦ (β, γ)`.
pub fn natural_jacobian(
    params_std: &ParameterVector,
    standardization: &StandardizationParams,
    model: ModelKind,
) -> DMatrix<f64> {
    let p = params_std.beta.len();
    let m = params_std.log_bp.len();
    let nat = recover_estimates(params_std, standardization, model);
    let gamma = nat.bp();
    let sign = bp_sign(model);
    let mut j = DMatrix::zeros(p + m, p + m);
    for a in 0..p {
        j[(a, a)] = 1.0 / standardization.sds[a];
    }
    for k in 0..m {
        j[(p + k, p + k)] = gamma[k];
        for a in 0..p {
            j[(p + k, a)] = sign * gamma[k] * standardization.means[a] / standardization.sds[a];
        }
    }
    j
}

/// Covariance of the natural-scale `(β, γ)`: `J Σ Jᵀ`.
pub fn delta_method_cov(
    cov_std: &DMatrix<f64>,
    params_std: &ParameterVector,
    standardization: &StandardizationParams,
    model: ModelKind,
) -> DMatrix<f64> {
    let j = natural_jacobian(params_std, standardization, model);
    let out = &j * cov_std * j.transpose();
    let t = out.transpose();
    (out + t) * 0.5
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub statistic: f64,
    pub df: usize,
    pub p_value: f64,
}

fn chi2_sf(x: f64, df: usize) -> f64 {
    if df == 0 {
        return 1.0;
    }
    ChiSquared::new(df as f64).map(|d| d.sf(x)).unwrap_or(f64::NAN)
}

/// Global Wald test of `β = 0` on the natural scale.
pub fn wald_test(fit: &MlFit) -> Result<TestResult> {
    wald_from(&fit.params_nat.beta, &fit.cov_nat, fit.hessian_finite)
}

fn wald_from(beta: &[f64], cov: &DMatrix<f64>, hessian_finite: bool) -> Result<TestResult> {
    let p = beta.len();
    if !hessian_finite {
        return Err(Error::IntervalsUnavailable);
    }
    if p == 0 {
        return Ok(TestResult { statistic: 0.0, df: 0, p_value: 1.0 });
    }
    let v = cov.view((0, 0), (p, p)).into_owned();
    let inv = equilibrated_inverse(&v).ok_or(Error::IntervalsUnavailable)?;
    let b = DVector::from_column_slice(beta);
    let statistic = b.dot(&(inv * &b));
    Ok(TestResult { statistic, df: p, p_value: chi2_sf(statistic, p) })
}

/// Likelihood-ratio test against the baseline-only fit.
pub fn lr_test(fit: &MlFit) -> TestResult {
    let statistic = (2.0 * (fit.loglik - fit.loglik_null)).max(0.0);
    let df = fit.p();
    TestResult { statistic, df, p_value: chi2_sf(statistic, df) }
}

/// One regression coefficient with its Wald z-test and interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coefficient {
    pub name: String,
    pub coef: f64,
    pub exp_coef: f64,
    pub se: f64,
    pub z: f64,
    pub p_value: f64,
    pub lower: f64,
    pub upper: f64,
}

fn coefficient_rows(names: &[String], beta: &[f64], se: &[f64], level: f64) -> Result<Vec<Coefficient>> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::Config(format!("confidence level {level} outside (0,1)")));
    }
    let normal = Normal::standard();
    let zq = normal.inverse_cdf(0.5 + level / 2.0);
    Ok(names
        .iter()
        .zip(beta.iter().zip(se))
        .map(|(name, (&coef, &se))| {
            let z = coef / se;
            Coefficient {
                name: name.clone(),
                coef,
                exp_coef: coef.exp(),
                se,
                z,
                p_value: 2.0 * normal.sf(z.abs()),
                lower: coef - zq * se,
                upper: coef + zq * se,
            }
        })
        .collect())
}

/// Per-coefficient table with Wald intervals `coef ± z_{α/2} se`.
pub fn coefficient_table(fit: &MlFit, level: f64) -> Result<Vec<Coefficient>> {
    if !fit.hessian_finite {
        return Err(Error::IntervalsUnavailable);
    }
    coefficient_rows(&fit.column_names, &fit.params_nat.beta, &fit.beta_se(), level)
}

/// `(lower, upper)` Wald intervals for the regression coefficients.
pub fn confidence_intervals(fit: &MlFit, level: f64) -> Result<Vec<(f64, f64)>> {
    Ok(coefficient_table(fit, level)?.into_iter().map(|c| (c.lower, c.upper)).collect())
}

/// Result of a parametric WAFT/LLAFT maximum-likelihood fit.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ParametricFit {
    pub family: ParametricFamily,
    pub params: ParametricParams,
    /// Inverse observed information in `(log scale, log shape, β)` coordinates.
    pub cov: DMatrix<f64>,
    pub column_names: Vec<String>,
    pub loglik: f64,
    pub converged: bool,
    pub hessian_finite: bool,
    pub n: usize,
    pub events: usize,
}

impl ParametricFit {
    pub fn beta_se(&self) -> Vec<f64> {
        (0..self.params.beta.len()).map(|j| self.cov[(2 + j, 2 + j)].max(0.0).sqrt()).collect()
    }

    pub fn coefficient_table(&self, level: f64) -> Result<Vec<Coefficient>> {
        if !self.hessian_finite {
            return Err(Error::IntervalsUnavailable);
        }
        coefficient_rows(&self.column_names, &self.params.beta, &self.beta_se(), level)
    }

    pub fn wald_test(&self) -> Result<TestResult> {
        let p = self.params.beta.len();
        let v = self.cov.view((2, 2), (p, p)).into_owned();
        wald_from(&self.params.beta, &v, self.hessian_finite)
    }
}

/// Fits a parametric Weibull or log-logistic AFT model.
pub fn fit_parametric(family: ParametricFamily, data: &SurvivalDataset, options: &MlOptions) -> Result<ParametricFit> {
    options.validate()?;
    if data.n() == 0 {
        return Err(Error::EmptyData);
    }
    if data.events() == 0 {
        return Err(Error::DegenerateData("no observed events".into()));
    }
    let (work, standardization) = if options.standardize && data.p() > 0 {
        standardize_dataset(data)?
    } else {
        (data.clone(), StandardizationParams::identity(data.p()))
    };
    let p = data.p();
    let lik = ParametricLikelihood::new(family, &work);
    let base = (data.events() as f64 / data.times().iter().sum::<f64>()).ln();
    let opts = options.optim();
    let results: Vec<OptimResult> = (0..options.restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream_rng(options.seed, r as u64);
            let mut x0 = vec![0.0; p + 2];
            x0[0] = base + 0.5 * rng.sample::<f64, _>(StandardNormal);
            x0[1] = 0.5 * rng.sample::<f64, _>(StandardNormal);
            for v in x0[2..].iter_mut() {
                *v = 0.5 * rng.sample::<f64, _>(StandardNormal);
            }
            minimize(
                |x, g| {
                    let v = lik.loglik_grad(x, g);
                    g.iter_mut().for_each(|v| *v = -*v);
                    -v
                },
                &x0,
                &opts,
            )
        })
        .collect();
    let best = pick_best(results).ok_or(Error::AllRestartsFailed(options.restarts))?;
    let x = &best.result.x;
    let shape = x[1].exp();
    let beta: Vec<f64> = x[2..].iter().zip(&standardization.sds).map(|(b, s)| b / s).collect();
    let log_scale = x[0] + shape * standardization.offset(&x[2..]);
    let params = ParametricParams { scale: log_scale.exp(), shape, beta };

    let raw = ParametricLikelihood::new(family, data);
    let theta = params.to_flat();
    let info = -numeric_hessian(|x, g| raw.loglik_grad(x, g), &theta);
    let (cov, mut hessian_finite) = match blockwise_inverse(&info, 2) {
        Ok(c) if c.iter().all(|v| v.is_finite()) => (c, true),
        _ => (DMatrix::from_element(p + 2, p + 2, f64::NAN), false),
    };
    if hessian_finite && (0..p + 2).any(|j| !(cov[(j, j)] > 0.0)) {
        hessian_finite = false;
    }
    Ok(ParametricFit {
        family,
        params,
        cov,
        column_names: data.column_names().to_vec(),
        loglik: -best.result.f,
        converged: best.result.converged(),
        hessian_finite,
        n: data.n(),
        events: data.events(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_degree_rounds_up() {
        assert_eq!(default_degree(90), 10);
        assert_eq!(default_degree(100), 10);
        assert_eq!(default_degree(97), 10);
        assert_eq!(default_degree(1), 1);
    }

    #[test]
    fn recover_examples() {
        let std = ParameterVector::new(vec![1.0], vec![0.3, -0.2]);
        let s = StandardizationParams { means: vec![3.0], sds: vec![2.0] };
        let ph = recover_estimates(&std, &s, ModelKind::Ph);
        assert_eq!(ph.beta, [0.5]);
        assert!((ph.bp()[0] - 0.3f64.exp() * (-1.5f64).exp()).abs() < 1e-14);
        let aft = recover_estimates(&std, &s, ModelKind::Aft);
        assert!((aft.bp()[1] - (-0.2f64).exp() * 1.5f64.exp()).abs() < 1e-14);
        let id = recover_estimates(&std, &StandardizationParams::identity(1), ModelKind::Po);
        assert_eq!(id, std);
    }

    #[test]
    fn blockwise_trivial_cases() {
        let i = DMatrix::<f64>::identity(4, 4);
        assert!((blockwise_inverse(&i, 2).unwrap() - &i).abs().max() < 1e-15);
        let d = DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 4.0, 0.5]));
        let inv = blockwise_inverse(&d, 1).unwrap();
        assert!((inv[(0, 0)] - 0.5).abs() < 1e-15 && (inv[(1, 1)] - 0.25).abs() < 1e-15 && (inv[(2, 2)] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn blockwise_detects_singular_blocks() {
        let a = DMatrix::from_row_slice(3, 3, &[1.0, 1.0, 0.0, 1.0, 1.0, 0.0, 0.0, 0.0, 1.0]);
        assert!(matches!(blockwise_inverse(&a, 2), Err(Error::SingularBlock(Block::Regression))));
        let b = DMatrix::from_row_slice(3, 3, &[2.0, 0.0, 0.0, 0.0, 1.0, 1.0, 0.0, 1.0, 1.0]);
        assert!(matches!(blockwise_inverse(&b, 1), Err(Error::SingularBlock(Block::Schur))));
    }

    #[test]
    fn boundary_coefficients_are_fixed() {
        let info = DMatrix::from_row_slice(3, 3, &[2.0, 0.5, 0.0, 0.5, 1.0, 0.0, 0.0, 0.0, 0.0]);
        assert!(blockwise_inverse(&info, 1).is_err());
        let cov = boundary_aware_inverse(&info, 1).unwrap();
        let direct = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]).try_inverse().unwrap();
        assert!((cov[(0, 0)] - direct[(0, 0)]).abs() < 1e-14);
        assert_eq!(cov[(2, 2)], 0.0);
    }

    #[test]
    fn delta_identity_and_scaling() {
        let std = ParameterVector::new(vec![0.4, -0.1], vec![0.0, 0.2]);
        let cov = DMatrix::from_fn(4, 4, |i, j| if i == j { 1.0 + i as f64 } else { 0.1 });
        let id = StandardizationParams::identity(2);
        let out = delta_method_cov(&cov, &std, &id, ModelKind::Ph);
        // identity standardization: β block unchanged
        for a in 0..2 {
            for b in 0..2 {
                assert!((out[(a, b)] - cov[(a, b)]).abs() < 1e-15);
            }
        }
        let s = StandardizationParams { means: vec![0.0, 0.0], sds: vec![2.0, 0.5] };
        let out = delta_method_cov(&cov, &std, &s, ModelKind::Ph);
        assert!((out[(0, 0)] - cov[(0, 0)] / 4.0).abs() < 1e-14);
        assert!((out[(1, 1)] - cov[(1, 1)] / 0.25).abs() < 1e-14);
    }

    #[test]
    fn quadratic_hessian_recovered() {
        let a = DMatrix::from_row_slice(3, 3, &[4.0, 1.0, 0.5, 1.0, 3.0, -0.2, 0.5, -0.2, 2.0]);
        let grad = |x: &[f64], g: &mut [f64]| {
            let v = DVector::from_column_slice(x);
            let ag = &a * &v;
            g.copy_from_slice(ag.as_slice());
            0.5 * v.dot(&ag)
        };
        let h = numeric_hessian(grad, &[0.3, -1.0, 2.0]);
        assert!((h - &a).abs().max() < 1e-6);
    }
}
