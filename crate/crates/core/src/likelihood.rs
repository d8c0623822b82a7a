//! Log-likelihoods and gradients for the Bernstein PH, PO and AFT models and
//! for the parametric Weibull and log-logistic AFT references.
//!
//! BP models are parameterized by `θ = (β, φ)` with `γ_k = exp(φ_k)`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::bernstein::BernsteinBasis;
use crate::data::SurvivalDataset;
use crate::error::{Error, Result};
use crate::numeric::pairwise_sum;

/// Floor applied inside the log hazard when an AFT-rescaled event time lies
/// beyond `tau`.
pub const AFT_LOG_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Ph,
    Po,
    Aft,
}

impl ModelKind {
    /// Label of the exponentiated coefficient: hazard, odds or time ratio.
    pub fn ratio_label(&self) -> &'static str {
        match self {
            ModelKind::Ph => "HR",
            ModelKind::Po => "OR",
            ModelKind::Aft => "TR",
        }
    }

    /// Name of the BP coefficient vector in reports.
    pub fn bp_symbol(&self) -> &'static str {
        match self {
            ModelKind::Po => "xi",
            _ => "gamma",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelKind::Ph => "PH",
            ModelKind::Po => "PO",
            ModelKind::Aft => "AFT",
        })
    }
}

impl FromStr for ModelKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ph" => Ok(ModelKind::Ph),
            "po" => Ok(ModelKind::Po),
            "aft" => Ok(ModelKind::Aft),
            other => Err(Error::Config(format!("unknown model `{other}`"))),
        }
    }
}

/// Regression coefficients plus log BP coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterVector {
    pub beta: Vec<f64>,
    pub log_bp: Vec<f64>,
}

impl ParameterVector {
    pub fn new(beta: Vec<f64>, log_bp: Vec<f64>) -> Self {
        Self { beta, log_bp }
    }

    /// Splits a flat `(β, φ)` vector after `p` entries.
    pub fn from_flat(theta: &[f64], p: usize) -> Self {
        Self { beta: theta[..p].to_vec(), log_bp: theta[p..].to_vec() }
    }

    pub fn to_flat(&self) -> Vec<f64> {
        let mut v = self.beta.clone();
        v.extend_from_slice(&self.log_bp);
        v
    }

    /// BP coefficients `γ = exp(φ)`.
    pub fn bp(&self) -> Vec<f64> {
        self.log_bp.iter().map(|v| v.exp()).collect()
    }

    pub fn len(&self) -> usize {
        self.beta.len() + self.log_bp.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Linear predictors `η = Xβ`.
pub fn linear_predictor(data: &SurvivalDataset, beta: &[f64]) -> Vec<f64> {
    let x = data.design();
    let mut eta = vec![0.0; data.n()];
    for (j, &b) in beta.iter().enumerate() {
        for (e, &v) in eta.iter_mut().zip(x.column(j).iter()) {
            *e += b * v;
        }
    }
    eta
}

/// BP log-likelihood bound to a dataset and basis.
///
/// For PH and PO the basis values at the observed times are cached; AFT
/// re-evaluates the basis at `y e^{-η}` on every call.
#[derive(Debug, Clone)]
pub struct BpLikelihood<'a> {
    model: ModelKind,
    data: &'a SurvivalDataset,
    basis: BernsteinBasis,
    g: Vec<f64>,
    cap: Vec<f64>,
}

impl<'a> BpLikelihood<'a> {
    pub fn new(model: ModelKind, data: &'a SurvivalDataset, basis: BernsteinBasis) -> Self {
        let m = basis.degree();
        let n = data.n();
        let (mut g, mut cap) = (Vec::new(), Vec::new());
        if model != ModelKind::Aft {
            g = vec![0.0; n * m];
            cap = vec![0.0; n * m];
            let mut work = vec![0.0; m + 1];
            for (i, &y) in data.times().iter().enumerate() {
                basis.fill(y, &mut work, &mut g[i * m..(i + 1) * m], &mut cap[i * m..(i + 1) * m], None);
            }
        }
        Self { model, data, basis, g, cap }
    }

    pub fn model(&self) -> ModelKind {
        self.model
    }

    pub fn basis(&self) -> &BernsteinBasis {
        &self.basis
    }

    pub fn data(&self) -> &SurvivalDataset {
        self.data
    }

    pub fn p(&self) -> usize {
        self.data.p()
    }

    pub fn dim(&self) -> usize {
        self.data.p() + self.basis.degree()
    }

    pub fn loglik(&self, theta: &[f64]) -> f64 {
        self.evaluate(theta, None, None)
    }

    /// Log-likelihood and its gradient with respect to `(β, φ)`.
    pub fn loglik_grad(&self, theta: &[f64], grad: &mut [f64]) -> f64 {
        self.evaluate(theta, Some(grad), None)
    }

    /// Per-observation log-likelihood contributions.
    pub fn pointwise(&self, theta: &[f64], out: &mut [f64]) -> f64 {
        self.evaluate(theta, None, Some(out))
    }

    fn evaluate(&self, theta: &[f64], grad: Option<&mut [f64]>, pointwise: Option<&mut [f64]>) -> f64 {
        let p = self.data.p();
        let m = self.basis.degree();
        debug_assert_eq!(theta.len(), p + m);
        let n = self.data.n();
        let gamma: Vec<f64> = theta[p..].iter().map(|v| v.exp()).collect();
        let eta = linear_predictor(self.data, &theta[..p]);
        let times = self.data.times();
        let status = self.data.status();
        let mut ll = vec![0.0; n];
        let want_grad = grad.is_some();
        let mut d_eta = if want_grad { vec![0.0; n] } else { Vec::new() };
        let mut d_phi = vec![0.0; m];

        let mut work = vec![0.0; m + 1];
        let (mut gbuf, mut cbuf, mut dbuf) = (vec![0.0; m], vec![0.0; m], vec![0.0; m]);

        for i in 0..n {
            let delta = status[i] == 1;
            let df = status[i] as f64;
            let e = eta[i];
            let (g_row, c_row): (&[f64], &[f64]) = match self.model {
                ModelKind::Aft => {
                    let u = times[i] * (-e).exp();
                    let dg = if want_grad { Some(&mut dbuf[..]) } else { None };
                    self.basis.fill(u, &mut work, &mut gbuf, &mut cbuf, dg);
                    (&gbuf, &cbuf)
                }
                _ => (&self.g[i * m..(i + 1) * m], &self.cap[i * m..(i + 1) * m]),
            };
            let h = dot(&gamma, g_row);
            let big_h = dot(&gamma, c_row);
            let (value, ge, a, c) = match self.model {
                ModelKind::Ph => {
                    let ee = e.exp();
                    let value = if delta { h.ln() + e - big_h * ee } else { -big_h * ee };
                    (value, df - big_h * ee, if delta { 1.0 / h } else { 0.0 }, ee)
                }
                ModelKind::Po => {
                    let ee = e.exp();
                    let r = big_h * ee;
                    let value = if delta {
                        h.ln() + e - 2.0 * r.ln_1p()
                    } else {
                        -r.ln_1p()
                    };
                    let w = (1.0 + df) / (1.0 + r);
                    (value, df - w * r, if delta { 1.0 / h } else { 0.0 }, w * ee)
                }
                ModelKind::Aft => {
                    let u = times[i] * (-e).exp();
                    let clamped = u > self.basis.tau();
                    let value = if delta {
                        let lh = if clamped { AFT_LOG_FLOOR.ln() } else { h.ln() };
                        -e + lh - big_h
                    } else {
                        -big_h
                    };
                    let mut ge = u * h;
                    let mut a = 0.0;
                    if delta {
                        ge -= 1.0;
                        if !clamped {
                            let dh = if want_grad { dot(&gamma, &dbuf) } else { 0.0 };
                            ge -= u * dh / h;
                            a = 1.0 / h;
                        }
                    }
                    (value, ge, a, 1.0)
                }
            };
            ll[i] = if value.is_nan() { f64::NEG_INFINITY } else { value };
            if want_grad {
                d_eta[i] = ge;
                for k in 0..m {
                    d_phi[k] += a * g_row[k] - c * c_row[k];
                }
            }
        }

        let total = pairwise_sum(&ll);
        let total = if total.is_nan() { f64::NEG_INFINITY } else { total };
        if let Some(out) = pointwise {
            out[..n].copy_from_slice(&ll);
        }
        if let Some(grad) = grad {
            let x = self.data.design();
            for (j, g) in grad[..p].iter_mut().enumerate() {
                let col: Vec<f64> = x.column(j).iter().zip(&d_eta).map(|(v, d)| v * d).collect();
                *g = pairwise_sum(&col);
            }
            for k in 0..m {
                grad[p + k] = gamma[k] * d_phi[k];
            }
        }
        total
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for (x, y) in a.iter().zip(b) {
        s += x * y;
    }
    s
}

fn check_dims(params: &ParameterVector, data: &SurvivalDataset, basis: &BernsteinBasis) -> Result<()> {
    if params.beta.len() != data.p() {
        return Err(Error::DimensionMismatch { expected: data.p(), got: params.beta.len() });
    }
    if params.log_bp.len() != basis.degree() {
        return Err(Error::DimensionMismatch { expected: basis.degree(), got: params.log_bp.len() });
    }
    Ok(())
}

/// Log-likelihood of `model` at `params`. May be −∞.
pub fn loglik(model: ModelKind, params: &ParameterVector, data: &SurvivalDataset, basis: &BernsteinBasis) -> Result<f64> {
    check_dims(params, data, basis)?;
    Ok(BpLikelihood::new(model, data, *basis).loglik(&params.to_flat()))
}

pub fn loglik_ph(params: &ParameterVector, data: &SurvivalDataset, basis: &BernsteinBasis) -> Result<f64> {
    loglik(ModelKind::Ph, params, data, basis)
}

pub fn loglik_po(params: &ParameterVector, data: &SurvivalDataset, basis: &BernsteinBasis) -> Result<f64> {
    loglik(ModelKind::Po, params, data, basis)
}

pub fn loglik_aft(params: &ParameterVector, data: &SurvivalDataset, basis: &BernsteinBasis) -> Result<f64> {
    loglik(ModelKind::Aft, params, data, basis)
}

/// Gradient with respect to `(β, log γ)`.
pub fn grad(
    model: ModelKind,
    params: &ParameterVector,
    data: &SurvivalDataset,
    basis: &BernsteinBasis,
) -> Result<Vec<f64>> {
    check_dims(params, data, basis)?;
    let lik = BpLikelihood::new(model, data, *basis);
    let mut g = vec![0.0; lik.dim()];
    let v = lik.loglik_grad(&params.to_flat(), &mut g);
    if !v.is_finite() || g.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFiniteLikelihood);
    }
    Ok(g)
}

/// Parametric AFT families used as generators and reference fits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParametricFamily {
    /// Weibull AFT: `λ* = λ e^{-κη}`, `H = λ* t^κ`.
    Waft,
    /// Log-logistic AFT: `ν* = ν e^{-ζη}`, `H = log(1 + ν* t^ζ)`.
    Llaft,
}

impl fmt::Display for ParametricFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ParametricFamily::Waft => "WAFT",
            ParametricFamily::Llaft => "LLAFT",
        })
    }
}

impl FromStr for ParametricFamily {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "waft" | "weibull" => Ok(ParametricFamily::Waft),
            "llaft" | "loglogistic" | "log-logistic" => Ok(ParametricFamily::Llaft),
            other => Err(Error::Config(format!("unknown parametric family `{other}`"))),
        }
    }
}

/// Scale (`λ` or `ν`), shape (`κ` or `ζ`) and regression coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParametricParams {
    pub scale: f64,
    pub shape: f64,
    pub beta: Vec<f64>,
}

impl ParametricParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.scale > 0.0 && self.scale.is_finite()) {
            return Err(Error::InvalidParameter(format!("scale {} must be positive", self.scale)));
        }
        if !(self.shape > 0.0 && self.shape.is_finite()) {
            return Err(Error::InvalidParameter(format!("shape {} must be positive", self.shape)));
        }
        Ok(())
    }

    /// `[log scale, log shape, β]`.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut v = vec![self.scale.ln(), self.shape.ln()];
        v.extend_from_slice(&self.beta);
        v
    }

    pub fn from_flat(theta: &[f64]) -> Self {
        Self { scale: theta[0].exp(), shape: theta[1].exp(), beta: theta[2..].to_vec() }
    }

    /// Cumulative hazard at `t` for a subject with linear predictor `eta`.
    pub fn cum_hazard(&self, family: ParametricFamily, t: f64, eta: f64) -> f64 {
        let log_r = self.scale.ln() - self.shape * eta + self.shape * t.ln();
        match family {
            ParametricFamily::Waft => log_r.exp(),
            ParametricFamily::Llaft => log_r.exp().ln_1p(),
        }
    }
}

/// Parametric AFT log-likelihood over `θ = (log scale, log shape, β)`.
#[derive(Debug, Clone, Copy)]
pub struct ParametricLikelihood<'a> {
    family: ParametricFamily,
    data: &'a SurvivalDataset,
}

impl<'a> ParametricLikelihood<'a> {
    pub fn new(family: ParametricFamily, data: &'a SurvivalDataset) -> Self {
        Self { family, data }
    }

    pub fn family(&self) -> ParametricFamily {
        self.family
    }

    pub fn dim(&self) -> usize {
        self.data.p() + 2
    }

    pub fn loglik(&self, theta: &[f64]) -> f64 {
        self.evaluate(theta, None, None)
    }

    pub fn loglik_grad(&self, theta: &[f64], grad: &mut [f64]) -> f64 {
        self.evaluate(theta, Some(grad), None)
    }

    pub fn pointwise(&self, theta: &[f64], out: &mut [f64]) -> f64 {
        self.evaluate(theta, None, Some(out))
    }

    fn evaluate(&self, theta: &[f64], grad: Option<&mut [f64]>, pointwise: Option<&mut [f64]>) -> f64 {
        let (a, b) = (theta[0], theta[1]);
        let shape = b.exp();
        let eta = linear_predictor(self.data, &theta[2..]);
        let n = self.data.n();
        let mut ll = vec![0.0; n];
        let mut d_a = vec![0.0; n];
        let mut d_b = vec![0.0; n];
        let mut d_eta = vec![0.0; n];
        for i in 0..n {
            let y = self.data.times()[i];
            let ly = y.ln();
            let df = self.data.status()[i] as f64;
            let log_r = a - shape * eta[i] + shape * ly;
            let r = log_r.exp();
            let bracket;
            match self.family {
                ParametricFamily::Waft => {
                    ll[i] = df * (b + log_r - ly) - r;
                    bracket = df - r;
                }
                ParametricFamily::Llaft => {
                    ll[i] = df * (b + log_r - ly) - (1.0 + df) * r.ln_1p();
                    bracket = df - (1.0 + df) * r / (1.0 + r);
                }
            }
            if ll[i].is_nan() {
                ll[i] = f64::NEG_INFINITY;
            }
            d_a[i] = bracket;
            d_b[i] = df + shape * (ly - eta[i]) * bracket;
            d_eta[i] = -shape * bracket;
        }
        let total = pairwise_sum(&ll);
        if let Some(out) = pointwise {
            out[..n].copy_from_slice(&ll);
        }
        if let Some(grad) = grad {
            grad[0] = pairwise_sum(&d_a);
            grad[1] = pairwise_sum(&d_b);
            let x = self.data.design();
            for j in 0..self.data.p() {
                let col: Vec<f64> = x.column(j).iter().zip(&d_eta).map(|(v, d)| v * d).collect();
                grad[2 + j] = pairwise_sum(&col);
            }
        }
        total
    }
}

fn parametric_loglik(family: ParametricFamily, params: &ParametricParams, data: &SurvivalDataset) -> Result<f64> {
    params.validate()?;
    if params.beta.len() != data.p() {
        return Err(Error::DimensionMismatch { expected: data.p(), got: params.beta.len() });
    }
    Ok(ParametricLikelihood::new(family, data).loglik(&params.to_flat()))
}

/// Weibull AFT log-likelihood.
pub fn loglik_waft(params: &ParametricParams, data: &SurvivalDataset) -> Result<f64> {
    parametric_loglik(ParametricFamily::Waft, params, data)
}

/// Log-logistic AFT log-likelihood.
pub fn loglik_llaft(params: &ParametricParams, data: &SurvivalDataset) -> Result<f64> {
    parametric_loglik(ParametricFamily::Llaft, params, data)
}
