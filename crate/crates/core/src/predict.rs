//! Survivor curves at new covariate profiles, Kaplan-Meier and Nelson-Aalen
//! estimators, and Cox-Snell residuals.

use std::sync::Once;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::bayes::{hpd_interval, BayesFit};
use crate::bernstein::BernsteinBasis;
use crate::data::{StandardizationParams, SurvivalDataset};
use crate::error::{Error, Result};
use crate::likelihood::ModelKind;
use crate::mle::{MlFit, ParametricFit};

/// A fitted model that can report the cumulative hazard of a covariate profile.
pub trait SurvivalModel {
    /// Number of covariates a profile must carry.
    fn covariate_count(&self) -> usize;

    /// Upper end of the time range the baseline is estimated on, if bounded.
    fn horizon(&self) -> Option<f64> {
        None
    }

    /// `H(t | x)` at each of `times` for a natural-scale covariate row `x`.
    fn cumulative_hazard(&self, x: &[f64], times: &[f64]) -> Vec<f64>;
}

/// Scratch space for repeated basis evaluations.
struct BasisScratch {
    work: Vec<f64>,
    g: Vec<f64>,
    cap: Vec<f64>,
}

impl BasisScratch {
    fn new(m: usize) -> Self {
        Self { work: vec![0.0; m + 1], g: vec![0.0; m], cap: vec![0.0; m] }
    }

    fn cap(&mut self, basis: &BernsteinBasis, t: f64) -> &[f64] {
        basis.fill(t, &mut self.work, &mut self.g, &mut self.cap, None);
        &self.cap
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// BP cumulative hazard for linear predictor `eta` and BP coefficients `bp`.
fn bp_cumulative_hazard(
    model: ModelKind,
    basis: &BernsteinBasis,
    bp: &[f64],
    eta: f64,
    times: &[f64],
    scratch: &mut BasisScratch,
) -> Vec<f64> {
    times
        .iter()
        .map(|&t| match model {
            ModelKind::Ph => eta.exp() * dot(bp, scratch.cap(basis, t)),
            ModelKind::Po => (eta.exp() * dot(bp, scratch.cap(basis, t))).ln_1p(),
            ModelKind::Aft => dot(bp, scratch.cap(basis, t * (-eta).exp())),
        })
        .collect()
}

fn std_eta(standardization: &StandardizationParams, beta_std: &[f64], x: &[f64]) -> f64 {
    dot(beta_std, &standardization.apply_row(x))
}

impl SurvivalModel for MlFit {
    fn covariate_count(&self) -> usize {
        self.p()
    }

    fn horizon(&self) -> Option<f64> {
        Some(self.basis.tau())
    }

    fn cumulative_hazard(&self, x: &[f64], times: &[f64]) -> Vec<f64> {
        let eta = std_eta(&self.standardization, &self.params_std.beta, x);
        let bp = self.params_std.bp();
        let mut scratch = BasisScratch::new(self.basis.degree());
        bp_cumulative_hazard(self.model, &self.basis, &bp, eta, times, &mut scratch)
    }
}

impl SurvivalModel for ParametricFit {
    fn covariate_count(&self) -> usize {
        self.params.beta.len()
    }

    fn cumulative_hazard(&self, x: &[f64], times: &[f64]) -> Vec<f64> {
        let eta = dot(&self.params.beta, x);
        times.iter().map(|&t| self.params.cum_hazard(self.family, t, eta)).collect()
    }
}

/// Posterior-mean survivor curve, expressed as `-log` of the mean survival.
impl SurvivalModel for BayesFit {
    fn covariate_count(&self) -> usize {
        self.p()
    }

    fn horizon(&self) -> Option<f64> {
        Some(self.basis.tau())
    }

    fn cumulative_hazard(&self, x: &[f64], times: &[f64]) -> Vec<f64> {
        let curves = bayes_draw_curves(self, x, times);
        let draws = curves.len().max(1) as f64;
        (0..times.len())
            .map(|i| -(curves.iter().map(|c| c[i]).sum::<f64>() / draws).ln())
            .collect()
    }
}

/// Survivor curve of every kept posterior draw at profile `x`.
fn bayes_draw_curves(fit: &BayesFit, x: &[f64], times: &[f64]) -> Vec<Vec<f64>> {
    let p = fit.p();
    let z = fit.standardization.apply_row(x);
    let mut scratch = BasisScratch::new(fit.basis.degree());
    fit.std_draws()
        .map(|theta| {
            let eta = dot(&theta[..p], &z);
            let bp: Vec<f64> = theta[p..].iter().map(|v| v.exp()).collect();
            bp_cumulative_hazard(fit.model, &fit.basis, &bp, eta, times, &mut scratch)
                .into_iter()
                .map(|h| (-h).exp())
                .collect()
        })
        .collect()
}

fn check_inputs(model: &dyn SurvivalModel, newdata: &DMatrix<f64>, times: &[f64]) -> Result<()> {
    if newdata.ncols() != model.covariate_count() {
        return Err(Error::CovariateMismatch { expected: model.covariate_count(), got: newdata.ncols() });
    }
    if let Some(t) = times.iter().find(|t| !(t.is_finite() && **t >= 0.0)) {
        return Err(Error::OutOfRange(format!("evaluation time {t} must be finite and non-negative")));
    }
    if let Some(tau) = model.horizon() {
        if times.iter().any(|&t| t > tau) {
            static WARN: Once = Once::new();
            WARN.call_once(|| {
                log::warn!("times beyond the largest observed time {tau} use the curve value at that time");
            });
        }
    }
    Ok(())
}

/// Survival probabilities with one row per profile (row of `newdata`) and one
/// column per time.
pub fn survivor(model: &dyn SurvivalModel, newdata: &DMatrix<f64>, times: &[f64]) -> Result<DMatrix<f64>> {
    check_inputs(model, newdata, times)?;
    let mut out = DMatrix::zeros(newdata.nrows(), times.len());
    for r in 0..newdata.nrows() {
        let x: Vec<f64> = newdata.row(r).iter().copied().collect();
        for (c, h) in model.cumulative_hazard(&x, times).into_iter().enumerate() {
            out[(r, c)] = (-h).exp();
        }
    }
    Ok(out)
}

/// Pointwise posterior mean survivor curves with HPD bands.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurvivorBand {
    pub prob: f64,
    pub mean: DMatrix<f64>,
    pub lower: DMatrix<f64>,
    pub upper: DMatrix<f64>,
}

pub fn survivor_band(fit: &BayesFit, newdata: &DMatrix<f64>, times: &[f64], prob: f64) -> Result<SurvivorBand> {
    check_inputs(fit, newdata, times)?;
    let (k, nt) = (newdata.nrows(), times.len());
    let mut band = SurvivorBand {
        prob,
        mean: DMatrix::zeros(k, nt),
        lower: DMatrix::zeros(k, nt),
        upper: DMatrix::zeros(k, nt),
    };
    for r in 0..k {
        let x: Vec<f64> = newdata.row(r).iter().copied().collect();
        let curves = bayes_draw_curves(fit, &x, times);
        for c in 0..nt {
            let column: Vec<f64> = curves.iter().map(|s| s[c]).collect();
            let (lo, hi) = hpd_interval(&column, prob)?;
            band.mean[(r, c)] = column.iter().sum::<f64>() / column.len() as f64;
            band.lower[(r, c)] = lo;
            band.upper[(r, c)] = hi;
        }
    }
    Ok(band)
}

/// Right-continuous step function: the value at `t` is that of the greatest
/// knot not above `t`, or `initial` before the first knot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepFunction {
    pub knots: Vec<f64>,
    pub values: Vec<f64>,
    pub initial: f64,
}

impl StepFunction {
    pub fn eval(&self, t: f64) -> f64 {
        match self.knots.partition_point(|&k| k <= t) {
            0 => self.initial,
            i => self.values[i - 1],
        }
    }
}

/// Distinct event times with event counts and risk-set sizes. Censored
/// records tied with an event time count as at risk at that time.
fn risk_table(times: &[f64], status: &[u8]) -> Result<Vec<(f64, f64, f64)>> {
    if times.is_empty() {
        return Err(Error::EmptyData);
    }
    if times.len() != status.len() {
        return Err(Error::LengthMismatch(times.len(), status.len()));
    }
    let mut order: Vec<usize> = (0..times.len()).collect();
    order.sort_by(|&a, &b| times[a].total_cmp(&times[b]));
    let mut at_risk = times.len();
    let mut rows = Vec::new();
    let mut i = 0;
    while i < order.len() {
        let t = times[order[i]];
        let mut j = i;
        let mut deaths = 0usize;
        while j < order.len() && times[order[j]] == t {
            deaths += status[order[j]] as usize;
            j += 1;
        }
        if deaths > 0 {
            rows.push((t, deaths as f64, at_risk as f64));
        }
        at_risk -= j - i;
        i = j;
    }
    Ok(rows)
}

pub fn kaplan_meier_from(times: &[f64], status: &[u8]) -> Result<StepFunction> {
    let mut s = 1.0;
    let (knots, values) = risk_table(times, status)?
        .into_iter()
        .map(|(t, d, n)| {
            s *= 1.0 - d / n;
            (t, s)
        })
        .unzip();
    Ok(StepFunction { knots, values, initial: 1.0 })
}

pub fn nelson_aalen_from(times: &[f64], status: &[u8]) -> Result<StepFunction> {
    let mut h = 0.0;
    let (knots, values) = risk_table(times, status)?
        .into_iter()
        .map(|(t, d, n)| {
            h += d / n;
            (t, h)
        })
        .unzip();
    Ok(StepFunction { knots, values, initial: 0.0 })
}

pub fn kaplan_meier(data: &SurvivalDataset) -> Result<StepFunction> {
    kaplan_meier_from(data.times(), data.status())
}

pub fn nelson_aalen(data: &SurvivalDataset) -> Result<StepFunction> {
    nelson_aalen_from(data.times(), data.status())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoxSnell {
    pub residuals: Vec<f64>,
    pub status: Vec<u8>,
}

/// `r_i = H(y_i | x_i)` under the fitted model.
pub fn cox_snell_residuals(model: &dyn SurvivalModel, data: &SurvivalDataset) -> Result<CoxSnell> {
    if data.p() != model.covariate_count() {
        return Err(Error::CovariateMismatch { expected: model.covariate_count(), got: data.p() });
    }
    let design = data.design();
    let residuals = (0..data.n())
        .map(|i| {
            let x: Vec<f64> = design.row(i).iter().copied().collect();
            model.cumulative_hazard(&x, &data.times()[i..=i])[0]
        })
        .collect();
    Ok(CoxSnell { residuals, status: data.status().to_vec() })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualRow {
    pub residual: f64,
    pub status: u8,
    pub km: f64,
    pub exp_neg_r: f64,
}

/// Residuals in increasing order, each paired with the Kaplan-Meier estimate
/// of the residuals and the unit exponential survival `exp(-r)`.
pub fn residual_table(cs: &CoxSnell) -> Result<Vec<ResidualRow>> {
    let km = kaplan_meier_from(&cs.residuals, &cs.status)?;
    let mut order: Vec<usize> = (0..cs.residuals.len()).collect();
    order.sort_by(|&a, &b| cs.residuals[a].total_cmp(&cs.residuals[b]));
    Ok(order
        .into_iter()
        .map(|i| {
            let r = cs.residuals[i];
            ResidualRow { residual: r, status: cs.status[i], km: km.eval(r), exp_neg_r: (-r).exp() }
        })
        .collect())
}

/// Largest gap between the residual Kaplan-Meier curve and `exp(-r)`.
pub fn residual_sup_distance(rows: &[ResidualRow]) -> f64 {
    rows.iter().map(|r| (r.km - r.exp_neg_r).abs()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn km_hand_cases() {
        let km = kaplan_meier_from(&[1.0, 2.0, 3.0], &[1, 1, 1]).unwrap();
        assert_eq!(km.values.len(), 3);
        assert!((km.eval(1.0) - 2.0 / 3.0).abs() < 1e-15);
        assert!((km.eval(2.5) - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(km.eval(3.0), 0.0);
        assert_eq!(km.eval(0.5), 1.0);

        let km = kaplan_meier_from(&[2.0, 5.0], &[0, 0]).unwrap();
        assert!(km.knots.is_empty() && km.eval(10.0) == 1.0);

        let km = kaplan_meier_from(&[1.0, 1.0], &[0, 1]).unwrap();
        assert_eq!(km.eval(1.0), 0.5);
    }

    #[test]
    fn na_hand_cases() {
        let na = nelson_aalen_from(&[1.0, 2.0, 3.0, 4.0], &[1, 0, 0, 0]).unwrap();
        assert_eq!(na.eval(1.0), 0.25);
        assert_eq!(na.eval(0.0), 0.0);
        let na = nelson_aalen_from(&[1.0, 2.0], &[0, 0]).unwrap();
        assert_eq!(na.eval(5.0), 0.0);
        assert!(matches!(nelson_aalen_from(&[], &[]), Err(Error::EmptyData)));
    }
}
