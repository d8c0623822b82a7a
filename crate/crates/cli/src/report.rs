//! Text, JSON and CSV renderings of fitted models.

use std::fmt::Write as _;

use bpsurv::bayes::{ExpSummary, ParamSummary};
use bpsurv::mle::{coefficient_table, lr_test, wald_test, Coefficient, TestResult};
use bpsurv::bayes::Criteria;
use bpsurv::{BayesFit, MlFit, ModelKind, ParametricFamily, ParametricFit, PosteriorSummary};
use serde::Serialize;

fn model_title(model: ModelKind) -> &'static str {
    match model {
        ModelKind::Ph => "Proportional Hazards",
        ModelKind::Po => "Proportional Odds",
        ModelKind::Aft => "Accelerated Failure Time",
    }
}

fn family_title(family: ParametricFamily) -> &'static str {
    match family {
        ParametricFamily::Waft => "Weibull Accelerated Failure Time",
        ParametricFamily::Llaft => "Log-logistic Accelerated Failure Time",
    }
}

fn stars(p: f64) -> &'static str {
    match p {
        p if p < 0.001 => "***",
        p if p < 0.01 => "**",
        p if p < 0.05 => "*",
        p if p < 0.1 => ".",
        _ => "",
    }
}

fn fmt_p(p: f64) -> String {
    if p >= 1e-4 || p == 0.0 || !p.is_finite() {
        format!("{p:.4}")
    } else {
        format!("{p:.1e}")
    }
}

fn name_width(names: impl Iterator<Item = usize>) -> usize {
    names.max().unwrap_or(0).max(4)
}

fn coefficient_block(out: &mut String, rows: &[Coefficient]) {
    let w = name_width(rows.iter().map(|c| c.name.len()));
    let _ = writeln!(out, "{:w$} {:>10} {:>10} {:>10} {:>8} {:>9}", "", "coef", "exp(coef)", "se(coef)", "z", "Pr(>|z|)");
    for c in rows {
        let _ = writeln!(
            out,
            "{:w$} {:>10.4} {:>10.4} {:>10.4} {:>8.4} {:>9.4} {}",
            c.name,
            c.coef,
            c.exp_coef,
            c.se,
            c.z,
            c.p_value,
            stars(c.p_value)
        );
    }
    out.push_str("---\nSignif. codes:  0 '***' 0.001 '**' 0.01 '*' 0.05 '.' 0.1 ' ' 1\n");
}

/// Rows with missing standard errors when the information matrix is unusable.
fn point_only(names: &[String], beta: &[f64]) -> Vec<Coefficient> {
    names
        .iter()
        .zip(beta)
        .map(|(name, &coef)| Coefficient {
            name: name.clone(),
            coef,
            exp_coef: coef.exp(),
            se: f64::NAN,
            z: f64::NAN,
            p_value: f64::NAN,
            lower: f64::NAN,
            upper: f64::NAN,
        })
        .collect()
}

fn test_line(label: &str, t: &TestResult) -> String {
    format!("{label:<21}= {:.1} on {} df, p={}\n", t.statistic, t.df, fmt_p(t.p_value))
}

#[derive(Debug, Serialize)]
pub struct MlReport {
    pub model: ModelKind,
    pub n: usize,
    pub events: usize,
    pub degree: usize,
    pub tau: f64,
    pub level: f64,
    pub loglik: f64,
    pub loglik_null: f64,
    pub converged: bool,
    pub hessian_finite: bool,
    pub coefficients: Vec<Coefficient>,
    pub bp_coefficients: Vec<f64>,
    pub lr_test: TestResult,
    pub wald_test: Option<TestResult>,
}

impl MlReport {
    pub fn new(fit: &MlFit, level: f64) -> bpsurv::Result<Self> {
        let coefficients = match coefficient_table(fit, level) {
            Ok(rows) => rows,
            Err(bpsurv::Error::IntervalsUnavailable) => point_only(&fit.column_names, &fit.params_nat.beta),
            Err(e) => return Err(e),
        };
        Ok(Self {
            model: fit.model,
            n: fit.n,
            events: fit.events,
            degree: fit.basis.degree(),
            tau: fit.basis.tau(),
            level,
            loglik: fit.loglik,
            loglik_null: fit.loglik_null,
            converged: fit.converged,
            hessian_finite: fit.hessian_finite,
            coefficients,
            bp_coefficients: fit.params_nat.bp(),
            lr_test: lr_test(fit),
            wald_test: wald_test(fit).ok(),
        })
    }

    pub fn text(&self) -> String {
        let mut out = format!("Bernstein Polynomial based {} model\n\n", model_title(self.model));
        let _ = writeln!(out, "  n= {}, number of events= {}\n", self.n, self.events);
        coefficient_block(&mut out, &self.coefficients);
        out.push('\n');
        out.push_str(&test_line("Likelihood ratio test", &self.lr_test));
        match &self.wald_test {
            Some(w) => out.push_str(&test_line("Wald test", w)),
            None => out.push_str("Wald test            = unavailable (information matrix not finite)\n"),
        }
        let _ = writeln!(out, "\nDegree {}, tau {:.4}, log-likelihood {:.4}", self.degree, self.tau, self.loglik);
        if !self.converged {
            out.push_str("Warning: optimizer did not converge\n");
        }
        out
    }
}

#[derive(Debug, Serialize)]
pub struct ParametricReport {
    pub family: ParametricFamily,
    pub n: usize,
    pub events: usize,
    pub level: f64,
    pub scale: f64,
    pub shape: f64,
    pub loglik: f64,
    pub converged: bool,
    pub hessian_finite: bool,
    pub coefficients: Vec<Coefficient>,
    pub wald_test: Option<TestResult>,
}

impl ParametricReport {
    pub fn new(fit: &ParametricFit, level: f64) -> bpsurv::Result<Self> {
        let coefficients = match fit.coefficient_table(level) {
            Ok(rows) => rows,
            Err(bpsurv::Error::IntervalsUnavailable) => point_only(&fit.column_names, &fit.params.beta),
            Err(e) => return Err(e),
        };
        Ok(Self {
            family: fit.family,
            n: fit.n,
            events: fit.events,
            level,
            scale: fit.params.scale,
            shape: fit.params.shape,
            loglik: fit.loglik,
            converged: fit.converged,
            hessian_finite: fit.hessian_finite,
            coefficients,
            wald_test: fit.wald_test().ok(),
        })
    }

    pub fn text(&self) -> String {
        let mut out = format!("Parametric {} model\n\n", family_title(self.family));
        let _ = writeln!(out, "  n= {}, number of events= {}\n", self.n, self.events);
        coefficient_block(&mut out, &self.coefficients);
        out.push('\n');
        if let Some(w) = &self.wald_test {
            out.push_str(&test_line("Wald test", w));
        }
        let _ = writeln!(out, "\nScale {:.4}, shape {:.4}, log-likelihood {:.4}", self.scale, self.shape, self.loglik);
        if !self.converged {
            out.push_str("Warning: optimizer did not converge\n");
        }
        out
    }
}

#[derive(Debug, Serialize)]
pub struct BayesReport {
    pub model: ModelKind,
    pub n: usize,
    pub events: usize,
    pub degree: usize,
    pub tau: f64,
    pub chains: usize,
    pub iter: usize,
    pub warmup: usize,
    pub acceptance_rates: Vec<f64>,
    pub priors: bpsurv::PriorSpec,
    pub summary: PosteriorSummary,
}

fn param_block(out: &mut String, rows: &[&ParamSummary], prob: f64) {
    let w = name_width(rows.iter().map(|r| r.name.len()));
    let pct = format!("{:.0}%", prob * 100.0);
    let _ = writeln!(
        out,
        "{:w$} {:>9} {:>9} {:>9} {:>9} {:>9} {:>10} {:>10} {:>7} {:>7}",
        "",
        "mode",
        "mean",
        "se_mean",
        "sd",
        "median",
        format!("lo{pct}HPD"),
        format!("hi{pct}HPD"),
        "n_eff",
        "rhat"
    );
    for r in rows {
        let _ = writeln!(
            out,
            "{:w$} {:>9.4} {:>9.4} {:>9.4} {:>9.4} {:>9.4} {:>10.4} {:>10.4} {:>7.0} {:>7.4}",
            r.name, r.mode, r.mean, r.se_mean, r.sd, r.median, r.hpd_lower, r.hpd_upper, r.n_eff, r.rhat
        );
    }
}

fn exp_block(out: &mut String, rows: &[ExpSummary], label: &str) {
    let w = name_width(rows.iter().map(|r| r.name.len()));
    let _ = writeln!(
        out,
        "{:w$} {:>10} {:>10} {:>10} {:>10} {:>10}",
        label, "mean_exp", "median_exp", "sd_exp", "lowerHPD", "upperHPD"
    );
    for r in rows {
        let _ = writeln!(
            out,
            "{:w$} {:>10.4} {:>10.4} {:>10.4} {:>10.4} {:>10.4}",
            r.name, r.mean_exp, r.median_exp, r.sd_exp, r.hpd_lower_exp, r.hpd_upper_exp
        );
    }
}

fn criteria_block(out: &mut String, c: &Criteria) {
    let _ = writeln!(out, "{:10} {:>10}", "", "Estimate");
    let rows = [
        ("elpd_waic", c.waic.elpd),
        ("p_waic", c.waic.p_waic),
        ("waic", c.waic.waic),
        ("lpml", c.lpml),
        ("-2lpml", c.neg2_lpml),
        ("dbar", c.dic.mean_deviance),
        ("p_d", c.dic.p_d),
        ("dic", c.dic.dic),
    ];
    for (name, v) in rows {
        let _ = writeln!(out, "{name:10} {v:>10.4}");
    }
}

impl BayesReport {
    pub fn new(fit: &BayesFit, prob: f64) -> bpsurv::Result<Self> {
        Ok(Self {
            model: fit.model,
            n: fit.n,
            events: fit.events,
            degree: fit.basis.degree(),
            tau: fit.basis.tau(),
            chains: fit.config.chains,
            iter: fit.config.iter,
            warmup: fit.config.warmup,
            acceptance_rates: fit.acceptance_rates(),
            priors: fit.priors,
            summary: bpsurv::summarize(fit, prob)?,
        })
    }

    pub fn text(&self) -> String {
        let mut out = format!("Bayesian Bernstein Polynomial based {} model\n\n", model_title(self.model));
        let _ = writeln!(out, "  n= {}, number of events= {}", self.n, self.events);
        let _ = writeln!(
            out,
            "  {} chains, {} iterations ({} warmup), degree {}, tau {:.4}\n",
            self.chains, self.iter, self.warmup, self.degree, self.tau
        );
        let p = self.summary.exp.len();
        let beta: Vec<&ParamSummary> = self.summary.params.iter().take(p).collect();
        param_block(&mut out, &beta, self.summary.prob);
        out.push_str("---\n");
        exp_block(&mut out, &self.summary.exp, self.model.ratio_label());
        out.push_str("---\n");
        criteria_block(&mut out, &self.summary.criteria);
        let rates: Vec<String> = self.acceptance_rates.iter().map(|a| format!("{a:.3}")).collect();
        let _ = writeln!(out, "\nAcceptance rates: {}", rates.join(" "));
        out
    }
}

/// CSV rows of a coefficient table.
pub fn coefficients_csv(rows: &[Coefficient]) -> bpsurv::Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    finish(w)
}

pub fn params_csv(rows: &[ParamSummary]) -> bpsurv::Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    finish(w)
}

pub fn finish(w: csv::Writer<Vec<u8>>) -> bpsurv::Result<String> {
    let bytes = w.into_inner().map_err(|e| bpsurv::Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn p_value_formatting() {
        assert_eq!(fmt_p(0.5), "0.5000");
        assert_eq!(fmt_p(6.1e-4), "0.0006");
        assert_eq!(fmt_p(2.7e-5), "2.7e-5");
        assert_eq!(stars(2.7e-5), "***");
        assert_eq!(stars(0.2), "");
    }
}
