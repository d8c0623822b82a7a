//! DIC, WAIC and LPML from a draws × observations log-likelihood matrix.

use serde::{Deserialize, Serialize};

use crate::numeric::{logsumexp, mean, pairwise_sum, variance};

/// Pointwise log-likelihood, row-major with one row per draw.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PointwiseLoglik {
    pub draws: usize,
    pub n: usize,
    pub values: Vec<f64>,
}

impl PointwiseLoglik {
    pub fn new(draws: usize, n: usize, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), draws * n, "pointwise matrix has wrong size");
        Self { draws, n, values }
    }

    pub fn row(&self, s: usize) -> &[f64] {
        &self.values[s * self.n..(s + 1) * self.n]
    }

    /// Log-likelihood of observation `i` across draws.
    pub fn column(&self, i: usize) -> Vec<f64> {
        (0..self.draws).map(|s| self.values[s * self.n + i]).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Waic {
    pub lppd: f64,
    pub p_waic: f64,
    pub elpd: f64,
    /// `−2 (lppd − p_waic)`.
    pub waic: f64,
}

/// WAIC with `p_waic = Σ_i var_s log p(y_i|θ_s)` (n−1 divisor; 0 for one draw).
pub fn waic(ll: &PointwiseLoglik) -> Waic {
    let ln_s = (ll.draws as f64).ln();
    let mut lppd = Vec::with_capacity(ll.n);
    let mut pw = Vec::with_capacity(ll.n);
    for i in 0..ll.n {
        let col = ll.column(i);
        lppd.push(logsumexp(&col) - ln_s);
        pw.push(variance(&col));
    }
    let lppd = pairwise_sum(&lppd);
    let p_waic = pairwise_sum(&pw);
    let elpd = lppd - p_waic;
    Waic { lppd, p_waic, elpd, waic: -2.0 * elpd }
}

/// Log pseudo-marginal likelihood `Σ_i log CPO_i`, CPO by harmonic mean in log space.
pub fn lpml(ll: &PointwiseLoglik) -> f64 {
    let ln_s = (ll.draws as f64).ln();
    let terms: Vec<f64> = (0..ll.n)
        .map(|i| {
            let neg: Vec<f64> = ll.column(i).iter().map(|v| -v).collect();
            -(logsumexp(&neg) - ln_s)
        })
        .collect();
    pairwise_sum(&terms)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Dic {
    pub mean_deviance: f64,
    pub p_d: f64,
    pub dic: f64,
}

/// DIC `= D̄ + p_D`, `p_D = D̄ − D(θ̄)`; `loglik_at_mean` is the total
/// log-likelihood at the posterior mean.
pub fn dic(ll: &PointwiseLoglik, loglik_at_mean: f64) -> Dic {
    let dev: Vec<f64> = (0..ll.draws).map(|s| -2.0 * pairwise_sum(ll.row(s))).collect();
    let mean_deviance = mean(&dev);
    let p_d = mean_deviance + 2.0 * loglik_at_mean;
    Dic { mean_deviance, p_d, dic: mean_deviance + p_d }
}

/// All model-comparison criteria, each on the "smaller is better" scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Criteria {
    pub dic: Dic,
    pub waic: Waic,
    pub lpml: f64,
    /// `−2 · LPML`.
    pub neg2_lpml: f64,
}

impl Criteria {
    pub fn compute(ll: &PointwiseLoglik, loglik_at_mean: f64) -> Self {
        let l = lpml(ll);
        let c = Self { dic: dic(ll, loglik_at_mean), waic: waic(ll), lpml: l, neg2_lpml: -2.0 * l };
        if !(c.dic.dic.is_finite() && c.waic.waic.is_finite() && c.lpml.is_finite()) {
            log::warn!("non-finite model criterion (DIC {}, WAIC {}, LPML {})", c.dic.dic, c.waic.waic, c.lpml);
        }
        c
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_draw() {
        let ll = PointwiseLoglik::new(1, 3, vec![-1.0, -2.0, -0.5]);
        let w = waic(&ll);
        assert_eq!(w.p_waic, 0.0);
        assert!((w.waic - 7.0).abs() < 1e-12);
        assert!((lpml(&ll) + 3.5).abs() < 1e-12);
    }

    #[test]
    fn hand_two_by_two() {
        // draws (rows) × observations (columns)
        let ll = PointwiseLoglik::new(2, 2, vec![-1.0, -2.0, -3.0, -4.0]);
        let lppd0 = ((-1f64).exp() + (-3f64).exp()).ln() - 2f64.ln();
        let lppd1 = ((-2f64).exp() + (-4f64).exp()).ln() - 2f64.ln();
        let p = 2.0 + 2.0; // var of (-1,-3) and (-2,-4), n−1 divisor
        let w = waic(&ll);
        assert!((w.lppd - (lppd0 + lppd1)).abs() < 1e-12);
        assert!((w.p_waic - p).abs() < 1e-12);
        assert!((w.waic + 2.0 * (lppd0 + lppd1 - p)).abs() < 1e-12);
        let cpo0 = 1.0 / ((1f64.exp() + 3f64.exp()) / 2.0);
        let cpo1 = 1.0 / ((2f64.exp() + 4f64.exp()) / 2.0);
        assert!((lpml(&ll) - (cpo0.ln() + cpo1.ln())).abs() < 1e-12);
        let d = dic(&ll, -4.0);
        // deviances 6 and 14, D̄ = 10, D(θ̄) = 8
        assert!((d.mean_deviance - 10.0).abs() < 1e-12);
        assert!((d.p_d - 2.0).abs() < 1e-12);
        assert!((d.dic - 12.0).abs() < 1e-12);
    }
}
