//! HPD intervals and convergence diagnostics.

use crate::error::{Error, Result};
use crate::numeric::{mean, variance};

/// Shortest interval over the sorted samples that contains `⌈prob·S⌉` draws.
pub fn hpd_interval(samples: &[f64], prob: f64) -> Result<(f64, f64)> {
    if samples.len() < 10 {
        return Err(Error::TooFewSamples { needed: 10, got: samples.len() });
    }
    if !(prob > 0.0 && prob < 1.0) {
        return Err(Error::Config(format!("probability {prob} outside (0,1)")));
    }
    let mut v = samples.to_vec();
    v.sort_by(f64::total_cmp);
    let s = v.len();
    let w = ((prob * s as f64).ceil() as usize).clamp(1, s);
    let mut best = 0;
    let mut width = f64::INFINITY;
    for i in 0..=s - w {
        let d = v[i + w - 1] - v[i];
        if d < width {
            width = d;
            best = i;
        }
    }
    Ok((v[best], v[best + w - 1]))
}

fn check_chains(chains: &[&[f64]], min_chains: usize) -> Result<usize> {
    if chains.len() < min_chains {
        return Err(Error::InsufficientChains);
    }
    let len = chains[0].len();
    if chains.iter().any(|c| c.len() != len) {
        return Err(Error::InsufficientChains);
    }
    if len < 10 {
        return Err(Error::TooFewSamples { needed: 10, got: len });
    }
    Ok(len)
}

/// Split-chain potential scale reduction factor.
pub fn rhat(chains: &[&[f64]]) -> Result<f64> {
    let len = check_chains(chains, 2)?;
    let half = len / 2;
    let mut pieces: Vec<&[f64]> = Vec::with_capacity(2 * chains.len());
    for c in chains {
        pieces.push(&c[..half]);
        pieces.push(&c[len - half..]);
    }
    let n = half as f64;
    let m = pieces.len() as f64;
    let means: Vec<f64> = pieces.iter().map(|c| mean(c)).collect();
    let grand = mean(&means);
    let b = n / (m - 1.0) * means.iter().map(|x| (x - grand).powi(2)).sum::<f64>();
    let w = pieces.iter().map(|c| variance(c)).sum::<f64>() / m;
    if w == 0.0 {
        return Ok(if b == 0.0 { 1.0 } else { f64::INFINITY });
    }
    let var_plus = (n - 1.0) / n * w + b / n;
    Ok((var_plus / w).sqrt())
}

fn autocovariance(x: &[f64], lag: usize, mu: f64) -> f64 {
    let n = x.len();
    let mut s = 0.0;
    for t in 0..n - lag {
        s += (x[t] - mu) * (x[t + lag] - mu);
    }
    s / n as f64
}

/// Effective sample size from the multi-chain autocorrelation, truncated by
/// Geyer's initial positive sequence.
pub fn n_eff(chains: &[&[f64]]) -> Result<f64> {
    let n = check_chains(chains, 1)?;
    let m = chains.len();
    let total = (n * m) as f64;
    let means: Vec<f64> = chains.iter().map(|c| mean(c)).collect();
    let w = chains.iter().map(|c| variance(c)).sum::<f64>() / m as f64;
    let nf = n as f64;
    let var_plus = if m > 1 {
        let b = nf * variance(&means);
        (nf - 1.0) / nf * w + b / nf
    } else {
        w
    };
    if !(var_plus > 0.0) {
        return Ok(total);
    }
    let rho = |lag: usize| -> f64 {
        let acov = chains.iter().zip(&means).map(|(c, &mu)| autocovariance(c, lag, mu)).sum::<f64>() / m as f64;
        1.0 - (w - acov) / var_plus
    };
    let mut sum = 0.0;
    let mut prev_pair = f64::INFINITY;
    let mut k = 0;
    while 2 * k + 1 < n {
        let pair = rho(2 * k) + rho(2 * k + 1);
        if pair <= 0.0 {
            break;
        }
        let pair = pair.min(prev_pair);
        sum += pair;
        prev_pair = pair;
        k += 1;
    }
    let tau = (-1.0 + 2.0 * sum).max(1.0 / total.log10().max(1.0));
    Ok(total / tau)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::stream_rng;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn normals(seed: u64, n: usize) -> Vec<f64> {
        let mut rng = stream_rng(seed, 0);
        (0..n).map(|_| rng.sample(StandardNormal)).collect()
    }

    #[test]
    fn hpd_constant_and_normal() {
        assert_eq!(hpd_interval(&[2.0; 20], 0.9).unwrap(), (2.0, 2.0));
        let x = normals(3, 100_000);
        let (lo, hi) = hpd_interval(&x, 0.95).unwrap();
        // the width is sharp, the location of the shortest window is not
        assert!((hi - lo - 3.92).abs() < 0.03 && (hi + lo).abs() < 0.15, "{lo} {hi}");
        assert!(matches!(hpd_interval(&[1.0; 5], 0.9), Err(Error::TooFewSamples { .. })));
    }

    #[test]
    fn rhat_examples() {
        let x = normals(1, 1000);
        let r = rhat(&[&x, &x]).unwrap();
        assert!((0.99..=1.01).contains(&r), "{r}");
        let y: Vec<f64> = normals(2, 1000).iter().map(|v| v + 10.0).collect();
        assert!(rhat(&[&x, &y]).unwrap() > 2.0);
        assert!(matches!(rhat(&[&x]), Err(Error::InsufficientChains)));
    }

    #[test]
    fn n_eff_of_iid_draws() {
        let a = normals(5, 2000);
        let b = normals(6, 2000);
        let e = n_eff(&[&a, &b]).unwrap();
        assert!((e / 4000.0 - 1.0).abs() < 0.15, "{e}");
    }

    #[test]
    fn n_eff_of_autocorrelated_chain_is_smaller() {
        let z = normals(7, 4000);
        let mut x = vec![0.0; 4000];
        for t in 1..4000 {
            x[t] = 0.9 * x[t - 1] + z[t];
        }
        let e = n_eff(&[&x]).unwrap();
        // AR(1) with φ=0.9: n(1-φ)/(1+φ) ≈ 210
        assert!(e > 100.0 && e < 400.0, "{e}");
    }
}
