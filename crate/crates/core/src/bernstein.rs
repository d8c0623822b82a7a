//! Bernstein polynomial basis, the rescaled beta-density basis `g` and its
//! integral `G`.
//!
//! For a degree `m` and upper bound `tau`, `g_k(t) = f_beta(t/tau; k, m-k+1) / tau`
//! and `G_k(t) = I_{t/tau}(k, m-k+1)` for `k = 1..=m`. Beyond `tau` the basis is
//! clamped: `g = 0`, `G = 1`.

use serde::{Deserialize, Serialize};
use statrs::function::factorial::ln_binomial;

use crate::error::{Error, Result};
use crate::special::beta_reg;

/// Above this degree binomial coefficients are handled in log space.
const DIRECT_DEGREE_LIMIT: usize = 30;

/// `b_{k,m}(x) = C(m,k) x^k (1-x)^(m-k)`.
pub fn basis(k: usize, m: usize, x: f64) -> Result<f64> {
    if k > m {
        return Err(Error::OutOfRange(format!("k={k} exceeds degree {m}")));
    }
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::OutOfRange(format!("x={x} outside [0,1]")));
    }
    Ok(basis_unchecked(k, m, x))
}

fn basis_unchecked(k: usize, m: usize, x: f64) -> f64 {
    if x == 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    if x == 1.0 {
        return if k == m { 1.0 } else { 0.0 };
    }
    if m <= DIRECT_DEGREE_LIMIT {
        binomial(m, k) * x.powi(k as i32) * (1.0 - x).powi((m - k) as i32)
    } else {
        let ln = ln_binomial(m as u64, k as u64) + k as f64 * x.ln() + (m - k) as f64 * (-x).ln_1p();
        ln.exp()
    }
}

fn binomial(m: usize, k: usize) -> f64 {
    let k = k.min(m - k);
    let mut c = 1.0;
    for i in 0..k {
        c = c * (m - i) as f64 / (i + 1) as f64;
    }
    c.round()
}

/// Derivative of `b_{k,m}` with respect to `x`.
pub fn basis_derivative(k: usize, m: usize, x: f64) -> Result<f64> {
    if m == 0 {
        return basis(k, m, x).map(|_| 0.0);
    }
    let left = if k >= 1 { basis(k - 1, m - 1, x)? } else { 0.0 };
    let right = if k < m { basis(k, m - 1, x)? } else { 0.0 };
    Ok(m as f64 * (left - right))
}

/// `g_{k,m}(t)` for `1 <= k <= m`; zero beyond `tau`.
pub fn g(k: usize, m: usize, t: f64, tau: f64) -> Result<f64> {
    check_index(k, m)?;
    check_tau(tau)?;
    if t > tau || t < 0.0 {
        return Ok(0.0);
    }
    Ok(m as f64 * basis_unchecked(k - 1, m - 1, t / tau) / tau)
}

/// `G_{k,m}(t) = ∫_0^t g_{k,m}(u) du`; one beyond `tau`.
pub fn g_integral(k: usize, m: usize, t: f64, tau: f64) -> Result<f64> {
    check_index(k, m)?;
    check_tau(tau)?;
    let x = (t / tau).clamp(0.0, 1.0);
    Ok(beta_reg(k as f64, (m - k + 1) as f64, x))
}

fn check_index(k: usize, m: usize) -> Result<()> {
    if m == 0 || k == 0 || k > m {
        return Err(Error::OutOfRange(format!("k={k} must lie in 1..={m}")));
    }
    Ok(())
}

fn check_tau(tau: f64) -> Result<()> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::OutOfRange(format!("tau={tau} must be positive")));
    }
    Ok(())
}

/// All Bernstein polynomials of degree `m` at `x`, computed by the
/// degree-raising recurrence `b_{j,d+1} = x b_{j-1,d} + (1-x) b_{j,d}`.
pub fn basis_all(m: usize, x: f64) -> Vec<f64> {
    let mut b = vec![0.0; m + 1];
    raise(&mut b, 0, m, x);
    b
}

// Raises `b` (length > to) from degree `from` to degree `to`. Degree 0 is
// initialized when `from == 0`.
fn raise(b: &mut [f64], from: usize, to: usize, x: f64) {
    if from == 0 {
        b[0] = 1.0;
    }
    let y = 1.0 - x;
    for d in from..to {
        b[d + 1] = x * b[d];
        for j in (1..=d).rev() {
            b[j] = y * b[j] + x * b[j - 1];
        }
        b[0] *= y;
    }
}

/// Degree and domain bound of a Bernstein baseline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BernsteinBasis {
    degree: usize,
    tau: f64,
}

impl BernsteinBasis {
    pub fn new(degree: usize, tau: f64) -> Result<Self> {
        if degree == 0 {
            return Err(Error::OutOfRange("degree must be at least 1".into()));
        }
        check_tau(tau)?;
        Ok(Self { degree, tau })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn g(&self, k: usize, t: f64) -> Result<f64> {
        g(k, self.degree, t, self.tau)
    }

    pub fn g_integral(&self, k: usize, t: f64) -> Result<f64> {
        g_integral(k, self.degree, t, self.tau)
    }

    /// Fills `g[k-1] = g_k(t)` and `cap[k-1] = G_k(t)` for all `k`, and the
    /// time derivative of `g_k` into `dg` when given. `work` needs `m + 1` slots.
    pub fn fill(&self, t: f64, work: &mut [f64], g: &mut [f64], cap: &mut [f64], dg: Option<&mut [f64]>) {
        let m = self.degree;
        debug_assert!(work.len() > m && g.len() >= m && cap.len() >= m);
        if t > self.tau {
            g[..m].fill(0.0);
            cap[..m].fill(1.0);
            if let Some(dg) = dg {
                dg[..m].fill(0.0);
            }
            return;
        }
        let x = (t / self.tau).max(0.0);
        let mf = m as f64;
        let mut reached = 0;
        if let Some(dg) = dg {
            if m >= 2 {
                raise(work, 0, m - 2, x);
                reached = m - 2;
                let c = mf * (mf - 1.0) / (self.tau * self.tau);
                for k in 1..=m {
                    let left = if k >= 2 { work[k - 2] } else { 0.0 };
                    let right = if k - 1 <= m - 2 { work[k - 1] } else { 0.0 };
                    dg[k - 1] = c * (left - right);
                }
            } else {
                dg[..m].fill(0.0);
            }
        }
        raise(work, reached, m - 1, x);
        let scale = mf / self.tau;
        for k in 1..=m {
            g[k - 1] = scale * work[k - 1];
        }
        raise(work, m - 1, m, x);
        let mut tail = 0.0;
        for k in (1..=m).rev() {
            tail += work[k];
            cap[k - 1] = tail.min(1.0);
        }
    }

    /// Convenience wrapper over [`fill`](Self::fill) returning `(g, G)`.
    pub fn eval(&self, t: f64) -> (Vec<f64>, Vec<f64>) {
        let m = self.degree;
        let mut work = vec![0.0; m + 1];
        let mut gv = vec![0.0; m];
        let mut cv = vec![0.0; m];
        self.fill(t, &mut work, &mut gv, &mut cv, None);
        (gv, cv)
    }
}

/// BP approximation `B(t) = Σ_k target(kτ/m) b_{k,m}(t/τ)`.
pub fn bp_approximate<F: Fn(f64) -> f64>(target: F, m: usize, tau: f64, t: f64) -> Result<f64> {
    let knots = knot_values(&target, m, tau)?;
    bp_approximate_values(&knots, tau, t)
}

/// Values of `target` at the `m + 1` equidistant knots `kτ/m`.
pub fn knot_values<F: Fn(f64) -> f64>(target: &F, m: usize, tau: f64) -> Result<Vec<f64>> {
    if m == 0 {
        return Err(Error::OutOfRange("degree must be at least 1".into()));
    }
    check_tau(tau)?;
    (0..=m)
        .map(|k| {
            let v = target(k as f64 * tau / m as f64);
            if v.is_finite() {
                Ok(v)
            } else {
                Err(Error::NonFiniteTarget { knot: k })
            }
        })
        .collect()
}

/// BP approximation from precomputed knot values (degree = `values.len() - 1`).
pub fn bp_approximate_values(values: &[f64], tau: f64, t: f64) -> Result<f64> {
    if values.len() < 2 {
        return Err(Error::OutOfRange("need at least two knot values".into()));
    }
    check_tau(tau)?;
    if !(0.0..=tau).contains(&t) {
        return Err(Error::OutOfRange(format!("t={t} outside [0, {tau}]")));
    }
    let b = basis_all(values.len() - 1, t / tau);
    Ok(values.iter().zip(&b).map(|(c, b)| c * b).sum())
}

/// Derivative of the BP approximation: `(m/τ) Σ_i (c_{i+1} - c_i) b_{i,m-1}(t/τ)`.
pub fn bp_derivative(values: &[f64], tau: f64, t: f64) -> Result<f64> {
    if values.len() < 2 {
        return Err(Error::OutOfRange("need at least two knot values".into()));
    }
    check_tau(tau)?;
    if !(0.0..=tau).contains(&t) {
        return Err(Error::OutOfRange(format!("t={t} outside [0, {tau}]")));
    }
    let m = values.len() - 1;
    let b = basis_all(m - 1, t / tau);
    let s: f64 = values.windows(2).zip(&b).map(|(w, b)| (w[1] - w[0]) * b).sum();
    Ok(m as f64 / tau * s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn endpoint_and_direct_value() {
        assert_eq!(basis(0, 4, 0.0).unwrap(), 1.0);
        assert!((basis(1, 4, 0.3).unwrap() - 0.4116).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(matches!(basis(5, 4, 0.3), Err(Error::OutOfRange(_))));
        assert!(matches!(basis(1, 4, 1.3), Err(Error::OutOfRange(_))));
        assert!(matches!(g(0, 4, 0.3, 1.0), Err(Error::OutOfRange(_))));
        assert!(matches!(g_integral(5, 4, 0.3, 1.0), Err(Error::OutOfRange(_))));
        assert!(BernsteinBasis::new(0, 1.0).is_err());
        assert!(BernsteinBasis::new(3, -1.0).is_err());
    }

    #[test]
    fn log_space_matches_recurrence_at_high_degree() {
        let b = basis_all(50, 0.41);
        for (k, v) in b.iter().enumerate() {
            let direct = basis(k, 50, 0.41).unwrap();
            assert!((v - direct).abs() < 1e-14 + 1e-12 * direct, "k={k}");
        }
    }

    #[test]
    fn uniform_degree_one() {
        let tau = 3.0;
        for &t in &[0.0, 0.5, 2.9, 3.0] {
            assert!((g(1, 1, t, tau).unwrap() - 1.0 / tau).abs() < 1e-15);
            assert!((g_integral(1, 1, t, tau).unwrap() - t / tau).abs() < 1e-14);
        }
        assert_eq!(g(2, 5, 0.0, 2.0).unwrap(), 0.0);
    }

    #[test]
    fn tail_clamp() {
        assert_eq!(g(3, 5, 2.5, 2.0).unwrap(), 0.0);
        assert_eq!(g_integral(3, 5, 2.5, 2.0).unwrap(), 1.0);
        let (gv, cv) = BernsteinBasis::new(5, 2.0).unwrap().eval(2.5);
        assert!(gv.iter().all(|&v| v == 0.0));
        assert!(cv.iter().all(|&v| v == 1.0));
    }

    #[test]
    fn vectorized_matches_scalar() {
        let basis = BernsteinBasis::new(12, 4.0).unwrap();
        let mut work = vec![0.0; 13];
        let (mut gv, mut cv, mut dg) = (vec![0.0; 12], vec![0.0; 12], vec![0.0; 12]);
        for &t in &[0.0, 0.3, 1.7, 3.99, 4.0] {
            basis.fill(t, &mut work, &mut gv, &mut cv, Some(&mut dg));
            for k in 1..=12 {
                assert!((gv[k - 1] - basis.g(k, t).unwrap()).abs() < 1e-12);
                assert!((cv[k - 1] - basis.g_integral(k, t).unwrap()).abs() < 1e-12);
                let expected = 12.0 / 4.0 * basis_derivative(k - 1, 11, t / 4.0).unwrap() / 4.0;
                assert!((dg[k - 1] - expected).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn approximation_examples() {
        assert!((bp_approximate(|_| 2.5, 7, 3.0, 1.1).unwrap() - 2.5).abs() < 1e-14);
        assert!((bp_approximate(|x| x, 8, 1.0, 0.5).unwrap() - 0.5).abs() < 1e-12);
        let values = knot_values(&|x: f64| x, 6, 1.0).unwrap();
        assert!((bp_derivative(&values, 1.0, 0.3).unwrap() - 1.0).abs() < 1e-10);
        let flat = vec![4.0; 9];
        assert_eq!(bp_derivative(&flat, 2.0, 1.0).unwrap(), 0.0);
        assert!(matches!(
            bp_approximate(|x| 1.0 / x, 4, 1.0, 0.5),
            Err(Error::NonFiniteTarget { knot: 0 })
        ));
    }
}
