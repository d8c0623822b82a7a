//! BFGS and L-BFGS minimization with a strong Wolfe line search.
//!
//! Objectives may return `+∞` (or NaN) for points outside their domain; the
//! line search treats such trial points as steps that went too far.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::Error;

const C1: f64 = 1e-4;
const C2: f64 = 0.9;
const MAX_LINE_SEARCH: usize = 40;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Bfgs,
    Lbfgs,
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Algorithm::Bfgs => "BFGS",
            Algorithm::Lbfgs => "LBFGS",
        })
    }
}

impl FromStr for Algorithm {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self, Error> {
        match s.to_ascii_lowercase().as_str() {
            "bfgs" => Ok(Algorithm::Bfgs),
            "lbfgs" | "l-bfgs" => Ok(Algorithm::Lbfgs),
            other => Err(Error::Config(format!("unknown algorithm `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimOptions {
    pub algorithm: Algorithm,
    pub max_iter: usize,
    /// Stop when the gradient's largest absolute entry falls below this.
    pub grad_tol: f64,
    /// Stop when an iteration improves f by less than `f_tol · max(1, |f|)`.
    pub f_tol: f64,
    /// L-BFGS history length.
    pub memory: usize,
}

impl Default for OptimOptions {
    fn default() -> Self {
        Self { algorithm: Algorithm::Bfgs, max_iter: 500, grad_tol: 1e-7, f_tol: 1e-14, memory: 10 }
    }
}

/// A failed line search still counts as convergence when `‖g‖∞` is within
/// this multiple of `grad_tol · max(1, |f|)`: the remaining decrease is below
/// floating-point resolution.
const STALL_FACTOR: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Termination {
    GradientTolerance,
    FunctionTolerance,
    /// No step improved `f`, but the gradient is negligible relative to `f`.
    Stalled,
    LineSearchFailed,
    MaxIterations,
    NonFiniteStart,
}

#[derive(Debug, Clone)]
pub struct OptimResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub grad: Vec<f64>,
    pub iterations: usize,
    pub evaluations: usize,
    pub termination: Termination,
}

impl OptimResult {
    pub fn converged(&self) -> bool {
        matches!(self.termination, Termination::GradientTolerance | Termination::FunctionTolerance | Termination::Stalled)
    }

    pub fn grad_norm(&self) -> f64 {
        inf_norm(&self.grad)
    }
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |a, b| a.max(b.abs()))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

struct Counted<F> {
    f: F,
    evals: usize,
}

impl<F: FnMut(&[f64], &mut [f64]) -> f64> Counted<F> {
    fn eval(&mut self, x: &[f64], g: &mut [f64]) -> f64 {
        self.evals += 1;
        let v = (self.f)(x, g);
        if v.is_nan() || g.iter().any(|x| !x.is_finite()) {
            f64::INFINITY
        } else {
            v
        }
    }
}

struct Point {
    alpha: f64,
    f: f64,
    d: f64,
    x: Vec<f64>,
    g: Vec<f64>,
}

/// Minimizes `f`, which writes the gradient into its second argument and
/// returns the objective value.
pub fn minimize<F>(f: F, x0: &[f64], opts: &OptimOptions) -> OptimResult
where
    F: FnMut(&[f64], &mut [f64]) -> f64,
{
    let n = x0.len();
    let mut obj = Counted { f, evals: 0 };
    let mut x = x0.to_vec();
    let mut g = vec![0.0; n];
    let mut fx = obj.eval(&x, &mut g);
    let result = |x: Vec<f64>, f: f64, grad: Vec<f64>, iterations: usize, evals: usize, t: Termination| {
        OptimResult { x, f, grad, iterations, evaluations: evals, termination: t }
    };
    if !fx.is_finite() {
        return result(x, fx, g, 0, obj.evals, Termination::NonFiniteStart);
    }
    if n == 0 || inf_norm(&g) <= opts.grad_tol {
        return result(x, fx, g, 0, obj.evals, Termination::GradientTolerance);
    }

    let mut h_inv: Option<DMatrix<f64>> = None;
    let mut history: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::new();
    let mut fresh = true;
    let mut retried = false;

    for iter in 1..=opts.max_iter {
        let dir = match opts.algorithm {
            Algorithm::Bfgs => match &h_inv {
                Some(h) => {
                    let d = -(h * DVector::from_column_slice(&g));
                    d.as_slice().to_vec()
                }
                None => g.iter().map(|v| -v).collect(),
            },
            Algorithm::Lbfgs => two_loop(&g, &history),
        };
        let mut dir = dir;
        let mut d0 = dot(&g, &dir);
        if !(d0 < 0.0) || !d0.is_finite() {
            h_inv = None;
            history.clear();
            fresh = true;
            dir = g.iter().map(|v| -v).collect();
            d0 = dot(&g, &dir);
        }
        let alpha0 = if fresh { (1.0 / inf_norm(&g)).min(1.0) } else { 1.0 };
        let step = line_search(&mut obj, &x, fx, &g, &dir, d0, alpha0);
        let Some(pt) = step else {
            if !fresh && !retried {
                h_inv = None;
                history.clear();
                fresh = true;
                retried = true;
                continue;
            }
            let stalled = inf_norm(&g) <= STALL_FACTOR * opts.grad_tol * fx.abs().max(1.0);
            let t = if stalled { Termination::Stalled } else { Termination::LineSearchFailed };
            return result(x, fx, g, iter, obj.evals, t);
        };
        retried = false;
        let s: Vec<f64> = pt.x.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = pt.g.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        let f_prev = fx;
        x = pt.x;
        g = pt.g;
        fx = pt.f;

        if inf_norm(&g) <= opts.grad_tol {
            return result(x, fx, g, iter, obj.evals, Termination::GradientTolerance);
        }
        if (f_prev - fx).abs() <= opts.f_tol * fx.abs().max(1.0) {
            return result(x, fx, g, iter, obj.evals, Termination::FunctionTolerance);
        }

        let yy = dot(&y, &y);
        if sy > 1e-10 * dot(&s, &s).sqrt() * yy.sqrt() {
            match opts.algorithm {
                Algorithm::Bfgs => {
                    let h = h_inv.get_or_insert_with(|| DMatrix::identity(n, n) * (sy / yy));
                    bfgs_update(h, &s, &y, sy);
                }
                Algorithm::Lbfgs => {
                    if history.len() == opts.memory.max(1) {
                        history.pop_front();
                    }
                    history.push_back((s, y, 1.0 / sy));
                }
            }
            fresh = false;
        }
    }
    result(x, fx, g, opts.max_iter, obj.evals, Termination::MaxIterations)
}

fn bfgs_update(h: &mut DMatrix<f64>, s: &[f64], y: &[f64], sy: f64) {
    let rho = 1.0 / sy;
    let s = DVector::from_column_slice(s);
    let y = DVector::from_column_slice(y);
    let hy = &*h * &y;
    let yhy = y.dot(&hy);
    // H + ρ²(yᵀHy)ssᵀ + ρ ssᵀ − ρ(Hy sᵀ + s yᵀH)
    let coef = rho * rho * yhy + rho;
    h.ger(coef, &s, &s, 1.0);
    h.ger(-rho, &hy, &s, 1.0);
    h.ger(-rho, &s, &hy, 1.0);
}

fn two_loop(g: &[f64], history: &VecDeque<(Vec<f64>, Vec<f64>, f64)>) -> Vec<f64> {
    let mut q = g.to_vec();
    let mut alphas = Vec::with_capacity(history.len());
    for (s, y, rho) in history.iter().rev() {
        let a = rho * dot(s, &q);
        for (qi, yi) in q.iter_mut().zip(y) {
            *qi -= a * yi;
        }
        alphas.push(a);
    }
    if let Some((s, y, _)) = history.back() {
        let scale = dot(s, y) / dot(y, y);
        q.iter_mut().for_each(|v| *v *= scale);
    }
    for ((s, y, rho), a) in history.iter().zip(alphas.iter().rev()) {
        let b = rho * dot(y, &q);
        for (qi, si) in q.iter_mut().zip(s) {
            *qi += (a - b) * si;
        }
    }
    q.iter().map(|v| -v).collect()
}

fn line_search<F>(
    obj: &mut Counted<F>,
    x: &[f64],
    f0: f64,
    g0: &[f64],
    dir: &[f64],
    d0: f64,
    alpha0: f64,
) -> Option<Point>
where
    F: FnMut(&[f64], &mut [f64]) -> f64,
{
    let probe = |obj: &mut Counted<F>, alpha: f64| -> Point {
        let xn: Vec<f64> = x.iter().zip(dir).map(|(a, d)| a + alpha * d).collect();
        let mut gn = vec![0.0; x.len()];
        let f = obj.eval(&xn, &mut gn);
        let d = if f.is_finite() { dot(&gn, dir) } else { f64::NAN };
        Point { alpha, f, d, x: xn, g: gn }
    };
    let origin = Point { alpha: 0.0, f: f0, d: d0, x: x.to_vec(), g: g0.to_vec() };
    let mut prev = origin;
    let mut alpha = alpha0;
    for i in 0..MAX_LINE_SEARCH {
        let cur = probe(obj, alpha);
        if !cur.f.is_finite() || cur.f > f0 + C1 * alpha * d0 || (i > 0 && cur.f >= prev.f) {
            return zoom(obj, &probe, f0, d0, prev, cur);
        }
        if cur.d.abs() <= -C2 * d0 {
            return Some(cur);
        }
        if cur.d >= 0.0 {
            return zoom(obj, &probe, f0, d0, cur, prev);
        }
        prev = cur;
        alpha *= 2.0;
    }
    None
}

fn zoom<F, P>(obj: &mut Counted<F>, probe: &P, f0: f64, d0: f64, mut lo: Point, mut hi: Point) -> Option<Point>
where
    F: FnMut(&[f64], &mut [f64]) -> f64,
    P: Fn(&mut Counted<F>, f64) -> Point,
{
    for _ in 0..MAX_LINE_SEARCH {
        let (a, b) = (lo.alpha.min(hi.alpha), lo.alpha.max(hi.alpha));
        let width = b - a;
        if width <= 1e-16 * b.max(1e-300) {
            break;
        }
        let mut alpha = if hi.f.is_finite() { cubic_min(&lo, &hi) } else { f64::NAN };
        if !(alpha.is_finite() && alpha > a + 0.1 * width && alpha < b - 0.1 * width) {
            alpha = 0.5 * (lo.alpha + hi.alpha);
        }
        let cur = probe(obj, alpha);
        if !cur.f.is_finite() || cur.f > f0 + C1 * alpha * d0 || cur.f >= lo.f {
            hi = cur;
        } else {
            if cur.d.abs() <= -C2 * d0 {
                return Some(cur);
            }
            if cur.d * (hi.alpha - lo.alpha) >= 0.0 {
                hi = lo;
            }
            lo = cur;
        }
    }
    // Sufficient decrease without the curvature condition is still progress.
    (lo.alpha > 0.0 && lo.f < f0).then_some(lo)
}

fn cubic_min(p: &Point, q: &Point) -> f64 {
    let (a, fa, da) = (p.alpha, p.f, p.d);
    let (b, fb, db) = (q.alpha, q.f, q.d);
    if !db.is_finite() {
        // quadratic through fa, da, fb
        let h = b - a;
        let denom = 2.0 * (fb - fa - da * h);
        return if denom > 0.0 { a - da * h * h / denom } else { f64::NAN };
    }
    let d1 = da + db - 3.0 * (fa - fb) / (a - b);
    let disc = d1 * d1 - da * db;
    if disc < 0.0 {
        return f64::NAN;
    }
    let d2 = (b - a).signum() * disc.sqrt();
    b - (b - a) * (db + d2 - d1) / (db - da + 2.0 * d2)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rosenbrock(x: &[f64], g: &mut [f64]) -> f64 {
        let (a, b) = (x[0], x[1]);
        g[0] = -2.0 * (1.0 - a) - 400.0 * a * (b - a * a);
        g[1] = 200.0 * (b - a * a);
        (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2)
    }

    #[test]
    fn rosenbrock_both_algorithms() {
        for algorithm in [Algorithm::Bfgs, Algorithm::Lbfgs] {
            let opts = OptimOptions { algorithm, max_iter: 1000, ..Default::default() };
            let r = minimize(rosenbrock, &[-1.2, 1.0], &opts);
            assert!(r.converged(), "{algorithm}: {:?}", r.termination);
            assert!((r.x[0] - 1.0).abs() < 1e-6 && (r.x[1] - 1.0).abs() < 1e-6, "{algorithm}: {:?}", r.x);
        }
    }

    #[test]
    fn quadratic_exact() {
        let a = [3.0, 1.0, 0.5];
        let f = |x: &[f64], g: &mut [f64]| {
            let mut v = 0.0;
            for i in 0..3 {
                g[i] = a[i] * (x[i] - i as f64);
                v += 0.5 * a[i] * (x[i] - i as f64).powi(2);
            }
            v
        };
        let r = minimize(f, &[5.0, 5.0, 5.0], &OptimOptions::default());
        assert!(r.converged());
        for i in 0..3 {
            assert!((r.x[i] - i as f64).abs() < 1e-7);
        }
    }

    #[test]
    fn infinite_region_is_avoided() {
        // −log x + x has its minimum at 1; x ≤ 0 is outside the domain
        let f = |x: &[f64], g: &mut [f64]| {
            if x[0] <= 0.0 {
                g[0] = 0.0;
                return f64::INFINITY;
            }
            g[0] = 1.0 - 1.0 / x[0];
            x[0] - x[0].ln()
        };
        let r = minimize(f, &[0.05], &OptimOptions::default());
        assert!(r.converged());
        assert!((r.x[0] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn non_finite_start() {
        let f = |_: &[f64], _: &mut [f64]| f64::INFINITY;
        let r = minimize(f, &[0.0], &OptimOptions::default());
        assert_eq!(r.termination, Termination::NonFiniteStart);
    }
}
