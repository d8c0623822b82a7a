mod common;

use bpsurv::bernstein::{basis, basis_all, basis_derivative, g, g_integral};
use proptest::prelude::*;

proptest! {
    #[test]
    fn partition_of_unity(m in 1usize..=60, x in 0.0f64..=1.0) {
        let s: f64 = basis_all(m, x).iter().sum();
        prop_assert!((s - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn basis_is_nonnegative(m in 1usize..=60, x in 0.0f64..=1.0) {
        prop_assert!(basis_all(m, x).iter().all(|&b| b >= 0.0));
    }

    #[test]
    fn symmetry(m in 1usize..=50, k in 0usize..=50, x in 0.0f64..=1.0) {
        let k = k.min(m);
        let a = basis(k, m, x).unwrap();
        let b = basis(m - k, m, 1.0 - x).unwrap();
        prop_assert!((a - b).abs() <= 1e-10);
    }

    #[test]
    fn derivative_matches_finite_difference(m in 1usize..=30, k in 0usize..=30, x in 0.01f64..0.99) {
        let k = k.min(m);
        let h = 1e-6;
        let fd = (basis(k, m, x + h).unwrap() - basis(k, m, x - h).unwrap()) / (2.0 * h);
        let d = basis_derivative(k, m, x).unwrap();
        prop_assert!((d - fd).abs() <= 1e-5 * d.abs().max(1.0));
    }

    #[test]
    fn g_integral_is_a_cdf(m in 1usize..=40, k in 1usize..=40, t1 in 0.0f64..3.0, t2 in 0.0f64..3.0) {
        let k = k.min(m);
        let tau = 2.0;
        let (lo, hi) = if t1 < t2 { (t1, t2) } else { (t2, t1) };
        let a = g_integral(k, m, lo, tau).unwrap();
        let b = g_integral(k, m, hi, tau).unwrap();
        prop_assert!((0.0..=1.0).contains(&a) && (0.0..=1.0).contains(&b));
        prop_assert!(a <= b + 1e-15);
        prop_assert_eq!(g_integral(k, m, tau + 1.0, tau).unwrap(), 1.0);
    }

    #[test]
    fn g_integral_matches_quadrature(m in 1usize..=30, k in 1usize..=30, frac in 0.0f64..=1.0) {
        let k = k.min(m);
        let tau = 3.5;
        let t = frac * tau;
        let q = common::adaptive_simpson(&|u| g(k, m, u, tau).unwrap(), 0.0, t, 1e-12);
        prop_assert!((q - g_integral(k, m, t, tau).unwrap()).abs() <= 1e-8);
    }
}

#[test]
fn g_density_integrates_to_one() {
    for m in [1, 2, 5, 17, 40] {
        for k in 1..=m {
            let q = common::adaptive_simpson(&|u| g(k, m, u, 2.0).unwrap(), 0.0, 2.0, 1e-12);
            assert!((q - 1.0).abs() < 1e-9, "m={m} k={k}: {q}");
        }
    }
}
