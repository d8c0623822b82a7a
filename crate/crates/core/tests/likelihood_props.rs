mod common;

use bpsurv::likelihood::{loglik_aft, loglik_ph, BpLikelihood, ParametricLikelihood};
use bpsurv::{BernsteinBasis, ModelKind, ParameterVector, ParametricFamily};
use proptest::prelude::*;

fn model_of(i: u8) -> ModelKind {
    [ModelKind::Ph, ModelKind::Po, ModelKind::Aft][i as usize % 3]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn analytic_gradient_matches_finite_differences(
        seed in 0u64..1_000_000, which in 0u8..3, n in 5usize..=50, p in 0usize..=4, m in 1usize..=12,
    ) {
        let data = common::random_dataset(seed, n, p);
        let basis = BernsteinBasis::new(m, data.max_time()).unwrap();
        let lik = BpLikelihood::new(model_of(which), &data, basis);
        let theta = common::random_theta(seed ^ 0x5eed, p, m);
        let mut grad = vec![0.0; theta.len()];
        let f = lik.loglik_grad(&theta, &mut grad);
        prop_assume!(f.is_finite());
        let fd = common::fd_gradient(|x| lik.loglik(x), &theta);
        for (a, b) in grad.iter().zip(&fd) {
            prop_assert!(common::rel_err(*a, *b) <= 1e-5, "analytic {a} vs fd {b}");
        }
    }

    #[test]
    fn aft_equals_ph_without_covariate_effect(seed in 0u64..1_000_000, n in 1usize..=40, p in 0usize..=3, m in 1usize..=15) {
        let data = common::random_dataset(seed, n, p);
        let basis = BernsteinBasis::new(m, data.max_time()).unwrap();
        let theta = common::random_theta(seed, 0, m);
        let params = ParameterVector::new(vec![0.0; p], theta);
        let a = loglik_aft(&params, &data, &basis).unwrap();
        let b = loglik_ph(&params, &data, &basis).unwrap();
        prop_assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn pointwise_terms_sum_to_total(seed in 0u64..1_000_000, which in 0u8..3, n in 1usize..=40, p in 0usize..=3, m in 1usize..=10) {
        let data = common::random_dataset(seed, n, p);
        let basis = BernsteinBasis::new(m, data.max_time()).unwrap();
        let lik = BpLikelihood::new(model_of(which), &data, basis);
        let theta = common::random_theta(seed, p, m);
        let mut terms = vec![0.0; n];
        let total = lik.pointwise(&theta, &mut terms);
        let sum: f64 = terms.iter().sum();
        prop_assert!((total - sum).abs() <= 1e-9 * total.abs().max(1.0));
        prop_assert!((total - lik.loglik(&theta)).abs() <= 1e-9 * total.abs().max(1.0));
    }

    #[test]
    fn loglik_is_invariant_to_row_order(seed in 0u64..1_000_000, which in 0u8..3, n in 2usize..=30, p in 0usize..=3) {
        let data = common::random_dataset(seed, n, p);
        let perm: Vec<usize> = (0..n).rev().collect();
        let shuffled = data.permuted(&perm);
        let basis = BernsteinBasis::new(5, data.max_time()).unwrap();
        let theta = common::random_theta(seed, p, 5);
        let a = BpLikelihood::new(model_of(which), &data, basis).loglik(&theta);
        let b = BpLikelihood::new(model_of(which), &shuffled, basis).loglik(&theta);
        prop_assert!((a - b).abs() <= 1e-10 * a.abs().max(1.0));
    }

    #[test]
    fn parametric_gradient_matches_finite_differences(seed in 0u64..1_000_000, weibull in any::<bool>(), n in 5usize..=40, p in 0usize..=3) {
        let data = common::random_dataset(seed, n, p);
        let family = if weibull { ParametricFamily::Waft } else { ParametricFamily::Llaft };
        let lik = ParametricLikelihood::new(family, &data);
        let theta = common::random_theta(seed, 2 + p, 0);
        let mut grad = vec![0.0; theta.len()];
        let f = lik.loglik_grad(&theta, &mut grad);
        prop_assume!(f.is_finite());
        let fd = common::fd_gradient(|x| lik.loglik(x), &theta);
        for (a, b) in grad.iter().zip(&fd) {
            prop_assert!(common::rel_err(*a, *b) <= 1e-5, "analytic {a} vs fd {b}");
        }
    }
}

/// With every subject censored the log-likelihood is minus the summed cumulative hazards.
#[test]
fn censored_only_data_contribute_survival() {
    let data = common::random_dataset(7, 20, 0);
    let censored = bpsurv::SurvivalDataset::baseline_only(data.times().to_vec(), vec![0; 20]).unwrap();
    let tau = data.max_time();
    let basis = BernsteinBasis::new(3, tau).unwrap();
    let log_bp = vec![0.1f64.ln(), 0.5f64.ln(), 2.0f64.ln()];
    let ll = loglik_ph(&ParameterVector::new(vec![], log_bp.clone()), &censored, &basis).unwrap();
    let expected: f64 = censored
        .times()
        .iter()
        .map(|&t| {
            let h: f64 = (1..=3)
                .map(|k| {
                    let gk = common::adaptive_simpson(&|u| bpsurv::bernstein::g(k, 3, u, tau).unwrap(), 0.0, t, 1e-13);
                    log_bp[k - 1].exp() * gk
                })
                .sum();
            -h
        })
        .sum();
    assert!((ll - expected).abs() < 1e-9, "{ll} vs {expected}");
}
