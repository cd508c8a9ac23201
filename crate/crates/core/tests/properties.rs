//! Property-based checks of the library's structural invariants: smoothing
//! envelopes, sampling determinism, projection geometry, policy algebra, and
//! the special-function building blocks.

use ccpmo::nlp::project;
use ccpmo::problem::{example1, linear1d, ScalarDistribution, UncertaintyModel};
use ccpmo::sampling::sample_uncertainty;
use ccpmo::smoothing::{empirical_prob, smooth_prob, smooth_step, smooth_step_deriv};
use ccpmo::solver::{mix_from_frontier, Frontier, FrontierEntry};
use ccpmo::special::{beta_reg, mix_seed, normal_cdf, pairwise_sum, u64_to_open01};
use ccpmo::validate::policy_distance;
use ccpmo::{SmoothingParams, TwoPointPolicy};
use proptest::prelude::*;

proptest! {
    #[test]
    fn smooth_step_is_a_symmetric_sigmoid(y in -5.0f64..5.0, eps in 1e-6f64..2.0) {
        let v = smooth_step(y, eps);
        prop_assert!((0.0..=1.0).contains(&v));
        prop_assert!((v + smooth_step(-y, eps) - 1.0).abs() < 1e-12);
        if y <= -eps {
            prop_assert_eq!(v, 1.0);
        }
        if y >= eps {
            prop_assert_eq!(v, 0.0);
        }
    }

    #[test]
    fn smooth_step_is_nonincreasing(a in -3.0f64..3.0, b in -3.0f64..3.0, eps in 1e-3f64..2.0) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(smooth_step(lo, eps) >= smooth_step(hi, eps) - 1e-15);
    }

    #[test]
    fn smooth_step_derivative_matches_finite_differences(
        y in -2.0f64..2.0,
        eps in 0.5f64..2.0,
    ) {
        // Stay away from the band edges where the second derivative kinks.
        prop_assume!((y.abs() - eps).abs() > 1e-3);
        let h = 1e-6;
        let fd = (smooth_step(y + h, eps) - smooth_step(y - h, eps)) / (2.0 * h);
        prop_assert!((smooth_step_deriv(y, eps) - fd).abs() < 1e-7);
        prop_assert!(smooth_step_deriv(y, eps) <= 0.0);
    }

    #[test]
    fn conservative_margin_underestimates_the_indicator(
        x in -2.0f64..2.0,
        eps in 1e-3f64..0.5,
        seed in 0u64..50,
    ) {
        let p = linear1d();
        let d = sample_uncertainty(&p.uncertainty, 200, seed).unwrap();
        let conservative = SmoothingParams::new(eps, eps).unwrap();
        let plain = SmoothingParams::new(eps, 0.0).unwrap();
        let lo = smooth_prob(&p, &[x], &d, &conservative).unwrap();
        let mid = smooth_prob(&p, &[x], &d, &plain).unwrap();
        let emp = empirical_prob(&p, &[x], &d).unwrap();
        prop_assert!((0.0..=1.0).contains(&lo));
        prop_assert!(lo <= emp + 1e-12);
        prop_assert!(lo <= mid + 1e-12); // larger shift can only shrink it
    }

    #[test]
    fn smooth_prob_is_nonincreasing_in_the_shift(
        x in -2.0f64..2.0,
        eps in 1e-2f64..0.5,
        g1 in 0.0f64..0.3,
        g2 in 0.0f64..0.3,
        seed in 0u64..20,
    ) {
        let (glo, ghi) = if g1 <= g2 { (g1, g2) } else { (g2, g1) };
        let p = example1();
        let d = sample_uncertainty(&p.uncertainty, 100, seed).unwrap();
        let a = smooth_prob(&p, &[x], &d, &SmoothingParams::new(eps, glo).unwrap()).unwrap();
        let b = smooth_prob(&p, &[x], &d, &SmoothingParams::new(eps, ghi).unwrap()).unwrap();
        prop_assert!(b <= a + 1e-12);
    }

    #[test]
    fn sample_streams_are_deterministic_and_prefix_stable(
        seed in 0u64..1000,
        short in 1usize..40,
        extra in 0usize..40,
    ) {
        let m = UncertaintyModel::new(vec![
            ScalarDistribution::Normal { mean: 0.0, variance: 2.0 },
            ScalarDistribution::ScaledBeta { alpha: 2.0, beta: 5.0, offset: 0.4, scale: 0.2 },
        ])
        .unwrap();
        let a = sample_uncertainty(&m, short, seed).unwrap();
        let b = sample_uncertainty(&m, short + extra, seed).unwrap();
        for i in 0..short {
            prop_assert_eq!(a.get(i), b.get(i));
        }
    }

    #[test]
    fn projection_lands_in_the_box_and_is_idempotent(
        v in prop::collection::vec(-100.0f64..100.0, 1..8),
        half_width in 0.1f64..10.0,
    ) {
        let lower = vec![-half_width; v.len()];
        let upper = vec![half_width; v.len()];
        let mut w = v.clone();
        project(&mut w, &lower, &upper);
        for (wi, vi) in w.iter().zip(&v) {
            prop_assert!(*wi >= -half_width && *wi <= half_width);
            // Projection onto a box moves each coordinate the minimal amount.
            prop_assert!((wi - vi).abs() <= (vi.abs() - half_width).max(0.0) + 1e-15);
        }
        let w2 = w.clone();
        let mut w3 = w;
        project(&mut w3, &lower, &upper);
        prop_assert_eq!(w2, w3);
    }

    #[test]
    fn canonical_two_point_policies_preserve_their_mixture(
        mu1 in 0.0f64..1.0,
        x1 in -5.0f64..5.0,
        x2 in -5.0f64..5.0,
    ) {
        let obj = |x: &[f64]| x[0] * x[0] - x[0];
        let p = TwoPointPolicy { mu1, x1: vec![x1], x2: vec![x2] };
        let before = p.mu1 * obj(&p.x1) + (1.0 - p.mu1) * obj(&p.x2);
        let mut c = p.clone();
        c.canonicalize();
        prop_assert!(c.x1 <= c.x2);
        let after = c.mu1 * obj(&c.x1) + (1.0 - c.mu1) * obj(&c.x2);
        prop_assert!((before - after).abs() < 1e-12);
        prop_assert!((policy_distance(&p, &c)).abs() < 1e-12);
    }

    #[test]
    fn mixtures_from_frontiers_respect_the_risk_budget(
        alpha in 0.01f64..0.9,
        jumps in prop::collection::vec(0.01f64..1.0, 2..8),
    ) {
        // Build a strictly increasing alpha grid with decreasing objectives,
        // which is what a well-formed frontier looks like.
        let mut entries = Vec::new();
        let mut a = 0.0;
        let mut j = 1.0;
        for (k, step) in jumps.iter().enumerate() {
            a += step / jumps.len() as f64;
            j -= step;
            entries.push(FrontierEntry {
                alpha_tilde: a,
                jstar: j,
                xstar: vec![k as f64],
            });
        }
        let frontier = Frontier { entries, dropped: vec![] };
        match mix_from_frontier(&frontier, alpha) {
            Ok(mix) => {
                prop_assert!(mix.mean_threshold <= alpha + 1e-12);
                // Never worse than the best single feasible entry.
                let best_single = frontier
                    .entries
                    .iter()
                    .filter(|e| e.alpha_tilde <= alpha + 1e-12)
                    .map(|e| e.jstar)
                    .fold(f64::INFINITY, f64::min);
                prop_assert!(mix.objective <= best_single + 1e-12);
            }
            Err(_) => {
                // Only acceptable when every entry overshoots the budget.
                prop_assert!(frontier.entries.iter().all(|e| e.alpha_tilde > alpha));
            }
        }
    }

    #[test]
    fn pairwise_sum_agrees_with_plain_summation(
        xs in prop::collection::vec(-1e6f64..1e6, 0..300),
    ) {
        let naive: f64 = xs.iter().sum();
        let scale: f64 = xs.iter().map(|v| v.abs()).sum::<f64>().max(1.0);
        prop_assert!((pairwise_sum(&xs) - naive).abs() <= 1e-10 * scale);
    }

    #[test]
    fn mix_seed_separates_consecutive_streams(seed in 0u64..10_000, k in 0u64..1000) {
        prop_assert_ne!(mix_seed(seed, k), mix_seed(seed, k + 1));
        prop_assert_ne!(mix_seed(seed, k), mix_seed(seed + 1, k));
    }

    #[test]
    fn open_unit_mapping_stays_strictly_inside(w in any::<u64>()) {
        let u = u64_to_open01(w);
        prop_assert!(u > 0.0 && u < 1.0);
    }

    #[test]
    fn normal_cdf_is_a_symmetric_distribution_function(x in -8.0f64..8.0, y in -8.0f64..8.0) {
        let fx = normal_cdf(x);
        prop_assert!((0.0..=1.0).contains(&fx));
        prop_assert!((fx + normal_cdf(-x) - 1.0).abs() < 1e-14);
        if x < y {
            prop_assert!(fx <= normal_cdf(y));
        }
    }

    #[test]
    fn regularized_beta_roundtrips_through_its_quantile(
        a in 0.5f64..20.0,
        b in 0.5f64..20.0,
        u in 0.001f64..0.999,
    ) {
        let x = ccpmo::special::beta_quantile(a, b, u);
        prop_assert!((0.0..=1.0).contains(&x));
        prop_assert!((beta_reg(a, b, x) - u).abs() < 1e-9);
    }
}
