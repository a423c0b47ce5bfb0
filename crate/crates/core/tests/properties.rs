use cream::coverage::theorems::{brute_force_theorem1, distance_intervals_disjoint, Convention, Instance};
use cream::coverage::{cumulative_coverage, interval_union, pairwise_distances};
use cream::gaussian::build_table;
use cream::indexing::{batch_generate, materialize, ContextConfig};
use cream::rope::{attn_score, InterpolationMode, RotaryParams};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn inverse_sample_is_monotone_and_bounded(
        mu in -1.0f64..12.0,
        sigma in 0.5f64..6.0,
        hi in 2.0f64..16.0,
        u1 in 0.0f64..1.0,
        u2 in 0.0f64..1.0,
    ) {
        let t = build_table(mu, sigma, 1.0, hi, 1000).unwrap();
        let (lo_a, hi_a) = t.alpha_range();
        let (a, b) = (t.inverse_sample(u1).unwrap(), t.inverse_sample(u2).unwrap());
        prop_assert_eq!(a, t.inverse_sample(u1).unwrap());
        prop_assert!(lo_a <= a && a <= hi_a);
        if u1 <= u2 { prop_assert!(a <= b); } else { prop_assert!(b <= a); }
    }

    #[test]
    fn generated_plans_keep_their_invariants(
        n in 3usize..200,
        ratio in 1usize..12,
        k_frac in 0.0f64..1.0,
        seed in any::<u64>(),
        mix in 0.0f64..=1.0,
    ) {
        let l = n * ratio;
        let k = 1 + ((n - 3) as f64 / 2.0 * k_frac) as usize;
        let config = ContextConfig::new(n, l).with_k(k).with_seed(seed).with_strategy_mix(mix);
        let schedule = batch_generate(&config, 20).unwrap();
        for (plan, positions) in schedule.iter_positions().map(Result::unwrap) {
            prop_assert_eq!(plan.head_len + plan.middle_len + plan.tail_len, n);
            prop_assert_eq!(plan.middle_end + 1 - plan.middle_start, plan.middle_len);
            prop_assert!(plan.alpha >= 1 && plan.alpha as usize <= ratio);
            let idx = positions.indices();
            prop_assert_eq!(idx.len(), n);
            prop_assert_eq!(idx[0], 0);
            prop_assert_eq!(idx[n - 1], l - 1);
            prop_assert!(idx.windows(2).all(|w| w[1] > w[0]));
        }
    }

    #[test]
    fn interval_form_equals_pairwise_enumeration(
        n in 3usize..60,
        ratio in 1usize..10,
        seed in any::<u64>(),
    ) {
        let k = (n - 1) / 4 + 1;
        prop_assume!(2 * k < n);
        let config = ContextConfig::new(n, n * ratio).with_k(k).with_seed(seed);
        let schedule = batch_generate(&config, 10).unwrap();
        for e in &schedule.entries {
            let p = materialize(&e.plan, &config).unwrap();
            prop_assert_eq!(interval_union(&e.plan, config.l), pairwise_distances(&p, config.l));
        }
    }

    #[test]
    fn coverage_fraction_never_decreases(seed in any::<u64>(), count in 1usize..60) {
        let config = ContextConfig::new(48, 384).with_k(4).with_seed(seed);
        let schedule = batch_generate(&config, count).unwrap();
        let report = cumulative_coverage(schedule.entries.iter().map(|e| &e.plan), 384).unwrap();
        prop_assert!(report.cumulative_fractions.windows(2).all(|w| w[1] >= w[0]));
        prop_assert!(report.final_fraction() <= 1.0);
    }

    #[test]
    fn scores_depend_only_on_offset(
        mode_idx in 0usize..4,
        half_dim in 1usize..33,
        scale in 1.0f64..16.0,
        m in 0u32..32768,
        n in 0u32..32768,
        shift in 0u32..32768,
        q in prop::collection::vec(-1.0f64..1.0, 64),
        k in prop::collection::vec(-1.0f64..1.0, 64),
    ) {
        let d = 2 * half_dim;
        let mode = match mode_idx {
            0 => InterpolationMode::None,
            1 => InterpolationMode::Linear { scale },
            2 => InterpolationMode::Ntk { scale },
            _ => InterpolationMode::yarn(scale, 4096.0),
        };
        let p = RotaryParams::new(d, 10_000.0, mode).unwrap();
        let (q, k) = (&q[..d], &k[..d]);
        let a = attn_score(q, k, m as f64, n as f64, &p).unwrap();
        let b = attn_score(q, k, (m + shift) as f64, (n + shift) as f64, &p).unwrap();
        let bound: f64 = q.iter().map(|x| x * x).sum::<f64>().sqrt()
            * k.iter().map(|x| x * x).sum::<f64>().sqrt()
            * p.attention_factor().powi(2);
        prop_assert!((a - b).abs() <= 1e-9 * bound.max(f64::MIN_POSITIVE));
    }

    #[test]
    fn disjoint_maximizers_match_closed_form(
        n in 4usize..14,
        ratio in 3usize..12,
        head in 1usize..5,
        tail in 1usize..5,
        span_convention in any::<bool>(),
    ) {
        prop_assume!(head + tail + 1 < n);
        let convention = if span_convention { Convention::Span } else { Convention::Count };
        let inst = Instance::new(n, n * ratio, head, tail, convention).unwrap();
        let report = brute_force_theorem1(&inst, 1_000_000).unwrap();
        for &(ps, pe) in &report.maximizers {
            if distance_intervals_disjoint(&inst, ps, pe) {
                prop_assert_eq!(report.max_size, inst.predicted_max());
            }
        }
        if report.attained {
            prop_assert!(report.outside_groups.is_empty(), "{:?}", report.outside_groups);
        }
    }
}
