//! Property tests for the structural invariants.

use bep::collapsed::{dev_dist, power_dev_dist};
use bep::covering::{greedy_cover, packing_lower, WhichMetric};
use bep::latent::local_model;
use bep::metrics::{rho_of_xi, MetricView};
use bep::process::{gamma_delta, one_minus_delta, pow2_neg, KindParams, MeanRule, ProcessSpec};
use bep::rng::SeedLineage;
use bep::sampling::{sample_batch, sup_deviation};
use bep::trees::build_skeleton;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, ..ProptestConfig::default() })]

    /// The subgaussian-increment inequality holds on arbitrary feasible
    /// (p_i, p_j, r, t) cells, not just the verification grid.
    #[test]
    fn mgf_bound_random_cells(
        p1 in 0.001f64..0.999,
        p2 in 0.001f64..0.999,
        frac in 0f64..1.0,
        t in 0f64..10.0,
    ) {
        let lo = (p1 + p2 - 1.0).max(0.0);
        let hi = p1.min(p2);
        let r = lo + frac * (hi - lo);
        let xi = p1 + p2 - 2.0 * r;
        prop_assume!(xi > 1e-9);
        let lhs = (-t * (p1 - p2)).exp()
            * ((p1 - r) * t.exp() + (p2 - r) * (-t).exp() + (1.0 - p1 - p2 + 2.0 * r));
        let rhs = (t * t / (2.0 / xi).ln()).exp();
        prop_assert!(rhs - lhs >= -1e-9 * rhs.max(1.0), "slack {} at xi {}", rhs - lhs, xi);
    }

    /// Metric-preservation: triangle-valid xi triples map to
    /// triangle-valid rho triples.
    #[test]
    fn rho_preserves_triangles(a in 0f64..1.0, b in 0f64..1.0, c in 0f64..1.0) {
        prop_assume!(a <= b + c && b <= a + c && c <= a + b);
        let (fa, fb, fc) = (rho_of_xi(a), rho_of_xi(b), rho_of_xi(c));
        prop_assert!(fa <= fb + fc + 1e-12);
        prop_assert!(fb <= fa + fc + 1e-12);
        prop_assert!(fc <= fa + fb + 1e-12);
    }

    /// gamma/delta solves its defining system for any block index, and
    /// cross-checks against an independent bisection root-finder.
    #[test]
    fn gamma_delta_system_any_k(k in 1u64..40) {
        let (g, d) = gamma_delta(k);
        let u = one_minus_delta(k);
        let c = pow2_neg(k);
        prop_assert!((u * g * (2.0 - g) - c).abs() <= 1e-12);
        prop_assert!((g + d - g * d - c).abs() <= 1e-12);
        let f = |dd: f64| {
            let gg = (c - dd) / (1.0 - dd);
            (1.0 - dd) * (2.0 * gg - gg * gg) - c
        };
        let (mut lo, mut hi) = (0.0, c);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) > 0.0 { lo = mid } else { hi = mid }
        }
        prop_assert!((d - 0.5 * (lo + hi)).abs() <= 1e-12);
    }

    /// Identical seed lineage gives bit-identical batches; the
    /// supremum deviation is monotone under adding columns.
    #[test]
    fn batch_determinism_and_monotone_sup(
        master in any::<u64>(),
        rep in 0u64..1000,
        n in 1usize..40,
    ) {
        let spec = ProcessSpec::new(KindParams::BlockSqrt, 32).unwrap();
        let l = SeedLineage::new(master, rep);
        let a = sample_batch(&spec, &[1, 2, 5, 9, 17], n, l).unwrap();
        let b = sample_batch(&spec, &[1, 2, 5, 9, 17], n, l).unwrap();
        prop_assert_eq!(&a, &b);
        let narrow = sample_batch(&spec, &[1, 2, 5], n, l).unwrap();
        let d_narrow = sup_deviation(&narrow, &[0.5; 3]).unwrap();
        let d_wide = sup_deviation(&a, &[0.5; 5]).unwrap();
        prop_assert!(d_wide >= d_narrow);
    }

    /// F^m is a CDF on the deviation grid and powers correctly.
    #[test]
    fn power_cdf_is_monotone_and_exact(
        probs in proptest::collection::vec(0.0f64..1.0, 2..12),
        m in 1u32..200,
    ) {
        let total: f64 = probs.iter().sum();
        prop_assume!(total > 0.0);
        let pmf: Vec<f64> = probs.iter().map(|p| p / total).collect();
        let dd = dev_dist(&pmf);
        let sup = power_dev_dist(&dd, (m as f64).ln());
        let mut prev = 0.0;
        for (i, &c) in sup.cdf.iter().enumerate() {
            prop_assert!((0.0..=1.0 + 1e-12).contains(&c));
            prop_assert!(c + 1e-12 >= prev);
            let direct = (1.0 - dd.tail[i]).powi(m as i32);
            prop_assert!((c - direct).abs() <= 1e-9, "{} vs {}", c, direct);
            prev = c;
        }
        prop_assert!((sup.cdf.last().unwrap() - 1.0).abs() <= 1e-12);
    }

    /// Greedy covers are valid covers and separated sets; packings
    /// dominate covers at the same scale.
    #[test]
    fn greedy_cover_validity(
        means in proptest::collection::vec(0.05f64..0.95, 3..12),
        eps in 0.05f64..0.9,
    ) {
        let d = means.len() as u64;
        let spec = ProcessSpec::new(
            KindParams::Product { rule: MeanRule::Explicit { values: means } },
            d,
        ).unwrap();
        let idx: Vec<u64> = (1..=d).collect();
        let view = MetricView::closed_form(&spec, &idx).unwrap();
        let centers = greedy_cover(&view, WhichMetric::Xi, eps).unwrap();
        // every index within eps of some center
        for &i in &idx {
            let covered = centers.iter().any(|&c| view.xi(i, c).unwrap() <= eps);
            prop_assert!(covered, "index {} uncovered", i);
        }
        // centers pairwise separated
        for (a, &i) in centers.iter().enumerate() {
            for &j in &centers[a + 1..] {
                prop_assert!(view.xi(i, j).unwrap() > eps);
            }
        }
        prop_assert!(packing_lower(&view, WhichMetric::Xi, eps).unwrap() >= centers.len());
    }

    /// Random skeleton trees: crossing counts realize the count
    /// sequence, subtrees stay balanced, and the leaf metric is an
    /// ultrametric.
    #[test]
    fn skeleton_tree_invariants(
        deltas in proptest::collection::vec(0u64..4, 2..7),
        top in 0.3f64..0.49,
        ratio in 0.3f64..0.7,
    ) {
        let mut counts = vec![1u64];
        for d in &deltas {
            counts.push(counts.last().unwrap() + d);
        }
        let levels: Vec<f64> = (0..counts.len()).map(|i| top * ratio.powi(i as i32)).collect();
        let tree = build_skeleton(&levels, &counts, None).unwrap();
        for k in 1..counts.len() {
            let eps = 0.5 * (levels[k] + levels[k - 1]);
            if eps > tree.frontier_level {
                prop_assert_eq!(tree.crossing_at(eps).unwrap(), counts[k]);
            }
        }
        for r in 0..tree.layer_start_level.len() {
            let k_r = tree.layer_start_level[r];
            for k in k_r..counts.len() {
                let eps = 0.5 * (levels[k] + levels[k - 1]);
                if eps <= tree.frontier_level {
                    continue;
                }
                let (lo, hi) = tree.subtree_crossing_spread(r, eps).unwrap();
                prop_assert!(hi - lo <= 1);
            }
        }
        let leaves = tree.leaf_catalog();
        for a in leaves.iter().take(6) {
            for b in leaves.iter().take(6) {
                for c in leaves.iter().take(6) {
                    let (dab, dbc, dac) =
                        (tree.leaf_distance(a, b), tree.leaf_distance(b, c), tree.leaf_distance(a, c));
                    prop_assert!(dac <= dab.max(dbc) + 1e-15, "not ultrametric");
                }
            }
        }
    }

    /// Closed-form moments agree with exhaustive latent enumeration on
    /// random thin chains.
    #[test]
    fn thin_chain_enumeration_agrees(
        deltas in proptest::collection::vec(0u64..3, 1..5),
        top in 0.2f64..0.5,
        ratio in 0.3f64..0.7,
    ) {
        let mut counts = vec![1u64];
        for d in &deltas {
            counts.push(counts.last().unwrap() + d);
        }
        let levels: Vec<f64> = (0..counts.len()).map(|i| top * ratio.powi(i as i32)).collect();
        let trunc = *counts.last().unwrap();
        let spec = ProcessSpec::new(
            KindParams::ThinChain { levels, counts },
            trunc,
        ).unwrap();
        for i in 1..=trunc {
            for j in i..=trunc {
                let m = local_model(&spec, &[i, j]).unwrap();
                let comps: Vec<usize> = if i == j { vec![0] } else { vec![0, 1] };
                let got = m.exact_moment(&comps).unwrap();
                let want = spec.cross_moment(i, j).unwrap();
                prop_assert!((got - want).abs() < 1e-12, "({},{}): {} vs {}", i, j, got, want);
            }
        }
    }
}
