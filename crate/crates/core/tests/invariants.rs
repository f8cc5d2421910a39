//! Property tests for the structural invariants.

mod oracles;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use warpcone::embedding::{bernstein, concave_envelopes, embedding_to_neg_kernel, neg_kernel_to_embedding, PointEmbedding};
use warpcone::fixtures::{self, RandomKind};
use warpcone::profinite::{slice_decomposition, slice_metric_closed_form, QuotientChain};
use warpcone::rational::{self, q, Rational};
use warpcone::torus::{stabilizer_congruence_check, IntMatrix};
use warpcone::warp::{delta_n, level_metric, warped_metric};
use warpcone::{FiniteQuotientGroup, Multigraph, TruncatedCompletion, WarpSystem, WeightSequence};

fn system(seed: u64, points: usize, pairs: usize, kind: RandomKind) -> WarpSystem {
    fixtures::random_warp_system(&mut ChaCha8Rng::seed_from_u64(seed), points, pairs, kind).unwrap()
}

fn scale() -> impl Strategy<Value = Rational> {
    (1i128..=12, 1i128..=4).prop_map(|(n, d)| q(n, d))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn warped_metric_is_a_pseudometric_below_the_scaled_metric(seed in any::<u64>(), n in 2usize..9, k in 1usize..4, s in scale()) {
        let sys = system(seed, n, k, RandomKind::Arbitrary).with_scale(s).unwrap();
        let w = warped_metric(&sys);
        prop_assert!(w.is_pseudometric());
        for x in 0..n {
            for y in 0..n {
                prop_assert!(w.get(x, y) <= sys.space().dist(x, y));
                prop_assert_eq!(w.get(x, y), w.get(y, x));
            }
            for g in sys.generators().non_identity() {
                if let Some(y) = sys.act(g, x) {
                    prop_assert!(w.get(x, y) <= rational::one());
                }
            }
        }
        prop_assert_eq!(w.values, oracles::path_infimum_warped(&sys));
    }

    #[test]
    fn warped_metric_grows_with_scale(seed in any::<u64>(), n in 2usize..9, s in scale(), t in scale()) {
        let sys = system(seed, n, 2, RandomKind::Arbitrary);
        let (lo, hi) = if s <= t { (s, t) } else { (t, s) };
        let a = warped_metric(&sys.with_scale(lo).unwrap());
        let b = warped_metric(&sys.with_scale(hi).unwrap());
        for x in 0..n {
            for y in 0..n {
                prop_assert!(a.get(x, y) <= b.get(x, y));
            }
        }
    }

    #[test]
    fn delta_layers_decrease_and_level_metric_matches(seed in any::<u64>(), n in 2usize..8, s in 1i128..6) {
        let sys = system(seed, n, 2, RandomKind::Arbitrary);
        let n_max = rational::ceil_u64(&(sys.space().diameter() * s)) as usize + 1;
        let delta = delta_n(&sys, n_max);
        for k in 1..=n_max {
            for x in 0..n {
                for y in 0..n {
                    prop_assert!(delta.get(k, x, y) <= delta.get(k - 1, x, y));
                    prop_assert!(delta.get(k, x, y) >= rational::zero());
                }
            }
        }
        for x in 0..n.min(3) {
            for y in 0..n.min(3) {
                prop_assert_eq!(delta.get(2, x, y), oracles::brute_delta(&sys, 2, x, y));
            }
        }
        let s = Rational::from_integer(s);
        let lm = level_metric(s, &delta).unwrap();
        prop_assert_eq!(lm.matrix.values, warped_metric(&sys.with_scale(s).unwrap()).values);
    }

    #[test]
    fn rational_text_round_trips(n in -10_000i128..10_000, d in 1i128..10_000) {
        let r = q(n, d);
        prop_assert_eq!(rational::parse(&rational::format(&r)).unwrap(), r);
    }

    #[test]
    fn closed_form_matches_dijkstra_on_cyclic_chains(base in 2u64..4, levels in 1usize..4, a1 in 1i128..3, s in scale()) {
        let chain = QuotientChain::cyclic(base, levels).unwrap();
        prop_assume!(chain.groups().last().unwrap().order() <= 64);
        let weights = WeightSequence::halving(&chain, Rational::from_integer(a1)).unwrap();
        let trunc = TruncatedCompletion::build(chain, weights, levels, false).unwrap();
        let s = rational::max(s, rational::one());
        let closed = slice_metric_closed_form(&trunc, s).unwrap();
        let dijkstra = warped_metric(&trunc.warp_system().unwrap().with_scale(s).unwrap());
        prop_assert_eq!(&closed.values, &dijkstra.values);
        prop_assert!(slice_decomposition(&trunc, s).unwrap().sandwich_violation(&closed).is_none());
    }

    #[test]
    fn bernstein_is_sandwiched(r in 0.0f64..1e3, l in 1e-3f64..1e3) {
        let m = bernstein(r, l);
        let floor = 1.0 - (-1.0f64).exp();
        prop_assert!(m <= r.min(l) * (1.0 + 1e-12));
        prop_assert!(m >= floor * r.min(l) * (1.0 - 1e-12));
        prop_assert!(bernstein(r + 1.0, l) >= m);
    }

    #[test]
    fn concave_envelope_invariants(steps in prop::collection::vec((0.01f64..1.0, 0.0f64..2.0), 2..80), f0 in 0.5f64..3.0) {
        let mut grid = vec![1.0];
        let mut f = vec![f0];
        for (dt, df) in &steps {
            grid.push(grid.last().unwrap() + dt);
            f.push(f.last().unwrap() + df);
        }
        let big: Vec<f64> = f.iter().map(|v| v * 2.0).collect();
        let env = concave_envelopes(&f, &big, 1.0, f0, &grid).unwrap();
        prop_assert!(env.violation(1e-9).is_none(), "{:?}", env.violation(1e-9));
        let oracle = oracles::grid_envelope(&f, &grid);
        for (c, o) in env.c.iter().zip(&oracle) {
            prop_assert!((c - o).abs() <= 1e-12 * o.max(1.0));
        }
    }

    #[test]
    fn gram_factorization_round_trips(points in prop::collection::vec(prop::collection::vec(-5.0f64..5.0, 3), 2..10)) {
        let e = PointEmbedding::new(points, 2.0).unwrap();
        let k = embedding_to_neg_kernel(&e).unwrap();
        let back = neg_kernel_to_embedding(&k, 0).unwrap();
        let scale = k.max_abs().max(1.0).sqrt();
        for i in 0..e.len() {
            for j in 0..e.len() {
                prop_assert!((back.dist(i, j) - e.dist(i, j)).abs() <= 1e-6 * scale);
            }
        }
    }

    #[test]
    fn stabilizer_evaluations_agree(word in prop::collection::vec(0usize..4, 0..8), m in 1u32..3) {
        let gens = [
            IntMatrix::elementary(2, 0, 1, 1),
            IntMatrix::elementary(2, 0, 1, -1),
            IntMatrix::elementary(2, 1, 0, 1),
            IntMatrix::elementary(2, 1, 0, -1),
        ];
        let a = word.iter().fold(IntMatrix::identity(2), |acc, &s| gens[s].mul(&acc));
        prop_assert_eq!(a.determinant(), 1);
        for q in [vec![2u64, 3], vec![2, 5], vec![3, 7]] {
            prop_assert!(stabilizer_congruence_check(&a, &q, m).unwrap().agrees());
        }
    }

    #[test]
    fn edge_lists_round_trip(m in 3usize..40) {
        let g = FiniteQuotientGroup::cyclic(m as u64).unwrap().cayley_graph();
        let parsed = Multigraph::parse_edge_list(&g.to_edge_list(), Some(m)).unwrap();
        for u in 0..m {
            for v in 0..m {
                prop_assert_eq!(parsed.multiplicity(u, v), g.multiplicity(u, v));
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn group_axioms_hold(m in 2u64..40, p in prop::sample::select(vec![2u64, 3, 4])) {
        FiniteQuotientGroup::cyclic(m).unwrap().verify_axioms(30, 200, m).unwrap();
        FiniteQuotientGroup::special_linear(2, p, 10_000).unwrap().verify_axioms(30, 200, p).unwrap();
    }
}
