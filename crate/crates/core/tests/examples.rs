//! Worked examples for each module, checked against independent oracles.

mod oracles;

use std::f64::consts::PI;

use warpcone::embedding::{
    bernstein, bernstein_truncate, compression_profile, concave_envelopes, embedding_to_neg_kernel, neg_kernel_to_embedding,
    negative_type_test, product_embedding, product_envelopes, slice_to_cone_embedding, ConePoint, KernelMatrix,
    PointEmbedding, ProductFactor,
};
use warpcone::fixtures;
use warpcone::hr::{
    averaged_singleton_hr, induced_group_kernel, scaled_completion_metric, singleton_hr, verify_hr, Closeness,
    InducedKernelInput,
};
use warpcone::profinite::{section_scale, section_scale_check, slice_decomposition, slice_metric_closed_form, QuotientChain};
use warpcone::rational::{self, int, q, Rational};
use warpcone::spectral::{expander_family_report, spectral_gap, FamilyTrend, SpectralOptions};
use warpcone::torus::{
    nested_stabilizer_check, orbit, stabilizer_congruence_check, IntMatrix, IntegerMatrixGens, RationalTorusModel,
};
use warpcone::warp::{cone_distance, delta_n, half_step_distance, level_metric, stabilization_threshold, warped_metric};
use warpcone::{FiniteQuotientGroup, HalfStep, Multigraph, Stabilization};

fn f64_matrix(m: &[Vec<Rational>]) -> Vec<Vec<f64>> {
    m.iter().map(|r| r.iter().map(rational::to_f64).collect()).collect()
}

#[test]
fn z5_word_balls_and_distances() {
    let g = FiniteQuotientGroup::cyclic(5).unwrap();
    let by = |r| oracles::by_residue(&g, r);
    assert_eq!(g.word_ball(0), vec![(g.identity(), 0)]);
    let mut ball1: Vec<(u64, u32)> = g.word_ball(1).into_iter().map(|(e, l)| (oracles::residue(&g, e), l)).collect();
    ball1.sort();
    assert_eq!(ball1, vec![(0, 0), (1, 1), (4, 1)]);
    let lengths: Vec<u32> = (0..5).map(|r| g.word_length(by(r))).collect();
    assert_eq!(lengths, vec![0, 1, 2, 2, 1]);
    assert_eq!(g.distance(by(0), by(3)).unwrap(), 2);
    let g9 = FiniteQuotientGroup::cyclic(9).unwrap();
    assert_eq!(g9.distance(oracles::by_residue(&g9, 0), oracles::by_residue(&g9, 4)).unwrap(), 4);
}

#[test]
fn cayley_graphs_of_small_cyclic_groups() {
    let z3 = FiniteQuotientGroup::cyclic(3).unwrap().cayley_graph();
    assert_eq!(z3.vertex_count(), 3);
    assert_eq!(z3.regular_degree(), Some(2));
    for u in 0..3 {
        for v in 0..3 {
            assert_eq!(z3.multiplicity(u, v), usize::from(u != v));
        }
    }
    let z8 = FiniteQuotientGroup::cyclic(8).unwrap();
    let g = z8.cayley_graph();
    for r in 0..8u64 {
        let u = oracles::by_residue(&z8, r);
        let mut nbrs: Vec<u64> = g.neighbours(u).iter().map(|&v| oracles::residue(&z8, v)).collect();
        nbrs.sort();
        let mut want = vec![(r + 1) % 8, (r + 7) % 8];
        want.sort();
        assert_eq!(nbrs, want);
    }
}

#[test]
fn fix_a_warped_and_level_metrics() {
    let a = fixtures::fix_a().unwrap();
    let s3 = a.with_scale(int(3)).unwrap();
    assert_eq!(warped_metric(&s3).get(0, 4), int(4));
    assert_eq!(oracles::path_infimum_warped(&s3)[0][4], int(4));
    let delta = delta_n(&a, 6);
    assert_eq!(delta.get(2, 0, 4), int(2));
    assert_eq!(oracles::brute_delta(&a, 2, 0, 4), int(2));
    for n in 0..=6 {
        assert_eq!(delta.layer(n)[3][3], int(0));
    }
    let l3 = level_metric(int(3), &delta).unwrap();
    assert_eq!(l3.matrix.get(0, 4), int(4));
    assert_eq!(l3.minimizer[0][4], 4);
    assert_eq!(level_metric(int(1), &delta).unwrap().matrix.get(0, 4), int(4));
    assert_eq!(cone_distance(&delta, (int(3), 0), (int(5), 4)).unwrap(), int(6));
    assert_eq!(cone_distance(&delta, (int(3), 2), (q(7, 2), 2)).unwrap(), q(1, 2));
    let st = |y, y2| stabilization_threshold(&a, &delta, y, y2).unwrap();
    assert_eq!(st(0, 4), Stabilization::SameOrbit { word_distance: 4, s_star: int(1) });
    assert_eq!(st(0, 1), Stabilization::SameOrbit { word_distance: 1, s_star: int(1) });
    assert_eq!(st(5, 5), Stabilization::SameOrbit { word_distance: 0, s_star: int(0) });
}

#[test]
fn trivial_action_keeps_the_metric() {
    let spec = warpcone::descriptor::WarpSystemSpec {
        labels: vec![],
        metric: vec![vec![int(0), q(3, 2), int(2)], vec![q(3, 2), int(0), q(1, 2)], vec![int(2), q(1, 2), int(0)]],
        generators: vec![],
        scale: int(5),
    };
    let sys = spec.build().unwrap();
    let w = warped_metric(&sys);
    assert_eq!(w.values, sys.space().scaled_matrix());
}

#[test]
fn fix_d_half_step_at_three() {
    let fix = fixtures::fix_d(8).unwrap();
    let (x, x2) = fix.pair(3);
    let expected = rational::min(int(8) + 1 - q(1, 8), int(4));
    assert_eq!(half_step_distance(&fix.system, x, x2, 8).value(), Some(expected));
    assert_eq!(expected, int(4));
    assert!(warped_metric(&fix.system).get(x, x2) <= int(2));
    assert!(matches!(half_step_distance(&fix.system, x, x, 0), HalfStep::Exact { value, .. } if value == int(0)));
}

#[test]
fn fix_b_completion_distances() {
    let b1 = fixtures::fix_b(1).unwrap();
    assert_eq!(b1.len(), 3);
    for g in 0..3 {
        for h in 0..3 {
            assert_eq!(b1.distance(g, h), if g == h { int(0) } else { int(1) });
        }
    }
    let b2 = fixtures::fix_b(2).unwrap();
    let g2 = b2.chain().group(2);
    let by = |r| oracles::by_residue(g2, r);
    assert_eq!(b2.distance(by(0), by(3)), q(1, 2));
    assert_eq!(b2.distance(by(0), by(1)), int(1));
    assert_eq!(fixtures::fix_b(0).unwrap().len(), 1);
}

#[test]
fn fix_b_slices_at_scale_four() {
    let b2 = fixtures::fix_b(2).unwrap();
    let g2 = b2.chain().group(2);
    let by = |r| oracles::by_residue(g2, r);
    let closed = slice_metric_closed_form(&b2, int(4)).unwrap();
    let dijkstra = warped_metric(&b2.warp_system().unwrap().with_scale(int(4)).unwrap());
    assert_eq!(closed.values, dijkstra.values);
    assert_eq!(closed.get(by(0), by(3)), int(2));
    assert_eq!(closed.get(by(0), by(1)), int(1));
    assert_eq!(slice_decomposition(&b2, int(4)).unwrap().n_s, 2);
    let b3 = fixtures::fix_b(3).unwrap();
    assert_eq!(slice_decomposition(&b3, int(4)).unwrap().n_s, 2);
}

#[test]
fn chain_diameters_and_orders() {
    assert_eq!(fixtures::fix_b_chain().unwrap().diameters(), vec![1, 4, 13]);
    for (k, m) in [3u64, 9, 27].iter().enumerate() {
        let cycle = Multigraph::cycle(*m as usize);
        let bfs_diam = cycle.bfs(0).into_iter().flatten().max().unwrap();
        assert_eq!(bfs_diam, fixtures::fix_b_chain().unwrap().diameters()[k]);
    }
    let sl = QuotientChain::special_linear(2, &[3, 9, 27], 100_000).unwrap();
    let orders: Vec<usize> = sl.groups().iter().map(|g| g.order()).collect();
    let formula: Vec<usize> = (0..3).map(|k| 24 * 27usize.pow(k)).collect();
    assert_eq!(orders, formula);
    assert_eq!(orders, vec![24, 648, 17496]);
}

#[test]
fn fix_b_section_scales() {
    let b = fixtures::fix_b(3).unwrap();
    assert_eq!(section_scale(&b, 1), int(1));
    assert_eq!(section_scale(&b, 2), int(8));
    for n in [1, 2] {
        let rep = section_scale_check(&b, n).unwrap();
        assert!(rep.passed && !rep.vacuous);
    }
    let trivial = QuotientChain::cyclic(1, 2);
    if let Ok(chain) = trivial {
        let w = warpcone::WeightSequence::new(vec![int(1), q(1, 2)]).unwrap();
        let t = warpcone::TruncatedCompletion::build(chain, w, 2, true).unwrap();
        assert!(section_scale_check(&t, 1).unwrap().vacuous);
    }
}

#[test]
fn torus_orbits() {
    let model = RationalTorusModel::new(2, 6).unwrap();
    let gens = IntegerMatrixGens::elementary(2).unwrap();
    let zero = model.locate(&[int(0), int(0)]).unwrap();
    assert_eq!(orbit(&model, &gens, zero, 100).unwrap().points, vec![zero]);
    let c = fixtures::fix_c().unwrap();
    let o = orbit(&c.model, &c.gens, c.x1, 100).unwrap();
    assert!(o.len() <= 36);
    // Orbit closure by brute force: every denominator-6 point reachable under the generators.
    let sys = c.gens.warp_system(&c.model).unwrap();
    let reach = oracles::bfs_word_distances(&sys, c.x1);
    assert_eq!(o.len(), reach.iter().flatten().count());
    let half = RationalTorusModel::new(2, 2).unwrap();
    let x = half.locate(&[q(1, 2), int(0)]).unwrap();
    let o = orbit(&half, &gens, x, 100).unwrap();
    let mut labels: Vec<String> = o.points.iter().map(|&p| half.label(p)).collect();
    labels.sort();
    assert_eq!(labels, vec!["(0/1,1/2)", "(1/2,0/1)", "(1/2,1/2)"]);
    let mut dists: Vec<u32> = o.word_distance.iter().flatten().copied().filter(|&d| d > 0).collect();
    dists.sort();
    dists.dedup();
    assert_eq!(dists, vec![1, 2]);
    let sys = gens.warp_system(&half).unwrap();
    let s_star = warpcone::torus::orbit_threshold(&sys, &o).unwrap();
    let check = warpcone::torus::embedded_expander_check(&sys, &o, s_star * 4).unwrap();
    assert!(check.isometric);
}

#[test]
fn stabilizer_congruences() {
    let id = IntMatrix::identity(2);
    let cert = stabilizer_congruence_check(&id, &[2, 3], 1).unwrap();
    assert!(cert.direct && cert.congruence);
    let a = IntMatrix::new(2, vec![1, 3, 2, 7]).unwrap();
    let cert = stabilizer_congruence_check(&a, &[2, 3], 1).unwrap();
    assert!(cert.direct && cert.congruence);
    let b = IntMatrix::new(2, vec![1, 1, 0, 1]).unwrap();
    let cert = stabilizer_congruence_check(&b, &[2, 3], 1).unwrap();
    assert!(!cert.direct && !cert.congruence);
    // Direct image of (1/2, 1/3) under b as an independent oracle.
    let image = (q(1, 2) + q(1, 3), q(1, 3));
    assert_eq!(image, (q(5, 6), q(1, 3)));
    let r0 = nested_stabilizer_check(&[2, 3], 2, 0).unwrap();
    assert!(r0.nested && r0.ball_size == 1 && r0.common_nontrivial.is_empty());
    let r4 = nested_stabilizer_check(&[2, 3], 2, 4).unwrap();
    assert!(r4.all_agree && r4.nested);
    // [[1,0],[4,1]] fixes (1/2,1/3) and (1/4,1/9): 4/2 and 4/4 are integers.
    let e = IntMatrix::new(2, vec![1, 0, 4, 1]).unwrap();
    assert!(r4.common_nontrivial.iter().any(|(m, len)| *m == e && *len == 4));
    assert!(stabilizer_congruence_check(&e, &[2, 3], 2).unwrap().direct);
}

#[test]
fn spectra_of_small_graphs() {
    let opts = SpectralOptions::default();
    let single = spectral_gap("k1", &Multigraph::complete(1), &opts).unwrap();
    assert!(single.lambda2.is_none());
    let c8 = spectral_gap("c8", &Multigraph::cycle(8), &opts).unwrap();
    assert!((c8.lambda2.unwrap() - (1.0 - (PI / 4.0).cos())).abs() <= 1e-8);
    let k5 = spectral_gap("k5", &Multigraph::complete(5), &opts).unwrap();
    assert!((k5.lambda2.unwrap() - 1.25).abs() <= 1e-8);
    let chain = fixtures::fix_b_chain().unwrap();
    let graphs: Vec<(usize, Multigraph)> = chain.groups().iter().enumerate().map(|(k, g)| (k + 1, g.cayley_graph())).collect();
    let rep = expander_family_report(&graphs, &opts).unwrap();
    assert_eq!(rep.trend, FamilyTrend::GapToZero);
    for (row, m) in rep.rows.iter().zip([3usize, 9, 27]) {
        assert!((row.lambda2 - oracles::cycle_spectrum(m)[1]).abs() <= 1e-8);
    }
    assert_eq!(expander_family_report(&[], &opts).unwrap().trend, FamilyTrend::Empty);
}

#[test]
fn compression_profiles() {
    let line = PointEmbedding::new((0..5).map(|i| vec![i as f64]).collect(), 2.0).unwrap();
    let metric: Vec<Vec<f64>> = (0..5).map(|i| (0..5).map(|j| (i as f64 - j as f64).abs()).collect()).collect();
    let p = compression_profile(&line, &metric).unwrap();
    assert_eq!(p.radii, vec![1.0, 2.0, 3.0, 4.0]);
    assert_eq!(p.rho_minus, p.radii);
    assert_eq!(p.rho_plus, p.radii);
    let flat = compression_profile(&PointEmbedding::zero(5, 2, 2.0), &metric).unwrap();
    assert!(flat.rho_plus.iter().all(|&v| v == 0.0) && !flat.separating);
    // FIX-B level 2 circle embedding against a direct pair scan.
    let b2 = fixtures::fix_b(2).unwrap();
    let g2 = b2.chain().group(2);
    let e = PointEmbedding::cyclic_group(g2).unwrap();
    let d: Vec<Vec<f64>> = g2.distance_matrix().iter().map(|r| r.iter().map(|&v| v as f64).collect()).collect();
    let p = compression_profile(&e, &d).unwrap();
    for (k, &r) in p.radii.iter().enumerate() {
        let mut lo = f64::INFINITY;
        let mut hi: f64 = 0.0;
        for i in 0..9 {
            for j in 0..9 {
                if d[i][j] >= r {
                    lo = lo.min(e.dist(i, j));
                }
                if d[i][j] <= r {
                    hi = hi.max(e.dist(i, j));
                }
            }
        }
        assert!((p.rho_minus[k] - lo).abs() <= 1e-12 && (p.rho_plus[k] - hi).abs() <= 1e-12);
    }
}

#[test]
fn envelope_examples() {
    let grid: Vec<f64> = (0..=2000).map(|i| 1.0 + i as f64 / 100.0).collect();
    let f: Vec<f64> = grid.iter().map(|t| t.sqrt()).collect();
    let env = concave_envelopes(&f, &f, 1.0, 1.0, &grid).unwrap();
    let oracle = oracles::grid_envelope(&f, &grid);
    for ((c, o), fv) in env.c.iter().zip(&oracle).zip(&f) {
        assert!((c - o).abs() <= 1e-12 && (c - fv).abs() <= 1e-12);
    }
    let f: Vec<f64> = grid.iter().map(|t| 3.0 * t).collect();
    let env = concave_envelopes(&f, &f, 1.0, 3.0, &grid).unwrap();
    assert!(env.c.iter().zip(&f).all(|(c, v)| (c - v).abs() <= 1e-12));
    assert!(env.violation(1e-9).is_none());
}

#[test]
fn product_examples() {
    let two = vec![vec![0.0, 2.0], vec![2.0, 0.0]];
    let line = PointEmbedding::new(vec![vec![0.0], vec![2.0]], 1.0).unwrap();
    let factors = vec![ProductFactor::new(line.clone(), two.clone()).unwrap(), ProductFactor::new(line, two).unwrap()];
    let env = product_envelopes(&factors).unwrap();
    let prod = product_embedding(&factors, 1.0, &env).unwrap();
    assert!(prod.violation.is_none());
    let (a, b) = (prod.embedding.vector(0).to_vec(), prod.embedding.vector(3).to_vec());
    let l1: f64 = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).sum();
    assert_eq!(l1, 4.0);
    let tri = vec![vec![0.0, 1.0, 2.0], vec![1.0, 0.0, 1.0], vec![2.0, 1.0, 0.0]];
    let e = PointEmbedding::new(vec![vec![0.0], vec![1.0], vec![2.0]], 2.0).unwrap();
    let factors: Vec<ProductFactor> = (0..3).map(|_| ProductFactor::new(e.clone(), tri.clone()).unwrap()).collect();
    let env = product_envelopes(&factors).unwrap();
    let prod = product_embedding(&factors, 2.0, &env).unwrap();
    assert_eq!(prod.embedding.len(), 27);
    assert_eq!(prod.pairs_checked, 27 * 26 / 2);
    assert!(prod.violation.is_none());
}

#[test]
fn kernel_examples() {
    let zero = embedding_to_neg_kernel(&PointEmbedding::zero(3, 2, 2.0)).unwrap();
    assert_eq!(zero.max_abs(), 0.0);
    let pts = PointEmbedding::new(vec![vec![0.0], vec![1.0], vec![3.0]], 2.0).unwrap();
    let k = embedding_to_neg_kernel(&pts).unwrap();
    assert_eq!(k.values(), &[vec![0.0, 1.0, 9.0], vec![1.0, 0.0, 4.0], vec![9.0, 4.0, 0.0]][..]);
    let back = neg_kernel_to_embedding(&k, 0).unwrap();
    for (i, j, d) in [(0, 1, 1.0), (1, 2, 2.0), (0, 2, 3.0)] {
        assert!((back.dist(i, j) - d).abs() <= 1e-9);
    }
    assert_eq!(neg_kernel_to_embedding(&zero, 0).unwrap().vectors().iter().flatten().map(|v| v.abs()).sum::<f64>(), 0.0);
    let boxes = fixtures::fix_b_box_embeddings().unwrap();
    for e in &boxes {
        negative_type_test(&embedding_to_neg_kernel(e).unwrap(), 1e-9).unwrap();
    }
    assert_eq!(bernstein(0.0, 1.0), 0.0);
    assert!((bernstein(1.0, 1.0) - 0.632_120_558_828_557_7).abs() <= 1e-15);
    assert!((1.0 / bernstein(1.0, 1.0) - 1.581_976_706_869_326_4).abs() <= 1e-12);
    let k2 = embedding_to_neg_kernel(&boxes[1]).unwrap();
    let rep = bernstein_truncate(&k2, 4.0).unwrap();
    assert!(rep.ratio_ok && rep.bounded);
}

#[test]
fn cone_examples() {
    let constant = vec![PointEmbedding::zero(4, 1, 2.0); 3];
    let cone = slice_to_cone_embedding(constant, 1.0, 0).unwrap();
    for s in [q(1, 1), q(3, 2), q(5, 2), q(4, 1)] {
        let v = cone.eval(ConePoint { s, y: 2 }).unwrap();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!((norm - rational::to_f64(&s)).abs() <= 1e-12, "{v:?}");
    }
    let same = vec![PointEmbedding::circle(4); 3];
    let cone = slice_to_cone_embedding(same, 1.0, 0).unwrap();
    let at = |s: Rational| cone.eval(ConePoint { s, y: 1 }).unwrap();
    let (left, right, mid) = (at(q(1999, 1000)), at(q(2001, 1000)), at(int(2)));
    for ((l, r), m) in left.iter().zip(&right).zip(&mid) {
        assert!((l - m).abs() <= 1e-2 && (r - m).abs() <= 1e-2);
    }
}

#[test]
fn box_cone_profile_at_section_scale() {
    let b = fixtures::fix_b(3).unwrap();
    let boxes = fixtures::fix_b_box_embeddings().unwrap();
    let rm = |r: f64| 2.0 * r / PI;
    let rp = |r: f64| r;
    let at4 = warpcone::embedding::box_to_cone_embedding(&b, int(4), &boxes, &rm, &rp).unwrap();
    assert_eq!(at4.n_s, 2);
    assert_eq!(at4.l, 4.0);
    assert!(at4.passed());
    // At s(2) = 8 the slice metric is the G_2 word metric up to +1.
    let at8 = warpcone::embedding::box_to_cone_embedding(&b, int(8), &boxes, &rm, &rp).unwrap();
    assert!(at8.passed());
    let d8 = f64_matrix(&slice_metric_closed_form(&b, int(8)).unwrap().values);
    let delta2 = b.delta_matrices()[2].clone();
    for g in 0..27 {
        for h in 0..27 {
            let w = delta2[b.project(2, g)][b.project(2, h)] as f64;
            assert!(w <= d8[g][h] + 1e-12 && d8[g][h] <= w + 1.0 + 1e-12);
        }
    }
}

#[test]
fn hr_examples() {
    let b = fixtures::fix_b(3).unwrap();
    let single = singleton_hr(&b, int(8), int(3)).unwrap();
    assert_eq!(single.n_star, 2);
    assert_eq!(single.family.s, q(1, 2));
    let cert = verify_hr(&single.family, &scaled_completion_metric(&b, int(8)), Closeness::Below).unwrap();
    assert!(cert.passed && rational::is_zero(&cert.max_variation));
    // R above s·a_1: constant family; R at most s·a_N: identity family.
    let constant = singleton_hr(&b, int(2), int(3)).unwrap();
    assert_eq!(constant.n_star, 0);
    assert_eq!(constant.family.variation(0, 5), int(0));
    let identity = singleton_hr(&b, int(64), int(3)).unwrap();
    assert_eq!(identity.n_star, 3);
    assert_eq!(identity.family.s, int(0));
    // Identity family on a unit-separated space passes iff R < 1 or ε ≥ 2.
    let m = vec![vec![int(0), int(1)], vec![int(1), int(0)]];
    let fam = |r, eps| warpcone::HrFamily::new(2, vec![vec![(0, int(1))], vec![(1, int(1))]], r, eps, int(0)).unwrap();
    assert!(verify_hr(&fam(q(1, 2), q(1, 2)), &m, Closeness::AtMost).unwrap().passed);
    assert!(!verify_hr(&fam(int(1), q(1, 2)), &m, Closeness::AtMost).unwrap().passed);
    assert!(verify_hr(&fam(int(1), int(2)), &m, Closeness::AtMost).unwrap().passed);
    let avg = averaged_singleton_hr(&b, int(4), int(1), q(1, 2)).unwrap();
    assert!(warpcone::hr::averaged_certificate(&b, int(4), &avg).unwrap().passed);
}

#[test]
fn induced_kernel_examples() {
    let g = FiniteQuotientGroup::cyclic(9).unwrap();
    let ones = KernelMatrix::from_fn(9, |_, _| 1.0).unwrap();
    let out = induced_group_kernel(&InducedKernelInput { kernel: &ones, group: &g, ball: g.word_ball(3) }, None).unwrap();
    assert!(out.h.iter().all(|&h| h == 1.0) && out.psd);
    let diag: Vec<f64> = (0..9).map(|i| 1.0 + i as f64).collect();
    let k = KernelMatrix::from_fn(9, |i, j| if i == j { diag[i] } else { 0.0 }).unwrap();
    let out = induced_group_kernel(&InducedKernelInput { kernel: &k, group: &g, ball: g.word_ball(2) }, None).unwrap();
    let pos = out.ball.iter().position(|&(e, _)| e == g.identity()).unwrap();
    assert!((out.h[pos] - diag.iter().sum::<f64>() / 9.0).abs() <= 1e-12);
}
