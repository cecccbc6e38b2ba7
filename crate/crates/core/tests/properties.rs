mod common;

use common::*;
use parisian_core::gaussian_paths::SamplerScratch;
use parisian_core::mc_engine::GridInfo;
use parisian_core::rng::replicate_rng;
use parisian_core::*;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn sup_inf_nonincreasing_in_window(values in prop::collection::vec(-5.0f64..5.0, 2..80), w in 0usize..20) {
        let n = values.len();
        prop_assume!(w + 1 < n);
        let b = n - 2 - w;
        let wide = parisian::parisian_sup_inf_values(&values, (0, b), WindowSpec::steps(w + 1)).unwrap();
        let narrow = parisian::parisian_sup_inf_values(&values, (0, b), WindowSpec::steps(w)).unwrap();
        prop_assert!(wide <= narrow);
    }

    #[test]
    fn sup_inf_monotone_in_outer_set(values in prop::collection::vec(-5.0f64..5.0, 1..80), w in 0usize..10, cut in 0usize..80) {
        let n = values.len();
        prop_assume!(w < n);
        let b = n - 1 - w;
        let c = cut.min(b);
        let full = parisian::parisian_sup_inf_values(&values, (0, b), WindowSpec::steps(w)).unwrap();
        let part = parisian::parisian_sup_inf_values(&values, (0, c), WindowSpec::steps(w)).unwrap();
        prop_assert!(part <= full);
    }

    #[test]
    fn sup_inf_equivariance(values in prop::collection::vec(-5.0f64..5.0, 1..60), w in 0usize..10, c in -3.0f64..3.0, k in 0.1f64..4.0) {
        let n = values.len();
        prop_assume!(w < n);
        let b = n - 1 - w;
        let base = brute_sup_inf(&values, 0, b, w);
        let shifted: Vec<f64> = values.iter().map(|v| k * v + c).collect();
        let got = parisian::parisian_sup_inf_values(&shifted, (0, b), WindowSpec::steps(w)).unwrap();
        prop_assert!((got - (k * base + c)).abs() < 1e-12);
    }

    #[test]
    fn multi_is_scalar_of_rowwise_min(rows in prop::collection::vec(prop::collection::vec(-2.0f64..2.0, 30), 1..4), w in 0usize..8) {
        let lower: Vec<f64> = (0..30).map(|j| rows.iter().map(|r| r[j]).fold(f64::INFINITY, f64::min)).collect();
        let b = 29 - w;
        let m = parisian_multi(&rows, (0, b), WindowSpec::steps(w)).unwrap();
        prop_assert_eq!(m, brute_sup_inf(&lower, 0, b, w));
        for r in &rows {
            prop_assert!(m <= brute_sup_inf(r, 0, b, w));
        }
    }

    #[test]
    fn zeta_relations(alpha in 0.1f64..2.0, gm in 0.1f64..3.0, gp in 0.1f64..3.0) {
        let e = LocalExpansion::new(1.0, gm, 1.0, gp, alpha, 0.5).unwrap();
        let l = classify(&e).unwrap();
        prop_assert!(l.zeta >= 0.0 && l.zeta_minus >= 0.0 && l.zeta_plus >= 0.0);
        let pickands = l.case == AsymptoticCase::Pickands;
        prop_assert_eq!(l.tail_power() == 0.0, !pickands || l.zeta == 0.0);
        prop_assert_eq!(l.case.is_talagrand(), gm.min(gp) < alpha);
        prop_assert!(l.nu <= alpha && l.nu <= gm && l.nu <= gp);
    }

    #[test]
    fn scale_invariance_of_optimum(c in 0.2f64..5.0, seed in 0u64..1000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = random_model(&mut rng, 3);
        if let Ok(p) = m.find_tstar() {
            let q = m.scaled(c).find_tstar().unwrap();
            prop_assert!((p.t_star - q.t_star).abs() <= 1e-9 * p.t_star);
            prop_assert_eq!(p.kind, q.kind);
        }
    }

    #[test]
    fn t_star_maximizes_sigma(seed in 0u64..1000, x in 0.01f64..20.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = random_model(&mut rng, 4);
        if let Ok(p) = m.find_tstar() {
            prop_assert!(m.sigma_z(x).unwrap() <= p.sigma_star * (1.0 + 1e-12));
        }
    }
}

#[test]
fn fbm_self_similarity_across_grids() {
    let a = sample_fbm(0.3, 64, 1.0, 17).unwrap();
    let b = sample_fbm(0.3, 64, 0.01, 17).unwrap();
    let c = 0.01f64.powf(0.3);
    for (x, y) in a.values.iter().zip(&b.values) {
        assert!((x * c - y).abs() <= 1e-12 * x.abs().max(1.0));
    }
}

fn talagrand_source(gm: f64) -> Source {
    Source::Synthetic(SyntheticProcessSpec::new(0.4, 1.0, gm, 1.0, 0.5).unwrap())
}

#[test]
fn hits_independent_of_worker_count() {
    let params = |w| McParams {
        replicates: 3000,
        seed: 99,
        vicinity: Some(Vicinity::Log),
        workers: Some(w),
        ..McParams::default()
    };
    let src = talagrand_source(0.7);
    let a = estimate_ruin(&src, Threshold::U(3.0), WindowRule::AssumptionB(1.0), &params(1)).unwrap();
    let b = estimate_ruin(&src, Threshold::U(3.0), WindowRule::AssumptionB(1.0), &params(3)).unwrap();
    assert_eq!(a, b);
}

#[test]
fn zero_window_matches_plain_supremum() {
    let src = talagrand_source(0.7);
    let params = McParams {
        replicates: 2000,
        seed: 4,
        dt: Some(0.01),
        ..McParams::default()
    };
    let sim = RuinSimulator::new(&src, Threshold::U(1.5), WindowRule::Fixed(0.0), &params).unwrap();
    let est = sim.run(2000, 4, None).unwrap();
    let (a, b) = sim.outer_range();
    let mut scratch = SamplerScratch::default();
    let mut path = Vec::new();
    let mut hits = 0;
    for i in 0..2000 {
        sim.sample_path(4, i, &mut scratch, &mut path);
        let sup = path[a..=b].iter().copied().fold(f64::NEG_INFINITY, f64::max);
        hits += u64::from(sup > 1.5);
    }
    assert_eq!(est.hits, hits);
    assert!(hits > 0);
}

#[test]
fn vicinity_event_implies_full_event() {
    let src = talagrand_source(0.7);
    let u = 3.0;
    let full = RuinSimulator::new(
        &src,
        Threshold::U(u),
        WindowRule::AssumptionB(1.0),
        &McParams::default(),
    )
    .unwrap();
    let exp = src.local_expansion().unwrap();
    let (dm, dp) = build_vicinity(&exp, u, Vicinity::Log).unwrap();
    let GridInfo { dt, .. } = full.grid();
    let star = full.star_index();
    let lo = star - ((dm / dt).ceil() as usize).min(star);
    let hi = (star + (dp / dt).ceil() as usize).min(full.outer_range().1);
    let w = full.window();
    let mut scratch = SamplerScratch::default();
    let mut path = Vec::new();
    let (mut n_full, mut n_vic) = (0, 0);
    for i in 0..5000 {
        full.sample_path(8, i, &mut scratch, &mut path);
        let f = full.sup_inf(&path).unwrap();
        let v = parisian::parisian_sup_inf_values(&path, (lo, hi), w).unwrap();
        assert!(v <= f);
        n_full += u64::from(f > full.level());
        n_vic += u64::from(v > full.level());
    }
    assert!(n_vic <= n_full);
}

#[test]
fn estimates_monotone_in_level_and_window() {
    let src = talagrand_source(0.7);
    let params = McParams {
        dt: Some(0.005),
        ..McParams::default()
    };
    let sim = RuinSimulator::new(&src, Threshold::U(1.0), WindowRule::Fixed(0.1), &params).unwrap();
    let (a, b) = sim.outer_range();
    let mut scratch = SamplerScratch::default();
    let mut path = Vec::new();
    for i in 0..300 {
        sim.sample_path(2, i, &mut scratch, &mut path);
        let mut prev = f64::INFINITY;
        for w in (0..=sim.window().window_len).rev() {
            let v = parisian::parisian_sup_inf_values(&path, (a, b), WindowSpec::steps(w)).unwrap();
            // Shorter windows can only raise the functional.
            assert!(v >= prev || prev == f64::INFINITY);
            prev = v;
        }
    }
    let counts: Vec<u64> = [0.5, 1.0, 1.5, 2.0]
        .iter()
        .map(|&u| {
            let s = RuinSimulator::new(&src, Threshold::U(u), WindowRule::Fixed(0.1), &params).unwrap();
            s.run(2000, 2, None).unwrap().hits
        })
        .collect();
    assert!(counts.windows(2).all(|c| c[0] >= c[1]), "{counts:?}");
}

#[test]
fn risk_model_reduction_identity() {
    // Z = B/D > sqrt(N) throughout a window iff every reconstructed
    // component alpha N + mu N t - sigma sqrt(N) B(t) is negative there.
    let model = RiskModel::new(
        vec![Line::new(1.0, 2.0, 1.5), Line::new(0.5, 3.0, 0.8)],
        0.6,
        Some(3.0),
    )
    .unwrap();
    let n = 0.09;
    let params = McParams {
        dt: Some(0.02),
        ..McParams::default()
    };
    let sim = RuinSimulator::new(&Source::Mipr(model.clone()), Threshold::N(n), WindowRule::Fixed(0.2), &params).unwrap();
    let grid = sim.grid();
    let (a, b) = sim.outer_range();
    let w = sim.window().window_len;
    let mut scratch = SamplerScratch::default();
    let mut z = Vec::new();
    let mut agree_hits = 0;
    for i in 0..1000u64 {
        sim.sample_path(13, i, &mut scratch, &mut z);
        let scalar = sim.sup_inf(&z).unwrap() > n.sqrt();
        let bpath: Vec<f64> = z
            .iter()
            .enumerate()
            .map(|(j, v)| v * model.barrier(grid.start + j as f64 * grid.dt))
            .collect();
        let ruined = (a..=b).any(|j| {
            (j..=j + w).all(|k| {
                let t = grid.start + k as f64 * grid.dt;
                model
                    .lines
                    .iter()
                    .all(|l| l.alpha * n + l.mu * n * t - l.sigma * n.sqrt() * bpath[k] < 0.0)
            })
        });
        assert_eq!(scalar, ruined, "replicate {i}");
        agree_hits += u64::from(scalar);
    }
    assert!(agree_hits > 10 && agree_hits < 990, "{agree_hits}");
}

#[test]
fn compare_rows_sorted_and_tagged() {
    let src = talagrand_source(0.5);
    let params = McParams {
        replicates: 500,
        seed: 1,
        vicinity: Some(Vicinity::Log),
        ..McParams::default()
    };
    let rows = compare_table(
        &src,
        &[Threshold::U(3.5), Threshold::U(3.0)],
        WindowRule::AssumptionB(1.0),
        &Constants::default(),
        &params,
    )
    .unwrap();
    assert_eq!(rows.len(), 2);
    assert!(rows[0].u < rows[1].u);
    let label = classify(&src.local_expansion().unwrap()).unwrap();
    assert!(rows.iter().all(|r| r.branch == label.case));
    assert!(rows.iter().all(|r| r.ci_lo <= r.p_mc && r.p_mc <= r.ci_hi));
}

#[test]
fn replicate_streams_do_not_overlap() {
    use rand::Rng;
    let a: Vec<u64> = (0..4).map(|_| 0).scan(replicate_rng(1, 0), |r, _: u64| Some(r.random())).collect();
    let b: Vec<u64> = (0..4).map(|_| 0).scan(replicate_rng(1, 1), |r, _: u64| Some(r.random())).collect();
    assert!(a.iter().all(|x| !b.contains(x)));
}

#[test]
fn grid_halving_never_lowers_the_sup_at_zero_window() {
    // The coarse grid is every other point of a fine sample, so both see the same noise.
    for (k, alpha) in [0.6, 1.4, 2.0].into_iter().enumerate() {
        for convention in [Convention::HalfInterval, Convention::SymmetricInterval] {
            let fine = DriftedFieldSpec::pickands(alpha, 0.0, 2.0, 1.0 / 64.0, convention);
            let coarse = DriftedFieldSpec { grid_step: 1.0 / 32.0, ..fine };
            let fs = constants_lab::DriftedFieldSampler::new(&fine, 0.0).unwrap();
            let cs = constants_lab::DriftedFieldSampler::new(&coarse, 0.0).unwrap();
            for i in 0..200u64 {
                let f = fs.sample(&mut replicate_rng(40 + k as u64, i)).values;
                let c: Vec<f64> = f.iter().step_by(2).copied().collect();
                let vf = parisian::parisian_sup_inf_values(&f, fs.outer_range(), WindowSpec::steps(0)).unwrap();
                let vc = parisian::parisian_sup_inf_values(&c, cs.outer_range(), WindowSpec::steps(0)).unwrap();
                assert!(vf >= vc, "alpha={alpha} {convention:?}: {vf} < {vc}");
            }
        }
    }
}
