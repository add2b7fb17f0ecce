use gamescape::diversity::{build_kernel, expected_cardinality, row_diversity};
use gamescape::games::{make_blotto, make_random_zero_sum, BlottoSpec};
use gamescape::harness::{format_sig, hull_distance, pcs_score};
use gamescape::meta::{alpha_rank, build_response_graph, find_sscc_bruteforce, solve_nash_zero_sum};
use gamescape::oracles::project_to_simplex;
use gamescape::trainer::{run_psro, Backend, OracleKind, Population, TauSchedule, TrainerConfig};
use gamescape::{best_response, expected_payoff, exploitability, JointProfile, MixedStrategy, PayoffMatrix, Player};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn matrix(max_rows: usize, max_cols: usize) -> impl Strategy<Value = DMatrix<f64>> {
    (1..=max_rows, 1..=max_cols).prop_flat_map(|(r, c)| {
        prop::collection::vec(-2.0f64..2.0, r * c).prop_map(move |v| DMatrix::from_row_slice(r, c, &v))
    })
}

fn simplex(n: usize) -> impl Strategy<Value = MixedStrategy> {
    prop::collection::vec(0.0f64..1.0, n).prop_map(|w| {
        let w: Vec<f64> = w.iter().map(|x| x + 1e-3).collect();
        MixedStrategy::from_weights(&w).unwrap()
    })
}

fn game_and_profile() -> impl Strategy<Value = (PayoffMatrix, JointProfile)> {
    matrix(6, 6).prop_flat_map(|m| {
        let (r, c) = m.shape();
        (Just(m), simplex(r), simplex(c))
            .prop_map(|(m, a, b)| (PayoffMatrix::zero_sum(m).unwrap(), JointProfile::new(a, b)))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn exploitability_is_nonnegative((g, p) in game_and_profile()) {
        prop_assert!(exploitability(&g, &p).unwrap() >= -1e-9);
    }

    #[test]
    fn exploitability_ignores_relabelling((g, p) in game_and_profile(), shift in 0usize..6) {
        let (r, c) = (g.rows(), g.cols());
        let pr: Vec<usize> = (0..r).map(|i| (i + shift) % r).collect();
        let pc: Vec<usize> = (0..c).rev().collect();
        let m = DMatrix::from_fn(r, c, |i, j| g.get(pr[i], pc[j]));
        let a = MixedStrategy::new(pr.iter().map(|&i| p.pi1.probs()[i]).collect()).unwrap();
        let b = MixedStrategy::new(pc.iter().map(|&j| p.pi2.probs()[j]).collect()).unwrap();
        let h = PayoffMatrix::zero_sum(m).unwrap();
        let e = exploitability(&h, &JointProfile::new(a, b)).unwrap();
        prop_assert!((e - exploitability(&g, &p).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn best_response_dominates_mixtures((g, p) in game_and_profile()) {
        let (_, v) = best_response(&g, &p.pi2, Player::One).unwrap();
        prop_assert!(v >= expected_payoff(&g, &p).unwrap() - 1e-12);
    }

    #[test]
    fn appending_a_row_never_lowers_diversity(m in matrix(6, 5), extra in prop::collection::vec(-2.0f64..2.0, 5)) {
        let c = m.ncols();
        let mut bigger = m.clone().insert_row(m.nrows(), 0.0);
        for j in 0..c {
            bigger[(m.nrows(), j)] = extra[j];
        }
        let before = expected_cardinality(&build_kernel(&m));
        let after = expected_cardinality(&build_kernel(&bigger));
        prop_assert!(after >= before - 1e-9);
    }

    #[test]
    fn diversity_is_bounded_by_rank(m in matrix(7, 7)) {
        let rank = m.rank(1e-9) as f64;
        prop_assert!(row_diversity(&m) <= rank + 1e-9);
        let mut unit = m.clone();
        for mut row in unit.row_iter_mut() {
            let n = row.norm();
            if n > 1e-9 { row /= n; }
        }
        // half the rank needs independent rows; with n rows of rank r the
        // tight bound is r n / (n + r)
        let r = unit.rank(1e-9) as f64;
        let n = unit.row_iter().filter(|row| row.norm() > 1e-9).count() as f64;
        let bound = if r == n { r / 2.0 } else { r * n / (n + r) };
        prop_assert!(row_diversity(&unit) <= bound + 1e-9);
    }

    #[test]
    fn nash_meets_its_tolerance(m in matrix(7, 7)) {
        let g = PayoffMatrix::zero_sum(m).unwrap();
        let p = solve_nash_zero_sum(&g, 1e-7).unwrap();
        prop_assert!(exploitability(&g, &p).unwrap() <= 1e-7);
    }

    #[test]
    fn sscc_structure_is_scale_invariant(m in matrix(5, 5), c in 0.01f64..100.0) {
        let g = PayoffMatrix::zero_sum(m.clone()).unwrap();
        let h = PayoffMatrix::zero_sum(m * c).unwrap();
        prop_assert_eq!(find_sscc_bruteforce(&g), find_sscc_bruteforce(&h));
        prop_assert_eq!(
            build_response_graph(&g, false).unwrap().edges(),
            build_response_graph(&h, false).unwrap().edges()
        );
    }

    #[test]
    fn stationary_distribution_is_a_distribution(m in matrix(4, 4)) {
        let g = PayoffMatrix::zero_sum(m).unwrap();
        let r = alpha_rank(&g, 100.0, 50).unwrap();
        prop_assert!(r.stationary.iter().all(|&x| x >= 0.0));
        prop_assert!((r.stationary.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn hull_ignores_row_order(m in matrix(6, 4), c in prop::collection::vec(-2.0f64..2.0, 4), rot in 0usize..6) {
        let d = m.ncols();
        let n = m.nrows();
        let permuted = DMatrix::from_fn(n, d, |i, j| m[((i + rot) % n, j)]);
        let a = hull_distance(&m, &c[..d]).unwrap();
        let b = hull_distance(&permuted, &c[..d]).unwrap();
        prop_assert!((a - b).abs() < 1e-7);
    }

    #[test]
    fn pcs_grows_with_the_found_set(n in 3usize..12, seed in 0u64..1000, k in 0usize..12) {
        let g = make_random_zero_sum(n, seed).unwrap();
        let found: Vec<usize> = (0..k.min(n)).collect();
        let more: Vec<usize> = (0..(k + 1).min(n)).collect();
        prop_assert!(pcs_score(&more, &g).unwrap() >= pcs_score(&found, &g).unwrap());
    }

    #[test]
    fn random_games_are_antisymmetric(n in 2usize..20, seed in any::<u64>()) {
        let g = make_random_zero_sum(n, seed).unwrap();
        prop_assert!(g.is_antisymmetric(0.0));
    }

    #[test]
    fn simplex_projection_lands_on_the_simplex(v in prop::collection::vec(-5.0f64..5.0, 1..10)) {
        let p = project_to_simplex(&v);
        prop_assert!(p.iter().all(|&x| x >= 0.0));
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn formatted_values_keep_twelve_digits(x in -1e15f64..1e15, e in -20i32..5) {
        let v = x * 10f64.powi(e);
        let back: f64 = format_sig(v).parse().unwrap();
        prop_assert!((back - v).abs() <= 1e-11 * v.abs());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn psro_diversity_never_drops_and_tables_extend(n in 4usize..9, seed in 0u64..100, diverse in any::<bool>()) {
        let g = make_random_zero_sum(n, seed).unwrap();
        let cfg = TrainerConfig {
            oracle: if diverse { OracleKind::DiverseBr } else { OracleKind::Br },
            iterations: 6,
            seed,
            ..TrainerConfig::default()
        };
        let init = Population::initial_nfg(&g, seed).unwrap();
        let (pop, trace) = run_psro(Backend::Matrix(&g), &cfg, init.clone()).unwrap();
        for w in trace.windows(2) {
            prop_assert!(w[1].diversity >= w[0].diversity - 1e-9);
        }
        // replay
        let (pop2, trace2) = run_psro(Backend::Matrix(&g), &cfg, init).unwrap();
        prop_assert_eq!(&pop, &pop2);
        prop_assert_eq!(trace.len(), trace2.len());
        // a shorter run's table is a leading block of the longer one
        let short = TrainerConfig { iterations: 3, ..cfg.clone() };
        let (pop3, _) = run_psro(Backend::Matrix(&g), &short, Population::initial_nfg(&g, seed).unwrap()).unwrap();
        let (r, c) = (pop3.meta_payoff.rows(), pop3.meta_payoff.cols());
        for i in 0..r {
            for j in 0..c {
                prop_assert_eq!(pop3.meta_payoff.get(i, j).to_bits(), pop.meta_payoff.get(i, j).to_bits());
            }
        }
    }
}

#[test]
fn blotto_payoffs_are_signs() {
    let g = make_blotto(BlottoSpec::default()).unwrap();
    assert_eq!(g.rows(), 66);
    assert!(g.values().iter().all(|&v| v == -1.0 || v == 0.0 || v == 1.0));
    assert!(g.is_antisymmetric(0.0));
}

#[test]
fn tau_schedules_decay_as_configured() {
    let h = TauSchedule::Harmonic { c: 2.0 };
    assert_eq!(h.at(4), 0.5);
    let geo: TauSchedule = "geometric:1:0.5".parse().unwrap();
    assert_eq!(geo.at(3), 0.125);
}
