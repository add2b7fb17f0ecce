use gamescape::games::{make_random_zero_sum, make_rps, make_rpsx};
use gamescape::meta::MetaSolver;
use gamescape::oracles::{diverse_br_oracle, zero_order_oracle, OracleConfig};
use gamescape::trainer::{run_diverse_fp, run_psro, Backend, Member, OracleKind, Population, TauSchedule, TrainerConfig};
use gamescape::{best_response, MixedStrategy, Player};
use nalgebra::DMatrix;

#[test]
fn diverse_alpha_psro_reaches_the_sink_of_rpsx() {
    let g = make_rpsx();
    for seed in 0..3 {
        let cfg = TrainerConfig {
            meta_solver: MetaSolver::AlphaRank,
            oracle: OracleKind::DiverseAlpha,
            iterations: 10,
            seed,
            ..TrainerConfig::default()
        };
        let init = Population::new(vec![Member::Pure(0)], vec![Member::Pure(0)], Backend::Matrix(&g)).unwrap();
        let (pop, _) = run_psro(Backend::Matrix(&g), &cfg, init).unwrap();
        assert!(pop.pure_indices(Player::One).unwrap().contains(&3));
    }
}

#[test]
fn diverse_response_approaches_best_response_as_tau_vanishes() {
    for seed in 0..10 {
        let g = make_random_zero_sum(6, seed).unwrap();
        let opp = MixedStrategy::uniform(6);
        let rows = DMatrix::from_fn(1, 6, |_, j| g.get(0, j));
        let (_, br) = best_response(&g, &opp, Player::One).unwrap();
        let gaps: Vec<f64> = [1.0, 0.1, 0.01, 0.0]
            .iter()
            .map(|&tau| {
                let r = diverse_br_oracle(&g, &opp, &rows, &OracleConfig::default().with_tau(tau)).unwrap();
                (r.objective_value - br).abs()
            })
            .collect();
        for w in gaps.windows(2) {
            assert!(w[1] <= w[0], "{gaps:?}");
        }
        assert!(gaps[3] < 1e-9);
    }
}

#[test]
fn oracles_replay_bit_for_bit() {
    let g = make_random_zero_sum(7, 11).unwrap();
    let opp = MixedStrategy::uniform(7);
    let rows = DMatrix::from_fn(2, 7, |i, j| g.get(i, j));
    let cfg = OracleConfig::default().with_seed(5);
    let a = diverse_br_oracle(&g, &opp, &rows, &cfg).unwrap();
    let b = diverse_br_oracle(&g, &opp, &rows, &cfg).unwrap();
    assert_eq!(a.objective_value.to_bits(), b.objective_value.to_bits());

    let engine = gamescape::games::mixture_engine(Default::default()).unwrap();
    let opp_pop = vec![vec![5.0, 0.0]];
    let run = || zero_order_oracle(&engine, &opp_pop, &MixedStrategy::uniform(1), &[], &cfg).unwrap().objective_value;
    assert_eq!(run().to_bits(), run().to_bits());
}

#[test]
fn diverse_fp_exploitability_trends_down_after_burn_in() {
    // fictitious play oscillates step to step, so compare block maxima
    let cfg = TrainerConfig {
        iterations: 2000,
        tau: TauSchedule::Harmonic { c: 1.0 },
        ..TrainerConfig::default()
    };
    let (_, trace) = run_diverse_fp(&make_rps(), &cfg).unwrap();
    let blocks: Vec<f64> = trace[100..]
        .chunks(100)
        .map(|c| c.iter().map(|t| t.exploitability).fold(0.0, f64::max))
        .collect();
    for w in blocks.windows(2) {
        assert!(w[1] <= w[0] + 1e-4, "{blocks:?}");
    }
    assert!(blocks[blocks.len() - 1] < blocks[0] / 2.0);
}
