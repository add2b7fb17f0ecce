use std::time::Instant;

use nalgebra::{DMatrix, DVector};

use super::{substream_seed, IterationTrace, TrainerConfig};
use crate::diversity::{effective_diversity, RowDiversity};
use crate::error::Result;
use crate::game::{best_response, exploitability, JointProfile, MixedStrategy, PayoffMatrix, Player};
use crate::meta::game_value;
use crate::oracles::diverse_br_oracle_with;

/// Diverse fictitious play: each player mixes `1/t` of a diversity-regularised
/// best response into its running average. The population whose diversity
/// is rewarded is the sequence of past responses.
pub fn run_diverse_fp(g: &PayoffMatrix, cfg: &TrainerConfig) -> Result<(JointProfile, Vec<IterationTrace>)> {
    let mut traces = Vec::with_capacity(cfg.iterations);
    let profile = run_diverse_fp_into(g, cfg, &mut traces)?;
    Ok((profile, traces))
}

/// As [`run_diverse_fp`], appending to `traces` as it goes.
pub fn run_diverse_fp_into(g: &PayoffMatrix, cfg: &TrainerConfig, traces: &mut Vec<IterationTrace>) -> Result<JointProfile> {
    cfg.validate()?;
    let value = game_value(g)?;
    let views = [g.view(Player::One), g.view(Player::Two)];
    let mut avg = [MixedStrategy::uniform(g.rows()), MixedStrategy::uniform(g.cols())];
    // I + M^T M of each player's past response rows
    let mut gram: [DMatrix<f64>; 2] = [0, 1].map(|k| {
        let d = views[k].cols();
        DMatrix::identity(d, d)
    });
    for t in 1..=cfg.iterations {
        let clock = Instant::now();
        let mut responses = Vec::with_capacity(2);
        for p in Player::BOTH {
            let k = p.index();
            let tau = cfg.settings(p).tau.at(t);
            let opp = &avg[p.other().index()];
            let response = if tau == 0.0 {
                MixedStrategy::pure(views[k].rows(), best_response(&views[k], opp, Player::One)?.0)
            } else {
                let ocfg = cfg.oracle_cfg.with_tau(tau).with_seed(substream_seed(cfg.seed, t, p));
                let div = RowDiversity::from_gram(gram[k].clone());
                let r = diverse_br_oracle_with(&views[k], opp, div, &ocfg)?;
                r.strategy.mixed(views[k].rows()).expect("normal-form strategy")
            };
            responses.push(response);
        }
        let step = 1.0 / t as f64;
        for (p, r) in Player::BOTH.into_iter().zip(responses) {
            let k = p.index();
            let row = views[k].values().tr_mul(&DVector::from_column_slice(r.probs()));
            gram[k] += &row * row.transpose();
            avg[k] = avg[k].mix(&r, step);
        }
        let profile = JointProfile::new(avg[0].clone(), avg[1].clone());
        let expl = exploitability(g, &profile)?;
        let (_, br2) = best_response(g, &profile.pi1, Player::Two)?;
        let (_, br1) = best_response(g, &profile.pi2, Player::One)?;
        traces.push(IterationTrace {
            iteration: t,
            exploitability: expl,
            player_exploitability: [value + br2, br1 - value],
            exploitability_is_lower_bound: false,
            diversity: RowDiversity::from_gram(gram[0].clone()).value(),
            ed: effective_diversity(g, &profile)?,
            population_sizes: [t, t],
            enlarged: None,
            additions: Vec::new(),
            wall_ms: clock.elapsed().as_millis() as u64,
        });
    }
    Ok(JointProfile::new(avg[0].clone(), avg[1].clone()))
}
