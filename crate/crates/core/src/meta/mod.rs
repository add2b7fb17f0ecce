//! Meta-strategy solvers over a population's payoff table.

mod alpha_rank;
mod graph;
mod nash;

pub use alpha_rank::{alpha_rank, alpha_rank_with, fixation_probability, gth_stationary, AlphaRankParams, AlphaRankResult};
pub use graph::{
    build_response_graph, find_sscc_bruteforce, is_single_population, sink_components, sscc_members, Node,
    ResponseGraph,
};
pub use nash::{game_value, solve_nash_zero_sum};

use serde::{Deserialize, Serialize};

use crate::error::{GameError, Result};
use crate::game::{JointProfile, MixedStrategy, PayoffMatrix};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetaSolver {
    Nash,
    Uniform,
    SelfPlay,
    AlphaRank,
}

impl std::str::FromStr for MetaSolver {
    type Err = GameError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "nash" => Ok(MetaSolver::Nash),
            "uniform" => Ok(MetaSolver::Uniform),
            "self_play" | "self-play" => Ok(MetaSolver::SelfPlay),
            "alpha_rank" | "alpha-rank" => Ok(MetaSolver::AlphaRank),
            other => Err(GameError::Config(format!("unknown meta solver {other:?}"))),
        }
    }
}

pub fn solve_uniform(population_size: usize) -> Result<MixedStrategy> {
    if population_size == 0 {
        return Err(GameError::EmptyPopulation);
    }
    Ok(MixedStrategy::uniform(population_size))
}

/// All mass on the most recently added strategy.
pub fn solve_self_play(population_size: usize) -> Result<MixedStrategy> {
    if population_size == 0 {
        return Err(GameError::EmptyPopulation);
    }
    Ok(MixedStrategy::pure(population_size, population_size - 1))
}

/// Meta-strategies for both players on a (possibly rectangular) table.
/// α-Rank always uses the two-population chain here, since the two
/// populations are tracked separately.
pub fn solve_meta(
    solver: MetaSolver,
    table: &PayoffMatrix,
    nash_epsilon: f64,
    alpha: &AlphaRankParams,
) -> Result<JointProfile> {
    let (r, c) = (table.rows(), table.cols());
    match solver {
        MetaSolver::Nash => solve_nash_zero_sum(table, nash_epsilon),
        MetaSolver::Uniform => Ok(JointProfile::new(solve_uniform(r)?, solve_uniform(c)?)),
        MetaSolver::SelfPlay => Ok(JointProfile::new(solve_self_play(r)?, solve_self_play(c)?)),
        MetaSolver::AlphaRank => Ok(alpha_rank_with(table, alpha, false)?.marginals(r, c)),
    }
}
