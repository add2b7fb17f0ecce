//! α-Rank: stationary distribution of a finite-population evolutionary
//! Markov chain over the response graph's nodes.
//!
//! From a monomorphic state a single mutant deviation fixates with the
//! Moran-process probability
//! `rho(d) = (1 - exp(-alpha d)) / (1 - exp(-m alpha d))` for payoff gain
//! `d` (and `1/m` when `d = 0`). A uniform mutation floor keeps the chain
//! ergodic. The stationary distribution is computed with the
//! Grassmann-Taksar-Heyman elimination, which involves no subtractions and
//! stays accurate for nearly decomposable chains.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{GameError, Result};
use crate::game::{JointProfile, MixedStrategy, PayoffMatrix, Player};
use crate::meta::graph::{build_response_graph, is_single_population, sink_components, Node};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AlphaRankParams {
    pub alpha: f64,
    pub population_m: usize,
    /// Weight of the uniform jump mixed into every row.
    pub mutation_floor: f64,
}

impl Default for AlphaRankParams {
    fn default() -> Self {
        AlphaRankParams {
            alpha: 10.0,
            population_m: 50,
            mutation_floor: 1e-10,
        }
    }
}

#[derive(Clone, Debug)]
pub struct AlphaRankResult {
    pub nodes: Vec<Node>,
    pub stationary: Vec<f64>,
    /// Sink SCCs of the response graph (the infinite-α support).
    pub sscc: Vec<Vec<usize>>,
    /// Row-stochastic transition matrix, mutation floor included.
    pub transition: DMatrix<f64>,
}

impl AlphaRankResult {
    /// Per-player marginals. Single-population results give the same
    /// distribution to both players.
    pub fn marginals(&self, rows: usize, cols: usize) -> JointProfile {
        let mut p1 = vec![0.0; rows];
        let mut p2 = vec![0.0; cols];
        for (node, mass) in self.nodes.iter().zip(&self.stationary) {
            match *node {
                Node::Strategy(s) => {
                    p1[s] += mass;
                    p2[s] += mass;
                }
                Node::Profile(i, j) => {
                    p1[i] += mass;
                    p2[j] += mass;
                }
            }
        }
        JointProfile::new(
            MixedStrategy::from_weights(&p1).expect("stationary mass is positive"),
            MixedStrategy::from_weights(&p2).expect("stationary mass is positive"),
        )
    }
}

/// Moran fixation probability of a mutant gaining `gain` over the resident.
pub fn fixation_probability(gain: f64, alpha: f64, m: usize) -> f64 {
    let x = alpha * gain;
    let m = m as f64;
    if x == 0.0 {
        1.0 / m
    } else if x > 0.0 {
        (-x).exp_m1() / (-m * x).exp_m1()
    } else {
        let a = -x;
        (-(m - 1.0) * a).exp() * (-a).exp_m1() / (-m * a).exp_m1()
    }
}

/// α-Rank with the single-population chain for antisymmetric square tables
/// and the two-population chain otherwise.
pub fn alpha_rank(m: &PayoffMatrix, alpha: f64, population_m: usize) -> Result<AlphaRankResult> {
    let params = AlphaRankParams {
        alpha,
        population_m,
        ..AlphaRankParams::default()
    };
    alpha_rank_with(m, &params, is_single_population(m))
}

pub fn alpha_rank_with(m: &PayoffMatrix, params: &AlphaRankParams, single_population: bool) -> Result<AlphaRankResult> {
    if !(params.alpha >= 0.0) || !params.alpha.is_finite() {
        return Err(GameError::Config(format!("alpha must be >= 0, got {}", params.alpha)));
    }
    if params.population_m < 2 {
        return Err(GameError::Config(format!(
            "population size must be >= 2, got {}",
            params.population_m
        )));
    }
    if !(0.0..1.0).contains(&params.mutation_floor) {
        return Err(GameError::Config("mutation floor must lie in [0, 1)".into()));
    }
    if m.rows() == 0 || m.cols() == 0 {
        return Err(GameError::EmptyPopulation);
    }
    let graph = build_response_graph(m, single_population)?;
    let n = graph.len();
    let rho = |gain: f64| fixation_probability(gain, params.alpha, params.population_m);

    let mut c = DMatrix::zeros(n, n);
    if single_population {
        if n > 1 {
            let eta = 1.0 / (n - 1) as f64;
            for i in 0..n {
                for j in 0..n {
                    if j != i {
                        c[(i, j)] = eta * rho(m.get(j, i) - m.get(i, i));
                    }
                }
            }
        }
    } else {
        let (r, k) = (m.rows(), m.cols());
        let moves = (r - 1) + (k - 1);
        if moves > 0 {
            let eta = 1.0 / moves as f64;
            for i in 0..r {
                for j in 0..k {
                    let from = i * k + j;
                    for i2 in (0..r).filter(|&x| x != i) {
                        let gain = m.payoff(Player::One, i2, j) - m.payoff(Player::One, i, j);
                        c[(from, i2 * k + j)] = eta * rho(gain);
                    }
                    for j2 in (0..k).filter(|&x| x != j) {
                        let gain = m.payoff(Player::Two, i, j2) - m.payoff(Player::Two, i, j);
                        c[(from, i * k + j2)] = eta * rho(gain);
                    }
                }
            }
        }
    }
    for i in 0..n {
        let off: f64 = (0..n).filter(|&j| j != i).map(|j| c[(i, j)]).sum();
        c[(i, i)] = (1.0 - off).max(0.0);
    }
    let eps = params.mutation_floor;
    if eps > 0.0 {
        c = c * (1.0 - eps);
        c.add_scalar_mut(eps / n as f64);
    }
    let stationary = gth_stationary(&c);
    Ok(AlphaRankResult {
        nodes: graph.nodes.clone(),
        sscc: sink_components(&graph),
        stationary,
        transition: c,
    })
}

/// Stationary distribution of an irreducible row-stochastic matrix.
pub fn gth_stationary(p: &DMatrix<f64>) -> Vec<f64> {
    let n = p.nrows();
    if n == 1 {
        return vec![1.0];
    }
    let mut a = p.clone();
    for k in (1..n).rev() {
        let s: f64 = (0..k).map(|j| a[(k, j)]).sum();
        if s <= 0.0 {
            // state k cannot leave towards lower states; treat it as absorbing
            // for the reduced chain
            continue;
        }
        for i in 0..k {
            a[(i, k)] /= s;
        }
        for i in 0..k {
            let f = a[(i, k)];
            if f != 0.0 {
                for j in 0..k {
                    a[(i, j)] += f * a[(k, j)];
                }
            }
        }
    }
    let mut x = vec![0.0; n];
    x[0] = 1.0;
    for j in 1..n {
        x[j] = (0..j).map(|i| x[i] * a[(i, j)]).sum();
    }
    let total: f64 = x.iter().sum();
    x.iter_mut().for_each(|v| *v /= total);
    x
}
