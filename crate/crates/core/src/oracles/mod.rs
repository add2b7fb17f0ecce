//! Best-response oracles, plain and diversity-aware.

mod engine;
mod nfg;

pub use engine::{diverse_gradient_oracle, engine_objective, zero_order_oracle, EngineObjective};
pub use nfg::{
    diverse_alpha_oracle, diverse_alpha_scores, diverse_br_objective, diverse_br_oracle,
    diverse_br_oracle_with, diverse_pure_oracle, epsilon_br_oracle,
    pbr_oracle, pbr_values, rectified_oracle, rectified_scores,
};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{GameError, Result};
use crate::game::MixedStrategy;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OracleConfig {
    /// Weight of the diversity term.
    pub tau: f64,
    pub max_iters: usize,
    pub step_size: f64,
    pub restarts: usize,
    pub tolerance: f64,
    pub perturbation_std: f64,
    pub perturbation_count: usize,
    /// Standard deviation of the Gaussian restart initialisation for
    /// parameter-space oracles.
    pub init_scale: f64,
    /// Allow central differences when the engine has no gradient.
    pub finite_difference_fallback: bool,
    /// Fail when simplex restarts disagree by more than ten times the
    /// tolerance instead of returning the best one.
    pub restart_alarm: bool,
    pub seed: u64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            tau: 1.0,
            max_iters: 500,
            step_size: 0.1,
            restarts: 5,
            tolerance: 1e-6,
            perturbation_std: 0.1,
            perturbation_count: 32,
            init_scale: 1.0,
            finite_difference_fallback: false,
            restart_alarm: false,
            seed: 0,
        }
    }
}

impl OracleConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("step_size", self.step_size),
            ("tolerance", self.tolerance),
            ("perturbation_std", self.perturbation_std),
            ("init_scale", self.init_scale),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(GameError::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.tau >= 0.0) || !self.tau.is_finite() {
            return Err(GameError::Config(format!("tau must be >= 0, got {}", self.tau)));
        }
        if self.restarts == 0 || self.max_iters == 0 || self.perturbation_count == 0 {
            return Err(GameError::Config(
                "restarts, max_iters and perturbation_count must be at least 1".into(),
            ));
        }
        Ok(())
    }

    pub fn with_tau(&self, tau: f64) -> Self {
        OracleConfig { tau, ..self.clone() }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        OracleConfig { seed, ..self.clone() }
    }

    /// Independent generator for restart `k`.
    pub(crate) fn restart_rng(&self, k: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(k as u64 + 1);
        rng
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum OracleStrategy {
    /// A pure strategy of a normal-form game.
    Pure(usize),
    Mixed(MixedStrategy),
    /// Parameters of an engine strategy.
    Params(Vec<f64>),
}

impl OracleStrategy {
    pub fn pure_index(&self) -> Option<usize> {
        match self {
            OracleStrategy::Pure(i) => Some(*i),
            _ => None,
        }
    }

    pub fn mixed(&self, n: usize) -> Option<MixedStrategy> {
        match self {
            OracleStrategy::Pure(i) => Some(MixedStrategy::pure(n, *i)),
            OracleStrategy::Mixed(m) => Some(m.clone()),
            OracleStrategy::Params(_) => None,
        }
    }

    pub fn params(&self) -> Option<&[f64]> {
        match self {
            OracleStrategy::Params(p) => Some(p),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OracleResult {
    pub strategy: OracleStrategy,
    pub objective_value: f64,
    pub converged: bool,
    /// Final objective of every restart, in restart order; a single entry
    /// for direct-search oracles.
    pub restart_objectives: Vec<f64>,
}

impl OracleResult {
    pub(crate) fn direct(strategy: OracleStrategy, value: f64) -> Self {
        OracleResult {
            strategy,
            objective_value: value,
            converged: true,
            restart_objectives: vec![value],
        }
    }

    pub fn restart_spread(&self) -> f64 {
        let lo = self.restart_objectives.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = self.restart_objectives.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        hi - lo
    }
}

/// Euclidean projection onto the probability simplex (sort-based).
pub fn project_to_simplex(v: &[f64]) -> Vec<f64> {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (k, &x) in u.iter().enumerate() {
        cum += x;
        let t = (cum - 1.0) / (k + 1) as f64;
        if x - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|x| (x - theta).max(0.0)).collect()
}
