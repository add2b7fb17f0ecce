use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use super::{OracleConfig, OracleResult, OracleStrategy};
use crate::diversity::RowDiversity;
use crate::error::{GameError, Result};
use crate::game::MixedStrategy;
use crate::games::GameEngine;

const FD_STEP: f64 = 1e-5;

/// Meta-weighted payoff of a parameter vector against an opponent
/// population, plus `tau` times the diversity of the own population's rows
/// with the candidate's row appended.
pub struct EngineObjective<'a> {
    engine: &'a dyn GameEngine,
    opponents: &'a [Vec<f64>],
    weights: Vec<f64>,
    tau: f64,
    div: RowDiversity,
}

pub fn engine_objective<'a>(
    engine: &'a dyn GameEngine,
    opponent_pop: &'a [Vec<f64>],
    opponent_meta: &MixedStrategy,
    own_pop: &[Vec<f64>],
    tau: f64,
) -> Result<EngineObjective<'a>> {
    if opponent_pop.is_empty() {
        return Err(GameError::EmptyPopulation);
    }
    if opponent_meta.len() != opponent_pop.len() {
        return Err(GameError::Shape(format!(
            "meta-strategy over {} for {} opponents",
            opponent_meta.len(),
            opponent_pop.len()
        )));
    }
    let dim = engine.param_dim();
    if let Some(bad) = opponent_pop.iter().chain(own_pop).find(|t| t.len() != dim) {
        return Err(GameError::Shape(format!(
            "parameter vector of length {}, engine expects {dim}",
            bad.len()
        )));
    }
    let rows = DMatrix::from_fn(own_pop.len(), opponent_pop.len(), |i, j| {
        engine.evaluate(&own_pop[i], &opponent_pop[j])
    });
    Ok(EngineObjective {
        engine,
        opponents: opponent_pop,
        weights: opponent_meta.probs().to_vec(),
        tau,
        div: RowDiversity::new(&rows),
    })
}

impl EngineObjective<'_> {
    fn row(&self, theta: &[f64]) -> Vec<f64> {
        self.opponents.iter().map(|s| self.engine.evaluate(theta, s)).collect()
    }

    pub fn payoff(&self, theta: &[f64]) -> f64 {
        self.row(theta).iter().zip(&self.weights).map(|(v, w)| v * w).sum()
    }

    pub fn value(&self, theta: &[f64]) -> f64 {
        let row = self.row(theta);
        let payoff: f64 = row.iter().zip(&self.weights).map(|(v, w)| v * w).sum();
        if self.tau == 0.0 {
            payoff
        } else {
            payoff + self.tau * self.div.with_row(&row)
        }
    }

    fn payoff_gradient(&self, theta: &[f64], s: &[f64]) -> Vec<f64> {
        if let Some(g) = self.engine.gradient(theta, s) {
            return g;
        }
        let mut t = theta.to_vec();
        (0..theta.len())
            .map(|d| {
                t[d] = theta[d] + FD_STEP;
                let up = self.engine.evaluate(&t, s);
                t[d] = theta[d] - FD_STEP;
                let down = self.engine.evaluate(&t, s);
                t[d] = theta[d];
                (up - down) / (2.0 * FD_STEP)
            })
            .collect()
    }

    /// Chains the row-space gradient through each opponent's payoff gradient.
    pub fn gradient(&self, theta: &[f64]) -> Vec<f64> {
        let coef: Vec<f64> = if self.tau == 0.0 {
            self.weights.clone()
        } else {
            let dg = self.div.gradient(&self.row(theta));
            self.weights.iter().zip(dg).map(|(w, d)| w + self.tau * d).collect()
        };
        let mut out = vec![0.0; theta.len()];
        for (s, c) in self.opponents.iter().zip(coef) {
            if c == 0.0 {
                continue;
            }
            for (o, g) in out.iter_mut().zip(self.payoff_gradient(theta, s)) {
                *o += c * g;
            }
        }
        out
    }

    fn ascend(&self, start: Vec<f64>, cfg: &OracleConfig) -> (Vec<f64>, f64, bool) {
        let mut x = start;
        let mut fx = self.value(&x);
        for _ in 0..cfg.max_iters {
            let grad = self.gradient(&x);
            let mut step = cfg.step_size;
            let mut next = None;
            for _ in 0..=30 {
                let y: Vec<f64> = x.iter().zip(&grad).map(|(p, d)| p + step * d).collect();
                let fy = self.value(&y);
                if fy >= fx {
                    next = Some((y, fy));
                    break;
                }
                step *= 0.5;
            }
            let Some((y, fy)) = next else {
                return (x, fx, true);
            };
            let moved = x.iter().zip(&y).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            let gained = fy - fx;
            x = y;
            fx = fy;
            if moved < 1e-12 || gained <= 1e-15 * (1.0 + fx.abs()) {
                return (x, fx, true);
            }
        }
        (x, fx, false)
    }
}

fn restart_start(cfg: &OracleConfig, k: usize, dim: usize) -> (Vec<f64>, rand_chacha::ChaCha8Rng) {
    let mut rng = cfg.restart_rng(k);
    let start = (0..dim)
        .map(|_| cfg.init_scale * rng.sample::<f64, _>(StandardNormal))
        .collect();
    (start, rng)
}

fn best_of(runs: Vec<(Vec<f64>, f64, bool)>) -> OracleResult {
    let values: Vec<f64> = runs.iter().map(|r| r.1).collect();
    let converged = runs.iter().all(|r| r.2);
    let (x, fx, _) = runs
        .into_iter()
        .reduce(|a, b| if b.1 > a.1 { b } else { a })
        .expect("at least one restart");
    OracleResult {
        strategy: OracleStrategy::Params(x),
        objective_value: fx,
        converged,
        restart_objectives: values,
    }
}

/// Gradient ascent on the diversity-regularised payoff. Engines without
/// gradients need `cfg.finite_difference_fallback`.
pub fn diverse_gradient_oracle(
    engine: &dyn GameEngine,
    opponent_pop: &[Vec<f64>],
    opponent_meta: &MixedStrategy,
    own_pop: &[Vec<f64>],
    cfg: &OracleConfig,
) -> Result<OracleResult> {
    cfg.validate()?;
    if !engine.differentiable() && !cfg.finite_difference_fallback {
        return Err(GameError::Config(
            "engine has no gradient; enable the finite-difference fallback or use the zero-order oracle".into(),
        ));
    }
    let obj = engine_objective(engine, opponent_pop, opponent_meta, own_pop, cfg.tau)?;
    let runs = (0..cfg.restarts)
        .map(|k| obj.ascend(restart_start(cfg, k, engine.param_dim()).0, cfg))
        .collect();
    Ok(best_of(runs))
}

/// Antithetic evolution-strategies search on the same objective. Each
/// restart keeps the best iterate it visits.
pub fn zero_order_oracle(
    engine: &dyn GameEngine,
    opponent_pop: &[Vec<f64>],
    opponent_meta: &MixedStrategy,
    own_pop: &[Vec<f64>],
    cfg: &OracleConfig,
) -> Result<OracleResult> {
    cfg.validate()?;
    let obj = engine_objective(engine, opponent_pop, opponent_meta, own_pop, cfg.tau)?;
    let dim = engine.param_dim();
    let sigma = cfg.perturbation_std;
    let k = cfg.perturbation_count;
    let runs = (0..cfg.restarts)
        .map(|r| {
            let (mut x, mut rng) = restart_start(cfg, r, dim);
            let mut best = (x.clone(), obj.value(&x));
            for _ in 0..cfg.max_iters {
                let mut dir = vec![0.0; dim];
                let mut plus = vec![0.0; dim];
                let mut minus = vec![0.0; dim];
                for _ in 0..k {
                    let eps: Vec<f64> = (0..dim).map(|_| sigma * rng.sample::<f64, _>(StandardNormal)).collect();
                    for d in 0..dim {
                        plus[d] = x[d] + eps[d];
                        minus[d] = x[d] - eps[d];
                    }
                    let diff = obj.value(&plus) - obj.value(&minus);
                    for d in 0..dim {
                        dir[d] += diff * eps[d];
                    }
                }
                let scale = cfg.step_size / (2.0 * k as f64 * sigma * sigma);
                for d in 0..dim {
                    x[d] += scale * dir[d];
                }
                let fx = obj.value(&x);
                if fx > best.1 {
                    best = (x.clone(), fx);
                }
            }
            (best.0, best.1, true)
        })
        .collect();
    Ok(best_of(runs))
}
