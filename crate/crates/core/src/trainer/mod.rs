//! Population learning loops: diverse fictitious play and PSRO.

mod fp;
mod psro;

pub use fp::{run_diverse_fp, run_diverse_fp_into};
pub use psro::{expand_payoff_table, run_psro, run_psro_into, termination_check};
pub(crate) use psro::check_compatibility;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{GameError, Result};
use crate::game::{MixedStrategy, PayoffMatrix, Player};
use crate::games::GameEngine;
use crate::meta::{AlphaRankParams, MetaSolver};
use crate::oracles::OracleConfig;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleKind {
    Br,
    DiverseBr,
    Rectified,
    Pbr,
    DiverseAlpha,
    Gradient,
    ZeroOrder,
}

impl OracleKind {
    pub fn needs_engine(self) -> bool {
        matches!(self, OracleKind::Gradient | OracleKind::ZeroOrder)
    }

    pub fn needs_alpha_rank(self) -> bool {
        matches!(self, OracleKind::Pbr | OracleKind::DiverseAlpha)
    }

    /// Whether additions trade payoff against population diversity at the
    /// given weight.
    pub fn diversity_aware(self, tau: f64) -> bool {
        match self {
            OracleKind::DiverseAlpha => true,
            OracleKind::DiverseBr | OracleKind::Gradient | OracleKind::ZeroOrder => tau > 0.0,
            _ => false,
        }
    }
}

impl std::str::FromStr for OracleKind {
    type Err = GameError;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.replace('-', "_").as_str() {
            "br" => OracleKind::Br,
            "diverse_br" => OracleKind::DiverseBr,
            "rectified" => OracleKind::Rectified,
            "pbr" => OracleKind::Pbr,
            "diverse_alpha" => OracleKind::DiverseAlpha,
            "gradient" => OracleKind::Gradient,
            "zero_order" => OracleKind::ZeroOrder,
            other => return Err(GameError::Config(format!("unknown oracle {other:?}"))),
        })
    }
}

/// Diversity weight as a function of the 1-based iteration `t`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TauSchedule {
    Constant { c: f64 },
    Harmonic { c: f64 },
    Geometric { c: f64, r: f64 },
}

impl TauSchedule {
    pub fn at(&self, t: usize) -> f64 {
        let t = t.max(1);
        match *self {
            TauSchedule::Constant { c } => c,
            TauSchedule::Harmonic { c } => c / t as f64,
            TauSchedule::Geometric { c, r } => c * r.powi(t as i32),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (c, r) = match *self {
            TauSchedule::Constant { c } | TauSchedule::Harmonic { c } => (c, 1.0),
            TauSchedule::Geometric { c, r } => (c, r),
        };
        if !(c >= 0.0) || !c.is_finite() || !(r > 0.0) || !r.is_finite() {
            return Err(GameError::Config(format!("invalid tau schedule {self:?}")));
        }
        Ok(())
    }
}

impl Default for TauSchedule {
    fn default() -> Self {
        TauSchedule::Constant { c: 1.0 }
    }
}

impl std::str::FromStr for TauSchedule {
    type Err = GameError;

    /// `0.5`, `harmonic:1`, `geometric:1:0.9` or `constant:2`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || GameError::Config(format!("cannot parse tau schedule {s:?}"));
        let num = |v: &str| v.trim().parse::<f64>().map_err(|_| bad());
        let parts: Vec<&str> = s.split(':').collect();
        let sched = match parts.as_slice() {
            [c] => TauSchedule::Constant { c: num(c)? },
            ["constant", c] => TauSchedule::Constant { c: num(c)? },
            ["harmonic", c] => TauSchedule::Harmonic { c: num(c)? },
            ["geometric", c, r] => TauSchedule::Geometric {
                c: num(c)?,
                r: num(r)?,
            },
            _ => return Err(bad()),
        };
        sched.validate()?;
        Ok(sched)
    }
}

/// Per-player solver settings, used to override player two in
/// head-to-head runs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlayerSettings {
    pub meta_solver: MetaSolver,
    pub oracle: OracleKind,
    #[serde(default)]
    pub tau: TauSchedule,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainerConfig {
    pub meta_solver: MetaSolver,
    pub oracle: OracleKind,
    pub iterations: usize,
    pub tau: TauSchedule,
    pub seed: u64,
    pub nash_epsilon: f64,
    pub oracle_cfg: OracleConfig,
    pub alpha_rank: AlphaRankParams,
    pub player_two: Option<PlayerSettings>,
    /// Restarts of the parameter-space best response used to bound
    /// exploitability on engines.
    pub exploit_restarts: usize,
}

impl Default for TrainerConfig {
    fn default() -> Self {
        TrainerConfig {
            meta_solver: MetaSolver::Nash,
            oracle: OracleKind::Br,
            iterations: 10,
            tau: TauSchedule::default(),
            seed: 0,
            nash_epsilon: 1e-4,
            oracle_cfg: OracleConfig::default(),
            alpha_rank: AlphaRankParams::default(),
            player_two: None,
            exploit_restarts: 16,
        }
    }
}

impl TrainerConfig {
    pub fn settings(&self, player: Player) -> PlayerSettings {
        match (player, self.player_two) {
            (Player::Two, Some(s)) => s,
            _ => PlayerSettings {
                meta_solver: self.meta_solver,
                oracle: self.oracle,
                tau: self.tau,
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(GameError::Config("iterations must be at least 1".into()));
        }
        if !(self.nash_epsilon > 0.0) {
            return Err(GameError::Config(format!(
                "nash_epsilon must be positive, got {}",
                self.nash_epsilon
            )));
        }
        if self.exploit_restarts == 0 {
            return Err(GameError::Config("exploit_restarts must be at least 1".into()));
        }
        self.oracle_cfg.validate()?;
        for p in Player::BOTH {
            let s = self.settings(p);
            s.tau.validate()?;
            if s.oracle.needs_alpha_rank() && s.meta_solver != MetaSolver::AlphaRank {
                return Err(GameError::Config(format!(
                    "{:?} oracle requires the alpha_rank meta solver ({p})",
                    s.oracle
                )));
            }
        }
        Ok(())
    }
}

/// Seed for player `p`'s oracle call at iteration `t`.
pub(crate) fn substream_seed(seed: u64, t: usize, p: Player) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((2 * t + p.index()) as u64);
    rng.next_u64()
}

/// A population member.
#[derive(Clone, Debug, PartialEq)]
pub enum Member {
    Pure(usize),
    /// A mixture over the game's pure strategies.
    Mixed(MixedStrategy),
    /// Engine parameters.
    Params(Vec<f64>),
}

impl Member {
    /// Probability vector over `n` pure strategies.
    pub fn as_mixed(&self, n: usize) -> Result<Vec<f64>> {
        match self {
            Member::Pure(i) if *i < n => Ok(MixedStrategy::pure(n, *i).into_vec()),
            Member::Pure(i) => Err(GameError::Index { index: *i, size: n }),
            Member::Mixed(m) if m.len() == n => Ok(m.probs().to_vec()),
            Member::Mixed(m) => Err(GameError::Shape(format!("mixture over {}, game has {n}", m.len()))),
            Member::Params(_) => Err(GameError::Config("parameter member in a normal-form game".into())),
        }
    }

    pub fn params(&self) -> Option<&[f64]> {
        match self {
            Member::Params(p) => Some(p),
            _ => None,
        }
    }
}

/// Where payoffs come from.
#[derive(Clone, Copy)]
pub enum Backend<'a> {
    Matrix(&'a PayoffMatrix),
    Engine(&'a dyn GameEngine),
}

impl Backend<'_> {
    /// Player one's payoff when `a` meets `b`.
    pub fn evaluate(&self, a: &Member, b: &Member) -> Result<f64> {
        match self {
            Backend::Matrix(g) => match (a, b) {
                (Member::Pure(i), Member::Pure(j)) if *i < g.rows() && *j < g.cols() => Ok(g.get(*i, *j)),
                _ => {
                    let x = DVector::from_vec(a.as_mixed(g.rows())?);
                    let y = DVector::from_vec(b.as_mixed(g.cols())?);
                    Ok(x.dot(&(g.values() * y)))
                }
            },
            Backend::Engine(e) => match (a.params(), b.params()) {
                (Some(x), Some(y)) if x.len() == e.param_dim() && y.len() == e.param_dim() => Ok(e.evaluate(x, y)),
                _ => Err(GameError::Config(format!(
                    "engine members must be parameter vectors of length {}",
                    e.param_dim()
                ))),
            },
        }
    }

    pub fn is_engine(&self) -> bool {
        matches!(self, Backend::Engine(_))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Population {
    pub strategies: [Vec<Member>; 2],
    /// Player one's payoffs; player two receives the negation.
    pub meta_payoff: PayoffMatrix,
    pub generation: usize,
}

impl Population {
    pub fn new(p1: Vec<Member>, p2: Vec<Member>, backend: Backend) -> Result<Self> {
        if p1.is_empty() || p2.is_empty() {
            return Err(GameError::EmptyPopulation);
        }
        let mut pop = Population {
            strategies: [p1, p2],
            meta_payoff: PayoffMatrix::zero_sum(DMatrix::zeros(0, 0))?,
            generation: 0,
        };
        expand_payoff_table(&mut pop, backend)?;
        Ok(pop)
    }

    /// One uniformly random pure strategy per player.
    pub fn initial_nfg(g: &PayoffMatrix, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = rng.random_range(0..g.rows());
        let b = rng.random_range(0..g.cols());
        Population::new(vec![Member::Pure(a)], vec![Member::Pure(b)], Backend::Matrix(g))
    }

    /// One standard-Gaussian parameter vector per player.
    pub fn initial_engine(engine: &dyn GameEngine, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut draw = || -> Vec<f64> {
            (0..engine.param_dim())
                .map(|_| rng.sample::<f64, _>(StandardNormal))
                .collect()
        };
        let (a, b) = (draw(), draw());
        Population::new(vec![Member::Params(a)], vec![Member::Params(b)], Backend::Engine(engine))
    }

    pub fn sizes(&self) -> [usize; 2] {
        [self.strategies[0].len(), self.strategies[1].len()]
    }

    pub fn get(&self, p: Player) -> &[Member] {
        &self.strategies[p.index()]
    }

    /// Player `p`'s payoff rows against the opponent population.
    pub fn rows(&self, p: Player) -> DMatrix<f64> {
        match p {
            Player::One => self.meta_payoff.values().clone(),
            Player::Two => -self.meta_payoff.values().transpose(),
        }
    }

    /// Pure-strategy indices of player `p`'s members, in order.
    pub fn pure_indices(&self, p: Player) -> Option<Vec<usize>> {
        self.get(p)
            .iter()
            .map(|m| match m {
                Member::Pure(i) => Some(*i),
                _ => None,
            })
            .collect()
    }
}

/// One diversity-aware addition and its gamescape check.
#[derive(Clone, Debug, PartialEq)]
pub struct Addition {
    pub player: Player,
    /// Increase in the player's population diversity.
    pub gain: f64,
    /// Whether the new payoff row lies outside the hull of the old rows.
    pub outside_hull: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct IterationTrace {
    pub iteration: usize,
    /// Sum over players of the best-response gain; a lower bound on
    /// engines.
    pub exploitability: f64,
    /// Each player's shortfall from the game value under best-response
    /// attack.
    pub player_exploitability: [f64; 2],
    pub exploitability_is_lower_bound: bool,
    /// Expected cardinality of player one's payoff rows.
    pub diversity: f64,
    pub ed: f64,
    pub population_sizes: [usize; 2],
    /// Whether every diversity-aware addition that raised diversity by more
    /// than `1e-6` enlarged the gamescape; `None` without such oracles.
    pub enlarged: Option<bool>,
    pub additions: Vec<Addition>,
    pub wall_ms: u64,
}
