use std::time::Instant;

use nalgebra::{DMatrix, DVector};

use super::{substream_seed, Addition, Backend, IterationTrace, Member, OracleKind, Population, TrainerConfig};
use crate::diversity::{effective_diversity, row_diversity, RowDiversity};
use crate::error::{GameError, Result};
use crate::game::{argmax_first, best_response, exploitability, JointProfile, MixedStrategy, PayoffMatrix, Player};
use crate::games::GameEngine;
use crate::harness::{verify_enlargement, HULL_TOL};
use crate::meta::{game_value, solve_meta, solve_nash_zero_sum, MetaSolver};
use crate::oracles::{
    diverse_alpha_scores, diverse_br_oracle, diverse_gradient_oracle, engine_objective, epsilon_br_oracle,
    pbr_values, rectified_scores, zero_order_oracle, OracleConfig, OracleStrategy,
};

/// Gain in diversity above which an addition must enlarge the gamescape.
const ENLARGEMENT_GAIN: f64 = 1e-6;

/// Fills the table entries of newly appended members. Existing entries are
/// copied unchanged.
pub fn expand_payoff_table(pop: &mut Population, backend: Backend) -> Result<()> {
    let old = pop.meta_payoff.values();
    let (r0, c0) = old.shape();
    let [r, c] = pop.sizes();
    if r < r0 || c < c0 {
        return Err(GameError::Shape("populations cannot shrink".into()));
    }
    if (r, c) == (r0, c0) {
        return Ok(());
    }
    let mut m = DMatrix::zeros(r, c);
    m.view_mut((0, 0), (r0, c0)).copy_from(old);
    for i in 0..r {
        for j in 0..c {
            if i < r0 && j < c0 {
                continue;
            }
            m[(i, j)] = backend
                .evaluate(&pop.strategies[0][i], &pop.strategies[1][j])
                .map_err(|e| GameError::Config(format!("evaluating pair ({i}, {j}): {e}")))?;
        }
    }
    pop.meta_payoff = PayoffMatrix::zero_sum(m)?;
    Ok(())
}

/// True iff neither player's oracle improves on its incumbents by more than
/// `epsilon`.
pub fn termination_check(improvements: [f64; 2], epsilon: f64) -> bool {
    improvements.iter().all(|v| *v <= epsilon)
}

struct Response {
    member: Member,
    improvement: f64,
}

struct Context<'a> {
    backend: Backend<'a>,
    cfg: &'a TrainerConfig,
    /// Game value to player one, when known.
    value: Option<f64>,
}

pub(crate) fn check_compatibility(backend: Backend, cfg: &TrainerConfig, initial: &Population) -> Result<()> {
    cfg.validate()?;
    for p in Player::BOTH {
        let kind = cfg.settings(p).oracle;
        if kind.needs_engine() != backend.is_engine() {
            return Err(GameError::Config(format!(
                "{kind:?} oracle cannot run on a {} backend",
                if backend.is_engine() { "engine" } else { "normal-form" }
            )));
        }
        if kind == OracleKind::DiverseAlpha && initial.pure_indices(p).is_none() {
            return Err(GameError::Config("diverse_alpha needs a pure-strategy population".into()));
        }
    }
    match backend {
        Backend::Matrix(g) if !g.is_zero_sum() => Err(GameError::Config("PSRO needs a zero-sum game".into())),
        Backend::Engine(e) if !e.symmetric() => {
            Err(GameError::Config("PSRO needs a symmetric zero-sum engine".into()))
        }
        _ => Ok(()),
    }
}

/// Runs PSRO from `initial`. Each iteration solves both meta-games, asks
/// both oracles for one new strategy, and stops early once neither oracle
/// improves on its incumbents by more than `cfg.nash_epsilon`.
pub fn run_psro(
    backend: Backend,
    cfg: &TrainerConfig,
    initial: Population,
) -> Result<(Population, Vec<IterationTrace>)> {
    let mut traces = Vec::with_capacity(cfg.iterations);
    let pop = run_psro_into(backend, cfg, initial, &mut traces)?;
    Ok((pop, traces))
}

/// As [`run_psro`], appending to `traces` as it goes so that iterations
/// completed before an error are kept.
pub fn run_psro_into(
    backend: Backend,
    cfg: &TrainerConfig,
    initial: Population,
    traces: &mut Vec<IterationTrace>,
) -> Result<Population> {
    check_compatibility(backend, cfg, &initial)?;
    let value = match backend {
        Backend::Matrix(g) => Some(game_value(g)?),
        Backend::Engine(_) => None,
    };
    let ctx = Context { backend, cfg, value };
    let mut pop = initial;
    expand_payoff_table(&mut pop, backend)?;
    let mut profiles = ctx.solve(&pop)?;
    for t in 1..=cfg.iterations {
        let clock = Instant::now();
        let mut responses = Vec::with_capacity(2);
        for p in Player::BOTH {
            responses.push(ctx.respond(&pop, &profiles[p.index()], p, t)?);
        }
        let improvements = [responses[0].improvement, responses[1].improvement];
        if termination_check(improvements, cfg.nash_epsilon) {
            traces.push(ctx.trace(&pop, &profiles, t, Vec::new(), false, clock)?);
            break;
        }
        let mut additions = Vec::new();
        let mut any_aware = false;
        // a player whose oracle found nothing better keeps its population
        let responses: Vec<_> = Player::BOTH
            .into_iter()
            .zip(responses)
            .filter(|(_, r)| r.improvement > cfg.nash_epsilon)
            .collect();
        for (p, r) in &responses {
            let s = cfg.settings(*p);
            if s.oracle.diversity_aware(s.tau.at(t)) {
                any_aware = true;
                additions.push(ctx.addition(&pop, *p, &r.member)?);
            }
        }
        for (p, r) in responses {
            pop.strategies[p.index()].push(r.member);
        }
        pop.generation += 1;
        expand_payoff_table(&mut pop, backend)?;
        profiles = ctx.solve(&pop)?;
        traces.push(ctx.trace(&pop, &profiles, t, additions, any_aware, clock)?);
    }
    Ok(pop)
}

/// Payoff of member `m` of player `p` against each opponent member.
fn member_row(backend: Backend, pop: &Population, p: Player, m: &Member) -> Result<Vec<f64>> {
    pop.get(p.other())
        .iter()
        .map(|o| match p {
            Player::One => backend.evaluate(m, o),
            Player::Two => backend.evaluate(o, m).map(|v| -v),
        })
        .collect()
}

/// Mixture of player `p`'s members as a strategy of the full game.
fn full_strategy(g: &PayoffMatrix, pop: &Population, p: Player, meta: &MixedStrategy) -> Result<MixedStrategy> {
    let n = match p {
        Player::One => g.rows(),
        Player::Two => g.cols(),
    };
    let mut out = vec![0.0; n];
    for (m, w) in pop.get(p).iter().zip(meta.probs()) {
        if *w == 0.0 {
            continue;
        }
        for (o, x) in out.iter_mut().zip(m.as_mixed(n)?) {
            *o += w * x;
        }
    }
    MixedStrategy::from_weights(&out)
}

/// Player `p`'s members as rows over the opponent's pure strategies.
fn full_rows(gp: &PayoffMatrix, pop: &Population, p: Player) -> Result<DMatrix<f64>> {
    let members = pop.get(p);
    let mut rows = DMatrix::zeros(members.len(), gp.cols());
    for (k, m) in members.iter().enumerate() {
        let x = DVector::from_vec(m.as_mixed(gp.rows())?);
        rows.set_row(k, &gp.values().tr_mul(&x).transpose());
    }
    Ok(rows)
}

fn snap(strategy: OracleStrategy, n: usize) -> Member {
    match strategy {
        OracleStrategy::Pure(i) => Member::Pure(i),
        OracleStrategy::Params(x) => Member::Params(x),
        OracleStrategy::Mixed(m) => {
            let (i, top) = argmax_first(m.probs());
            if top >= 1.0 - 1e-9 {
                Member::Pure(i)
            } else {
                debug_assert_eq!(m.len(), n);
                Member::Mixed(m)
            }
        }
    }
}

fn max_of(values: impl IntoIterator<Item = f64>) -> f64 {
    values.into_iter().fold(f64::NEG_INFINITY, f64::max)
}

impl Context<'_> {
    /// Joint meta-profile as seen by each player's solver.
    fn solve(&self, pop: &Population) -> Result<[JointProfile; 2]> {
        let s1 = self.cfg.settings(Player::One).meta_solver;
        let s2 = self.cfg.settings(Player::Two).meta_solver;
        let one = solve_meta(s1, &pop.meta_payoff, self.cfg.nash_epsilon, &self.cfg.alpha_rank)?;
        let two = match s2 == s1 {
            true => one.clone(),
            false => solve_meta(s2, &pop.meta_payoff, self.cfg.nash_epsilon, &self.cfg.alpha_rank)?,
        };
        Ok([one, two])
    }

    fn oracle_cfg(&self, tau: f64, t: usize, p: Player) -> OracleConfig {
        self.cfg
            .oracle_cfg
            .with_tau(tau)
            .with_seed(substream_seed(self.cfg.seed ^ self.cfg.oracle_cfg.seed, t, p))
    }

    fn respond(&self, pop: &Population, profile: &JointProfile, p: Player, t: usize) -> Result<Response> {
        let settings = self.cfg.settings(p);
        let tau = settings.tau.at(t);
        let own_meta = profile.get(p);
        let opp_meta = profile.get(p.other());
        match self.backend {
            Backend::Matrix(g) => {
                let gp = g.view(p);
                let opp_full = full_strategy(g, pop, p.other(), opp_meta)?;
                let own_rows = full_rows(&gp, pop, p)?;
                let own_payoffs: Vec<f64> = (0..own_rows.nrows())
                    .map(|k| opp_full.dot(&own_rows.row(k).iter().copied().collect::<Vec<_>>()))
                    .collect();
                match settings.oracle {
                    OracleKind::Br => {
                        let r = epsilon_br_oracle(&gp, &opp_full, 0.0)?;
                        Ok(Response {
                            improvement: r.objective_value - max_of(own_payoffs),
                            member: snap(r.strategy, gp.rows()),
                        })
                    }
                    OracleKind::DiverseBr => {
                        let r = diverse_br_oracle(&gp, &opp_full, &own_rows, &self.oracle_cfg(tau, t, p))?;
                        let div = RowDiversity::new(&own_rows);
                        let incumbent = max_of((0..own_rows.nrows()).map(|k| {
                            let row: Vec<f64> = own_rows.row(k).iter().copied().collect();
                            own_payoffs[k] + tau * div.with_row(&row)
                        }));
                        Ok(Response {
                            improvement: r.objective_value - incumbent,
                            member: snap(r.strategy, gp.rows()),
                        })
                    }
                    OracleKind::Rectified => self.rectified(g, &gp, pop, p, own_meta, opp_meta, t),
                    OracleKind::Pbr => {
                        let scores = pbr_values(gp.values(), &opp_full, &own_rows, own_meta)?;
                        let own = pbr_values(&own_rows, &opp_full, &own_rows, own_meta)?;
                        let (i, v) = argmax_first(&scores);
                        Ok(Response {
                            improvement: v - max_of(own),
                            member: Member::Pure(i),
                        })
                    }
                    OracleKind::DiverseAlpha => {
                        let idx = pop.pure_indices(p).ok_or_else(|| {
                            GameError::Config("diverse_alpha needs a pure-strategy population".into())
                        })?;
                        let scores = diverse_alpha_scores(gp.values(), &opp_full, &idx, own_meta)?;
                        let (i, v) = argmax_first(&scores);
                        Ok(Response {
                            improvement: v - max_of(idx.iter().map(|&k| scores[k])),
                            member: Member::Pure(i),
                        })
                    }
                    OracleKind::Gradient | OracleKind::ZeroOrder => unreachable!("checked before iteration 0"),
                }
            }
            Backend::Engine(e) => {
                let own = params_of(pop, p)?;
                let opp = params_of(pop, p.other())?;
                let ocfg = self.oracle_cfg(tau, t, p);
                let r = match settings.oracle {
                    OracleKind::Gradient => diverse_gradient_oracle(e, &opp, opp_meta, &own, &ocfg)?,
                    OracleKind::ZeroOrder => zero_order_oracle(e, &opp, opp_meta, &own, &ocfg)?,
                    other => unreachable!("{other:?} checked before iteration 0"),
                };
                let obj = engine_objective(e, &opp, opp_meta, &own, tau)?;
                let incumbent = max_of(own.iter().map(|x| obj.value(x)));
                Ok(Response {
                    improvement: r.objective_value - incumbent,
                    member: snap(r.strategy, 0),
                })
            }
        }
    }

    /// Attacks the members of the own meta-strategy's support in turn,
    /// starting from a rotating offset: each one targets the opponents it
    /// beats or ties, weighted by the opponent meta-strategy, and the
    /// candidate with the best rectified score is proposed. The first
    /// proposal that improves on the incumbents wins.
    #[allow(clippy::too_many_arguments)]
    fn rectified(
        &self,
        g: &PayoffMatrix,
        gp: &PayoffMatrix,
        pop: &Population,
        p: Player,
        own_meta: &MixedStrategy,
        opp_meta: &MixedStrategy,
        t: usize,
    ) -> Result<Response> {
        let table = pop.rows(p);
        let opp_members = pop.get(p.other());
        let n_opp = match p {
            Player::One => g.cols(),
            Player::Two => g.rows(),
        };
        let mut cols = DMatrix::zeros(gp.cols(), opp_members.len());
        for (s, m) in opp_members.iter().enumerate() {
            cols.set_column(s, &DVector::from_vec(m.as_mixed(n_opp)?));
        }
        let candidates = gp.values() * cols;
        let support = own_meta.support(0.0);
        let mut first: Option<Response> = None;
        for k in 0..support.len() {
            let v = support[(k + t - 1) % support.len()];
            let weights: Vec<f64> = (0..opp_members.len())
                .map(|s| if table[(v, s)] >= 0.0 { opp_meta.probs()[s] } else { 0.0 })
                .collect();
            if weights.iter().all(|w| *w == 0.0) {
                continue;
            }
            let scores = rectified_scores(&candidates, &weights)?;
            let (c, best) = argmax_first(&scores);
            let incumbent = max_of(rectified_scores(&table, &weights)?);
            let r = Response {
                member: Member::Pure(c),
                improvement: best - incumbent,
            };
            if r.improvement > self.cfg.nash_epsilon {
                return Ok(r);
            }
            first.get_or_insert(r);
        }
        Ok(first.unwrap_or(Response {
            member: Member::Pure(support[0]),
            improvement: 0.0,
        }))
    }

    fn addition(&self, pop: &Population, p: Player, member: &Member) -> Result<Addition> {
        let before = pop.rows(p);
        let row = member_row(self.backend, pop, p, member)?;
        let gain = RowDiversity::new(&before).gain(&row);
        Ok(Addition {
            player: p,
            gain,
            outside_hull: verify_enlargement(&before, &row, HULL_TOL)?,
        })
    }

    fn trace(
        &self,
        pop: &Population,
        profiles: &[JointProfile; 2],
        t: usize,
        additions: Vec<Addition>,
        any_aware: bool,
        clock: Instant,
    ) -> Result<IterationTrace> {
        let own = JointProfile::new(profiles[0].pi1.clone(), profiles[1].pi2.clone());
        let (expl, per_player, bound) = match self.backend {
            Backend::Matrix(g) => {
                let full = JointProfile::new(
                    full_strategy(g, pop, Player::One, &own.pi1)?,
                    full_strategy(g, pop, Player::Two, &own.pi2)?,
                );
                let v = self.value.unwrap_or(0.0);
                let (_, br2) = best_response(g, &full.pi1, Player::Two)?;
                let (_, br1) = best_response(g, &full.pi2, Player::One)?;
                (exploitability(g, &full)?, [v + br2, br1 - v], false)
            }
            Backend::Engine(e) => {
                let gaps = self.engine_gaps(e, pop, &own, t)?;
                (gaps[0] + gaps[1], [gaps[1], gaps[0]], true)
            }
        };
        let nash = match self.cfg.settings(Player::One).meta_solver {
            MetaSolver::Nash => profiles[0].clone(),
            _ => solve_nash_zero_sum(&pop.meta_payoff, self.cfg.nash_epsilon)?,
        };
        let enlarged = any_aware.then(|| {
            additions
                .iter()
                .filter(|a| a.gain > ENLARGEMENT_GAIN)
                .all(|a| a.outside_hull)
        });
        Ok(IterationTrace {
            iteration: t,
            exploitability: expl,
            player_exploitability: per_player,
            exploitability_is_lower_bound: bound,
            diversity: row_diversity(pop.meta_payoff.values()),
            ed: effective_diversity(&pop.meta_payoff, &nash)?,
            population_sizes: pop.sizes(),
            enlarged,
            additions,
            wall_ms: clock.elapsed().as_millis() as u64,
        })
    }

    /// Each player's best-response gain against the other's meta mixture,
    /// from a multi-restart plain oracle. Restarts can only under-estimate
    /// the true gain.
    fn engine_gaps(&self, e: &dyn GameEngine, pop: &Population, own: &JointProfile, t: usize) -> Result<[f64; 2]> {
        let u1 = {
            let v = pop.meta_payoff.payoffs_against(&own.pi2, Player::One)?;
            own.pi1.dot(&v)
        };
        let mut gaps = [0.0; 2];
        for p in Player::BOTH {
            let opp = params_of(pop, p.other())?;
            let cfg = OracleConfig {
                restarts: self.cfg.exploit_restarts,
                ..self.oracle_cfg(0.0, t + self.cfg.iterations + 1, p)
            };
            let meta = own.get(p.other());
            let r = match e.differentiable() || cfg.finite_difference_fallback {
                true => diverse_gradient_oracle(e, &opp, meta, &[], &cfg)?,
                false => zero_order_oracle(e, &opp, meta, &[], &cfg)?,
            };
            let u = if p == Player::One { u1 } else { -u1 };
            // the incumbents are feasible responses too
            let plain = engine_objective(e, &opp, meta, &[], 0.0)?;
            let own_best = max_of(params_of(pop, p)?.iter().map(|x| plain.value(x)));
            gaps[p.index()] = (r.objective_value.max(own_best) - u).max(0.0);
        }
        Ok(gaps)
    }
}

fn params_of(pop: &Population, p: Player) -> Result<Vec<Vec<f64>>> {
    pop.get(p)
        .iter()
        .map(|m| {
            m.params()
                .map(<[f64]>::to_vec)
                .ok_or_else(|| GameError::Config("engine population holds a non-parameter member".into()))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::games::{make_random_zero_sum, make_rpsx};
    use crate::trainer::TauSchedule;

    fn from_rock(g: &PayoffMatrix) -> Population {
        Population::new(vec![Member::Pure(0)], vec![Member::Pure(0)], Backend::Matrix(g)).unwrap()
    }

    fn contains(pop: &Population, p: Player, i: usize) -> bool {
        pop.get(p).contains(&Member::Pure(i))
    }

    #[test]
    fn nash_br_finds_x() {
        let g = make_rpsx();
        let cfg = TrainerConfig {
            iterations: 10,
            ..TrainerConfig::default()
        };
        let (pop, trace) = run_psro(Backend::Matrix(&g), &cfg, from_rock(&g)).unwrap();
        let found = trace.iter().position(|tr| tr.population_sizes[0] > 0 && contains(&pop, Player::One, 3));
        assert!(found.is_some());
        assert!(pop.get(Player::One)[..5.min(pop.sizes()[0])].contains(&Member::Pure(3)));
        assert!(trace.last().unwrap().exploitability <= cfg.nash_epsilon);
    }

    #[test]
    fn rectified_stalls_inside_rps() {
        let g = make_rpsx();
        let cfg = TrainerConfig {
            oracle: OracleKind::Rectified,
            iterations: 20,
            ..TrainerConfig::default()
        };
        let (pop, trace) = run_psro(Backend::Matrix(&g), &cfg, from_rock(&g)).unwrap();
        for p in Player::BOTH {
            assert!(!contains(&pop, p, 3));
        }
        assert!(trace.len() < 20);
        assert!((trace.last().unwrap().exploitability - 0.8).abs() < 1e-6);
    }

    #[test]
    fn table_prefix_is_preserved() {
        let g = make_random_zero_sum(7, 2).unwrap();
        let cfg = TrainerConfig {
            oracle: OracleKind::DiverseBr,
            iterations: 4,
            ..TrainerConfig::default()
        };
        let init = Population::initial_nfg(&g, 1).unwrap();
        let (pop, _) = run_psro(Backend::Matrix(&g), &cfg, init.clone()).unwrap();
        let old = init.meta_payoff.values();
        assert_eq!(pop.meta_payoff.values().view((0, 0), old.shape()), old.view((0, 0), old.shape()));
        // spot-check entries against direct evaluation
        for i in 0..pop.sizes()[0] {
            for j in 0..pop.sizes()[1] {
                let v = Backend::Matrix(&g)
                    .evaluate(&pop.strategies[0][i], &pop.strategies[1][j])
                    .unwrap();
                assert_eq!(v, pop.meta_payoff.get(i, j));
            }
        }
    }

    #[test]
    fn incompatible_oracle_is_rejected() {
        let g = make_rpsx();
        let cfg = TrainerConfig {
            oracle: OracleKind::Gradient,
            ..TrainerConfig::default()
        };
        assert!(matches!(run_psro(Backend::Matrix(&g), &cfg, from_rock(&g)), Err(GameError::Config(_))));
        let cfg = TrainerConfig {
            oracle: OracleKind::Pbr,
            ..TrainerConfig::default()
        };
        assert!(matches!(run_psro(Backend::Matrix(&g), &cfg, from_rock(&g)), Err(GameError::Config(_))));
    }

    #[test]
    fn expansion_is_idempotent() {
        let g = make_rpsx();
        let mut pop = from_rock(&g);
        let before = pop.clone();
        expand_payoff_table(&mut pop, Backend::Matrix(&g)).unwrap();
        assert_eq!(pop, before);
        pop.strategies[0].push(Member::Pure(3));
        expand_payoff_table(&mut pop, Backend::Matrix(&g)).unwrap();
        assert_eq!(pop.meta_payoff.rows(), 2);
        assert_eq!(pop.meta_payoff.get(0, 0), 0.0);
        assert!((pop.meta_payoff.get(1, 0) - 0.4).abs() < 1e-15);
    }

    #[test]
    fn termination_examples() {
        assert!(termination_check([0.0, 0.0], 1e-9));
        assert!(!termination_check([0.4, 0.0], 1e-3));
        assert!(termination_check([5.0, 1e9], f64::INFINITY));
    }

    #[test]
    fn harmonic_tau_schedule() {
        let s = TauSchedule::Harmonic { c: 2.0 };
        assert_eq!(s.at(4), 0.5);
        assert_eq!("geometric:1:0.5".parse::<TauSchedule>().unwrap().at(2), 0.25);
    }
}
