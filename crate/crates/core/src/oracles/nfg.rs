use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, Exp1};

use super::{project_to_simplex, OracleConfig, OracleResult, OracleStrategy};
use crate::diversity::{row_diversity, RowDiversity};
use crate::error::{GameError, Result};
use crate::game::{argmax_first, best_response, MixedStrategy, PayoffMatrix, Player};

/// Exact pure best response for player one. Any epsilon is honoured by the
/// exact answer.
pub fn epsilon_br_oracle(g: &PayoffMatrix, opponent: &MixedStrategy, epsilon: f64) -> Result<OracleResult> {
    if !(epsilon >= 0.0) {
        return Err(GameError::Config(format!("epsilon must be >= 0, got {epsilon}")));
    }
    let (i, v) = best_response(g, opponent, Player::One)?;
    Ok(OracleResult::direct(OracleStrategy::Pure(i), v))
}

fn check_rows(g: &PayoffMatrix, pop_rows: &DMatrix<f64>) -> Result<()> {
    if pop_rows.ncols() != g.cols() {
        return Err(GameError::Shape(format!(
            "population rows have {} entries, game has {} columns",
            pop_rows.ncols(),
            g.cols()
        )));
    }
    Ok(())
}

/// Payoff against `opponent` plus `tau` times the diversity of the
/// population rows with `pi`'s row `pi^T G` appended.
pub fn diverse_br_objective(
    g: &PayoffMatrix,
    opponent: &MixedStrategy,
    pop_rows: &DMatrix<f64>,
    tau: f64,
    pi: &MixedStrategy,
) -> Result<f64> {
    check_rows(g, pop_rows)?;
    let payoff = pi.dot(&g.payoffs_against(opponent, Player::One)?);
    let row = g.values().tr_mul(&DVector::from_column_slice(pi.probs()));
    Ok(payoff + tau * RowDiversity::new(pop_rows).with_row(row.as_slice()))
}

/// Allocation-free evaluation of the simplex objective: with `w = G^T x`,
/// `u = C^-1 w` and `s = 1 + w.u`, the diversity gain is `|u|^2 / s`.
struct SimplexObjective {
    /// `G` in row-major order.
    g: Vec<f64>,
    cinv: Vec<f64>,
    n: usize,
    d: usize,
    a: Vec<f64>,
    tau: f64,
    base: f64,
}

struct Scratch {
    w: Vec<f64>,
    u: Vec<f64>,
    v: Vec<f64>,
}

impl SimplexObjective {
    fn new(g: &DMatrix<f64>, a: Vec<f64>, tau: f64, div: &RowDiversity) -> Self {
        let (n, d) = g.shape();
        let cinv = div.inverse();
        SimplexObjective {
            g: (0..n * d).map(|k| g[(k / d, k % d)]).collect(),
            cinv: (0..d * d).map(|k| cinv[(k / d, k % d)]).collect(),
            n,
            d,
            a,
            tau,
            base: div.value(),
        }
    }

    fn scratch(&self) -> Scratch {
        Scratch {
            w: vec![0.0; self.d],
            u: vec![0.0; self.d],
            v: vec![0.0; self.d],
        }
    }

    /// Fills `w` and `u`; returns the payoff part, `|u|^2` and `s`.
    fn prepare(&self, x: &[f64], sc: &mut Scratch) -> (f64, f64, f64) {
        let d = self.d;
        sc.w.iter_mut().for_each(|v| *v = 0.0);
        let mut lin = 0.0;
        for (i, &xi) in x.iter().enumerate() {
            if xi == 0.0 {
                continue;
            }
            lin += xi * self.a[i];
            let row = &self.g[i * d..(i + 1) * d];
            for (w, gij) in sc.w.iter_mut().zip(row) {
                *w += xi * gij;
            }
        }
        let mut uu = 0.0;
        let mut wu = 0.0;
        for r in 0..d {
            let row = &self.cinv[r * d..(r + 1) * d];
            let ur: f64 = row.iter().zip(&sc.w).map(|(c, w)| c * w).sum();
            sc.u[r] = ur;
            uu += ur * ur;
            wu += sc.w[r] * ur;
        }
        (lin, uu, 1.0 + wu)
    }

    fn value(&self, x: &[f64], sc: &mut Scratch) -> f64 {
        let (lin, uu, s) = self.prepare(x, sc);
        lin + self.tau * (self.base + uu / s)
    }

    /// Gradient `a + tau G (2/s)(v - u |u|^2 / s)` with `v = C^-1 u`.
    fn grad(&self, x: &[f64], sc: &mut Scratch, out: &mut [f64]) {
        let d = self.d;
        let (_, uu, s) = self.prepare(x, sc);
        for r in 0..d {
            let row = &self.cinv[r * d..(r + 1) * d];
            sc.v[r] = row.iter().zip(&sc.u).map(|(c, u)| c * u).sum();
        }
        for k in 0..d {
            sc.w[k] = 2.0 / s * (sc.v[k] - sc.u[k] * uu / s);
        }
        for i in 0..self.n {
            let row = &self.g[i * d..(i + 1) * d];
            let dot: f64 = row.iter().zip(&sc.w).map(|(g, w)| g * w).sum();
            out[i] = self.a[i] + self.tau * dot;
        }
    }

    /// Projected gradient ascent with backtracking. Returns the final point,
    /// its value and whether the stopping rule fired before the budget ran
    /// out.
    fn ascend(&self, start: Vec<f64>, cfg: &OracleConfig) -> (Vec<f64>, f64, bool) {
        let mut sc = self.scratch();
        let mut x = start;
        let mut fx = self.value(&x, &mut sc);
        let mut grad = vec![0.0; self.n];
        let mut trial = vec![0.0; self.n];
        for _ in 0..cfg.max_iters {
            self.grad(&x, &mut sc, &mut grad);
            let mut step = cfg.step_size;
            let mut next = None;
            for _ in 0..=30 {
                for ((t, p), g) in trial.iter_mut().zip(&x).zip(&grad) {
                    *t = p + step * g;
                }
                let y = project_to_simplex(&trial);
                let fy = self.value(&y, &mut sc);
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
            if moved < 1e-13 || gained <= 1e-15 * (1.0 + fx.abs()) {
                return (x, fx, true);
            }
        }
        (x, fx, false)
    }
}

/// Maximises payoff plus `cfg.tau` times population diversity over the
/// simplex. Restart 0 starts from the uniform strategy, the others from
/// flat-Dirichlet draws. The diversity term is not concave in general (it is
/// convex near rows of small norm), so restarts can end on different local
/// maxima; with `cfg.restart_alarm` a spread above ten times the tolerance
/// is an error.
pub fn diverse_br_oracle(
    g: &PayoffMatrix,
    opponent: &MixedStrategy,
    pop_rows: &DMatrix<f64>,
    cfg: &OracleConfig,
) -> Result<OracleResult> {
    check_rows(g, pop_rows)?;
    diverse_br_oracle_with(g, opponent, RowDiversity::new(pop_rows), cfg)
}

/// [`diverse_br_oracle`] for a population already summarised by its
/// diversity factor.
pub fn diverse_br_oracle_with(
    g: &PayoffMatrix,
    opponent: &MixedStrategy,
    div: RowDiversity,
    cfg: &OracleConfig,
) -> Result<OracleResult> {
    cfg.validate()?;
    if div.dim() != g.cols() {
        return Err(GameError::Shape(format!(
            "population rows have {} entries, game has {} columns",
            div.dim(),
            g.cols()
        )));
    }
    if cfg.tau == 0.0 {
        return epsilon_br_oracle(g, opponent, 0.0);
    }
    let obj = SimplexObjective::new(g.values(), g.payoffs_against(opponent, Player::One)?, cfg.tau, &div);
    let n = g.rows();
    let mut best: Option<(Vec<f64>, f64)> = None;
    let mut values = Vec::with_capacity(cfg.restarts);
    let mut all_converged = true;
    for k in 0..cfg.restarts {
        let start = if k == 0 {
            vec![1.0 / n as f64; n]
        } else {
            let mut rng = cfg.restart_rng(k);
            let w: Vec<f64> = (0..n).map(|_| Exp1.sample(&mut rng)).collect();
            let total: f64 = w.iter().sum();
            w.into_iter().map(|v| v / total).collect()
        };
        let (x, fx, ok) = obj.ascend(start, cfg);
        all_converged &= ok;
        values.push(fx);
        if best.as_ref().is_none_or(|(_, b)| fx > *b) {
            best = Some((x, fx));
        }
    }
    let (x, fx) = best.expect("at least one restart");
    let result = OracleResult {
        strategy: OracleStrategy::Mixed(MixedStrategy::from_weights(&x)?),
        objective_value: fx,
        converged: false,
        restart_objectives: values,
    };
    let spread = result.restart_spread();
    if cfg.restart_alarm && spread > 10.0 * cfg.tolerance {
        return Err(GameError::NonConcave {
            spread,
            allowed: 10.0 * cfg.tolerance,
        });
    }
    Ok(OracleResult {
        converged: all_converged && spread <= cfg.tolerance,
        ..result
    })
}

/// The same objective restricted to pure strategies, solved by enumeration.
pub fn diverse_pure_oracle(
    g: &PayoffMatrix,
    opponent: &MixedStrategy,
    pop_rows: &DMatrix<f64>,
    tau: f64,
) -> Result<OracleResult> {
    check_rows(g, pop_rows)?;
    let payoffs = g.payoffs_against(opponent, Player::One)?;
    let div = RowDiversity::new(pop_rows);
    let scores: Vec<f64> = (0..g.rows())
        .map(|i| payoffs[i] + tau * div.with_row(&g.row(i)))
        .collect();
    let (i, v) = argmax_first(&scores);
    Ok(OracleResult::direct(OracleStrategy::Pure(i), v))
}

/// `sum_s weights(s) * max(payoffs(c, s), 0)` for every candidate row `c`.
pub fn rectified_scores(payoffs: &DMatrix<f64>, weights: &[f64]) -> Result<Vec<f64>> {
    if payoffs.ncols() != weights.len() {
        return Err(GameError::Shape(format!(
            "{} opponent weights for {} payoff columns",
            weights.len(),
            payoffs.ncols()
        )));
    }
    Ok((0..payoffs.nrows())
        .map(|c| (0..payoffs.ncols()).map(|s| weights[s] * payoffs[(c, s)].max(0.0)).sum())
        .collect())
}

/// Candidate (row of `payoffs`, one column per opponent) with the largest
/// Nash-weighted sum of rectified payoffs.
pub fn rectified_oracle(payoffs: &DMatrix<f64>, nash: &MixedStrategy) -> Result<OracleResult> {
    if payoffs.nrows() == 0 {
        return Err(GameError::EmptyCandidates);
    }
    let scores = rectified_scores(payoffs, nash.probs())?;
    let (i, v) = argmax_first(&scores);
    Ok(OracleResult::direct(OracleStrategy::Pure(i), v))
}

/// Probability that a candidate beats an incumbent drawn from `own_meta`
/// against an opponent drawn from `opponent`, both facing the same draw.
/// Candidate and incumbent rows share the opponent columns.
pub fn pbr_values(
    candidate_rows: &DMatrix<f64>,
    opponent: &MixedStrategy,
    incumbent_rows: &DMatrix<f64>,
    own_meta: &MixedStrategy,
) -> Result<Vec<f64>> {
    let k = opponent.len();
    if candidate_rows.ncols() != k || incumbent_rows.ncols() != k {
        return Err(GameError::Shape(format!(
            "rows have {} and {} columns, opponent strategy has {k} entries",
            candidate_rows.ncols(),
            incumbent_rows.ncols()
        )));
    }
    if incumbent_rows.nrows() != own_meta.len() {
        return Err(GameError::Shape(format!(
            "{} incumbents for a meta-strategy over {}",
            incumbent_rows.nrows(),
            own_meta.len()
        )));
    }
    let q = opponent.probs();
    let p = own_meta.probs();
    Ok((0..candidate_rows.nrows())
        .map(|c| {
            let mut total = 0.0;
            for (i, &pi) in p.iter().enumerate().filter(|(_, w)| **w > 0.0) {
                for (j, &qj) in q.iter().enumerate().filter(|(_, w)| **w > 0.0) {
                    if candidate_rows[(c, j)] > incumbent_rows[(i, j)] {
                        total += pi * qj;
                    }
                }
            }
            total
        })
        .collect())
}

/// Preference-based best response: the candidate most likely to beat the
/// incumbent. Ties go to the lowest index.
pub fn pbr_oracle(
    candidate_rows: &DMatrix<f64>,
    opponent: &MixedStrategy,
    incumbent_rows: &DMatrix<f64>,
    own_meta: &MixedStrategy,
) -> Result<OracleResult> {
    if candidate_rows.nrows() == 0 {
        return Err(GameError::EmptyCandidates);
    }
    let scores = pbr_values(candidate_rows, opponent, incumbent_rows, own_meta)?;
    let (i, v) = argmax_first(&scores);
    Ok(OracleResult::direct(OracleStrategy::Pure(i), v))
}

/// Expected cardinality of the quality-diversity kernel over the
/// population plus each candidate. Qualities are `exp` of each row's
/// preference-based value against the current incumbents; features are rows
/// scaled by the extended table's Frobenius norm. `own_pop` indexes rows of
/// `candidate_rows`.
pub fn diverse_alpha_scores(
    candidate_rows: &DMatrix<f64>,
    opponent: &MixedStrategy,
    own_pop: &[usize],
    own_meta: &MixedStrategy,
) -> Result<Vec<f64>> {
    let n = candidate_rows.nrows();
    if n == 0 {
        return Err(GameError::EmptyCandidates);
    }
    if own_pop.is_empty() {
        return Err(GameError::EmptyPopulation);
    }
    if let Some(&bad) = own_pop.iter().find(|&&i| i >= n) {
        return Err(GameError::Index { index: bad, size: n });
    }
    let incumbents = candidate_rows.select_rows(own_pop);
    let all_pbr = pbr_values(candidate_rows, opponent, &incumbents, own_meta)?;
    let k = own_pop.len();
    let mut scaled = DMatrix::zeros(k + 1, candidate_rows.ncols());
    for (r, &i) in own_pop.iter().enumerate() {
        scaled.set_row(r, &(candidate_rows.row(i) * all_pbr[i].exp()));
    }
    let pop_sq: f64 = incumbents.norm_squared();
    Ok((0..n)
        .map(|c| {
            let row = candidate_rows.row(c);
            let frob = (pop_sq + row.norm_squared()).sqrt();
            if frob == 0.0 {
                return 0.0;
            }
            scaled.set_row(k, &(row * all_pbr[c].exp()));
            row_diversity(&(&scaled / frob))
        })
        .collect())
}

/// Candidate with the largest [`diverse_alpha_scores`] value; ties go to
/// the lowest index.
pub fn diverse_alpha_oracle(
    candidate_rows: &DMatrix<f64>,
    opponent: &MixedStrategy,
    own_pop: &[usize],
    own_meta: &MixedStrategy,
) -> Result<OracleResult> {
    let scores = diverse_alpha_scores(candidate_rows, opponent, own_pop, own_meta)?;
    let (i, v) = argmax_first(&scores);
    Ok(OracleResult::direct(OracleStrategy::Pure(i), v))
}
