//! Minimax equilibria of two-player zero-sum games.
//!
//! The primary route is the textbook linear program: after shifting the
//! payoffs to be strictly positive, `max 1^T y  s.t.  A y <= 1, y >= 0` is
//! feasible at the origin and bounded. The column player's strategy is the
//! normalised primal solution and the row player's is read off the slack
//! reduced costs. Pivoting uses Bland's rule, so the result is
//! deterministic. If the post-hoc exploitability check fails, regret
//! matching+ is run as a fallback under the same contract.

use nalgebra::DMatrix;

use crate::error::{GameError, Result};
use crate::game::{exploitability, JointProfile, MixedStrategy, PayoffMatrix};

const PIVOT_TOL: f64 = 1e-12;
/// Smallest column entry accepted as a pivot.
const RATIO_TOL: f64 = 1e-9;
const REINVERT_EVERY: usize = 50;

/// Iteration budget of the regret-matching fallback.
pub const FALLBACK_ITERATIONS: usize = 200_000;

/// Profile whose exploitability is at most `epsilon`.
pub fn solve_nash_zero_sum(m: &PayoffMatrix, epsilon: f64) -> Result<JointProfile> {
    if !m.is_zero_sum() {
        return Err(GameError::Config("Nash solver needs a zero-sum game".into()));
    }
    if !(epsilon > 0.0) {
        return Err(GameError::Config(format!("epsilon must be positive, got {epsilon}")));
    }
    if m.rows() == 0 || m.cols() == 0 {
        return Err(GameError::EmptyPopulation);
    }
    if let Some(profile) = simplex_minimax(m.values()) {
        if exploitability(m, &profile)? <= epsilon {
            return Ok(profile);
        }
    }
    regret_matching(m, epsilon, FALLBACK_ITERATIONS)
}

/// Value of the game to player one.
pub fn game_value(m: &PayoffMatrix) -> Result<f64> {
    let p = solve_nash_zero_sum(m, 1e-10)?;
    let v = m.payoffs_against(&p.pi2, crate::Player::One)?;
    Ok(p.pi1.dot(&v))
}

fn simplex_minimax(a: &DMatrix<f64>) -> Option<JointProfile> {
    let (rows, cols) = a.shape();
    let lo = a.min();
    let shift = 1.0 - lo;
    let width = cols + rows + 1;
    let rhs = width - 1;
    // rows: constraints; last row: objective (z - sum y = 0)
    let mut t0 = vec![vec![0.0; width]; rows + 1];
    for i in 0..rows {
        for j in 0..cols {
            t0[i][j] = a[(i, j)] + shift;
        }
        t0[i][cols + i] = 1.0;
        t0[i][rhs] = 1.0;
    }
    for j in 0..cols {
        t0[rows][j] = -1.0;
    }
    let mut t = t0.clone();
    let mut basis: Vec<usize> = (cols..cols + rows).collect();

    let max_pivots = 50 * (rows + cols) + 1000;
    let mut since_reinvert = 0;
    for _ in 0..max_pivots {
        let enter = match (0..rhs).find(|&j| t[rows][j] < -PIVOT_TOL) {
            Some(j) => j,
            None if since_reinvert == 0 => return Some(read_solution(&t, &basis, rows, cols)),
            None => {
                // confirm optimality on a freshly factorised tableau
                t = reinvert(&t0, &basis)?;
                since_reinvert = 0;
                continue;
            }
        };
        let mut leave: Option<(usize, f64)> = None;
        for i in 0..rows {
            let coef = t[i][enter];
            if coef > RATIO_TOL {
                let ratio = t[i][rhs].max(0.0) / coef;
                leave = match leave {
                    None => Some((i, ratio)),
                    Some((k, r)) => {
                        if ratio < r - PIVOT_TOL
                            || (ratio <= r + PIVOT_TOL && basis[i] < basis[k])
                        {
                            Some((i, ratio))
                        } else {
                            Some((k, r))
                        }
                    }
                };
            }
        }
        // bounded by construction
        let (pr, _) = leave?;
        pivot(&mut t, pr, enter);
        basis[pr] = enter;
        since_reinvert += 1;
        if since_reinvert >= REINVERT_EVERY {
            t = reinvert(&t0, &basis)?;
            since_reinvert = 0;
        }
    }
    None
}

/// Rebuilds the tableau for `basis` from the original one, discarding the
/// rounding error accumulated by successive pivots.
fn reinvert(t0: &[Vec<f64>], basis: &[usize]) -> Option<Vec<Vec<f64>>> {
    let rows = basis.len();
    let width = t0[0].len();
    let b = DMatrix::from_fn(rows, rows, |i, k| t0[i][basis[k]]);
    let body = DMatrix::from_fn(rows, width, |i, j| t0[i][j]);
    let solved = b.lu().solve(&body)?;
    let mut t = vec![vec![0.0; width]; rows + 1];
    for i in 0..rows {
        for j in 0..width {
            t[i][j] = solved[(i, j)];
        }
    }
    for j in 0..width {
        let mut v = t0[rows][j];
        for (k, &bk) in basis.iter().enumerate() {
            v -= t0[rows][bk] * solved[(k, j)];
        }
        t[rows][j] = v;
    }
    for (k, &bk) in basis.iter().enumerate() {
        for (i, row) in t.iter_mut().enumerate() {
            row[bk] = if i == k { 1.0 } else { 0.0 };
        }
    }
    Some(t)
}

fn pivot(t: &mut [Vec<f64>], pr: usize, pc: usize) {
    let p = t[pr][pc];
    for v in t[pr].iter_mut() {
        *v /= p;
    }
    let pivot_row = t[pr].clone();
    for (i, row) in t.iter_mut().enumerate() {
        if i == pr {
            continue;
        }
        let f = row[pc];
        if f != 0.0 {
            for (v, pv) in row.iter_mut().zip(&pivot_row) {
                *v -= f * pv;
            }
            row[pc] = 0.0;
        }
    }
}

fn read_solution(t: &[Vec<f64>], basis: &[usize], rows: usize, cols: usize) -> JointProfile {
    let rhs = t[0].len() - 1;
    let mut y = vec![0.0; cols];
    for (i, &b) in basis.iter().enumerate() {
        if b < cols {
            y[b] = t[i][rhs].max(0.0);
        }
    }
    let x: Vec<f64> = (0..rows).map(|i| t[rows][cols + i].max(0.0)).collect();
    let pi1 = MixedStrategy::from_weights(&x).unwrap_or_else(|_| MixedStrategy::uniform(rows));
    let pi2 = MixedStrategy::from_weights(&y).unwrap_or_else(|_| MixedStrategy::uniform(cols));
    JointProfile::new(pi1, pi2)
}

/// Averaged regret matching+ with linear averaging.
fn regret_matching(m: &PayoffMatrix, epsilon: f64, iterations: usize) -> Result<JointProfile> {
    let a = m.values();
    let (rows, cols) = a.shape();
    let mut r1 = vec![0.0; rows];
    let mut r2 = vec![0.0; cols];
    let mut avg1 = vec![0.0; rows];
    let mut avg2 = vec![0.0; cols];
    let current = |r: &[f64]| -> Vec<f64> {
        let s: f64 = r.iter().sum();
        if s > 0.0 {
            r.iter().map(|v| v / s).collect()
        } else {
            vec![1.0 / r.len() as f64; r.len()]
        }
    };
    let mut best = f64::INFINITY;
    for t in 1..=iterations {
        let x = current(&r1);
        let y = current(&r2);
        let u1: Vec<f64> = (0..rows).map(|i| (0..cols).map(|j| a[(i, j)] * y[j]).sum()).collect();
        let u2: Vec<f64> = (0..cols).map(|j| -(0..rows).map(|i| a[(i, j)] * x[i]).sum::<f64>()).collect();
        let v1: f64 = x.iter().zip(&u1).map(|(p, u)| p * u).sum();
        let v2: f64 = y.iter().zip(&u2).map(|(p, u)| p * u).sum();
        for i in 0..rows {
            r1[i] = (r1[i] + u1[i] - v1).max(0.0);
            avg1[i] += t as f64 * x[i];
        }
        for j in 0..cols {
            r2[j] = (r2[j] + u2[j] - v2).max(0.0);
            avg2[j] += t as f64 * y[j];
        }
        if t % 100 == 0 || t == iterations {
            let p = JointProfile::new(
                MixedStrategy::from_weights(&avg1)?,
                MixedStrategy::from_weights(&avg2)?,
            );
            let e = exploitability(m, &p)?;
            best = best.min(e);
            if e <= epsilon {
                return Ok(p);
            }
        }
    }
    Err(GameError::Convergence {
        target: epsilon,
        achieved: best,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::games::{make_blotto, make_random_zero_sum, make_rps, make_rpsx, BlottoSpec};

    fn linf(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn rps_is_uniform() {
        let p = solve_nash_zero_sum(&make_rps(), 1e-9).unwrap();
        let u = [1.0 / 3.0; 3];
        assert!(linf(p.pi1.probs(), &u) < 1e-9);
        assert!(linf(p.pi2.probs(), &u) < 1e-9);
    }

    #[test]
    fn rpsx_is_pure_x() {
        let g = make_rpsx();
        let p = solve_nash_zero_sum(&g, 1e-9).unwrap();
        assert!(linf(p.pi1.probs(), &[0.0, 0.0, 0.0, 1.0]) < 1e-9);
        assert!(linf(p.pi2.probs(), &[0.0, 0.0, 0.0, 1.0]) < 1e-9);
        assert!(exploitability(&g, &p).unwrap() <= 1e-9);
    }

    #[test]
    fn matching_pennies() {
        let g = PayoffMatrix::from_rows(&[vec![1.0, -1.0], vec![-1.0, 1.0]]).unwrap();
        let p = solve_nash_zero_sum(&g, 1e-9).unwrap();
        assert!(linf(p.pi1.probs(), &[0.5, 0.5]) < 1e-9);
        assert!(linf(p.pi2.probs(), &[0.5, 0.5]) < 1e-9);
    }

    #[test]
    fn random_and_rectangular_games_meet_contract() {
        for seed in 0..30 {
            let g = make_random_zero_sum(3 + seed as usize % 12, seed).unwrap();
            let p = solve_nash_zero_sum(&g, 1e-9).unwrap();
            assert!(exploitability(&g, &p).unwrap() <= 1e-9);
        }
        let rect = PayoffMatrix::from_rows(&[
            vec![3.0, -1.0, 0.5, 2.0],
            vec![-2.0, 4.0, 1.0, -0.5],
        ])
        .unwrap();
        let p = solve_nash_zero_sum(&rect, 1e-9).unwrap();
        assert!(exploitability(&rect, &p).unwrap() <= 1e-9);
        let b = make_blotto(BlottoSpec::default()).unwrap();
        let p = solve_nash_zero_sum(&b, 1e-9).unwrap();
        assert!(exploitability(&b, &p).unwrap() <= 1e-9);
    }

    #[test]
    fn degenerate_tables() {
        // duplicated rows and a constant table
        let dup = PayoffMatrix::from_rows(&[vec![0.0, 1.0], vec![0.0, 1.0], vec![-1.0, 0.0]]).unwrap();
        let p = solve_nash_zero_sum(&dup, 1e-9).unwrap();
        assert!(exploitability(&dup, &p).unwrap() <= 1e-9);
        let flat = PayoffMatrix::zero_sum(DMatrix::from_element(3, 2, 0.25)).unwrap();
        let p = solve_nash_zero_sum(&flat, 1e-9).unwrap();
        assert!(exploitability(&flat, &p).unwrap() <= 1e-9);
        assert!((game_value(&flat).unwrap() - 0.25).abs() < 1e-12);
    }

    #[test]
    fn regret_matching_fallback_reports_convergence_error() {
        let g = make_random_zero_sum(6, 2).unwrap();
        let ok = regret_matching(&g, 1e-2, 100_000).unwrap();
        assert!(exploitability(&g, &ok).unwrap() <= 1e-2);
        match regret_matching(&g, 1e-12, 200) {
            Err(GameError::Convergence { achieved, .. }) => assert!(achieved > 1e-12),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_bad_input() {
        assert!(solve_nash_zero_sum(&make_rps(), 0.0).is_err());
        let p1 = DMatrix::identity(2, 2);
        let gs = PayoffMatrix::general_sum(p1.clone(), p1).unwrap();
        assert!(solve_nash_zero_sum(&gs, 1e-6).is_err());
    }
}
