//! Two-player games in normal form: payoff tables, mixed strategies, best
//! responses and exploitability.
//!
//! Zero-sum games store only the row player's matrix; everything about the
//! column player is derived by negation.

use std::fmt;

use nalgebra::{DMatrix, DVector};

use crate::error::{GameError, Result};

/// Absolute tolerance for simplex membership and equality checks.
pub const TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Player {
    One,
    Two,
}

impl Player {
    pub const BOTH: [Player; 2] = [Player::One, Player::Two];

    pub fn index(self) -> usize {
        match self {
            Player::One => 0,
            Player::Two => 1,
        }
    }

    pub fn other(self) -> Player {
        match self {
            Player::One => Player::Two,
            Player::Two => Player::One,
        }
    }
}

impl fmt::Display for Player {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "player {}", self.index() + 1)
    }
}

/// Payoff table of a two-player game. Rows index player one's pure
/// strategies, columns player two's.
#[derive(Clone, Debug, PartialEq)]
pub struct PayoffMatrix {
    p1: DMatrix<f64>,
    /// `None` for zero-sum games.
    p2: Option<DMatrix<f64>>,
}

impl PayoffMatrix {
    /// Zero-sum game from player one's payoffs.
    pub fn zero_sum(values: DMatrix<f64>) -> Result<Self> {
        check_finite(&values)?;
        Ok(PayoffMatrix {
            p1: values,
            p2: None,
        })
    }

    pub fn general_sum(p1: DMatrix<f64>, p2: DMatrix<f64>) -> Result<Self> {
        if p1.shape() != p2.shape() {
            return Err(GameError::Shape(format!(
                "player payoff matrices have shapes {:?} and {:?}",
                p1.shape(),
                p2.shape()
            )));
        }
        check_finite(&p1)?;
        check_finite(&p2)?;
        Ok(PayoffMatrix { p1, p2: Some(p2) })
    }

    /// Zero-sum game from row vectors; every row must have the same length.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let ncols = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().position(|r| r.len() != ncols) {
            return Err(GameError::Shape(format!(
                "row {bad} has {} entries, expected {ncols}",
                rows[bad].len()
            )));
        }
        let values = DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]);
        Self::zero_sum(values)
    }

    pub fn rows(&self) -> usize {
        self.p1.nrows()
    }

    pub fn cols(&self) -> usize {
        self.p1.ncols()
    }

    pub fn is_zero_sum(&self) -> bool {
        self.p2.is_none()
    }

    pub fn is_square(&self) -> bool {
        self.rows() == self.cols()
    }

    /// Player one's payoff matrix.
    pub fn values(&self) -> &DMatrix<f64> {
        &self.p1
    }

    /// Payoff to `player` when row `i` meets column `j`.
    pub fn payoff(&self, player: Player, i: usize, j: usize) -> f64 {
        match (player, &self.p2) {
            (Player::One, _) => self.p1[(i, j)],
            (Player::Two, None) => -self.p1[(i, j)],
            (Player::Two, Some(p2)) => p2[(i, j)],
        }
    }

    /// Player one's payoff.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.p1[(i, j)]
    }

    /// `values[i, :]` as a vector.
    pub fn row(&self, i: usize) -> Vec<f64> {
        self.p1.row(i).iter().copied().collect()
    }

    /// `true` when the game is zero-sum, square and `G = -G^T` within `tol`.
    pub fn is_antisymmetric(&self, tol: f64) -> bool {
        if !self.is_zero_sum() || !self.is_square() {
            return false;
        }
        let n = self.rows();
        (0..n).all(|i| (i..n).all(|j| (self.p1[(i, j)] + self.p1[(j, i)]).abs() <= tol))
    }

    /// The game seen from `player`: rows are that player's strategies and
    /// entries are that player's payoffs. Player one's view is the game itself.
    pub fn view(&self, player: Player) -> PayoffMatrix {
        match player {
            Player::One => self.clone(),
            Player::Two => match &self.p2 {
                None => PayoffMatrix {
                    p1: -self.p1.transpose(),
                    p2: None,
                },
                Some(p2) => PayoffMatrix {
                    p1: p2.transpose(),
                    p2: Some(self.p1.transpose()),
                },
            },
        }
    }

    /// Payoff of each of `player`'s pure strategies against a mixed opponent.
    pub fn payoffs_against(&self, opponent: &MixedStrategy, player: Player) -> Result<Vec<f64>> {
        let expected = match player {
            Player::One => self.cols(),
            Player::Two => self.rows(),
        };
        if opponent.len() != expected {
            return Err(GameError::Shape(format!(
                "opponent strategy has {} entries, {player} faces {expected} strategies",
                opponent.len()
            )));
        }
        let q = DVector::from_column_slice(opponent.probs());
        let out = match (player, &self.p2) {
            (Player::One, _) => &self.p1 * q,
            (Player::Two, None) => -(self.p1.transpose() * q),
            (Player::Two, Some(p2)) => p2.transpose() * q,
        };
        Ok(out.iter().copied().collect())
    }

    fn check_profile(&self, p: &JointProfile) -> Result<()> {
        if p.pi1.len() != self.rows() || p.pi2.len() != self.cols() {
            return Err(GameError::Shape(format!(
                "profile is {}x{}, game is {}x{}",
                p.pi1.len(),
                p.pi2.len(),
                self.rows(),
                self.cols()
            )));
        }
        Ok(())
    }
}

fn check_finite(m: &DMatrix<f64>) -> Result<()> {
    match m.iter().position(|v| !v.is_finite()) {
        Some(k) => Err(GameError::InvalidMatrix(format!(
            "entry ({}, {}) is not finite",
            k % m.nrows(),
            k / m.nrows()
        ))),
        None => Ok(()),
    }
}

/// A point on the probability simplex over a strategy set.
#[derive(Clone, Debug, PartialEq)]
pub struct MixedStrategy(Vec<f64>);

impl MixedStrategy {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(GameError::InvalidStrategy("empty probability vector".into()));
        }
        if let Some(p) = probs.iter().find(|p| !p.is_finite() || **p < -TOL) {
            return Err(GameError::InvalidStrategy(format!("entry {p} is not a probability")));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > TOL {
            return Err(GameError::InvalidStrategy(format!("entries sum to {total}")));
        }
        Ok(MixedStrategy(probs.into_iter().map(|p| p.max(0.0)).collect()))
    }

    /// Rescales non-negative weights onto the simplex.
    pub fn from_weights(weights: &[f64]) -> Result<Self> {
        let total: f64 = weights.iter().map(|w| w.max(0.0)).sum();
        if !(total > 0.0) || !total.is_finite() {
            return Err(GameError::InvalidStrategy("weights have no positive mass".into()));
        }
        Ok(MixedStrategy(weights.iter().map(|w| w.max(0.0) / total).collect()))
    }

    pub fn uniform(n: usize) -> Self {
        assert!(n > 0, "uniform strategy over an empty set");
        MixedStrategy(vec![1.0 / n as f64; n])
    }

    pub fn pure(n: usize, index: usize) -> Self {
        assert!(index < n, "pure strategy {index} out of range {n}");
        let mut v = vec![0.0; n];
        v[index] = 1.0;
        MixedStrategy(v)
    }

    pub fn probs(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Indices with probability above `tol`.
    pub fn support(&self, tol: f64) -> Vec<usize> {
        (0..self.0.len()).filter(|&i| self.0[i] > tol).collect()
    }

    /// `(1 - step) * self + step * other`.
    pub fn mix(&self, other: &MixedStrategy, step: f64) -> MixedStrategy {
        debug_assert_eq!(self.len(), other.len());
        let v = self
            .0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (1.0 - step) * a + step * b)
            .collect();
        MixedStrategy(v)
    }

    pub fn dot(&self, values: &[f64]) -> f64 {
        self.0.iter().zip(values).map(|(p, v)| p * v).sum()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct JointProfile {
    pub pi1: MixedStrategy,
    pub pi2: MixedStrategy,
}

impl JointProfile {
    pub fn new(pi1: MixedStrategy, pi2: MixedStrategy) -> Self {
        JointProfile { pi1, pi2 }
    }

    pub fn get(&self, player: Player) -> &MixedStrategy {
        match player {
            Player::One => &self.pi1,
            Player::Two => &self.pi2,
        }
    }
}

/// Player one's expected payoff `pi1^T G pi2`.
pub fn expected_payoff(g: &PayoffMatrix, p: &JointProfile) -> Result<f64> {
    g.check_profile(p)?;
    let v = g.payoffs_against(&p.pi2, Player::One)?;
    Ok(p.pi1.dot(&v))
}

/// Expected payoff to each player.
pub fn expected_payoffs(g: &PayoffMatrix, p: &JointProfile) -> Result<[f64; 2]> {
    let u1 = expected_payoff(g, p)?;
    let u2 = match g.is_zero_sum() {
        true => -u1,
        false => p.pi2.dot(&g.payoffs_against(&p.pi1, Player::Two)?),
    };
    Ok([u1, u2])
}

/// Pure best response of `player` to `opponent` and its value. Ties go to the
/// lowest index.
pub fn best_response(
    g: &PayoffMatrix,
    opponent: &MixedStrategy,
    player: Player,
) -> Result<(usize, f64)> {
    let values = g.payoffs_against(opponent, player)?;
    Ok(argmax_first(&values))
}

/// First index of the maximum; NaN-free input assumed.
pub(crate) fn argmax_first(values: &[f64]) -> (usize, f64) {
    let mut best = (0, values[0]);
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > best.1 {
            best = (i, v);
        }
    }
    best
}

/// Sum over both players of the gain from deviating to a best response.
pub fn exploitability(g: &PayoffMatrix, p: &JointProfile) -> Result<f64> {
    let [u1, u2] = expected_payoffs(g, p)?;
    let (_, br1) = best_response(g, &p.pi2, Player::One)?;
    let (_, br2) = best_response(g, &p.pi1, Player::Two)?;
    Ok((br1 - u1) + (br2 - u2))
}

/// Worst-case payoff of `player` using `strategy` in a zero-sum game, i.e.
/// its payoff against the opponent's best response.
pub fn guaranteed_payoff(g: &PayoffMatrix, strategy: &MixedStrategy, player: Player) -> Result<f64> {
    let (_, opp_br) = best_response(g, strategy, player.other())?;
    match g.is_zero_sum() {
        true => Ok(-opp_br),
        false => Err(GameError::Config(
            "guaranteed payoff is only defined for zero-sum games".into(),
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::games::{make_rps, make_rpsx};

    fn uniform_rps_only() -> MixedStrategy {
        MixedStrategy::new(vec![1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0, 0.0]).unwrap()
    }

    #[test]
    fn rps_uniform_payoff_is_zero() {
        let g = make_rps();
        let p = JointProfile::new(MixedStrategy::uniform(3), MixedStrategy::uniform(3));
        assert!(expected_payoff(&g, &p).unwrap().abs() < 1e-15);
    }

    #[test]
    fn rpsx_pure_entries() {
        let g = make_rpsx();
        let x_vs_r = JointProfile::new(MixedStrategy::pure(4, 3), MixedStrategy::pure(4, 0));
        assert_eq!(expected_payoff(&g, &x_vs_r).unwrap(), 0.4);
        let r_vs_p = JointProfile::new(MixedStrategy::pure(4, 0), MixedStrategy::pure(4, 1));
        assert_eq!(expected_payoff(&g, &r_vs_p).unwrap(), -1.0);
    }

    #[test]
    fn shape_mismatch_is_reported() {
        let g = make_rps();
        let p = JointProfile::new(MixedStrategy::uniform(4), MixedStrategy::uniform(3));
        assert!(matches!(expected_payoff(&g, &p), Err(GameError::Shape(_))));
        assert!(best_response(&g, &MixedStrategy::uniform(2), Player::One).is_err());
    }

    #[test]
    fn best_response_examples() {
        let g = make_rpsx();
        let (i, v) = best_response(&g, &uniform_rps_only(), Player::One).unwrap();
        assert_eq!(i, 3);
        assert!((v - 0.4).abs() < 1e-12);

        let (i, v) = best_response(&g, &MixedStrategy::pure(4, 3), Player::One).unwrap();
        assert_eq!((i, v), (3, 0.0));

        let (i, v) = best_response(&make_rps(), &MixedStrategy::uniform(3), Player::One).unwrap();
        assert_eq!(i, 0);
        assert!(v.abs() < 1e-15);
    }

    #[test]
    fn exploitability_examples() {
        let rps = make_rps();
        let u = JointProfile::new(MixedStrategy::uniform(3), MixedStrategy::uniform(3));
        assert!(exploitability(&rps, &u).unwrap().abs() < 1e-12);

        let rock = JointProfile::new(MixedStrategy::pure(3, 0), MixedStrategy::pure(3, 0));
        assert!((exploitability(&rps, &rock).unwrap() - 2.0).abs() < 1e-12);

        let p = JointProfile::new(uniform_rps_only(), uniform_rps_only());
        assert!((exploitability(&make_rpsx(), &p).unwrap() - 0.8).abs() < 1e-12);
    }

    #[test]
    fn player_two_view_negates_transpose() {
        let g = make_rpsx();
        let v = g.view(Player::Two);
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(v.get(i, j), -g.get(j, i));
            }
        }
    }

    #[test]
    fn general_sum_exploitability() {
        // Prisoner's dilemma: defect/defect is the unique equilibrium.
        let p1 = DMatrix::from_row_slice(2, 2, &[3.0, 0.0, 5.0, 1.0]);
        let g = PayoffMatrix::general_sum(p1.clone(), p1.transpose()).unwrap();
        let dd = JointProfile::new(MixedStrategy::pure(2, 1), MixedStrategy::pure(2, 1));
        assert_eq!(exploitability(&g, &dd).unwrap(), 0.0);
        let cc = JointProfile::new(MixedStrategy::pure(2, 0), MixedStrategy::pure(2, 0));
        assert_eq!(exploitability(&g, &cc).unwrap(), 4.0);
    }

    #[test]
    fn mixed_strategy_validation() {
        assert!(MixedStrategy::new(vec![0.5, 0.4]).is_err());
        assert!(MixedStrategy::new(vec![1.2, -0.2]).is_err());
        assert!(MixedStrategy::new(vec![]).is_err());
        assert!(MixedStrategy::new(vec![0.5, 0.5]).is_ok());
        assert!(PayoffMatrix::from_rows(&[vec![1.0, f64::NAN]]).is_err());
        assert!(PayoffMatrix::from_rows(&[vec![1.0, 2.0], vec![1.0]]).is_err());
    }
}
