//! Benchmark games: Rock-Paper-Scissors and its exploitable variant, seeded
//! random antisymmetric games, Colonel Blotto, a differentiable Gaussian
//! mixture game and a CSV loader for externally computed meta-games.

mod csv;
mod engine;

pub use self::csv::{load_meta_game, parse_payoff_csv, write_payoff_csv};
pub use self::engine::{mixture_engine, GameEngine, MixtureEngine, MixtureModelSpec};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{GameError, Result};
use crate::game::PayoffMatrix;

/// Rock, Paper, Scissors in that order; `G(R, P) = -1`.
pub fn make_rps() -> PayoffMatrix {
    #[rustfmt::skip]
    let v = DMatrix::from_row_slice(3, 3, &[
         0.0, -1.0,  1.0,
         1.0,  0.0, -1.0,
        -1.0,  1.0,  0.0,
    ]);
    PayoffMatrix::zero_sum(v).expect("finite")
}

/// RPS extended with a fourth strategy X that beats each of R, P, S by 2/5.
pub fn make_rpsx() -> PayoffMatrix {
    let x = 2.0 / 5.0;
    #[rustfmt::skip]
    let v = DMatrix::from_row_slice(4, 4, &[
         0.0, -1.0,  1.0, -x,
         1.0,  0.0, -1.0, -x,
        -1.0,  1.0,  0.0, -x,
         x,    x,    x,   0.0,
    ]);
    PayoffMatrix::zero_sum(v).expect("finite")
}

/// Antisymmetric `n x n` game with upper-triangular entries drawn i.i.d.
/// uniform on `[-1, 1]`.
pub fn make_random_zero_sum(n: usize, seed: u64) -> Result<PayoffMatrix> {
    if n < 2 {
        return Err(GameError::Config(format!("random game needs n >= 2, got {n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i + 1..n {
            let v: f64 = rng.random_range(-1.0..=1.0);
            m[(i, j)] = v;
            m[(j, i)] = -v;
        }
    }
    PayoffMatrix::zero_sum(m)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BlottoSpec {
    pub areas: usize,
    pub coins: usize,
}

impl Default for BlottoSpec {
    fn default() -> Self {
        BlottoSpec { areas: 3, coins: 10 }
    }
}

/// Every way to split `coins` over `areas`, in lexicographic order.
pub fn blotto_allocations(spec: BlottoSpec) -> Vec<Vec<usize>> {
    fn fill(prefix: &mut Vec<usize>, remaining: usize, slots: usize, out: &mut Vec<Vec<usize>>) {
        if slots == 1 {
            prefix.push(remaining);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for c in 0..=remaining {
            prefix.push(c);
            fill(prefix, remaining - c, slots - 1, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if spec.areas > 0 {
        fill(&mut Vec::with_capacity(spec.areas), spec.coins, spec.areas, &mut out);
    }
    out
}

/// Colonel Blotto: the player winning more areas scores 1, the other -1.
pub fn make_blotto(spec: BlottoSpec) -> Result<PayoffMatrix> {
    if spec.areas == 0 {
        return Err(GameError::Config("blotto needs at least one area".into()));
    }
    let allocs = blotto_allocations(spec);
    let n = allocs.len();
    let m = DMatrix::from_fn(n, n, |i, j| {
        let margin: i64 = allocs[i]
            .iter()
            .zip(&allocs[j])
            .map(|(a, b)| match a.cmp(b) {
                std::cmp::Ordering::Greater => 1,
                std::cmp::Ordering::Less => -1,
                std::cmp::Ordering::Equal => 0,
            })
            .sum();
        margin.signum() as f64
    });
    PayoffMatrix::zero_sum(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rps_layout() {
        let g = make_rps();
        for i in 0..3 {
            assert_eq!(g.get(i, i), 0.0);
        }
        assert_eq!(g.get(1, 0), 1.0);
        assert_eq!(g.get(0, 1), -1.0);
        assert_eq!(g.get(0, 2), 1.0);
        for j in 0..3 {
            let s: f64 = (0..3).map(|i| g.get(i, j)).sum();
            assert_eq!(s, 0.0);
        }
    }

    #[test]
    fn rpsx_layout() {
        let g = make_rpsx();
        assert_eq!(g.get(3, 0), 0.4);
        assert_eq!(g.get(0, 3), -0.4);
        assert!(g.is_antisymmetric(0.0));
    }

    #[test]
    fn random_games_are_seeded_and_antisymmetric() {
        let a = make_random_zero_sum(6, 17).unwrap();
        let b = make_random_zero_sum(6, 17).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, make_random_zero_sum(6, 18).unwrap());
        assert!(a.is_antisymmetric(0.0));
        assert!(a.values().iter().all(|v| (-1.0..=1.0).contains(v)));

        let two = make_random_zero_sum(2, 3).unwrap();
        assert_eq!(two.get(0, 1), -two.get(1, 0));
        assert_eq!(two.get(0, 0), 0.0);
        assert!(make_random_zero_sum(1, 0).is_err());
    }

    #[test]
    fn blotto_strategy_count_and_order() {
        let allocs = blotto_allocations(BlottoSpec::default());
        // C(12, 2)
        assert_eq!(allocs.len(), 66);
        assert_eq!(allocs[0], vec![0, 0, 10]);
        assert_eq!(allocs[1], vec![0, 1, 9]);
        assert_eq!(allocs[65], vec![10, 0, 0]);
        assert!(allocs.windows(2).all(|w| w[0] < w[1]));
        assert!(allocs.iter().all(|a| a.iter().sum::<usize>() == 10));
    }

    #[test]
    fn blotto_payoffs() {
        let spec = BlottoSpec::default();
        let allocs = blotto_allocations(spec);
        let g = make_blotto(spec).unwrap();
        let idx = |a: &[usize]| allocs.iter().position(|x| x == a).unwrap();
        assert_eq!(g.get(idx(&[10, 0, 0]), idx(&[4, 3, 3])), -1.0);
        assert_eq!(g.get(idx(&[4, 3, 3]), idx(&[10, 0, 0])), 1.0);
        assert_eq!(g.get(idx(&[5, 5, 0]), idx(&[5, 5, 0])), 0.0);
        // one area each, third tied
        assert_eq!(g.get(idx(&[6, 4, 0]), idx(&[4, 6, 0])), 0.0);
        assert!(g.values().iter().all(|v| [-1.0, 0.0, 1.0].contains(v)));
        assert!(g.is_antisymmetric(0.0));
    }

    #[test]
    fn blotto_edge_sizes() {
        assert_eq!(make_blotto(BlottoSpec { areas: 1, coins: 5 }).unwrap().rows(), 1);
        assert_eq!(make_blotto(BlottoSpec { areas: 4, coins: 0 }).unwrap().rows(), 1);
        assert!(make_blotto(BlottoSpec { areas: 0, coins: 3 }).is_err());
    }
}
