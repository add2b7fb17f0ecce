use std::f64::consts::TAU;

/// A deterministic two-player payoff function over real parameter vectors.
/// `evaluate(a, b)` is the payoff to the holder of `a`.
pub trait GameEngine: Send + Sync {
    fn param_dim(&self) -> usize;

    fn evaluate(&self, a: &[f64], b: &[f64]) -> f64;

    /// Gradient of `evaluate(a, b)` with respect to `a`, when available.
    fn gradient(&self, _a: &[f64], _b: &[f64]) -> Option<Vec<f64>> {
        None
    }

    fn differentiable(&self) -> bool {
        false
    }

    /// Symmetric zero-sum engines satisfy `evaluate(a, b) == -evaluate(b, a)`.
    fn symmetric(&self) -> bool {
        true
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MixtureModelSpec {
    pub centers: Vec<[f64; 2]>,
    pub variance: f64,
    pub normalize_weights: bool,
}

impl MixtureModelSpec {
    /// Seven centers evenly spaced on a circle of the given radius, the first
    /// at angle zero.
    pub fn ring(radius: f64, variance: f64, normalize_weights: bool) -> Self {
        let centers = (0..7)
            .map(|k| {
                let a = TAU * k as f64 / 7.0;
                [radius * a.cos(), radius * a.sin()]
            })
            .collect();
        MixtureModelSpec {
            centers,
            variance,
            normalize_weights,
        }
    }

    fn validate(&self) -> Result<(), String> {
        if self.centers.len() != 7 {
            return Err(format!("expected 7 centers, got {}", self.centers.len()));
        }
        if !(self.variance > 0.0) || !self.variance.is_finite() {
            return Err(format!("variance must be positive, got {}", self.variance));
        }
        for (i, a) in self.centers.iter().enumerate() {
            if a.iter().any(|v| !v.is_finite()) {
                return Err(format!("center {i} is not finite"));
            }
            if self.centers[..i].contains(a) {
                return Err(format!("center {i} duplicates an earlier center"));
            }
        }
        Ok(())
    }
}

impl Default for MixtureModelSpec {
    fn default() -> Self {
        MixtureModelSpec::ring(5.0, 1.0, false)
    }
}

/// Seven Gaussian humps in the plane. A point's weight on hump `k` is its
/// Gaussian likelihood `exp(-|theta - c_k|^2 / (2 var))`; the payoff
/// combines a cyclic 7x7 dominance matrix with a transitive term rewarding
/// total weight.
#[derive(Clone, Debug)]
pub struct MixtureEngine {
    spec: MixtureModelSpec,
}

/// `CYCLE[i][j] = 1` when hump `i` beats hump `j`: each hump beats the next
/// three around the ring and loses to the previous three.
pub const CYCLE: [[f64; 7]; 7] = {
    let mut c = [[0.0; 7]; 7];
    let mut i = 0;
    while i < 7 {
        let mut j = 0;
        while j < 7 {
            let d = (j + 7 - i) % 7;
            c[i][j] = if d == 0 {
                0.0
            } else if d <= 3 {
                1.0
            } else {
                -1.0
            };
            j += 1;
        }
        i += 1;
    }
    c
};

pub fn mixture_engine(spec: MixtureModelSpec) -> Result<MixtureEngine, crate::GameError> {
    spec.validate().map_err(crate::GameError::Config)?;
    Ok(MixtureEngine { spec })
}

impl MixtureEngine {
    pub fn spec(&self) -> &MixtureModelSpec {
        &self.spec
    }

    pub fn centers(&self) -> &[[f64; 2]] {
        &self.spec.centers
    }

    /// Per-hump weights of a point, with the log-weight gradients
    /// `d log w_k / d theta` for unnormalised weights.
    fn weights_and_log_grads(&self, theta: &[f64]) -> ([f64; 7], [[f64; 2]; 7]) {
        let var = self.spec.variance;
        let mut logw = [0.0; 7];
        let mut g = [[0.0; 2]; 7];
        for (k, c) in self.spec.centers.iter().enumerate() {
            let dx = theta[0] - c[0];
            let dy = theta[1] - c[1];
            logw[k] = -(dx * dx + dy * dy) / (2.0 * var);
            g[k] = [-dx / var, -dy / var];
        }
        let mut w = [0.0; 7];
        if self.spec.normalize_weights {
            let top = logw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let mut total = 0.0;
            for k in 0..7 {
                w[k] = (logw[k] - top).exp();
                total += w[k];
            }
            w.iter_mut().for_each(|v| *v /= total);
        } else {
            for k in 0..7 {
                w[k] = logw[k].exp();
            }
        }
        (w, g)
    }

    pub fn weights(&self, theta: &[f64]) -> [f64; 7] {
        self.weights_and_log_grads(theta).0
    }

    /// Jacobian rows `d w_k / d theta`.
    fn weight_jacobian(&self, theta: &[f64]) -> ([f64; 7], [[f64; 2]; 7]) {
        let (w, g) = self.weights_and_log_grads(theta);
        let mut jac = [[0.0; 2]; 7];
        if self.spec.normalize_weights {
            let mean = [0, 1].map(|d| (0..7).map(|k| w[k] * g[k][d]).sum::<f64>());
            for k in 0..7 {
                jac[k] = [w[k] * (g[k][0] - mean[0]), w[k] * (g[k][1] - mean[1])];
            }
        } else {
            for k in 0..7 {
                jac[k] = [w[k] * g[k][0], w[k] * g[k][1]];
            }
        }
        (w, jac)
    }
}

impl GameEngine for MixtureEngine {
    fn param_dim(&self) -> usize {
        2
    }

    fn evaluate(&self, a: &[f64], b: &[f64]) -> f64 {
        let wa = self.weights(a);
        let wb = self.weights(b);
        let mut cyc = 0.0;
        for i in 0..7 {
            for j in 0..7 {
                cyc += wa[i] * CYCLE[i][j] * wb[j];
            }
        }
        let trans: f64 = (0..7).map(|k| wa[k] - wb[k]).sum();
        cyc + 0.5 * trans
    }

    fn gradient(&self, a: &[f64], b: &[f64]) -> Option<Vec<f64>> {
        let (_, jac) = self.weight_jacobian(a);
        let wb = self.weights(b);
        let mut out = vec![0.0; 2];
        for i in 0..7 {
            let coef: f64 = (0..7).map(|j| CYCLE[i][j] * wb[j]).sum::<f64>() + 0.5;
            out[0] += coef * jac[i][0];
            out[1] += coef * jac[i][1];
        }
        Some(out)
    }

    fn differentiable(&self) -> bool {
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn engines() -> Vec<MixtureEngine> {
        vec![
            mixture_engine(MixtureModelSpec::ring(5.0, 1.0, false)).unwrap(),
            mixture_engine(MixtureModelSpec::ring(5.0, 1.0, true)).unwrap(),
        ]
    }

    #[test]
    fn cycle_matrix_matches_layout() {
        assert_eq!(CYCLE[0], [0.0, 1.0, 1.0, 1.0, -1.0, -1.0, -1.0]);
        assert_eq!(CYCLE[1], [-1.0, 0.0, 1.0, 1.0, 1.0, -1.0, -1.0]);
        assert_eq!(CYCLE[6], [1.0, 1.0, 1.0, -1.0, -1.0, -1.0, 0.0]);
        for i in 0..7 {
            for j in 0..7 {
                assert_eq!(CYCLE[i][j], -CYCLE[j][i]);
            }
        }
    }

    #[test]
    fn self_play_is_zero() {
        for e in engines() {
            assert!(e.evaluate(&[1.3, -0.7], &[1.3, -0.7]).abs() < 1e-15);
        }
    }

    #[test]
    fn far_opponent_leaves_transitive_term() {
        let e = mixture_engine(MixtureModelSpec::default()).unwrap();
        let c1 = e.centers()[0];
        let v = e.evaluate(&c1, &[1e3, 1e3]);
        let w = e.weights(&c1);
        assert!(v > 0.0);
        assert!((v - 0.5 * w[0]).abs() < 0.01, "v = {v}, half weight = {}", 0.5 * w[0]);
    }

    #[test]
    fn antisymmetric_over_random_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for e in engines() {
            for _ in 0..100 {
                let a = [rng.random_range(-7.0..7.0), rng.random_range(-7.0..7.0)];
                let b = [rng.random_range(-7.0..7.0), rng.random_range(-7.0..7.0)];
                assert!((e.evaluate(&a, &b) + e.evaluate(&b, &a)).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn normalised_payoff_is_bounded() {
        let e = &engines()[1];
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..200 {
            let a = [rng.random_range(-9.0..9.0), rng.random_range(-9.0..9.0)];
            let b = [rng.random_range(-9.0..9.0), rng.random_range(-9.0..9.0)];
            assert!(e.evaluate(&a, &b).abs() <= 1.0 + 3.5);
        }
    }

    #[test]
    fn gradient_matches_central_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for e in engines() {
            for _ in 0..50 {
                let a = [rng.random_range(-6.0..6.0), rng.random_range(-6.0..6.0)];
                let b = [rng.random_range(-6.0..6.0), rng.random_range(-6.0..6.0)];
                let g = e.gradient(&a, &b).unwrap();
                for d in 0..2 {
                    let h = 1e-6;
                    let mut ap = a;
                    let mut am = a;
                    ap[d] += h;
                    am[d] -= h;
                    let fd = (e.evaluate(&ap, &b) - e.evaluate(&am, &b)) / (2.0 * h);
                    assert!((fd - g[d]).abs() < 1e-6 * (1.0 + fd.abs()), "{fd} vs {}", g[d]);
                }
            }
        }
    }

    #[test]
    fn spec_validation() {
        let mut s = MixtureModelSpec::default();
        s.variance = 0.0;
        assert!(mixture_engine(s).is_err());
        let mut s = MixtureModelSpec::default();
        s.centers[3] = s.centers[1];
        assert!(mixture_engine(s).is_err());
        let mut s = MixtureModelSpec::default();
        s.centers.pop();
        assert!(mixture_engine(s).is_err());
    }
}
