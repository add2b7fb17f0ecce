//! Convex-hull membership by Wolfe's minimum-norm-point algorithm applied to
//! the rows translated by the candidate.

use nalgebra::{DMatrix, DVector};

use crate::error::{GameError, Result};

pub const HULL_TOL: f64 = 1e-7;

const ZERO: f64 = 1e-12;

/// Euclidean distance from `candidate` to the convex hull of `rows`.
pub fn hull_distance(rows: &DMatrix<f64>, candidate: &[f64]) -> Result<f64> {
    if rows.nrows() == 0 {
        return Err(GameError::EmptyPopulation);
    }
    if rows.ncols() != candidate.len() {
        return Err(GameError::Shape(format!(
            "candidate has {} entries, rows have {}",
            candidate.len(),
            rows.ncols()
        )));
    }
    let c = DVector::from_column_slice(candidate);
    let pts: Vec<DVector<f64>> = (0..rows.nrows()).map(|i| rows.row(i).transpose() - &c).collect();
    Ok(min_norm_point(&pts).norm())
}

/// True iff `candidate` lies within `tol` of some convex combination of the
/// rows.
pub fn hull_contains(rows: &DMatrix<f64>, candidate: &[f64], tol: f64) -> Result<bool> {
    Ok(hull_distance(rows, candidate)? <= tol)
}

/// True iff the added row lies outside the hull of the existing rows.
pub fn verify_enlargement(before: &DMatrix<f64>, added: &[f64], tol: f64) -> Result<bool> {
    Ok(!hull_contains(before, added, tol)?)
}

fn combine(pts: &[DVector<f64>], set: &[usize], w: &[f64]) -> DVector<f64> {
    let mut x = DVector::zeros(pts[0].len());
    for (&i, &l) in set.iter().zip(w) {
        x.axpy(l, &pts[i], 1.0);
    }
    x
}

/// Weights of the point of minimum norm in the affine hull of `set`.
fn affine_min_norm(pts: &[DVector<f64>], set: &[usize]) -> Vec<f64> {
    let k = set.len();
    let mut a = DMatrix::zeros(k + 1, k + 1);
    let mut b = DVector::zeros(k + 1);
    for (r, &i) in set.iter().enumerate() {
        for (s, &j) in set.iter().enumerate() {
            a[(r, s)] = pts[i].dot(&pts[j]);
        }
        a[(r, k)] = 1.0;
        a[(k, r)] = 1.0;
    }
    b[k] = 1.0;
    let sol = match a.clone().lu().solve(&b) {
        Some(s) if s.iter().all(|v| v.is_finite()) => s,
        _ => a.pseudo_inverse(1e-14).expect("pseudo-inverse of a finite matrix") * b,
    };
    sol.iter().take(k).copied().collect()
}

fn min_norm_point(pts: &[DVector<f64>]) -> DVector<f64> {
    let scale = pts.iter().map(|p| p.norm_squared()).fold(0.0, f64::max).max(1e-300);
    let start = (0..pts.len())
        .min_by(|&a, &b| pts[a].norm_squared().total_cmp(&pts[b].norm_squared()))
        .expect("non-empty");
    let mut set = vec![start];
    let mut lambda = vec![1.0];
    let mut x = pts[start].clone();
    for _ in 0..(50 * pts.len() + 50) {
        let (j, best) = (0..pts.len())
            .map(|i| (i, x.dot(&pts[i])))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("non-empty");
        if x.norm_squared() - best <= 1e-12 * scale || set.contains(&j) {
            break;
        }
        set.push(j);
        lambda.push(0.0);
        loop {
            let mu = affine_min_norm(pts, &set);
            if mu.iter().all(|&m| m > ZERO) {
                lambda = mu;
                x = combine(pts, &set, &lambda);
                break;
            }
            let mut theta = 1.0f64;
            for (l, m) in lambda.iter().zip(&mu) {
                if *m <= ZERO && l - m > 0.0 {
                    theta = theta.min(l / (l - m));
                }
            }
            for (l, m) in lambda.iter_mut().zip(&mu) {
                *l = theta * m + (1.0 - theta) * *l;
            }
            let mut k = 0;
            while k < set.len() {
                if lambda[k] <= ZERO {
                    set.remove(k);
                    lambda.remove(k);
                } else {
                    k += 1;
                }
            }
            if set.is_empty() {
                // numerical breakdown; restart from the best vertex
                set.push(start);
                lambda.push(1.0);
            }
            let total: f64 = lambda.iter().sum();
            lambda.iter_mut().for_each(|l| *l /= total);
            x = combine(pts, &set, &lambda);
            if set.len() == 1 {
                break;
            }
        }
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::games::make_rps;
    use crate::oracles::project_to_simplex;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Projected-gradient reference for the same distance.
    fn reference_distance(rows: &DMatrix<f64>, c: &[f64]) -> f64 {
        let n = rows.nrows();
        let mut a = vec![1.0 / n as f64; n];
        let lip = (rows * rows.transpose()).norm().max(1e-12);
        for _ in 0..20000 {
            let x = rows.tr_mul(&DVector::from_column_slice(&a)) - DVector::from_column_slice(c);
            let g = rows * x;
            let step: Vec<f64> = a.iter().zip(g.iter()).map(|(ai, gi)| ai - gi / lip).collect();
            a = project_to_simplex(&step);
        }
        (rows.tr_mul(&DVector::from_column_slice(&a)) - DVector::from_column_slice(c)).norm()
    }

    #[test]
    fn rps_examples() {
        let rows = make_rps().values().clone();
        assert!(hull_contains(&rows, &[0.0, 0.0, 0.0], HULL_TOL).unwrap());
        assert!(hull_contains(&rows, &[0.0, -1.0, 1.0], HULL_TOL).unwrap());
        assert!(verify_enlargement(&rows, &[1.0, 1.0, 1.0], HULL_TOL).unwrap());
        assert!(!verify_enlargement(&rows, &rows.row(2).iter().copied().collect::<Vec<_>>(), HULL_TOL).unwrap());
        assert!(!hull_contains(&rows, &[3.0, 0.0, 0.0], HULL_TOL).unwrap());
        let d = hull_distance(&rows, &[1.0, 1.0, 1.0]).unwrap();
        assert!((d - 3f64.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn singleton_hull() {
        let one = DMatrix::from_row_slice(1, 2, &[1.0, -2.0]);
        assert!(verify_enlargement(&one, &[2.0, -4.0], HULL_TOL).unwrap());
        assert!(hull_contains(&one, &[1.0, -2.0], HULL_TOL).unwrap());
        assert!(hull_distance(&one, &[1.0]).is_err());
        assert!(hull_distance(&DMatrix::zeros(0, 2), &[1.0, 0.0]).is_err());
    }

    #[test]
    fn agrees_with_projected_gradient() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..40 {
            let n = rng.random_range(1..7);
            let d = rng.random_range(1..5);
            let rows = DMatrix::from_fn(n, d, |_, _| rng.random_range(-1.0..1.0));
            let c: Vec<f64> = (0..d).map(|_| rng.random_range(-1.5..1.5)).collect();
            let got = hull_distance(&rows, &c).unwrap();
            let want = reference_distance(&rows, &c);
            assert!(got <= want + 1e-7, "{got} vs {want}");
            assert!(got >= want - 1e-5, "{got} vs {want}");
        }
    }

    #[test]
    fn affinely_dependent_rows() {
        let rows = DMatrix::from_row_slice(4, 2, &[0.0, 0.0, 1.0, 0.0, 2.0, 0.0, 1.0, 0.0]);
        assert!(hull_contains(&rows, &[1.5, 0.0], HULL_TOL).unwrap());
        assert!((hull_distance(&rows, &[1.0, 1.0]).unwrap() - 1.0).abs() < 1e-12);
    }
}
