//! Population diversity as the expected size of a sample from the
//! determinantal point process whose kernel is the Gram matrix of the
//! population's payoff rows.
//!
//! For a kernel `L` with eigenvalues `l_k` the expected cardinality is
//! `tr(I - (L + I)^-1) = sum_k l_k / (1 + l_k)`. Since `M M^T` and `M^T M`
//! share their non-zero spectrum, row populations are evaluated on whichever
//! Gram matrix is smaller; [`RowDiversity`] keeps the column-side form so a
//! candidate row can be scored, and differentiated, in `O(d^2)`.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};

use crate::error::{GameError, Result};
use crate::game::{JointProfile, PayoffMatrix};

const SYMMETRY_TOL: f64 = 1e-12;
const PSD_TOL: f64 = 1e-9;

/// A symmetric positive semi-definite DPP kernel together with its clamped
/// spectrum.
#[derive(Clone, Debug)]
pub struct DiversityKernel {
    l: DMatrix<f64>,
    eigenvalues: Vec<f64>,
}

impl DiversityKernel {
    /// Validates symmetry and positive semi-definiteness. Eigenvalues within
    /// the tolerance below zero are clamped to zero; anything further
    /// negative is rejected. Both tolerances scale with the largest diagonal
    /// entry once it exceeds one.
    pub fn new(l: DMatrix<f64>) -> Result<Self> {
        if !l.is_square() {
            return Err(GameError::InvalidKernel(format!(
                "kernel is {}x{}",
                l.nrows(),
                l.ncols()
            )));
        }
        if l.iter().any(|v| !v.is_finite()) {
            return Err(GameError::InvalidKernel("non-finite entry".into()));
        }
        let n = l.nrows();
        let scale = (0..n).map(|i| l[(i, i)].abs()).fold(1.0, f64::max);
        for i in 0..n {
            for j in i + 1..n {
                if (l[(i, j)] - l[(j, i)]).abs() > SYMMETRY_TOL * scale {
                    return Err(GameError::InvalidKernel(format!(
                        "not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        let mut eigenvalues = symmetric_eigenvalues(&l);
        for v in eigenvalues.iter_mut() {
            if *v < -PSD_TOL * scale {
                return Err(GameError::InvalidKernel(format!(
                    "not positive semi-definite: eigenvalue {v:e}"
                )));
            }
            *v = v.max(0.0);
        }
        Ok(DiversityKernel { l, eigenvalues })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.l
    }

    pub fn size(&self) -> usize {
        self.l.nrows()
    }

    /// Clamped eigenvalues, ascending.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }
}

fn symmetric_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    if m.nrows() == 0 {
        return Vec::new();
    }
    let mut ev: Vec<f64> = SymmetricEigen::new(m.clone()).eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// `L = M M^T`, symmetrised to absorb rounding.
pub fn build_kernel(rows: &DMatrix<f64>) -> DiversityKernel {
    let l = rows * rows.transpose();
    let l = (&l + l.transpose()) * 0.5;
    DiversityKernel::new(l).expect("a Gram matrix is positive semi-definite")
}

/// Expected cardinality of a DPP sample, `sum_k l_k / (1 + l_k)`.
pub fn expected_cardinality(kernel: &DiversityKernel) -> f64 {
    kernel.eigenvalues.iter().map(|l| l / (1.0 + l)).sum()
}

/// Expected cardinality of the G-DPP over a set of payoff rows, computed on
/// the smaller of the two Gram matrices.
pub fn row_diversity(rows: &DMatrix<f64>) -> f64 {
    let gram = if rows.nrows() <= rows.ncols() {
        rows * rows.transpose()
    } else {
        rows.transpose() * rows
    };
    let gram = (&gram + gram.transpose()) * 0.5;
    symmetric_eigenvalues(&gram)
        .into_iter()
        .map(|l| {
            let l = l.max(0.0);
            l / (1.0 + l)
        })
        .sum()
}

/// `det(L_Y) / det(L + I)`, the probability that a DPP sample is exactly `Y`.
pub fn dpp_subset_probability(kernel: &DiversityKernel, subset: &[usize]) -> Result<f64> {
    let n = kernel.size();
    if let Some(&bad) = subset.iter().find(|&&i| i >= n) {
        return Err(GameError::Index { index: bad, size: n });
    }
    let normaliser: f64 = kernel.eigenvalues.iter().map(|l| 1.0 + l).product();
    let minor = DMatrix::from_fn(subset.len(), subset.len(), |a, b| {
        kernel.l[(subset[a], subset[b])]
    });
    let det = if subset.is_empty() { 1.0 } else { minor.determinant() };
    Ok(det.max(0.0) / normaliser)
}

/// Nash-weighted rectified payoff `pi1^T max(M, 0) pi2`.
pub fn effective_diversity(m: &PayoffMatrix, nash: &JointProfile) -> Result<f64> {
    if nash.pi1.len() != m.rows() || nash.pi2.len() != m.cols() {
        return Err(GameError::Shape(format!(
            "profile is {}x{}, payoff table is {}x{}",
            nash.pi1.len(),
            nash.pi2.len(),
            m.rows(),
            m.cols()
        )));
    }
    let p = nash.pi1.probs();
    let q = nash.pi2.probs();
    let mut total = 0.0;
    for i in 0..m.rows() {
        if p[i] == 0.0 {
            continue;
        }
        for j in 0..m.cols() {
            total += p[i] * m.get(i, j).max(0.0) * q[j];
        }
    }
    Ok(total)
}

/// Diversity of a fixed row population, prepared for scoring candidate rows.
///
/// Holds the Cholesky factor of `C = I + M^T M`. The population's diversity
/// is `d - tr(C^-1)`; appending `w` adds `|C^-1 w|^2 / (1 + w^T C^-1 w)`.
#[derive(Clone, Debug)]
pub struct RowDiversity {
    chol: Cholesky<f64, Dyn>,
    dim: usize,
    value: f64,
}

impl RowDiversity {
    /// `rows` is `n x d`; an empty population is a `0 x d` matrix.
    pub fn new(rows: &DMatrix<f64>) -> Self {
        let d = rows.ncols();
        let c = DMatrix::identity(d, d) + rows.transpose() * rows;
        Self::from_gram(c)
    }

    /// Builds from `C = I + M^T M` directly, for callers that accumulate it.
    pub fn from_gram(c: DMatrix<f64>) -> Self {
        let d = c.nrows();
        let c = (&c + c.transpose()) * 0.5;
        let chol = Cholesky::new(c).expect("I + M^T M is positive definite");
        let inv = chol.inverse();
        let value = (d as f64 - inv.trace()).max(0.0);
        RowDiversity { chol, dim: d, value }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `C^-1`, for callers scoring many rows in tight loops.
    pub fn inverse(&self) -> DMatrix<f64> {
        self.chol.inverse()
    }

    /// Diversity of the population itself.
    pub fn value(&self) -> f64 {
        self.value
    }

    fn solve(&self, w: &[f64]) -> (DVector<f64>, DVector<f64>) {
        assert_eq!(w.len(), self.dim, "candidate row has the wrong length");
        let w = DVector::from_column_slice(w);
        let u = self.chol.solve(&w);
        (w, u)
    }

    /// Increase in diversity from appending `w`.
    pub fn gain(&self, w: &[f64]) -> f64 {
        let (w, u) = self.solve(w);
        u.norm_squared() / (1.0 + w.dot(&u))
    }

    /// Diversity of the population with `w` appended.
    pub fn with_row(&self, w: &[f64]) -> f64 {
        self.value + self.gain(w)
    }

    /// Gradient of [`Self::with_row`] with respect to `w`: `2 B^-2 w` with
    /// `B = C + w w^T`.
    pub fn gradient(&self, w: &[f64]) -> Vec<f64> {
        let (w, u) = self.solve(w);
        let s = 1.0 + w.dot(&u);
        let v = self.chol.solve(&u);
        let uu = u.norm_squared();
        let g = (v - u * (uu / s)) * (2.0 / s);
        g.iter().copied().collect()
    }

    /// Value and gradient in one pass.
    pub fn value_and_gradient(&self, w: &[f64]) -> (f64, Vec<f64>) {
        let (w, u) = self.solve(w);
        let s = 1.0 + w.dot(&u);
        let uu = u.norm_squared();
        let v = self.chol.solve(&u);
        let g = (v - &u * (uu / s)) * (2.0 / s);
        (self.value + uu / s, g.iter().copied().collect())
    }
}

/// Gradient of `expected_cardinality(build_kernel([rows; w]))` with respect
/// to the candidate row `w`.
pub fn diversity_gradient(rows: &DMatrix<f64>, w: &[f64]) -> Result<Vec<f64>> {
    if rows.ncols() != w.len() {
        return Err(GameError::Shape(format!(
            "candidate has {} entries, population rows have {}",
            w.len(),
            rows.ncols()
        )));
    }
    Ok(RowDiversity::new(rows).gradient(w))
}

/// Rows of `W` split into positive qualities and diversity features, so
/// that `L_ij = q_i (w_i . w_j) q_j`.
#[derive(Clone, Debug)]
pub struct QDDecomposition {
    pub qualities: Vec<f64>,
    pub features: DMatrix<f64>,
}

impl QDDecomposition {
    pub fn new(qualities: Vec<f64>, features: DMatrix<f64>) -> Result<Self> {
        if qualities.len() != features.nrows() {
            return Err(GameError::Shape(format!(
                "{} qualities for {} feature rows",
                qualities.len(),
                features.nrows()
            )));
        }
        if qualities.iter().any(|q| !(*q > 0.0) || !q.is_finite()) {
            return Err(GameError::Degenerate("qualities must be positive".into()));
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(GameError::Degenerate("features must be finite".into()));
        }
        Ok(QDDecomposition {
            qualities,
            features,
        })
    }

    /// `diag(q) F`: the rows whose Gram matrix is the kernel.
    pub fn scaled_rows(&self) -> DMatrix<f64> {
        let mut rows = self.features.clone();
        for (i, q) in self.qualities.iter().enumerate() {
            rows.row_mut(i).scale_mut(*q);
        }
        rows
    }

    pub fn kernel(&self) -> DiversityKernel {
        build_kernel(&self.scaled_rows())
    }
}

/// Quality-diversity decomposition with `q_i = exp(pbr_i)` and features the
/// payoff rows divided by the table's Frobenius norm.
pub fn qd_decomposition(rows: &DMatrix<f64>, pbr_values: &[f64]) -> Result<QDDecomposition> {
    if pbr_values.len() != rows.nrows() {
        return Err(GameError::Shape(format!(
            "{} quality values for {} rows",
            pbr_values.len(),
            rows.nrows()
        )));
    }
    let frob = rows.norm();
    if !(frob > 0.0) {
        return Err(GameError::Degenerate("payoff table has zero Frobenius norm".into()));
    }
    QDDecomposition::new(pbr_values.iter().map(|v| v.exp()).collect(), rows / frob)
}

pub fn qd_kernel(rows: &DMatrix<f64>, pbr_values: &[f64]) -> Result<DiversityKernel> {
    Ok(qd_decomposition(rows, pbr_values)?.kernel())
}
