//! Small dense linear-algebra helpers shared by the solvers and learners.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::SolverError;

/// Jitter added to the diagonal when a factorization fails.
pub const JITTER: f64 = 1e-12;

/// Relative singular-value tolerance used for rank decisions.
pub const RANK_TOL: f64 = 1e-9;

/// Cholesky factor of a symmetric positive definite matrix.
///
/// If the plain factorization fails, `JITTER * scale * I` is added (growing by
/// 10x up to four times) where `scale` is the largest diagonal entry.
#[derive(Debug, Clone)]
pub struct SpdFactor {
    chol: Cholesky<f64, Dyn>,
}

impl SpdFactor {
    pub fn new(m: &DMatrix<f64>) -> Result<Self, SolverError> {
        if let Some(chol) = Cholesky::new(m.clone()) {
            return Ok(Self { chol });
        }
        let n = m.nrows();
        let scale = (0..n).map(|i| m[(i, i)].abs()).fold(1.0_f64, f64::max);
        let mut jitter = JITTER * scale;
        for _ in 0..4 {
            let shifted = m + DMatrix::identity(n, n) * jitter;
            if let Some(chol) = Cholesky::new(shifted) {
                return Ok(Self { chol });
            }
            jitter *= 10.0;
        }
        Err(SolverError::Singular)
    }

    pub fn from_cholesky(chol: Cholesky<f64, Dyn>) -> Self {
        Self { chol }
    }

    pub fn dim(&self) -> usize {
        self.chol.l_dirty().nrows()
    }

    /// `M^{-1} v`.
    pub fn solve(&self, v: &DVector<f64>) -> DVector<f64> {
        self.chol.solve(v)
    }

    /// `vᵀ M^{-1} v`, computed as `‖L^{-1} v‖²`.
    pub fn inv_quad(&self, v: &DVector<f64>) -> f64 {
        let y = self
            .chol
            .l_dirty()
            .solve_lower_triangular(v)
            .expect("cholesky factor has a nonzero diagonal");
        y.norm_squared()
    }

    /// `uᵀ M^{-1} v`.
    pub fn inv_bilinear(&self, u: &DVector<f64>, v: &DVector<f64>) -> f64 {
        u.dot(&self.solve(v))
    }

    pub fn inverse(&self) -> DMatrix<f64> {
        self.chol.inverse()
    }

    pub fn lower(&self) -> DMatrix<f64> {
        self.chol.l()
    }

    /// Maps a standard normal vector `xi` to `L^{-T} xi`, whose covariance is `M^{-1}`.
    pub fn whiten_inverse(&self, xi: &DVector<f64>) -> DVector<f64> {
        self.chol
            .l_dirty()
            .tr_solve_lower_triangular(xi)
            .expect("cholesky factor has a nonzero diagonal")
    }

    pub fn cholesky(&self) -> &Cholesky<f64, Dyn> {
        &self.chol
    }

    pub fn cholesky_mut(&mut self) -> &mut Cholesky<f64, Dyn> {
        &mut self.chol
    }
}

/// `Σ_i w_i x_i x_iᵀ`.
pub fn weighted_gram(arms: &[DVector<f64>], weights: &[f64]) -> DMatrix<f64> {
    let d = arms.first().map_or(0, |a| a.len());
    let mut m = DMatrix::zeros(d, d);
    for (x, &w) in arms.iter().zip(weights) {
        if w != 0.0 {
            m.syger(w, x, x, 1.0);
        }
    }
    m.fill_upper_triangle_with_lower_triangle();
    m
}

/// Numerical rank of the matrix whose rows are `vectors`.
pub fn rank(vectors: &[DVector<f64>]) -> usize {
    span_basis(vectors).map_or(0, |b| b.ncols())
}

/// Orthonormal basis (as columns) of the span of `vectors`, or `None` for an
/// all-zero set. Singular values below `RANK_TOL * s_max` are dropped.
pub fn span_basis(vectors: &[DVector<f64>]) -> Option<DMatrix<f64>> {
    let d = vectors.first()?.len();
    let mut cols = DMatrix::zeros(d, vectors.len());
    for (j, v) in vectors.iter().enumerate() {
        cols.set_column(j, v);
    }
    let svd = cols.svd(true, false);
    let u = svd.u.as_ref()?;
    let s_max = svd.singular_values.iter().cloned().fold(0.0_f64, f64::max);
    if s_max == 0.0 {
        return None;
    }
    let keep: Vec<usize> = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, &s)| s > RANK_TOL * s_max)
        .map(|(i, _)| i)
        .collect();
    let mut basis = DMatrix::zeros(d, keep.len());
    for (j, &i) in keep.iter().enumerate() {
        basis.set_column(j, &u.column(i));
    }
    Some(basis)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn inv_quad_matches_explicit_inverse() {
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let f = SpdFactor::new(&m).unwrap();
        let v = DVector::from_vec(vec![1.0, -2.0]);
        let inv = m.clone().try_inverse().unwrap();
        assert_relative_eq!(f.inv_quad(&v), (v.transpose() * &inv * &v)[0], epsilon = 1e-12);
    }

    #[test]
    fn whitening_has_inverse_covariance() {
        let m = DMatrix::from_row_slice(2, 2, &[4.0, 1.0, 1.0, 3.0]);
        let f = SpdFactor::new(&m).unwrap();
        let e1 = f.whiten_inverse(&DVector::from_vec(vec![1.0, 0.0]));
        let e2 = f.whiten_inverse(&DVector::from_vec(vec![0.0, 1.0]));
        // Σ_i w_i w_iᵀ over the images of the standard basis is L^{-T} L^{-1} = M^{-1}.
        let cov = &e1 * e1.transpose() + &e2 * e2.transpose();
        let inv = m.try_inverse().unwrap();
        assert_relative_eq!(cov, inv, epsilon = 1e-12);
    }

    #[test]
    fn singular_matrix_gets_jitter() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        assert!(SpdFactor::new(&m).is_ok());
    }

    #[test]
    fn rank_of_collinear_set() {
        let v = vec![
            DVector::from_vec(vec![1.0, 2.0, 0.0]),
            DVector::from_vec(vec![2.0, 4.0, 0.0]),
        ];
        assert_eq!(rank(&v), 1);
        let w = vec![
            DVector::from_vec(vec![1.0, 0.0]),
            DVector::from_vec(vec![0.0, 1.0]),
        ];
        assert_eq!(rank(&w), 2);
    }
}
