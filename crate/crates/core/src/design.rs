//! G-optimal experimental design over the training arms.
//!
//! By the Kiefer–Wolfowitz equivalence theorem the G-optimal and D-optimal
//! designs coincide, and the optimal worst-case variance
//! `max_x ‖x‖²_{A(λ)⁻¹}` equals `d`. The solver is Frank–Wolfe on the simplex
//! applied to `log det A(λ)` with exact line search (Fedorov–Wynn steps), plus
//! away steps that shift mass off the support arm with the smallest variance.
//! It stops as soon as the Kiefer–Wolfowitz certificate
//! `max_x ‖x‖²_{A(λ)⁻¹} ≤ d (1 + tol)` holds.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::SolverError;
use crate::instance::ArmSet;
use crate::linalg::{self, SpdFactor};

pub const DEFAULT_DESIGN_TOL: f64 = 1e-3;
pub const DEFAULT_DESIGN_MAX_ITERS: usize = 100_000;
const PRUNE_BELOW: f64 = 1e-10;

/// A point of the probability simplex over a set of arms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SimplexWeights(Vec<f64>);

impl SimplexWeights {
    /// Validates nonnegativity and unit sum (within `1e-12`).
    pub fn new(weights: Vec<f64>) -> Result<Self, SolverError> {
        if weights.is_empty() {
            return Err(SolverError::InvalidInput("empty weight vector".into()));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(SolverError::InvalidInput("weights must be finite and nonnegative".into()));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(SolverError::InvalidInput(format!("weights sum to {sum}")));
        }
        Ok(Self(weights))
    }

    /// Rescales nonnegative weights onto the simplex.
    pub fn normalized(mut weights: Vec<f64>) -> Result<Self, SolverError> {
        let sum: f64 = weights.iter().sum();
        if !(sum > 0.0) || weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(SolverError::InvalidInput("cannot normalize weights".into()));
        }
        weights.iter_mut().for_each(|w| *w /= sum);
        Ok(Self(weights))
    }

    pub fn uniform(n: usize) -> Self {
        Self(vec![1.0 / n as f64; n])
    }

    pub fn one_hot(n: usize, i: usize) -> Self {
        let mut w = vec![0.0; n];
        w[i] = 1.0;
        Self(w)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

impl std::ops::Index<usize> for SimplexWeights {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// `A(λ) = Σ_x λ_x x xᵀ`.
pub fn info_matrix(arms: &ArmSet, weights: &SimplexWeights) -> DMatrix<f64> {
    assert_eq!(arms.len(), weights.len(), "one weight per arm");
    linalg::weighted_gram(arms.as_slice(), weights.as_slice())
}

/// Result of [`g_optimal`].
#[derive(Debug, Clone)]
pub struct GOptimalDesign {
    pub weights: SimplexWeights,
    /// `max_x ‖x‖²_{A(λ)⁻¹}` at the returned weights.
    pub max_variance: f64,
    pub iterations: usize,
}

/// Computes the G-optimal design `λ^G` of `arms`.
///
/// Fails with [`SolverError::DegenerateDesign`] when the arms do not span
/// `ℝ^d`, and with [`SolverError::DesignNotCertified`] if the certificate is
/// not reached within `max_iters` iterations.
pub fn g_optimal(arms: &ArmSet, tol: f64, max_iters: usize) -> Result<GOptimalDesign, SolverError> {
    solve(arms.as_slice(), tol, max_iters, None)
}

/// Like [`g_optimal`], but works inside the span of the arms when they do not
/// span the ambient space. Weights are still indexed by the original arms.
pub fn g_optimal_in_span(arms: &ArmSet, tol: f64, max_iters: usize) -> Result<GOptimalDesign, SolverError> {
    let d = arms.dim();
    let basis = linalg::span_basis(arms.as_slice())
        .ok_or(SolverError::DegenerateDesign { rank: 0, dim: d })?;
    if basis.ncols() == d {
        return g_optimal(arms, tol, max_iters);
    }
    let reduced: Vec<DVector<f64>> = arms.iter().map(|x| basis.transpose() * x).collect();
    solve(&reduced, tol, max_iters, None)
}

fn variances(arms: &[DVector<f64>], factor: &SpdFactor) -> Vec<f64> {
    arms.iter().map(|x| factor.inv_quad(x)).collect()
}

fn log_det(factor: &SpdFactor) -> f64 {
    factor.cholesky().l_dirty().diagonal().iter().map(|v| 2.0 * v.ln()).sum()
}

fn solve(
    arms: &[DVector<f64>],
    tol: f64,
    max_iters: usize,
    mut trace: Option<&mut Vec<f64>>,
) -> Result<GOptimalDesign, SolverError> {
    if !(tol > 0.0) {
        return Err(SolverError::InvalidInput(format!("tol must be positive, got {tol}")));
    }
    let n = arms.len();
    let d = arms.first().map_or(0, |a| a.len());
    let r = linalg::rank(arms);
    if r < d {
        return Err(SolverError::DegenerateDesign { rank: r, dim: d });
    }
    let df = d as f64;
    let target = df * (1.0 + tol);
    let mut w = vec![1.0 / n as f64; n];
    let mut iterations = 0;
    let mut max_var;

    loop {
        let factor = SpdFactor::new(&linalg::weighted_gram(arms, &w))?;
        if let Some(t) = trace.as_deref_mut() {
            t.push(-log_det(&factor));
        }
        let g = variances(arms, &factor);
        let (j_max, &g_max) = g
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .expect("nonempty arm set");
        max_var = g_max;
        if g_max <= target {
            // Prune negligible support and confirm the certificate survives.
            if w.iter().any(|&v| v > 0.0 && v < PRUNE_BELOW) {
                for v in w.iter_mut() {
                    if *v < PRUNE_BELOW {
                        *v = 0.0;
                    }
                }
                let s: f64 = w.iter().sum();
                w.iter_mut().for_each(|v| *v /= s);
                continue;
            }
            break;
        }
        if iterations >= max_iters {
            return Err(SolverError::DesignNotCertified {
                iterations,
                max_variance: g_max,
                target,
            });
        }
        iterations += 1;

        // Away candidate: support arm with the smallest variance.
        let away = g
            .iter()
            .enumerate()
            .filter(|(i, _)| w[*i] > 0.0)
            .min_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, &v)| (i, v));

        let (idx, step) = match away {
            Some((k, g_min)) if df - g_min > g_max - df && w[k] < 1.0 => {
                // λ' = (1 - t) λ + t e_k with t < 0; optimal t = (g - d) / (d (g - 1)).
                // For g <= 1 the objective decreases in t all the way to t_min.
                let t_min = -w[k] / (1.0 - w[k]);
                if g_min <= 1.0 {
                    (k, t_min)
                } else {
                    let t_opt = (g_min - df) / (df * (g_min - 1.0));
                    (k, t_opt.max(t_min))
                }
            }
            _ => {
                let t = (g_max - df) / (df * (g_max - 1.0));
                (j_max, t.clamp(0.0, 1.0))
            }
        };
        for (i, v) in w.iter_mut().enumerate() {
            *v *= 1.0 - step;
            if i == idx {
                *v += step;
            }
            if *v < 0.0 {
                *v = 0.0;
            }
        }
        let s: f64 = w.iter().sum();
        w.iter_mut().for_each(|v| *v /= s);
    }

    Ok(GOptimalDesign {
        weights: SimplexWeights(w),
        max_variance: max_var,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn arms(v: Vec<Vec<f64>>) -> ArmSet {
        ArmSet::new(v).unwrap()
    }

    fn eoo_arms(alpha: f64) -> ArmSet {
        arms(vec![
            vec![1.0, 0.0],
            vec![0.0, 0.15],
            vec![0.0, 1.0],
            vec![1.2, 1.2],
            vec![alpha.cos(), alpha.sin()],
        ])
    }

    fn max_variance(a: &ArmSet, w: &SimplexWeights) -> f64 {
        let inv = info_matrix(a, w).try_inverse().unwrap();
        a.iter()
            .map(|x| (x.transpose() * &inv * x)[0])
            .fold(0.0, f64::max)
    }

    #[test]
    fn info_matrix_basic_cases() {
        let a = arms(vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
        let m = info_matrix(&a, &SimplexWeights::uniform(2));
        assert_eq!(m, DMatrix::from_diagonal_element(2, 2, 0.5));
        let b = arms(vec![vec![1.0, 2.0], vec![0.0, 1.0]]);
        let m = info_matrix(&b, &SimplexWeights::one_hot(2, 0));
        assert_eq!(m, DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]));
    }

    #[test]
    fn info_matrix_matches_accumulation_loop() {
        let a = arms(vec![vec![0.3, -1.2, 0.5], vec![1.0, 0.1, 0.0], vec![-0.4, 0.2, 0.9]]);
        let w = SimplexWeights::new(vec![0.2, 0.5, 0.3]).unwrap();
        let m = info_matrix(&a, &w);
        for r in 0..3 {
            for c in 0..3 {
                let mut acc = 0.0;
                for k in 0..3 {
                    acc += w[k] * a[k][r] * a[k][c];
                }
                assert_relative_eq!(m[(r, c)], acc, epsilon = 1e-15);
            }
        }
        assert_eq!(m, m.transpose());
    }

    #[test]
    fn orthonormal_basis_gives_uniform_design() {
        let a = arms(vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
        let g = g_optimal(&a, 1e-3, 1000).unwrap();
        assert_relative_eq!(g.weights[0], 0.5, epsilon = 1e-12);
        assert_relative_eq!(g.max_variance, 2.0, epsilon = 1e-12);
    }

    #[test]
    fn eoo_design_is_certified() {
        let a = eoo_arms(0.1);
        let g = g_optimal(&a, 1e-3, DEFAULT_DESIGN_MAX_ITERS).unwrap();
        assert!(g.max_variance <= 2.0 * (1.0 + 1e-3));
        assert!(max_variance(&a, &g.weights) <= 2.0 * (1.0 + 1e-3) + 1e-9);
        let s: f64 = g.weights.as_slice().iter().sum();
        assert!((s - 1.0).abs() < 1e-12);
    }

    #[test]
    fn duplicated_arm_has_same_value() {
        let a = eoo_arms(0.2);
        let mut rows = a.to_rows();
        rows.push(rows[2].clone());
        let b = arms(rows);
        let ga = g_optimal(&a, 1e-6, DEFAULT_DESIGN_MAX_ITERS).unwrap();
        let gb = g_optimal(&b, 1e-6, DEFAULT_DESIGN_MAX_ITERS).unwrap();
        assert!((ga.max_variance - gb.max_variance).abs() < 2.0 * 2e-6);
    }

    #[test]
    fn rank_deficient_design_is_an_error() {
        let a = arms(vec![vec![1.0, 1.0], vec![2.0, 2.0]]);
        assert!(matches!(
            g_optimal(&a, 1e-3, 100),
            Err(SolverError::DegenerateDesign { rank: 1, dim: 2 })
        ));
        let g = g_optimal_in_span(&a, 1e-3, 1000).unwrap();
        assert!(g.max_variance <= 1.0 + 1e-3);
    }

    #[test]
    fn iteration_budget_exhaustion_is_an_error() {
        let a = eoo_arms(0.1);
        assert!(matches!(
            g_optimal(&a, 1e-9, 1),
            Err(SolverError::DesignNotCertified { .. })
        ));
    }

    #[test]
    fn simplex_weights_validation() {
        assert!(SimplexWeights::new(vec![0.5, 0.6]).is_err());
        assert!(SimplexWeights::new(vec![-0.1, 1.1]).is_err());
        assert!(SimplexWeights::new(vec![]).is_err());
        let w = SimplexWeights::normalized(vec![1.0, 3.0]).unwrap();
        assert_eq!(w.as_slice(), &[0.25, 0.75]);
    }

    proptest! {
        #[test]
        fn certificate_and_monotone_log_det(
            raw in proptest::collection::vec(proptest::collection::vec(-1.0f64..1.0, 3), 3..10)
        ) {
            let set = arms(raw);
            prop_assume!(linalg::rank(set.as_slice()) == 3);
            let mut trace = Vec::new();
            let res = solve(set.as_slice(), 1e-3, DEFAULT_DESIGN_MAX_ITERS, Some(&mut trace)).unwrap();
            prop_assert!(res.max_variance - 3.0 <= 3.0 * 1e-3);
            prop_assert!(max_variance(&set, &res.weights) <= 3.0 * (1.0 + 1e-3) + 1e-8);
            for pair in trace.windows(2) {
                prop_assert!(pair[1] <= pair[0] + 1e-9, "objective increased: {:?}", pair);
            }
            let s: f64 = res.weights.as_slice().iter().sum();
            prop_assert!((s - 1.0).abs() <= 1e-12);
            prop_assert!(res.weights.as_slice().iter().all(|&v| v >= 0.0));
        }
    }
}
