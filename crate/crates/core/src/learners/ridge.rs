use nalgebra::{DMatrix, DVector};

use crate::env::RngStream;
use crate::linalg::SpdFactor;

/// Updates between from-scratch refactorizations of `V`.
const REFACTOR_EVERY: usize = 512;

/// Ridge-regression posterior over the reward and cost parameters, with
/// `V = I + Σ x xᵀ` and `S = Σ x y`.
///
/// The Cholesky factor of `V` is maintained by rank-one updates and rebuilt
/// from `V` periodically so that rounding drift cannot accumulate.
#[derive(Debug, Clone)]
pub struct RidgePosterior {
    v: DMatrix<f64>,
    s_r: DVector<f64>,
    s_c: DVector<f64>,
    theta_r: DVector<f64>,
    theta_c: DVector<f64>,
    factor: SpdFactor,
    count: usize,
}

impl RidgePosterior {
    pub fn new(d: usize) -> Self {
        let v = DMatrix::identity(d, d);
        let factor = SpdFactor::new(&v).expect("identity is positive definite");
        Self {
            v,
            s_r: DVector::zeros(d),
            s_c: DVector::zeros(d),
            theta_r: DVector::zeros(d),
            theta_c: DVector::zeros(d),
            factor,
            count: 0,
        }
    }

    pub fn dim(&self) -> usize {
        self.v.nrows()
    }

    /// Number of observations absorbed so far.
    pub fn count(&self) -> usize {
        self.count
    }

    pub fn v(&self) -> &DMatrix<f64> {
        &self.v
    }

    pub fn s_r(&self) -> &DVector<f64> {
        &self.s_r
    }

    pub fn s_c(&self) -> &DVector<f64> {
        &self.s_c
    }

    pub fn theta_hat_r(&self) -> &DVector<f64> {
        &self.theta_r
    }

    pub fn theta_hat_c(&self) -> &DVector<f64> {
        &self.theta_c
    }

    pub fn factor(&self) -> &SpdFactor {
        &self.factor
    }

    /// Absorbs one observation of arm `x` in place.
    pub fn update(&mut self, x: &DVector<f64>, y_r: f64, y_c: f64) {
        assert_eq!(x.len(), self.dim(), "arm dimension");
        self.v.ger(1.0, x, x, 1.0);
        self.s_r.axpy(y_r, x, 1.0);
        self.s_c.axpy(y_c, x, 1.0);
        self.count += 1;
        if self.count.is_multiple_of(REFACTOR_EVERY) {
            self.v.fill_upper_triangle_with_lower_triangle();
            self.factor = SpdFactor::new(&self.v).expect("V dominates the identity");
        } else {
            self.factor.cholesky_mut().rank_one_update(x, 1.0);
        }
        self.theta_r = self.factor.solve(&self.s_r);
        self.theta_c = self.factor.solve(&self.s_c);
    }

    /// The posterior after one more observation; `self` is left untouched.
    pub fn with_observation(&self, x: &DVector<f64>, y_r: f64, y_c: f64) -> Self {
        let mut next = self.clone();
        next.update(x, y_r, y_c);
        next
    }

    /// One draw from `N(θ̂r, var_r V⁻¹) ⊗ N(θ̂c, var_c V⁻¹)`.
    pub fn sample(&self, var_r: f64, var_c: f64, rng: &mut RngStream) -> (DVector<f64>, DVector<f64>) {
        let d = self.dim();
        let xi_r = rng.normal_vector(d);
        let xi_c = rng.normal_vector(d);
        let t1 = &self.theta_r + self.factor.whiten_inverse(&xi_r) * var_r.sqrt();
        let t2 = &self.theta_c + self.factor.whiten_inverse(&xi_c) * var_c.sqrt();
        (t1, t2)
    }

    /// `‖x‖²_{V⁻¹}`.
    pub fn variance(&self, x: &DVector<f64>) -> f64 {
        self.factor.inv_quad(x)
    }
}
