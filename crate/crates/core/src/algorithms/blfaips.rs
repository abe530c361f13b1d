use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::{drive, noise_variances, posterior_recommendation, CheckpointPolicy, Policy, RunResult};
use crate::design::{g_optimal_in_span, DEFAULT_DESIGN_MAX_ITERS, DEFAULT_DESIGN_TOL};
use crate::env::RngStream;
use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::learners::{empirical_feasible_best, sample_constrained_posterior, AdaHedge, RidgePosterior, DEFAULT_MAX_REJECTS};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BlfaipsParams {
    /// Exploration exponent: the G-optimal design gets mass `t^{-alpha}`.
    pub alpha: f64,
    /// Precision multiplier of the reward posterior; derived from the
    /// instance when `None`.
    pub eta_r: Option<f64>,
    /// Precision multiplier of the cost posterior; derived from the instance
    /// when `None`.
    pub eta_c: Option<f64>,
    pub max_rejects: usize,
    pub design_tol: f64,
}

impl Default for BlfaipsParams {
    fn default() -> Self {
        Self {
            alpha: 0.25,
            eta_r: None,
            eta_c: None,
            max_rejects: DEFAULT_MAX_REJECTS,
            design_tol: DEFAULT_DESIGN_TOL,
        }
    }
}

impl BlfaipsParams {
    /// `η_r = η/σ²`, `η_c = η/γ²` with
    /// `η = min(σ²/(8L²R1²), γ²/(8L²R2²))`, unless overridden.
    pub fn rates(&self, inst: &Instance) -> (f64, f64) {
        let (s2, g2) = noise_variances(inst);
        let l2 = inst.arm_bound().powi(2);
        let eta = (s2 / (8.0 * l2 * inst.r1().powi(2))).min(g2 / (8.0 * l2 * inst.r2().powi(2)));
        (self.eta_r.unwrap_or(eta / s2), self.eta_c.unwrap_or(eta / g2))
    }

    fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Config(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        for (name, v) in [("eta_r", self.eta_r), ("eta_c", self.eta_c)] {
            if let Some(v) = v {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(Error::Config(format!("{name} must be positive, got {v}")));
                }
            }
        }
        if !(self.design_tol > 0.0) {
            return Err(Error::Config("design_tol must be positive".into()));
        }
        Ok(())
    }
}

/// Posterior sampling for the min-learner, AdaHedge for the max-learner,
/// and a vanishing share of G-optimal exploration.
#[derive(Debug, Clone)]
pub struct Blfaips<'a> {
    inst: &'a Instance,
    params: BlfaipsParams,
    eta_r: f64,
    eta_c: f64,
    design: Vec<f64>,
    post: RidgePosterior,
    hedge: AdaHedge,
    /// Round at which all learned state is discarded, if any.
    restart_at: Option<usize>,
    loss: Vec<f64>,
}

impl<'a> Blfaips<'a> {
    pub fn new(inst: &'a Instance, params: BlfaipsParams) -> Result<Self> {
        params.validate()?;
        let design = g_optimal_in_span(inst.train(), params.design_tol, DEFAULT_DESIGN_MAX_ITERS)?;
        let (eta_r, eta_c) = params.rates(inst);
        Ok(Self {
            inst,
            eta_r,
            eta_c,
            design: design.weights.into_vec(),
            post: RidgePosterior::new(inst.dim()),
            hedge: AdaHedge::new(inst.train().len()),
            restart_at: None,
            params,
            loss: vec![0.0; inst.train().len()],
        })
    }

    /// Forget all observations and AdaHedge state at the start of round `t`.
    pub fn with_restart_at(mut self, t: Option<usize>) -> Self {
        self.restart_at = t;
        self
    }

    pub fn posterior(&self) -> &RidgePosterior {
        &self.post
    }

    pub fn hedge(&self) -> &AdaHedge {
        &self.hedge
    }

    pub fn rates(&self) -> (f64, f64) {
        (self.eta_r, self.eta_c)
    }
}

impl Policy for Blfaips<'_> {
    fn select(&mut self, t: usize, rng: &mut RngStream) -> Result<usize> {
        if self.restart_at == Some(t) {
            self.post = RidgePosterior::new(self.inst.dim());
            self.hedge = AdaHedge::new(self.inst.train().len());
        }
        let inst = self.inst;
        let explore = (t as f64).powf(-self.params.alpha);
        let z_hat = empirical_feasible_best(&self.post, inst.test(), inst.tau(), rng);
        let sample = sample_constrained_posterior(
            &self.post,
            z_hat,
            inst.test(),
            inst.tau(),
            self.eta_r,
            self.eta_c,
            rng,
            self.params.max_rejects,
        );
        let mix: Vec<f64> = self
            .hedge
            .weights()
            .iter()
            .zip(&self.design)
            .map(|(h, g)| (1.0 - explore) * h + explore * g)
            .collect();
        let x = rng.categorical(&mix);

        // Losses are computed against the pre-update estimates.
        let (s2, g2) = noise_variances(inst);
        let d1: DVector<f64> = &sample.theta1 - self.post.theta_hat_r();
        let d2: DVector<f64> = &sample.theta2 - self.post.theta_hat_c();
        for (l, arm) in self.loss.iter_mut().zip(inst.train().iter()) {
            *l = -(arm.dot(&d1).powi(2) / s2 + arm.dot(&d2).powi(2) / g2);
        }
        Ok(x)
    }

    fn observe(&mut self, _t: usize, x: usize, y_r: f64, y_c: f64) {
        self.hedge.update(&self.loss);
        self.post.update(&self.inst.train()[x], y_r, y_c);
    }

    fn recommend(&self, _t: usize, rng: &mut RngStream) -> usize {
        posterior_recommendation(self.inst, &self.post, rng)
    }
}

/// BLFAIPS with recommendations on the default checkpoint grid.
pub fn blfaips_run(inst: &Instance, budget: usize, params: &BlfaipsParams, rng: &mut RngStream) -> Result<RunResult> {
    blfaips_run_with(inst, budget, params, rng, &CheckpointPolicy::Grid.times(budget))
}

pub fn blfaips_run_with(
    inst: &Instance,
    budget: usize,
    params: &BlfaipsParams,
    rng: &mut RngStream,
    checkpoints: &[usize],
) -> Result<RunResult> {
    let mut policy = Blfaips::new(inst, params.clone())?;
    drive(inst, budget, &mut policy, rng, checkpoints)
}
