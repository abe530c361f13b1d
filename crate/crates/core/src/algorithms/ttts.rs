use nalgebra::DVector;

use super::{drive, noise_variances, CheckpointPolicy, Policy, RunResult};
use crate::env::RngStream;
use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::learners::{empirical_feasible_best, feasible_best_or_uniform, RidgePosterior};

/// Fresh posterior draws tried while looking for a challenger.
const MAX_CHALLENGER_DRAWS: usize = 128;

/// Top-two Thompson sampling with feasibility-aware leaders.
///
/// The leader is the feasible best arm under a posterior draw. With
/// probability `beta` the pull targets the leader's value `z_leadᵀθ`;
/// otherwise fresh draws are taken until a different feasible best arm (the
/// challenger) appears and the pull targets the gap `(z_lead - z_chal)ᵀθ`.
/// The training arm pulled is the one whose observation most reduces the
/// posterior variance of the target, `(uᵀV⁻¹x)² / (1 + xᵀV⁻¹x)`. If no
/// challenger appears, a uniformly random arm is pulled.
#[derive(Debug, Clone)]
pub struct TopTwo<'a> {
    inst: &'a Instance,
    beta: f64,
    post: RidgePosterior,
}

impl<'a> TopTwo<'a> {
    pub fn new(inst: &'a Instance, beta: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&beta) {
            return Err(Error::Config(format!("beta must lie in [0, 1], got {beta}")));
        }
        Ok(Self {
            inst,
            beta,
            post: RidgePosterior::new(inst.dim()),
        })
    }

    fn draw_best(&self, rng: &mut RngStream) -> usize {
        let (var_r, var_c) = noise_variances(self.inst);
        let (t1, t2) = self.post.sample(var_r, var_c, rng);
        feasible_best_or_uniform(&t1, &t2, self.inst.test(), self.inst.tau(), rng)
    }

    fn most_informative(&self, direction: &DVector<f64>) -> usize {
        let v_inv_u = self.post.factor().solve(direction);
        let mut best = (0, f64::NEG_INFINITY);
        for (i, x) in self.inst.train().iter().enumerate() {
            let gain = x.dot(&v_inv_u).powi(2) / (1.0 + self.post.variance(x));
            if gain > best.1 {
                best = (i, gain);
            }
        }
        best.0
    }
}

impl Policy for TopTwo<'_> {
    fn select(&mut self, _t: usize, rng: &mut RngStream) -> Result<usize> {
        let leader = self.draw_best(rng);
        let z_lead = &self.inst.test()[leader];
        if rng.bernoulli(self.beta) {
            return Ok(self.most_informative(z_lead));
        }
        for _ in 0..MAX_CHALLENGER_DRAWS {
            let challenger = self.draw_best(rng);
            if challenger != leader {
                let direction = z_lead - &self.inst.test()[challenger];
                return Ok(self.most_informative(&direction));
            }
        }
        Ok(rng.index(self.inst.train().len()))
    }

    fn observe(&mut self, _t: usize, x: usize, y_r: f64, y_c: f64) {
        self.post.update(&self.inst.train()[x], y_r, y_c);
    }

    fn recommend(&self, _t: usize, rng: &mut RngStream) -> usize {
        empirical_feasible_best(&self.post, self.inst.test(), self.inst.tau(), rng)
    }
}

pub fn ttts_beta_run(inst: &Instance, budget: usize, beta: f64, rng: &mut RngStream) -> Result<RunResult> {
    ttts_beta_run_with(inst, budget, beta, rng, &CheckpointPolicy::Grid.times(budget))
}

pub fn ttts_beta_run_with(
    inst: &Instance,
    budget: usize,
    beta: f64,
    rng: &mut RngStream,
    checkpoints: &[usize],
) -> Result<RunResult> {
    drive(inst, budget, &mut TopTwo::new(inst, beta)?, rng, checkpoints)
}
