use super::{drive, noise_variances, CheckpointPolicy, Policy, RunResult};
use crate::env::RngStream;
use crate::error::Result;
use crate::instance::Instance;
use crate::learners::{empirical_feasible_best, feasible_best_or_uniform, RidgePosterior};

/// Linear Thompson sampling that ranks only arms the sampled cost deems
/// feasible.
///
/// With shared training and testing arms, the pulled arm is the
/// sampled-feasible arm with the highest sampled reward (uniform when none
/// is sampled-feasible). Otherwise the sampled best testing arm `z̃` is
/// chosen the same way and the training arm maximizing `|xᵀV⁻¹z̃|` is
/// pulled. The recommendation is the empirical feasible best.
#[derive(Debug, Clone)]
pub struct LinTsFeasible<'a> {
    inst: &'a Instance,
    post: RidgePosterior,
}

impl<'a> LinTsFeasible<'a> {
    pub fn new(inst: &'a Instance) -> Self {
        Self {
            inst,
            post: RidgePosterior::new(inst.dim()),
        }
    }
}

impl Policy for LinTsFeasible<'_> {
    fn select(&mut self, _t: usize, rng: &mut RngStream) -> Result<usize> {
        let inst = self.inst;
        let (var_r, var_c) = noise_variances(inst);
        let (t1, t2) = self.post.sample(var_r, var_c, rng);
        if inst.shared_arms() {
            return Ok(feasible_best_or_uniform(&t1, &t2, inst.train(), inst.tau(), rng));
        }
        let z = feasible_best_or_uniform(&t1, &t2, inst.test(), inst.tau(), rng);
        let v_inv_z = self.post.factor().solve(&inst.test()[z]);
        let mut best = (0, f64::NEG_INFINITY);
        for (i, x) in inst.train().iter().enumerate() {
            let score = x.dot(&v_inv_z).abs();
            if score > best.1 {
                best = (i, score);
            }
        }
        Ok(best.0)
    }

    fn observe(&mut self, _t: usize, x: usize, y_r: f64, y_c: f64) {
        self.post.update(&self.inst.train()[x], y_r, y_c);
    }

    fn recommend(&self, _t: usize, rng: &mut RngStream) -> usize {
        empirical_feasible_best(&self.post, self.inst.test(), self.inst.tau(), rng)
    }
}

pub fn lints_feasible_run(inst: &Instance, budget: usize, rng: &mut RngStream) -> Result<RunResult> {
    lints_feasible_run_with(inst, budget, rng, &CheckpointPolicy::Grid.times(budget))
}

pub fn lints_feasible_run_with(
    inst: &Instance,
    budget: usize,
    rng: &mut RngStream,
    checkpoints: &[usize],
) -> Result<RunResult> {
    drive(inst, budget, &mut LinTsFeasible::new(inst), rng, checkpoints)
}
