use super::{drive, Policy, RunResult};
use crate::env::RngStream;
use crate::error::Result;
use crate::instance::Instance;
use crate::learners::{empirical_feasible_best, RidgePosterior};

/// Non-adaptive baseline: pulls training arms uniformly at random and
/// recommends the empirical feasible best.
#[derive(Debug, Clone)]
pub struct UniformDesign<'a> {
    inst: &'a Instance,
    post: RidgePosterior,
}

impl<'a> UniformDesign<'a> {
    pub fn new(inst: &'a Instance) -> Self {
        Self {
            inst,
            post: RidgePosterior::new(inst.dim()),
        }
    }
}

impl Policy for UniformDesign<'_> {
    fn select(&mut self, _t: usize, rng: &mut RngStream) -> Result<usize> {
        Ok(rng.index(self.inst.train().len()))
    }

    fn observe(&mut self, _t: usize, x: usize, y_r: f64, y_c: f64) {
        self.post.update(&self.inst.train()[x], y_r, y_c);
    }

    fn recommend(&self, _t: usize, rng: &mut RngStream) -> usize {
        empirical_feasible_best(&self.post, self.inst.test(), self.inst.tau(), rng)
    }
}

pub fn uniform_run_with(inst: &Instance, budget: usize, rng: &mut RngStream, checkpoints: &[usize]) -> Result<RunResult> {
    drive(inst, budget, &mut UniformDesign::new(inst), rng, checkpoints)
}
