use super::{drive, posterior_recommendation, CheckpointPolicy, Policy, RunResult};
use crate::design::SimplexWeights;
use crate::env::RngStream;
use crate::error::{Error, Result};
use crate::hardness::{gamma_closed_form, HardnessOptions};
use crate::instance::Instance;
use crate::learners::RidgePosterior;

/// Integer counts summing to `budget` that differ from `weights * budget`
/// by less than one each (largest-remainder rounding; lowest index first
/// among equal remainders).
pub fn largest_remainder_counts(weights: &[f64], budget: usize) -> Vec<usize> {
    let total: f64 = weights.iter().sum();
    let exact: Vec<f64> = weights.iter().map(|w| w / total * budget as f64).collect();
    let mut counts: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = exact[a] - exact[a].floor();
        let rb = exact[b] - exact[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &i in order.iter().take(budget.saturating_sub(assigned)) {
        counts[i] += 1;
    }
    counts
}

/// The optimal allocation `w*` used by the oracle. The allocation only
/// depends on the ratio of the noise levels, so an exactly noiseless
/// instance is solved at unit noise.
pub fn oracle_weights(inst: &Instance, opts: &HardnessOptions) -> Result<SimplexWeights> {
    let inst = if inst.sigma() == 0.0 && inst.gamma() == 0.0 {
        inst.with_noise(1.0, 1.0)?
    } else {
        inst.clone()
    };
    Ok(gamma_closed_form(&inst, opts)?.w_star)
}

/// Pulls the optimal allocation deterministically: counts from
/// largest-remainder rounding of `w* T`, served round-robin in index order
/// over the arms whose count is not yet exhausted. The recommendation uses
/// the posterior rule shared with BLFAIPS.
#[derive(Debug, Clone)]
pub struct OracleAllocation<'a> {
    inst: &'a Instance,
    cursor: usize,
    quota: Vec<usize>,
    pulled: Vec<usize>,
    post: RidgePosterior,
}

impl<'a> OracleAllocation<'a> {
    pub fn new(inst: &'a Instance, weights: &SimplexWeights, budget: usize) -> Result<Self> {
        if weights.len() != inst.train().len() {
            return Err(Error::Config(format!(
                "{} oracle weights for {} training arms",
                weights.len(),
                inst.train().len()
            )));
        }
        Ok(Self {
            inst,
            cursor: 0,
            quota: largest_remainder_counts(weights.as_slice(), budget),
            pulled: vec![0; weights.len()],
            post: RidgePosterior::new(inst.dim()),
        })
    }
}

impl Policy for OracleAllocation<'_> {
    fn select(&mut self, _t: usize, _rng: &mut RngStream) -> Result<usize> {
        let k = self.quota.len();
        let x = (0..k)
            .map(|offset| (self.cursor + offset) % k)
            .find(|&i| self.pulled[i] < self.quota[i])
            .ok_or_else(|| Error::Config("oracle budget exhausted".into()))?;
        self.cursor = (x + 1) % k;
        Ok(x)
    }

    fn observe(&mut self, _t: usize, x: usize, y_r: f64, y_c: f64) {
        self.pulled[x] += 1;
        self.post.update(&self.inst.train()[x], y_r, y_c);
    }

    fn recommend(&self, _t: usize, rng: &mut RngStream) -> usize {
        posterior_recommendation(self.inst, &self.post, rng)
    }
}

pub fn oracle_run(inst: &Instance, budget: usize, weights: &SimplexWeights, rng: &mut RngStream) -> Result<RunResult> {
    oracle_run_with(inst, budget, weights, rng, &CheckpointPolicy::Grid.times(budget))
}

pub fn oracle_run_with(
    inst: &Instance,
    budget: usize,
    weights: &SimplexWeights,
    rng: &mut RngStream,
    checkpoints: &[usize],
) -> Result<RunResult> {
    drive(inst, budget, &mut OracleAllocation::new(inst, weights, budget)?, rng, checkpoints)
}
