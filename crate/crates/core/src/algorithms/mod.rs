//! Fixed-budget identification strategies.
//!
//! Every strategy is a [`Policy`] driven by [`drive`]: the policy chooses a
//! training arm, the environment answers with noisy reward and cost, and at
//! each checkpoint the policy names a testing arm. Three independent random
//! streams are used per run — the policy's own, a `"noise"` fork for the
//! environment, and a `"recommend/{t}"` fork per checkpoint — so adding or
//! removing checkpoints never changes the sampling trajectory.

mod blfaips;
mod lints;
mod oracle;
mod peps;
mod ttts;
mod uniform;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::env::{pull, RngStream};
use crate::error::Result;
use crate::instance::Instance;
use crate::learners::{feasible_best_or_uniform, RidgePosterior};

pub use blfaips::{blfaips_run, blfaips_run_with, Blfaips, BlfaipsParams};
pub use lints::{lints_feasible_run, lints_feasible_run_with, LinTsFeasible};
pub use oracle::{largest_remainder_counts, oracle_run, oracle_run_with, oracle_weights, OracleAllocation};
pub use peps::{peps_proxy_run, peps_proxy_run_with};
pub use ttts::{ttts_beta_run, ttts_beta_run_with, TopTwo};
pub use uniform::{uniform_run_with, UniformDesign};

/// Variance used in place of an exactly zero noise level, so that the
/// noiseless limit stays well defined.
pub(crate) const NOISE_FLOOR: f64 = 1e-12;

/// Rejections tolerated when conditioning a recommendation draw on the
/// parameter norm bounds, before clamping radially.
const BOUND_REJECTS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub t: usize,
    pub recommended: usize,
    /// `None` when the instance has no trusted ground truth.
    pub correct: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunResult {
    pub recommended: usize,
    pub correct: Option<bool>,
    pub pull_counts: Vec<usize>,
    pub checkpoints: Vec<Checkpoint>,
}

impl RunResult {
    pub fn budget(&self) -> usize {
        self.pull_counts.iter().sum()
    }
}

/// When recommendations are recorded during a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckpointPolicy {
    /// Rounded powers of `√2`, plus the final round.
    #[default]
    Grid,
    /// The final round only.
    Final,
}

impl CheckpointPolicy {
    pub fn times(self, budget: usize) -> Vec<usize> {
        match self {
            CheckpointPolicy::Grid => checkpoint_grid(budget),
            CheckpointPolicy::Final => vec![budget],
        }
    }
}

/// `round(√2^k)` for `k = 0, 1, …` up to `budget`, deduplicated, with
/// `budget` itself appended.
pub fn checkpoint_grid(budget: usize) -> Vec<usize> {
    let mut out: Vec<usize> = Vec::new();
    let mut k = 0;
    loop {
        let t = 2f64.sqrt().powi(k).round() as usize;
        if t >= budget {
            break;
        }
        if out.last() != Some(&t) {
            out.push(t);
        }
        k += 1;
    }
    out.push(budget);
    out
}

/// A sequential sampling strategy.
pub trait Policy {
    /// Training arm to pull in round `t` (1-based).
    fn select(&mut self, t: usize, rng: &mut RngStream) -> Result<usize>;

    /// Feedback from the pull chosen in the same round.
    fn observe(&mut self, t: usize, x: usize, y_r: f64, y_c: f64);

    /// Testing arm recommended after `t` rounds.
    fn recommend(&self, t: usize, rng: &mut RngStream) -> usize;
}

/// Runs `policy` for `budget` rounds on `inst`, recording a recommendation at
/// every time in `checkpoints` (which must be increasing and end at `budget`).
pub fn drive<P: Policy>(
    inst: &Instance,
    budget: usize,
    policy: &mut P,
    rng: &mut RngStream,
    checkpoints: &[usize],
) -> Result<RunResult> {
    if budget == 0 {
        return Err(crate::Error::Config("budget must be at least 1".into()));
    }
    debug_assert!(checkpoints.windows(2).all(|w| w[0] < w[1]));
    debug_assert_eq!(checkpoints.last(), Some(&budget));
    let mut noise = rng.fork("noise");
    let mut pull_counts = vec![0; inst.train().len()];
    let mut records = Vec::with_capacity(checkpoints.len());
    let mut next = checkpoints.iter().peekable();
    for t in 1..=budget {
        let x = policy.select(t, rng)?;
        let (y_r, y_c) = pull(inst, x, &mut noise);
        pull_counts[x] += 1;
        policy.observe(t, x, y_r, y_c);
        if next.peek() == Some(&&t) {
            next.next();
            let mut rec_rng = rng.fork(&format!("recommend/{t}"));
            let recommended = policy.recommend(t, &mut rec_rng);
            records.push(Checkpoint {
                t,
                recommended,
                correct: inst.truth_known().then(|| recommended == inst.best()),
            });
        }
    }
    let last = *records.last().expect("the final round is always a checkpoint");
    Ok(RunResult {
        recommended: last.recommended,
        correct: last.correct,
        pull_counts,
        checkpoints: records,
    })
}

pub(crate) fn noise_variances(inst: &Instance) -> (f64, f64) {
    (inst.sigma().powi(2).max(NOISE_FLOOR), inst.gamma().powi(2).max(NOISE_FLOOR))
}

fn clamp_norm(v: DVector<f64>, bound: f64) -> DVector<f64> {
    let n = v.norm();
    if n > bound {
        v * (bound / n)
    } else {
        v
    }
}

/// Final recommendation rule of the posterior-sampling strategies: draw
/// `(θ1, θ2) ~ N(θ̂r, σ²V⁻¹) ⊗ N(θ̂c, γ²V⁻¹)` restricted to the parameter
/// norm bounds, keep the arms the draw deems feasible, and return the one
/// with the highest drawn reward (uniform when none is feasible).
pub fn posterior_recommendation(inst: &Instance, post: &RidgePosterior, rng: &mut RngStream) -> usize {
    let (var_r, var_c) = noise_variances(inst);
    let mut draw = post.sample(var_r, var_c, rng);
    for _ in 0..BOUND_REJECTS {
        if draw.0.norm() <= inst.r1() && draw.1.norm() <= inst.r2() {
            break;
        }
        draw = post.sample(var_r, var_c, rng);
    }
    let t1 = clamp_norm(draw.0, inst.r1());
    let t2 = clamp_norm(draw.1, inst.r2());
    feasible_best_or_uniform(&t1, &t2, inst.test(), inst.tau(), rng)
}
