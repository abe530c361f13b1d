use super::{drive, Blfaips, BlfaipsParams, CheckpointPolicy, RunResult};
use crate::env::RngStream;
use crate::error::Result;
use crate::instance::Instance;

/// Stand-in for an algorithm that must guess its budget: BLFAIPS sampling
/// whose learned state is discarded halfway through when the guess
/// `t_guess` differs from the actual budget. With a correct guess it is
/// exactly BLFAIPS.
pub fn peps_proxy_run(
    inst: &Instance,
    t_guess: usize,
    actual_t: usize,
    params: &BlfaipsParams,
    rng: &mut RngStream,
) -> Result<RunResult> {
    peps_proxy_run_with(inst, t_guess, actual_t, params, rng, &CheckpointPolicy::Grid.times(actual_t))
}

pub fn peps_proxy_run_with(
    inst: &Instance,
    t_guess: usize,
    actual_t: usize,
    params: &BlfaipsParams,
    rng: &mut RngStream,
    checkpoints: &[usize],
) -> Result<RunResult> {
    // The first ⌈T/2⌉ rounds are spent before the restart.
    let restart = (actual_t != t_guess).then(|| actual_t.div_ceil(2) + 1);
    let mut policy = Blfaips::new(inst, params.clone())?.with_restart_at(restart);
    drive(inst, actual_t, &mut policy, rng, checkpoints)
}
