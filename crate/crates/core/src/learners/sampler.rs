use nalgebra::DVector;

use super::RidgePosterior;
use crate::env::RngStream;
use crate::hardness::{nearest_alternative, AltGeometry};
use crate::instance::{best_feasible_index, is_alternative, ArmSet};

/// Consecutive rejections tolerated before falling back to projection.
pub const DEFAULT_MAX_REJECTS: usize = 64;

/// Offset that places a projected point strictly inside the alternative set.
const BOUNDARY_MARGIN: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct ConstrainedSample {
    pub theta1: DVector<f64>,
    pub theta2: DVector<f64>,
    /// `true` if the draw was accepted by rejection, `false` if it was projected.
    pub accepted: bool,
    /// Gaussian draws consumed.
    pub draws: usize,
}

/// Draws `(θ1, θ2) ~ N(θ̂r, V⁻¹/η_r) ⊗ N(θ̂c, V⁻¹/η_c)` conditioned on
/// `excluded_best` not being the best feasible arm of `test`.
///
/// Rejection sampling is tried `max_rejects` times; after that the last
/// draw is projected onto the nearest face of the alternative set in the
/// metric of the same Gaussian, so the call always terminates.
#[allow(clippy::too_many_arguments)]
pub fn sample_constrained_posterior(
    post: &RidgePosterior,
    excluded_best: usize,
    test: &ArmSet,
    tau: f64,
    eta_r: f64,
    eta_c: f64,
    rng: &mut RngStream,
    max_rejects: usize,
) -> ConstrainedSample {
    let (var_r, var_c) = (1.0 / eta_r, 1.0 / eta_c);
    let mut draws = 0;
    let (mut t1, mut t2) = post.sample(var_r, var_c, rng);
    draws += 1;
    while !is_alternative(&t1, &t2, excluded_best, test, tau) {
        if draws > max_rejects {
            return project(post, excluded_best, test, tau, var_r, var_c, t1, t2, draws);
        }
        (t1, t2) = post.sample(var_r, var_c, rng);
        draws += 1;
    }
    ConstrainedSample {
        theta1: t1,
        theta2: t2,
        accepted: true,
        draws,
    }
}

#[allow(clippy::too_many_arguments)]
fn project(
    post: &RidgePosterior,
    excluded_best: usize,
    test: &ArmSet,
    tau: f64,
    var_r: f64,
    var_c: f64,
    t1: DVector<f64>,
    t2: DVector<f64>,
    draws: usize,
) -> ConstrainedSample {
    let mut margin = BOUNDARY_MARGIN;
    for _ in 0..5 {
        let geom = AltGeometry {
            arms: test.as_slice(),
            tau,
            best: excluded_best,
            var_r,
            var_c,
            margin,
        };
        if let Some(p) = nearest_alternative(&t1, &t2, post.factor(), &geom) {
            if is_alternative(&p.theta1, &p.theta2, excluded_best, test, tau) {
                return ConstrainedSample {
                    theta1: p.theta1,
                    theta2: p.theta2,
                    accepted: false,
                    draws,
                };
            }
        }
        margin *= 10.0;
    }
    log::warn!("alternative set is empty or numerically unreachable; returning the unconditioned draw");
    ConstrainedSample {
        theta1: t1,
        theta2: t2,
        accepted: false,
        draws,
    }
}

/// Best arm of `arms` among those with `⟨theta_c, z⟩ ≤ tau` (lowest index
/// on ties), or a uniformly random arm when none qualifies.
pub fn feasible_best_or_uniform(
    theta_r: &DVector<f64>,
    theta_c: &DVector<f64>,
    arms: &ArmSet,
    tau: f64,
    rng: &mut RngStream,
) -> usize {
    best_feasible_index(theta_r, theta_c, arms, tau).unwrap_or_else(|| rng.index(arms.len()))
}

/// The empirically best feasible arm under the ridge estimates.
pub fn empirical_feasible_best(post: &RidgePosterior, test: &ArmSet, tau: f64, rng: &mut RngStream) -> usize {
    feasible_best_or_uniform(post.theta_hat_r(), post.theta_hat_c(), test, tau, rng)
}
