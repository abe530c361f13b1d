//! Online-learning primitives: the ridge posterior shared by every strategy,
//! the AdaHedge max-learner, and constrained posterior sampling for the
//! min-learner.

mod adahedge;
mod ridge;
mod sampler;

pub use adahedge::AdaHedge;
pub use ridge::RidgePosterior;
pub use sampler::{
    empirical_feasible_best, feasible_best_or_uniform, sample_constrained_posterior, ConstrainedSample,
    DEFAULT_MAX_REJECTS,
};
