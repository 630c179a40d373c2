//! Two-player discrete-time linear-quadratic dynamic games.
//!
//! Players pick stationary linear feedback gains for a shared linear system
//! and pay quadratic state/input costs, which makes gradient-play on the
//! gains a policy-gradient method with an exactly computable gradient. The
//! global Nash gains come from Lyapunov iterations on the coupled Riccati
//! equations; the census machinery then asks, over randomly sampled
//! dynamics, how often those Nash gains sit at a strict saddle of the
//! gradient field, i.e. how often policy gradient must avoid the game's own
//! solution.

mod census;
mod game;
mod gradient;
mod riccati;
mod solver;

pub use census::{
    census_sweep, sample_census, sample_census_with, write_records_jsonl, write_sweep_csv,
    CensusConfig, CensusCounts, CensusOutcome, CensusResult, GameRecord, SweepParameter,
    SweepPoint,
};
pub use game::{FeedbackPolicy, LqGame, LqNashSolution};
pub use gradient::{
    closed_loop_value, expected_cost, gradient_norm, lq_game_jacobian, lq_policy_gradient,
    stacked_gradient,
};
pub use riccati::{
    eigenvalues2, is_detectable, is_stabilizable, solve_closed_loop_value,
    solve_dare_best_response, spectral_radius2, sqrt_psd2, state_covariance,
};
pub use solver::lyapunov_iterations;
