//! Gradient-play dynamics: deterministic and stochastic simulation,
//! saddle-avoidance experiments, and limit-cycle detection.
//!
//! Deterministic gradient-play iterates `x - gamma (.) omega(x)` with
//! per-player rates; the stochastic update shares one step-size schedule
//! across players and perturbs the gradient with per-player noise blocks
//! (or replaces it with the one-point bandit estimator). Both simulators
//! are bit-reproducible given a seed, and every experiment derives
//! per-trial generators so that parallel execution cannot change results.

mod avoidance;
mod cycle;
mod noise;
mod schedule;
mod simulate;
mod trajectory;

pub use avoidance::{
    saddle_avoidance_experiment, AvoidanceConfig, AvoidanceResult, DynamicsSpec,
    EscapeIterationStats, TrialRecord,
};
pub use cycle::{
    detect_limit_cycle, detect_limit_cycle_with, integrate_flow, rk4_flow_step, CycleClass,
    CycleDetectOptions, CycleReport, IntegrationConfig,
};
pub use noise::{mean_abs_coordinate, sample_unit_sphere, NoiseModel};
pub use schedule::{LearningRates, StepSchedule};
pub use simulate::{
    one_point_gradient_estimate, simulate_deterministic, simulate_deterministic_with,
    simulate_stochastic, simulate_stochastic_with, step_deterministic, EscapeBall, SimOptions,
};
pub use trajectory::{TerminationStatus, Trajectory};
