use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::game::{Game, StrategyProfile};

use super::noise::{sample_unit_sphere, NoiseModel};
use super::schedule::{LearningRates, StepSchedule};
use super::simulate::{
    simulate_deterministic_with, simulate_stochastic_with_rng, SimOptions,
};
use super::trajectory::TerminationStatus;

/// Which update rule an experiment runs.
#[derive(Debug, Clone, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DynamicsSpec {
    Deterministic {
        rates: LearningRates,
    },
    Stochastic {
        schedule: StepSchedule,
        noise: NoiseModel,
    },
}

/// Configuration of the saddle-avoidance Monte-Carlo experiment.
///
/// Trials draw initial points uniformly from the ball of `radius` around the
/// saddle; a trial counts as avoided when its final iterate lies outside the
/// ball of `escape_factor * radius` (divergence counts as avoided; the orbit
/// left every bounded ball).
#[derive(Debug, Clone, Serialize)]
pub struct AvoidanceConfig {
    pub radius: f64,
    pub trials: u64,
    pub max_iters: u64,
    pub seed: u64,
    pub escape_factor: f64,
    pub blowup: f64,
    /// Tolerance for the strict-saddle precondition check on the center.
    pub saddle_check_tol: f64,
}

impl AvoidanceConfig {
    pub fn new(radius: f64, trials: u64, max_iters: u64, seed: u64) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "ball radius must be positive, got {radius}"
            )));
        }
        if trials == 0 || max_iters == 0 {
            return Err(Error::InvalidParameter(
                "avoidance experiment needs trials >= 1 and max_iters >= 1".into(),
            ));
        }
        Ok(AvoidanceConfig {
            radius,
            trials,
            max_iters,
            seed,
            escape_factor: 10.0,
            blowup: 1e6,
            saddle_check_tol: 1e-8,
        })
    }
}

/// Iteration statistics over the trials that escaped.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EscapeIterationStats {
    pub count: u64,
    pub mean: f64,
    pub min: u64,
    pub max: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrialRecord {
    pub trial: u64,
    pub avoided: bool,
    pub iterations: u64,
    /// Distance of the final iterate from the saddle (NaN when diverged to
    /// a non-finite iterate).
    pub final_distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AvoidanceResult {
    pub avoidance_rate: f64,
    pub trials: u64,
    pub avoided: u64,
    pub escape_iterations: EscapeIterationStats,
    pub seed: u64,
    pub per_trial: Vec<TrialRecord>,
}

impl AvoidanceResult {
    /// Per-trial CSV rows, header `trial,avoided,iterations,final_distance`.
    pub fn write_trials_csv<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "trial,avoided,iterations,final_distance")?;
        for t in &self.per_trial {
            writeln!(
                w,
                "{},{},{},{}",
                t.trial, t.avoided, t.iterations, t.final_distance
            )?;
        }
        Ok(())
    }
}

fn uniform_in_ball(rng: &mut ChaCha8Rng, center: &[f64], radius: f64, out: &mut [f64]) {
    use rand::Rng;
    sample_unit_sphere(rng, out);
    let m = out.len() as f64;
    let r = radius * rng.random::<f64>().powf(1.0 / m);
    for (o, c) in out.iter_mut().zip(center) {
        *o = c + r * *o;
    }
}

/// Monte-Carlo test of strict-saddle avoidance: `trials` runs from uniform
/// starts in the `radius`-ball around `saddle`, counting final iterates that
/// left the `escape_factor * radius` ball. The center must classify as a
/// strict saddle, otherwise the experiment is refused.
///
/// Trials derive independent generators from `(seed, trial index)` and run
/// in parallel; the result does not depend on thread count.
pub fn saddle_avoidance_experiment(
    game: &Game,
    saddle: &StrategyProfile,
    dynamics: &DynamicsSpec,
    config: &AvoidanceConfig,
) -> Result<AvoidanceResult> {
    let report = crate::equilibria::classify(game, saddle, config.saddle_check_tol)?;
    if !report.flags.is_strict_saddle {
        return Err(Error::InvalidParameter(format!(
            "avoidance experiment needs a strict saddle; classification flags were {:?}",
            report.flags
        )));
    }
    if let DynamicsSpec::Stochastic { noise, .. } = dynamics {
        noise.validate()?;
    }

    let escape_radius = config.escape_factor * config.radius;
    let opts = SimOptions::new(config.max_iters, 0.0, config.blowup)?
        .with_escape(saddle.values().to_vec(), escape_radius);

    let per_trial: Vec<TrialRecord> = (0..config.trials)
        .into_par_iter()
        .map(|trial| -> Result<TrialRecord> {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(trial);
            let mut start = vec![0.0; game.dim()];
            uniform_in_ball(&mut rng, saddle.values(), config.radius, &mut start);
            let x0 = saddle.with_values(start)?;

            let traj = match dynamics {
                DynamicsSpec::Deterministic { rates } => {
                    simulate_deterministic_with(game, &x0, rates, &opts)?
                }
                DynamicsSpec::Stochastic { schedule, noise } => simulate_stochastic_with_rng(
                    game,
                    &x0,
                    schedule,
                    noise,
                    &opts,
                    rng,
                    config.seed,
                )?,
            };

            let final_distance = traj.final_point().distance(saddle);
            let avoided = match traj.status() {
                TerminationStatus::EscapedBall => true,
                TerminationStatus::Diverged { .. } => true,
                _ => final_distance.is_finite() && final_distance > escape_radius,
            };
            Ok(TrialRecord {
                trial,
                avoided,
                iterations: traj.iterations(),
                final_distance,
            })
        })
        .collect::<Result<_>>()?;

    let avoided = per_trial.iter().filter(|t| t.avoided).count() as u64;
    let escaped: Vec<u64> = per_trial
        .iter()
        .filter(|t| t.avoided)
        .map(|t| t.iterations)
        .collect();
    let escape_iterations = EscapeIterationStats {
        count: avoided,
        mean: if escaped.is_empty() {
            f64::NAN
        } else {
            escaped.iter().sum::<u64>() as f64 / escaped.len() as f64
        },
        min: escaped.iter().copied().min().unwrap_or(0),
        max: escaped.iter().copied().max().unwrap_or(0),
    };

    Ok(AvoidanceResult {
        avoidance_rate: avoided as f64 / config.trials as f64,
        trials: config.trials,
        avoided,
        escape_iterations,
        seed: config.seed,
        per_trial,
    })
}
