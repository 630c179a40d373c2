use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::game::{Game, StrategyProfile};

use super::noise::{sample_unit_sphere, NoiseModel};
use super::schedule::{LearningRates, StepSchedule};
use super::trajectory::{TerminationStatus, Trajectory};

/// Stop-and-store policy shared by both simulators.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimOptions {
    pub max_iters: u64,
    /// Convergence tolerance on `||omega||`; 0 disables the check.
    pub conv_tol: f64,
    /// Divergence threshold on `||x||`.
    pub blowup: f64,
    /// Stop as soon as the iterate leaves this ball.
    pub escape: Option<EscapeBall>,
    /// Store every `store_stride`-th point (0 picks a stride that keeps
    /// roughly a thousand points). Initial and final points are always kept.
    pub store_stride: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EscapeBall {
    pub center: Vec<f64>,
    pub radius: f64,
}

impl SimOptions {
    pub fn new(max_iters: u64, conv_tol: f64, blowup: f64) -> Result<Self> {
        if max_iters == 0 {
            return Err(Error::InvalidParameter("max_iters must be at least 1".into()));
        }
        if conv_tol < 0.0 || !(blowup > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "need conv_tol >= 0 and blowup > 0, got {conv_tol} and {blowup}"
            )));
        }
        Ok(SimOptions {
            max_iters,
            conv_tol,
            blowup,
            escape: None,
            store_stride: 0,
        })
    }

    pub fn with_escape(mut self, center: Vec<f64>, radius: f64) -> Self {
        self.escape = Some(EscapeBall { center, radius });
        self
    }

    fn stride(&self) -> u64 {
        if self.store_stride > 0 {
            self.store_stride
        } else {
            (self.max_iters / 1024).max(1)
        }
    }
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// One deterministic gradient-play step `x - gamma (.) omega(x)`, player
/// `i`'s rate applied to player `i`'s block. A critical point is exactly a
/// fixed point of this map.
pub fn step_deterministic(
    game: &Game,
    x: &StrategyProfile,
    rates: &LearningRates,
) -> Result<StrategyProfile> {
    if rates.num_players() != game.num_players() {
        return Err(Error::DimensionMismatch(format!(
            "{} learning rates for {} players",
            rates.num_players(),
            game.num_players()
        )));
    }
    let w = game.omega(x)?;
    let mut values = x.values().to_vec();
    for (i, &di) in game.dims().iter().enumerate() {
        let start: usize = game.dims()[..i].iter().sum();
        let gamma = rates.rate(i);
        for k in start..start + di {
            values[k] -= gamma * w.values()[k];
        }
    }
    x.with_values(values)
}

/// Per-step update: given the iteration index (1-based) and current point,
/// produce the next point.
trait StepRule {
    fn apply(&mut self, game: &Game, t: u64, x: &StrategyProfile) -> Result<StrategyProfile>;
}

struct DeterministicRule<'a> {
    rates: &'a LearningRates,
}

impl StepRule for DeterministicRule<'_> {
    fn apply(&mut self, game: &Game, _t: u64, x: &StrategyProfile) -> Result<StrategyProfile> {
        step_deterministic(game, x, self.rates)
    }
}

struct StochasticRule<'a> {
    schedule: &'a StepSchedule,
    noise: &'a NoiseModel,
    rng: ChaCha8Rng,
}

impl StepRule for StochasticRule<'_> {
    fn apply(&mut self, game: &Game, t: u64, x: &StrategyProfile) -> Result<StrategyProfile> {
        let gamma = self.schedule.value(t);
        let mut values = x.values().to_vec();
        match *self.noise {
            NoiseModel::OnePointBandit { delta } => {
                // The bandit estimator replaces the oracle gradient entirely.
                for i in 0..game.num_players() {
                    let est = one_point_gradient_estimate_with_rng(game, i, x, delta, &mut self.rng)?;
                    let range = x.block_range(i);
                    for (v, e) in values[range].iter_mut().zip(est) {
                        *v -= gamma * e;
                    }
                }
            }
            _ => {
                let w = game.omega(x)?;
                let mut block = Vec::new();
                for i in 0..game.num_players() {
                    let range = x.block_range(i);
                    block.resize(range.len(), 0.0);
                    self.noise.sample_block(&mut self.rng, &mut block);
                    for (k, b) in range.zip(&block) {
                        values[k] -= gamma * (w.values()[k] + b);
                    }
                }
            }
        }
        x.with_values(values)
    }
}

fn run<R: StepRule>(
    game: &Game,
    x0: &StrategyProfile,
    opts: &SimOptions,
    seed: Option<u64>,
    mut rule: R,
) -> Result<Trajectory> {
    if x0.dims() != game.dims() {
        return Err(Error::DimensionMismatch(format!(
            "initial profile dims {:?} against game dims {:?}",
            x0.dims(),
            game.dims()
        )));
    }
    let stride = opts.stride();
    let mut points = vec![(0u64, x0.clone())];
    let mut x = x0.clone();
    let mut t = 0u64;

    let status = loop {
        // Termination checks on the current iterate, divergence first so a
        // NaN or blown-up point is never mistaken for anything else.
        let norm = x.norm();
        if !x.is_finite() || norm > opts.blowup {
            break TerminationStatus::Diverged { norm };
        }
        if opts.conv_tol > 0.0 && game.omega(&x)?.norm() <= opts.conv_tol {
            break TerminationStatus::ConvergedTo { point: x.clone() };
        }
        if let Some(ball) = &opts.escape {
            if distance(x.values(), &ball.center) > ball.radius {
                break TerminationStatus::EscapedBall;
            }
        }
        if t == opts.max_iters {
            break TerminationStatus::MaxIters;
        }

        t += 1;
        x = rule.apply(game, t, &x)?;
        if t % stride == 0 && t != opts.max_iters {
            points.push((t, x.clone()));
        }
    };

    if points.last().expect("x0 stored").0 != t {
        points.push((t, x));
    }
    Ok(Trajectory::new(points, status, t, seed))
}

/// Iterate deterministic gradient-play from `x0` until convergence
/// (`||omega|| <= conv_tol`), divergence (`||x|| > blowup` or non-finite), or
/// `max_iters`.
pub fn simulate_deterministic(
    game: &Game,
    x0: &StrategyProfile,
    rates: &LearningRates,
    max_iters: u64,
    conv_tol: f64,
    blowup: f64,
) -> Result<Trajectory> {
    simulate_deterministic_with(game, x0, rates, &SimOptions::new(max_iters, conv_tol, blowup)?)
}

pub fn simulate_deterministic_with(
    game: &Game,
    x0: &StrategyProfile,
    rates: &LearningRates,
    opts: &SimOptions,
) -> Result<Trajectory> {
    run(game, x0, opts, None, DeterministicRule { rates })
}

/// Stochastic gradient-play `x_{t+1} = x_t - gamma_t (omega(x_t) + w_{t+1})`
/// with one shared step-size schedule and per-player noise blocks drawn from
/// a generator seeded by `seed`: identical seeds give bit-identical
/// trajectories. Runs for `max_iters` steps (no convergence stop).
pub fn simulate_stochastic(
    game: &Game,
    x0: &StrategyProfile,
    schedule: &StepSchedule,
    noise: &NoiseModel,
    max_iters: u64,
    seed: u64,
) -> Result<Trajectory> {
    let opts = SimOptions::new(max_iters, 0.0, 1e6)?;
    simulate_stochastic_with(game, x0, schedule, noise, &opts, seed)
}

pub fn simulate_stochastic_with(
    game: &Game,
    x0: &StrategyProfile,
    schedule: &StepSchedule,
    noise: &NoiseModel,
    opts: &SimOptions,
    seed: u64,
) -> Result<Trajectory> {
    noise.validate()?;
    let rule = StochasticRule {
        schedule,
        noise,
        rng: ChaCha8Rng::seed_from_u64(seed),
    };
    run(game, x0, opts, Some(seed), rule)
}

pub(crate) fn simulate_stochastic_with_rng(
    game: &Game,
    x0: &StrategyProfile,
    schedule: &StepSchedule,
    noise: &NoiseModel,
    opts: &SimOptions,
    rng: ChaCha8Rng,
    seed: u64,
) -> Result<Trajectory> {
    noise.validate()?;
    let rule = StochasticRule { schedule, noise, rng };
    run(game, x0, opts, Some(seed), rule)
}

/// Single-query estimator of player `player`'s gradient: draw `u` uniform on
/// the unit sphere of the player's block and return
/// `(m_i / delta) * f_i(x_i + delta u, x_{-i}) * u`, an unbiased estimate of
/// the gradient of the `delta`-smoothed cost.
pub fn one_point_gradient_estimate(
    game: &Game,
    player: usize,
    x: &StrategyProfile,
    delta: f64,
    seed: u64,
) -> Result<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    one_point_gradient_estimate_with_rng(game, player, x, delta, &mut rng)
}

pub(crate) fn one_point_gradient_estimate_with_rng(
    game: &Game,
    player: usize,
    x: &StrategyProfile,
    delta: f64,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<f64>> {
    if !(delta > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "smoothing radius must be positive, got {delta}"
        )));
    }
    if player >= game.num_players() {
        return Err(Error::InvalidParameter(format!(
            "player index {player} out of range"
        )));
    }
    let range = x.block_range(player);
    let mi = range.len();
    let mut u = vec![0.0; mi];
    sample_unit_sphere(rng, &mut u);

    let mut values = x.values().to_vec();
    for (k, uk) in range.zip(&u) {
        values[k] += delta * uk;
    }
    let perturbed = x.with_values(values)?;
    let cost = game.eval_cost(player, &perturbed)?;
    let scale = mi as f64 / delta * cost;
    Ok(u.into_iter().map(|uk| scale * uk).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{
        make_morse_smale_chain, make_quadratic_general_sum, make_quadratic_potential,
        make_quadratic_zero_sum,
    };

    #[test]
    fn step_moves_along_the_field() {
        let g = make_quadratic_potential(1.0, 0.0, 1.0);
        let rates = LearningRates::uniform(0.5, 2).unwrap();
        let x = g.profile(vec![1.0, 1.0]).unwrap();
        let next = step_deterministic(&g, &x, &rates).unwrap();
        assert_eq!(next.values(), &[0.5, 0.5]);

        let gs = make_quadratic_general_sum(1.0, 1.0, -1.0, -0.5);
        let rates = LearningRates::new(vec![0.1, 0.2]).unwrap();
        let x = gs.profile(vec![1.0, 0.0]).unwrap();
        let next = step_deterministic(&gs, &x, &rates).unwrap();
        assert!((next.values()[0] - 0.9).abs() < 1e-15);
        assert!((next.values()[1] - 0.2).abs() < 1e-15);
    }

    #[test]
    fn critical_points_are_fixed_points() {
        let chain = make_morse_smale_chain(3).unwrap();
        let saddle = chain.profile(vec![1.0, 0.0, 0.0]).unwrap();
        let rates = LearningRates::new(vec![0.3, 0.01, 2.0]).unwrap();
        let next = step_deterministic(&chain, &saddle, &rates).unwrap();
        assert_eq!(next.values(), saddle.values());
    }

    #[test]
    fn contraction_converges_to_the_origin() {
        let g = make_quadratic_potential(1.0, 0.5, 1.0);
        let x0 = g.profile(vec![0.9, -0.4]).unwrap();
        let rates = LearningRates::uniform(0.1, 2).unwrap();
        let traj = simulate_deterministic(&g, &x0, &rates, 10_000, 1e-10, 1e6).unwrap();
        match traj.status() {
            TerminationStatus::ConvergedTo { point } => assert!(point.norm() < 1e-9),
            other => panic!("expected convergence, got {other:?}"),
        }
    }

    #[test]
    fn rotation_field_euler_step_diverges() {
        // For the bilinear zero-sum game the Euler step multiplies the norm
        // by sqrt(1 + gamma^2) every iteration.
        let g = make_quadratic_zero_sum(0.0, 1.0, 0.0);
        let x0 = g.profile(vec![1.0, 0.0]).unwrap();
        let rates = LearningRates::uniform(0.1, 2).unwrap();
        let traj = simulate_deterministic(&g, &x0, &rates, 10_000_000, 0.0, 1e6).unwrap();
        assert!(matches!(traj.status(), TerminationStatus::Diverged { .. }));
        let mut prev = 1.0;
        for (_, p) in traj.points().iter().skip(1) {
            let n = p.norm();
            if n.is_finite() {
                assert!(n > prev, "norm must grow monotonically");
                prev = n;
            }
        }
    }

    #[test]
    fn saddle_start_off_the_stable_direction_never_converges() {
        // The stable eigenvector of the gradient-play map at the potential
        // saddle is (1,1) (Jacobian eigenvalue 3, map multiplier 0.7); any
        // start with a component along (1,-1) picks up the 1.1 multiplier
        // and must leave rather than converge to the origin.
        let g = make_quadratic_potential(1.0, 2.0, 1.0);
        let x0 = g.profile(vec![1e-3, 0.0]).unwrap();
        let rates = LearningRates::uniform(0.1, 2).unwrap();
        let traj = simulate_deterministic(&g, &x0, &rates, 100_000, 1e-12, 1e4).unwrap();
        assert!(
            matches!(traj.status(), TerminationStatus::Diverged { .. }),
            "{:?}",
            traj.status()
        );
    }

    #[test]
    fn zero_noise_reduces_to_the_deterministic_update() {
        let g = make_quadratic_potential(1.0, 0.5, 1.0);
        let x0 = g.profile(vec![0.7, -0.2]).unwrap();
        let schedule = StepSchedule::constant(0.1).unwrap();
        let noise = NoiseModel::IsotropicGaussian { sigma: 0.0 };
        let opts = SimOptions::new(50, 0.0, 1e6).unwrap();
        let stoch = simulate_stochastic_with(&g, &x0, &schedule, &noise, &opts, 3).unwrap();

        let rates = LearningRates::uniform(0.1, 2).unwrap();
        let det = simulate_deterministic_with(&g, &x0, &rates, &opts).unwrap();
        assert_eq!(stoch.points().len(), det.points().len());
        for ((ts, ps), (td, pd)) in stoch.points().iter().zip(det.points()) {
            assert_eq!(ts, td);
            assert_eq!(ps.values(), pd.values(), "bitwise-identical iterates");
        }
    }

    #[test]
    fn identical_seeds_give_bit_identical_trajectories() {
        let g = make_quadratic_potential(1.0, 0.5, 1.0);
        let x0 = g.profile(vec![1.0, 1.0]).unwrap();
        let schedule = StepSchedule::power(1.0, 1.0, 0.75).unwrap();
        let noise = NoiseModel::IsotropicGaussian { sigma: 0.1 };
        let a = simulate_stochastic(&g, &x0, &schedule, &noise, 500, 99).unwrap();
        let b = simulate_stochastic(&g, &x0, &schedule, &noise, 500, 99).unwrap();
        assert_eq!(a, b);
        let c = simulate_stochastic(&g, &x0, &schedule, &noise, 500, 100).unwrap();
        assert_ne!(a.final_point().values(), c.final_point().values());
    }

    #[test]
    fn escape_ball_stops_the_run() {
        let g = make_quadratic_potential(1.0, 2.0, 1.0);
        let x0 = g.profile(vec![1e-2, 0.0]).unwrap();
        let rates = LearningRates::uniform(0.1, 2).unwrap();
        let opts = SimOptions::new(100_000, 0.0, 1e8)
            .unwrap()
            .with_escape(vec![0.0, 0.0], 1.0);
        let traj = simulate_deterministic_with(&g, &x0, &rates, &opts).unwrap();
        assert_eq!(traj.status(), &TerminationStatus::EscapedBall);
        assert!(traj.final_point().norm() > 1.0);
    }

    #[test]
    fn scalar_bandit_estimator_is_a_signed_difference_quotient() {
        // In one dimension the sphere is {-1, +1} and the estimator is
        // +/- f(x_i +/- delta, x_{-i}) / delta.
        let g = make_quadratic_potential(1.0, 0.0, 1.0);
        let x = g.profile(vec![1.0, 0.0]).unwrap();
        let delta = 0.01;
        for seed in 0..20 {
            let est = one_point_gradient_estimate(&g, 0, &x, delta, seed).unwrap();
            assert_eq!(est.len(), 1);
            let plus = g.eval_cost(0, &g.profile(vec![1.0 + delta, 0.0]).unwrap()).unwrap() / delta;
            let minus = -g.eval_cost(0, &g.profile(vec![1.0 - delta, 0.0]).unwrap()).unwrap() / delta;
            assert!(
                (est[0] - plus).abs() < 1e-12 || (est[0] - minus).abs() < 1e-12,
                "unexpected estimate {est:?}"
            );
        }
    }

    #[test]
    fn bandit_estimator_is_nearly_unbiased() {
        // One-sample values are +/- f(x +/- delta)/delta ~ +/-50 here, so the
        // estimator's standard deviation is ~50 and the mean over n draws
        // carries a ~50/sqrt(n) standard error. n = 4e6 brings that to
        // 0.025; four standard errors plus the O(delta^2) smoothing bias
        // stay under 0.1.
        let g = make_quadratic_potential(1.0, 0.0, 1.0);
        let x = g.profile(vec![1.0, 0.0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(123);
        let n = 4_000_000;
        let mut mean = 0.0;
        for _ in 0..n {
            mean += one_point_gradient_estimate_with_rng(&g, 0, &x, 0.01, &mut rng).unwrap()[0];
        }
        mean /= n as f64;
        // D_1 f_1(1, 0) = 1.
        assert!((mean - 1.0).abs() < 0.1, "mean {mean}");
    }

    #[test]
    fn bandit_estimator_mean_vanishes_for_constant_costs() {
        // With f_i = k the estimator is +/- k/delta with a fair sign, so the
        // empirical mean shrinks toward 0 at rate (k/delta)/sqrt(n).
        let k = 3.0;
        let delta = 0.1;
        let cost = crate::game::PolynomialCost::from_terms(vec![(k, vec![0, 0])]).unwrap();
        let g = Game::new(vec![1, 1], vec![cost.clone(), cost], "constant").unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let n = 100_000;
        let mut mean = 0.0;
        for _ in 0..n {
            mean += one_point_gradient_estimate_with_rng(&g, 0, &g.origin(), delta, &mut rng)
                .unwrap()[0];
        }
        mean /= n as f64;
        // 6.3 standard errors.
        assert!(mean.abs() < 0.02 * k / delta, "mean {mean}");
    }

    #[test]
    fn options_validation() {
        assert!(SimOptions::new(0, 0.0, 1e6).is_err());
        assert!(SimOptions::new(10, -1.0, 1e6).is_err());
        assert!(SimOptions::new(10, 0.0, 0.0).is_err());
        assert!(one_point_gradient_estimate(
            &make_quadratic_potential(1.0, 0.0, 1.0),
            0,
            &StrategyProfile::scalar(vec![0.0, 0.0]),
            0.0,
            1
        )
        .is_err());
    }
}
