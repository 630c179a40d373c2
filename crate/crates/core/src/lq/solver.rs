use nalgebra::{Matrix4, RowVector2, Vector4};

use crate::error::{Error, Result};

use super::game::{FeedbackPolicy, LqGame, LqNashSolution};
use super::gradient::{closed_loop_value, lq_game_jacobian, stacked_gradient};
use super::riccati::{
    is_detectable, is_stabilizable, solve_closed_loop_value, solve_dare_best_response,
    spectral_radius2, sqrt_psd2,
};

const DARE_TOL: f64 = 1e-13;
const DARE_MAX_ITERS: usize = 200_000;
const VALUE_TOL: f64 = 1e-14;
const VALUE_MAX_ITERS: usize = 1_000_000;
const JACOBIAN_STEP: f64 = 1e-6;

/// Feedback Nash gains of the coupled Riccati system.
///
/// The solver descends the exact policy-gradient field on the joint gain
/// space. Each sweep offers up to three directions, taken in order until one
/// lowers the gradient norm while keeping the loop stable:
///
/// 1. the Lyapunov-iteration target: solve the two *linear* closed-loop
///    value equations `P_i = A_cl^T P_i A_cl + Q_i + K_i^T R_i K_i` at the
///    current gains, then the jointly consistent gains
///    `K_i = (R_i + B_i^T P_i B_i)^{-1} B_i^T P_i (A - B_j K_j)`;
/// 2. the Newton step of the gradient field (finite-difference Jacobian);
/// 3. the Levenberg-Marquardt regularization of that step.
///
/// Stationarity of the exact gradient with a stable loop certifies a
/// feedback Nash solution: each player's problem is a discrete LQR whose
/// stationary points under a full-rank state covariance are its global
/// optimum, so a joint stationary point is a mutual best response. Starts
/// are each player's lone Riccati best response (gain `K_j = 0` for the
/// other), followed by a fixed fan of deterministic restarts around the
/// best iterate if every start stalls.
///
/// `tol` is the gradient-norm target. The returned solution re-derives
/// `P_i` from the coupled Riccati equations at the final gains and records
/// the residuals, closed-loop spectral radius, and gradient norm;
/// non-convergence is a solver failure carrying the best residual seen.
pub fn lyapunov_iterations(game: &LqGame, tol: f64, max_iters: usize) -> Result<LqNashSolution> {
    if !(tol > 0.0) || max_iters == 0 {
        return Err(Error::InvalidParameter(format!(
            "need tol > 0 and max_iters >= 1, got {tol} and {max_iters}"
        )));
    }
    let sd1 = is_stabilizable(&game.a, &game.b1) && is_detectable(&game.a, &sqrt_psd2(&game.q1));
    let sd2 = is_stabilizable(&game.a, &game.b2) && is_detectable(&game.a, &sqrt_psd2(&game.q2));
    if !sd1 && !sd2 {
        return Err(Error::SolverFailure {
            message: "neither (A, B1, sqrt(Q1)) nor (A, B2, sqrt(Q2)) is stabilizable-detectable"
                .into(),
            residual: f64::INFINITY,
            iterations: 0,
        });
    }

    let mut starts = Vec::new();
    if sd1 {
        if let Ok((k1, _)) = solve_dare_best_response(
            &game.a, &game.b1, &game.q1, game.r1, DARE_TOL, DARE_MAX_ITERS, None,
        ) {
            starts.push(FeedbackPolicy {
                k1,
                k2: RowVector2::zeros(),
            });
        }
    }
    if sd2 {
        if let Ok((k2, _)) = solve_dare_best_response(
            &game.a, &game.b2, &game.q2, game.r2, DARE_TOL, DARE_MAX_ITERS, None,
        ) {
            starts.push(FeedbackPolicy {
                k1: RowVector2::zeros(),
                k2,
            });
        }
    }
    if spectral_radius2(&game.a) < 1.0 {
        starts.push(FeedbackPolicy::zero());
    }
    if starts.is_empty() {
        return Err(Error::SolverFailure {
            message: "no stabilizing start could be built".into(),
            residual: f64::INFINITY,
            iterations: 0,
        });
    }

    fn note_best(best: &mut Option<(FeedbackPolicy, f64)>, policy: FeedbackPolicy, gn: f64) {
        if best.as_ref().is_none_or(|(_, b)| gn < *b) {
            *best = Some((policy, gn));
        }
    }
    let mut best: Option<(FeedbackPolicy, f64)> = None;

    // Each descent gets max_iters sweeps; starts and restarts together are
    // capped at four descents' worth so hard instances fail in bounded time.
    let mut remaining = 4 * max_iters;
    let mut iterations = 0usize;
    for start in &starts {
        if remaining == 0 {
            break;
        }
        let (policy, gn, its) = descend(game, *start, tol, max_iters.min(remaining));
        iterations += its;
        remaining = remaining.saturating_sub(its.max(1));
        note_best(&mut best, policy, gn);
        if gn <= tol {
            break;
        }
    }

    // Deterministic restart fan around the best iterate.
    if best.as_ref().is_some_and(|(_, gn)| *gn > tol) {
        let fan: [[f64; 4]; 10] = [
            [1.0, 0.0, 0.0, 0.0],
            [0.0, 1.0, 0.0, 0.0],
            [0.0, 0.0, 1.0, 0.0],
            [0.0, 0.0, 0.0, 1.0],
            [-1.0, 0.0, 0.0, 0.0],
            [0.0, -1.0, 0.0, 0.0],
            [0.0, 0.0, -1.0, 0.0],
            [0.0, 0.0, 0.0, -1.0],
            [0.5, -0.5, 0.5, -0.5],
            [-0.5, 0.5, -0.5, 0.5],
        ];
        'fan: for scale in [0.25, 1.0] {
            for dir in &fan {
                if remaining == 0 {
                    break 'fan;
                }
                let (anchor, _) = best.clone().expect("seeded above");
                let base = anchor.stacked();
                let radius = scale * (1.0 + base.iter().map(|v| v.abs()).fold(0.0, f64::max));
                let candidate = FeedbackPolicy::from_stacked([
                    base[0] + radius * dir[0],
                    base[1] + radius * dir[1],
                    base[2] + radius * dir[2],
                    base[3] + radius * dir[3],
                ]);
                if spectral_radius2(&candidate.closed_loop(game)) >= 1.0 {
                    continue;
                }
                let (policy, gn, its) = descend(game, candidate, tol, max_iters.min(remaining));
                iterations += its;
                remaining = remaining.saturating_sub(its.max(1));
                note_best(&mut best, policy, gn);
                if best.as_ref().is_some_and(|(_, b)| *b <= tol) {
                    break 'fan;
                }
            }
        }
    }

    let (policy, gn) = best.expect("at least one start ran");
    if gn > tol {
        return Err(Error::SolverFailure {
            message: "gradient descent on the gain space stalled short of stationarity".into(),
            residual: gn,
            iterations,
        });
    }

    let a_cl = policy.closed_loop(game);
    let rho = spectral_radius2(&a_cl);
    if rho >= 1.0 {
        return Err(Error::SolverFailure {
            message: format!("converged gains leave the loop unstable (spectral radius {rho})"),
            residual: rho,
            iterations,
        });
    }

    // Coupled Riccati solutions and residuals at the final gains.
    let p1 = closed_loop_value(game, &policy, 0)?;
    let p2 = closed_loop_value(game, &policy, 1)?;
    let residual = |p: &nalgebra::Matrix2<f64>, player: usize| {
        let k = policy.gain(player);
        let cost = game.state_cost(player) + k.transpose() * *k * game.input_cost(player);
        (a_cl.transpose() * p * a_cl + cost - p).amax()
    };
    Ok(LqNashSolution {
        policy,
        p1,
        p2,
        iterations,
        residuals: [residual(&p1, 0), residual(&p2, 1)],
        gradient_norm: gn,
    })
}

fn gradient_norm_or_inf(game: &LqGame, policy: &FeedbackPolicy) -> f64 {
    match stacked_gradient(game, policy) {
        Ok(g) => g.iter().map(|v| v * v).sum::<f64>().sqrt(),
        Err(_) => f64::INFINITY,
    }
}

/// The jointly consistent gains for the value matrices frozen at `policy`,
/// the classical Lyapunov-iteration update.
fn lyapunov_target(game: &LqGame, policy: &FeedbackPolicy) -> Option<FeedbackPolicy> {
    let a_cl = policy.closed_loop(game);
    if spectral_radius2(&a_cl) >= 1.0 {
        return None;
    }
    let p1 = solve_closed_loop_value(
        &a_cl,
        &(game.q1 + policy.k1.transpose() * policy.k1 * game.r1),
        VALUE_TOL,
        VALUE_MAX_ITERS,
    )
    .ok()?;
    let p2 = solve_closed_loop_value(
        &a_cl,
        &(game.q2 + policy.k2.transpose() * policy.k2 * game.r2),
        VALUE_TOL,
        VALUE_MAX_ITERS,
    )
    .ok()?;
    let d1 = game.r1 + (game.b1.transpose() * p1 * game.b1)[(0, 0)];
    let d2 = game.r2 + (game.b2.transpose() * p2 * game.b2)[(0, 0)];
    let m1 = (game.b1.transpose() * p1 * game.b2)[(0, 0)] / d1;
    let m2 = (game.b2.transpose() * p2 * game.b1)[(0, 0)] / d2;
    let n1 = (game.b1.transpose() * p1 * game.a) / d1;
    let n2 = (game.b2.transpose() * p2 * game.a) / d2;
    let det = 1.0 - m1 * m2;
    if det.abs() < 1e-12 {
        return None;
    }
    let k1 = (n1 - n2 * m1) / det;
    Some(FeedbackPolicy {
        k1,
        k2: n2 - k1 * m2,
    })
}

/// Backtracking step along `dir` (already pointing downhill) that keeps the
/// loop stable and strictly lowers the gradient norm.
fn line_search(
    game: &LqGame,
    policy: &FeedbackPolicy,
    dir: &[f64; 4],
    gn0: f64,
) -> Option<(FeedbackPolicy, f64)> {
    let base = policy.stacked();
    let mut alpha = 1.0f64;
    for _ in 0..40 {
        let candidate = FeedbackPolicy::from_stacked([
            base[0] - alpha * dir[0],
            base[1] - alpha * dir[1],
            base[2] - alpha * dir[2],
            base[3] - alpha * dir[3],
        ]);
        if spectral_radius2(&candidate.closed_loop(game)) < 1.0 {
            let gn = gradient_norm_or_inf(game, &candidate);
            if gn < gn0 {
                return Some((candidate, gn));
            }
        }
        alpha *= 0.5;
    }
    None
}

/// Drive one start toward a stationary point. Returns the final policy,
/// its gradient norm, and the sweeps consumed.
fn descend(
    game: &LqGame,
    start: FeedbackPolicy,
    tol: f64,
    max_iters: usize,
) -> (FeedbackPolicy, f64, usize) {
    let mut policy = start;
    let mut gn = gradient_norm_or_inf(game, &policy);
    let mut lambda = 1e-3f64;
    for sweep in 1..=max_iters {
        if gn <= tol || !gn.is_finite() {
            return (policy, gn, sweep - 1);
        }
        let Ok(g) = stacked_gradient(game, &policy) else {
            return (policy, f64::INFINITY, sweep);
        };
        let gvec = Vector4::new(g[0], g[1], g[2], g[3]);

        let lyapunov_dir = || {
            lyapunov_target(game, &policy).map(|target| {
                let b = policy.stacked();
                let t = target.stacked();
                [b[0] - t[0], b[1] - t[1], b[2] - t[2], b[3] - t[3]]
            })
        };

        let mut stepped = None;

        // Far from stationarity the Lyapunov-iteration target is a good and
        // cheap direction; close in, the Newton step of the gradient field
        // converges quadratically.
        let far = gn > 1.0;
        if far {
            if let Some(dir) = lyapunov_dir() {
                stepped = line_search(game, &policy, &dir, gn);
            }
        }

        if stepped.is_none() {
            if let Ok(jac) = lq_game_jacobian(game, &policy, JACOBIAN_STEP) {
                if let Some(d) = jac.lu().solve(&gvec) {
                    if d.iter().all(|v| v.is_finite()) {
                        stepped = line_search(game, &policy, &[d[0], d[1], d[2], d[3]], gn);
                    }
                }

                if stepped.is_none() && !far {
                    if let Some(dir) = lyapunov_dir() {
                        stepped = line_search(game, &policy, &dir, gn);
                    }
                }

                // Levenberg-Marquardt fallback with adaptive damping.
                if stepped.is_none() {
                    let jtj = jac.transpose() * jac;
                    let jtg = jac.transpose() * gvec;
                    for _ in 0..25 {
                        let system = jtj + Matrix4::identity() * lambda;
                        if let Some(d) = system.lu().solve(&jtg) {
                            if d.iter().all(|v| v.is_finite()) {
                                if let Some(hit) =
                                    line_search(game, &policy, &[d[0], d[1], d[2], d[3]], gn)
                                {
                                    stepped = Some(hit);
                                    lambda = (lambda / 3.0).max(1e-12);
                                    break;
                                }
                            }
                        }
                        lambda *= 4.0;
                    }
                }
            }
        }

        match stepped {
            Some((next, next_gn)) => {
                policy = next;
                gn = next_gn;
            }
            // Every direction stalled; let the caller restart elsewhere.
            None => return (policy, gn, sweep),
        }
    }
    (policy, gn, max_iters)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{Matrix2, Vector2};

    #[test]
    fn zero_dynamics_nash_is_zero_gains() {
        let game = LqGame::census_instance(Matrix2::zeros(), 0.1, 0.1).unwrap();
        let sol = lyapunov_iterations(&game, 1e-10, 500).unwrap();
        assert!(sol.policy.k1.amax() < 1e-9);
        assert!(sol.policy.k2.amax() < 1e-9);
        // P_i = Q_i satisfies the coupled Riccati display with A = 0, K = 0.
        assert!((sol.p1 - game.q1).amax() < 1e-9);
        assert!((sol.p2 - game.q2).amax() < 1e-9);
        assert!(sol.gradient_norm < 1e-10);
        assert!(sol.residuals[0] < 1e-10 && sol.residuals[1] < 1e-10);
    }

    #[test]
    fn mild_dynamics_converge_with_certificates() {
        let game = LqGame::census_instance(Matrix2::new(0.3, 0.0, 0.0, 0.3), 0.1, 0.1).unwrap();
        let sol = lyapunov_iterations(&game, 1e-10, 500).unwrap();
        assert!(spectral_radius2(&sol.policy.closed_loop(&game)) < 1.0);
        assert!(
            sol.residuals[0] < 1e-8 && sol.residuals[1] < 1e-8,
            "{:?}",
            sol.residuals
        );
        assert!(sol.gradient_norm < 1e-6, "{}", sol.gradient_norm);
    }

    #[test]
    fn uncontrollable_unstable_game_fails() {
        let game = LqGame::new(
            Matrix2::new(1.5, 0.0, 0.0, 1.5),
            Vector2::zeros(),
            Vector2::zeros(),
            Matrix2::identity(),
            Matrix2::identity(),
            1.0,
            1.0,
            Matrix2::identity(),
        )
        .unwrap();
        assert!(matches!(
            lyapunov_iterations(&game, 1e-10, 500),
            Err(Error::SolverFailure { .. })
        ));
    }

    #[test]
    fn solutions_are_mutual_best_responses() {
        // At the solution, re-solving each player's single-player problem
        // against the other's frozen gain must return the same gain.
        let game = LqGame::census_instance(Matrix2::new(0.7, 0.4, 0.9, 0.6), 0.01, 0.1).unwrap();
        let sol = lyapunov_iterations(&game, 1e-10, 500).unwrap();
        let (k1_br, _) = solve_dare_best_response(
            &(game.a - game.b2 * sol.policy.k2),
            &game.b1,
            &game.q1,
            game.r1,
            1e-14,
            1_000_000,
            None,
        )
        .unwrap();
        let (k2_br, _) = solve_dare_best_response(
            &(game.a - game.b1 * sol.policy.k1),
            &game.b2,
            &game.q2,
            game.r2,
            1e-14,
            1_000_000,
            None,
        )
        .unwrap();
        assert!((k1_br - sol.policy.k1).amax() < 1e-7, "{k1_br} vs {}", sol.policy.k1);
        assert!((k2_br - sol.policy.k2).amax() < 1e-7, "{k2_br} vs {}", sol.policy.k2);
    }
}
