use nalgebra::{Matrix2, Matrix4, RowVector2};

use crate::error::{Error, Result};

use super::game::{FeedbackPolicy, LqGame};
use super::riccati::{solve_closed_loop_value, spectral_radius2, state_covariance};

const VALUE_TOL: f64 = 1e-14;
const VALUE_MAX_ITERS: usize = 1_000_000;

/// Closed-loop value matrix `P_i` for player `player` at the given gains:
/// the fixed point of `P = A_cl^T P A_cl + K_i^T R_i K_i + Q_i`.
pub fn closed_loop_value(
    game: &LqGame,
    policy: &FeedbackPolicy,
    player: usize,
) -> Result<Matrix2<f64>> {
    let a_cl = policy.closed_loop(game);
    if spectral_radius2(&a_cl) >= 1.0 {
        return Err(Error::InvalidParameter(format!(
            "policy gradient needs a stable closed loop, spectral radius is {}",
            spectral_radius2(&a_cl)
        )));
    }
    let k = policy.gain(player);
    let cost = game.state_cost(player) + k.transpose() * *k * game.input_cost(player);
    solve_closed_loop_value(&a_cl, &cost, VALUE_TOL, VALUE_MAX_ITERS)
}

/// Player `player`'s expected cost `trace(P_i Z0)` under the policy.
pub fn expected_cost(game: &LqGame, policy: &FeedbackPolicy, player: usize) -> Result<f64> {
    Ok((closed_loop_value(game, policy, player)? * game.z0_second_moment).trace())
}

/// Exact policy gradient of player `player`'s expected cost in their own
/// gain:
///
/// `2 (R_i K_i + B_i^T P_i (B_1 K_1 + B_2 K_2) - B_i^T P_i A) X`
///
/// with `P_i` the closed-loop value matrix and `X` the infinite-horizon
/// state covariance seeded by `Z0`. The leading factor 2 makes this the
/// derivative of `trace(P_i Z0)`, which finite differences of the cost
/// confirm; it rescales the gradient field without moving its zeros or the
/// sign pattern of its Jacobian's eigenvalues.
pub fn lq_policy_gradient(
    game: &LqGame,
    policy: &FeedbackPolicy,
    player: usize,
) -> Result<RowVector2<f64>> {
    let a_cl = policy.closed_loop(game);
    let p = closed_loop_value(game, policy, player)?;
    let x = state_covariance(&a_cl, &game.z0_second_moment)?;
    let bk = game.b1 * policy.k1 + game.b2 * policy.k2;
    let b_i = game.input_matrix(player);
    let k_i = policy.gain(player);
    let inner = *k_i * game.input_cost(player) + b_i.transpose() * p * bk
        - b_i.transpose() * p * game.a;
    Ok(inner * x * 2.0)
}

/// Both players' gradients stacked in gain order `[k1_1, k1_2, k2_1, k2_2]`;
/// the zeros of this field are the joint stationary points of gradient-play
/// on the gains.
pub fn stacked_gradient(game: &LqGame, policy: &FeedbackPolicy) -> Result<[f64; 4]> {
    let g1 = lq_policy_gradient(game, policy, 0)?;
    let g2 = lq_policy_gradient(game, policy, 1)?;
    Ok([g1[0], g1[1], g2[0], g2[1]])
}

pub fn gradient_norm(game: &LqGame, policy: &FeedbackPolicy) -> Result<f64> {
    let g = stacked_gradient(game, policy)?;
    Ok(g.iter().map(|v| v * v).sum::<f64>().sqrt())
}

fn jacobian_at(game: &LqGame, policy: &FeedbackPolicy, h: f64) -> Result<Matrix4<f64>> {
    let base = policy.stacked();
    let mut jac = Matrix4::zeros();
    for j in 0..4 {
        let mut plus = base;
        plus[j] += h;
        let mut minus = base;
        minus[j] -= h;
        let gp = stacked_gradient(game, &FeedbackPolicy::from_stacked(plus))?;
        let gm = stacked_gradient(game, &FeedbackPolicy::from_stacked(minus))?;
        for i in 0..4 {
            jac[(i, j)] = (gp[i] - gm[i]) / (2.0 * h);
        }
    }
    Ok(jac)
}

/// Game Jacobian of the stacked gradient field on the 4-dimensional joint
/// gain space, by central differences with step `h`. If a perturbed gain
/// destabilizes the closed loop, the step is reduced once by 10x before the
/// whole computation fails as a conditioning error.
pub fn lq_game_jacobian(game: &LqGame, policy: &FeedbackPolicy, h: f64) -> Result<Matrix4<f64>> {
    if !(h > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "finite-difference step must be positive, got {h}"
        )));
    }
    match jacobian_at(game, policy, h) {
        Ok(j) => Ok(j),
        Err(Error::InvalidParameter(_)) => jacobian_at(game, policy, h / 10.0).map_err(|_| {
            Error::NumericalFailure(format!(
                "gain perturbations destabilize the closed loop at steps {h} and {}",
                h / 10.0
            ))
        }),
        Err(other) => Err(other),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn decoupled_game() -> LqGame {
        LqGame::census_instance(Matrix2::zeros(), 0.1, 0.1).unwrap()
    }

    #[test]
    fn zero_dynamics_zero_gains_has_zero_gradient() {
        let game = decoupled_game();
        let g = stacked_gradient(&game, &FeedbackPolicy::zero()).unwrap();
        assert!(g.iter().all(|v| v.abs() < 1e-14), "{g:?}");
    }

    #[test]
    fn gradient_matches_finite_differences_of_the_cost() {
        let game = LqGame::census_instance(Matrix2::new(0.3, 0.7, 0.2, 0.4), 0.3, 0.2).unwrap();
        let policy = FeedbackPolicy {
            k1: RowVector2::new(0.05, 0.1),
            k2: RowVector2::new(-0.02, 0.08),
        };
        let h = 1e-6;
        for player in 0..2 {
            let grad = lq_policy_gradient(&game, &policy, player).unwrap();
            let base = policy.stacked();
            for entry in 0..2 {
                let j = 2 * player + entry;
                let mut plus = base;
                plus[j] += h;
                let mut minus = base;
                minus[j] -= h;
                let cp = expected_cost(&game, &FeedbackPolicy::from_stacked(plus), player).unwrap();
                let cm = expected_cost(&game, &FeedbackPolicy::from_stacked(minus), player).unwrap();
                let fd = (cp - cm) / (2.0 * h);
                let rel = (grad[entry] - fd).abs() / (1.0 + fd.abs());
                assert!(rel < 1e-6, "player {player} entry {entry}: {} vs {fd}", grad[entry]);
            }
        }
    }

    #[test]
    fn zero_dynamics_jacobian_has_the_closed_form_cross_blocks() {
        // At A = 0, K = 0 the Jacobian reduces to
        // 2 [[(R1 + B1'Q1B1) I, (B1'Q1B2) I], [(B2'Q2B1) I, (R2 + B2'Q2B2) I]].
        let (q, r) = (0.1, 0.1);
        let game = LqGame::census_instance(Matrix2::zeros(), q, r).unwrap();
        let jac = lq_game_jacobian(&game, &FeedbackPolicy::zero(), 1e-5).unwrap();
        let d1 = 2.0 * (0.01 + 1.01); // R1 + B1' Q1 B1
        let d2 = 2.0 * (r + q); // R2 + B2' Q2 B2
        let c12 = 2.0 * 1.0; // B1' Q1 B2
        let c21 = 2.0 * q; // B2' Q2 B1
        let expect = Matrix4::new(
            d1, 0.0, c12, 0.0, //
            0.0, d1, 0.0, c12, //
            c21, 0.0, d2, 0.0, //
            0.0, c21, 0.0, d2,
        );
        assert!((jac - expect).amax() < 1e-6, "{jac}");
        // All eigenvalue real parts positive: the decoupled Nash point is a
        // stable equilibrium of gradient-play on the gains.
        let dm = nalgebra::DMatrix::from_column_slice(4, 4, jac.as_slice());
        let eig = crate::linalg::eigenvalues(&dm).unwrap();
        assert!(eig.iter().all(|l| l.re > 0.0), "{eig:?}");
    }

    #[test]
    fn unstable_policy_is_rejected() {
        let game = LqGame::census_instance(Matrix2::new(1.5, 0.0, 0.0, 1.5), 0.1, 0.1).unwrap();
        let err = lq_policy_gradient(&game, &FeedbackPolicy::zero(), 0);
        assert!(matches!(err, Err(Error::InvalidParameter(_))));
    }
}
