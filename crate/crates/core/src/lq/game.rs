use nalgebra::{Matrix2, RowVector2, Vector2};
use serde::Serialize;

use crate::error::{Error, Result};

fn is_symmetric(m: &Matrix2<f64>, tol: f64) -> bool {
    (m[(0, 1)] - m[(1, 0)]).abs() <= tol * (1.0 + m.amax())
}

fn is_positive_definite(m: &Matrix2<f64>) -> bool {
    // Symmetric 2x2: positive definite iff trace > 0 and det > 0.
    m.trace() > 0.0 && m.determinant() > 0.0
}

/// Two-player discrete-time linear-quadratic dynamic game
/// `z(t+1) = A z(t) + B1 u1(t) + B2 u2(t)` with per-player stage costs
/// `z^T Q_i z + u_i^T R_i u_i` and linear feedback `u_i = -K_i z`.
///
/// `z0_second_moment` is the initial-state second moment `E[z(0) z(0)^T]`
/// that weights the infinite-horizon state covariance in the policy
/// gradient; the identity makes gradients expected-cost gradients over an
/// isotropic initial state.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LqGame {
    pub a: Matrix2<f64>,
    pub b1: Vector2<f64>,
    pub b2: Vector2<f64>,
    pub q1: Matrix2<f64>,
    pub q2: Matrix2<f64>,
    pub r1: f64,
    pub r2: f64,
    pub z0_second_moment: Matrix2<f64>,
}

impl LqGame {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        a: Matrix2<f64>,
        b1: Vector2<f64>,
        b2: Vector2<f64>,
        q1: Matrix2<f64>,
        q2: Matrix2<f64>,
        r1: f64,
        r2: f64,
        z0_second_moment: Matrix2<f64>,
    ) -> Result<Self> {
        for (name, q) in [("Q1", &q1), ("Q2", &q2), ("Z0", &z0_second_moment)] {
            if !is_symmetric(q, 1e-12) {
                return Err(Error::InvalidParameter(format!("{name} must be symmetric")));
            }
            if !is_positive_definite(q) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be positive definite"
                )));
            }
        }
        if !(r1 > 0.0 && r2 > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "input costs must be positive, got R1={r1}, R2={r2}"
            )));
        }
        Ok(LqGame {
            a,
            b1,
            b2,
            q1,
            q2,
            r1,
            r2,
            z0_second_moment,
        })
    }

    /// The census family: fixed `B1 = [1;1]`, `B2 = [0;1]`,
    /// `Q1 = diag(0.01, 1)`, `R1 = 0.01`, with `Q2 = diag(1, q)`, `R2 = r`,
    /// and an identity initial-state second moment.
    pub fn census_instance(a: Matrix2<f64>, q: f64, r: f64) -> Result<Self> {
        Self::new(
            a,
            Vector2::new(1.0, 1.0),
            Vector2::new(0.0, 1.0),
            Matrix2::new(0.01, 0.0, 0.0, 1.0),
            Matrix2::new(1.0, 0.0, 0.0, q),
            0.01,
            r,
            Matrix2::identity(),
        )
    }

    pub fn input_matrix(&self, player: usize) -> &Vector2<f64> {
        match player {
            0 => &self.b1,
            1 => &self.b2,
            _ => panic!("LQ games here have exactly two players"),
        }
    }

    pub fn state_cost(&self, player: usize) -> &Matrix2<f64> {
        match player {
            0 => &self.q1,
            1 => &self.q2,
            _ => panic!("LQ games here have exactly two players"),
        }
    }

    pub fn input_cost(&self, player: usize) -> f64 {
        match player {
            0 => self.r1,
            1 => self.r2,
            _ => panic!("LQ games here have exactly two players"),
        }
    }
}

/// Linear feedback gains `u_i = -K_i z` for both players.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FeedbackPolicy {
    pub k1: RowVector2<f64>,
    pub k2: RowVector2<f64>,
}

impl FeedbackPolicy {
    pub fn zero() -> Self {
        FeedbackPolicy {
            k1: RowVector2::zeros(),
            k2: RowVector2::zeros(),
        }
    }

    pub fn gain(&self, player: usize) -> &RowVector2<f64> {
        match player {
            0 => &self.k1,
            1 => &self.k2,
            _ => panic!("LQ games here have exactly two players"),
        }
    }

    /// Closed-loop transition `A - B1 K1 - B2 K2`.
    pub fn closed_loop(&self, game: &LqGame) -> Matrix2<f64> {
        game.a - game.b1 * self.k1 - game.b2 * self.k2
    }

    /// Gains stacked row-major, player 1 first: `[k1_1, k1_2, k2_1, k2_2]`.
    pub fn stacked(&self) -> [f64; 4] {
        [self.k1[0], self.k1[1], self.k2[0], self.k2[1]]
    }

    pub fn from_stacked(v: [f64; 4]) -> Self {
        FeedbackPolicy {
            k1: RowVector2::new(v[0], v[1]),
            k2: RowVector2::new(v[2], v[3]),
        }
    }
}

/// A converged feedback Nash solution with its certificates: the coupled
/// Riccati solutions, their residuals, and the policy-gradient norm at the
/// gains (stationarity).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LqNashSolution {
    pub policy: FeedbackPolicy,
    pub p1: Matrix2<f64>,
    pub p2: Matrix2<f64>,
    pub iterations: usize,
    pub residuals: [f64; 2],
    pub gradient_norm: f64,
}
