use serde::Serialize;

use crate::error::{Error, Result};

/// Per-player constant learning rates for deterministic gradient-play.
///
/// When a Lipschitz bound `L` on the game Jacobian norm is supplied, every
/// rate must satisfy `gamma_i < 1/L`; rates at or above that threshold are
/// rejected at construction.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LearningRates {
    per_player: Vec<f64>,
    lipschitz_bound: Option<f64>,
}

impl LearningRates {
    pub fn new(per_player: Vec<f64>) -> Result<Self> {
        if per_player.is_empty() {
            return Err(Error::InvalidParameter("no learning rates given".into()));
        }
        if per_player.iter().any(|&g| !(g > 0.0) || !g.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "learning rates must be positive and finite, got {per_player:?}"
            )));
        }
        Ok(LearningRates {
            per_player,
            lipschitz_bound: None,
        })
    }

    /// One shared rate for `players` players.
    pub fn uniform(gamma: f64, players: usize) -> Result<Self> {
        Self::new(vec![gamma; players])
    }

    /// Record a bound `L >= sup ||D omega||_2` and enforce `max gamma < 1/L`.
    pub fn with_lipschitz_bound(mut self, l: f64) -> Result<Self> {
        if !(l > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "Lipschitz bound must be positive, got {l}"
            )));
        }
        let max = self.per_player.iter().cloned().fold(0.0, f64::max);
        if max >= 1.0 / l {
            return Err(Error::InvalidParameter(format!(
                "learning rate {max} is not below 1/L = {}",
                1.0 / l
            )));
        }
        self.lipschitz_bound = Some(l);
        Ok(self)
    }

    pub fn per_player(&self) -> &[f64] {
        &self.per_player
    }

    pub fn lipschitz_bound(&self) -> Option<f64> {
        self.lipschitz_bound
    }

    pub fn num_players(&self) -> usize {
        self.per_player.len()
    }

    pub fn rate(&self, player: usize) -> f64 {
        self.per_player[player]
    }
}

/// Step-size schedule shared by all players in the stochastic update.
///
/// The power schedule is `gamma_t = c1 / t^eta` for `t >= 1`, with
/// `eta in (1/2, 1]` so that `sum gamma_t` diverges while `sum gamma_t^2`
/// converges. `c2 >= c1` records the upper envelope constant of the
/// admissible band `c1/t^eta <= gamma_t <= c2/t^eta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StepSchedule {
    Constant { gamma: f64 },
    Power { c1: f64, c2: f64, eta: f64 },
}

impl StepSchedule {
    pub fn constant(gamma: f64) -> Result<Self> {
        if !(gamma > 0.0) || !gamma.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "constant step size must be positive, got {gamma}"
            )));
        }
        Ok(StepSchedule::Constant { gamma })
    }

    pub fn power(c1: f64, c2: f64, eta: f64) -> Result<Self> {
        if !(c1 > 0.0 && c1 <= c2) {
            return Err(Error::InvalidParameter(format!(
                "power schedule needs 0 < c1 <= c2, got c1={c1}, c2={c2}"
            )));
        }
        if !(eta > 0.5 && eta <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "power schedule exponent must lie in (1/2, 1], got {eta}"
            )));
        }
        Ok(StepSchedule::Power { c1, c2, eta })
    }

    /// Step size at iteration `t >= 1`.
    pub fn value(&self, t: u64) -> f64 {
        debug_assert!(t >= 1);
        match *self {
            StepSchedule::Constant { gamma } => gamma,
            StepSchedule::Power { c1, eta, .. } => c1 / (t as f64).powf(eta),
        }
    }
}
