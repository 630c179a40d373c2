//! Numerical laboratory for gradient-based learning in continuous games.
//!
//! Players simultaneously descend their own cost in their own decision
//! variable. The central objects are the simultaneous-gradient field
//! `omega(x) = (D_1 f_1(x), ..., D_n f_n(x))` and its Jacobian, the game
//! Jacobian `D omega(x)`, whose eigenvalue structure separates attractors of
//! the learning dynamics from saddles and from game-theoretically meaningful
//! equilibria.
//!
//! The crate is organized around that pipeline:
//!
//! - [`game`]: games with polynomial costs, exact gradients and Jacobians,
//!   and constructors for the standard two-player quadratic families, the
//!   chain game, and the Van der Pol game.
//! - [`equilibria`]: critical-point search and the equilibrium taxonomy
//!   (differential Nash, stable equilibrium, strict saddle).
//! - [`dynamics`]: deterministic and stochastic gradient-play, saddle
//!   avoidance experiments, and limit-cycle detection via monodromy
//!   multipliers.
//! - [`lq`]: two-player discrete-time linear-quadratic dynamic games,
//!   feedback Nash solutions via Lyapunov iterations on coupled Riccati
//!   equations, exact policy gradients, and the strict-saddle census over
//!   randomly sampled games.

pub mod dynamics;
pub mod equilibria;
mod error;
pub mod game;
pub mod linalg;
pub mod lq;

pub use error::{Error, Result};
pub use game::{Game, GameJacobian, JointGradient, PolynomialCost, StrategyProfile};
