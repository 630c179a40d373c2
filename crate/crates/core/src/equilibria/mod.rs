//! Critical points of the gradient field and their equilibrium taxonomy.
//!
//! A critical point of `xdot = -omega(x)` is classified by the spectrum of
//! the game Jacobian and by the definiteness of each player's own-block
//! Hessian: differential Nash equilibria, locally asymptotically stable
//! equilibria of the learning dynamics, strict saddles, and the overlaps
//! between them (stable non-Nash points, Nash points the dynamics avoid).
//! Eigenvalues whose real part falls inside a scaled degeneracy band leave
//! the point unclassified instead of forcing a flag.

mod classify;
mod report;
mod search;

pub use classify::{
    classify, classify_with, is_potential_game, zero_sum_dne_implies_lase_check,
    DEFAULT_DEGENERACY_TOL,
};
pub use report::{CriticalPointReport, TaxonomyFlags};
pub use search::{find_critical_points, CriticalPointSearchConfig};
