use crate::error::{Error, Result};
use crate::game::{Game, StrategyProfile};
use crate::linalg;

use super::report::{CriticalPointReport, TaxonomyFlags};

/// Default relative tolerance under which an eigenvalue real part (or a
/// block eigenvalue, or the Jacobian determinant) counts as zero. Scaled by
/// `1 + ||D omega||_max` before use.
pub const DEFAULT_DEGENERACY_TOL: f64 = 1e-9;

/// Classify `x` against the equilibrium taxonomy with the default
/// degeneracy tolerance. `tol` bounds `||omega(x)||` for the point to count
/// as critical; a non-critical point gets a report with every equilibrium
/// flag false rather than an error.
pub fn classify(game: &Game, x: &StrategyProfile, tol: f64) -> Result<CriticalPointReport> {
    classify_with(game, x, tol, DEFAULT_DEGENERACY_TOL)
}

pub fn classify_with(
    game: &Game,
    x: &StrategyProfile,
    tol: f64,
    degeneracy_tol: f64,
) -> Result<CriticalPointReport> {
    if !(tol > 0.0) || !(degeneracy_tol > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "classification tolerances must be positive, got tol={tol}, degeneracy={degeneracy_tol}"
        )));
    }
    let omega_norm = game.omega(x)?.norm();
    let jac = game.game_jacobian(x)?;
    let eigenvalues = linalg::eigenvalues(jac.matrix())?;
    let det_jacobian = jac.matrix().clone().determinant();

    // One scale for every zero test: eigenvalue real parts, block
    // definiteness, and the determinant.
    let scale = degeneracy_tol * (1.0 + jac.max_abs());

    let n = game.num_players();
    let mut block_definiteness = Vec::with_capacity(n);
    let mut any_block_negative = false;
    for i in 0..n {
        let min_eig = linalg::min_symmetric_eigenvalue(&jac.block(i, i));
        block_definiteness.push(min_eig > scale);
        if min_eig < -scale {
            any_block_negative = true;
        }
    }

    let is_critical = omega_norm <= tol;
    let degenerate = is_critical && eigenvalues.iter().any(|l| l.re.abs() <= scale);
    let has_negative = eigenvalues.iter().any(|l| l.re < -scale);
    let has_positive = eigenvalues.iter().any(|l| l.re > scale);

    let is_dne = is_critical && block_definiteness.iter().all(|&b| b);
    let flags = TaxonomyFlags {
        is_critical,
        is_dne,
        is_nddne: is_dne && det_jacobian.abs() > scale,
        is_lase: is_critical && !degenerate && !has_negative && has_positive,
        is_strict_saddle: is_critical && !degenerate && has_negative && has_positive,
        is_nash_candidate_violation: is_critical && any_block_negative,
    };

    Ok(CriticalPointReport {
        point: x.clone(),
        omega_norm,
        eigenvalues,
        block_definiteness,
        det_jacobian,
        flags,
        tolerance: tol,
        degeneracy_tolerance: degeneracy_tol,
        degenerate,
    })
}

/// A game is an exact potential game iff its Jacobian is symmetric; tested
/// here as `||D omega(x) - D omega(x)^T||_max <= tol` at every sample point.
pub fn is_potential_game(game: &Game, sample_points: &[StrategyProfile], tol: f64) -> Result<bool> {
    if sample_points.is_empty() {
        return Err(Error::InvalidParameter(
            "potential-game test needs at least one sample point".into(),
        ));
    }
    for x in sample_points {
        if game.game_jacobian(x)?.asymmetry() > tol {
            return Ok(false);
        }
    }
    Ok(true)
}

/// In two-player zero-sum games every differential Nash equilibrium is
/// locally asymptotically stable. This check builds the zero-sum quadratic
/// family with the given coefficients, requires the origin to be a
/// differential Nash equilibrium (`a > 0`, `-c > 0`), and returns the
/// classifier's stability flag, which must come back true for every valid
/// input.
pub fn zero_sum_dne_implies_lase_check(a: f64, b: f64, c: f64) -> Result<bool> {
    if !(a > 0.0 && -c > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "origin is a differential Nash equilibrium only for a > 0 and c < 0, got a={a}, c={c}"
        )));
    }
    let game = crate::game::make_quadratic_zero_sum(a, b, c);
    let report = classify(&game, &game.origin(), 1e-9)?;
    debug_assert!(report.flags.is_dne);
    Ok(report.flags.is_lase)
}
