use num_complex::Complex64;
use serde::ser::SerializeSeq;
use serde::{Serialize, Serializer};

use crate::game::StrategyProfile;

/// Equilibrium taxonomy flags for one critical point.
///
/// `is_dne`: differential Nash (critical, every player's own-block Hessian
/// positive definite). `is_nddne`: additionally the game Jacobian is
/// non-degenerate. `is_lase`: locally asymptotically stable for the flow
/// `xdot = -omega` (all Jacobian eigenvalues in the open right half-plane).
/// `is_strict_saddle`: eigenvalues on both sides of the imaginary axis,
/// none on it. `is_nash_candidate_violation`: some player's own-block
/// Hessian has a strictly negative eigenvalue, so the point fails the
/// second-order necessary condition for a local Nash equilibrium.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct TaxonomyFlags {
    pub is_critical: bool,
    pub is_dne: bool,
    pub is_nddne: bool,
    pub is_lase: bool,
    pub is_strict_saddle: bool,
    pub is_nash_candidate_violation: bool,
}

fn serialize_eigenvalues<S: Serializer>(
    vals: &[Complex64],
    serializer: S,
) -> Result<S::Ok, S::Error> {
    let mut seq = serializer.serialize_seq(Some(vals.len()))?;
    for v in vals {
        seq.serialize_element(&[v.re, v.im])?;
    }
    seq.end()
}

/// Full classification record for one point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriticalPointReport {
    pub point: StrategyProfile,
    pub omega_norm: f64,
    /// Eigenvalues of the game Jacobian, ascending by real part;
    /// serialized as `[re, im]` pairs.
    #[serde(serialize_with = "serialize_eigenvalues")]
    pub eigenvalues: Vec<Complex64>,
    /// Per player: is the own-block Hessian positive definite.
    pub block_definiteness: Vec<bool>,
    pub det_jacobian: f64,
    pub flags: TaxonomyFlags,
    /// Criticality tolerance on `||omega||` used for this report.
    pub tolerance: f64,
    /// Relative tolerance under which an eigenvalue real part counts as zero.
    pub degeneracy_tolerance: f64,
    /// True when some eigenvalue sits within the degeneracy band of the
    /// imaginary axis; such points are left unclassified rather than
    /// force-flagged.
    pub degenerate: bool,
}

impl CriticalPointReport {
    pub fn min_real_part(&self) -> f64 {
        self.eigenvalues.first().map_or(f64::NAN, |l| l.re)
    }

    pub fn max_real_part(&self) -> f64 {
        self.eigenvalues.last().map_or(f64::NAN, |l| l.re)
    }

    /// Header for the batch CSV form: point coordinates, eigenvalue
    /// real-part extremes, and flags.
    pub fn csv_header(dim: usize) -> String {
        let coords: Vec<String> = (1..=dim).map(|k| format!("x_{k}")).collect();
        format!(
            "{},omega_norm,min_re,max_re,det,is_critical,is_dne,is_nddne,is_lase,is_strict_saddle,is_nash_candidate_violation,degenerate",
            coords.join(",")
        )
    }

    pub fn csv_row(&self) -> String {
        let coords: Vec<String> = self.point.values().iter().map(|v| v.to_string()).collect();
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            coords.join(","),
            self.omega_norm,
            self.min_real_part(),
            self.max_real_part(),
            self.det_jacobian,
            self.flags.is_critical,
            self.flags.is_dne,
            self.flags.is_nddne,
            self.flags.is_lase,
            self.flags.is_strict_saddle,
            self.flags.is_nash_candidate_violation,
            self.degenerate,
        )
    }
}
