//! Continuous games with polynomial costs and exact derivatives.
//!
//! A game holds one cost polynomial per player over the full joint variable.
//! Construction precomputes, by the power rule, the simultaneous-gradient
//! field `omega` (each player's own-block partial derivatives) and the game
//! Jacobian `D omega` (all second derivatives), so evaluation anywhere is
//! exact up to rounding.

mod families;
mod polynomial;
mod profile;

pub use families::{
    make_morse_smale_chain, make_quadratic_general_sum, make_quadratic_potential,
    make_quadratic_zero_sum, make_van_der_pol_game, FAMILY_LABELS,
};
pub use polynomial::{PolynomialCost, Term};
pub use profile::StrategyProfile;

use nalgebra::DMatrix;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// The simultaneous-gradient field evaluated at one profile:
/// block `i` is `D_i f_i(x)`, player `i`'s gradient of their own cost in
/// their own variable.
#[derive(Debug, Clone, PartialEq)]
pub struct JointGradient {
    values: Vec<f64>,
}

impl JointGradient {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

/// The game Jacobian `D omega(x)`: row-block `i`, column-block `j` holds the
/// derivative of `D_i f_i` with respect to `x_j`. Diagonal blocks are the
/// players' own Hessians `D_i^2 f_i`; the matrix is generally non-symmetric.
#[derive(Debug, Clone, PartialEq)]
pub struct GameJacobian {
    entries: DMatrix<f64>,
    dims: Vec<usize>,
}

impl GameJacobian {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    fn block_start(&self, player: usize) -> usize {
        self.dims[..player].iter().sum()
    }

    /// Copy of block (i, j).
    pub fn block(&self, i: usize, j: usize) -> DMatrix<f64> {
        let (r, c) = (self.block_start(i), self.block_start(j));
        self.entries.view((r, c), (self.dims[i], self.dims[j])).into_owned()
    }

    /// Largest entry of `J - J^T`; zero exactly for potential games.
    pub fn asymmetry(&self) -> f64 {
        let t = self.entries.transpose();
        (&self.entries - t).iter().map(|v| v.abs()).fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        crate::linalg::max_abs(&self.entries)
    }
}

/// Result of validating the exact derivatives against central finite
/// differences of the costs (for `omega`) and of `omega` (for `D omega`).
///
/// Errors are max entrywise deviations scaled by `1 + |exact|`. When the
/// step is too small to perturb some coordinate of `x` at all,
/// `degenerate_step` is set instead of silently reporting zeros.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DerivativeCheck {
    pub gradient_error: f64,
    pub jacobian_error: f64,
    pub degenerate_step: bool,
}

/// An n-player continuous game with polynomial costs.
#[derive(Debug, Clone, PartialEq)]
pub struct Game {
    dims: Vec<usize>,
    costs: Vec<PolynomialCost>,
    label: String,
    // Precomputed exact derivatives: omega_polys[r] = d f_{player(r)} / d x_r,
    // jacobian_polys[r][c] = d omega_r / d x_c.
    omega_polys: Vec<PolynomialCost>,
    jacobian_polys: Vec<Vec<PolynomialCost>>,
}

impl Game {
    /// Build a game from per-player dimensions and costs. Requires at least
    /// two players and costs over the full joint variable.
    pub fn new(dims: Vec<usize>, costs: Vec<PolynomialCost>, label: impl Into<String>) -> Result<Self> {
        if dims.len() < 2 {
            return Err(Error::InvalidParameter(format!(
                "a game needs at least 2 players, got {}",
                dims.len()
            )));
        }
        if dims.iter().any(|&d| d == 0) {
            return Err(Error::InvalidParameter(
                "per-player dimensions must be positive".into(),
            ));
        }
        if costs.len() != dims.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} costs for {} players",
                costs.len(),
                dims.len()
            )));
        }
        let m: usize = dims.iter().sum();
        for (i, c) in costs.iter().enumerate() {
            if !c.conforms_to(m) {
                return Err(Error::DimensionMismatch(format!(
                    "cost of player {} is over {:?} variables, game dimension is {}",
                    i,
                    c.num_vars(),
                    m
                )));
            }
        }

        let mut omega_polys = Vec::with_capacity(m);
        for (i, &di) in dims.iter().enumerate() {
            let start: usize = dims[..i].iter().sum();
            for k in 0..di {
                omega_polys.push(costs[i].partial(start + k));
            }
        }
        let jacobian_polys = omega_polys
            .iter()
            .map(|w| (0..m).map(|c| w.partial(c)).collect())
            .collect();

        Ok(Game {
            dims,
            costs,
            label: label.into(),
            omega_polys,
            jacobian_polys,
        })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self) -> usize {
        self.omega_polys.len()
    }

    pub fn num_players(&self) -> usize {
        self.dims.len()
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn cost(&self, player: usize) -> &PolynomialCost {
        &self.costs[player]
    }

    /// Zero profile with this game's block structure.
    pub fn origin(&self) -> StrategyProfile {
        StrategyProfile::new(vec![0.0; self.dim()], self.dims.clone()).expect("valid dims")
    }

    /// Profile with the given coordinates and this game's block structure.
    pub fn profile(&self, values: Vec<f64>) -> Result<StrategyProfile> {
        StrategyProfile::new(values, self.dims.clone())
    }

    fn check_profile(&self, x: &StrategyProfile) -> Result<()> {
        if x.dims() != self.dims.as_slice() {
            return Err(Error::DimensionMismatch(format!(
                "profile dims {:?} against game dims {:?}",
                x.dims(),
                self.dims
            )));
        }
        Ok(())
    }

    /// Player `player`'s cost at `x`.
    pub fn eval_cost(&self, player: usize, x: &StrategyProfile) -> Result<f64> {
        self.check_profile(x)?;
        if player >= self.num_players() {
            return Err(Error::InvalidParameter(format!(
                "player index {} out of range for {} players",
                player,
                self.num_players()
            )));
        }
        Ok(self.costs[player].eval(x.values()))
    }

    /// The simultaneous-gradient field at `x`.
    pub fn omega(&self, x: &StrategyProfile) -> Result<JointGradient> {
        self.check_profile(x)?;
        Ok(JointGradient {
            values: self.omega_polys.iter().map(|p| p.eval(x.values())).collect(),
        })
    }

    /// The game Jacobian at `x`; entry (r, c) is `d omega_r / d x_c`.
    pub fn game_jacobian(&self, x: &StrategyProfile) -> Result<GameJacobian> {
        self.check_profile(x)?;
        let m = self.dim();
        let entries = DMatrix::from_fn(m, m, |r, c| self.jacobian_polys[r][c].eval(x.values()));
        Ok(GameJacobian {
            entries,
            dims: self.dims.clone(),
        })
    }

    /// Validate the exact derivatives at `x` against central finite
    /// differences with step `h`.
    pub fn finite_difference_check(&self, x: &StrategyProfile, h: f64) -> Result<DerivativeCheck> {
        self.check_profile(x)?;
        if !(h > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "finite-difference step must be positive, got {h}"
            )));
        }
        let m = self.dim();
        let base = x.values().to_vec();
        let degenerate_step = base.iter().any(|&v| v + h == v || v - h == v);

        let perturbed = |k: usize, delta: f64| {
            let mut v = base.clone();
            v[k] += delta;
            v
        };

        let omega_exact = self.omega(x)?;
        let mut gradient_error: f64 = 0.0;
        for (i, &di) in self.dims.iter().enumerate() {
            let start: usize = self.dims[..i].iter().sum();
            for k in start..start + di {
                let fp = self.costs[i].eval(&perturbed(k, h));
                let fm = self.costs[i].eval(&perturbed(k, -h));
                let fd = (fp - fm) / (2.0 * h);
                let exact = omega_exact.values()[k];
                gradient_error = gradient_error.max((fd - exact).abs() / (1.0 + exact.abs()));
            }
        }

        let jac_exact = self.game_jacobian(x)?;
        let mut jacobian_error: f64 = 0.0;
        for c in 0..m {
            let xp = x.with_values(perturbed(c, h))?;
            let xm = x.with_values(perturbed(c, -h))?;
            let wp = self.omega(&xp)?;
            let wm = self.omega(&xm)?;
            for r in 0..m {
                let fd = (wp.values()[r] - wm.values()[r]) / (2.0 * h);
                let exact = jac_exact.matrix()[(r, c)];
                jacobian_error = jacobian_error.max((fd - exact).abs() / (1.0 + exact.abs()));
            }
        }

        Ok(DerivativeCheck {
            gradient_error,
            jacobian_error,
            degenerate_step,
        })
    }
}

#[derive(Serialize, Deserialize)]
struct GameWire {
    dims: Vec<usize>,
    costs: Vec<PolynomialCost>,
    label: String,
}

impl Serialize for Game {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        GameWire {
            dims: self.dims.clone(),
            costs: self.costs.clone(),
            label: self.label.clone(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Game {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let wire = GameWire::deserialize(deserializer)?;
        Game::new(wire.dims, wire.costs, wire.label).map_err(D::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn profile2(a: f64, b: f64) -> StrategyProfile {
        StrategyProfile::scalar(vec![a, b])
    }

    #[test]
    fn eval_cost_examples() {
        let g = make_quadratic_general_sum(1.0, 1.0, -1.0, -0.5);
        // All terms vanish at the origin.
        assert_eq!(g.eval_cost(0, &profile2(0.0, 0.0)).unwrap(), 0.0);
        // f_1 = (a/2) x1^2 + b x1 x2 at (2, 1): 0.5*4 + 1*2 = 4.
        assert_eq!(g.eval_cost(0, &profile2(2.0, 1.0)).unwrap(), 4.0);

        // Player 2 of the zero-sum game holds -f.
        let zs = make_quadratic_zero_sum(2.0, 2.0, 1.0);
        assert_eq!(zs.eval_cost(1, &profile2(1.0, 1.0)).unwrap(), -3.5);
    }

    #[test]
    fn omega_examples() {
        for g in [
            make_quadratic_general_sum(1.0, 1.0, -1.0, -0.5),
            make_quadratic_zero_sum(2.0, 2.0, 1.0),
            make_quadratic_potential(1.0, 2.0, 1.0),
        ] {
            // Homogeneous quadratic costs have zero gradient at the origin.
            assert_eq!(g.omega(&g.origin()).unwrap().values(), &[0.0, 0.0]);
        }

        let pot = make_quadratic_potential(1.0, 2.0, 1.0);
        assert_eq!(pot.omega(&profile2(1.0, 1.0)).unwrap().values(), &[3.0, 3.0]);

        let chain = make_morse_smale_chain(3).unwrap();
        let x = StrategyProfile::scalar(vec![1.0, 0.5, -0.2]);
        assert_eq!(chain.omega(&x).unwrap().values(), &[0.5, -0.2, 0.0]);
    }

    #[test]
    fn jacobian_examples() {
        let g = make_quadratic_general_sum(0.7, -1.3, 2.0, 0.4);
        let j = g.game_jacobian(&profile2(3.0, -2.0)).unwrap();
        let expect = DMatrix::from_row_slice(2, 2, &[0.7, -1.3, 2.0, 0.4]);
        assert_eq!(j.matrix(), &expect);

        let zs = make_quadratic_zero_sum(1.5, 0.3, -0.8);
        let j = zs.game_jacobian(&profile2(0.1, 4.0)).unwrap();
        let expect = DMatrix::from_row_slice(2, 2, &[1.5, 0.3, -0.3, 0.8]);
        assert_eq!(j.matrix(), &expect);

        let chain = make_morse_smale_chain(3).unwrap();
        let j = chain
            .game_jacobian(&StrategyProfile::scalar(vec![1.0, 0.0, 0.0]))
            .unwrap();
        let expect = DMatrix::from_row_slice(3, 3, &[0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 2.0, 0.0, 0.0]);
        assert_eq!(j.matrix(), &expect);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let g = make_quadratic_potential(1.0, 0.0, 1.0);
        let bad = StrategyProfile::scalar(vec![1.0, 2.0, 3.0]);
        assert!(matches!(g.omega(&bad), Err(Error::DimensionMismatch(_))));
        assert!(matches!(g.eval_cost(0, &bad), Err(Error::DimensionMismatch(_))));
        assert!(matches!(g.game_jacobian(&bad), Err(Error::DimensionMismatch(_))));
        assert!(g.eval_cost(2, &profile2(0.0, 0.0)).is_err());
    }

    #[test]
    fn finite_difference_check_validates_exact_derivatives() {
        let g = make_quadratic_potential(1.0, 2.0, 1.0);
        let x = profile2(0.3, -0.7);
        let check = g.finite_difference_check(&x, 1e-5).unwrap();
        assert!(check.gradient_error < 1e-6, "{check:?}");
        assert!(check.jacobian_error < 1e-6, "{check:?}");
        assert!(!check.degenerate_step);

        let chain = make_morse_smale_chain(3).unwrap();
        let x = StrategyProfile::scalar(vec![1.0, 1.0, 1.0]);
        let check = chain.finite_difference_check(&x, 1e-5).unwrap();
        assert!(check.gradient_error < 1e-6 && check.jacobian_error < 1e-6);
    }

    #[test]
    fn finite_difference_check_flags_degenerate_step() {
        let g = make_quadratic_potential(1.0, 0.0, 1.0);
        let x = profile2(1.0, 1.0);
        // A step below the representable resolution at 1.0 cannot perturb x.
        let check = g.finite_difference_check(&x, 1e-18).unwrap();
        assert!(check.degenerate_step);
        assert!(g.finite_difference_check(&x, 0.0).is_err());
    }

    #[test]
    fn serde_round_trip_preserves_derivatives() {
        let g = make_van_der_pol_game(1.0).unwrap();
        let json = serde_json::to_string(&g).unwrap();
        let back: Game = serde_json::from_str(&json).unwrap();
        assert_eq!(back, g);
        let x = profile2(2.0, 1.0);
        assert_eq!(back.omega(&x).unwrap(), g.omega(&x).unwrap());
    }
}
