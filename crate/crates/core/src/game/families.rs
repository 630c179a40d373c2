//! Built-in game families.
//!
//! All families are scalar-per-player. The three quadratic families have a
//! constant game Jacobian, which makes the origin's classification a pure
//! function of the coefficients:
//!
//! - general-sum: `f_1 = (a/2) x1^2 + b x1 x2`, `f_2 = (d/2) x2^2 + c x1 x2`,
//!   so `D omega = [[a, b], [c, d]]`;
//! - zero-sum: costs `(f, -f)` with `f = (a/2) x1^2 + b x1 x2 + (c/2) x2^2`,
//!   so `D omega = [[a, b], [-b, -c]]`;
//! - potential: costs `(f, f)`, so `D omega = [[a, b], [b, c]]` (symmetric).
//!
//! The chain game couples `n` scalar players in a ring-like chain whose
//! gradient field is not a gradient flow; the Van der Pol game embeds the
//! classic oscillator as the gradient-play flow of a two-player game.

use std::collections::BTreeMap;

use super::{Game, PolynomialCost};
use crate::error::{Error, Result};

/// Labels accepted by [`Game::from_family_spec`].
pub const FAMILY_LABELS: [&str; 5] = [
    "general-sum-quadratic",
    "zero-sum-quadratic",
    "potential-quadratic",
    "morse-smale-chain",
    "van-der-pol",
];

fn quad(terms: Vec<(f64, Vec<u32>)>) -> PolynomialCost {
    PolynomialCost::from_terms(terms).expect("well-formed family polynomial")
}

/// Two-player game `f_1 = (a/2) x1^2 + b x1 x2`, `f_2 = (d/2) x2^2 + c x1 x2`.
pub fn make_quadratic_general_sum(a: f64, b: f64, c: f64, d: f64) -> Game {
    let f1 = quad(vec![(a / 2.0, vec![2, 0]), (b, vec![1, 1])]);
    let f2 = quad(vec![(d / 2.0, vec![0, 2]), (c, vec![1, 1])]);
    Game::new(
        vec![1, 1],
        vec![f1, f2],
        format!("general-sum-quadratic:a={a},b={b},c={c},d={d}"),
    )
    .expect("two scalar players")
}

/// Two-player zero-sum game `(f, -f)` with
/// `f = (a/2) x1^2 + b x1 x2 + (c/2) x2^2`.
pub fn make_quadratic_zero_sum(a: f64, b: f64, c: f64) -> Game {
    let f = vec![(a / 2.0, vec![2, 0]), (b, vec![1, 1]), (c / 2.0, vec![0, 2])];
    let neg: Vec<(f64, Vec<u32>)> = f.iter().map(|(c, e)| (-c, e.clone())).collect();
    Game::new(
        vec![1, 1],
        vec![quad(f), quad(neg)],
        format!("zero-sum-quadratic:a={a},b={b},c={c}"),
    )
    .expect("two scalar players")
}

/// Two-player potential game `(f, f)` with
/// `f = (a/2) x1^2 + b x1 x2 + (c/2) x2^2`; its Jacobian is symmetric.
pub fn make_quadratic_potential(a: f64, b: f64, c: f64) -> Game {
    let f = quad(vec![(a / 2.0, vec![2, 0]), (b, vec![1, 1]), (c / 2.0, vec![0, 2])]);
    Game::new(
        vec![1, 1],
        vec![f.clone(), f],
        format!("potential-quadratic:a={a},b={b},c={c}"),
    )
    .expect("two scalar players")
}

/// n-player chain game: `f_i = x_i x_{i+1}` for `i < n` and
/// `f_n = x_n (x_1^2 - 1)`, giving the gradient field
/// `omega = (x_2, ..., x_n, x_1^2 - 1)` with critical points at
/// `(+/-1, 0, ..., 0)`.
pub fn make_morse_smale_chain(n: usize) -> Result<Game> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!(
            "chain game needs at least 2 players, got {n}"
        )));
    }
    let mut costs = Vec::with_capacity(n);
    for i in 0..n - 1 {
        let mut e = vec![0u32; n];
        e[i] = 1;
        e[i + 1] = 1;
        costs.push(quad(vec![(1.0, e)]));
    }
    let mut e_sq = vec![0u32; n];
    e_sq[0] = 2;
    e_sq[n - 1] = 1;
    let mut e_lin = vec![0u32; n];
    e_lin[n - 1] = 1;
    costs.push(quad(vec![(1.0, e_sq), (-1.0, e_lin)]));
    Game::new(vec![1; n], costs, format!("morse-smale-chain:n={n}"))
}

/// Two-player game whose gradient-play flow `xdot = -omega(x)` is the Van
/// der Pol oscillator `(x2, mu (1 - x1^2) x2 - x1)`:
/// `f_1 = -x1 x2`, `f_2 = -(mu/2) x2^2 + (mu/2) x1^2 x2^2 + x1 x2`.
pub fn make_van_der_pol_game(mu: f64) -> Result<Game> {
    if !(mu > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "Van der Pol parameter must be positive, got {mu}"
        )));
    }
    let f1 = quad(vec![(-1.0, vec![1, 1])]);
    let f2 = quad(vec![
        (-mu / 2.0, vec![0, 2]),
        (mu / 2.0, vec![2, 2]),
        (1.0, vec![1, 1]),
    ]);
    Game::new(vec![1, 1], vec![f1, f2], format!("van-der-pol:mu={mu}"))
}

fn parse_params(s: &str) -> Result<BTreeMap<String, f64>> {
    let mut out = BTreeMap::new();
    if s.trim().is_empty() {
        return Ok(out);
    }
    for tok in s.split(',') {
        let (key, val) = tok.split_once('=').ok_or_else(|| {
            Error::InvalidParameter(format!("expected key=value, got `{tok}`"))
        })?;
        let v: f64 = val.trim().parse().map_err(|_| {
            Error::InvalidParameter(format!("`{val}` is not a number in `{tok}`"))
        })?;
        if out.insert(key.trim().to_string(), v).is_some() {
            return Err(Error::InvalidParameter(format!("duplicate parameter `{key}`")));
        }
    }
    Ok(out)
}

fn take(params: &mut BTreeMap<String, f64>, key: &str, label: &str) -> Result<f64> {
    params.remove(key).ok_or_else(|| {
        Error::InvalidParameter(format!("family `{label}` needs parameter `{key}`"))
    })
}

impl Game {
    /// Build a built-in family from `label:params`, e.g.
    /// `"zero-sum-quadratic:a=2,b=2,c=1"` or `"morse-smale-chain:n=3"`.
    pub fn from_family_spec(spec: &str) -> Result<Game> {
        let (label, params_str) = spec.split_once(':').unwrap_or((spec, ""));
        Self::from_family(label, params_str)
    }

    /// Build a built-in family from separate label and `k=v,...` parameters.
    pub fn from_family(label: &str, params_str: &str) -> Result<Game> {
        let mut p = parse_params(params_str)?;
        let game = match label {
            "general-sum-quadratic" => {
                let (a, b) = (take(&mut p, "a", label)?, take(&mut p, "b", label)?);
                let (c, d) = (take(&mut p, "c", label)?, take(&mut p, "d", label)?);
                make_quadratic_general_sum(a, b, c, d)
            }
            "zero-sum-quadratic" => {
                let (a, b, c) = (
                    take(&mut p, "a", label)?,
                    take(&mut p, "b", label)?,
                    take(&mut p, "c", label)?,
                );
                make_quadratic_zero_sum(a, b, c)
            }
            "potential-quadratic" => {
                let (a, b, c) = (
                    take(&mut p, "a", label)?,
                    take(&mut p, "b", label)?,
                    take(&mut p, "c", label)?,
                );
                make_quadratic_potential(a, b, c)
            }
            "morse-smale-chain" => {
                let n = take(&mut p, "n", label)?;
                if n.fract() != 0.0 || n < 0.0 {
                    return Err(Error::InvalidParameter(format!(
                        "chain size must be a non-negative integer, got {n}"
                    )));
                }
                make_morse_smale_chain(n as usize)?
            }
            "van-der-pol" => make_van_der_pol_game(take(&mut p, "mu", label)?)?,
            other => {
                return Err(Error::InvalidParameter(format!(
                    "unknown family `{other}`; known families: {}",
                    FAMILY_LABELS.join(", ")
                )));
            }
        };
        if let Some(extra) = p.keys().next() {
            return Err(Error::InvalidParameter(format!(
                "family `{label}` does not take parameter `{extra}`"
            )));
        }
        Ok(game)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::StrategyProfile;

    #[test]
    fn decoupled_general_sum_has_identity_jacobian() {
        let g = make_quadratic_general_sum(1.0, 0.0, 0.0, 1.0);
        let j = g.game_jacobian(&g.origin()).unwrap();
        assert_eq!(j.matrix(), &nalgebra::DMatrix::identity(2, 2));
    }

    #[test]
    fn bilinear_zero_sum_is_the_rotation_field() {
        let g = make_quadratic_zero_sum(0.0, 1.0, 0.0);
        let j = g.game_jacobian(&g.origin()).unwrap();
        assert_eq!(
            j.matrix(),
            &nalgebra::DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0])
        );
    }

    #[test]
    fn chain_game_sizes() {
        assert!(make_morse_smale_chain(1).is_err());
        let g = make_morse_smale_chain(2).unwrap();
        // omega = (x2, x1^2 - 1); critical points (+/-1, 0).
        for s in [1.0, -1.0] {
            let x = StrategyProfile::scalar(vec![s, 0.0]);
            assert_eq!(g.omega(&x).unwrap().norm(), 0.0);
        }
    }

    #[test]
    fn van_der_pol_field() {
        assert!(make_van_der_pol_game(0.0).is_err());
        assert!(make_van_der_pol_game(-1.0).is_err());
        let g = make_van_der_pol_game(1.0).unwrap();
        // -omega(2, 1) = (1, 1*(1-4)*1 - 2) = (1, -5).
        let w = g.omega(&StrategyProfile::scalar(vec![2.0, 1.0])).unwrap();
        let minus: Vec<f64> = w.values().iter().map(|v| -v).collect();
        assert_eq!(minus, vec![1.0, -5.0]);
        // Unique critical point at the origin.
        assert_eq!(g.omega(&g.origin()).unwrap().norm(), 0.0);
    }

    #[test]
    fn family_spec_round_trips_through_labels() {
        let g = Game::from_family_spec("zero-sum-quadratic:a=2,b=2,c=1").unwrap();
        assert_eq!(g.label(), "zero-sum-quadratic:a=2,b=2,c=1");
        let again = Game::from_family_spec(g.label()).unwrap();
        assert_eq!(again, g);
    }

    #[test]
    fn family_spec_errors_name_the_bad_token() {
        let err = Game::from_family_spec("potential-quadratic:a=1,b=oops,c=1").unwrap_err();
        assert!(err.to_string().contains("oops"), "{err}");
        let err = Game::from_family_spec("potential-quadratic:a=1,b=2").unwrap_err();
        assert!(err.to_string().contains('c'), "{err}");
        let err = Game::from_family_spec("potential-quadratic:a=1,b=2,c=1,z=9").unwrap_err();
        assert!(err.to_string().contains('z'), "{err}");
        assert!(Game::from_family_spec("no-such-family:a=1").is_err());
    }
}
