//! Limit-cycle detection for the gradient flow `xdot = -omega(x)`.
//!
//! The orbit is integrated with fixed-step classical RK4. After a transient,
//! a Poincare section is placed through an anchor point orthogonal to the
//! flow direction; each signed crossing of the section is refined by
//! bisection on the step fraction, and a cycle is declared once a crossing
//! returns within tolerance of an earlier one. The monodromy matrix is then
//! obtained by integrating the variational equation `Mdot = -Domega(x(t)) M`
//! over one period along the cycle; its eigenvalues are the flow's
//! multipliers, one of which is trivially 1 (the flow direction) and is
//! removed before the stability call.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::ser::SerializeSeq;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::game::{Game, StrategyProfile};
use crate::linalg;

/// Fixed-step integration window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntegrationConfig {
    pub dt: f64,
    pub t_max: f64,
}

impl IntegrationConfig {
    pub fn new(dt: f64, t_max: f64) -> Result<Self> {
        if !(dt > 0.0) || !(t_max > dt) {
            return Err(Error::InvalidParameter(format!(
                "integration needs 0 < dt < t_max, got dt={dt}, t_max={t_max}"
            )));
        }
        Ok(IntegrationConfig { dt, t_max })
    }
}

/// Detection tolerances. `transient_fraction` of `t_max` is integrated
/// before the section is placed; a crossing within `anchor_tol` of an
/// earlier one closes the cycle; multipliers within `hyperbolicity_tol` of
/// the unit circle leave the cycle unclassified.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CycleDetectOptions {
    pub transient_fraction: f64,
    pub anchor_tol: f64,
    pub hyperbolicity_tol: f64,
    /// Below this field norm the orbit has settled onto an equilibrium.
    pub stationary_tol: f64,
    pub blowup: f64,
    pub max_crossings: usize,
}

impl Default for CycleDetectOptions {
    fn default() -> Self {
        CycleDetectOptions {
            transient_fraction: 0.25,
            anchor_tol: 1e-4,
            hyperbolicity_tol: 1e-3,
            stationary_tol: 1e-9,
            blowup: 1e6,
            max_crossings: 256,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CycleClass {
    LinearlyStable,
    LinearlyUnstable,
    NonHyperbolic,
}

fn serialize_multipliers<S: Serializer>(
    vals: &[Complex64],
    serializer: S,
) -> std::result::Result<S::Ok, S::Error> {
    let mut seq = serializer.serialize_seq(Some(vals.len()))?;
    for v in vals {
        seq.serialize_element(&[v.re, v.im])?;
    }
    seq.end()
}

/// A detected periodic orbit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CycleReport {
    pub period: f64,
    pub anchor: StrategyProfile,
    /// Characteristic multipliers: monodromy eigenvalues with the trivial
    /// unit multiplier removed; serialized as `[re, im]` pairs.
    #[serde(serialize_with = "serialize_multipliers")]
    pub multipliers: Vec<Complex64>,
    /// The removed near-unit multiplier, kept as an integration sanity check.
    pub trivial_multiplier: [f64; 2],
    pub classification: CycleClass,
}

/// One classical RK4 step of `xdot = -omega(x)`.
pub fn rk4_flow_step(game: &Game, x: &StrategyProfile, dt: f64) -> Result<StrategyProfile> {
    let f = |p: &StrategyProfile| -> Result<Vec<f64>> {
        Ok(game.omega(p)?.into_values().iter().map(|v| -v).collect())
    };
    let add = |p: &StrategyProfile, k: &[f64], s: f64| -> Result<StrategyProfile> {
        p.with_values(
            p.values()
                .iter()
                .zip(k)
                .map(|(xi, ki)| xi + s * ki)
                .collect(),
        )
    };
    let k1 = f(x)?;
    let k2 = f(&add(x, &k1, dt / 2.0)?)?;
    let k3 = f(&add(x, &k2, dt / 2.0)?)?;
    let k4 = f(&add(x, &k3, dt)?)?;
    x.with_values(
        x.values()
            .iter()
            .enumerate()
            .map(|(i, xi)| xi + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
            .collect(),
    )
}

/// Integrate the flow for `t` time units with fixed step `dt` (the last step
/// is shortened to land exactly on `t`).
pub fn integrate_flow(game: &Game, x0: &StrategyProfile, dt: f64, t: f64) -> Result<StrategyProfile> {
    let mut x = x0.clone();
    let mut remaining = t;
    while remaining > 0.0 {
        let h = dt.min(remaining);
        x = rk4_flow_step(game, &x, h)?;
        remaining -= h;
    }
    Ok(x)
}

/// Detect a limit cycle of the gradient flow starting from `x0`, with
/// default tolerances. `None` means no recurrence was found within `t_max`
/// (absence of detection, not proof of absence).
pub fn detect_limit_cycle(
    game: &Game,
    x0: &StrategyProfile,
    integration: &IntegrationConfig,
) -> Result<Option<CycleReport>> {
    detect_limit_cycle_with(game, x0, integration, &CycleDetectOptions::default())
}

pub fn detect_limit_cycle_with(
    game: &Game,
    x0: &StrategyProfile,
    integration: &IntegrationConfig,
    opts: &CycleDetectOptions,
) -> Result<Option<CycleReport>> {
    if x0.dims() != game.dims() {
        return Err(Error::DimensionMismatch(format!(
            "initial profile dims {:?} against game dims {:?}",
            x0.dims(),
            game.dims()
        )));
    }
    let dt = integration.dt;

    // Transient: let the orbit approach its limit set.
    let transient = opts.transient_fraction * integration.t_max;
    let anchor = integrate_flow(game, x0, dt, transient)?;
    if !anchor.is_finite() || anchor.norm() > opts.blowup {
        return Ok(None);
    }
    let w = game.omega(&anchor)?;
    if w.norm() < opts.stationary_tol {
        // Settled onto an equilibrium; equilibria are not cycles.
        return Ok(None);
    }

    // Section through the anchor, orthogonal to the flow direction there.
    let mut direction: Vec<f64> = w.values().iter().map(|v| -v).collect();
    let dnorm = direction.iter().map(|v| v * v).sum::<f64>().sqrt();
    direction.iter_mut().for_each(|v| *v /= dnorm);
    let section = |p: &StrategyProfile| -> f64 {
        p.values()
            .iter()
            .zip(&direction)
            .zip(anchor.values())
            .map(|((xv, dv), av)| dv * (xv - av))
            .sum()
    };

    let mut crossings: Vec<(f64, StrategyProfile)> = Vec::new();
    let mut x = anchor.clone();
    let mut s_prev = 0.0;
    let mut t = 0.0;
    let budget = integration.t_max - transient;

    while t < budget {
        let x_next = rk4_flow_step(game, &x, dt)?;
        if !x_next.is_finite() || x_next.norm() > opts.blowup {
            return Ok(None);
        }
        if game.omega(&x_next)?.norm() < opts.stationary_tol {
            return Ok(None);
        }
        let s_next = section(&x_next);

        // Crossing in the flow direction: section value goes - to +.
        if s_prev < 0.0 && s_next >= 0.0 {
            let (t_cross, p_cross) = refine_crossing(game, &x, dt, &section)?;
            let t_abs = t + t_cross;
            // Match against earlier crossings, most recent first, so the
            // period is the fundamental one when the section is clean.
            let hit = crossings
                .iter()
                .rev()
                .find(|(_, p)| p.distance(&p_cross) <= opts.anchor_tol)
                .map(|(tj, _)| t_abs - tj);
            if let Some(period) = hit {
                return classify_cycle(game, &p_cross, period, dt, opts).map(Some);
            }
            crossings.push((t_abs, p_cross));
            if crossings.len() > opts.max_crossings {
                return Ok(None);
            }
        }

        x = x_next;
        s_prev = s_next;
        t += dt;
    }
    Ok(None)
}

/// Bisect the step fraction inside `[0, dt]` to land on the section.
fn refine_crossing(
    game: &Game,
    x_before: &StrategyProfile,
    dt: f64,
    section: &dyn Fn(&StrategyProfile) -> f64,
) -> Result<(f64, StrategyProfile)> {
    let mut lo = 0.0;
    let mut hi = dt;
    let mut point = rk4_flow_step(game, x_before, dt)?;
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        let candidate = rk4_flow_step(game, x_before, mid)?;
        if section(&candidate) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
            point = candidate;
        }
    }
    Ok((hi, point))
}

/// Integrate the variational equation over one period from the anchor and
/// classify by the monodromy eigenvalues.
fn classify_cycle(
    game: &Game,
    anchor: &StrategyProfile,
    period: f64,
    dt: f64,
    opts: &CycleDetectOptions,
) -> Result<CycleReport> {
    let m = game.dim();
    let steps = (period / dt).ceil().max(16.0) as usize;
    let h = period / steps as f64;

    let mut x = DVector::from_row_slice(anchor.values());
    let mut mono = DMatrix::<f64>::identity(m, m);
    let deriv = |x: &DVector<f64>, mat: &DMatrix<f64>| -> Result<(DVector<f64>, DMatrix<f64>)> {
        let p = anchor.with_values(x.iter().copied().collect())?;
        let w = DVector::from_vec(game.omega(&p)?.into_values());
        let j = game.game_jacobian(&p)?.matrix().clone();
        Ok((-w, -(j * mat)))
    };
    for _ in 0..steps {
        let (k1x, k1m) = deriv(&x, &mono)?;
        let (k2x, k2m) = deriv(&(&x + &k1x * (h / 2.0)), &(&mono + &k1m * (h / 2.0)))?;
        let (k3x, k3m) = deriv(&(&x + &k2x * (h / 2.0)), &(&mono + &k2m * (h / 2.0)))?;
        let (k4x, k4m) = deriv(&(&x + &k3x * h), &(&mono + &k3m * h))?;
        x += (k1x + k2x * 2.0 + k3x * 2.0 + k4x) * (h / 6.0);
        mono += (k1m + k2m * 2.0 + k3m * 2.0 + k4m) * (h / 6.0);
    }

    let mut eigen = linalg::eigenvalues(&mono)?;
    // Remove the trivial flow-direction multiplier (nearest to 1).
    let trivial_idx = eigen
        .iter()
        .enumerate()
        .min_by(|(_, a), (_, b)| {
            let da = (*a - Complex64::new(1.0, 0.0)).norm();
            let db = (*b - Complex64::new(1.0, 0.0)).norm();
            da.partial_cmp(&db).unwrap()
        })
        .map(|(i, _)| i)
        .expect("monodromy has at least one eigenvalue");
    let trivial = eigen.remove(trivial_idx);

    let tol = opts.hyperbolicity_tol;
    let all_inside = eigen.iter().all(|l| l.norm() < 1.0 - tol);
    let any_outside = eigen.iter().any(|l| l.norm() > 1.0 + tol);
    let classification = if all_inside {
        CycleClass::LinearlyStable
    } else if any_outside {
        CycleClass::LinearlyUnstable
    } else {
        CycleClass::NonHyperbolic
    };

    Ok(CycleReport {
        period,
        anchor: anchor.clone(),
        multipliers: eigen,
        trivial_multiplier: [trivial.re, trivial.im],
        classification,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{
        make_quadratic_potential, make_quadratic_zero_sum, make_van_der_pol_game,
    };

    #[test]
    fn rotation_field_is_a_non_hyperbolic_cycle_of_period_two_pi() {
        let g = make_quadratic_zero_sum(0.0, 1.0, 0.0);
        let x0 = g.profile(vec![1.0, 0.0]).unwrap();
        let integ = IntegrationConfig::new(1e-3, 50.0).unwrap();
        let report = detect_limit_cycle(&g, &x0, &integ).unwrap().expect("cycle");
        assert!((report.period - 2.0 * std::f64::consts::PI).abs() < 1e-6, "{}", report.period);
        assert_eq!(report.classification, CycleClass::NonHyperbolic);
        assert_eq!(report.multipliers.len(), 1);
        assert!((report.multipliers[0].norm() - 1.0).abs() < 1e-6);
        assert!((report.trivial_multiplier[0] - 1.0).abs() < 1e-3);
    }

    #[test]
    fn van_der_pol_cycle_is_stable_with_known_period() {
        let g = make_van_der_pol_game(1.0).unwrap();
        let x0 = g.profile(vec![0.1, 0.0]).unwrap();
        let integ = IntegrationConfig::new(1e-3, 200.0).unwrap();
        let report = detect_limit_cycle(&g, &x0, &integ).unwrap().expect("cycle");
        assert!((report.period - 6.6633).abs() < 0.05, "{}", report.period);
        assert_eq!(report.classification, CycleClass::LinearlyStable);
        assert!(report.multipliers[0].norm() < 1.0);
        assert!((report.trivial_multiplier[0] - 1.0).abs() < 1e-3);
    }

    #[test]
    fn gradient_flows_have_no_cycles() {
        let stable = make_quadratic_potential(1.0, 0.5, 1.0);
        let saddle = make_quadratic_potential(1.0, 2.0, 1.0);
        let integ = IntegrationConfig::new(1e-3, 50.0).unwrap();
        for (g, x0) in [
            (&stable, vec![1.0, -0.3]),
            (&saddle, vec![0.5, 0.1]),
        ] {
            let x0 = g.profile(x0).unwrap();
            assert!(detect_limit_cycle(g, &x0, &integ).unwrap().is_none());
        }
    }

    #[test]
    fn rk4_conserves_the_rotation_invariant() {
        // The rotation flow preserves x1^2 + x2^2; RK4 at dt=1e-3 holds it
        // to far better than 1e-6 over one period.
        let g = make_quadratic_zero_sum(0.0, 1.0, 0.0);
        let mut x = g.profile(vec![1.0, 0.0]).unwrap();
        let dt = 1e-3;
        let steps = (2.0 * std::f64::consts::PI / dt) as usize;
        for _ in 0..steps {
            x = rk4_flow_step(&g, &x, dt).unwrap();
        }
        let r2 = x.values()[0].powi(2) + x.values()[1].powi(2);
        assert!((r2 - 1.0).abs() < 1e-6, "drift {}", (r2 - 1.0).abs());
    }

    #[test]
    fn integration_config_validation() {
        assert!(IntegrationConfig::new(0.0, 1.0).is_err());
        assert!(IntegrationConfig::new(0.1, 0.05).is_err());
    }
}
