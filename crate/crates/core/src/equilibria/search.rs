use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::game::{Game, StrategyProfile};

/// Seeds and tolerances for the critical-point search.
#[derive(Debug, Clone)]
pub struct CriticalPointSearchConfig {
    pub seeds: Vec<StrategyProfile>,
    pub newton_max_iters: usize,
    pub newton_tol: f64,
    pub dedup_radius: f64,
}

impl CriticalPointSearchConfig {
    pub fn new(
        seeds: Vec<StrategyProfile>,
        newton_max_iters: usize,
        newton_tol: f64,
        dedup_radius: f64,
    ) -> Result<Self> {
        if seeds.is_empty() {
            return Err(Error::InvalidParameter("search needs at least one seed".into()));
        }
        if !(newton_tol > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "newton tolerance must be positive, got {newton_tol}"
            )));
        }
        if !(dedup_radius > newton_tol) {
            return Err(Error::InvalidParameter(format!(
                "dedup radius {dedup_radius} must exceed the newton tolerance {newton_tol}"
            )));
        }
        Ok(CriticalPointSearchConfig {
            seeds,
            newton_max_iters,
            newton_tol,
            dedup_radius,
        })
    }

    /// Uniform grid of seeds over `[lo, hi]^m` for the given game, with
    /// `per_axis` points per axis.
    pub fn grid(game: &Game, lo: f64, hi: f64, per_axis: usize) -> Result<Vec<StrategyProfile>> {
        if per_axis < 2 || !(hi > lo) {
            return Err(Error::InvalidParameter(format!(
                "grid needs per_axis >= 2 and hi > lo, got per_axis={per_axis}, [{lo}, {hi}]"
            )));
        }
        let m = game.dim();
        let total = (per_axis as u128).pow(m as u32);
        if total > 1_000_000 {
            return Err(Error::InvalidParameter(format!(
                "grid of {total} seeds is too large"
            )));
        }
        let step = (hi - lo) / (per_axis - 1) as f64;
        let mut seeds = Vec::with_capacity(total as usize);
        let mut idx = vec![0usize; m];
        loop {
            let values: Vec<f64> = idx.iter().map(|&k| lo + step * k as f64).collect();
            seeds.push(game.profile(values)?);
            // Odometer increment.
            let mut d = 0;
            loop {
                idx[d] += 1;
                if idx[d] < per_axis {
                    break;
                }
                idx[d] = 0;
                d += 1;
                if d == m {
                    return Ok(seeds);
                }
            }
        }
    }
}

/// Find roots of the gradient field by damped Newton iteration from every
/// seed, with a gradient-norm descent fallback where the Jacobian is
/// singular. Results are deduplicated by `dedup_radius`; seeds that fail to
/// converge are dropped, and finding nothing is an empty list, not an error.
pub fn find_critical_points(
    game: &Game,
    config: &CriticalPointSearchConfig,
) -> Result<Vec<StrategyProfile>> {
    let mut found: Vec<StrategyProfile> = Vec::new();
    for seed in &config.seeds {
        if seed.dims() != game.dims() {
            return Err(Error::DimensionMismatch(format!(
                "seed dims {:?} against game dims {:?}",
                seed.dims(),
                game.dims()
            )));
        }
        if let Some(root) = newton_from(game, seed, config)? {
            if found.iter().all(|p| p.distance(&root) > config.dedup_radius) {
                found.push(root);
            }
        }
    }
    Ok(found)
}

fn newton_from(
    game: &Game,
    seed: &StrategyProfile,
    config: &CriticalPointSearchConfig,
) -> Result<Option<StrategyProfile>> {
    let mut x = seed.clone();
    let mut w = DVector::from_row_slice(game.omega(&x)?.values());
    for _ in 0..config.newton_max_iters {
        let norm = w.norm();
        if norm <= config.newton_tol {
            return Ok(Some(x));
        }
        let jac: DMatrix<f64> = game.game_jacobian(&x)?.matrix().clone();
        let direction = jac
            .clone()
            .lu()
            .solve(&w)
            .filter(|d| d.iter().all(|v| v.is_finite()))
            // Near-singular Jacobian: descend on ||omega||^2 instead;
            // its gradient is J^T omega.
            .unwrap_or_else(|| jac.transpose() * &w);

        // Halve the step until the residual actually decreases.
        let mut alpha = 1.0;
        let mut improved = None;
        for _ in 0..30 {
            let candidate: Vec<f64> = x
                .values()
                .iter()
                .zip(direction.iter())
                .map(|(xi, di)| xi - alpha * di)
                .collect();
            if candidate.iter().all(|v| v.is_finite()) {
                let xc = x.with_values(candidate)?;
                let wc = DVector::from_row_slice(game.omega(&xc)?.values());
                if wc.norm() < norm {
                    improved = Some((xc, wc));
                    break;
                }
            }
            alpha *= 0.5;
        }
        match improved {
            Some((xc, wc)) => {
                x = xc;
                w = wc;
            }
            // Stuck: this seed does not converge.
            None => return Ok(None),
        }
    }
    Ok((w.norm() <= config.newton_tol).then_some(x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{
        make_morse_smale_chain, make_quadratic_potential, make_van_der_pol_game,
    };

    fn search(game: &Game, lo: f64, hi: f64, per_axis: usize) -> Vec<StrategyProfile> {
        let seeds = CriticalPointSearchConfig::grid(game, lo, hi, per_axis).unwrap();
        let config = CriticalPointSearchConfig::new(seeds, 200, 1e-11, 1e-4).unwrap();
        find_critical_points(game, &config).unwrap()
    }

    #[test]
    fn potential_quadratic_has_unique_root() {
        let g = make_quadratic_potential(1.0, 2.0, 1.0);
        let roots = search(&g, -1.0, 1.0, 3);
        assert_eq!(roots.len(), 1);
        assert!(roots[0].norm() < 1e-9);
    }

    #[test]
    fn chain_game_has_two_roots() {
        let g = make_morse_smale_chain(3).unwrap();
        let mut roots = search(&g, -2.0, 2.0, 5);
        assert_eq!(roots.len(), 2, "{roots:?}");
        roots.sort_by(|a, b| a.values()[0].partial_cmp(&b.values()[0]).unwrap());
        assert!((roots[0].values()[0] + 1.0).abs() < 1e-8);
        assert!((roots[1].values()[0] - 1.0).abs() < 1e-8);
        for r in &roots {
            assert!(r.values()[1].abs() < 1e-9 && r.values()[2].abs() < 1e-9);
        }
    }

    #[test]
    fn van_der_pol_has_only_the_origin() {
        let g = make_van_der_pol_game(1.0).unwrap();
        let roots = search(&g, -3.0, 3.0, 5);
        assert_eq!(roots.len(), 1);
        assert!(roots[0].norm() < 1e-9);
    }

    #[test]
    fn config_validation() {
        let g = make_quadratic_potential(1.0, 0.0, 1.0);
        let seeds = vec![g.origin()];
        assert!(CriticalPointSearchConfig::new(vec![], 10, 1e-9, 1e-6).is_err());
        assert!(CriticalPointSearchConfig::new(seeds.clone(), 10, 0.0, 1e-6).is_err());
        // dedup radius must exceed the tolerance
        assert!(CriticalPointSearchConfig::new(seeds, 10, 1e-6, 1e-9).is_err());
    }

    #[test]
    fn no_seed_converging_yields_empty_list() {
        // Gradient-norm descent from x1 = 0 stalls at (0,0,0) for the chain
        // game where the field has norm 1; a single such seed finds nothing.
        let g = make_morse_smale_chain(3).unwrap();
        let seeds = vec![g.origin()];
        let config = CriticalPointSearchConfig::new(seeds, 50, 1e-11, 1e-4).unwrap();
        let roots = find_critical_points(&g, &config).unwrap();
        assert!(roots.is_empty());
    }
}
