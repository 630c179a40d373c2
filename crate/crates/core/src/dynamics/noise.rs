use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::error::{Error, Result};

/// Gradient-noise model for stochastic gradient-play.
///
/// Gaussian and sphere noise are zero-mean additive perturbations drawn
/// independently per player block each step. The one-point bandit model is
/// not additive: it replaces the oracle gradient with the single-query
/// estimator of the smoothed cost (see
/// [`one_point_gradient_estimate`](super::one_point_gradient_estimate)).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseModel {
    IsotropicGaussian { sigma: f64 },
    UniformSphere { radius: f64 },
    OnePointBandit { delta: f64 },
}

impl NoiseModel {
    pub fn validate(&self) -> Result<()> {
        match *self {
            // sigma = 0 is allowed: it reduces the stochastic update to the
            // deterministic one.
            NoiseModel::IsotropicGaussian { sigma } => {
                if !(sigma >= 0.0) || !sigma.is_finite() {
                    return Err(Error::InvalidParameter(format!(
                        "gaussian noise scale must be non-negative, got {sigma}"
                    )));
                }
            }
            NoiseModel::UniformSphere { radius } => {
                if !(radius > 0.0) || !radius.is_finite() {
                    return Err(Error::InvalidParameter(format!(
                        "sphere noise radius must be positive, got {radius}"
                    )));
                }
            }
            NoiseModel::OnePointBandit { delta } => {
                if !(delta > 0.0) || !delta.is_finite() {
                    return Err(Error::InvalidParameter(format!(
                        "bandit smoothing radius must be positive, got {delta}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Lower bound `b` on `E[(w . v)^+]` over unit vectors `v` in a block of
    /// the given dimension: `sigma / sqrt(2 pi)` for Gaussian noise (the
    /// projection `w . v` is `N(0, sigma^2)` in every direction) and
    /// `radius * E|u_1| / 2` for sphere noise by rotation invariance. The
    /// bandit model is not an additive-noise model and reports zero.
    pub fn excitation_bound(&self, dim: usize) -> f64 {
        match *self {
            NoiseModel::IsotropicGaussian { sigma } => sigma / (2.0 * std::f64::consts::PI).sqrt(),
            NoiseModel::UniformSphere { radius } => radius * mean_abs_coordinate(dim) / 2.0,
            NoiseModel::OnePointBandit { .. } => 0.0,
        }
    }

    /// Draw one noise block of the given dimension into `out`.
    /// Panics for the bandit model, which has no additive form.
    pub(crate) fn sample_block<R: Rng>(&self, rng: &mut R, out: &mut [f64]) {
        match *self {
            NoiseModel::IsotropicGaussian { sigma } => {
                for v in out.iter_mut() {
                    let z: f64 = StandardNormal.sample(rng);
                    *v = sigma * z;
                }
            }
            NoiseModel::UniformSphere { radius } => {
                sample_unit_sphere(rng, out);
                for v in out.iter_mut() {
                    *v *= radius;
                }
            }
            NoiseModel::OnePointBandit { .. } => {
                unreachable!("bandit noise replaces the gradient; it is not sampled additively")
            }
        }
    }
}

/// Uniform direction on the unit sphere of `out.len()` dimensions
/// (a normalized Gaussian vector; in one dimension this is a fair sign).
pub fn sample_unit_sphere<R: Rng>(rng: &mut R, out: &mut [f64]) {
    loop {
        let mut norm_sq = 0.0;
        for v in out.iter_mut() {
            let z: f64 = StandardNormal.sample(rng);
            *v = z;
            norm_sq += z * z;
        }
        if norm_sq > 1e-300 {
            let inv = norm_sq.sqrt().recip();
            for v in out.iter_mut() {
                *v *= inv;
            }
            return;
        }
    }
}

/// `E|u_1|` for `u` uniform on the unit sphere in `dim` dimensions:
/// `Gamma(d/2) / (sqrt(pi) Gamma((d+1)/2))`, evaluated exactly through the
/// half-integer Gamma recurrences.
pub fn mean_abs_coordinate(dim: usize) -> f64 {
    assert!(dim >= 1);
    gamma_half(dim) / (std::f64::consts::PI.sqrt() * gamma_half(dim + 1))
}

/// Gamma(k/2) for integer k >= 1.
fn gamma_half(k: usize) -> f64 {
    let mut value = if k % 2 == 0 { 1.0 } else { std::f64::consts::PI.sqrt() };
    let mut arg = if k % 2 == 0 { 2 } else { 1 };
    // Gamma(x + 1) = x Gamma(x), climbing from Gamma(1) = 1 or
    // Gamma(1/2) = sqrt(pi).
    while arg < k {
        value *= arg as f64 / 2.0;
        arg += 2;
    }
    value
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn mean_abs_coordinate_known_values() {
        assert!((mean_abs_coordinate(1) - 1.0).abs() < 1e-14);
        assert!((mean_abs_coordinate(2) - 2.0 / std::f64::consts::PI).abs() < 1e-14);
        assert!((mean_abs_coordinate(3) - 0.5).abs() < 1e-14);
    }

    #[test]
    fn excitation_bounds() {
        let g = NoiseModel::IsotropicGaussian { sigma: 0.5 };
        assert!((g.excitation_bound(7) - 0.5 / (2.0 * std::f64::consts::PI).sqrt()).abs() < 1e-15);
        let s = NoiseModel::UniformSphere { radius: 2.0 };
        assert!((s.excitation_bound(1) - 1.0).abs() < 1e-14);
        assert!((s.excitation_bound(2) - 2.0 / std::f64::consts::PI).abs() < 1e-14);
        assert!(s.excitation_bound(3) > 0.0);
    }

    #[test]
    fn sphere_samples_have_unit_norm() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for dim in [1usize, 2, 3, 5] {
            let mut v = vec![0.0; dim];
            sample_unit_sphere(&mut rng, &mut v);
            let norm: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            assert!((norm - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn gaussian_blocks_are_zero_mean() {
        let model = NoiseModel::IsotropicGaussian { sigma: 0.3 };
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut sum = [0.0f64; 2];
        let n = 20_000;
        let mut block = [0.0f64; 2];
        for _ in 0..n {
            model.sample_block(&mut rng, &mut block);
            sum[0] += block[0];
            sum[1] += block[1];
        }
        // Standard error is sigma/sqrt(n) ~ 2e-3.
        assert!(sum[0].abs() / (n as f64) < 0.01);
        assert!(sum[1].abs() / (n as f64) < 0.01);
    }

    #[test]
    fn validation() {
        assert!(NoiseModel::IsotropicGaussian { sigma: 0.0 }.validate().is_ok());
        assert!(NoiseModel::IsotropicGaussian { sigma: -1.0 }.validate().is_err());
        assert!(NoiseModel::UniformSphere { radius: 0.0 }.validate().is_err());
        assert!(NoiseModel::OnePointBandit { delta: 0.0 }.validate().is_err());
        assert!(NoiseModel::OnePointBandit { delta: 0.01 }.validate().is_ok());
    }
}
