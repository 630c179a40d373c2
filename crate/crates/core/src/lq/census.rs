//! Strict-saddle census over randomly sampled LQ games.
//!
//! Each sample draws a fresh transition matrix `A` with entries uniform on
//! (0,1), keeps the fixed census family for everything else, solves for the
//! feedback Nash gains, and classifies the eigenvalues of the game Jacobian
//! of the policy-gradient field at those gains. The tallied frequency is
//! `strict_saddle / (samples - failed)`: solver failures are counted and
//! reported, never silently dropped into either class.

use nalgebra::{DMatrix, Matrix2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg;

use super::game::LqGame;
use super::gradient::lq_game_jacobian;
use super::solver::lyapunov_iterations;

/// Tuning knobs for one census run. The defaults match the experiment this
/// module reproduces.
#[derive(Debug, Clone, Serialize)]
pub struct CensusConfig {
    pub q: f64,
    pub r: f64,
    pub samples: u64,
    pub seed: u64,
    /// Central-difference step for the gain-space Jacobian.
    pub jacobian_step: f64,
    /// Gain-change tolerance and outer-iteration cap of the Nash solver.
    pub solver_tol: f64,
    pub solver_max_iters: usize,
    /// Relative eigenvalue tolerance: real parts within
    /// `classify_tol * (1 + max |entry|)` of zero are degenerate.
    pub classify_tol: f64,
    pub keep_records: bool,
}

impl CensusConfig {
    pub fn new(q: f64, r: f64, samples: u64, seed: u64) -> Result<Self> {
        if !(q > 0.0 && r > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "census parameters must be positive, got q={q}, r={r}"
            )));
        }
        if samples == 0 {
            return Err(Error::InvalidParameter("census needs samples >= 1".into()));
        }
        Ok(CensusConfig {
            q,
            r,
            samples,
            seed,
            jacobian_step: 1e-5,
            solver_tol: 1e-10,
            solver_max_iters: 500,
            classify_tol: 1e-6,
            keep_records: false,
        })
    }
}

/// Outcome of one sampled game. Exactly one applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CensusOutcome {
    StrictSaddle,
    Lase,
    Degenerate,
    Failed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GameRecord {
    pub sample: u64,
    pub outcome: CensusOutcome,
    /// Eigenvalue real-part extremes of the gain-space Jacobian (NaN when
    /// the solve failed).
    pub min_re: f64,
    pub max_re: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CensusCounts {
    pub strict_saddle: u64,
    pub lase: u64,
    pub degenerate_or_failed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CensusResult {
    pub q: f64,
    pub r: f64,
    pub samples: u64,
    pub seed: u64,
    pub counts: CensusCounts,
    /// Solver failures, already included in `counts.degenerate_or_failed`
    /// and excluded from the frequency denominator.
    pub failed: u64,
    /// strict_saddle / (samples - failed); 0 when every sample failed.
    pub frequency: f64,
    pub records: Option<Vec<GameRecord>>,
}

fn classify_sample(config: &CensusConfig, sample: u64) -> GameRecord {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(sample);
    // Row-major draw of the transition matrix.
    let a = Matrix2::new(
        rng.random::<f64>(),
        rng.random::<f64>(),
        rng.random::<f64>(),
        rng.random::<f64>(),
    );
    let game = match LqGame::census_instance(a, config.q, config.r) {
        Ok(g) => g,
        Err(_) => {
            return GameRecord {
                sample,
                outcome: CensusOutcome::Failed,
                min_re: f64::NAN,
                max_re: f64::NAN,
            }
        }
    };
    let solved = lyapunov_iterations(&game, config.solver_tol, config.solver_max_iters)
        .and_then(|sol| lq_game_jacobian(&game, &sol.policy, config.jacobian_step));
    let jac = match solved {
        Ok(j) => j,
        Err(_) => {
            return GameRecord {
                sample,
                outcome: CensusOutcome::Failed,
                min_re: f64::NAN,
                max_re: f64::NAN,
            }
        }
    };
    let dm = DMatrix::from_column_slice(4, 4, jac.as_slice());
    let eig = match linalg::eigenvalues(&dm) {
        Ok(e) => e,
        Err(_) => {
            return GameRecord {
                sample,
                outcome: CensusOutcome::Failed,
                min_re: f64::NAN,
                max_re: f64::NAN,
            }
        }
    };
    let scale = config.classify_tol * (1.0 + jac.amax());
    let min_re = eig.first().map_or(f64::NAN, |l| l.re);
    let max_re = eig.last().map_or(f64::NAN, |l| l.re);
    let any_in_band = eig.iter().any(|l| l.re.abs() <= scale);
    let outcome = if any_in_band {
        CensusOutcome::Degenerate
    } else if min_re > 0.0 {
        CensusOutcome::Lase
    } else if min_re < 0.0 && max_re > 0.0 {
        CensusOutcome::StrictSaddle
    } else {
        // All real parts negative: not an attractor, not a saddle in the
        // strict sense used here; bucketed with the degenerate cases.
        CensusOutcome::Degenerate
    };
    GameRecord {
        sample,
        outcome,
        min_re,
        max_re,
    }
}

/// One census at fixed `(q, r)` with the default knobs.
pub fn sample_census(q: f64, r: f64, samples: u64, seed: u64) -> Result<CensusResult> {
    sample_census_with(&CensusConfig::new(q, r, samples, seed)?)
}

/// One census run. Samples are independent tasks with generators derived
/// from `(seed, sample index)` and run in parallel; the result is
/// independent of thread count and identical across repeated calls.
pub fn sample_census_with(config: &CensusConfig) -> Result<CensusResult> {
    let records: Vec<GameRecord> = (0..config.samples)
        .into_par_iter()
        .map(|sample| classify_sample(config, sample))
        .collect();

    let mut counts = CensusCounts {
        strict_saddle: 0,
        lase: 0,
        degenerate_or_failed: 0,
    };
    let mut failed = 0u64;
    for rec in &records {
        match rec.outcome {
            CensusOutcome::StrictSaddle => counts.strict_saddle += 1,
            CensusOutcome::Lase => counts.lase += 1,
            CensusOutcome::Degenerate => counts.degenerate_or_failed += 1,
            CensusOutcome::Failed => {
                counts.degenerate_or_failed += 1;
                failed += 1;
            }
        }
    }
    let denom = config.samples - failed;
    let frequency = if denom == 0 {
        0.0
    } else {
        counts.strict_saddle as f64 / denom as f64
    };
    Ok(CensusResult {
        q: config.q,
        r: config.r,
        samples: config.samples,
        seed: config.seed,
        counts,
        failed,
        frequency,
        records: config.keep_records.then_some(records),
    })
}

/// Which census parameter a sweep varies; the other stays fixed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepParameter {
    Q,
    R,
}

/// Mean strict-saddle frequency and normal-approximation 95% confidence
/// interval over the repeats at one grid value.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPoint {
    pub grid_value: f64,
    pub mean_frequency: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// Total solver failures across the repeats.
    pub failures: u64,
    pub results: Vec<CensusResult>,
}

/// Repeat independent censuses over a parameter grid. Each (grid point,
/// repeat) pair derives its own census seed from `seed`, so the sweep is
/// reproducible as a whole.
pub fn census_sweep(
    vary: SweepParameter,
    grid: &[f64],
    fixed_other: f64,
    samples: u64,
    repeats: u64,
    seed: u64,
) -> Result<Vec<SweepPoint>> {
    if grid.is_empty() || repeats == 0 {
        return Err(Error::InvalidParameter(
            "sweep needs a nonempty grid and repeats >= 1".into(),
        ));
    }
    // The experiment's parameter range is (0,1); the right endpoint is
    // accepted so inclusive grids like 0.05:1.0:10 remain expressible.
    for &v in grid {
        if !(v > 0.0 && v <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "grid values must lie in (0, 1], got {v}"
            )));
        }
    }
    let mut points = Vec::with_capacity(grid.len());
    for (gi, &value) in grid.iter().enumerate() {
        let (q, r) = match vary {
            SweepParameter::Q => (value, fixed_other),
            SweepParameter::R => (fixed_other, value),
        };
        let mut results = Vec::with_capacity(repeats as usize);
        for rep in 0..repeats {
            let census_seed = seed.wrapping_add(gi as u64 * repeats + rep);
            results.push(sample_census(q, r, samples, census_seed)?);
        }
        let freqs: Vec<f64> = results.iter().map(|c| c.frequency).collect();
        let mean = freqs.iter().sum::<f64>() / freqs.len() as f64;
        let (ci_low, ci_high) = if freqs.len() > 1 {
            let var = freqs.iter().map(|f| (f - mean) * (f - mean)).sum::<f64>()
                / (freqs.len() - 1) as f64;
            let half = 1.96 * (var / freqs.len() as f64).sqrt();
            (mean - half, mean + half)
        } else {
            (mean, mean)
        };
        points.push(SweepPoint {
            grid_value: value,
            mean_frequency: mean,
            ci_low,
            ci_high,
            failures: results.iter().map(|c| c.failed).sum(),
            results,
        });
    }
    Ok(points)
}

/// Plot-ready CSV: `grid_value,mean_frequency,ci_low,ci_high,failures`.
pub fn write_sweep_csv<W: std::io::Write>(points: &[SweepPoint], mut w: W) -> std::io::Result<()> {
    writeln!(w, "grid_value,mean_frequency,ci_low,ci_high,failures")?;
    for p in points {
        writeln!(
            w,
            "{},{},{},{},{}",
            p.grid_value, p.mean_frequency, p.ci_low, p.ci_high, p.failures
        )?;
    }
    Ok(())
}

/// One JSON object per sampled game, for census runs that kept records.
pub fn write_records_jsonl<W: std::io::Write>(
    result: &CensusResult,
    mut w: W,
) -> std::io::Result<()> {
    if let Some(records) = &result.records {
        for rec in records {
            serde_json::to_writer(&mut w, rec)?;
            writeln!(w)?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn census_is_deterministic_and_consistent() {
        let a = sample_census(0.01, 0.1, 60, 42).unwrap();
        let b = sample_census(0.01, 0.1, 60, 42).unwrap();
        assert_eq!(a, b);
        let c = sample_census(0.01, 0.1, 60, 43).unwrap();
        assert_ne!(a.counts, c.counts);

        let total = a.counts.strict_saddle + a.counts.lase + a.counts.degenerate_or_failed;
        assert_eq!(total, a.samples);
        assert!(a.failed <= a.counts.degenerate_or_failed);
    }

    #[test]
    fn per_game_records_classify_exclusively() {
        let mut config = CensusConfig::new(0.01, 0.1, 40, 7).unwrap();
        config.keep_records = true;
        let result = sample_census_with(&config).unwrap();
        let records = result.records.as_ref().unwrap();
        assert_eq!(records.len(), 40);
        for rec in records {
            match rec.outcome {
                CensusOutcome::StrictSaddle => {
                    assert!(rec.min_re < 0.0 && rec.max_re > 0.0);
                }
                CensusOutcome::Lase => assert!(rec.min_re > 0.0),
                CensusOutcome::Degenerate => {}
                CensusOutcome::Failed => assert!(rec.min_re.is_nan()),
            }
        }
    }

    #[test]
    fn invalid_parameters_are_rejected() {
        assert!(CensusConfig::new(0.0, 0.1, 10, 1).is_err());
        assert!(CensusConfig::new(0.1, 0.1, 0, 1).is_err());
        assert!(census_sweep(SweepParameter::R, &[], 0.01, 10, 1, 1).is_err());
        assert!(census_sweep(SweepParameter::R, &[0.5], 0.01, 10, 0, 1).is_err());
        assert!(census_sweep(SweepParameter::R, &[1.5], 0.01, 10, 1, 1).is_err());
    }

    #[test]
    fn sweep_with_one_repeat_is_a_list_of_censuses() {
        let points = census_sweep(SweepParameter::R, &[0.1, 0.5], 0.01, 25, 1, 9).unwrap();
        assert_eq!(points.len(), 2);
        for (gi, p) in points.iter().enumerate() {
            assert_eq!(p.results.len(), 1);
            assert_eq!(p.ci_low, p.mean_frequency);
            assert_eq!(p.ci_high, p.mean_frequency);
            let direct = sample_census(0.01, p.grid_value, 25, 9u64.wrapping_add(gi as u64)).unwrap();
            assert_eq!(p.results[0], direct);
        }
    }

    #[test]
    fn sweep_csv_shape() {
        let points = census_sweep(SweepParameter::Q, &[0.5], 0.1, 10, 2, 3).unwrap();
        let mut buf = Vec::new();
        write_sweep_csv(&points, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "grid_value,mean_frequency,ci_low,ci_high,failures"
        );
        assert_eq!(lines.next().unwrap().split(',').count(), 5);
    }
}
