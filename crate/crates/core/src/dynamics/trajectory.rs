use std::io::Write;

use serde::Serialize;

use crate::game::StrategyProfile;

/// Why a simulation stopped.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TerminationStatus {
    /// `||omega||` fell below the convergence tolerance at this point.
    ConvergedTo { point: StrategyProfile },
    /// The iterate left the configured escape ball.
    EscapedBall,
    /// The iteration budget ran out.
    MaxIters,
    /// The iterate norm exceeded the blowup threshold or became non-finite
    /// (`norm` is NaN in that case; a NaN iterate is never reported silently).
    Diverged { norm: f64 },
}

/// A recorded gradient-play orbit: stored points are strided to keep long
/// runs small, with the initial and final iterates always present.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    points: Vec<(u64, StrategyProfile)>,
    status: TerminationStatus,
    iterations: u64,
    seed: Option<u64>,
}

impl Trajectory {
    pub(crate) fn new(
        points: Vec<(u64, StrategyProfile)>,
        status: TerminationStatus,
        iterations: u64,
        seed: Option<u64>,
    ) -> Self {
        debug_assert!(points.windows(2).all(|w| w[0].0 < w[1].0));
        Trajectory {
            points,
            status,
            iterations,
            seed,
        }
    }

    pub fn points(&self) -> &[(u64, StrategyProfile)] {
        &self.points
    }

    pub fn status(&self) -> &TerminationStatus {
        &self.status
    }

    pub fn iterations(&self) -> u64 {
        self.iterations
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    /// The last iterate reached, whatever the termination status.
    pub fn final_point(&self) -> &StrategyProfile {
        &self.points.last().expect("trajectory stores at least x0").1
    }

    /// CSV with header `t,x_1,...,x_m`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let m = self.final_point().dim();
        let coords: Vec<String> = (1..=m).map(|k| format!("x_{k}")).collect();
        writeln!(w, "t,{}", coords.join(","))?;
        for (t, p) in &self.points {
            let vals: Vec<String> = p.values().iter().map(|v| v.to_string()).collect();
            writeln!(w, "{t},{}", vals.join(","))?;
        }
        Ok(())
    }

    /// JSON sidecar carrying status, iteration count, seed, and the caller's
    /// configuration echo.
    pub fn sidecar(&self, config: serde_json::Value) -> serde_json::Value {
        serde_json::json!({
            "status": self.status,
            "iterations": self.iterations,
            "seed": self.seed,
            "config": config,
        })
    }
}
