use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Joint strategy `x` in R^m together with its per-player block structure.
///
/// Player `i` (0-indexed) owns the contiguous slice of `dims[i]` coordinates
/// starting after the blocks of players `0..i`; concatenating the slices in
/// player order reconstructs the joint vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyProfile {
    values: Vec<f64>,
    dims: Vec<usize>,
}

impl StrategyProfile {
    pub fn new(values: Vec<f64>, dims: Vec<usize>) -> Result<Self> {
        if dims.is_empty() || dims.iter().any(|&d| d == 0) {
            return Err(Error::InvalidParameter(
                "per-player dimensions must be nonempty and positive".into(),
            ));
        }
        let m: usize = dims.iter().sum();
        if m != values.len() {
            return Err(Error::DimensionMismatch(format!(
                "profile of length {} against per-player dimensions summing to {}",
                values.len(),
                m
            )));
        }
        Ok(StrategyProfile { values, dims })
    }

    /// Profile for a scalar-per-player game: one coordinate per player.
    pub fn scalar(values: Vec<f64>) -> Self {
        let dims = vec![1; values.len()];
        StrategyProfile { values, dims }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn num_players(&self) -> usize {
        self.dims.len()
    }

    /// Coordinate range owned by player `i`.
    pub fn block_range(&self, player: usize) -> std::ops::Range<usize> {
        let start: usize = self.dims[..player].iter().sum();
        start..start + self.dims[player]
    }

    /// Player `i`'s own coordinates `x_i`.
    pub fn slice(&self, player: usize) -> &[f64] {
        &self.values[self.block_range(player)]
    }

    /// Same block structure, new coordinates.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        Self::new(values, self.dims.clone())
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn distance(&self, other: &StrategyProfile) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slices_partition_the_joint_vector() {
        let x = StrategyProfile::new(vec![1.0, 2.0, 3.0, 4.0, 5.0], vec![2, 1, 2]).unwrap();
        assert_eq!(x.slice(0), &[1.0, 2.0]);
        assert_eq!(x.slice(1), &[3.0]);
        assert_eq!(x.slice(2), &[4.0, 5.0]);
        let rebuilt: Vec<f64> = (0..x.num_players()).flat_map(|i| x.slice(i).to_vec()).collect();
        assert_eq!(rebuilt, x.values());
    }

    #[test]
    fn dimension_sum_must_match() {
        assert!(StrategyProfile::new(vec![1.0, 2.0], vec![2, 1]).is_err());
        assert!(StrategyProfile::new(vec![1.0], vec![]).is_err());
        assert!(StrategyProfile::new(vec![1.0], vec![1, 0]).is_err());
    }
}
