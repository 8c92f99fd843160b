use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};

/// Weights (t_0, ..., t_m) applied to a window a_n, ..., a_{n+m}.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WeightVector {
    weights: Vec<f64>,
}

impl WeightVector {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::Input("weights: need at least one entry".into()));
        }
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
            return Err(Error::Input(format!(
                "weights: entry {w} is not a finite nonnegative number"
            )));
        }
        if weights.iter().all(|&w| w == 0.0) {
            return Err(Error::Input(
                "weights: at least one entry must be positive".into(),
            ));
        }
        Ok(WeightVector { weights })
    }

    /// Parses a comma-separated list such as `1,1` or `0.5, 2`.
    pub fn parse(text: &str) -> Result<Self> {
        let weights = text
            .split(',')
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Parse(format!("weights: '{}' is not a number", s.trim())))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(weights)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.weights
    }

    /// m, so the window has m + 1 entries.
    pub fn m(&self) -> usize {
        self.weights.len() - 1
    }

    pub fn get(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn max(&self) -> f64 {
        self.weights.iter().copied().fold(0.0, f64::max)
    }

    pub fn sum(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// 0 < t_0 <= t_1 <= ... <= t_m
    pub fn nondecreasing_positive(&self) -> bool {
        self.weights[0] > 0.0 && self.weights.windows(2).all(|w| w[0] <= w[1])
    }

    /// Index of the first nonzero weight.
    pub fn first_nonzero(&self) -> usize {
        self.weights
            .iter()
            .position(|&w| w > 0.0)
            .expect("validated nonzero")
    }

    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(self.weights.iter().map(|w| w * factor).collect())
    }
}

impl fmt::Display for WeightVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.weights.iter().map(|w| w.to_string()).collect();
        write!(f, "{}", parts.join(","))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_flags() {
        let w = WeightVector::parse("1, 1").unwrap();
        assert_eq!(w.m(), 1);
        assert!(w.nondecreasing_positive());
        assert!(!WeightVector::parse("2,1").unwrap().nondecreasing_positive());
        assert!(!WeightVector::parse("0,1").unwrap().nondecreasing_positive());
        assert_eq!(WeightVector::parse("0,0,3").unwrap().first_nonzero(), 2);
        assert!(WeightVector::parse("0,0").is_err());
        assert!(WeightVector::parse("1,x").is_err());
        assert!(WeightVector::parse("-1").is_err());
        assert_eq!(WeightVector::parse("0.5,2").unwrap().to_string(), "0.5,2");
    }
}
