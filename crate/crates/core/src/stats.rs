//! One-sample summary statistics shared by error and timing reports.

use crate::error::{Error, Result};

/// Normal-approximation two-sided 95% quantile.
pub const Z_95: f64 = 1.96;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub n: usize,
    pub mean: f64,
    /// Sample standard deviation (n - 1 denominator; 0 when n = 1).
    pub std: f64,
    pub stderr: f64,
    pub ci_lower: f64,
    pub ci_upper: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyInput("summary of an empty sample"));
        }
        let n = values.len();
        let mean = values.iter().sum::<f64>() / n as f64;
        let std = if n > 1 {
            let ss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
            (ss / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        let stderr = std / (n as f64).sqrt();
        Ok(Summary {
            n,
            mean,
            std,
            stderr,
            ci_lower: mean - Z_95 * stderr,
            ci_upper: mean + Z_95 * stderr,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_values() {
        let s = Summary::of(&[2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0]).unwrap();
        assert_eq!(s.mean, 5.0);
        // sum of squared deviations = 32, n - 1 = 7
        assert!((s.std - (32.0f64 / 7.0).sqrt()).abs() < 1e-15);
        assert!((s.stderr - s.std / 8f64.sqrt()).abs() < 1e-15);
        assert!((s.ci_upper - s.mean - 1.96 * s.stderr).abs() < 1e-15);
    }

    #[test]
    fn singleton_and_empty() {
        let s = Summary::of(&[3.0]).unwrap();
        assert_eq!((s.mean, s.std, s.stderr), (3.0, 0.0, 0.0));
        assert!(Summary::of(&[]).is_err());
    }
}
