use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::ctmc::RateMatrix;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::study;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialStates {
    Fixed(Vec<usize>),
    /// Drawn independently from the stationary distribution.
    Stationary,
}

/// How block data are combined in the large-sample study.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Pooling {
    /// One fit over all observations of the first `q` blocks.
    #[default]
    Pooled,
    /// Average of per-block fits.
    PerBlockMean,
}

impl std::str::FromStr for Pooling {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "pooled" => Ok(Pooling::Pooled),
            "per-block-mean" => Ok(Pooling::PerBlockMean),
            other => Err(format!(
                "unknown pooling `{other}` (expected pooled | per-block-mean)"
            )),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub rates: RateMatrix,
    /// `k x m` true coefficients.
    pub beta: DMatrix<f64>,
    pub sigma: f64,
    /// `n x k` regressor expectations.
    pub x_expected: DMatrix<f64>,
    pub t_expected: Vec<f64>,
    pub initial_states: InitialStates,
    /// Half-width of the uniform perturbation of each regressor column.
    pub perturbation: Vec<f64>,
    pub q: usize,
    pub seed: u64,
    pub pooling: Pooling,
    /// Block counts at which estimates are reported; strictly increasing, at most `q`.
    pub checkpoints: Vec<usize>,
    pub execution: Execution,
}

/// Multiples of 500 up to `q`, plus `q` itself.
pub fn default_checkpoints(q: usize) -> Vec<usize> {
    let mut c: Vec<usize> = (1..=q / 500).map(|i| i * 500).collect();
    if c.last() != Some(&q) {
        c.push(q);
    }
    c
}

impl ExperimentConfig {
    /// Reference three-state setup with `q` blocks.
    pub fn study(q: usize, seed: u64) -> Self {
        Self {
            rates: study::rates(),
            beta: study::beta(),
            sigma: study::SIGMA,
            x_expected: study::x_matrix(),
            t_expected: study::TIMES.to_vec(),
            initial_states: InitialStates::Stationary,
            perturbation: study::PERTURBATION.to_vec(),
            q,
            seed,
            pooling: Pooling::Pooled,
            checkpoints: default_checkpoints(q),
            execution: Execution::Parallel,
        }
    }

    pub fn n(&self) -> usize {
        self.x_expected.nrows()
    }

    pub fn k(&self) -> usize {
        self.x_expected.ncols()
    }

    pub fn m(&self) -> usize {
        self.rates.m()
    }

    pub fn validate(&self) -> Result<()> {
        let (n, k, m) = (self.n(), self.k(), self.m());
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::input(
                "sigma",
                format!("must be > 0, got {}", self.sigma),
            ));
        }
        if self.beta.shape() != (k, m) {
            return Err(Error::input(
                "beta",
                format!(
                    "expected {k}x{m}, got {}x{}",
                    self.beta.nrows(),
                    self.beta.ncols()
                ),
            ));
        }
        if self.t_expected.len() != n {
            return Err(Error::input(
                "t",
                format!("expected {n} times, got {}", self.t_expected.len()),
            ));
        }
        if self.t_expected.iter().any(|t| !(*t > 0.0 && t.is_finite())) {
            return Err(Error::input("t", "times must be > 0"));
        }
        if self.perturbation.len() != k
            || self
                .perturbation
                .iter()
                .any(|h| !(*h >= 0.0 && h.is_finite()))
        {
            return Err(Error::input(
                "perturbation",
                format!("need {k} non-negative half-widths"),
            ));
        }
        if let InitialStates::Fixed(states) = &self.initial_states {
            if states.len() != n || states.iter().any(|&s| s >= m) {
                return Err(Error::input(
                    "initial_states",
                    format!("need {n} states below {m}"),
                ));
            }
        }
        if self.q == 0 {
            return Err(Error::input("q", "must be >= 1"));
        }
        if self.checkpoints.is_empty()
            || self.checkpoints.windows(2).any(|w| w[0] >= w[1])
            || self.checkpoints[0] == 0
            || *self.checkpoints.last().unwrap() > self.q
        {
            return Err(Error::input(
                "checkpoints",
                format!("must be strictly increasing within 1..={}", self.q),
            ));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_checkpoints_grid() {
        assert_eq!(default_checkpoints(1), vec![1]);
        assert_eq!(default_checkpoints(500), vec![500]);
        assert_eq!(default_checkpoints(1200), vec![500, 1000, 1200]);
        assert_eq!(default_checkpoints(4500).len(), 9);
    }

    #[test]
    fn study_config_is_valid() {
        ExperimentConfig::study(2000, 1).validate().unwrap();
    }

    #[test]
    fn rejects_bad_checkpoints() {
        let mut c = ExperimentConfig::study(100, 1);
        c.checkpoints = vec![50, 50];
        assert!(c.validate().is_err());
        c.checkpoints = vec![200];
        assert!(c.validate().is_err());
        c.checkpoints = vec![];
        assert!(c.validate().is_err());
    }

    #[test]
    fn rejects_bad_shapes() {
        let mut c = ExperimentConfig::study(10, 1);
        c.sigma = 0.0;
        assert!(c.validate().is_err());
        let mut c = ExperimentConfig::study(10, 1);
        c.t_expected.pop();
        assert!(c.validate().is_err());
        let mut c = ExperimentConfig::study(10, 1);
        c.initial_states = InitialStates::Fixed(vec![3; 15]);
        assert!(c.validate().is_err());
    }

    #[test]
    fn pooling_parses() {
        assert_eq!("pooled".parse::<Pooling>().unwrap(), Pooling::Pooled);
        assert_eq!(
            "per-block-mean".parse::<Pooling>().unwrap(),
            Pooling::PerBlockMean
        );
        assert!("mean".parse::<Pooling>().is_err());
    }
}
