//! Time-scaled GLS regression and its Markov-modulated extension.
//!
//! A response observed after time `t` has mean `t x beta` and variance
//! `sigma^2 t`. Under a modulating chain the mean becomes
//! `(tbar ⊗ x) vec(beta)` where `tbar` holds the time spent in each state and
//! `beta` is a `k x m` matrix with one coefficient column per state. `vec`
//! stacks the columns of `beta`, so coefficient `(v, j)` sits at `j * k + v`.

mod design;
mod fit;

pub use design::{assemble_modulated_design, kron_row, ModulatedDesign};
pub use fit::{
    fit_modulated, fit_time_scaled, normal_matrix, predict_expected, weighted_rss_against_mean,
    FitResult, CONDITION_LIMIT,
};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::ctmc::{Chain, ConditionalSojourn};
use crate::error::{Error, Result};
use crate::exec::{try_map_indexed, Execution};

/// Where the per-state sojourn times in a design came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SojournSource {
    /// Single-state model; no sojourn split.
    TimeScaled,
    /// Realised sojourns of a known environment path.
    Exact,
    /// Expected sojourns given total time and endpoint states. The variance
    /// estimate ignores their randomness and is biased upward.
    ConditionalExpectation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub x: Vec<f64>,
    pub total_time: f64,
    pub initial_state: usize,
    pub final_state: usize,
    pub response: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    observations: Vec<Observation>,
    k: usize,
    m: usize,
}

impl Dataset {
    pub fn new(observations: Vec<Observation>, m: usize) -> Result<Self> {
        let first = observations
            .first()
            .ok_or_else(|| Error::input("observations", "dataset is empty"))?;
        let k = first.x.len();
        if k == 0 {
            return Err(Error::input("x", "at least one regressor is required"));
        }
        if m == 0 {
            return Err(Error::input(
                "m",
                "at least one environment state is required",
            ));
        }
        for (i, o) in observations.iter().enumerate() {
            if o.x.len() != k {
                return Err(Error::ShapeMismatch(format!(
                    "observation {i} has {} regressors, expected {k}",
                    o.x.len()
                )));
            }
            if !(o.total_time > 0.0 && o.total_time.is_finite()) {
                return Err(Error::input(
                    "t",
                    format!("observation {i}: total time must be > 0"),
                ));
            }
            if o.initial_state >= m || o.final_state >= m {
                return Err(Error::input(
                    "state",
                    format!("observation {i}: states must be < {m}"),
                ));
            }
            if !o.response.is_finite() || o.x.iter().any(|v| !v.is_finite()) {
                return Err(Error::input(
                    "y",
                    format!("observation {i}: non-finite value"),
                ));
            }
        }
        Ok(Self { observations, k, m })
    }

    pub fn observations(&self) -> &[Observation] {
        &self.observations
    }

    pub fn n(&self) -> usize {
        self.observations.len()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn x_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n(), self.k, |i, v| self.observations[i].x[v])
    }

    pub fn times(&self) -> Vec<f64> {
        self.observations.iter().map(|o| o.total_time).collect()
    }

    pub fn responses(&self) -> Vec<f64> {
        self.observations.iter().map(|o| o.response).collect()
    }

    /// Same observations with responses replaced.
    pub fn with_responses(&self, y: &[f64]) -> Result<Self> {
        if y.len() != self.n() {
            return Err(Error::ShapeMismatch(format!(
                "{} responses for {} observations",
                y.len(),
                self.n()
            )));
        }
        let observations = self
            .observations
            .iter()
            .zip(y)
            .map(|(o, &r)| Observation {
                response: r,
                ..o.clone()
            })
            .collect();
        Dataset::new(observations, self.m)
    }
}

/// Conditional expected sojourn profiles for every observation.
pub fn expected_sojourns(
    chain: &Chain,
    dataset: &Dataset,
    exec: Execution,
) -> Result<Vec<ConditionalSojourn>> {
    if chain.m() != dataset.m() {
        return Err(Error::ShapeMismatch(format!(
            "chain has {} states, dataset declares {}",
            chain.m(),
            dataset.m()
        )));
    }
    try_map_indexed(exec, dataset.n(), |i| {
        let o = &dataset.observations()[i];
        chain.conditional_sojourn(o.total_time, o.initial_state, o.final_state)
    })
}
