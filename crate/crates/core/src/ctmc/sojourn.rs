use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Endpoint pairs with `p_{from,to}(tau)` at or below this are treated as unreachable.
pub const PATH_PROB_TOL: f64 = 1e-12;

/// Roundoff allowance for components slightly outside `[0, tau]`, per unit of `max(tau, 1)`.
const CLAMP_SLACK: f64 = 1e-9;

/// Time spent in each environment state over one observation window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SojournProfile {
    times: Vec<f64>,
}

impl SojournProfile {
    /// Wraps a vector of per-state times; entries must be finite and non-negative.
    pub fn new(times: Vec<f64>) -> Result<Self> {
        if times.is_empty() {
            return Err(Error::input("sojourns", "profile needs at least one state"));
        }
        if let Some((state, &value)) = times
            .iter()
            .enumerate()
            .find(|(_, t)| !(**t >= 0.0 && t.is_finite()))
        {
            return Err(Error::NegativeSojourn { state, value });
        }
        Ok(Self { times })
    }

    /// All time spent in `state`.
    pub fn concentrated(m: usize, state: usize, total: f64) -> Self {
        let mut times = vec![0.0; m];
        times[state] = total;
        Self { times }
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn m(&self) -> usize {
        self.times.len()
    }

    pub fn total(&self) -> f64 {
        self.times.iter().sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SojournMethod {
    ClosedForm,
    Quadrature,
}

/// Expected per-state sojourns over `(0, tau)` given both endpoint states.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionalSojourn {
    pub profile: SojournProfile,
    /// `p_{from,to}(tau)`, the probability of the conditioning event.
    pub path_probability: f64,
    pub method: SojournMethod,
}

/// Clamps roundoff-sized excursions outside `[0, tau]`; larger ones are errors.
pub(crate) fn finish_profile(mut times: Vec<f64>, tau: f64) -> Result<SojournProfile> {
    let slack = CLAMP_SLACK * tau.max(1.0);
    for (state, t) in times.iter_mut().enumerate() {
        if !t.is_finite() || *t < -slack || *t > tau + slack {
            return Err(Error::NegativeSojourn { state, value: *t });
        }
        *t = t.clamp(0.0, tau);
    }
    Ok(SojournProfile { times })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clamps_roundoff_only() {
        let p = finish_profile(vec![-5e-10, 2.0 + 5e-10, 1.0], 3.0).unwrap();
        assert_eq!(p.times(), &[0.0, 2.0 + 5e-10, 1.0]);
        assert!(finish_profile(vec![-1e-6, 3.0], 3.0).is_err());
        assert!(finish_profile(vec![3.1, 0.0], 3.0).is_err());
        assert!(finish_profile(vec![f64::NAN], 3.0).is_err());
    }

    #[test]
    fn profile_validation() {
        assert!(SojournProfile::new(vec![]).is_err());
        assert!(SojournProfile::new(vec![1.0, -0.5]).is_err());
        let p = SojournProfile::new(vec![1.0, 2.5]).unwrap();
        assert_eq!(p.total(), 3.5);
        assert_eq!(
            SojournProfile::concentrated(3, 1, 2.0).times(),
            &[0.0, 2.0, 0.0]
        );
    }
}
