//! The modulating continuous-time Markov chain.
//!
//! A chain is described by its off-diagonal transition rates. From those we
//! build the generator `A = rates - diag(exit rates)`, its eigendecomposition,
//! the transition matrix `P(t) = exp(tA)` and the expected time spent in each
//! state over `(0, tau)` conditional on both endpoint states.

mod simulate;
mod sojourn;
mod spectral;

pub use simulate::{simulate_trajectory, sojourns_from_path, Trajectory};
pub use sojourn::{ConditionalSojourn, SojournMethod, SojournProfile, PATH_PROB_TOL};
pub use spectral::{eigenvalues, spectral_decompose, SpectralDecomposition, EIG_GAP_REL_TOL};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::oracle::{self, QuadratureSpec};

/// Off-diagonal transition rates of a CTMC. Row `i` holds the rates out of state `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct RateMatrix {
    rates: DMatrix<f64>,
}

impl RateMatrix {
    pub fn new(rates: DMatrix<f64>) -> Result<Self> {
        let m = rates.nrows();
        if m == 0 {
            return Err(Error::InvalidRates("at least one state is required".into()));
        }
        if rates.ncols() != m {
            return Err(Error::InvalidRates(format!(
                "matrix must be square, got {}x{}",
                m,
                rates.ncols()
            )));
        }
        for i in 0..m {
            for j in 0..m {
                let r = rates[(i, j)];
                if !r.is_finite() {
                    return Err(Error::InvalidRates(format!("rate ({i},{j}) is not finite")));
                }
                if i == j && r != 0.0 {
                    return Err(Error::InvalidRates(format!(
                        "diagonal entry ({i},{i}) must be 0, got {r}"
                    )));
                }
                if r < 0.0 {
                    return Err(Error::InvalidRates(format!(
                        "rate ({i},{j}) is negative: {r}"
                    )));
                }
            }
        }
        Ok(Self { rates })
    }

    pub fn from_rows(rows: &[&[f64]]) -> Result<Self> {
        let m = rows.len();
        if rows.iter().any(|r| r.len() != m) {
            return Err(Error::InvalidRates("rows must all have length m".into()));
        }
        Self::new(DMatrix::from_fn(m, m, |i, j| rows[i][j]))
    }

    /// Chain that never leaves its initial state.
    pub fn zeros(m: usize) -> Result<Self> {
        Self::new(DMatrix::zeros(m, m))
    }

    pub fn m(&self) -> usize {
        self.rates.nrows()
    }

    pub fn rate(&self, from: usize, to: usize) -> f64 {
        self.rates[(from, to)]
    }

    /// Total rate of leaving `state`.
    pub fn exit_rate(&self, state: usize) -> f64 {
        self.rates.row(state).sum()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.rates
    }

    pub fn generator(&self) -> Generator {
        build_generator(self)
    }
}

/// Infinitesimal generator `A = rates - diag(exit rates)`; rows sum to zero.
#[derive(Debug, Clone, PartialEq)]
pub struct Generator {
    a: DMatrix<f64>,
}

impl Generator {
    /// Accepts an arbitrary matrix after checking the generator sign pattern
    /// and zero row sums.
    pub fn from_matrix(a: DMatrix<f64>) -> Result<Self> {
        let m = a.nrows();
        if m == 0 || a.ncols() != m {
            return Err(Error::InvalidRates(
                "generator must be square and non-empty".into(),
            ));
        }
        let scale = a.amax().max(1.0);
        for i in 0..m {
            for j in 0..m {
                let v = a[(i, j)];
                if !v.is_finite() || (i != j && v < 0.0) || (i == j && v > 0.0) {
                    return Err(Error::InvalidRates(format!(
                        "entry ({i},{j}) = {v} violates the generator sign pattern"
                    )));
                }
            }
            let s = a.row(i).sum();
            if s.abs() > 1e-12 * scale {
                return Err(Error::InvalidRates(format!("row {i} sums to {s}, not 0")));
            }
        }
        Ok(Self { a })
    }

    pub fn m(&self) -> usize {
        self.a.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.a
    }
}

pub fn build_generator(rates: &RateMatrix) -> Generator {
    let m = rates.m();
    let mut a = rates.as_matrix().clone();
    for i in 0..m {
        a[(i, i)] = -rates.exit_rate(i);
    }
    Generator { a }
}

/// Stationary distribution `pi` with `pi A = 0` and `sum(pi) = 1`.
///
/// Solved as `A^T pi = 0` with the last equation replaced by the
/// normalisation row. The zero eigenvalue must be simple.
pub fn stationary_distribution(g: &Generator) -> Result<DVector<f64>> {
    let m = g.m();
    let a = g.as_matrix();
    let scale = a.amax().max(1.0);
    let zero_tol = 1e-9 * scale;
    let multiplicity = eigenvalues(a)?
        .iter()
        .filter(|z| z.norm() < zero_tol)
        .count();
    if multiplicity != 1 {
        return Err(Error::ReducibleChain { multiplicity });
    }

    let mut system = a.transpose();
    system.row_mut(m - 1).fill(1.0);
    let mut rhs = DVector::zeros(m);
    rhs[m - 1] = 1.0;
    let mut pi = system
        .lu()
        .solve(&rhs)
        .ok_or(Error::ReducibleChain { multiplicity: 2 })?;
    for p in pi.iter_mut() {
        if *p < 0.0 {
            *p = 0.0;
        }
    }
    let total = pi.sum();
    pi /= total;
    Ok(pi)
}

/// A chain bundled with everything needed to evaluate transition
/// probabilities and conditional sojourns.
///
/// When the generator's spectrum is not well separated the closed forms are
/// unusable; the chain then evaluates through the series exponential and
/// adaptive quadrature instead.
#[derive(Debug, Clone)]
pub struct Chain {
    rates: RateMatrix,
    generator: Generator,
    spectrum: std::result::Result<SpectralDecomposition, String>,
    quadrature: QuadratureSpec,
}

impl Chain {
    pub fn new(rates: RateMatrix) -> Self {
        let generator = rates.generator();
        let spectrum = spectral_decompose(&generator).map_err(|e| e.to_string());
        Self {
            rates,
            generator,
            spectrum,
            quadrature: QuadratureSpec::default(),
        }
    }

    pub fn with_quadrature(mut self, spec: QuadratureSpec) -> Self {
        self.quadrature = spec;
        self
    }

    pub fn rates(&self) -> &RateMatrix {
        &self.rates
    }

    pub fn generator(&self) -> &Generator {
        &self.generator
    }

    pub fn m(&self) -> usize {
        self.rates.m()
    }

    pub fn spectrum(&self) -> Option<&SpectralDecomposition> {
        self.spectrum.as_ref().ok()
    }

    /// Why the closed forms are disabled, if they are.
    pub fn fallback_reason(&self) -> Option<&str> {
        self.spectrum.as_ref().err().map(String::as_str)
    }

    pub fn stationary_distribution(&self) -> Result<DVector<f64>> {
        stationary_distribution(&self.generator)
    }

    pub fn transition_matrix(&self, t: f64) -> Result<DMatrix<f64>> {
        match &self.spectrum {
            Ok(sd) => sd.transition_matrix(t),
            Err(_) => oracle::matrix_exp_series(&self.generator, t),
        }
    }

    pub fn conditional_sojourn(
        &self,
        tau: f64,
        from: usize,
        to: usize,
    ) -> Result<ConditionalSojourn> {
        match &self.spectrum {
            Ok(sd) => sd.conditional_sojourn(tau, from, to),
            Err(_) => oracle::quadrature_sojourn(&self.generator, tau, from, to, &self.quadrature),
        }
    }
}
