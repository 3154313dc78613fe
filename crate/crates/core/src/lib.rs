//! Linear regression with coefficients modulated by a continuous-time Markov
//! chain.
//!
//! Each observation runs for a known total time while an unobserved
//! environment chain moves between states; only its initial and final states
//! are recorded. The estimator replaces the unknown per-state sojourn times
//! by their conditional expectations given those endpoints and then applies
//! generalised least squares to a Kronecker-structured design.
//!
//! - [`ctmc`]: rates, generator, spectral transition probabilities,
//!   conditional expected sojourns, path simulation.
//! - [`regression`]: time-scaled and modulated GLS estimators.
//! - [`experiments`]: response generation and the small/large sample studies.
//! - [`oracle`]: independent series, quadrature and Monte Carlo references.
//! - [`io`]: CSV and key-value file formats.
//! - [`study`]: the embedded reference dataset and its reported figures.
//! - [`reproduce`]: recomputation of those figures with pass/fail checks.

pub mod ctmc;
pub mod error;
pub mod exec;
pub mod experiments;
pub mod io;
pub mod oracle;
pub mod regression;
pub mod reproduce;
pub mod study;

pub use error::{Error, Result};
pub use exec::Execution;
