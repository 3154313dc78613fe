//! Slow, independent reference implementations.
//!
//! None of these share code with the spectral closed forms in [`crate::ctmc`]:
//! the matrix exponential is a scaled-and-squared Taylor series, conditional
//! sojourns are integrated numerically from that series, and the Monte Carlo
//! estimator works from simulated paths alone.

mod agreement;
mod gauss;
mod montecarlo;
mod quadrature;
mod series;

pub use agreement::{
    compare, random_instances, Agreement, Instance, DETERMINISTIC_TOL, MC_Z_LIMIT,
};
pub use gauss::GaussLegendre;
pub use montecarlo::{mc_conditional_sojourn, McSojourn, MC_MIN_ACCEPTED};
pub use quadrature::{quadrature_sojourn, QuadratureSpec};
pub use series::matrix_exp_series;
