//! Recomputes the reference study's deterministic figures from its recorded
//! inputs and compares each against the reported value.

use serde::Serialize;

use crate::ctmc::Chain;
use crate::error::Result;
use crate::exec::Execution;
use crate::oracle::{quadrature_sojourn, QuadratureSpec};
use crate::regression::{
    assemble_modulated_design, expected_sojourns, fit_modulated, fit_time_scaled, predict_expected,
    weighted_rss_against_mean, SojournSource,
};
use crate::study::{self, N};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum Tolerance {
    /// `|actual - expected| <= value` for every component.
    Absolute(f64),
    /// `|actual - expected| <= value * |expected|`.
    Relative(f64),
    /// `actual <= value`; `expected` is informational.
    AtMost(f64),
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub id: &'static str,
    pub description: &'static str,
    pub expected: Vec<f64>,
    pub actual: Vec<f64>,
    pub tolerance: Tolerance,
    /// Largest deviation in the tolerance's own units.
    pub worst: f64,
    pub passed: bool,
}

impl Check {
    fn new(
        id: &'static str,
        description: &'static str,
        expected: Vec<f64>,
        actual: Vec<f64>,
        tolerance: Tolerance,
    ) -> Self {
        assert_eq!(expected.len(), actual.len(), "check {id}");
        let pairs = expected.iter().zip(&actual);
        let (worst, limit) = match tolerance {
            Tolerance::Absolute(tol) => {
                (pairs.map(|(e, a)| (a - e).abs()).fold(0.0, f64::max), tol)
            }
            Tolerance::Relative(tol) => (
                pairs
                    .map(|(e, a)| (a - e).abs() / e.abs())
                    .fold(0.0, f64::max),
                tol,
            ),
            Tolerance::AtMost(tol) => (
                actual.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                tol,
            ),
        };
        Self {
            id,
            description,
            expected,
            actual,
            tolerance,
            worst,
            passed: worst <= limit,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Reproduction {
    pub checks: Vec<Check>,
}

impl Reproduction {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn get(&self, id: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.id == id)
    }
}

fn flat_sojourn_grid() -> Vec<f64> {
    (0..N)
        .flat_map(|i| (0..study::M).map(move |j| study::REPORTED_SOJOURNS[j][i]))
        .collect()
}

/// Runs every deterministic check. `responses` replaces the recorded
/// first-run Y (used as a negative control).
pub fn reproduce(responses: Option<&[f64; N]>, exec: Execution) -> Result<Reproduction> {
    let y = responses.unwrap_or(&study::RESPONSES);
    let data = study::dataset_with(y);
    let chain = Chain::new(study::rates());
    let x = study::x_matrix();
    let t = study::TIMES;
    let mut checks = Vec::new();

    let pi = chain.stationary_distribution()?;
    checks.push(Check::new(
        "1",
        "stationary distribution",
        study::REPORTED_STATIONARY.to_vec(),
        pi.as_slice().to_vec(),
        Tolerance::Absolute(1e-3),
    ));

    let sojourns = expected_sojourns(&chain, &data, exec)?;
    let closed: Vec<f64> = sojourns
        .iter()
        .flat_map(|s| s.profile.times().to_vec())
        .collect();
    checks.push(Check::new(
        "2a",
        "conditional sojourn grid, closed form",
        flat_sojourn_grid(),
        closed,
        Tolerance::Absolute(0.05),
    ));
    let spec = QuadratureSpec::default();
    let quad = data
        .observations()
        .iter()
        .map(|o| {
            quadrature_sojourn(
                chain.generator(),
                o.total_time,
                o.initial_state,
                o.final_state,
                &spec,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let quad: Vec<f64> = quad
        .iter()
        .flat_map(|s| s.profile.times().to_vec())
        .collect();
    checks.push(Check::new(
        "2b",
        "conditional sojourn grid, quadrature",
        flat_sojourn_grid(),
        quad,
        Tolerance::Absolute(0.05),
    ));

    let simple = fit_time_scaled(&x, &t, y)?;
    checks.push(Check::new(
        "3a",
        "time-scaled fit coefficients",
        study::REPORTED_SIMPLE_BETA.to_vec(),
        simple.coefficients.clone(),
        Tolerance::Absolute(1e-3),
    ));
    checks.push(Check::new(
        "3b",
        "time-scaled fit weighted RSS",
        vec![study::REPORTED_SIMPLE_RSS],
        vec![simple.weighted_rss],
        Tolerance::Relative(5e-3),
    ));
    checks.push(Check::new(
        "3c",
        "baseline weighted RSS",
        vec![study::REPORTED_BASELINE_RSS],
        vec![weighted_rss_against_mean(&t, y)?],
        Tolerance::Relative(1e-2),
    ));

    let design = assemble_modulated_design(
        &data,
        sojourns.iter().map(|s| s.profile.clone()).collect(),
        SojournSource::ConditionalExpectation,
    )?;
    let modulated = fit_modulated(&design, y)?;
    checks.push(Check::new(
        "4a",
        "modulated fit coefficient matrix",
        study::reported_modulated_beta().as_slice().to_vec(),
        modulated.coefficients.clone(),
        Tolerance::Absolute(1e-2),
    ));
    checks.push(Check::new(
        "4b",
        "modulated fit weighted RSS",
        vec![study::REPORTED_MODULATED_RSS],
        vec![modulated.weighted_rss],
        Tolerance::Relative(1e-2),
    ));
    checks.push(Check::new(
        "4c",
        "modulated fit variance estimate",
        vec![study::REPORTED_SIGMA2],
        vec![modulated.sigma2],
        Tolerance::Relative(1e-2),
    ));

    let expected_y = predict_expected(&design, &study::beta())?;
    checks.push(Check::new(
        "5",
        "expected responses",
        study::REPORTED_EXPECTED_Y.to_vec(),
        expected_y,
        Tolerance::Absolute(0.1),
    ));

    let ey = &study::REPORTED_EXPECTED_Y;
    let ey_mod = fit_modulated(&design, ey)?;
    let ey_simple = fit_time_scaled(&x, &t, ey)?;
    checks.push(Check::new(
        "6a",
        "modulated fit on expected responses, weighted RSS",
        vec![study::REPORTED_EY_MODULATED_RSS],
        vec![ey_mod.weighted_rss],
        Tolerance::AtMost(1e-2),
    ));
    checks.push(Check::new(
        "6b",
        "modulated fit on expected responses, coefficients",
        study::REPORTED_EY_VEC_BETA.to_vec(),
        ey_mod.coefficients.clone(),
        Tolerance::Absolute(1e-2),
    ));
    checks.push(Check::new(
        "6c",
        "modulated fit on expected responses, last state column",
        study::REPORTED_EY_VEC_BETA[6..].to_vec(),
        ey_mod.coefficients[6..].to_vec(),
        Tolerance::Absolute(1e-2),
    ));
    checks.push(Check::new(
        "6d",
        "time-scaled fit on expected responses, coefficients",
        study::REPORTED_EY_SIMPLE_BETA.to_vec(),
        ey_simple.coefficients,
        Tolerance::Absolute(1e-2),
    ));
    checks.push(Check::new(
        "6e",
        "time-scaled fit on expected responses, weighted RSS",
        vec![study::REPORTED_EY_SIMPLE_RSS],
        vec![ey_simple.weighted_rss],
        Tolerance::Relative(1e-2),
    ));

    Ok(Reproduction { checks })
}
