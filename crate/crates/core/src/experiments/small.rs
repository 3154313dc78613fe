use rand::Rng;
use serde::Serialize;

use super::config::{ExperimentConfig, InitialStates};
use super::{generate_responses, stream_rng};
use crate::ctmc::{simulate_trajectory, Chain, ConditionalSojourn, SojournProfile};
use crate::error::{Error, Result};
use crate::regression::{
    assemble_modulated_design, expected_sojourns, fit_modulated, fit_time_scaled,
    weighted_rss_against_mean, Dataset, FitResult, Observation, SojournSource,
};

/// Recorded final states and responses used instead of a fresh simulation.
#[derive(Debug, Clone)]
pub struct Injected {
    pub final_states: Vec<usize>,
    pub responses: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SmallSampleReport {
    pub total_time: f64,
    pub initial_states: Vec<usize>,
    pub final_states: Vec<usize>,
    pub responses: Vec<f64>,
    /// Realised sojourns, when the run was simulated.
    pub realized_sojourns: Option<Vec<SojournProfile>>,
    /// Conditional expected sojourns given `(t_i, I_i, J_i)`.
    pub sojourns: Vec<ConditionalSojourn>,
    pub simple: FitResult,
    pub baseline_rss: f64,
    pub modulated: FitResult,
}

/// Draws a state from a probability vector.
pub(crate) fn draw_state<R: Rng + ?Sized>(pi: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (s, p) in pi.iter().enumerate() {
        acc += p;
        if u < acc {
            return s;
        }
    }
    pi.len() - 1
}

/// One realisation of the fixed-design study (or the injected record), fitted
/// by both the time-scaled and the modulated estimator.
pub fn run_small_sample(
    config: &ExperimentConfig,
    injected: Option<&Injected>,
) -> Result<SmallSampleReport> {
    config.validate()?;
    let n = config.n();
    let chain = Chain::new(config.rates.clone());
    let mut rng = stream_rng(config.seed, 0);

    let initial_states: Vec<usize> = match (&config.initial_states, injected) {
        (InitialStates::Fixed(s), _) => s.clone(),
        (InitialStates::Stationary, None) => {
            let pi = chain.stationary_distribution()?;
            (0..n)
                .map(|_| draw_state(pi.as_slice(), &mut rng))
                .collect()
        }
        (InitialStates::Stationary, Some(_)) => {
            return Err(Error::input(
                "initial_states",
                "injected data needs fixed initial states",
            ));
        }
    };

    let (final_states, responses, realized) = match injected {
        Some(inj) => {
            if inj.final_states.len() != n || inj.responses.len() != n {
                return Err(Error::ShapeMismatch(format!(
                    "injected data has {} states and {} responses for {n} observations",
                    inj.final_states.len(),
                    inj.responses.len()
                )));
            }
            (inj.final_states.clone(), inj.responses.clone(), None)
        }
        None => {
            let paths = (0..n)
                .map(|i| {
                    simulate_trajectory(
                        &config.rates,
                        config.t_expected[i],
                        initial_states[i],
                        &mut rng,
                    )
                })
                .collect::<Result<Vec<_>>>()?;
            let y = generate_responses(
                &config.beta,
                config.sigma,
                &paths,
                &config.x_expected,
                &mut rng,
            )?;
            let finals = paths.iter().map(|p| p.final_state).collect();
            let soj = paths.into_iter().map(|p| p.sojourns).collect();
            (finals, y, Some(soj))
        }
    };

    let observations = (0..n)
        .map(|i| Observation {
            x: config.x_expected.row(i).iter().copied().collect(),
            total_time: config.t_expected[i],
            initial_state: initial_states[i],
            final_state: final_states[i],
            response: responses[i],
        })
        .collect();
    let dataset = Dataset::new(observations, config.m())?;

    let simple = fit_time_scaled(&config.x_expected, &config.t_expected, &responses)?;
    let baseline_rss = weighted_rss_against_mean(&config.t_expected, &responses)?;
    let sojourns = expected_sojourns(&chain, &dataset, config.execution)?;
    let design = assemble_modulated_design(
        &dataset,
        sojourns.iter().map(|s| s.profile.clone()).collect(),
        SojournSource::ConditionalExpectation,
    )?;
    let modulated = fit_modulated(&design, &responses)?;

    Ok(SmallSampleReport {
        total_time: config.t_expected.iter().sum(),
        initial_states,
        final_states,
        responses,
        realized_sojourns: realized,
        sojourns,
        simple,
        baseline_rss,
        modulated,
    })
}
