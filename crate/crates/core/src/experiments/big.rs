use std::time::Instant;

use nalgebra::DMatrix;
use rand::Rng;
use serde::Serialize;

use super::config::{ExperimentConfig, InitialStates, Pooling};
use super::small::draw_state;
use super::{generate_responses, stream_rng};
use crate::ctmc::{simulate_trajectory, Chain, SojournProfile};
use crate::error::Result;
use crate::exec::try_map_indexed;
use crate::regression::{fit_modulated, FitResult, ModulatedDesign, Observation, SojournSource};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckpointEstimate {
    /// Number of blocks included.
    pub q: usize,
    pub observations: usize,
    /// Estimated `vec(beta)`.
    pub coefficients: Vec<f64>,
    pub max_abs_error: f64,
    pub sigma2: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BlockResult {
    pub checkpoints: Vec<CheckpointEstimate>,
    pub seed: u64,
    /// Block `b` draws from ChaCha8 stream `b + 1` of `seed`.
    pub stream_offset: u64,
    pub blocks: usize,
    pub pooling: Pooling,
    pub threads: usize,
    pub elapsed_secs: f64,
    /// Every simulated observation, block by block.
    #[serde(skip)]
    pub observations: Vec<Observation>,
}

struct Block {
    observations: Vec<Observation>,
    sojourns: Vec<SojournProfile>,
}

fn simulate_block(
    config: &ExperimentConfig,
    chain: &Chain,
    pi: Option<&[f64]>,
    block: usize,
) -> Result<Block> {
    let (n, k) = (config.n(), config.k());
    let mut rng = stream_rng(config.seed, block as u64 + 1);
    let mut x = DMatrix::zeros(n, k);
    let mut times = Vec::with_capacity(n);
    let mut initial = Vec::with_capacity(n);
    let mut paths = Vec::with_capacity(n);
    for i in 0..n {
        for v in 0..k {
            let h = config.perturbation[v];
            let noise = if h > 0.0 {
                rng.random_range(-h..h)
            } else {
                0.0
            };
            x[(i, v)] = config.x_expected[(i, v)] + noise;
        }
        let upper = 2.0 * config.t_expected[i];
        let t = loop {
            let t = rng.random_range(0.0..upper);
            if t > 0.0 {
                break t;
            }
        };
        let s0 = match (&config.initial_states, pi) {
            (InitialStates::Fixed(s), _) => s[i],
            (InitialStates::Stationary, Some(pi)) => draw_state(pi, &mut rng),
            (InitialStates::Stationary, None) => {
                unreachable!("stationary distribution computed up front")
            }
        };
        paths.push(simulate_trajectory(&config.rates, t, s0, &mut rng)?);
        times.push(t);
        initial.push(s0);
    }
    let y = generate_responses(&config.beta, config.sigma, &paths, &x, &mut rng)?;

    let mut observations = Vec::with_capacity(n);
    let mut sojourns = Vec::with_capacity(n);
    for i in 0..n {
        let o = Observation {
            x: x.row(i).iter().copied().collect(),
            total_time: times[i],
            initial_state: initial[i],
            final_state: paths[i].final_state,
            response: y[i],
        };
        sojourns.push(
            chain
                .conditional_sojourn(o.total_time, o.initial_state, o.final_state)?
                .profile,
        );
        observations.push(o);
    }
    Ok(Block {
        observations,
        sojourns,
    })
}

fn pooled_fit(blocks: &[Block]) -> Result<FitResult> {
    let obs: Vec<&Observation> = blocks.iter().flat_map(|b| &b.observations).collect();
    let k = obs[0].x.len();
    let x = DMatrix::from_fn(obs.len(), k, |i, v| obs[i].x[v]);
    let t = obs.iter().map(|o| o.total_time).collect();
    let y: Vec<f64> = obs.iter().map(|o| o.response).collect();
    let sojourns = blocks
        .iter()
        .flat_map(|b| b.sojourns.iter().cloned())
        .collect();
    let design = ModulatedDesign::new(x, t, sojourns, SojournSource::ConditionalExpectation)?;
    fit_modulated(&design, &y)
}

fn max_abs_error(estimate: &[f64], truth: &[f64]) -> f64 {
    estimate
        .iter()
        .zip(truth)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
}

/// Large-sample study: `q` independent blocks of `n` randomised observations,
/// with estimates reported at each checkpoint.
pub fn run_big_sample(config: &ExperimentConfig) -> Result<BlockResult> {
    config.validate()?;
    let started = Instant::now();
    let chain = Chain::new(config.rates.clone());
    let pi = match config.initial_states {
        InitialStates::Stationary => Some(chain.stationary_distribution()?.as_slice().to_vec()),
        InitialStates::Fixed(_) => None,
    };
    let exec = config.execution;
    let blocks = try_map_indexed(exec, config.q, |b| {
        simulate_block(config, &chain, pi.as_deref(), b)
    })?;
    let truth = config.beta.as_slice();

    let checkpoints = match config.pooling {
        Pooling::Pooled => try_map_indexed(exec, config.checkpoints.len(), |c| {
            let q = config.checkpoints[c];
            let fit = pooled_fit(&blocks[..q])?;
            Ok(CheckpointEstimate {
                q,
                observations: q * config.n(),
                max_abs_error: max_abs_error(&fit.coefficients, truth),
                coefficients: fit.coefficients,
                sigma2: fit.sigma2,
            })
        })?,
        Pooling::PerBlockMean => {
            let fits = try_map_indexed(exec, config.q, |b| pooled_fit(&blocks[b..b + 1]))?;
            config
                .checkpoints
                .iter()
                .map(|&q| {
                    let p = fits[0].coefficients.len();
                    let mut mean = vec![0.0; p];
                    let mut sigma2 = 0.0;
                    for f in &fits[..q] {
                        for (a, c) in mean.iter_mut().zip(&f.coefficients) {
                            *a += c / q as f64;
                        }
                        sigma2 += f.sigma2 / q as f64;
                    }
                    CheckpointEstimate {
                        q,
                        observations: q * config.n(),
                        max_abs_error: max_abs_error(&mean, truth),
                        coefficients: mean,
                        sigma2,
                    }
                })
                .collect()
        }
    };

    let threads = if exec.is_parallel() {
        #[cfg(feature = "parallel")]
        {
            rayon::current_num_threads()
        }
        #[cfg(not(feature = "parallel"))]
        {
            1
        }
    } else {
        1
    };

    Ok(BlockResult {
        checkpoints,
        seed: config.seed,
        stream_offset: 1,
        blocks: config.q,
        pooling: config.pooling,
        threads,
        elapsed_secs: started.elapsed().as_secs_f64(),
        observations: blocks.into_iter().flat_map(|b| b.observations).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::Execution;

    #[test]
    fn single_block_runs() {
        let r = run_big_sample(&ExperimentConfig::study(1, 3)).unwrap();
        assert_eq!(r.checkpoints.len(), 1);
        assert_eq!(r.checkpoints[0].coefficients.len(), 9);
        assert!(r.checkpoints[0].coefficients.iter().all(|c| c.is_finite()));
        assert_eq!(r.observations.len(), 15);
    }

    #[test]
    fn equal_seeds_equal_results_across_execution_modes() {
        let mut a = ExperimentConfig::study(40, 8);
        a.checkpoints = vec![10, 20, 40];
        a.execution = Execution::Sequential;
        let mut b = a.clone();
        b.execution = Execution::Parallel;
        let ra = run_big_sample(&a).unwrap();
        let rb = run_big_sample(&b).unwrap();
        assert_eq!(ra.checkpoints, rb.checkpoints);
        assert_eq!(ra.observations, rb.observations);
    }

    #[test]
    fn block_times_and_regressors_follow_design() {
        let c = ExperimentConfig::study(30, 2);
        let r = run_big_sample(&c).unwrap();
        for (idx, o) in r.observations.iter().enumerate() {
            let i = idx % 15;
            assert_eq!(o.x[0], 1.0);
            assert!((o.x[1] - c.x_expected[(i, 1)]).abs() < 2.0);
            assert!((o.x[2] - c.x_expected[(i, 2)]).abs() < 1.0);
            assert!(o.total_time > 0.0 && o.total_time < 2.0 * c.t_expected[i]);
        }
    }

    #[test]
    fn per_block_mean_pooling() {
        let mut c = ExperimentConfig::study(20, 4);
        c.pooling = Pooling::PerBlockMean;
        c.checkpoints = vec![10, 20];
        let r = run_big_sample(&c).unwrap();
        assert_eq!(r.checkpoints.len(), 2);
        assert!(r
            .checkpoints
            .iter()
            .all(|cp| cp.coefficients.iter().all(|v| v.is_finite())));
    }
}
