//! Response generation and the two simulation studies.
//!
//! Randomness comes from ChaCha8 streams keyed by `(seed, stream)`. The
//! small-sample study uses stream 0; block `b` of the large-sample study uses
//! stream `b + 1`. Blocks can therefore run in any order or in parallel and
//! still give the same result.

mod big;
mod config;
mod small;

pub use big::{run_big_sample, BlockResult, CheckpointEstimate};
pub use config::{default_checkpoints, ExperimentConfig, InitialStates, Pooling};
pub use small::{run_small_sample, Injected, SmallSampleReport};

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::ctmc::Trajectory;
use crate::error::{Error, Result};
use crate::regression::kron_row;

pub(crate) fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// `Y_i = (Tbar_i ⊗ x_i) vec(beta) + sqrt(t_i) sigma Z_i` using the realised
/// sojourns of each trajectory.
pub fn generate_responses<R: Rng + ?Sized>(
    beta: &DMatrix<f64>,
    sigma: f64,
    trajectories: &[Trajectory],
    x: &DMatrix<f64>,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let (k, m) = beta.shape();
    if trajectories.len() != x.nrows() {
        return Err(Error::ShapeMismatch(format!(
            "{} trajectories for {} regressor rows",
            trajectories.len(),
            x.nrows()
        )));
    }
    if x.ncols() != k {
        return Err(Error::ShapeMismatch(format!(
            "beta has {k} rows, X has {} columns",
            x.ncols()
        )));
    }
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::input(
            "sigma",
            format!("must be finite and >= 0, got {sigma}"),
        ));
    }
    let vec_beta = DVector::from_column_slice(beta.as_slice());
    let mut y = Vec::with_capacity(trajectories.len());
    for (i, tr) in trajectories.iter().enumerate() {
        if tr.sojourns.m() != m {
            return Err(Error::ShapeMismatch(format!(
                "trajectory {i} has {} states, beta has {m}",
                tr.sojourns.m()
            )));
        }
        let xi: Vec<f64> = x.row(i).iter().copied().collect();
        let mean: f64 = kron_row(tr.sojourns.times(), &xi)
            .iter()
            .zip(vec_beta.iter())
            .map(|(a, b)| a * b)
            .sum();
        let z: f64 = StandardNormal.sample(rng);
        y.push(mean + tr.total_time.sqrt() * sigma * z);
    }
    Ok(y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ctmc::simulate_trajectory;
    use crate::study;

    fn paths(seed: u64) -> Vec<Trajectory> {
        let rates = study::rates();
        let mut rng = stream_rng(seed, 0);
        (0..study::N)
            .map(|i| {
                simulate_trajectory(&rates, study::TIMES[i], study::INITIAL_STATES[i], &mut rng)
                    .unwrap()
            })
            .collect()
    }

    #[test]
    fn noiseless_responses_are_the_kronecker_mean() {
        let trs = paths(1);
        let x = study::x_matrix();
        let y = generate_responses(&study::beta(), 0.0, &trs, &x, &mut stream_rng(2, 0)).unwrap();
        for (i, tr) in trs.iter().enumerate() {
            let s = tr.sojourns.times();
            let want: f64 = (0..3)
                .map(|j| s[j] * (0..3).map(|v| x[(i, v)] * study::BETA[v][j]).sum::<f64>())
                .sum();
            assert!((y[i] - want).abs() < 1e-10);
        }
    }

    #[test]
    fn fixed_seed_is_reproducible() {
        let trs = paths(3);
        let x = study::x_matrix();
        let a = generate_responses(&study::beta(), 1.0, &trs, &x, &mut stream_rng(4, 0)).unwrap();
        let b = generate_responses(&study::beta(), 1.0, &trs, &x, &mut stream_rng(4, 0)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn shape_checks() {
        let trs = paths(3);
        let x = study::x_matrix();
        assert!(
            generate_responses(&study::beta(), 1.0, &trs[..3], &x, &mut stream_rng(4, 0)).is_err()
        );
        assert!(generate_responses(&study::beta(), -1.0, &trs, &x, &mut stream_rng(4, 0)).is_err());
    }
}
