use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::ctmc::{simulate_trajectory, RateMatrix, SojournProfile};
use crate::error::{Error, Result};
use crate::exec::{map_indexed, Execution};

pub const MC_MIN_ACCEPTED: usize = 1_000;

const CHUNK_ATTEMPTS: usize = 4_096;
const TRIAL_CHUNKS: usize = 16;
const MIN_ACCEPTANCE: f64 = 1e-4;

/// Rejection-sampling estimate of a conditional sojourn profile.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct McSojourn {
    pub mean: SojournProfile,
    /// Standard error of each mean component.
    pub std_errors: Vec<f64>,
    pub accepted: usize,
    pub attempted: usize,
}

/// Simulates paths from `from` over `tau`, keeps those ending in `to`, and
/// averages their occupation times.
///
/// Attempts are grouped into fixed-size chunks; chunk `c` draws from the
/// ChaCha stream `c` of `seed`. The first `n_accepted` accepted paths in chunk
/// order are used, so the estimate does not depend on `exec`.
pub fn mc_conditional_sojourn(
    rates: &RateMatrix,
    tau: f64,
    from: usize,
    to: usize,
    n_accepted: usize,
    seed: u64,
    exec: Execution,
) -> Result<McSojourn> {
    let m = rates.m();
    if n_accepted < MC_MIN_ACCEPTED {
        return Err(Error::input(
            "n_accepted",
            format!("must be >= {MC_MIN_ACCEPTED}, got {n_accepted}"),
        ));
    }
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::input(
            "tau",
            format!("must be finite and > 0, got {tau}"),
        ));
    }
    if from >= m || to >= m {
        return Err(Error::input(
            "state",
            format!("states must be < {m}, got {from} -> {to}"),
        ));
    }

    let run_chunk = |chunk: usize| -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(chunk as u64);
        let mut kept = Vec::new();
        for _ in 0..CHUNK_ATTEMPTS {
            let tr = simulate_trajectory(rates, tau, from, &mut rng).expect("validated inputs");
            if tr.final_state == to {
                kept.extend_from_slice(tr.sojourns.times());
            }
        }
        kept
    };

    let mut samples: Vec<f64> = Vec::new();
    let mut chunks_done = 0usize;
    let mut wave = TRIAL_CHUNKS;
    loop {
        let results = map_indexed(exec, wave, |c| run_chunk(chunks_done + c));
        for r in results {
            samples.extend(r);
        }
        chunks_done += wave;
        let accepted = samples.len() / m;
        let attempted = chunks_done * CHUNK_ATTEMPTS;
        let rate = accepted as f64 / attempted as f64;
        if chunks_done == TRIAL_CHUNKS && rate < MIN_ACCEPTANCE {
            return Err(Error::AcceptanceTooLow { rate });
        }
        if accepted >= n_accepted {
            break;
        }
        let missing = (n_accepted - accepted) as f64;
        let needed = (missing / (rate * CHUNK_ATTEMPTS as f64) * 1.1).ceil() as usize;
        wave = needed.max(1);
    }

    samples.truncate(n_accepted * m);
    let n = n_accepted as f64;
    let mut mean = vec![0.0; m];
    for row in samples.chunks_exact(m) {
        for (acc, v) in mean.iter_mut().zip(row) {
            *acc += v;
        }
    }
    for v in &mut mean {
        *v /= n;
    }
    let mut var = vec![0.0; m];
    for row in samples.chunks_exact(m) {
        for ((acc, v), mu) in var.iter_mut().zip(row).zip(&mean) {
            *acc += (v - mu) * (v - mu);
        }
    }
    let std_errors = var
        .iter()
        .map(|s| (s / (n - 1.0)).sqrt() / n.sqrt())
        .collect();

    Ok(McSojourn {
        mean: SojournProfile::new(mean)?,
        std_errors,
        accepted: n_accepted,
        attempted: chunks_done * CHUNK_ATTEMPTS,
    })
}
