use rand::Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use super::sojourn::SojournProfile;
use super::RateMatrix;
use crate::error::{Error, Result};

/// One realised path of the chain over `[0, total_time]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub initial_state: usize,
    /// Jump epochs, strictly increasing and below `total_time`.
    pub jump_times: Vec<f64>,
    /// State entered at each jump.
    pub visited_states: Vec<usize>,
    pub final_state: usize,
    pub total_time: f64,
    pub sojourns: SojournProfile,
}

impl Trajectory {
    pub fn jumps(&self) -> usize {
        self.jump_times.len()
    }
}

/// Per-state occupation times of a piecewise-constant path.
pub fn sojourns_from_path(
    m: usize,
    initial: usize,
    jump_times: &[f64],
    visited: &[usize],
    total_time: f64,
) -> SojournProfile {
    let mut times = vec![0.0; m];
    let mut state = initial;
    let mut last = 0.0;
    for (&at, &next) in jump_times.iter().zip(visited) {
        times[state] += at - last;
        last = at;
        state = next;
    }
    times[state] += total_time - last;
    SojournProfile::new(times).expect("occupation times of an ordered path are non-negative")
}

/// Simulates the chain from `initial` up to `total_time`.
///
/// Holding time in `s` is exponential with rate `exit_rate(s)`; a state with
/// no exits is absorbing. The jump target is drawn proportionally to the
/// outgoing rates.
pub fn simulate_trajectory<R: Rng + ?Sized>(
    rates: &RateMatrix,
    total_time: f64,
    initial: usize,
    rng: &mut R,
) -> Result<Trajectory> {
    let m = rates.m();
    if !(total_time > 0.0 && total_time.is_finite()) {
        return Err(Error::input(
            "total_time",
            format!("must be finite and > 0, got {total_time}"),
        ));
    }
    if initial >= m {
        return Err(Error::input(
            "initial_state",
            format!("must be < {m}, got {initial}"),
        ));
    }

    let mut jump_times = Vec::new();
    let mut visited = Vec::new();
    let mut state = initial;
    let mut now = 0.0;
    loop {
        let exit = rates.exit_rate(state);
        if exit <= 0.0 {
            break;
        }
        let hold = Exp::new(exit).expect("positive rate").sample(rng);
        now += hold;
        if now >= total_time {
            break;
        }
        let next = pick_target(rates, state, exit, rng);
        jump_times.push(now);
        visited.push(next);
        state = next;
    }

    let sojourns = sojourns_from_path(m, initial, &jump_times, &visited, total_time);
    Ok(Trajectory {
        initial_state: initial,
        jump_times,
        visited_states: visited,
        final_state: state,
        total_time,
        sojourns,
    })
}

fn pick_target<R: Rng + ?Sized>(rates: &RateMatrix, from: usize, exit: f64, rng: &mut R) -> usize {
    let u = rng.random::<f64>() * exit;
    let mut acc = 0.0;
    let mut last = from;
    for j in 0..rates.m() {
        let r = rates.rate(from, j);
        if r <= 0.0 {
            continue;
        }
        acc += r;
        last = j;
        if u < acc {
            return j;
        }
    }
    last
}
