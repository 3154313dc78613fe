//! Inputs and reported outputs of the three-state, fifteen-observation
//! reference study.
//!
//! States are labelled 0, 1, 2; row `i` of [`RATES`] holds the rates out of
//! state `i`. Reported values are stored as printed (three decimals for
//! estimates, one decimal for sojourn times).

use nalgebra::DMatrix;

use crate::ctmc::RateMatrix;
use crate::regression::{Dataset, Observation};

pub const M: usize = 3;
pub const K: usize = 3;
pub const N: usize = 15;

pub const RATES: [[f64; 3]; 3] = [[0.0, 0.2, 0.3], [0.1, 0.0, 0.2], [0.4, 0.0, 0.0]];

/// Regressor columns: intercept, then two covariates.
pub const X_COL2: [f64; N] = [
    4.0, 5.0, 7.0, 3.0, 8.0, 2.0, 3.0, 9.0, 5.0, 4.0, 6.0, 3.0, 2.0, 5.0, 7.0,
];
pub const X_COL3: [f64; N] = [
    1.1, 2.5, 4.9, 0.9, 3.4, 2.4, 1.9, 4.1, 4.9, 2.6, 3.6, 2.9, 1.6, 3.5, 1.9,
];

pub const TIMES: [f64; N] = [
    5.0, 8.0, 3.0, 6.0, 9.0, 6.0, 4.0, 6.0, 9.0, 8.0, 5.0, 7.0, 8.0, 10.0, 5.0,
];
pub const INITIAL_STATES: [usize; N] = [1, 0, 2, 2, 1, 1, 0, 0, 1, 2, 1, 1, 0, 0, 2];

/// Final states and responses of the recorded first simulation run.
pub const FINAL_STATES: [usize; N] = [0, 2, 0, 2, 2, 0, 1, 1, 1, 2, 2, 1, 0, 1, 0];
pub const RESPONSES: [f64; N] = [
    67.0, 230.0, 231.0, 174.0, 296.0, 126.0, 43.0, 226.0, 427.0, 187.0, 284.0, 179.0, 146.0, 346.0,
    262.0,
];

/// True coefficient matrix (k x m), rows are regressors.
pub const BETA: [[f64; 3]; 3] = [[0.0, 2.0, 4.0], [1.0, 3.0, 6.0], [2.0, 5.0, 8.0]];
pub const VEC_BETA: [f64; 9] = [0.0, 1.0, 2.0, 2.0, 3.0, 5.0, 4.0, 6.0, 8.0];
pub const SIGMA: f64 = 1.0;

pub const REPORTED_TOTAL_TIME: f64 = 99.0;
pub const REPORTED_STATIONARY: [f64; 3] = [0.364, 0.242, 0.394];

/// Conditional sojourn grid, `[state][observation]`.
pub const REPORTED_SOJOURNS: [[f64; N]; 3] = [
    [
        1.8, 3.2, 1.4, 1.5, 1.9, 2.1, 1.7, 2.6, 1.7, 2.2, 0.7, 1.1, 4.5, 4.0, 2.3,
    ],
    [
        2.0, 1.2, 0.1, 0.3, 3.4, 2.3, 2.0, 2.7, 5.9, 0.7, 2.2, 5.2, 1.0, 3.9, 0.2,
    ],
    [
        1.2, 3.6, 1.5, 4.2, 3.7, 1.6, 0.3, 0.7, 1.4, 5.1, 2.1, 0.7, 2.5, 2.1, 2.5,
    ],
];

pub const REPORTED_SIMPLE_BETA: [f64; 3] = [2.060, 3.454, 5.090];
pub const REPORTED_SIMPLE_RSS: f64 = 9816.0;
pub const REPORTED_BASELINE_RSS: f64 = 23200.0;

/// Modulated estimate (k x m), rows are regressors.
pub const REPORTED_MODULATED_BETA: [[f64; 3]; 3] = [
    [-10.843, -2.785, 3.168],
    [5.013, -8.492, 8.452],
    [8.099, 18.666, 0.857],
];
pub const REPORTED_MODULATED_RSS: f64 = 4674.0;
pub const REPORTED_SIGMA2: f64 = 934.8;

pub const REPORTED_EXPECTED_Y: [f64; N] = [
    44.7, 193.3, 131.1, 122.9, 295.1, 54.9, 9.8, 65.1, 99.9, 247.8, 148.7, 32.8, 70.9, 126.7, 155.5,
];

/// Fits with [`REPORTED_EXPECTED_Y`] used as responses.
pub const REPORTED_EY_VEC_BETA: [f64; 9] = [
    0.024, 8.091e-3, -0.022, 0.015, -4.27e-4, -3.658e-3, 3.992, 5.989, 8.023,
];
pub const REPORTED_EY_MODULATED_RSS: f64 = 6.207e-4;
pub const REPORTED_EY_SIMPLE_BETA: [f64; 3] = [7.503, 3.485, -2.149];
pub const REPORTED_EY_SIMPLE_RSS: f64 = 8.25e3;

/// Large-sample estimates of `vec(beta)` at each block count.
pub const REPORTED_BLOCK_COUNTS: [usize; 9] = [500, 1000, 1500, 2000, 2500, 3000, 3500, 4000, 4500];
pub const REPORTED_BLOCK_ESTIMATES: [[f64; 9]; 9] = [
    [
        0.112, 0.777, 0.058, -0.02, 0.179, 0.154, 0.239, 0.400, 0.367,
    ],
    [
        0.711, 0.770, 0.881, 0.898, 0.992, 0.868, 0.851, 0.888, 0.948,
    ],
    [
        2.566, 2.158, 2.289, 2.276, 2.207, 2.255, 2.201, 2.090, 2.012,
    ],
    [
        2.746, 1.572, 2.170, 2.306, 2.105, 2.092, 2.026, 2.047, 2.061,
    ],
    [
        3.030, 3.164, 3.035, 3.014, 3.025, 3.050, 3.063, 3.034, 3.011,
    ],
    [
        4.707, 4.932, 4.935, 4.913, 4.948, 4.928, 4.934, 4.960, 4.978,
    ],
    [
        3.496, 3.568, 3.634, 3.572, 3.556, 3.776, 3.841, 3.789, 3.738,
    ],
    [
        6.152, 6.079, 6.058, 6.061, 6.113, 6.105, 6.099, 6.071, 6.079,
    ],
    [
        7.969, 8.053, 7.964, 8.005, 7.904, 7.854, 7.877, 7.910, 7.903,
    ],
];

/// Half-widths of the uniform perturbations applied to each regressor column
/// in the large-sample experiment.
pub const PERTURBATION: [f64; 3] = [0.0, 2.0, 1.0];

pub fn rates() -> RateMatrix {
    RateMatrix::from_rows(&[&RATES[0], &RATES[1], &RATES[2]]).expect("valid study rates")
}

pub fn x_matrix() -> DMatrix<f64> {
    DMatrix::from_fn(N, K, |i, v| match v {
        0 => 1.0,
        1 => X_COL2[i],
        _ => X_COL3[i],
    })
}

pub fn beta() -> DMatrix<f64> {
    DMatrix::from_fn(K, M, |v, j| BETA[v][j])
}

pub fn reported_modulated_beta() -> DMatrix<f64> {
    DMatrix::from_fn(K, M, |v, j| REPORTED_MODULATED_BETA[v][j])
}

/// The first-run dataset with the given responses.
pub fn dataset_with(responses: &[f64; N]) -> Dataset {
    let x = x_matrix();
    let observations = (0..N)
        .map(|i| Observation {
            x: x.row(i).iter().copied().collect(),
            total_time: TIMES[i],
            initial_state: INITIAL_STATES[i],
            final_state: FINAL_STATES[i],
            response: responses[i],
        })
        .collect();
    Dataset::new(observations, M).expect("valid study dataset")
}

pub fn dataset() -> Dataset {
    dataset_with(&RESPONSES)
}
