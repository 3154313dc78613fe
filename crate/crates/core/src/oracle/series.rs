use nalgebra::DMatrix;

use crate::ctmc::Generator;
use crate::error::{Error, Result};

const REMAINDER_TOL: f64 = 1e-13;

fn inf_norm(a: &DMatrix<f64>) -> f64 {
    a.row_iter()
        .map(|r| r.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// `exp(tA)` by scaling and squaring a truncated Taylor series.
///
/// `tA` is scaled by `2^-s` so its infinity norm is at most 0.5; the series
/// is cut once the tail bound `2 c^(K+1) / (K+1)!` drops below 1e-13.
pub fn matrix_exp_series(g: &Generator, t: f64) -> Result<DMatrix<f64>> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::input(
            "t",
            format!("must be finite and >= 0, got {t}"),
        ));
    }
    let m = g.m();
    let b = g.as_matrix() * t;
    let norm = inf_norm(&b);
    let mut squarings = 0u32;
    while norm / 2f64.powi(squarings as i32) > 0.5 {
        squarings += 1;
    }
    let c = b / 2f64.powi(squarings as i32);
    let c_norm = inf_norm(&c);

    let mut sum = DMatrix::<f64>::identity(m, m);
    let mut term = DMatrix::<f64>::identity(m, m);
    let mut bound = 1.0;
    let mut k = 0usize;
    loop {
        // bound = c^(k+1) / (k+1)!
        bound *= c_norm / (k + 1) as f64;
        if 2.0 * bound < REMAINDER_TOL {
            break;
        }
        k += 1;
        term = &term * &c / k as f64;
        sum += &term;
    }

    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    Ok(sum)
}
