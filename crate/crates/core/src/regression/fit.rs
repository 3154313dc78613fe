use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::{ModulatedDesign, SojournSource};
use crate::error::{Error, Result};

/// Normal matrices with a larger 2-norm condition number are rejected.
pub const CONDITION_LIMIT: f64 = 1e12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    /// `vec(beta)`: coefficient `(v, j)` at index `j * k + v`.
    pub coefficients: Vec<f64>,
    pub k: usize,
    pub m: usize,
    /// `weighted_rss / dof`.
    pub sigma2: f64,
    /// `(Y - fitted)^T diag(1/t) (Y - fitted)`.
    pub weighted_rss: f64,
    pub dof: usize,
    pub fitted: Vec<f64>,
    pub condition_number: f64,
    pub sojourn_source: SojournSource,
}

impl FitResult {
    /// Coefficients as the `k x m` matrix.
    pub fn beta_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_column_slice(self.k, self.m, &self.coefficients)
    }
}

/// Solves `normal * beta = rhs` for a symmetric positive definite `normal`.
fn solve_normal_equations(
    normal: &DMatrix<f64>,
    rhs: &DVector<f64>,
) -> Result<(DVector<f64>, f64)> {
    let eig = SymmetricEigen::new(normal.clone());
    let hi = eig.eigenvalues.iter().fold(0.0_f64, |a, &b| a.max(b.abs()));
    let lo = eig.eigenvalues.iter().fold(f64::INFINITY, |a, &b| a.min(b));
    let condition = if lo > 0.0 { hi / lo } else { f64::INFINITY };
    if !(condition <= CONDITION_LIMIT) {
        return Err(Error::RankDeficient { condition });
    }
    let chol = normal
        .clone()
        .cholesky()
        .ok_or(Error::RankDeficient { condition })?;
    Ok((chol.solve(rhs), condition))
}

fn check_inputs(n: usize, t: &[f64], y: &[f64], params: usize) -> Result<()> {
    if t.len() != n || y.len() != n {
        return Err(Error::ShapeMismatch(format!(
            "{n} design rows, {} times, {} responses",
            t.len(),
            y.len()
        )));
    }
    if let Some(i) = t.iter().position(|v| !(*v > 0.0 && v.is_finite())) {
        return Err(Error::input(
            "t",
            format!("observation {i}: total time must be > 0"),
        ));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::input("y", "responses must be finite"));
    }
    if n < params + 2 {
        return Err(Error::InsufficientData { n, params });
    }
    Ok(())
}

fn weighted_rss(y: &[f64], fitted: &[f64], t: &[f64]) -> f64 {
    y.iter()
        .zip(fitted)
        .zip(t)
        .map(|((y, f), t)| (y - f) * (y - f) / t)
        .sum()
}

/// GLS fit of `Y_i = t_i x_i beta + sqrt(t_i) Z_i`:
/// `beta = (X^T W^2 X)^-1 X^T Y` with `W^2 = diag(t)`.
pub fn fit_time_scaled(x: &DMatrix<f64>, t: &[f64], y: &[f64]) -> Result<FitResult> {
    let (n, k) = x.shape();
    check_inputs(n, t, y, k)?;
    let w2 = DVector::from_column_slice(t);
    let yv = DVector::from_column_slice(y);

    let mut w2x = x.clone();
    for (mut row, &ti) in w2x.row_iter_mut().zip(t) {
        row *= ti;
    }
    let normal = x.transpose() * &w2x;
    let rhs = x.transpose() * &yv;
    let (beta, condition_number) = solve_normal_equations(&normal, &rhs)?;

    let fitted: Vec<f64> = (&w2x * &beta).iter().copied().collect();
    let rss = weighted_rss(y, &fitted, w2.as_slice());
    let dof = n - k - 1;
    Ok(FitResult {
        coefficients: beta.iter().copied().collect(),
        k,
        m: 1,
        sigma2: rss / dof as f64,
        weighted_rss: rss,
        dof,
        fitted,
        condition_number,
        sojourn_source: SojournSource::TimeScaled,
    })
}

/// Baseline weighted residual sum around the sample mean:
/// `sum_i (Y_i - mean(Y))^2 / t_i`.
pub fn weighted_rss_against_mean(t: &[f64], y: &[f64]) -> Result<f64> {
    if t.len() != y.len() || t.is_empty() {
        return Err(Error::ShapeMismatch(format!(
            "{} times, {} responses",
            t.len(),
            y.len()
        )));
    }
    if t.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
        return Err(Error::input("t", "total times must be > 0"));
    }
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let fitted = vec![mean; y.len()];
    Ok(weighted_rss(y, &fitted, t))
}

/// GLS fit of the modulated model:
/// `vec(beta) = (sum_i t_i^-1 (tbar_i^T tbar_i) ⊗ (x_i^T x_i))^-1 sum_i t_i^-1 (tbar_i ⊗ x_i)^T Y_i`,
/// with `sigma^2` estimated on `n - mk - 1` degrees of freedom.
pub fn fit_modulated(design: &ModulatedDesign, y: &[f64]) -> Result<FitResult> {
    let n = design.n();
    let (k, m) = (design.k(), design.m());
    let p = m * k;
    let t = design.weights();
    check_inputs(n, t, y, p)?;

    let mut normal = DMatrix::<f64>::zeros(p, p);
    let mut rhs = DVector::<f64>::zeros(p);
    for (i, row) in design.rows().row_iter().enumerate() {
        let inv_t = 1.0 / t[i];
        let d = row.transpose();
        normal.ger(inv_t, &d, &d, 1.0);
        rhs.axpy(inv_t * y[i], &d, 1.0);
    }
    let (beta, condition_number) = solve_normal_equations(&normal, &rhs)?;

    let fitted: Vec<f64> = (design.rows() * &beta).iter().copied().collect();
    let rss = weighted_rss(y, &fitted, t);
    let dof = n - p - 1;
    Ok(FitResult {
        coefficients: beta.iter().copied().collect(),
        k,
        m,
        sigma2: rss / dof as f64,
        weighted_rss: rss,
        dof,
        fitted,
        condition_number,
        sojourn_source: design.source(),
    })
}

/// `E(Y) = (tbar_i ⊗ x_i) vec(beta)` for each row of the design.
pub fn predict_expected(design: &ModulatedDesign, beta: &DMatrix<f64>) -> Result<Vec<f64>> {
    if beta.shape() != (design.k(), design.m()) {
        return Err(Error::ShapeMismatch(format!(
            "beta is {}x{}, design expects {}x{}",
            beta.nrows(),
            beta.ncols(),
            design.k(),
            design.m()
        )));
    }
    let vec_beta = DVector::from_column_slice(beta.as_slice());
    Ok((design.rows() * vec_beta).iter().copied().collect())
}

/// `sum_i t_i^-1 (tbar_i ⊗ x_i)^T (tbar_i ⊗ x_i)`.
pub fn normal_matrix(design: &ModulatedDesign) -> DMatrix<f64> {
    let p = design.rows().ncols();
    let mut normal = DMatrix::<f64>::zeros(p, p);
    for (i, row) in design.rows().row_iter().enumerate() {
        let d = row.transpose();
        normal.ger(1.0 / design.weights()[i], &d, &d, 1.0);
    }
    normal
}
