use nalgebra::DMatrix;

use super::{Dataset, SojournSource};
use crate::ctmc::SojournProfile;
use crate::error::{Error, Result};

/// Relative tolerance for a sojourn profile to add up to its total time.
const TOTAL_TIME_REL_TOL: f64 = 1e-6;

/// `tbar ⊗ x` with entry `j * k + v = tbar[j] * x[v]`.
pub fn kron_row(sojourn: &[f64], x: &[f64]) -> Vec<f64> {
    let mut row = Vec::with_capacity(sojourn.len() * x.len());
    for &t in sojourn {
        row.extend(x.iter().map(|v| t * v));
    }
    row
}

/// Kronecker-structured design of the modulated model.
#[derive(Debug, Clone, PartialEq)]
pub struct ModulatedDesign {
    rows: DMatrix<f64>,
    weights: Vec<f64>,
    sojourns: Vec<SojournProfile>,
    x: DMatrix<f64>,
    source: SojournSource,
}

impl ModulatedDesign {
    /// Builds the design from regressors (`n x k`), total times and sojourns.
    pub fn new(
        x: DMatrix<f64>,
        times: Vec<f64>,
        sojourns: Vec<SojournProfile>,
        source: SojournSource,
    ) -> Result<Self> {
        let n = x.nrows();
        let k = x.ncols();
        if times.len() != n || sojourns.len() != n {
            return Err(Error::ShapeMismatch(format!(
                "{n} regressor rows, {} times, {} sojourn profiles",
                times.len(),
                sojourns.len()
            )));
        }
        let m = sojourns.first().map(SojournProfile::m).unwrap_or(1);
        let mut rows = DMatrix::zeros(n, m * k);
        for (i, (s, &t)) in sojourns.iter().zip(&times).enumerate() {
            if s.m() != m {
                return Err(Error::ShapeMismatch(format!(
                    "profile {i} has {} states, expected {m}",
                    s.m()
                )));
            }
            if !(t > 0.0 && t.is_finite()) {
                return Err(Error::input(
                    "t",
                    format!("observation {i}: total time must be > 0"),
                ));
            }
            if (s.total() - t).abs() > TOTAL_TIME_REL_TOL * t {
                return Err(Error::ShapeMismatch(format!(
                    "profile {i} sums to {} but total time is {t}",
                    s.total()
                )));
            }
            let xi: Vec<f64> = x.row(i).iter().copied().collect();
            for (c, v) in kron_row(s.times(), &xi).into_iter().enumerate() {
                rows[(i, c)] = v;
            }
        }
        Ok(Self {
            rows,
            weights: times,
            sojourns,
            x,
            source,
        })
    }

    pub fn rows(&self) -> &DMatrix<f64> {
        &self.rows
    }

    /// Total observation times; the disturbance covariance is `sigma^2 diag(weights)`.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn sojourns(&self) -> &[SojournProfile] {
        &self.sojourns
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn source(&self) -> SojournSource {
        self.source
    }

    pub fn n(&self) -> usize {
        self.rows.nrows()
    }

    pub fn k(&self) -> usize {
        self.x.ncols()
    }

    pub fn m(&self) -> usize {
        self.rows.ncols() / self.k()
    }
}

pub fn assemble_modulated_design(
    dataset: &Dataset,
    sojourns: Vec<SojournProfile>,
    source: SojournSource,
) -> Result<ModulatedDesign> {
    if sojourns.iter().any(|s| s.m() != dataset.m()) {
        return Err(Error::ShapeMismatch(format!(
            "sojourn profiles must have {} states",
            dataset.m()
        )));
    }
    ModulatedDesign::new(dataset.x_matrix(), dataset.times(), sojourns, source)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kron_ordering() {
        assert_eq!(kron_row(&[1.0, 2.0], &[3.0, 4.0]), vec![3.0, 4.0, 6.0, 8.0]);
        assert_eq!(kron_row(&[2.5], &[1.0, -2.0, 4.0]), vec![2.5, -5.0, 10.0]);
    }

    #[test]
    fn vec_of_study_beta_reshapes_column_major() {
        let vec_beta = [0.0, 1.0, 2.0, 2.0, 3.0, 5.0, 4.0, 6.0, 8.0];
        let beta = DMatrix::from_column_slice(3, 3, &vec_beta);
        assert_eq!(beta.column(0).as_slice(), &[0.0, 1.0, 2.0]);
        assert_eq!(beta.column(1).as_slice(), &[2.0, 3.0, 5.0]);
        assert_eq!(beta.column(2).as_slice(), &[4.0, 6.0, 8.0]);
        assert_eq!(beta[(1, 2)], 6.0);
    }

    #[test]
    fn single_state_rows_are_scaled_regressors() {
        let x = DMatrix::from_row_slice(2, 2, &[1.0, 3.0, 1.0, -1.0]);
        let s = vec![
            SojournProfile::new(vec![2.0]).unwrap(),
            SojournProfile::new(vec![5.0]).unwrap(),
        ];
        let d = ModulatedDesign::new(x, vec![2.0, 5.0], s, SojournSource::Exact).unwrap();
        assert_eq!(
            d.rows(),
            &DMatrix::from_row_slice(2, 2, &[2.0, 6.0, 5.0, -5.0])
        );
        assert_eq!(d.m(), 1);
    }

    #[test]
    fn rejects_inconsistent_totals() {
        let x = DMatrix::from_row_slice(1, 1, &[1.0]);
        let s = vec![SojournProfile::new(vec![1.0, 1.0]).unwrap()];
        assert!(
            ModulatedDesign::new(x.clone(), vec![3.0], s.clone(), SojournSource::Exact).is_err()
        );
        assert!(ModulatedDesign::new(x, vec![2.0, 1.0], s, SojournSource::Exact).is_err());
    }
}
