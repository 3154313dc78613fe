use nalgebra::linalg::{Schur, SVD};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::sojourn::{finish_profile, ConditionalSojourn, SojournMethod, PATH_PROB_TOL};
use super::Generator;
use crate::error::{Error, Result};

/// Minimum pairwise eigenvalue gap, relative to the largest eigenvalue modulus.
pub const EIG_GAP_REL_TOL: f64 = 1e-7;

const RECONSTRUCTION_TOL: f64 = 1e-10;
const IMAG_RESIDUE_TOL: f64 = 1e-9;
const ITER_EPS: f64 = f64::EPSILON;
const MAX_ITER: usize = 10_000;

/// Eigenvalues of a real square matrix, sorted by descending real part then
/// ascending imaginary part.
pub fn eigenvalues(a: &DMatrix<f64>) -> Result<Vec<Complex64>> {
    if a.amax() == 0.0 {
        return Ok(vec![Complex64::new(0.0, 0.0); a.nrows()]);
    }
    let schur = Schur::try_new(a.clone(), ITER_EPS, MAX_ITER).ok_or(Error::EigenNonConvergence)?;
    let mut values: Vec<Complex64> = schur.complex_eigenvalues().iter().copied().collect();
    values.sort_by(|x, y| y.re.total_cmp(&x.re).then(x.im.total_cmp(&y.im)));
    Ok(values)
}

/// `A = Z diag(gamma) Z^-1` for a generator with pairwise distinct eigenvalues.
///
/// All arithmetic is complex; real generators may have conjugate eigenvalue
/// pairs. Columns of `Z` have unit norm and their largest-modulus entry real
/// and positive, which makes the decomposition reproducible.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    eigenvalues: Vec<Complex64>,
    right: DMatrix<Complex64>,
    inverse: DMatrix<Complex64>,
}

pub fn spectral_decompose(g: &Generator) -> Result<SpectralDecomposition> {
    let a = g.as_matrix();
    let m = g.m();
    let values = eigenvalues(a)?;

    let max_abs = values.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let tol = EIG_GAP_REL_TOL * max_abs;
    let mut gap = f64::INFINITY;
    for i in 0..m {
        for j in i + 1..m {
            gap = gap.min((values[i] - values[j]).norm());
        }
    }
    if m > 1 && gap <= tol {
        return Err(Error::NearDegenerateSpectrum { gap, tol });
    }

    let ac = a.map(|x| Complex64::new(x, 0.0));
    let mut right = DMatrix::<Complex64>::zeros(m, m);
    for (col, &gamma) in values.iter().enumerate() {
        let v = null_vector(&ac, gamma)?;
        right.set_column(col, &v);
    }
    let inverse = right
        .clone()
        .try_inverse()
        .ok_or(Error::IllConditionedSpectrum {
            residual: f64::INFINITY,
        })?;

    let identity_residual = (&right * &inverse - DMatrix::<Complex64>::identity(m, m))
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max);
    let diag = DMatrix::from_diagonal(&DVector::from_vec(values.clone()));
    let scale = a.amax().max(1.0);
    let reconstruction_residual = (&right * diag * &inverse - &ac)
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
        / scale;
    let residual = identity_residual.max(reconstruction_residual);
    if !(residual <= RECONSTRUCTION_TOL) {
        return Err(Error::IllConditionedSpectrum { residual });
    }

    Ok(SpectralDecomposition {
        eigenvalues: values,
        right,
        inverse,
    })
}

/// Unit vector spanning the (numerical) kernel of `A - gamma I`.
fn null_vector(a: &DMatrix<Complex64>, gamma: Complex64) -> Result<DVector<Complex64>> {
    let m = a.nrows();
    let shifted = a - DMatrix::<Complex64>::identity(m, m) * gamma;
    let svd =
        SVD::try_new(shifted, false, true, ITER_EPS, MAX_ITER).ok_or(Error::EigenNonConvergence)?;
    let v_t = svd.v_t.ok_or(Error::EigenNonConvergence)?;
    let (idx, _) = svd
        .singular_values
        .iter()
        .enumerate()
        .min_by(|x, y| x.1.total_cmp(y.1))
        .expect("non-empty spectrum");
    let mut v: DVector<Complex64> = v_t.row(idx).transpose().map(|z| z.conj());

    let (pivot, _) = v
        .iter()
        .enumerate()
        .max_by(|x, y| x.1.norm().total_cmp(&y.1.norm()))
        .expect("non-empty vector");
    let phase = v[pivot] / v[pivot].norm();
    let norm = v.norm();
    v /= phase * Complex64::new(norm, 0.0);
    Ok(v)
}

impl SpectralDecomposition {
    pub fn m(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &[Complex64] {
        &self.eigenvalues
    }

    /// Eigenvector matrix `Z` (columns are right eigenvectors).
    pub fn right_vectors(&self) -> &DMatrix<Complex64> {
        &self.right
    }

    /// `Z^-1`; its rows are left eigenvectors.
    pub fn inverse_vectors(&self) -> &DMatrix<Complex64> {
        &self.inverse
    }

    /// `Z diag(gamma) Z^-1`, which should reproduce the generator.
    pub fn reconstruct(&self) -> DMatrix<Complex64> {
        let diag = DMatrix::from_diagonal(&DVector::from_vec(self.eigenvalues.clone()));
        &self.right * diag * &self.inverse
    }

    pub(crate) fn transition_entry(&self, tau: f64, from: usize, to: usize) -> Complex64 {
        (0..self.m())
            .map(|eta| {
                self.right[(from, eta)]
                    * (self.eigenvalues[eta] * tau).exp()
                    * self.inverse[(eta, to)]
            })
            .sum()
    }

    /// `P(t) = sum_eta Z_eta exp(gamma_eta t) Zbar_eta`, entries clamped to `[0, 1]`.
    pub fn transition_matrix(&self, t: f64) -> Result<DMatrix<f64>> {
        if !(t >= 0.0 && t.is_finite()) {
            return Err(Error::input(
                "t",
                format!("must be finite and >= 0, got {t}"),
            ));
        }
        let m = self.m();
        let weights: Vec<Complex64> = self.eigenvalues.iter().map(|g| (g * t).exp()).collect();
        let mut residue = 0.0_f64;
        let p = DMatrix::from_fn(m, m, |i, j| {
            let z: Complex64 = (0..m)
                .map(|eta| self.right[(i, eta)] * weights[eta] * self.inverse[(eta, j)])
                .sum();
            residue = residue.max(z.im.abs());
            z.re.clamp(0.0, 1.0)
        });
        if residue >= IMAG_RESIDUE_TOL {
            return Err(Error::ImaginaryResidueTooLarge { residue });
        }
        Ok(p)
    }

    /// Expected time spent in each state during `(0, tau)` given the chain
    /// starts in `from` and is in `to` at `tau`, by the closed-form
    /// convolution of spectral transition probabilities.
    pub fn conditional_sojourn(
        &self,
        tau: f64,
        from: usize,
        to: usize,
    ) -> Result<ConditionalSojourn> {
        let m = self.m();
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

        let p = self.transition_entry(tau, from, to);
        if p.im.abs() >= IMAG_RESIDUE_TOL {
            return Err(Error::ImaginaryResidueTooLarge {
                residue: p.im.abs(),
            });
        }
        let prob = p.re;
        if !(prob > PATH_PROB_TOL) {
            return Err(Error::UnreachableEndpoint {
                from,
                to,
                tau,
                prob,
            });
        }

        // kernel[eta][theta] = int_0^tau exp(gamma_eta u) exp(gamma_theta (tau - u)) du
        let kernel = DMatrix::from_fn(m, m, |eta, theta| {
            exp_convolution(
                self.eigenvalues[eta],
                self.eigenvalues[theta],
                tau,
                eta == theta,
            )
        });
        let mut times = Vec::with_capacity(m);
        let mut residue = 0.0_f64;
        for nu in 0..m {
            let mut acc = Complex64::new(0.0, 0.0);
            for eta in 0..m {
                let lead = self.right[(from, eta)] * self.inverse[(eta, nu)];
                let mut inner = Complex64::new(0.0, 0.0);
                for theta in 0..m {
                    inner +=
                        self.right[(nu, theta)] * self.inverse[(theta, to)] * kernel[(eta, theta)];
                }
                acc += lead * inner;
            }
            residue = residue.max(acc.im.abs());
            times.push(acc.re / prob);
        }
        if residue >= IMAG_RESIDUE_TOL * tau.max(1.0) {
            return Err(Error::ImaginaryResidueTooLarge { residue });
        }
        Ok(ConditionalSojourn {
            profile: finish_profile(times, tau)?,
            path_probability: prob,
            method: SojournMethod::ClosedForm,
        })
    }
}

/// `int_0^tau exp(a u) exp(b (tau - u)) du`: `tau exp(a tau)` on the diagonal,
/// `(exp(b tau) - exp(a tau)) / (b - a)` otherwise, with a short series when
/// `(b - a) tau` is tiny.
fn exp_convolution(a: Complex64, b: Complex64, tau: f64, same: bool) -> Complex64 {
    let ea = (a * tau).exp();
    if same {
        return ea * tau;
    }
    let x = (b - a) * tau;
    if x.norm() < 1e-4 {
        let series = Complex64::new(1.0, 0.0) + x / 2.0 + x * x / 6.0 + x * x * x / 24.0;
        ea * tau * series
    } else {
        ((b * tau).exp() - ea) / (b - a)
    }
}
