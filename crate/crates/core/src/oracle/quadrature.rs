use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::gauss::GaussLegendre;
use super::series::matrix_exp_series;
use crate::ctmc::{ConditionalSojourn, Generator, SojournMethod, SojournProfile, PATH_PROB_TOL};
use crate::error::{Error, Result};

const RULE_POINTS: usize = 15;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            abs_tol: 1e-10,
            rel_tol: 1e-10,
            max_subdivisions: 200,
        }
    }
}

impl QuadratureSpec {
    fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0 && self.rel_tol > 0.0) {
            return Err(Error::input("quadrature", "tolerances must be > 0"));
        }
        if self.max_subdivisions == 0 {
            return Err(Error::input("quadrature", "max_subdivisions must be >= 1"));
        }
        Ok(())
    }
}

struct Segment {
    a: f64,
    b: f64,
    value: Vec<f64>,
    error: f64,
}

/// Conditional expected sojourns by adaptive composite Gauss-Legendre
/// integration of `p_{from,nu}(u) p_{nu,to}(tau - u)` over `(0, tau)`.
///
/// Each segment is integrated whole and as two halves; the difference is the
/// error estimate and the segment with the largest estimate is split next.
pub fn quadrature_sojourn(
    g: &Generator,
    tau: f64,
    from: usize,
    to: usize,
    spec: &QuadratureSpec,
) -> Result<ConditionalSojourn> {
    spec.validate()?;
    let m = g.m();
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

    let prob = matrix_exp_series(g, tau)?[(from, to)];
    if !(prob > PATH_PROB_TOL) {
        return Err(Error::UnreachableEndpoint {
            from,
            to,
            tau,
            prob,
        });
    }

    let rule = GaussLegendre::new(RULE_POINTS);
    let mut integrand = |u: f64, out: &mut [f64]| {
        let head: DMatrix<f64> = matrix_exp_series(g, u).expect("u in [0, tau]");
        let tail: DMatrix<f64> = matrix_exp_series(g, (tau - u).max(0.0)).expect("u in [0, tau]");
        for (nu, o) in out.iter_mut().enumerate() {
            *o = head[(from, nu)] * tail[(nu, to)];
        }
    };
    let mut evaluate = |a: f64, b: f64| -> Segment {
        let mut whole = vec![0.0; m];
        rule.integrate_into(a, b, &mut integrand, &mut whole);
        let mid = 0.5 * (a + b);
        let mut value = vec![0.0; m];
        rule.integrate_into(a, mid, &mut integrand, &mut value);
        rule.integrate_into(mid, b, &mut integrand, &mut value);
        let error = whole
            .iter()
            .zip(&value)
            .map(|(w, v)| (w - v).abs())
            .fold(0.0, f64::max);
        Segment { a, b, value, error }
    };

    let mut segments = vec![evaluate(0.0, tau)];
    let mut subdivisions = 0;
    loop {
        let mut total = vec![0.0; m];
        let mut error = 0.0;
        for s in &segments {
            for (t, v) in total.iter_mut().zip(&s.value) {
                *t += v;
            }
            error += s.error;
        }
        let scale = total.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
        if error <= spec.abs_tol.max(spec.rel_tol * scale) {
            let times = total
                .into_iter()
                .map(|v| (v / prob).clamp(0.0, tau))
                .collect();
            return Ok(ConditionalSojourn {
                profile: SojournProfile::new(times)?,
                path_probability: prob,
                method: SojournMethod::Quadrature,
            });
        }
        if subdivisions >= spec.max_subdivisions {
            return Err(Error::QuadratureNonConvergence {
                estimate: error,
                subdivisions,
            });
        }
        let worst = segments
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.total_cmp(&y.1.error))
            .map(|(i, _)| i)
            .expect("at least one segment");
        let s = segments.swap_remove(worst);
        let mid = 0.5 * (s.a + s.b);
        segments.push(evaluate(s.a, mid));
        segments.push(evaluate(mid, s.b));
        subdivisions += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ctmc::RateMatrix;

    #[test]
    fn single_state_is_tau() {
        let g = RateMatrix::zeros(1).unwrap().generator();
        let s = quadrature_sojourn(&g, 2.5, 0, 0, &QuadratureSpec::default()).unwrap();
        assert!((s.profile.times()[0] - 2.5).abs() < 1e-12);
    }

    #[test]
    fn two_state_one_way_hand_formula() {
        // 0 -> 1 at rate a, 1 absorbing. Given 0 -> 1 over tau, the jump time
        // has density a e^{-a v} / (1 - e^{-a tau}) on (0, tau), so
        // E[time in 0] = 1/a - tau e^{-a tau} / (1 - e^{-a tau}).
        let a = 0.9;
        let tau = 3.0;
        let g = RateMatrix::from_rows(&[&[0.0, a], &[0.0, 0.0]])
            .unwrap()
            .generator();
        let s = quadrature_sojourn(&g, tau, 0, 1, &QuadratureSpec::default()).unwrap();
        let e = (-a * tau).exp();
        let want = 1.0 / a - tau * e / (1.0 - e);
        assert!((s.profile.times()[0] - want).abs() < 1e-10);
        assert!((s.profile.total() - tau).abs() < 1e-9);
    }

    #[test]
    fn unreachable_and_bad_spec() {
        let g = RateMatrix::from_rows(&[&[0.0, 1.0], &[0.0, 0.0]])
            .unwrap()
            .generator();
        assert!(matches!(
            quadrature_sojourn(&g, 1.0, 1, 0, &QuadratureSpec::default()),
            Err(Error::UnreachableEndpoint { .. })
        ));
        let bad = QuadratureSpec {
            abs_tol: 0.0,
            ..QuadratureSpec::default()
        };
        assert!(quadrature_sojourn(&g, 1.0, 0, 1, &bad).is_err());
    }

    #[test]
    fn non_convergence_reported() {
        let g = RateMatrix::from_rows(&[&[0.0, 5.0], &[4.0, 0.0]])
            .unwrap()
            .generator();
        let strict = QuadratureSpec {
            abs_tol: 1e-300,
            rel_tol: 1e-300,
            max_subdivisions: 3,
        };
        assert!(matches!(
            quadrature_sojourn(&g, 10.0, 0, 1, &strict),
            Err(Error::QuadratureNonConvergence { .. })
        ));
    }
}
