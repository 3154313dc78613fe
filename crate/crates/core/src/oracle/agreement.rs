use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{mc_conditional_sojourn, quadrature_sojourn, QuadratureSpec};
use crate::ctmc::{Chain, RateMatrix, SojournMethod};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::experiments::stream_rng;

/// Closed form vs quadrature.
pub const DETERMINISTIC_TOL: f64 = 1e-8;
/// Closed form vs Monte Carlo, in standard errors.
pub const MC_Z_LIMIT: f64 = 3.0;

/// One replayable comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub rates: Vec<Vec<f64>>,
    pub tau: f64,
    pub from: usize,
    pub to: usize,
    pub mc_seed: u64,
}

impl Instance {
    pub fn rate_matrix(&self) -> Result<RateMatrix> {
        let rows: Vec<&[f64]> = self.rates.iter().map(Vec::as_slice).collect();
        RateMatrix::from_rows(&rows)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Agreement {
    pub instance: Instance,
    pub method: SojournMethod,
    pub path_probability: f64,
    pub closed_form: Vec<f64>,
    pub quadrature: Vec<f64>,
    pub monte_carlo: Vec<f64>,
    pub std_errors: Vec<f64>,
    /// Max componentwise |closed form - quadrature|.
    pub deterministic_gap: f64,
    /// Max componentwise |closed form - Monte Carlo| / standard error.
    pub max_z: f64,
    pub passed: bool,
}

pub fn compare(
    instance: &Instance,
    mc_samples: usize,
    spec: &QuadratureSpec,
    exec: Execution,
) -> Result<Agreement> {
    let rates = instance.rate_matrix()?;
    let chain = Chain::new(rates.clone()).with_quadrature(*spec);
    let closed = chain.conditional_sojourn(instance.tau, instance.from, instance.to)?;
    let quad = quadrature_sojourn(
        chain.generator(),
        instance.tau,
        instance.from,
        instance.to,
        spec,
    )?;
    let mc = mc_conditional_sojourn(
        &rates,
        instance.tau,
        instance.from,
        instance.to,
        mc_samples,
        instance.mc_seed,
        exec,
    )?;

    let c = closed.profile.times();
    let q = quad.profile.times();
    let deterministic_gap = c
        .iter()
        .zip(q)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    // A component whose accepted paths all agree has a sample variance of
    // zero (or rounding noise). One differing path would move the mean by at
    // most tau / n, so that is the finest deviation the sampler can resolve.
    let floor = instance.tau / mc_samples as f64;
    let max_z = c
        .iter()
        .zip(mc.mean.times())
        .zip(&mc.std_errors)
        .map(|((a, b), se)| (a - b).abs() / se.max(floor))
        .fold(0.0, f64::max);
    Ok(Agreement {
        instance: instance.clone(),
        method: closed.method,
        path_probability: closed.path_probability,
        closed_form: c.to_vec(),
        quadrature: q.to_vec(),
        monte_carlo: mc.mean.times().to_vec(),
        std_errors: mc.std_errors,
        deterministic_gap,
        max_z,
        passed: deterministic_gap <= DETERMINISTIC_TOL && max_z <= MC_Z_LIMIT,
    })
}

/// Smallest endpoint probability accepted when drawing instances; keeps the
/// rejection sampler's cost bounded.
const MIN_PATH_PROB: f64 = 1e-3;

/// Draws `trials` instances. With `rates` given only the horizon and
/// endpoints vary; otherwise each instance also gets a random chain with 2 to
/// `max_states` states. Horizons are uniform on (0, `max_tau`] and the final
/// state is drawn from the transition probabilities.
pub fn random_instances(
    rates: Option<&RateMatrix>,
    trials: usize,
    max_states: usize,
    max_tau: f64,
    seed: u64,
) -> Result<Vec<Instance>> {
    if trials == 0 {
        return Err(Error::input("trials", "must be >= 1"));
    }
    if max_states < 2 {
        return Err(Error::input("max_states", "must be >= 2"));
    }
    if !(max_tau > 0.0 && max_tau.is_finite()) {
        return Err(Error::input("max_tau", "must be finite and > 0"));
    }
    let mut rng = stream_rng(seed, 0);
    let mut out = Vec::with_capacity(trials);
    while out.len() < trials {
        let rm = match rates {
            Some(r) => r.clone(),
            None => {
                let m = rng.random_range(2..=max_states);
                let mut a = DMatrix::zeros(m, m);
                for i in 0..m {
                    for j in 0..m {
                        if i != j && rng.random_bool(0.7) {
                            a[(i, j)] = rng.random_range(0.05..1.5);
                        }
                    }
                }
                RateMatrix::new(a)?
            }
        };
        let m = rm.m();
        let tau = max_tau * (1.0 - rng.random::<f64>());
        let from = rng.random_range(0..m);
        let p = Chain::new(rm.clone()).transition_matrix(tau)?;
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut to = m - 1;
        for j in 0..m {
            acc += p[(from, j)];
            if u < acc {
                to = j;
                break;
            }
        }
        let mc_seed = rng.random();
        if p[(from, to)] < MIN_PATH_PROB {
            continue;
        }
        out.push(Instance {
            rates: (0..m)
                .map(|i| rm.as_matrix().row(i).iter().copied().collect())
                .collect(),
            tau,
            from,
            to,
            mc_seed,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn instances_are_reproducible_and_in_range() {
        let a = random_instances(None, 20, 5, 20.0, 9).unwrap();
        let b = random_instances(None, 20, 5, 20.0, 9).unwrap();
        assert_eq!(a, b);
        for inst in &a {
            let m = inst.rates.len();
            assert!((2..=5).contains(&m));
            assert!(inst.tau > 0.0 && inst.tau <= 20.0);
            assert!(inst.from < m && inst.to < m);
            inst.rate_matrix().unwrap();
        }
    }

    #[test]
    fn fixed_rates_keep_the_chain() {
        let r = RateMatrix::from_rows(&[&[0.0, 1.0], &[2.0, 0.0]]).unwrap();
        for inst in random_instances(Some(&r), 5, 5, 3.0, 1).unwrap() {
            assert_eq!(inst.rates, vec![vec![0.0, 1.0], vec![2.0, 0.0]]);
        }
        assert!(random_instances(Some(&r), 0, 5, 3.0, 1).is_err());
    }

    #[test]
    fn single_comparison_agrees() {
        let inst = Instance {
            rates: vec![
                vec![0.0, 0.2, 0.3],
                vec![0.1, 0.0, 0.2],
                vec![0.4, 0.0, 0.0],
            ],
            tau: 5.0,
            from: 1,
            to: 0,
            mc_seed: 11,
        };
        let a = compare(
            &inst,
            20_000,
            &QuadratureSpec::default(),
            Execution::Parallel,
        )
        .unwrap();
        assert!(a.deterministic_gap < 1e-8);
        assert!(a.max_z < 4.5, "{a:?}");
        assert_eq!(a.method, SojournMethod::ClosedForm);
    }

    #[test]
    fn absorbing_start_is_not_an_infinite_deviation() {
        let inst = Instance {
            rates: vec![vec![0.0, 0.0], vec![1.0, 0.0]],
            tau: 7.3,
            from: 0,
            to: 0,
            mc_seed: 3,
        };
        let a = compare(
            &inst,
            1_000,
            &QuadratureSpec::default(),
            Execution::Sequential,
        )
        .unwrap();
        assert!(a.passed, "{a:?}");
        assert_eq!(a.closed_form, vec![7.3, 0.0]);
    }
}
