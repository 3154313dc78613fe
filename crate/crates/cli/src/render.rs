//! Text layouts. Numbers are shown to three decimals; JSON output carries
//! full precision.

use std::fmt::Write;

use mmreg::ctmc::{ConditionalSojourn, SojournMethod};
use mmreg::experiments::{BlockResult, ExperimentConfig, Pooling};
use mmreg::oracle::Agreement;
use mmreg::regression::FitResult;
use mmreg::reproduce::{Reproduction, Tolerance};
use nalgebra::DMatrix;

pub fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn method(m: SojournMethod) -> &'static str {
    match m {
        SojournMethod::ClosedForm => "closed form",
        SojournMethod::Quadrature => "quadrature",
    }
}

pub fn sojourn(tau: f64, from: usize, to: usize, s: &ConditionalSojourn) -> String {
    let mut out = String::new();
    writeln!(out, "tau {tau:.3}  from {from}  to {to}").unwrap();
    writeln!(out, "p {:.3}", s.path_probability).unwrap();
    writeln!(out, "state  sojourn").unwrap();
    for (j, v) in s.profile.times().iter().enumerate() {
        writeln!(out, "{j:>5}  {v:>7.3}").unwrap();
    }
    writeln!(out, "method {}", method(s.method)).unwrap();
    out
}

pub fn fit(mode: &str, n: usize, f: &FitResult, baseline: Option<f64>) -> String {
    let mut out = String::new();
    writeln!(out, "mode {mode}  n {n}  k {}  m {}", f.k, f.m).unwrap();
    writeln!(out, "coefficients (row = regressor, column = state)").unwrap();
    for row in rows(&f.beta_matrix()) {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:>10.3}")).collect();
        writeln!(out, "{}", cells.join(" ")).unwrap();
    }
    writeln!(out, "sigma2 {:.3}", f.sigma2).unwrap();
    writeln!(out, "weighted_rss {:.3}", f.weighted_rss).unwrap();
    if let Some(b) = baseline {
        writeln!(out, "baseline_rss {b:.3}").unwrap();
    }
    writeln!(out, "dof {}", f.dof).unwrap();
    writeln!(out, "condition {:.3}", f.condition_number).unwrap();
    out
}

fn label(idx: usize, k: usize) -> String {
    format!("beta_{}_{}", idx % k + 1, idx / k + 1)
}

/// One row per `vec(beta)` entry, one column per checkpoint.
pub fn block_table_csv(r: &BlockResult, truth: &[f64], k: usize) -> String {
    let mut out = String::from("coefficient,true");
    for c in &r.checkpoints {
        write!(out, ",{}", c.q).unwrap();
    }
    out.push('\n');
    for (idx, t) in truth.iter().enumerate() {
        write!(out, "{},{t}", label(idx, k)).unwrap();
        for c in &r.checkpoints {
            write!(out, ",{}", c.coefficients[idx]).unwrap();
        }
        out.push('\n');
    }
    out
}

pub fn block_report(cfg: &ExperimentConfig, r: &BlockResult) -> String {
    let mut out = String::new();
    let truth = cfg.beta.as_slice();
    let k = cfg.k();
    writeln!(
        out,
        "blocks {}  observations per block {}  states {}  seed {}  pooling {}",
        r.blocks,
        cfg.n(),
        cfg.m(),
        r.seed,
        match r.pooling {
            Pooling::Pooled => "pooled",
            Pooling::PerBlockMean => "per-block-mean",
        }
    )
    .unwrap();
    write!(out, "{:<12}{:>9}", "q", "true").unwrap();
    for c in &r.checkpoints {
        write!(out, "{:>9}", c.q).unwrap();
    }
    out.push('\n');
    for (idx, t) in truth.iter().enumerate() {
        write!(out, "{:<12}{t:>9.3}", label(idx, k)).unwrap();
        for c in &r.checkpoints {
            write!(out, "{:>9.3}", c.coefficients[idx]).unwrap();
        }
        out.push('\n');
    }
    write!(out, "{:<12}{:>9}", "max error", "").unwrap();
    for c in &r.checkpoints {
        write!(out, "{:>9.3}", c.max_abs_error).unwrap();
    }
    out.push('\n');
    write!(out, "{:<12}{:>9}", "sigma2", "").unwrap();
    for c in &r.checkpoints {
        write!(out, "{:>9.3}", c.sigma2).unwrap();
    }
    out.push('\n');
    out
}

pub fn reproduction(rep: &Reproduction) -> String {
    let mut out = String::new();
    for c in &rep.checks {
        let tol = match c.tolerance {
            Tolerance::Absolute(t) => format!("abs <= {t}"),
            Tolerance::Relative(t) => format!("rel <= {t}"),
            Tolerance::AtMost(t) => format!("value <= {t}"),
        };
        writeln!(
            out,
            "{}  {:<3} {:<56} worst {:.3e}  ({tol})",
            if c.passed { "PASS" } else { "FAIL" },
            c.id,
            c.description,
            c.worst
        )
        .unwrap();
    }
    let failed = rep.checks.iter().filter(|c| !c.passed).count();
    writeln!(
        out,
        "{} of {} checks passed",
        rep.checks.len() - failed,
        rep.checks.len()
    )
    .unwrap();
    out
}

fn vector(v: &[f64]) -> String {
    v.iter()
        .map(|x| format!("{x:.3}"))
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn verification(results: &[Agreement], worst: &Agreement, failures: usize) -> String {
    let mut out = String::new();
    let gap = results
        .iter()
        .map(|a| a.deterministic_gap)
        .fold(0.0, f64::max);
    let z = results.iter().map(|a| a.max_z).fold(0.0, f64::max);
    let fallback = results
        .iter()
        .filter(|a| a.method == SojournMethod::Quadrature)
        .count();
    writeln!(
        out,
        "trials {}  failures {failures}  quadrature fallbacks {fallback}",
        results.len()
    )
    .unwrap();
    writeln!(out, "max |closed - quadrature| {gap:.3e}").unwrap();
    writeln!(out, "max |closed - monte carlo| / se {z:.3}").unwrap();
    let w = &worst.instance;
    writeln!(
        out,
        "worst instance: m {}  tau {:.3}  {} -> {}",
        w.rates.len(),
        w.tau,
        w.from,
        w.to
    )
    .unwrap();
    writeln!(out, "  closed form  {}", vector(&worst.closed_form)).unwrap();
    writeln!(out, "  quadrature   {}", vector(&worst.quadrature)).unwrap();
    writeln!(out, "  monte carlo  {}", vector(&worst.monte_carlo)).unwrap();
    writeln!(out, "  std errors   {}", vector(&worst.std_errors)).unwrap();
    writeln!(out, "{}", if failures == 0 { "PASS" } else { "FAIL" }).unwrap();
    out
}
