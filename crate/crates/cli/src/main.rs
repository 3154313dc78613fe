mod manifest;
mod render;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use mmreg::ctmc::Chain;
use mmreg::experiments::run_big_sample;
use mmreg::io;
use mmreg::oracle::{compare, random_instances, Agreement, Instance, QuadratureSpec};
use mmreg::regression::{
    assemble_modulated_design, expected_sojourns, fit_modulated, fit_time_scaled,
    weighted_rss_against_mean, SojournSource,
};
use mmreg::reproduce::reproduce;
use mmreg::study;
use mmreg::{Error, Execution};
use serde_json::json;

use manifest::Recorder;

const EXIT_INPUT: u8 = 2;
const EXIT_UNREACHABLE: u8 = 3;
const EXIT_RANK: u8 = 4;
const EXIT_VERIFY: u8 = 5;

#[derive(Parser)]
#[command(
    name = "mmreg",
    version,
    about = "Regression with Markov-modulated coefficients"
)]
struct Cli {
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Simple,
    Modulated,
}

#[derive(Clone, Copy, ValueEnum)]
enum ExecArg {
    Parallel,
    Sequential,
}

impl From<ExecArg> for Execution {
    fn from(e: ExecArg) -> Self {
        match e {
            ExecArg::Parallel => Execution::Parallel,
            ExecArg::Sequential => Execution::Sequential,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Expected time in each state given the endpoints of a window.
    Sojourn {
        #[arg(long)]
        rates: PathBuf,
        #[arg(long)]
        tau: f64,
        #[arg(long)]
        from: usize,
        #[arg(long)]
        to: usize,
    },
    /// Fit a dataset CSV.
    Fit {
        #[arg(long)]
        data: PathBuf,
        /// Rate matrix CSV; required for modulated fits.
        #[arg(long)]
        rates: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Mode::Modulated)]
        mode: Mode,
    },
    /// Run the block experiment described by a config file.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overrides the config's execution mode.
        #[arg(long, value_enum)]
        execution: Option<ExecArg>,
    },
    /// Recompute the reference study and check every reported figure.
    Reproduce {
        #[arg(long)]
        out: Option<PathBuf>,
        /// CSV of replacement responses (negative control).
        #[arg(long)]
        responses: Option<PathBuf>,
    },
    /// Compare closed form, quadrature and Monte Carlo on random instances.
    Verify {
        /// Fixed rate matrix; random chains are drawn when omitted.
        #[arg(long)]
        rates: Option<PathBuf>,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Accepted Monte Carlo paths per instance.
        #[arg(long, default_value_t = 100_000)]
        mc_samples: usize,
        #[arg(long, default_value_t = 5)]
        max_states: usize,
        #[arg(long, default_value_t = 20.0)]
        max_tau: f64,
        /// Re-run a single instance saved by `--worst`.
        #[arg(long)]
        replay: Option<PathBuf>,
        /// Where to write the worst instance as JSON.
        #[arg(long)]
        worst: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = ExecArg::Parallel)]
        execution: ExecArg,
    },
}

struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::InvalidRates(_)
            | Error::InvalidInput { .. }
            | Error::ShapeMismatch(_)
            | Error::Parse { .. }
            | Error::Io { .. } => EXIT_INPUT,
            Error::UnreachableEndpoint { .. } => EXIT_UNREACHABLE,
            Error::RankDeficient { .. } | Error::InsufficientData { .. } => EXIT_RANK,
            _ => 1,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn input_failure(message: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_INPUT,
        message: message.into(),
    }
}

type Outcome = Result<u8, Failure>;

fn print_json(value: &serde_json::Value) {
    println!(
        "{}",
        serde_json::to_string_pretty(value).expect("json output")
    );
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Sojourn {
            rates,
            tau,
            from,
            to,
        } => cmd_sojourn(&rates, tau, from, to, cli.format),
        Command::Fit { data, rates, mode } => cmd_fit(&data, rates.as_deref(), mode, cli.format),
        Command::Simulate {
            config,
            out,
            execution,
        } => cmd_simulate(&config, &out, execution, cli.format),
        Command::Reproduce { out, responses } => {
            cmd_reproduce(out.as_deref(), responses.as_deref(), cli.format)
        }
        Command::Verify {
            rates,
            trials,
            seed,
            mc_samples,
            max_states,
            max_tau,
            replay,
            worst,
            execution,
        } => {
            let opts = VerifyOpts {
                rates,
                trials,
                seed,
                mc_samples,
                max_states,
                max_tau,
                replay,
                worst,
                exec: execution.into(),
            };
            cmd_verify(&opts, cli.format)
        }
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn cmd_sojourn(rates: &Path, tau: f64, from: usize, to: usize, format: Format) -> Outcome {
    let chain = Chain::new(io::read_rates(rates)?);
    let s = chain.conditional_sojourn(tau, from, to)?;
    match format {
        Format::Json => print_json(&json!({
            "tau": tau,
            "from": from,
            "to": to,
            "sojourn": s.profile.times(),
            "path_probability": s.path_probability,
            "method": s.method,
        })),
        Format::Text => print!("{}", render::sojourn(tau, from, to, &s)),
    }
    Ok(0)
}

fn cmd_fit(data: &Path, rates: Option<&Path>, mode: Mode, format: Format) -> Outcome {
    let rates = rates.map(io::read_rates).transpose()?;
    let dataset = io::read_dataset(data, rates.as_ref().map(|r| r.m()))?;
    let (x, t, y) = (dataset.x_matrix(), dataset.times(), dataset.responses());
    let (label, fit, baseline) = match mode {
        Mode::Simple => (
            "simple",
            fit_time_scaled(&x, &t, &y)?,
            Some(weighted_rss_against_mean(&t, &y)?),
        ),
        Mode::Modulated => {
            let rates =
                rates.ok_or_else(|| input_failure("`--rates` is required for modulated fits"))?;
            let chain = Chain::new(rates);
            let sojourns = expected_sojourns(&chain, &dataset, Execution::default())?;
            let design = assemble_modulated_design(
                &dataset,
                sojourns.into_iter().map(|s| s.profile).collect(),
                SojournSource::ConditionalExpectation,
            )?;
            ("modulated", fit_modulated(&design, &y)?, None)
        }
    };
    match format {
        Format::Json => print_json(&json!({
            "mode": label,
            "n": dataset.n(),
            "beta": render::rows(&fit.beta_matrix()),
            "fit": fit,
            "baseline_rss": baseline,
        })),
        Format::Text => print!("{}", render::fit(label, dataset.n(), &fit, baseline)),
    }
    Ok(0)
}

fn cmd_simulate(config: &Path, out: &Path, execution: Option<ExecArg>, format: Format) -> Outcome {
    let mut cfg = io::read_config(config)?;
    if let Some(e) = execution {
        cfg.config.execution = e.into();
    }
    let mut inputs = vec![config.to_path_buf()];
    inputs.extend(cfg.inputs.iter().cloned());
    let mut recorder = Recorder::start("simulate", Some(cfg.config.seed), &inputs, out)?;

    let result = run_big_sample(&cfg.config)?;
    let truth = cfg.config.beta.as_slice();
    let k = cfg.config.k();
    recorder.add(
        "table.csv",
        render::block_table_csv(&result, truth, k).into_bytes(),
    );
    recorder.add(
        "report.txt",
        render::block_report(&cfg.config, &result).into_bytes(),
    );
    recorder.add(
        "dataset.csv",
        io::dataset_to_csv(&result.observations).into_bytes(),
    );
    let manifest = recorder.finish()?;

    match format {
        Format::Json => print_json(&json!({
            "result": result,
            "true_coefficients": truth,
            "manifest": manifest.display().to_string(),
        })),
        Format::Text => {
            print!("{}", render::block_report(&cfg.config, &result));
            println!("manifest {}", manifest.display());
        }
    }
    Ok(0)
}

fn read_responses(path: &Path) -> Result<[f64; study::N], Failure> {
    let m = io::read_matrix_csv(path)?;
    let values: Vec<f64> = m.transpose().iter().copied().collect();
    values.try_into().map_err(|v: Vec<f64>| {
        input_failure(format!(
            "{}: expected {} responses, found {}",
            path.display(),
            study::N,
            v.len()
        ))
    })
}

fn cmd_reproduce(out: Option<&Path>, responses: Option<&Path>, format: Format) -> Outcome {
    let override_y = responses.map(read_responses).transpose()?;
    let inputs: Vec<PathBuf> = responses.iter().map(|p| p.to_path_buf()).collect();
    let recorder = out
        .map(|dir| Recorder::start("reproduce", None, &inputs, dir))
        .transpose()?;

    let rep = reproduce(override_y.as_ref(), Execution::default())?;
    let passed = rep.all_passed();
    let report_json = json!({ "passed": passed, "checks": rep.checks });
    let text = render::reproduction(&rep);
    if let Some(mut rec) = recorder {
        rec.add(
            "reproduction.json",
            serde_json::to_vec_pretty(&report_json).expect("json output"),
        );
        rec.add("report.txt", text.clone().into_bytes());
        rec.finish()?;
    }
    match format {
        Format::Json => print_json(&report_json),
        Format::Text => print!("{text}"),
    }
    Ok(if passed { 0 } else { EXIT_VERIFY })
}

struct VerifyOpts {
    rates: Option<PathBuf>,
    trials: usize,
    seed: u64,
    mc_samples: usize,
    max_states: usize,
    max_tau: f64,
    replay: Option<PathBuf>,
    worst: Option<PathBuf>,
    exec: Execution,
}

fn severity(a: &Agreement) -> f64 {
    (a.deterministic_gap / mmreg::oracle::DETERMINISTIC_TOL)
        .max(a.max_z / mmreg::oracle::MC_Z_LIMIT)
}

fn cmd_verify(opts: &VerifyOpts, format: Format) -> Outcome {
    let instances = match &opts.replay {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| input_failure(format!("{}: {e}", path.display())))?;
            let inst: Instance = serde_json::from_str(&text)
                .map_err(|e| input_failure(format!("{}: {e}", path.display())))?;
            vec![inst]
        }
        None => {
            let rates = opts.rates.as_deref().map(io::read_rates).transpose()?;
            random_instances(
                rates.as_ref(),
                opts.trials,
                opts.max_states,
                opts.max_tau,
                opts.seed,
            )?
        }
    };
    let spec = QuadratureSpec::default();
    let results = instances
        .iter()
        .map(|inst| compare(inst, opts.mc_samples, &spec, opts.exec))
        .collect::<mmreg::Result<Vec<_>>>()?;
    let worst = results
        .iter()
        .max_by(|a, b| severity(a).total_cmp(&severity(b)))
        .expect("at least one trial");
    let failures = results.iter().filter(|a| !a.passed).count();
    if let Some(path) = &opts.worst {
        let bytes = serde_json::to_vec_pretty(&worst.instance).expect("json output");
        io::write_atomic(path, &bytes)?;
    }
    match format {
        Format::Json => print_json(&json!({
            "passed": failures == 0,
            "trials": results.len(),
            "failures": failures,
            "seed": opts.seed,
            "worst": worst,
            "results": results,
        })),
        Format::Text => print!("{}", render::verification(&results, worst, failures)),
    }
    Ok(if failures == 0 { 0 } else { EXIT_VERIFY })
}
