//! File formats: rate and matrix CSVs, the observation CSV
//! (`y,t,initial_state,final_state,x1..xk`) and the key-value experiment
//! config.
//!
//! Floats are written with Rust's shortest round-trip formatting, so a file
//! written here reads back bit-identical.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;

use crate::ctmc::RateMatrix;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::experiments::{default_checkpoints, ExperimentConfig, InitialStates, Pooling};
use crate::regression::{Dataset, Observation};

fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.display().to_string(),
        source,
    }
}

fn parse_err(path: &Path, line: usize, reason: impl Into<String>) -> Error {
    Error::Parse {
        path: path.display().to_string(),
        line,
        reason: reason.into(),
    }
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| io_err(path, e))
}

fn reader(text: &str, headers: bool) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new()
        .has_headers(headers)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(text.as_bytes())
}

fn record_line(r: &csv::StringRecord) -> usize {
    r.position().map(|p| p.line() as usize).unwrap_or(0)
}

fn parse_f64(path: &Path, line: usize, field: &str, s: &str) -> Result<f64> {
    let v: f64 = s
        .parse()
        .map_err(|_| parse_err(path, line, format!("{field}: `{s}` is not a number")))?;
    if !v.is_finite() {
        return Err(parse_err(
            path,
            line,
            format!("{field}: `{s}` is not finite"),
        ));
    }
    Ok(v)
}

fn parse_usize(path: &Path, line: usize, field: &str, s: &str) -> Result<usize> {
    s.parse().map_err(|_| {
        parse_err(
            path,
            line,
            format!("{field}: `{s}` is not a non-negative integer"),
        )
    })
}

/// Headerless numeric CSV, one matrix row per line.
pub fn read_matrix_csv(path: &Path) -> Result<DMatrix<f64>> {
    let text = read_text(path)?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for rec in reader(&text, false).records() {
        let rec = rec.map_err(|e| parse_err(path, 0, e.to_string()))?;
        let line = record_line(&rec);
        if rec.iter().all(str::is_empty) {
            continue;
        }
        let row = rec
            .iter()
            .enumerate()
            .map(|(c, s)| parse_f64(path, line, &format!("column {}", c + 1), s))
            .collect::<Result<Vec<_>>>()?;
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(parse_err(
                    path,
                    line,
                    format!("expected {} columns, found {}", first.len(), row.len()),
                ));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(parse_err(path, 0, "no rows"));
    }
    let (r, c) = (rows.len(), rows[0].len());
    Ok(DMatrix::from_fn(r, c, |i, j| rows[i][j]))
}

pub fn write_matrix_csv(path: &Path, m: &DMatrix<f64>) -> Result<()> {
    let mut out = String::new();
    for i in 0..m.nrows() {
        let row: Vec<String> = m.row(i).iter().map(|v| v.to_string()).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    write_atomic(path, out.as_bytes())
}

pub fn read_rates(path: &Path) -> Result<RateMatrix> {
    let m = read_matrix_csv(path)?;
    RateMatrix::new(m).map_err(|e| parse_err(path, 0, e.to_string()))
}

pub fn write_rates(path: &Path, rates: &RateMatrix) -> Result<()> {
    write_matrix_csv(path, rates.as_matrix())
}

/// Reads an observation CSV. `m` defaults to one more than the largest state
/// label present.
pub fn read_dataset(path: &Path, m: Option<usize>) -> Result<Dataset> {
    let text = read_text(path)?;
    let mut rdr = reader(&text, true);
    let header = rdr
        .headers()
        .map_err(|e| parse_err(path, 1, e.to_string()))?
        .clone();
    let names: Vec<&str> = header.iter().collect();
    if names.len() < 5 || names[..4] != ["y", "t", "initial_state", "final_state"] {
        return Err(parse_err(
            path,
            1,
            "header must be y,t,initial_state,final_state,x1..xk",
        ));
    }
    for (v, name) in names[4..].iter().enumerate() {
        if *name != format!("x{}", v + 1) {
            return Err(parse_err(
                path,
                1,
                format!("expected column x{}, found `{name}`", v + 1),
            ));
        }
    }
    let k = names.len() - 4;
    let mut observations = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| parse_err(path, 0, e.to_string()))?;
        let line = record_line(&rec);
        if rec.len() != k + 4 {
            return Err(parse_err(
                path,
                line,
                format!("expected {} fields, found {}", k + 4, rec.len()),
            ));
        }
        let x = (0..k)
            .map(|v| parse_f64(path, line, names[4 + v], &rec[4 + v]))
            .collect::<Result<Vec<_>>>()?;
        let total_time = parse_f64(path, line, "t", &rec[1])?;
        if total_time <= 0.0 {
            return Err(parse_err(path, line, "t: must be > 0"));
        }
        observations.push(Observation {
            response: parse_f64(path, line, "y", &rec[0])?,
            total_time,
            initial_state: parse_usize(path, line, "initial_state", &rec[2])?,
            final_state: parse_usize(path, line, "final_state", &rec[3])?,
            x,
        });
        if let Some(m) = m {
            let o = observations.last().unwrap();
            if o.initial_state >= m || o.final_state >= m {
                return Err(parse_err(
                    path,
                    line,
                    format!("state label must be below {m}"),
                ));
            }
        }
    }
    if observations.is_empty() {
        return Err(parse_err(path, 1, "no observations"));
    }
    let m = m.unwrap_or_else(|| {
        observations
            .iter()
            .map(|o| o.initial_state.max(o.final_state) + 1)
            .max()
            .unwrap_or(1)
    });
    Dataset::new(observations, m).map_err(|e| parse_err(path, 0, e.to_string()))
}

pub fn dataset_to_csv(observations: &[Observation]) -> String {
    let k = observations.first().map_or(0, |o| o.x.len());
    let mut out = String::from("y,t,initial_state,final_state");
    for v in 1..=k {
        out.push_str(&format!(",x{v}"));
    }
    out.push('\n');
    for o in observations {
        out.push_str(&format!(
            "{},{},{},{}",
            o.response, o.total_time, o.initial_state, o.final_state
        ));
        for x in &o.x {
            out.push_str(&format!(",{x}"));
        }
        out.push('\n');
    }
    out
}

pub fn write_dataset(path: &Path, observations: &[Observation]) -> Result<()> {
    write_atomic(path, dataset_to_csv(observations).as_bytes())
}

/// Writes through a temporary file in the same directory and renames it into
/// place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path
        .parent()
        .filter(|d| !d.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let tmp = dir.join(format!(".{name}.tmp{}", std::process::id()));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result.map_err(|e| io_err(path, e))
}

/// A parsed experiment config together with the files it referenced.
#[derive(Debug, Clone)]
pub struct ConfigFile {
    pub config: ExperimentConfig,
    pub inputs: Vec<PathBuf>,
}

const CONFIG_KEYS: [&str; 12] = [
    "rates",
    "beta",
    "sigma",
    "x",
    "t",
    "initial_states",
    "perturbation",
    "q",
    "seed",
    "pooling",
    "checkpoints",
    "execution",
];

fn list<T>(
    path: &Path,
    line: usize,
    key: &str,
    value: &str,
    f: impl Fn(&str) -> Option<T>,
) -> Result<Vec<T>> {
    value
        .split(',')
        .map(|s| {
            let s = s.trim();
            f(s).ok_or_else(|| parse_err(path, line, format!("{key}: bad entry `{s}`")))
        })
        .collect()
}

fn float_list(path: &Path, line: usize, key: &str, value: &str) -> Result<Vec<f64>> {
    list(path, line, key, value, |s| {
        s.parse::<f64>().ok().filter(|v| v.is_finite())
    })
}

/// Parses a `key = value` config. Blank lines and `#` comments are ignored;
/// file paths are relative to the config's directory.
///
/// ```text
/// rates = rates.csv
/// beta = 0,2,4; 1,3,6; 2,5,8
/// sigma = 1
/// x = x.csv
/// t = 5,8,3
/// q = 2000
/// seed = 7
/// ```
///
/// Optional keys: `initial_states` (`stationary` or a list), `perturbation`
/// (per-column half-widths, default 0), `pooling`, `checkpoints` and
/// `execution`.
pub fn read_config(path: &Path) -> Result<ConfigFile> {
    let text = read_text(path)?;
    let base = path.parent().unwrap_or(Path::new("."));
    let mut entries: Vec<(&str, &str, usize)> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| parse_err(path, line, "expected `key = value`"))?;
        let (key, value) = (key.trim(), value.trim());
        if !CONFIG_KEYS.contains(&key) {
            return Err(parse_err(path, line, format!("unknown key `{key}`")));
        }
        if entries.iter().any(|(k, _, _)| *k == key) {
            return Err(parse_err(path, line, format!("duplicate key `{key}`")));
        }
        entries.push((key, value, line));
    }
    let get = |key: &str| {
        entries
            .iter()
            .find(|(k, _, _)| *k == key)
            .map(|&(_, v, l)| (v, l))
    };
    let need =
        |key: &str| get(key).ok_or_else(|| parse_err(path, 0, format!("missing key `{key}`")));

    let mut inputs = Vec::new();
    let (v, _) = need("rates")?;
    let rates_path = base.join(v);
    let rates = read_rates(&rates_path)?;
    inputs.push(rates_path);
    let (v, _) = need("x")?;
    let x_path = base.join(v);
    let x_expected = read_matrix_csv(&x_path)?;
    inputs.push(x_path);

    let (v, line) = need("beta")?;
    let rows = v
        .split(';')
        .map(|r| float_list(path, line, "beta", r))
        .collect::<Result<Vec<_>>>()?;
    if rows.iter().any(|r| r.len() != rows[0].len()) {
        return Err(parse_err(path, line, "beta: rows differ in length"));
    }
    let beta = DMatrix::from_fn(rows.len(), rows[0].len(), |i, j| rows[i][j]);

    let (v, line) = need("sigma")?;
    let sigma = parse_f64(path, line, "sigma", v)?;
    let (v, line) = need("t")?;
    let t_expected = float_list(path, line, "t", v)?;
    let (v, line) = need("q")?;
    let q = parse_usize(path, line, "q", v)?;
    let (v, line) = need("seed")?;
    let seed: u64 = v.parse().map_err(|_| {
        parse_err(
            path,
            line,
            format!("seed: `{v}` is not a non-negative integer"),
        )
    })?;

    let initial_states = match get("initial_states") {
        None => InitialStates::Stationary,
        Some(("stationary", _)) => InitialStates::Stationary,
        Some((v, line)) => {
            InitialStates::Fixed(list(path, line, "initial_states", v, |s| s.parse().ok())?)
        }
    };
    let perturbation = match get("perturbation") {
        None => vec![0.0; x_expected.ncols()],
        Some((v, line)) => float_list(path, line, "perturbation", v)?,
    };
    let pooling = match get("pooling") {
        None => Pooling::default(),
        Some((v, line)) => v.parse().map_err(|e: String| parse_err(path, line, e))?,
    };
    let checkpoints = match get("checkpoints") {
        None | Some(("default", _)) => default_checkpoints(q.max(1)),
        Some((v, line)) => list(path, line, "checkpoints", v, |s| s.parse().ok())?,
    };
    let execution = match get("execution") {
        None => Execution::default(),
        Some(("parallel", _)) => Execution::Parallel,
        Some(("sequential", _)) => Execution::Sequential,
        Some((v, line)) => {
            return Err(parse_err(
                path,
                line,
                format!("execution: `{v}` (expected parallel | sequential)"),
            ))
        }
    };

    let config = ExperimentConfig {
        rates,
        beta,
        sigma,
        x_expected,
        t_expected,
        initial_states,
        perturbation,
        q,
        seed,
        pooling,
        checkpoints,
        execution,
    };
    config.validate()?;
    Ok(ConfigFile { config, inputs })
}
