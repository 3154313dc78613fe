use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use mmreg::experiments::run_big_sample;
use mmreg::io;
use mmreg::study;
use serde_json::Value;

fn mmreg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mmreg"))
        .args(args)
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stdout_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout)
        .unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&o.stdout)))
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

struct Fixture {
    dir: tempfile::TempDir,
}

impl Fixture {
    fn new() -> Self {
        let f = Fixture {
            dir: tempfile::tempdir().unwrap(),
        };
        io::write_rates(&f.path("rates.csv"), &study::rates()).unwrap();
        io::write_matrix_csv(&f.path("x.csv"), &study::x_matrix()).unwrap();
        io::write_dataset(&f.path("data.csv"), study::dataset().observations()).unwrap();
        f
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn write(&self, name: &str, body: &str) -> PathBuf {
        let p = self.path(name);
        fs::write(&p, body).unwrap();
        p
    }

    fn config(&self, q: usize, seed: u64) -> PathBuf {
        let t: Vec<String> = study::TIMES.iter().map(|v| v.to_string()).collect();
        self.write(
            "run.cfg",
            &format!(
                "rates = rates.csv\nx = x.csv\nbeta = 0,2,4; 1,3,6; 2,5,8\nsigma = 1\nt = {}\n\
                 perturbation = 0,2,1\nq = {q}\nseed = {seed}\n",
                t.join(",")
            ),
        )
    }
}

#[test]
fn sojourn_first_column_at_one_decimal() {
    let f = Fixture::new();
    let rates = f.path("rates.csv");
    let o = mmreg(&[
        "--format",
        "json",
        "sojourn",
        "--rates",
        s(&rates),
        "--tau",
        "5",
        "--from",
        "1",
        "--to",
        "0",
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v = stdout_json(&o);
    let shown: Vec<String> = v["sojourn"]
        .as_array()
        .unwrap()
        .iter()
        .map(|x| format!("{:.1}", x.as_f64().unwrap()))
        .collect();
    assert_eq!(shown.join(" "), "1.8 2.0 1.2");
    assert!(v["path_probability"].as_f64().unwrap() > 0.0);

    let text = mmreg(&[
        "sojourn",
        "--rates",
        s(&rates),
        "--tau",
        "5",
        "--from",
        "1",
        "--to",
        "0",
    ]);
    assert_eq!(code(&text), 0);
    let out = String::from_utf8(text.stdout).unwrap();
    assert!(
        out.contains("1.797") && out.contains("1.989") && out.contains("1.214"),
        "{out}"
    );
}

#[test]
fn sojourn_rejects_zero_horizon() {
    let f = Fixture::new();
    let o = mmreg(&[
        "sojourn",
        "--rates",
        s(&f.path("rates.csv")),
        "--tau",
        "0.0",
        "--from",
        "1",
        "--to",
        "0",
    ]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("tau"));
}

#[test]
fn sojourn_single_state_prints_horizon() {
    let f = Fixture::new();
    let r = f.write("one.csv", "0\n");
    let o = mmreg(&[
        "--format",
        "json",
        "sojourn",
        "--rates",
        s(&r),
        "--tau",
        "3.25",
        "--from",
        "0",
        "--to",
        "0",
    ]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout_json(&o)["sojourn"], serde_json::json!([3.25]));
}

#[test]
fn sojourn_unreachable_endpoint() {
    let f = Fixture::new();
    let r = f.write("oneway.csv", "0,1\n0,0\n");
    let o = mmreg(&[
        "sojourn",
        "--rates",
        s(&r),
        "--tau",
        "2",
        "--from",
        "1",
        "--to",
        "0",
    ]);
    assert_eq!(code(&o), 3, "{}", stderr(&o));
}

#[test]
fn sojourn_input_errors_name_the_problem() {
    let f = Fixture::new();
    let o = mmreg(&[
        "sojourn",
        "--rates",
        s(&f.path("nope.csv")),
        "--tau",
        "1",
        "--from",
        "0",
        "--to",
        "0",
    ]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("nope.csv"));
    let bad = f.write("bad.csv", "0,1\n-2,0\n");
    let o = mmreg(&[
        "sojourn",
        "--rates",
        s(&bad),
        "--tau",
        "1",
        "--from",
        "0",
        "--to",
        "0",
    ]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("negative"));
    let o = mmreg(&[
        "sojourn",
        "--rates",
        s(&f.path("rates.csv")),
        "--tau",
        "1",
        "--from",
        "7",
        "--to",
        "0",
    ]);
    assert_eq!(code(&o), 2);
}

#[test]
fn fit_outputs_match_library() {
    let f = Fixture::new();
    let (data, rates) = (f.path("data.csv"), f.path("rates.csv"));
    let o = mmreg(&[
        "--format",
        "json",
        "fit",
        "--data",
        s(&data),
        "--rates",
        s(&rates),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v = stdout_json(&o);
    let beta = v["beta"].as_array().unwrap();
    assert_eq!(beta.len(), 3);
    assert_eq!(beta[0].as_array().unwrap().len(), 3);
    let coef: Vec<f64> = v["fit"]["coefficients"]
        .as_array()
        .unwrap()
        .iter()
        .map(|x| x.as_f64().unwrap())
        .collect();
    // Exact-sojourn values for the recorded run.
    assert!((coef[0] - -10.9885).abs() < 1e-3);
    assert!((v["fit"]["weighted_rss"].as_f64().unwrap() - 4657.30).abs() < 1e-2);
    assert_eq!(v["fit"]["dof"], 5);

    let o = mmreg(&[
        "--format",
        "json",
        "fit",
        "--data",
        s(&data),
        "--mode",
        "simple",
    ]);
    assert_eq!(code(&o), 0);
    let v = stdout_json(&o);
    assert_eq!(v["fit"]["dof"], 11);
    assert!((v["baseline_rss"].as_f64().unwrap() - 23217.43).abs() < 1e-2);

    let o = mmreg(&["fit", "--data", s(&data), "--rates", s(&rates)]);
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(
        text.contains("-10.988") && text.contains("931.461"),
        "{text}"
    );
}

#[test]
fn fit_rejects_too_few_rows() {
    let f = Fixture::new();
    let data = study::dataset();
    let p = f.path("short.csv");
    io::write_dataset(&p, &data.observations()[..10]).unwrap();
    let o = mmreg(&["fit", "--data", s(&p), "--rates", s(&f.path("rates.csv"))]);
    assert_eq!(code(&o), 4);
    assert!(stderr(&o).contains("insufficient"));
}

#[test]
fn fit_rank_deficient_reports_condition() {
    let f = Fixture::new();
    let mut body = String::from("y,t,initial_state,final_state,x1,x2\n");
    for i in 0..12 {
        body.push_str(&format!("{},{},0,0,{},{}\n", i * 3, 1 + i % 4, i, 2 * i));
    }
    let p = f.write("collinear.csv", &body);
    let o = mmreg(&["fit", "--data", s(&p), "--mode", "simple"]);
    assert_eq!(code(&o), 4);
    assert!(stderr(&o).contains("condition number"), "{}", stderr(&o));
}

#[test]
fn fit_reports_malformed_line() {
    let f = Fixture::new();
    let p = f.write(
        "bad.csv",
        "y,t,initial_state,final_state,x1\n1,2,0,0,1\n2,3,0,0,1\n3,x,0,0,1\n",
    );
    let o = mmreg(&["fit", "--data", s(&p), "--mode", "simple"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains(":4:"), "{}", stderr(&o));
    let o = mmreg(&["fit", "--data", s(&f.path("data.csv"))]);
    assert_eq!(code(&o), 2);
}

#[test]
fn simulate_writes_grid_and_manifest() {
    let f = Fixture::new();
    let cfg = f.config(500, 2026);
    let out = f.path("out");
    let o = mmreg(&["simulate", "--config", s(&cfg), "--out", s(&out)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let table = fs::read_to_string(out.join("table.csv")).unwrap();
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(lines[0], "coefficient,true,500");
    assert_eq!(lines.len(), 10);
    assert!(lines[1..].iter().all(|l| l.split(',').count() == 3));

    let manifest: Value =
        serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "simulate");
    assert_eq!(manifest["seed"], 2026);
    assert_eq!(manifest["inputs"].as_array().unwrap().len(), 3);
    assert_eq!(manifest["outputs"].as_array().unwrap().len(), 3);
    assert!(manifest["inputs"][0]["sha256"].as_str().unwrap().len() == 64);
}

#[test]
fn simulate_is_deterministic() {
    let f = Fixture::new();
    let cfg = f.config(1, 77);
    let (a, b) = (f.path("a"), f.path("b"));
    assert_eq!(
        code(&mmreg(&["simulate", "--config", s(&cfg), "--out", s(&a)])),
        0
    );
    assert_eq!(
        code(&mmreg(&[
            "simulate",
            "--config",
            s(&cfg),
            "--out",
            s(&b),
            "--execution",
            "sequential"
        ])),
        0
    );
    for name in ["table.csv", "report.txt", "dataset.csv"] {
        assert_eq!(
            fs::read(a.join(name)).unwrap(),
            fs::read(b.join(name)).unwrap(),
            "{name}"
        );
    }
}

#[test]
fn simulated_dataset_round_trips_into_fit() {
    let f = Fixture::new();
    let cfg = f.config(4, 5);
    let out = f.path("out");
    assert_eq!(
        code(&mmreg(&["simulate", "--config", s(&cfg), "--out", s(&out)])),
        0
    );
    let back = io::read_dataset(&out.join("dataset.csv"), Some(3)).unwrap();
    let direct = run_big_sample(&io::read_config(&cfg).unwrap().config).unwrap();
    assert_eq!(back.observations(), &direct.observations[..]);

    let o = mmreg(&[
        "--format",
        "json",
        "fit",
        "--data",
        s(&out.join("dataset.csv")),
        "--rates",
        s(&f.path("rates.csv")),
    ]);
    assert_eq!(code(&o), 0);
    let v = stdout_json(&o);
    let coef: Vec<f64> = v["fit"]["coefficients"]
        .as_array()
        .unwrap()
        .iter()
        .map(|x| x.as_f64().unwrap())
        .collect();
    assert_eq!(coef, direct.checkpoints[0].coefficients);
}

#[test]
fn simulate_missing_rates_names_path() {
    let f = Fixture::new();
    let cfg = f.config(1, 1);
    fs::remove_file(f.path("rates.csv")).unwrap();
    let o = mmreg(&["simulate", "--config", s(&cfg), "--out", s(&f.path("out"))]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("rates.csv"), "{}", stderr(&o));
    let o = mmreg(&[
        "simulate",
        "--config",
        s(&f.path("none.cfg")),
        "--out",
        s(&f.path("out")),
    ]);
    assert_eq!(code(&o), 2);
}

#[test]
fn reproduce_lists_every_check() {
    let f = Fixture::new();
    let out = f.path("repro");
    let o = mmreg(&["--format", "json", "reproduce", "--out", s(&out)]);
    let v = stdout_json(&o);
    let checks = v["checks"].as_array().unwrap();
    assert_eq!(checks.len(), 15);
    let all = checks.iter().all(|c| c["passed"].as_bool().unwrap());
    assert_eq!(v["passed"].as_bool().unwrap(), all);
    assert_eq!(code(&o), if all { 0 } else { 5 });
    for id in ["1", "3b", "3c", "4b", "4c", "6d", "6e"] {
        let c = checks.iter().find(|c| c["id"] == id).unwrap();
        assert!(c["passed"].as_bool().unwrap(), "check {id}");
    }
    assert!(out.join("reproduction.json").exists());
    assert!(out.join("manifest.json").exists());
}

#[test]
fn reproduce_detects_tampered_responses() {
    let f = Fixture::new();
    let mut y = study::RESPONSES;
    y[4] += 40.0;
    let body: Vec<String> = y.iter().map(|v| v.to_string()).collect();
    let p = f.write("y.csv", &(body.join("\n") + "\n"));
    let o = mmreg(&["--format", "json", "reproduce", "--responses", s(&p)]);
    assert_eq!(code(&o), 5);
    let v = stdout_json(&o);
    let rss = v["checks"]
        .as_array()
        .unwrap()
        .iter()
        .find(|c| c["id"] == "4b")
        .unwrap();
    assert!(!rss["passed"].as_bool().unwrap());

    let short = f.write("short.csv", "1\n2\n");
    assert_eq!(code(&mmreg(&["reproduce", "--responses", s(&short)])), 2);
}

#[test]
fn verify_rejects_zero_trials() {
    let o = mmreg(&["verify", "--trials", "0"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("trials"));
}

#[test]
fn verify_reference_rates_and_replay() {
    let f = Fixture::new();
    let worst = f.path("worst.json");
    let o = mmreg(&[
        "--format",
        "json",
        "verify",
        "--rates",
        s(&f.path("rates.csv")),
        "--trials",
        "5",
        "--mc-samples",
        "20000",
        "--worst",
        s(&worst),
    ]);
    let v = stdout_json(&o);
    assert_eq!(v["trials"], 5);
    assert_eq!(code(&o), if v["passed"].as_bool().unwrap() { 0 } else { 5 });
    assert!(v["results"]
        .as_array()
        .unwrap()
        .iter()
        .all(|r| r["deterministic_gap"].as_f64().unwrap() < 1e-8));

    let o2 = mmreg(&[
        "--format",
        "json",
        "verify",
        "--replay",
        s(&worst),
        "--mc-samples",
        "20000",
    ]);
    let r = &stdout_json(&o2)["results"][0];
    assert_eq!(r["instance"], v["worst"]["instance"]);
    assert_eq!(r["monte_carlo"], v["worst"]["monte_carlo"]);
}

#[test]
fn verify_degenerate_rates_use_quadrature() {
    let f = Fixture::new();
    let r = f.write("complete.csv", "0,1,1\n1,0,1\n1,1,0\n");
    let o = mmreg(&[
        "--format",
        "json",
        "verify",
        "--rates",
        s(&r),
        "--trials",
        "10",
        "--mc-samples",
        "10000",
    ]);
    let v = stdout_json(&o);
    let results = v["results"].as_array().unwrap();
    assert!(results.iter().all(|r| r["method"] == "quadrature"));
    assert_eq!(
        code(&o),
        0,
        "{}",
        serde_json::to_string_pretty(&v["worst"]).unwrap()
    );
}

#[test]
fn json_schema_is_stable() {
    let f = Fixture::new();
    let rates = f.path("rates.csv");
    let args = [
        "--format",
        "json",
        "sojourn",
        "--rates",
        s(&rates),
        "--tau",
        "4",
        "--from",
        "0",
        "--to",
        "2",
    ];
    let a = stdout_json(&mmreg(&args));
    let b = stdout_json(&mmreg(&args));
    assert_eq!(a, b);
    let keys: Vec<&String> = a.as_object().unwrap().keys().collect();
    assert_eq!(
        keys,
        ["from", "method", "path_probability", "sojourn", "tau", "to"]
    );
}
