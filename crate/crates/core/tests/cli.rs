use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::process::Command;

use ruinbound::cli::{load_model, LoadedModel, EXIT_CONFIG, EXIT_DOMINANCE, EXIT_OK, EXIT_UNCERTIFIED};
use ruinbound::montecarlo::{dominance_row, simulate_ruin, SimConfig};

fn config(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)
}

struct Run {
    code: i32,
    stdout: String,
    stderr: String,
}

fn ruinbound(args: &[&str]) -> Run {
    let out = Command::new(env!("CARGO_BIN_EXE_ruinbound")).args(args).output().unwrap();
    Run {
        code: out.status.code().unwrap(),
        stdout: String::from_utf8(out.stdout).unwrap(),
        stderr: String::from_utf8(out.stderr).unwrap(),
    }
}

fn with_model(cmd: &str, model: &Path, rest: &[&str]) -> Run {
    let model = model.to_str().unwrap();
    let mut args = vec![cmd, "--model", model];
    args.extend_from_slice(rest);
    ruinbound(&args)
}

/// Rows of a CSV body keyed by header name.
fn rows(csv: &str) -> Vec<HashMap<String, String>> {
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    lines
        .map(|l| header.iter().map(|h| h.to_string()).zip(l.split(',').map(str::to_string)).collect())
        .collect()
}

fn num(row: &HashMap<String, String>, col: &str) -> f64 {
    match row[col].as_str() {
        "+inf" => f64::INFINITY,
        "-inf" => f64::NEG_INFINITY,
        s => s.parse().unwrap(),
    }
}

#[test]
fn adjustment_reports() {
    let r = with_model("adjustment", &config("ex1.json"), &[]);
    assert_eq!(r.code, EXIT_OK);
    let period = rows(&r.stdout).into_iter().find(|row| row["coefficient"] == "L_Sl").unwrap();
    assert_eq!(period["value"], "1.00000000000");

    let r = with_model("adjustment", &config("degenerate.json"), &[]);
    let l_y = rows(&r.stdout).into_iter().find(|row| row["coefficient"] == "L_Y").unwrap();
    assert_eq!(l_y["value"], "+inf");

    let r = with_model("adjustment", &config("classical.json"), &[]);
    let kappa = rows(&r.stdout).into_iter().find(|row| row["coefficient"] == "kappa").unwrap();
    assert_eq!(kappa["value"], "0.500000000000");
}

#[test]
fn bound_reports() {
    let r = with_model("bound", &config("ex2.json"), &["--u", "576", "--method", "periodic_C1"]);
    assert_eq!(r.code, EXIT_OK);
    assert!(num(&rows(&r.stdout)[0], "log10_bound") <= -165.0);

    let r = with_model("bound", &config("ex4.json"), &["--u", "1e-9,103"]);
    let table = rows(&r.stdout);
    assert!(num(&table[0], "log10_bound").abs() < 1e-8);
    assert!(num(&table[1], "log10_bound") <= -88.0);

    let r = with_model("bound", &config("ex1.json"), &["--u", "1:1:3", "--method", "general_opt,corollary1,union_baseline,quasi_periodic_C2", "--l", "2", "--m", "1", "--lstar", "1"]);
    assert_eq!(r.code, EXIT_OK, "{}", r.stderr);
    let table = rows(&r.stdout);
    assert_eq!(table.len(), 12);
    let c2 = table.iter().find(|row| row["method"] == "quasi_periodic_C2").unwrap();
    assert!((num(c2, "C") - 0.25f64.exp()).abs() < 1e-9);
    assert_eq!(num(c2, "L"), 1.0);
}

#[test]
fn compare_against_reference_curves() {
    for (name, u, ceiling) in [("ex2.json", "576", -165.0), ("ex4.json", "103", -88.0)] {
        let r = with_model("compare", &config(name), &["--u", u]);
        assert_eq!(r.code, EXIT_OK);
        let row = &rows(&r.stdout)[0];
        assert!(num(row, "log10_optimized") <= ceiling);
        assert_eq!(num(row, "log10_external_a"), 0.0);
        assert_eq!(row["winner"], "optimized");
    }
    let r = with_model("compare", &config("ex2.json"), &["--u", "1,2,5,10,50"]);
    for row in rows(&r.stdout) {
        assert!(num(&row, "log10_union_baseline") >= num(&row, "log10_optimized"));
    }
}

#[test]
fn simulate_rows() {
    let r = with_model("simulate", &config("degenerate.json"), &["--u", "0.5", "--paths", "1000", "--horizon", "50"]);
    assert_eq!(r.code, EXIT_OK);
    let row = &rows(&r.stdout)[0];
    assert_eq!(row["estimate"], "0");
    assert_eq!(row["dominated"], "true");
    assert!(r.stderr.contains("uninformative"));

    let r = with_model("simulate", &config("classical.json"), &["--u", "4", "--paths", "100000", "--horizon", "400"]);
    let row = &rows(&r.stdout)[0];
    let exact = 0.5 * (-2.0f64).exp();
    assert!(num(row, "ci_low") <= exact && exact <= num(row, "ci_high"));
    assert!(num(row, "bound") >= exact);

    let r = with_model("simulate", &config("ex2.json"), &["--u", "5", "--paths", "100000", "--horizon", "500"]);
    let row = &rows(&r.stdout)[0];
    assert_eq!(row["dominated"], "true");
    assert!(num(row, "estimate") <= 2.2 * (-10.0f64 / 3.0).exp());
}

#[test]
fn json_output_matches_csv() {
    let csv = with_model("bound", &config("ex3.json"), &["--u", "1,3,4.5"]);
    let json = with_model("bound", &config("ex3.json"), &["--u", "1,3,4.5", "--format", "json"]);
    let parsed: serde_json::Value = serde_json::from_str(&json.stdout).unwrap();
    let items = parsed.as_array().unwrap();
    for (row, item) in rows(&csv.stdout).iter().zip(items) {
        let log10 = item["log_bound"].as_f64().unwrap() / std::f64::consts::LN_10;
        assert!((log10 - num(row, "log10_bound")).abs() < 1e-9);
        assert_eq!(item["method"], "general_opt");
    }

    let json = with_model("adjustment", &config("degenerate.json"), &["--format", "json"]);
    let parsed: serde_json::Value = serde_json::from_str(&json.stdout).unwrap();
    assert_eq!(parsed[0]["value"], "+inf");
}

#[test]
fn out_flag_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bound.csv");
    let r = with_model("bound", &config("ex1.json"), &["--u", "2", "--out", path.to_str().unwrap()]);
    assert_eq!(r.code, EXIT_OK);
    assert!(r.stdout.is_empty());
    let written = std::fs::read_to_string(&path).unwrap();
    assert!(written.starts_with("u,method,h_star,log10_bound,C,L,certified\n"));
}

#[test]
fn serialized_models_reproduce_outputs() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["ex1.json", "ex2.json", "ex3.json", "ex4.json", "classical.json", "degenerate.json"] {
        let text = match load_model(&config(name)).unwrap() {
            LoadedModel::Risk(m) => serde_json::to_string_pretty(&m).unwrap(),
            LoadedModel::Event { event, .. } => serde_json::to_string_pretty(&event).unwrap(),
        };
        let copy = dir.path().join(name);
        std::fs::write(&copy, text).unwrap();
        for (cmd, rest) in [("adjustment", vec![]), ("bound", vec!["--u", "0.5,3,20", "--method", "general_opt,corollary1,union_baseline"])] {
            let a = with_model(cmd, &config(name), &rest);
            let b = with_model(cmd, &copy, &rest);
            assert_eq!(a.code, EXIT_OK, "{name}: {}", a.stderr);
            assert_eq!(a.stdout, b.stdout, "{name} {cmd}");
        }
    }
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let broken = dir.path().join("broken.json");
    std::fs::write(&broken, "{\n  \"increments\": {\"kind\": \"periodic\",\n    \"cycle\": [{\"family\": \"normal\", \"mean\": 0.0}]}\n}\n").unwrap();
    let r = with_model("adjustment", &broken, &[]);
    assert_eq!(r.code, EXIT_CONFIG);
    assert!(r.stderr.contains("broken.json:"), "{}", r.stderr);
    assert!(r.stderr.contains("variance"), "{}", r.stderr);

    let r = with_model("adjustment", &dir.path().join("missing.json"), &[]);
    assert_eq!(r.code, EXIT_CONFIG);

    let r = with_model("bound", &config("ex1.json"), &["--u", "3,1"]);
    assert_eq!(r.code, EXIT_CONFIG);
    let r = with_model("bound", &config("ex1.json"), &["--u", "1", "--tol", "-1"]);
    assert_eq!(r.code, EXIT_CONFIG);
    let r = with_model("bound", &config("ex1.json"), &["--u", "1", "--method", "nonsense"]);
    assert_eq!(r.code, EXIT_CONFIG);
    let r = with_model("simulate", &config("ex1.json"), &["--u", "1", "--paths", "0"]);
    assert_eq!(r.code, EXIT_CONFIG);
}

#[test]
fn strict_mode_rejects_uncertified_results() {
    let args = ["--u", "1", "--kmax", "1"];
    let lenient = with_model("bound", &config("ex3.json"), &args);
    assert_eq!(lenient.code, EXIT_OK);
    assert!(lenient.stderr.contains("warning:"));
    assert_eq!(rows(&lenient.stdout)[0]["certified"], "false");
    let strict = with_model("bound", &config("ex3.json"), &["--u", "1", "--kmax", "1", "--strict"]);
    assert_eq!(strict.code, EXIT_UNCERTIFIED);
    let certified = with_model("bound", &config("ex3.json"), &["--u", "1", "--strict"]);
    assert_eq!(certified.code, EXIT_OK);
}

#[test]
fn dominance_failures_are_flagged() {
    // a claimed bound below an observed ruin frequency is a violation
    let model = ruinbound::RiskModel::iid(ruinbound::IncrementDistribution::normal(-0.5, 1.0).unwrap(), "").unwrap();
    let sim = simulate_ruin(&model, 1.0, &SimConfig::new(20_000, 200, 0)).unwrap();
    let row = dominance_row(sim, -50.0, true);
    assert!(!row.dominated && row.informative);
    assert_eq!(EXIT_DOMINANCE, 4);
}

#[test]
fn simulate_is_deterministic_across_workers() {
    let run = |threads: &str| {
        Command::new(env!("CARGO_BIN_EXE_ruinbound"))
            .args(["simulate", "--model"])
            .arg(config("ex4.json"))
            .args(["--u", "2,6", "--paths", "5000", "--horizon", "300", "--seed", "11"])
            .env("RUINBOUND_THREADS", threads)
            .output()
            .unwrap()
            .stdout
    };
    assert_eq!(run("1"), run("3"));
}
