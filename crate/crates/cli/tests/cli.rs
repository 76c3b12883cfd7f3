use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const HEADER: &str = "athlete_id\t100m\t200m\t400m\t800m\t1500m\tMile\t5000m\t10000m\tHalfMarathon\tMarathon\n";

fn runlmc(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_runlmc"))
        .args(args)
        .current_dir(dir)
        .env_remove("RUNLMC_THREADS")
        .output()
        .expect("binary runs")
}

fn footer(out: &Output) -> Value {
    let stderr = String::from_utf8_lossy(&out.stderr);
    let last = stderr.lines().last().expect("footer line");
    serde_json::from_str(last).expect("footer is JSON")
}

fn one_row_table(dir: &Path) {
    fs::write(dir.join("one.tsv"), format!("{HEADER}1\t\t\t\t\t\t\t\t2400\t\t\n")).unwrap();
}

#[test]
fn unknown_subcommand_is_a_usage_error() {
    let dir = TempDir::new().unwrap();
    assert_eq!(runlmc(dir.path(), &["bogus"]).status.code(), Some(1));
    assert_eq!(runlmc(dir.path(), &["synth", "--athletes", "ten"]).status.code(), Some(1));
}

#[test]
fn bad_method_and_row_are_usage_errors() {
    let dir = TempDir::new().unwrap();
    one_row_table(dir.path());
    let bad = runlmc(dir.path(), &["predict", "--input", "one.tsv", "--method", "nope", "--row", "0", "--event", "marathon"]);
    assert_eq!(bad.status.code(), Some(1));
    let row = runlmc(dir.path(), &["predict", "--input", "one.tsv", "--method", "riegel", "--row", "3", "--event", "marathon"]);
    assert_eq!(row.status.code(), Some(1));
    assert_eq!(footer(&row)["status"], "usage_error");
}

#[test]
fn missing_or_malformed_data_exits_2() {
    let dir = TempDir::new().unwrap();
    let missing = runlmc(dir.path(), &["impute", "--input", "absent.tsv"]);
    assert_eq!(missing.status.code(), Some(2));
    assert_eq!(footer(&missing)["status"], "data_error");
    fs::write(dir.path().join("ath.csv"), "athlete_id,gender,birth_date\n1,M,1980-01-01\n").unwrap();
    fs::write(dir.path().join("ev.csv"), "athlete_id,event,date,performance\n1,10000m,2012-05-01,fast\n").unwrap();
    let bad = runlmc(dir.path(), &["ingest", "--athletes", "ath.csv", "--events", "ev.csv"]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn riegel_marathon_from_a_10k() {
    let dir = TempDir::new().unwrap();
    one_row_table(dir.path());
    let out = runlmc(dir.path(), &["predict", "--input", "one.tsv", "--method", "riegel", "--row", "0", "--event", "marathon"]);
    assert_eq!(out.status.code(), Some(0));
    let stdout = String::from_utf8(out.stdout).unwrap();
    let line = stdout.lines().nth(1).unwrap();
    let seconds: f64 = line.split('\t').nth(4).unwrap().parse().unwrap();
    let want = 2400.0 * (42195.0_f64 / 10000.0).powf(1.06);
    assert!((seconds - want).abs() < 1e-6, "{seconds} vs {want}");
    assert!((seconds - 11040.5).abs() < 0.5);
}

#[test]
fn config_file_overrides_flags_and_footer_echoes_it() {
    let dir = TempDir::new().unwrap();
    one_row_table(dir.path());
    fs::write(dir.path().join("cfg.json"), r#"{"seed": 5, "method": "power-law"}"#).unwrap();
    let args = ["predict", "--input", "one.tsv", "--method", "riegel", "--row", "0", "--event", "marathon"];
    let mut with_cfg = args.to_vec();
    with_cfg.extend(["--config", "cfg.json"]);
    let out = runlmc(dir.path(), &with_cfg);
    let f = footer(&out);
    assert_eq!(f["seed"], 5);
    assert_eq!(f["command"], "predict");
    assert_eq!(f["config"]["command"]["predict"]["method"]["method"], "power-law");
    assert_eq!(f["config_hash"].as_str().unwrap().len(), 64);
    assert!(f["elapsed_ms"].as_f64().unwrap() >= 0.0);

    let mut explicit = args.to_vec();
    explicit[4] = "power-law";
    explicit.extend(["--seed", "5"]);
    let direct = runlmc(dir.path(), &explicit);
    assert_eq!(footer(&direct)["config_hash"], f["config_hash"]);
    assert_eq!(direct.stdout, out.stdout);
}

#[test]
fn thread_count_comes_from_the_environment() {
    let dir = TempDir::new().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_runlmc"))
        .args(["synth", "--athletes", "20"])
        .current_dir(dir.path())
        .env("RUNLMC_THREADS", "3")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(footer(&out)["config"]["global"]["threads"], 3);
}

fn pipeline(root: &Path, threads: &str, tag: &str) -> Vec<Vec<u8>> {
    let dir = &root.join(tag);
    fs::create_dir(dir).unwrap();
    let steps: [&[&str]; 5] = [
        &["synth", "--athletes", "400", "--scheme", "reference", "--seed", "11", "--out", "t.tsv"],
        &["impute", "--input", "t.tsv", "--method", "lmc2", "--bagged", "--out", "imp.tsv"],
        &[
            "compare", "--input", "t.tsv", "--methods", "mean,riegel,em,lmc2", "--holdouts", "150", "--boot", "100",
            "--seed", "3", "--out", "cmp.tsv",
        ],
        &["components", "--input", "t.tsv", "--rank", "3", "--out", "comp.tsv"],
        &["fair-race", "--input", "t.tsv", "--a", "0", "--b", "1", "--boot", "30", "--out", "fair.tsv"],
    ];
    let mut files = Vec::new();
    for step in steps {
        let mut args = step.to_vec();
        args.extend(["--threads", threads]);
        let out = runlmc(dir, &args);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        let tsv = step.last().unwrap();
        files.push(fs::read(dir.join(tsv)).unwrap());
        files.push(fs::read(dir.join(Path::new(tsv).with_extension("json"))).unwrap());
    }
    files
}

#[test]
fn outputs_are_byte_identical_across_runs_and_thread_counts() {
    let dir = TempDir::new().unwrap();
    let a = pipeline(dir.path(), "1", "a");
    let b = pipeline(dir.path(), "1", "b");
    let c = pipeline(dir.path(), "4", "c");
    assert_eq!(a.len(), 10);
    for ((x, y), z) in a.iter().zip(&b).zip(&c) {
        assert!(!x.is_empty());
        assert_eq!(x, y);
        assert_eq!(x, z);
    }
}

#[test]
fn compare_reports_every_method_on_shared_holdouts() {
    let dir = TempDir::new().unwrap();
    let p = dir.path();
    assert_eq!(runlmc(p, &["synth", "--athletes", "300", "--scheme", "reference", "--out", "t.tsv"]).status.code(), Some(0));
    let out = runlmc(p, &["compare", "--input", "t.tsv", "--methods", "mean,lmc2", "--holdouts", "100", "--boot", "50"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<Vec<&str>> = text.lines().map(|l| l.split('\t').collect()).collect();
    assert_eq!(rows.len(), 3);
    assert_eq!(rows[1][0], "mean");
    assert_eq!(rows[2][0], "lmc2");
    let rmse = |r: &[&str]| r[4].parse::<f64>().unwrap();
    assert!(rmse(&rows[2]) < rmse(&rows[1]));
}

#[test]
fn ingest_collates_cleaned_exports() {
    let dir = TempDir::new().unwrap();
    let p = dir.path();
    fs::write(p.join("ath.csv"), "athlete_id,gender,birth_date\n1,M,1980-01-01\n2,F,1985-06-01\n").unwrap();
    fs::write(
        p.join("ev.csv"),
        "athlete_id,event,date,performance\n1,10000m,2012-05-01,29:41.5\n1,5000m,2012-03-01,14:05\n\
         1,10000m,2012-07-01,30:10\n2,HalfMarathon,2012-09-01,1:15:00\n",
    )
    .unwrap();
    let out = runlmc(p, &["ingest", "--athletes", "ath.csv", "--events", "ev.csv", "--out", "t.tsv"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(p.join("t.tsv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], HEADER.trim_end());
    assert_eq!(lines[1], "1\t\t\t\t\t\t\t845.0\t1781.5\t\t");
    assert_eq!(lines[2], "2\t\t\t\t\t\t\t\t\t4500.0\t");
    let side: Value = serde_json::from_str(&fs::read_to_string(p.join("t.json")).unwrap()).unwrap();
    assert_eq!(side["seed"], 0);
    assert!(side.get("cleaning").is_some());
}
