use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_balreg"));
    cmd.arg("--quiet");
    cmd
}

fn bundled(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../instances").join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn first_example_by_enumeration() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.json");
    let inst = bundled("example1.json");
    let o = run(&["solve", "--instance", p(&inst), "--method", "enumeration", "--out", p(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r = read_json(&out);
    assert_eq!(r["value"], 1);
    assert_eq!(r["instance"], "example1");
    assert_eq!(r["method"], "enumeration");
    assert!(r["version"].is_string());
    assert!(r.get("wall_time_secs").is_none());
}

#[test]
fn second_example_by_compact_model() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.json");
    let lp = dir.path().join("m.lp");
    let inst = bundled("example2.json");
    let o = run(&[
        "solve", "--instance", p(&inst), "--method", "compact", "--timing", "--dump-lp", p(&lp), "--out",
        p(&out),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let r = read_json(&out);
    assert_eq!(r["value"], 1);
    assert_eq!(r["x"], serde_json::json!([2, 3, 4]));
    assert!(r["wall_time_secs"].is_number());
    let text = fs::read_to_string(&lp).unwrap();
    assert!(text.starts_with("Minimize") && text.contains("Binary") && !text.contains("-0\n"));
}

#[test]
fn every_method_solves_the_first_example() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.json");
    let inst = bundled("example1.json");
    for (method, adversary) in [
        ("auto", "auto"),
        ("iterative", "dp"),
        ("iterative", "milp"),
        ("iterative", "bruteforce"),
        ("compact", "auto"),
        ("bruteforce", "auto"),
    ] {
        let o = run(&[
            "solve", "--instance", p(&inst), "--method", method, "--adversary", adversary, "--out", p(&out),
        ]);
        assert_eq!(o.status.code(), Some(0), "{method}/{adversary}");
        assert_eq!(read_json(&out)["value"], 1, "{method}/{adversary}");
    }
    // the regret algorithm needs a zero balancing budget
    let o = run(&["solve", "--instance", p(&inst), "--method", "regret-poly", "--out", p(&out)]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn identical_runs_give_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for k in 0..2 {
        let inst = dir.path().join(format!("i{k}.json"));
        let rep = dir.path().join(format!("r{k}.json"));
        let o = run(&[
            "generate", "--family", "knapsack", "--n", "8", "--seed", "3", "--gamma", "2", "--gamma-prime",
            "1", "--out", p(&inst),
        ]);
        assert_eq!(o.status.code(), Some(0));
        let o = run(&["solve", "--instance", p(&inst), "--method", "iterative", "--out", p(&rep)]);
        assert_eq!(o.status.code(), Some(0));
        outputs.push((fs::read(&inst).unwrap(), fs::read(&rep).unwrap()));
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn crosscheck_small_selection_batch() {
    let dir = tempfile::tempdir().unwrap();
    for seed in 0..20 {
        let path = dir.path().join(format!("sel{seed:02}.json"));
        let (g, gp) = (seed % 4, (seed / 4) % 3);
        let o = run(&[
            "generate", "--family", "selection", "--n", "8", "--seed", &seed.to_string(), "--gamma",
            &g.to_string(), "--gamma-prime", &gp.to_string(), "--out", p(&path),
        ]);
        assert_eq!(o.status.code(), Some(0));
    }
    let pattern = format!("{}/*.json", dir.path().display());
    let csv = dir.path().join("check.csv");
    let o = run(&["crosscheck", "--instances", &pattern, "--max-n", "12", "--jobs", "2", "--out", p(&csv)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(&csv).unwrap();
    assert!(text.lines().count() > 20 * 5);
}

#[test]
fn evaluate_writes_a_matrix() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("m.csv");
    let values = dir.path().join("v.csv");
    let pattern = bundled("example2.json");
    let o = run(&[
        "evaluate", "--instances", p(&pattern), "--criteria", "wc-g,r-g,br", "--out", p(&out), "--values",
        p(&values),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = fs::read_to_string(&values).unwrap();
    for line in [
        "example2,WC-G,WC-G,12,12",
        "example2,R-G,WC-G,14,12",
        "example2,BR,WC-G,13,12",
        "example2,WC-G,R-G,6,3",
        "example2,BR,BR,1,1",
        "example2,R-G,BR,3,1",
    ] {
        assert!(text.contains(line), "missing {line}");
    }
    assert_eq!(fs::read_to_string(&out).unwrap().lines().count(), 1 + 9);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.json");
    assert_eq!(run(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(run(&["solve", "--out", p(&out)]).status.code(), Some(1));

    let big = dir.path().join("big.json");
    run(&["generate", "--family", "selection", "--n", "40", "--gamma", "2", "--gamma-prime", "1", "--out", p(&big)]);
    let o = run(&["solve", "--instance", p(&big), "--method", "bruteforce", "--out", p(&out)]);
    assert_eq!(o.status.code(), Some(2));

    let o = run(&[
        "solve", "--instance", p(&big), "--method", "iterative", "--time-limit", "0.000000001", "--out",
        p(&out),
    ]);
    assert_eq!(o.status.code(), Some(3));
    let r = read_json(&out);
    assert_eq!(r["status"], "time_limit");
    assert_eq!(r["x"].as_array().unwrap().len(), 20);
}

#[test]
fn reduction_generators() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("red.json");
    let o = run(&["generate", "--family", "equipartition", "--n", "4", "--weights", "1,1,1,1", "--out", p(&out)]);
    assert_eq!(o.status.code(), Some(0));
    let inst = read_json(&out);
    assert_eq!(inst["c_hat"].as_array().unwrap().len(), 16);
    assert_eq!(inst["gamma"], 3);
    let o = run(&["generate", "--family", "equipartition", "--n", "3", "--out", p(&out)]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn ingest_graph_writes_instances() {
    let dir = tempfile::tempdir().unwrap();
    let edges = dir.path().join("edges.csv");
    let pairs = dir.path().join("pairs.csv");
    let times = |b: i64| (1..=10).map(|k| (b * k).to_string()).collect::<Vec<_>>().join(",");
    fs::write(&edges, format!("0,0,1,{}\n1,1,2,{}\n2,0,2,{}\n", times(1), times(2), times(5))).unwrap();
    fs::write(&pairs, "0,2\n2,1\n").unwrap();
    let out = dir.path().join("graphs");
    let o = run(&["ingest-graph", "--edges", p(&edges), "--pairs", p(&pairs), "--out", p(&out)]);
    assert_eq!(o.status.code(), Some(0));
    let written: Vec<_> = fs::read_dir(&out).unwrap().collect();
    assert_eq!(written.len(), 1);
    let rep = dir.path().join("r.json");
    let inst = out.join("graph-0-2.json");
    let o = run(&["solve", "--instance", p(&inst), "--method", "bruteforce", "--out", p(&rep)]);
    assert_eq!(o.status.code(), Some(0));
}
