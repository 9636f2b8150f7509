use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use baseselect::io::RunReport;
use serde_json::Value;

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_baseselect")).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = bin(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn simgen(dir: &Path, extra: &[&str]) {
    let mut args = vec!["simgen", "--out", p(dir), "--seed", "7"];
    args.extend_from_slice(extra);
    ok(&args);
}

#[test]
fn simgen_select_oracle_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    simgen(d, &["--clusters", "2", "--classes-per-cluster", "5", "--novel-classes", "3"]);
    let emb = d.join("embeddings.csv");
    let novel = format!("@{}", p(&d.join("novel.txt")));
    let cands = format!("@{}", p(&d.join("candidates.txt")));
    let (sel, orc) = (d.join("sel"), d.join("orc"));
    let common = ["--embeddings", p(&emb), "--novel", &novel, "--candidates", &cands, "--m", "3", "--k", "2"];

    let mut args = vec!["select", "--algorithm", "greedy-target", "--out", p(&sel)];
    args.extend_from_slice(&common);
    ok(&args);
    let mut args = vec!["oracle", "--out", p(&orc)];
    args.extend_from_slice(&common);
    ok(&args);

    let s = RunReport::read(sel.join("report.json")).unwrap();
    let o = RunReport::read(orc.join("report.json")).unwrap();
    assert!(s.result.objective <= o.result.objective + 1e-12);
    assert!((s.recompute_objective().unwrap() - s.result.objective).abs() <= 1e-12);
    assert_eq!(fs::read_to_string(sel.join("chosen.csv")).unwrap().lines().count(), 4);
}

#[test]
fn auto_picks_random_greedy_for_small_budgets() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    simgen(d, &["--clusters", "4", "--classes-per-cluster", "100", "--novel-classes", "5"]);
    let emb = d.join("embeddings.csv");
    let novel = format!("@{}", p(&d.join("novel.txt")));
    let out = ok(&["select", "--embeddings", p(&emb), "--novel", &novel, "--m", "20", "--lambda", "0.2"]);
    let report: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(report["result"]["algorithm"], "random-greedy");
    assert_eq!(report["problem"]["candidates"].as_array().unwrap().len(), 400);
}

#[test]
fn identical_config_gives_identical_chosen_csv() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    simgen(d, &["--clusters", "3", "--classes-per-cluster", "8", "--novel-classes", "4"]);
    let emb = d.join("embeddings.csv");
    let novel = format!("@{}", p(&d.join("novel.txt")));
    let mut csvs = Vec::new();
    for run in ["a", "b"] {
        let out = d.join(run);
        ok(&[
            "select",
            "--embeddings",
            p(&emb),
            "--novel",
            &novel,
            "--m",
            "5",
            "--lambda",
            "0.2",
            "--algorithm",
            "random-greedy",
            "--seed",
            "9",
            "--out",
            p(&out),
        ]);
        csvs.push(fs::read(out.join("chosen.csv")).unwrap());
    }
    assert_eq!(csvs[0], csvs[1]);
}

#[test]
fn regress_on_noiseless_csv() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("acc.csv");
    let mut text = String::from("acc,x1,x2\n");
    for i in 0..12 {
        let (x1, x2) = (0.1 * i as f64, ((i * 5) % 7) as f64 * 0.05);
        text.push_str(&format!("{},{x1},{x2}\n", 0.4 * x1 + 0.2 * x2 + 0.3));
    }
    fs::write(&input, text).unwrap();
    let fit: Value = serde_json::from_str(&ok(&["regress", "--input", p(&input)])).unwrap();
    assert!((fit["r_squared"].as_f64().unwrap() - 1.0).abs() <= 1e-10);
}

#[test]
fn matrix_input_verify_certify_and_bench() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let matrix = d.join("m.csv");
    fs::write(&matrix, "base,n0,n1\na,0.9,0.1\nb,0.2,0.8\nc,0.5,0.5\nd,0.4,0.3\ne,0.1,0.2\n").unwrap();
    let out = ok(&["verify", "--matrix", p(&matrix), "--m", "2", "--k", "1", "--lambda", "0.2", "--trials", "200"]);
    assert!(out.starts_with("submodularity violations: 0"), "{out}");
    ok(&["certify", "--matrix", p(&matrix), "--m", "2", "--algorithm", "greedy-target", "--out", p(&d.join("cert"))]);
    let report = RunReport::read(d.join("cert/report.json")).unwrap();
    assert!(report.certificate.unwrap().satisfied);
    ok(&["bench", "--matrix", p(&matrix), "--m", "1,2,3", "--algorithms", "greedy-target,random", "--out", p(d)]);
    let bench = fs::read_to_string(d.join("bench.csv")).unwrap();
    assert_eq!(bench.lines().count(), 7);
    assert!(bench.starts_with("m,k,lambda,algorithm,objective,elapsed_secs\n"));
}

#[test]
fn exit_codes() {
    let out = bin(&["nope"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());
    assert_eq!(bin(&["select", "--matrix", "/nonexistent.csv", "--m", "1"]).status.code(), Some(1));
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("e.csv");
    fs::write(&bad, "id,v1\na,1\na,2\n").unwrap();
    let out = bin(&["select", "--embeddings", p(&bad), "--novel", "a", "--m", "1"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("duplicate class id `a`"));
}
