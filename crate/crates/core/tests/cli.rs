mod common;

use std::io::{BufRead, BufReader};
use std::path::Path;
use std::process::{Child, Command, Output, Stdio};

use tempfile::TempDir;

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_opinionforge"));
    cmd.env_remove("OPINIONFORGE_BACKEND_URL");
    cmd
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn reviews() -> String {
    common::fixture("reviews.jsonl").display().to_string()
}

fn manifest(dir: &Path) -> serde_json::Value {
    serde_json::from_slice(&std::fs::read(dir.join("manifest.json")).unwrap()).unwrap()
}

#[test]
fn summarize_then_eval() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("run");
    let o = out.to_str().unwrap();
    let r = run(&["summarize", "--input", &reviews(), "--backend", "mock", "--seed", "7", "-o", o]);
    assert_eq!(code(&r), 0, "{}", String::from_utf8_lossy(&r.stderr));
    for f in ["summaries.json", "report.json", "report.csv", "report.md", "opinions.jsonl", "manifest.json"] {
        assert!(out.join(f).is_file(), "{f}");
    }

    let summaries = out.join("summaries.json");
    let eval_dir = tmp.path().join("eval");
    let r = run(&[
        "eval",
        "--summaries",
        summaries.to_str().unwrap(),
        "--input",
        &reviews(),
        "--backend",
        "mock",
        "-o",
        eval_dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&r), 0, "{}", String::from_utf8_lossy(&r.stderr));
    let stdout = String::from_utf8(r.stdout).unwrap();
    assert!(stdout.contains("| aggregate |"));
    assert!(stdout.contains("| rating3 |"));
}

#[test]
fn usage_errors_exit_2() {
    let tmp = TempDir::new().unwrap();
    let o = tmp.path().to_str().unwrap();
    assert_eq!(code(&run(&["summarize", "-o", o])), 2, "missing --input");
    assert_eq!(code(&run(&["summarize", "--input", &reviews(), "--bogus"])), 2);
    assert_eq!(code(&run(&["summarize", "--input", &reviews(), "--mode", "nope", "-o", o])), 2);
    assert_eq!(code(&run(&["summarize", "--input", &reviews(), "--backend", "http", "-o", o])), 2);
    assert_eq!(code(&run(&["frobnicate"])), 2);
    assert_eq!(code(&run(&[])), 2);
    assert_eq!(code(&run(&["eval", "--input", &reviews()])), 2, "missing --summaries");
    assert_eq!(code(&run(&["--help"])), 0);
}

#[test]
fn pipeline_errors_exit_1() {
    let tmp = TempDir::new().unwrap();
    let r = run(&["summarize", "--input", "/nonexistent.jsonl", "-o", tmp.path().to_str().unwrap()]);
    assert_eq!(code(&r), 1);
    assert!(String::from_utf8_lossy(&r.stderr).contains("ingest"));
    assert_eq!(manifest(tmp.path())["failed_stage"], "ingest");
}

#[test]
fn config_file_env_and_flags_layer() {
    let tmp = TempDir::new().unwrap();
    let cfg = tmp.path().join("run.conf");
    std::fs::write(
        &cfg,
        format!(
            "# layered\ninput = {}\nmode = groupwise\nseed = 3\nbase_url = http://from-file\n",
            reviews()
        ),
    )
    .unwrap();
    let out = tmp.path().join("out");
    let r = bin()
        .args(["summarize", "--config", cfg.to_str().unwrap(), "--seed", "4", "-o", out.to_str().unwrap()])
        .env("OPINIONFORGE_BACKEND_URL", "http://from-env")
        .output()
        .unwrap();
    assert_eq!(code(&r), 0, "{}", String::from_utf8_lossy(&r.stderr));
    let m = manifest(&out);
    assert_eq!(m["config"]["summarizer_mode"], "groupwise");
    assert_eq!(m["config"]["seed"], 4);
    assert_eq!(m["config"]["backend"]["base_url"], "http://from-env");

    let r = bin()
        .args(["ingest", "--config", cfg.to_str().unwrap(), "--base-url", "http://from-flag"])
        .args(["-o", out.to_str().unwrap()])
        .env("OPINIONFORGE_BACKEND_URL", "http://from-env")
        .output()
        .unwrap();
    assert_eq!(code(&r), 0);
    assert_eq!(manifest(&out)["config"]["backend"]["base_url"], "http://from-flag");

    std::fs::write(&cfg, "colour = blue\n").unwrap();
    assert_eq!(code(&run(&["summarize", "--config", cfg.to_str().unwrap()])), 2);
}

#[test]
fn ingest_and_extract_commands() {
    let tmp = TempDir::new().unwrap();
    let o = tmp.path().to_str().unwrap();
    let messy = common::fixture("messy.jsonl").display().to_string();
    let r = run(&["ingest", "--input", &messy, "-o", o]);
    assert_eq!(code(&r), 0);
    assert!(tmp.path().join("corpus.jsonl").is_file());
    assert_eq!(manifest(tmp.path())["corpus"]["kept"], 7);

    let r = run(&["extract", "--input", &messy, "--decoder", "joint", "--strict-spans", "-o", o]);
    assert_eq!(code(&r), 0, "{}", String::from_utf8_lossy(&r.stderr));
    assert!(tmp.path().join("opinions.jsonl").is_file());
}

struct Server(Child);

impl Drop for Server {
    fn drop(&mut self) {
        let _ = self.0.kill();
        let _ = self.0.wait();
    }
}

#[test]
fn mock_serve_backs_an_http_run() {
    let mut child = bin()
        .args(["mock-serve", "--addr", "127.0.0.1:0", "--seed", "7"])
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    let mut line = String::new();
    BufReader::new(child.stdout.take().unwrap()).read_line(&mut line).unwrap();
    let _server = Server(child);
    let url = line.trim().rsplit(' ').next().unwrap().to_string();
    assert!(url.starts_with("http://127.0.0.1:"), "{line}");

    let tmp = TempDir::new().unwrap();
    let (http_dir, mock_dir) = (tmp.path().join("http"), tmp.path().join("mock"));
    let r = bin()
        .args(["summarize", "--input", &reviews(), "--backend", "http", "--seed", "7"])
        .args(["--opinion-extraction", "off", "-o", http_dir.to_str().unwrap()])
        .env("OPINIONFORGE_BACKEND_URL", &url)
        .output()
        .unwrap();
    assert_eq!(code(&r), 0, "{}", String::from_utf8_lossy(&r.stderr));
    let r = run(&[
        "summarize",
        "--input",
        &reviews(),
        "--seed",
        "7",
        "--opinion-extraction",
        "off",
        "--cluster-threshold",
        "1.5",
        "-o",
        mock_dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&r), 0);
    // http runs default to the 1.5 threshold, so pinning it makes the runs comparable
    let read = |d: &Path| std::fs::read_to_string(d.join("summaries.json")).unwrap();
    assert_eq!(read(&http_dir), read(&mock_dir));
}
