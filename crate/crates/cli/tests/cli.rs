//! End-to-end tests driving the `zw` binary.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn zw() -> Command {
    Command::new(env!("CARGO_BIN_EXE_zw"))
}

fn run(args: &[&str]) -> Output {
    zw().args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

struct Fixture {
    _dir: tempfile::TempDir,
    root: PathBuf,
}

impl Fixture {
    fn new() -> Self {
        let dir = tempfile::tempdir().unwrap();
        let root = dir.path().to_path_buf();
        fs::write(
            root.join("emb.txt"),
            "hot 1.0 0.2 -0.3\ncold -1.0 0.5 0.4\nwarm 0.3 -1.0 0.9\nmild 0.4 0.9 -1.1\n",
        )
        .unwrap();
        fs::write(root.join("freq.txt"), "hot 6\ncold 3\nwarm 1\nextra 9\n").unwrap();
        fs::write(
            root.join("sts.tsv"),
            "hot hot\thot\t5.0\nhot\tcold\t0.0\nwarm hot\twarm\t4.0\n",
        )
        .unwrap();
        Self { _dir: dir, root }
    }

    fn path(&self, name: &str) -> String {
        self.root.join(name).to_string_lossy().into_owned()
    }
}

fn read(path: impl AsRef<Path>) -> String {
    fs::read_to_string(path).unwrap()
}

#[test]
fn transform_whiten_then_symmetry_is_one_one() {
    let fx = Fixture::new();
    let out = run(&[
        "transform",
        "--method",
        "whiten",
        "--prior",
        "zipfian",
        "--emb",
        &fx.path("emb.txt"),
        "--freq",
        &fx.path("freq.txt"),
        "--out",
        &fx.path("w.txt"),
        "--model-out",
        &fx.path("model.json"),
    ]);
    assert!(out.status.success(), "stderr: {}", stderr(&out));

    let sym = run(&[
        "symmetry",
        "--emb",
        &fx.path("w.txt"),
        "--prior",
        "zipfian",
        "--freq",
        &fx.path("freq.txt"),
    ]);
    assert!(sym.status.success(), "stderr: {}", stderr(&sym));
    let report: serde_json::Value = serde_json::from_str(stdout(&sym).trim()).unwrap();
    let sym1 = report["sym1"].as_f64().unwrap();
    let sym2 = report["sym2"].as_f64().unwrap();
    assert!((sym1 - 1.0).abs() <= 1e-9, "sym1 = {sym1}");
    assert!((sym2 - 1.0).abs() <= 1e-9, "sym2 = {sym2}");

    let model: serde_json::Value =
        serde_json::from_str(&read(fx.root.join("model.json"))).unwrap();
    assert_eq!(model["prior_kind"], "zipfian");
    assert_eq!(model["dim"], 3);
}

#[test]
fn transform_rerun_overwrites_identically() {
    let fx = Fixture::new();
    let args = [
        "transform",
        "--method",
        "center",
        "--prior",
        "zipfian",
        "--emb",
        &fx.path("emb.txt"),
        "--freq",
        &fx.path("freq.txt"),
        "--out",
        &fx.path("c.txt"),
    ];
    assert!(run(&args).status.success());
    let first = read(fx.root.join("c.txt"));
    assert!(run(&args).status.success());
    assert_eq!(first, read(fx.root.join("c.txt")));
}

#[test]
fn missing_freq_with_zipfian_prior_is_usage_error() {
    let fx = Fixture::new();
    let out = run(&[
        "transform",
        "--method",
        "whiten",
        "--prior",
        "zipfian",
        "--emb",
        &fx.path("emb.txt"),
        "--out",
        &fx.path("w.txt"),
    ]);
    assert_eq!(out.status.code(), Some(2), "stderr: {}", stderr(&out));
}

#[test]
fn abtt_uses_default_d3_and_needs_enough_dimensions() {
    let fx = Fixture::new();
    // d = 3 and default D = 3 must be rejected as D >= d
    let out = run(&[
        "transform",
        "--method",
        "abtt",
        "--emb",
        &fx.path("emb.txt"),
        "--out",
        &fx.path("a.txt"),
    ]);
    assert_eq!(out.status.code(), Some(1), "stderr: {}", stderr(&out));
    assert!(stderr(&out).contains("1..3"));

    let help = run(&["transform", "--help"]);
    assert!(stdout(&help).contains("[default: 3]"), "abtt default documented");
    assert!(stdout(&help).contains("[default: 0.001]"), "sif default documented");

    let ok = run(&[
        "transform",
        "--method",
        "abtt",
        "--abtt-d",
        "1",
        "--emb",
        &fx.path("emb.txt"),
        "--out",
        &fx.path("a.txt"),
    ]);
    assert!(ok.status.success(), "stderr: {}", stderr(&ok));
}

#[test]
fn eval_sts_perfect_fixture_scores_100() {
    let fx = Fixture::new();
    let out = run(&[
        "eval-sts",
        "--emb",
        &fx.path("emb.txt"),
        "--sts",
        &fx.path("sts.tsv"),
        "--compose",
        "mean",
    ]);
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    let line = stdout(&out);
    let fields: Vec<&str> = line.trim().split('\t').collect();
    assert_eq!(fields, vec!["sts", "mean", "uniform", "100.00", "0"]);
}

#[test]
fn eval_sts_testset_frequency_mode_runs() {
    let fx = Fixture::new();
    let out = run(&[
        "eval-sts",
        "--emb",
        &fx.path("emb.txt"),
        "--sts",
        &fx.path("sts.tsv"),
        "--compose",
        "sif",
        "--prior",
        "zipfian",
        "--freq-source",
        "testset",
    ]);
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    assert!(stdout(&out).contains("\tsif\tzipfian\t"));
}

#[test]
fn eval_sts_empty_dataset_fails() {
    let fx = Fixture::new();
    fs::write(fx.root.join("empty.tsv"), "").unwrap();
    let out = run(&[
        "eval-sts",
        "--emb",
        &fx.path("emb.txt"),
        "--sts",
        &fx.path("empty.tsv"),
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn symmetry_rejects_one_dimensional_embeddings() {
    let fx = Fixture::new();
    fs::write(fx.root.join("one.txt"), "a 1.0\nb 2.0\n").unwrap();
    let out = run(&["symmetry", "--emb", &fx.path("one.txt")]);
    assert_eq!(out.status.code(), Some(1), "stderr: {}", stderr(&out));
}

#[test]
fn analyze_partition_is_byte_identical_for_fixed_seed() {
    let fx = Fixture::new();
    let args = [
        "analyze-partition",
        "--emb",
        &fx.path("emb.txt"),
        "--num-contexts",
        "32",
        "--seed",
        "42",
    ];
    let a = run(&args);
    let b = run(&args);
    assert!(a.status.success());
    assert_eq!(stdout(&a), stdout(&b));
    let other = run(&[
        "analyze-partition",
        "--emb",
        &fx.path("emb.txt"),
        "--num-contexts",
        "32",
        "--seed",
        "43",
    ]);
    assert_ne!(stdout(&a), stdout(&other));
}

#[test]
fn analyze_norms_writes_csv_and_rejects_oversized_top_k() {
    let fx = Fixture::new();
    let out = run(&[
        "analyze-norms",
        "--emb",
        &fx.path("emb.txt"),
        "--prior",
        "zipfian",
        "--freq",
        &fx.path("freq.txt"),
        "--top-k",
        "3",
        "--out",
        &fx.path("norms.csv"),
    ]);
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    let csv = read(fx.root.join("norms.csv"));
    assert!(csv.starts_with("word,p,neg_log_p,norm\n"));
    assert_eq!(csv.lines().count(), 4);
    // most frequent word first
    assert!(csv.lines().nth(1).unwrap().starts_with("hot,0.6,"));
    let summary: serde_json::Value = serde_json::from_str(stdout(&out).trim()).unwrap();
    assert!(summary["pearson_r"].is_number());

    let bad = run(&[
        "analyze-norms",
        "--emb",
        &fx.path("emb.txt"),
        "--prior",
        "zipfian",
        "--freq",
        &fx.path("freq.txt"),
        "--top-k",
        "100",
    ]);
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn token_whiten_reads_and_writes_tsv() {
    let fx = Fixture::new();
    fs::write(
        fx.root.join("tokens.tsv"),
        "a\t1.0 0.0\na\t1.0 0.0\nb\t0.0 2.0\nc\t-1.0 -1.0\n",
    )
    .unwrap();
    let out = run(&[
        "token-whiten",
        "--tokens",
        &fx.path("tokens.tsv"),
        "--mode",
        "pseudo-uniform",
        "--stage",
        "center",
    ]);
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    let text = stdout(&out);
    assert_eq!(text.lines().count(), 4);
    // pseudo-uniform mean is (v_a + v_b + v_c) / 3 = (0, 1/3); first token
    // becomes (1, -1/3)
    let first: Vec<&str> = text.lines().next().unwrap().split('\t').collect();
    assert_eq!(first[0], "a");
    let x: f64 = first[1].parse().unwrap();
    let y: f64 = first[2].parse().unwrap();
    assert!((x - 1.0).abs() < 1e-9);
    assert!((y + 1.0 / 3.0).abs() < 1e-9);

    let whiten = run(&[
        "token-whiten",
        "--tokens",
        &fx.path("tokens.tsv"),
        "--mode",
        "token-uniform",
        "--stage",
        "whiten",
        "--out",
        &fx.path("tw.tsv"),
    ]);
    assert!(whiten.status.success(), "stderr: {}", stderr(&whiten));
    assert_eq!(read(fx.root.join("tw.tsv")).lines().count(), 4);
}

#[test]
fn threads_flag_does_not_change_output() {
    let fx = Fixture::new();
    let mut outputs = Vec::new();
    for threads in ["1", "4"] {
        let out = run(&[
            "--threads",
            threads,
            "eval-sts",
            "--emb",
            &fx.path("emb.txt"),
            "--sts",
            &fx.path("sts.tsv"),
        ]);
        assert!(out.status.success());
        outputs.push(stdout(&out));
    }
    assert_eq!(outputs[0], outputs[1]);
}
