use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use colonygraph::campaign::Manifest;

const SMALL: &str = r#"
runtimes = [1000]
site_distances = [100.0]
agents = [5]
sites = [2]
quality_vectors = 1
pool_size = 2
repetitions = 3
seed = 11
"#;

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_colonygraph")).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = cli(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn simulate(dir: &Path, config: &str, name: &str) -> std::path::PathBuf {
    let cfg = dir.join(format!("{name}.toml"));
    fs::write(&cfg, config).unwrap();
    let out = dir.join(name);
    ok(&["simulate", "--config", p(&cfg), "--workers", "2", "--out", p(&out)]);
    out
}

fn files_under(dir: &Path, suffix: &str) -> usize {
    let mut n = 0;
    for e in fs::read_dir(dir).unwrap() {
        let path = e.unwrap().path();
        if path.is_dir() {
            n += files_under(&path, suffix);
        } else if path.to_string_lossy().ends_with(suffix) {
            n += 1;
        }
    }
    n
}

#[test]
fn rebuilt_graph_is_byte_identical_and_runs_repeat() {
    let tmp = tempfile::tempdir().unwrap();
    let a = simulate(tmp.path(), SMALL, "a");
    let b = simulate(tmp.path(), SMALL, "b");
    assert_eq!(fs::read(a.join("metrics.csv")).unwrap(), fs::read(b.join("metrics.csv")).unwrap());
    assert_eq!(fs::read(a.join("graph.json")).unwrap(), fs::read(b.join("graph.json")).unwrap());

    let g = tmp.path().join("graph");
    ok(&["graph", "--input", p(&a), "--out", p(&g)]);
    assert_eq!(fs::read(a.join("graph.json")).unwrap(), fs::read(g.join("graph.json")).unwrap());
    assert!(g.join("graph_lwcc.json").exists());

    let m = Manifest::load(&a).unwrap();
    assert!(m.complete);
    assert!(m.verify(&a).unwrap().is_empty());
    fs::write(a.join("metrics.csv"), "tampered").unwrap();
    assert_eq!(m.verify(&a).unwrap(), vec!["metrics.csv".to_string()]);
}

#[test]
fn full_pipeline_writes_every_table() {
    let tmp = tempfile::tempdir().unwrap();
    let run = simulate(tmp.path(), SMALL, "run");
    let model = tmp.path().join("model");
    let emb = tmp.path().join("emb");
    let ana = tmp.path().join("ana");
    let exp = tmp.path().join("exp");
    let summary = ok(&["train", "--input", p(&run), "--out", p(&model), "--epochs", "5"]);
    let v: serde_json::Value = serde_json::from_str(&summary).unwrap();
    // two starting states, three repetitions each
    assert_eq!(v["samples"], 6);
    ok(&["embed", "--graph", p(&run.join("graph.json")), "--model", p(&model.join("model.json")), "--out", p(&emb)]);
    ok(&["analyze", "--input", p(&run), "--out", p(&ana)]);
    ok(&[
        "export",
        "--input",
        p(&run),
        "--analysis",
        p(&ana),
        "--embeddings",
        p(&emb.join("embeddings.csv")),
        "--out",
        p(&exp),
    ]);
    for f in [
        "success_vs_quality_difference.csv",
        "time_vs_quality_difference.csv",
        "clusters_2d.csv",
        "embedding_3d.csv",
    ] {
        assert!(exp.join(f).exists(), "{f}");
    }
    for f in ["loss_history.csv", "holdout.json", "manifest.json"] {
        assert!(model.join(f).exists(), "{f}");
    }
}

#[test]
fn one_cell_writes_one_log_per_repetition() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = SMALL.replace("pool_size = 2", "pool_size = 1").replace("repetitions = 3", "repetitions = 10");
    let run = simulate(tmp.path(), &cfg, "run");
    assert_eq!(files_under(&run.join("cells"), ".jsonl"), 10);
    assert_eq!(files_under(&run.join("cells"), ".meta.json"), 10);
}

#[test]
fn training_without_subgraphs_fails() {
    let tmp = tempfile::tempdir().unwrap();
    let run = simulate(tmp.path(), SMALL, "run");
    for cell in fs::read_dir(run.join("cells")).unwrap() {
        fs::remove_dir_all(cell.unwrap().path().join("subgraphs")).unwrap();
    }
    let out = cli(&["train", "--input", p(&run), "--out", p(&tmp.path().join("m"))]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("no subgraph samples"));
}

#[test]
fn short_pool_runtime_is_reported() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("c.toml");
    fs::write(&cfg, SMALL.replace("pool_size = 2", "pool_size = 10\npool_ticks = 1")).unwrap();
    let out = cli(&["simulate", "--config", p(&cfg), "--out", p(&tmp.path().join("r"))]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("longer pool runtime"));
    let m = Manifest::load(&tmp.path().join("r")).unwrap();
    assert!(!m.complete);
}

#[test]
fn experiment1_analysis_flags_reliable_states() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("e.toml");
    fs::write(&cfg, "trials = 40\nseed = 3\n").unwrap();
    let run = tmp.path().join("run");
    ok(&["simulate", "--preset", "experiment1", "--config", p(&cfg), "--out", p(&run)]);
    let ana = tmp.path().join("ana");
    ok(&["analyze", "--input", p(&run), "--out", p(&ana)]);
    let mut rdr = csv::Reader::from_path(ana.join("success_probability.csv")).unwrap();
    let header = rdr.headers().unwrap().clone();
    let col = |name: &str| header.iter().position(|h| h == name).unwrap();
    let (pc, rc) = (col("probability"), col("reliable"));
    let mut reliable = 0;
    for r in rdr.records() {
        let r = r.unwrap();
        let prob: f64 = r[pc].parse().unwrap();
        assert!((0.0..=1.0).contains(&prob));
        reliable += (&r[rc] == "true") as usize;
    }
    assert!(reliable > 0);
}

#[test]
fn bad_input_exits_nonzero() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("bad.toml");
    fs::write(&cfg, "runtimes = [1234]\n").unwrap();
    let out = cli(&["simulate", "--config", p(&cfg), "--out", p(&tmp.path().join("r"))]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("1234"));
    fs::write(&cfg, "no_such_key = 1\n").unwrap();
    assert!(!cli(&["simulate", "--config", p(&cfg), "--out", p(&tmp.path().join("r"))]).status.success());
    assert!(!cli(&["simulate", "--frobnicate", "--out", "x"]).status.success());
}
