use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_attrilens"));
    c.env_remove("ATTRILENS_DATA_DIR");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn core_data(rel: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../core/data")
        .join(rel)
        .display()
        .to_string()
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("attrilens-cli-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn descriptors_print_rows_and_reject_unknown_ids() {
    let o = run(&["descriptors", "O", "--ids", "MolWt,NumHDonors"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("MolWt,18.015"), "{text}");
    assert!(text.contains("NumHDonors,1"), "{text}");
    let o = run(&["descriptors", "c1ccccc1", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_str(stdout(&o).trim()).unwrap();
    assert_eq!(v["descriptors"]["TPSA"], 0.0);
    assert_eq!(v["descriptors"].as_object().unwrap().len(), 14);
    assert_eq!(
        run(&["descriptors", "O", "--ids", "Foo"]).status.code(),
        Some(2)
    );
    assert_eq!(run(&["descriptors", "C1CC"]).status.code(), Some(2));
}

#[test]
fn score_reports_breakdowns_and_summary() {
    let corpus = core_data("fixtures/case_studies.jsonl");
    let o = run(&["score", "--corpus", &corpus, "--format", "json"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let lines: Vec<serde_json::Value> = stdout(&o)
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(lines.len(), 13);
    let ours = lines.iter().find(|v| v["id"] == "bbbp-ours").unwrap();
    assert_eq!(ours["total"], 4.0);
    let summary = &lines[12]["summary"];
    assert_eq!(summary["n"], 12);
    let mean_total: f64 = lines[..12]
        .iter()
        .map(|v| v["total"].as_f64().unwrap())
        .sum::<f64>()
        / 12.0;
    assert!((summary["total"].as_f64().unwrap() - mean_total).abs() < 1e-12);
}

#[test]
fn score_errors_map_to_exit_codes() {
    let dir = scratch("score");
    let empty = dir.join("empty.jsonl");
    std::fs::write(&empty, "").unwrap();
    let o = run(&["score", "--corpus", empty.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("EmptyDataset"));

    let good = std::fs::read_to_string(core_data("fixtures/case_studies.jsonl")).unwrap();
    let first = good.lines().next().unwrap();
    let broken = dir.join("broken.jsonl");
    std::fs::write(&broken, format!("{first}\n{{not json\n")).unwrap();
    let o = run(&["score", "--corpus", broken.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 2"), "{}", stderr(&o));

    let table = dir.join("other.tsv");
    std::fs::write(&table, "ESOL\tMolWt\t[0, 500]\n").unwrap();
    let o = run(&[
        "score",
        "--corpus",
        &core_data("fixtures/case_studies.jsonl"),
        "--table",
        table.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("TableMissing"));
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn split_writes_three_files_and_a_manifest() {
    let a = scratch("split-a");
    let b = scratch("split-b");
    for out in [&a, &b] {
        let o = run(&[
            "split",
            "--dataset",
            "bace",
            "--out",
            out.to_str().unwrap(),
            "--format",
            "json",
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
        let v: serde_json::Value = serde_json::from_str(stdout(&o).trim()).unwrap();
        let total = v["train"].as_u64().unwrap()
            + v["valid"].as_u64().unwrap()
            + v["test"].as_u64().unwrap();
        assert_eq!(total, 1513);
    }
    for f in ["train.csv", "valid.csv", "test.csv"] {
        assert_eq!(
            std::fs::read(a.join(f)).unwrap(),
            std::fs::read(b.join(f)).unwrap()
        );
    }
    let lines = std::fs::read_to_string(a.join("train.csv"))
        .unwrap()
        .lines()
        .count();
    assert!(lines > 1100);
    let m: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(a.join("run_manifest.json")).unwrap())
            .unwrap();
    assert_eq!(m["command"], "split");
    assert_eq!(m["outputs"].as_array().unwrap().len(), 3);
    for d in [a, b] {
        std::fs::remove_dir_all(d).unwrap();
    }
}

#[test]
fn train_sim_is_reproducible() {
    let dir = scratch("sim");
    let cfg = dir.join("sim.toml");
    std::fs::write(&cfg, "steps = 120\nalgorithm = \"dapo\"\nseed = 3\n").unwrap();
    let mut curves = Vec::new();
    for k in 0..2 {
        let out = dir.join(format!("run{k}"));
        let o = run(&[
            "train-sim",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
        curves.push(std::fs::read(out.join("curves.csv")).unwrap());
        assert!(out.join("run_manifest.json").is_file());
    }
    assert_eq!(curves[0], curves[1]);
    assert_eq!(String::from_utf8_lossy(&curves[0]).lines().count(), 121);
    std::fs::write(&cfg, "learning_rate = -1.0\n").unwrap();
    let o = run(&[
        "train-sim",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.join("bad").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(3));
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn default_train_sim_writes_1001_rows() {
    let dir = scratch("sim-default");
    let o = run(&["train-sim", "--out", dir.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(dir.join("curves.csv")).unwrap();
    assert_eq!(text.lines().count(), 1001);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn dtree_reports_auc_json() {
    let dir = scratch("dtree");
    let o = run(&[
        "dtree",
        "--dataset",
        "bbbp",
        "--trees",
        "20",
        "--null-repeats",
        "2",
        "--out",
        dir.to_str().unwrap(),
        "--format",
        "json",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(stdout(&o).trim()).unwrap();
    assert!(v["auc"].as_f64().unwrap() > 0.5);
    assert_eq!(v["features"].as_array().unwrap().len(), 10);
    let model = std::fs::read_to_string(dir.join("model.txt")).unwrap();
    assert!(model.starts_with("attrilens-forest v1"));
    assert!(dir.join("metrics.json").is_file() && dir.join("run_manifest.json").is_file());
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn data_dir_override_is_honoured() {
    let dir = scratch("datadir");
    std::fs::create_dir_all(dir.join("ranges")).unwrap();
    std::fs::write(
        dir.join("ranges/custom.tsv"),
        "BBBP\tTPSA\t[0, 90)\nBACE\tMolWt\t[0, 500]\nClinTox\tMolWt\t[0, 500]\n",
    )
    .unwrap();
    let o = bin()
        .env("ATTRILENS_DATA_DIR", &dir)
        .args([
            "score",
            "--corpus",
            &core_data("fixtures/case_studies.jsonl"),
            "--table",
            "custom",
        ])
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    let o = bin()
        .env("ATTRILENS_DATA_DIR", &dir)
        .args([
            "split",
            "--dataset",
            "bace",
            "--out",
            dir.join("out").to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
    std::fs::remove_dir_all(&dir).unwrap();
}
