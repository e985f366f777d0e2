mod common;

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use kpa_core::corpus;
use kpa_core::graph::ArgumentGraph;
use kpa_core::partition::PartitionFile;
use kpa_core::scorer::PredictionFile;

fn kpa(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_kpa"));
    cmd.args(args).env_remove("KPA_SEED");
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().expect("run kpa")
}

fn ok(out: Output) -> String {
    assert!(
        out.status.success(),
        "kpa failed:\n{}\n{}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn small_corpus(dir: &Path) -> String {
    let shape = common::Shape {
        topics: 1,
        kps_per_group: 3,
        args_per_kp: 4,
        double_every: 4,
    };
    let data = dir.join("data");
    common::write_corpus(&common::synthetic(&shape, 3), &data);
    data.display().to_string()
}

fn tree(dir: &Path) -> Vec<(String, String)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(dir).unwrap().display().to_string();
                out.push((rel, fs::read_to_string(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

#[test]
fn pipeline_writes_every_artifact_and_they_reload() {
    let dir = tempfile::tempdir().unwrap();
    let data = small_corpus(dir.path());
    let out = dir.path().join("out");
    let stdout = ok(kpa(
        &[
            "pipeline",
            "--data",
            &data,
            "--out",
            out.to_str().unwrap(),
            "--sim",
            "exact",
        ],
        &[],
    ));
    assert!(stdout.contains("sF1") && stdout.contains("macro"), "{stdout}");

    let preds = PredictionFile::load(&out.join("predictions.jsonl")).unwrap();
    assert_eq!(preds.len(), 12 * 11 / 2 * 2);
    for (name, _) in tree(&out.join("graphs")) {
        ArgumentGraph::load(&out.join("graphs").join(name)).unwrap();
    }
    let parts = tree(&out.join("partitions"));
    assert_eq!(parts.len(), 2);
    for (name, text) in &parts {
        let f = PartitionFile::load(&out.join("partitions").join(name)).unwrap();
        assert_eq!(&(f.to_json() + "\n"), text);
    }
    kpa_core::embed::EmbeddingTable::load(&out.join("embeddings.jsonl")).unwrap();
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["groups"].as_array().unwrap().len(), 2);
    assert_eq!(report["groups"][0]["sF1"], 1.0);
}

#[test]
fn stages_run_separately_match_the_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let data = small_corpus(dir.path());
    let whole = dir.path().join("whole");
    ok(kpa(
        &["pipeline", "--data", &data, "--out", whole.to_str().unwrap()],
        &[],
    ));

    let staged = dir.path().join("staged");
    let s = staged.to_str().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, format!(r#"{{"data": {data:?}, "out": {s:?}}}"#)).unwrap();
    let c = cfg.to_str().unwrap();
    ok(kpa(&["--config", c, "score", "--backend", "oracle"], &[]));
    ok(kpa(&["--config", c, "graph"], &[]));
    ok(kpa(&["--config", c, "partition", "--num-subgraphs", "auto"], &[]));
    ok(kpa(&["--config", c, "eval", "--sim", "token-f1"], &[]));

    let mut expected = tree(&whole);
    expected.retain(|(name, _)| name != "embeddings.jsonl");
    assert_eq!(tree(&staged), expected);
}

#[test]
fn missing_embeddings_is_a_partition_error() {
    let dir = tempfile::tempdir().unwrap();
    let data = small_corpus(dir.path());
    let out = dir.path().join("out");
    let res = kpa(
        &[
            "pipeline",
            "--data",
            &data,
            "--out",
            out.to_str().unwrap(),
            "--embeddings",
            "/nonexistent/embeddings.jsonl",
        ],
        &[],
    );
    assert!(!res.status.success());
    let err = String::from_utf8_lossy(&res.stderr);
    assert!(err.contains("partition: embeddings not found"), "{err}");
}

#[test]
fn bad_records_name_stage_and_line() {
    let dir = tempfile::tempdir().unwrap();
    let data = small_corpus(dir.path());
    let preds = dir.path().join("p.jsonl");
    fs::write(
        &preds,
        r#"{"topic":"x","stance":"pro","arg_i":"a","arg_j":"b","share_score":1.3,"key_point":null}"#,
    )
    .unwrap();
    let res = kpa(
        &[
            "pipeline",
            "--data",
            &data,
            "--out",
            dir.path().join("o").to_str().unwrap(),
            "--backend",
            "file",
            "--source",
            preds.to_str().unwrap(),
        ],
        &[],
    );
    let err = String::from_utf8_lossy(&res.stderr);
    assert!(!res.status.success());
    assert!(
        err.contains("score:") && err.contains(":1:") && err.contains("1.3"),
        "{err}"
    );
}

#[test]
fn seed_precedence_config_env_flag() {
    let dir = tempfile::tempdir().unwrap();
    let data = small_corpus(dir.path());
    let run = |name: &str, extra: &[&str], env: &[(&str, &str)]| {
        let out = dir.path().join(name);
        let cfg = dir.path().join(format!("{name}.json"));
        fs::write(
            &cfg,
            format!(r#"{{"data": {data:?}, "out": {:?}, "seed": 1}}"#, out.to_str().unwrap()),
        )
        .unwrap();
        let mut args = vec!["--config", cfg.to_str().unwrap(), "pairs"];
        args.extend_from_slice(extra);
        ok(kpa(&args, env));
        fs::read_to_string(out.join("pairs.jsonl")).unwrap()
    };
    let from_config = run("c", &[], &[]);
    let from_env = run("e", &[], &[("KPA_SEED", "2")]);
    let from_flag = run("f", &["--seed", "1"], &[("KPA_SEED", "2")]);
    let reference = run("r", &["--seed", "2"], &[]);
    assert_eq!(from_env, reference);
    assert_eq!(from_flag, from_config);

    let bad = kpa(&["pairs", "--data", &data], &[("KPA_SEED", "many")]);
    assert!(!bad.status.success());
}

#[test]
fn pairs_export_uses_templates_and_cap() {
    let dir = tempfile::tempdir().unwrap();
    let data = small_corpus(dir.path());
    let out = dir.path().join("pairs.jsonl");
    ok(kpa(
        &[
            "pairs",
            "--data",
            &data,
            "--out",
            out.to_str().unwrap(),
            "--max-intra",
            "1",
        ],
        &[],
    ));
    let records: Vec<serde_json::Value> = corpus::read_jsonl(&out).unwrap().into_iter().map(|(_, v)| v).collect();
    assert!(!records.is_empty());
    for r in &records {
        let input = r["input"].as_str().unwrap();
        assert!(
            input.contains(" | positive. ") || input.contains(" | negative. "),
            "{input}"
        );
        let output = r["output"].as_str().unwrap();
        assert!(output == "No." || output.starts_with("Yes. Key point"), "{output}");
    }
    let uncapped = dir.path().join("all.jsonl");
    ok(kpa(
        &[
            "pairs",
            "--data",
            &data,
            "--out",
            uncapped.to_str().unwrap(),
            "--no-cap",
        ],
        &[],
    ));
    let all = corpus::read_jsonl::<serde_json::Value>(&uncapped).unwrap().len();
    assert_eq!(all, 12 * 11 / 2 * 2);
    assert!(records.len() < all);
}

#[test]
fn fixed_subgraph_count_and_zero_steps() {
    let dir = tempfile::tempdir().unwrap();
    let data = small_corpus(dir.path());
    let out = dir.path().join("out");
    ok(kpa(
        &[
            "pipeline",
            "--data",
            &data,
            "--out",
            out.to_str().unwrap(),
            "--num-subgraphs",
            "50",
            "--max-steps",
            "0",
        ],
        &[],
    ));
    for (name, _) in tree(&out.join("partitions")) {
        let f = PartitionFile::load(&out.join("partitions").join(name)).unwrap();
        // clamped to the 12 arguments of the group, all singletons
        assert_eq!(f.subgraphs.len(), 12);
        assert!(f.moves.is_empty());
    }
    let bad = kpa(&["pipeline", "--data", &data, "--num-subgraphs", "0"], &[]);
    assert!(!bad.status.success());
}
