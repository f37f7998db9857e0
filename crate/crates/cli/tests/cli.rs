#[path = "../../core/tests/support/mod.rs"]
mod support;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use offlang_cli::{run_experiment, Options, Settings, GRID_FILE, MODEL_FILE, REPORT_FILE};
use offlang_core::evaluation::MetricsReport;
use offlang_core::models::ModelKind;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_offlang"));
    c.env("RUST_LOG", "warn");
    for (key, _) in std::env::vars() {
        if key.starts_with("OFFLANG_") {
            c.env_remove(key);
        }
    }
    c
}

fn write_corpus(dir: &Path, name: &str, n: usize, seed: u64) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, support::synthetic_olid(n, seed)).unwrap();
    path
}

fn options(train: &Path, out: &Path) -> Options {
    Options {
        train: Some(train.to_path_buf()),
        out: Some(out.to_path_buf()),
        min_frequency: Some(1),
        ..Default::default()
    }
}

#[test]
fn minimal_experiment_writes_every_metric_key() {
    let dir = tempfile::tempdir().unwrap();
    let train = write_corpus(dir.path(), "train.tsv", 20, 1);
    let out = dir.path().join("out");
    let settings = Settings::resolve(options(&train, &out)).unwrap();
    run_experiment(&settings, false).unwrap();
    let text = fs::read_to_string(out.join(REPORT_FILE)).unwrap();
    let report = MetricsReport::parse(&text).unwrap();
    for key in ["samples", "accuracy", "f1_macro", "f1_micro", "f1_weighted", "mcc", "confusion.rows"] {
        assert!(text.lines().any(|l| l.starts_with(&format!("{key} = "))), "missing {key}");
    }
    for class in ["NOT", "OFF"] {
        for field in ["precision", "recall", "f1", "support"] {
            assert!(text.contains(&format!("class.{class}.{field} = ")));
        }
    }
    assert_eq!(report.samples, 4);
    assert!(out.join(MODEL_FILE).exists());
}

#[test]
fn same_seed_gives_byte_identical_reports() {
    let dir = tempfile::tempdir().unwrap();
    let train = write_corpus(dir.path(), "train.tsv", 150, 2);
    let run = |name: &str| {
        let out = dir.path().join(name);
        let mut o = options(&train, &out);
        o.model = Some(ModelKind::Forest);
        o.params = Some(vec!["n_trees=15".into()]);
        run_experiment(&Settings::resolve(o).unwrap(), false).unwrap();
        (fs::read(out.join(REPORT_FILE)).unwrap(), fs::read(out.join(MODEL_FILE)).unwrap())
    };
    assert_eq!(run("a"), run("b"));
}

#[test]
fn knn_grid_table_has_eight_rows() {
    let dir = tempfile::tempdir().unwrap();
    let train = write_corpus(dir.path(), "train.tsv", 120, 3);
    let out = dir.path().join("out");
    let mut o = options(&train, &out);
    o.model = Some(ModelKind::Knn);
    o.grid = Some(vec!["k=3,5,7,9".into(), "weighting=uniform,distance".into()]);
    let result = run_experiment(&Settings::resolve(o).unwrap(), true).unwrap();
    let csv = fs::read_to_string(out.join(GRID_FILE)).unwrap();
    assert_eq!(csv.lines().count(), 1 + 8);
    assert_eq!(csv.lines().filter(|l| l.ends_with(",1")).count(), 1);
    assert_eq!(result.cv.unwrap().rows.len(), 8);
}

#[test]
fn predict_keeps_rows_and_order() {
    let dir = tempfile::tempdir().unwrap();
    let train = write_corpus(dir.path(), "train.tsv", 200, 4);
    let model_dir = dir.path().join("model");
    let status = bin()
        .args(["train", "--train"]).arg(&train)
        .args(["--out"]).arg(&model_dir)
        .args(["--min-frequency", "1"])
        .status()
        .unwrap();
    assert!(status.success());

    let input = dir.path().join("in.txt");
    fs::write(&input, "what a moron\nsunny garden morning\n\nidiot media\n").unwrap();
    let output = bin()
        .args(["predict", "--model-path"]).arg(model_dir.join(MODEL_FILE))
        .args(["--input"]).arg(&input)
        .output()
        .unwrap();
    assert!(output.status.success());
    let stdout = String::from_utf8(output.stdout).unwrap();
    let lines: Vec<&str> = stdout.lines().collect();
    assert_eq!(lines[0], "id,label");
    assert_eq!(lines.len(), 1 + 4);
    let ids: Vec<&str> = lines[1..].iter().map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(ids, vec!["1", "2", "3", "4"]);
    assert!(!stdout.contains('\r'));

    let empty = dir.path().join("empty.txt");
    fs::write(&empty, "").unwrap();
    let output = bin()
        .args(["predict", "--model-path"]).arg(model_dir.join(MODEL_FILE))
        .args(["--input"]).arg(&empty)
        .output()
        .unwrap();
    assert!(output.status.success());
    assert_eq!(String::from_utf8(output.stdout).unwrap(), "id,label\n");
}

#[test]
fn cascade_round_trip_through_the_binary() {
    let dir = tempfile::tempdir().unwrap();
    let train = write_corpus(dir.path(), "train.tsv", 300, 5);
    let test = write_corpus(dir.path(), "test.tsv", 80, 6);
    let out = dir.path().join("out");
    let status = bin()
        .args(["cascade-train", "--train"]).arg(&train)
        .args(["--test"]).arg(&test)
        .args(["--out"]).arg(&out)
        .args(["--min-frequency", "1"])
        .status()
        .unwrap();
    assert!(status.success());
    for f in ["report_a.txt", "report_b.txt", "report_c.txt", "end_to_end_b.txt", "cascade/manifest.json"] {
        assert!(out.join(f).exists(), "{f}");
    }
    let output = bin()
        .args(["cascade-predict", "--model-path"]).arg(out.join("cascade"))
        .args(["--input"]).arg(&test)
        .output()
        .unwrap();
    assert!(output.status.success());
    let stdout = String::from_utf8(output.stdout).unwrap();
    let mut lines = stdout.lines();
    assert_eq!(lines.next(), Some("id,label_a,label_b,label_c"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 80);
    for row in &rows {
        let cols: Vec<&str> = row.split(',').collect();
        assert_eq!(cols.len(), 4);
        match cols[1] {
            "NOT" => assert_eq!(&cols[2..], ["", ""]),
            "OFF" => assert!(matches!(cols[2], "TIN" | "UNT")),
            other => panic!("bad label {other}"),
        }
    }
    assert!(rows.iter().any(|r| r.ends_with(",NOT,,")));
}

#[test]
fn config_file_env_and_flags_layer() {
    let dir = tempfile::tempdir().unwrap();
    let train = write_corpus(dir.path(), "train.tsv", 60, 7);
    let config = dir.path().join("exp.toml");
    fs::write(
        &config,
        format!(
            "train = {:?}\nmodel = \"svc\"\nlevel = \"A\"\nmin-frequency = 1\nparams = [\"c=0.1\"]\nout = {:?}\n",
            train,
            dir.path().join("from_file")
        ),
    )
    .unwrap();
    let status = bin().arg("train").arg("--config").arg(&config).status().unwrap();
    assert!(status.success());
    assert!(dir.path().join("from_file").join(REPORT_FILE).exists());

    let status = bin()
        .arg("train")
        .arg("--config").arg(&config)
        .env("OFFLANG_OUT", dir.path().join("from_env"))
        .status()
        .unwrap();
    assert!(status.success());
    assert!(dir.path().join("from_env").join(REPORT_FILE).exists());

    let status = bin()
        .arg("train")
        .arg("--config").arg(&config)
        .env("OFFLANG_OUT", dir.path().join("from_env2"))
        .arg("--out").arg(dir.path().join("from_flag"))
        .status()
        .unwrap();
    assert!(status.success());
    assert!(dir.path().join("from_flag").join(REPORT_FILE).exists());
    assert!(!dir.path().join("from_env2").exists());
}

#[test]
fn failures_exit_non_zero_with_the_stage() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.tsv");
    fs::write(&bad, "id\ttweet\tsubtask_a\tsubtask_b\tsubtask_c\n1\tx\tNOT\tTIN\tNULL\n").unwrap();
    let output = bin().args(["train", "--train"]).arg(&bad).output().unwrap();
    assert!(!output.status.success());
    let err = String::from_utf8(output.stderr).unwrap();
    assert!(err.contains("corpus stage"), "{err}");

    let output = bin().args(["train", "--train"]).arg(dir.path().join("missing.tsv")).output().unwrap();
    assert!(!output.status.success());

    let train = write_corpus(dir.path(), "train.tsv", 30, 8);
    let output = bin()
        .args(["train", "--model", "knn", "--params", "k=0", "--train"])
        .arg(&train)
        .output()
        .unwrap();
    assert!(!output.status.success());
    assert!(String::from_utf8(output.stderr).unwrap().contains("invalid configuration"));
}

#[test]
fn preprocess_prints_tokens() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in.txt");
    fs::write(&input, "I can't believe #LunaticLeft went 👍\n").unwrap();
    let output = bin().args(["preprocess", "--input"]).arg(&input).output().unwrap();
    assert!(output.status.success());
    assert_eq!(
        String::from_utf8(output.stdout).unwrap(),
        "id\ttokens\n1\tcan not believe lunatic left go thumb\n"
    );
}
