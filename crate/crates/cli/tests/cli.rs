//! Black-box tests of the `entropy-lens` binary: exit codes, artifacts,
//! and the train / explain / eval flow.

use std::process::{Command, Output};

use entropy_lens_core::logic::parse;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_entropy-lens"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout_of(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

fn stderr_of(output: &Output) -> String {
    String::from_utf8_lossy(&output.stderr).into_owned()
}

#[test]
fn synth_toy_writes_the_padded_table() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("toy.csv");
    let out = run(&["synth", "toy", "--pad", "100", "-o", csv.to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr_of(&out));
    assert!(stdout_of(&out).contains("8 rows, 104 concepts, 4 targets"));
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap();
    assert_eq!(header.split(',').count(), 108);
    assert_eq!(lines.count(), 8);
}

#[test]
fn synth_parity_row_count() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("par.csv");
    let out = run(&[
        "synth", "parity", "-n", "2000", "--noise", "0", "-o",
        csv.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr_of(&out));
    let text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().count(), 2001);
}

#[test]
fn synth_rejects_negative_padding_with_usage_error() {
    let out = run(&["synth", "toy", "--pad", "-1", "-o", "x.csv"]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr_of(&out));
}

#[test]
fn missing_config_exits_one_with_the_path() {
    let out = run(&["crossval", "--config", "/nope/still-missing.toml"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(
        stderr_of(&out).contains("config not found: /nope/still-missing.toml"),
        "{}",
        stderr_of(&out)
    );
}

#[test]
fn crossval_parity_writes_artifacts_and_prints_the_table() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("run");
    let config_path = dir.path().join("parity.toml");
    std::fs::write(
        &config_path,
        format!(
            r#"
[dataset]
kind = "parity"
n = 600

[train]
lambda = 1e-7
tau = 5.0
learning_rate = 1e-2
max_epochs = 200
hidden = [10]
early_stopping = false
seed = 1

[output]
dir = "{}"
zero_times = true
"#,
            out_dir.display()
        ),
    )
    .unwrap();

    let out = run(&["crossval", "--config", config_path.to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr_of(&out));
    let stdout = stdout_of(&out);
    assert!(
        stdout.contains("| explanation accuracy (%) | 100.00 ± 0.00 |"),
        "{stdout}"
    );
    assert!(stdout.contains("| consistency (%) | 100.00 |"), "{stdout}");

    assert!(out_dir.join("report.json").exists());
    assert!(out_dir.join("summary.md").exists());
    for f in 0..5 {
        let path = out_dir.join(format!("fold_{f}_formulas.txt"));
        assert!(path.exists(), "missing {}", path.display());
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert!(text.starts_with("even:"));
    }

    // The report subcommand renders the same summary from the file.
    let report_out = run(&[
        "report",
        "--report",
        out_dir.join("report.json").to_str().unwrap(),
    ]);
    assert!(report_out.status.success());
    assert!(stdout_of(&report_out).contains("| consistency (%) | 100.00 |"));
}

#[test]
fn crossval_runs_are_byte_identical_for_a_seed() {
    // The identical configuration (including the output directory) run
    // twice; the second run overwrites the first, so capture in between.
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("run");
    let config_path = dir.path().join("toy.toml");
    std::fs::write(
        &config_path,
        format!(
            r#"
[dataset]
kind = "toy"
pad = 10

[train]
lambda = 1e-4
tau = 0.3
learning_rate = 5e-3
max_epochs = 300
early_stopping = false
hidden = [20, 10]
seed = 13

[extract]
folds = 2

[output]
dir = "{}"
zero_times = true
"#,
            out_dir.display()
        ),
    )
    .unwrap();
    // One single-threaded run and one with the default fold parallelism:
    // the thread cap must never change the report bytes.
    let mut reports = Vec::new();
    for threads in [Some("1"), None] {
        let mut cmd = bin();
        cmd.args(["crossval", "--config", config_path.to_str().unwrap()]);
        match threads {
            Some(t) => {
                cmd.env("ENTROPY_LENS_THREADS", t);
            }
            None => {
                cmd.env_remove("ENTROPY_LENS_THREADS");
            }
        }
        let out = cmd.output().expect("binary runs");
        assert!(out.status.success(), "{}", stderr_of(&out));
        reports.push(std::fs::read(out_dir.join("report.json")).unwrap());
    }
    assert_eq!(reports[0], reports[1]);
}

/// Full train -> explain -> eval flow over files.
#[test]
fn train_explain_eval_flow() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("model-run");
    let data = dir.path().join("toy.csv");
    let out = run(&["synth", "toy", "--pad", "4", "-o", data.to_str().unwrap()]);
    assert!(out.status.success());

    let config_path = dir.path().join("train.toml");
    std::fs::write(
        &config_path,
        format!(
            r#"
[dataset]
kind = "csv"
path = "{}"
targets = ["y", "not_y", "z", "not_z"]

[train]
lambda = 1e-4
tau = 0.3
learning_rate = 5e-3
max_epochs = 4000
early_stopping = false
hidden = [10, 6]
task_loss = "sigmoid"
seed = 3

[output]
dir = "{}"
"#,
            data.display(),
            out_dir.display()
        ),
    )
    .unwrap();
    let out = run(&["train", "--config", config_path.to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr_of(&out));
    let model = out_dir.join("model.json");
    assert!(model.exists());
    assert!(out_dir.join("history.json").exists());

    // Unicode formulas for the two reference classes.
    let out = run(&[
        "explain",
        "--model",
        model.to_str().unwrap(),
        "--data",
        data.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr_of(&out));
    let stdout = stdout_of(&out);
    assert!(stdout.contains('∧') || stdout.contains('∨'), "{stdout}");

    // Ascii style must parse back through the grammar; check class
    // equivalence rather than literal text so term order stays free.
    let formulas_path = dir.path().join("formulas.txt");
    let out = run(&[
        "explain",
        "--model",
        model.to_str().unwrap(),
        "--data",
        data.to_str().unwrap(),
        "--style",
        "ascii",
        "--save",
        formulas_path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr_of(&out));
    let names: Vec<String> = ["x1", "x2", "x3", "x4", "pad1", "pad2", "pad3", "pad4"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let saved = std::fs::read_to_string(&formulas_path).unwrap();
    let mut parsed = std::collections::BTreeMap::new();
    for line in saved.lines() {
        let (name, text) = line.split_once(':').unwrap();
        parsed.insert(
            name.trim().to_string(),
            parse(text.trim(), &names, 0).unwrap(),
        );
    }
    let y = &parsed["y"];
    let z = &parsed["z"];
    for pattern in 0..16usize {
        let sample: Vec<bool> = (0..8).map(|j| j < 4 && pattern >> j & 1 == 1).collect();
        assert_eq!(y.evaluate(&sample), sample[0] != sample[1], "y on {sample:?}");
        assert_eq!(z.evaluate(&sample), sample[2] || sample[3], "z on {sample:?}");
    }

    // Filtering by class prints just that class; unknown names list the
    // valid ones and exit 1.
    let out = run(&[
        "explain",
        "--model",
        model.to_str().unwrap(),
        "--data",
        data.to_str().unwrap(),
        "--class",
        "z",
        "--style",
        "ascii",
    ]);
    assert!(out.status.success());
    let stdout = stdout_of(&out);
    assert_eq!(stdout.lines().count(), 1);
    assert!(stdout.starts_with("z <->"), "{stdout}");

    let out = run(&[
        "explain",
        "--model",
        model.to_str().unwrap(),
        "--data",
        data.to_str().unwrap(),
        "--class",
        "bogus",
    ]);
    assert_eq!(out.status.code(), Some(1));
    let err = stderr_of(&out);
    assert!(err.contains("bogus") && err.contains("not_z"), "{err}");

    // Eval consumes the saved formulas through the parser.
    let eval_json = dir.path().join("eval.json");
    let out = run(&[
        "eval",
        "--model",
        model.to_str().unwrap(),
        "--data",
        data.to_str().unwrap(),
        "--formulas",
        formulas_path.to_str().unwrap(),
        "--out",
        eval_json.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr_of(&out));
    assert!(stdout_of(&out).contains("model accuracy"));
    let parsed: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&eval_json).unwrap()).unwrap();
    assert_eq!(parsed["model_accuracy"], serde_json::json!(1.0));
}

#[test]
fn help_lists_every_documented_flag() {
    let mut text = String::new();
    for sub in ["synth toy", "synth parity", "train", "explain", "eval", "crossval", "grid", "report"] {
        let mut args: Vec<&str> = sub.split(' ').collect();
        args.push("--help");
        let out = run(&args);
        assert!(out.status.success());
        text.push_str(&stdout_of(&out));
    }
    for flag in [
        "--config", "--seed", "--lambda", "--tau", "--epochs", "--folds", "--out", "--style",
        "--preset", "--pad", "--noise", "--lambda-grid", "--tau-grid", "--formulas", "--model",
        "--data", "--class", "--verbose",
    ] {
        assert!(text.contains(flag), "missing {flag} in help output");
    }
}
