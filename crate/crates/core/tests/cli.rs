use std::path::Path;
use std::process::{Command, Output};

fn ripplefeed(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ripplefeed"))
        .args(args)
        .output()
        .unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = ripplefeed(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn synth_run_train_eval_round() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    let data = root.join("data");
    ok(&[
        "synth",
        "--out",
        p(&data),
        "--frames",
        "120",
        "--tracks",
        "25",
        "--width",
        "320",
        "--height",
        "180",
        "--seed",
        "3",
        "--images",
    ]);
    let detections = data.join("detections.jsonl");
    let truth = data.join("truth.jsonl");
    assert_eq!(std::fs::read_dir(data.join("images")).unwrap().count(), 120);

    let out = root.join("run");
    let stdout = ok(&[
        "run",
        "--detections",
        p(&detections),
        "--truth",
        p(&truth),
        "--images",
        p(&data.join("images")),
        "--act-on",
        "0.01",
        "--act-off",
        "0.002",
        "--count-max",
        "20",
        "--out",
        p(&out),
    ]);
    assert!(stdout.contains("Mean (fps)"));
    for (file, header) in [
        ("counts.csv", "frame,raw_count,windowed_count"),
        ("activity.csv", "frame,sigma,windowed_sigma"),
        (
            "decisions.csv",
            "frame,feeding,raw_count,windowed_count,windowed_activity,reason",
        ),
    ] {
        let text = std::fs::read_to_string(out.join(file)).unwrap();
        assert_eq!(text.lines().next(), Some(header));
        assert_eq!(text.lines().count(), 121, "{file}");
    }
    assert!(std::fs::read_to_string(out.join("timing.txt"))
        .unwrap()
        .contains("\n120\t"));

    let models = root.join("models");
    ok(&[
        "train",
        "--detections",
        p(&detections),
        "--variant",
        "R5",
        "--iterations",
        "200",
        "--out",
        p(&models),
    ]);
    for f in ["R5_mx.model", "R5_my.model", "R5_loss.csv"] {
        assert!(models.join(f).is_file(), "{f}");
    }
    let report = ok(&[
        "eval",
        "--detections",
        p(&detections),
        "--truth",
        p(&truth),
        "--models-dir",
        p(&models),
        "--persistence",
        "--eval-formula",
        "literal",
    ]);
    assert!(report.contains("Std. Err."));
    assert_eq!(report.lines().filter(|l| l.ends_with('*')).count(), 1);

    let stdout = ok(&[
        "run",
        "--detections",
        p(&detections),
        "--mx",
        p(&models.join("R5_mx.model")),
        "--my",
        p(&models.join("R5_my.model")),
        "--act-on",
        "0.5",
        "--act-off",
        "0.1",
        "--count-max",
        "20",
        "--out",
        p(&root.join("run2")),
    ]);
    assert!(stdout.starts_with("frames: 120"));

    let activity = root.join("activity.csv");
    ok(&[
        "activity",
        "--detections",
        p(&detections),
        "--images",
        p(&data.join("images")),
        "--out",
        p(&activity),
    ]);
    assert_eq!(
        std::fs::read_to_string(&activity).unwrap(),
        std::fs::read_to_string(out.join("activity.csv")).unwrap()
    );
}

#[test]
fn long_preset_is_echoed() {
    let stdout = ok(&[
        "train",
        "--detections",
        "unused.jsonl",
        "--paper-defaults",
        "--dry-run",
    ]);
    assert!(
        stdout.contains("iterations=1000000 learning_rate=1e-7"),
        "{stdout}"
    );
}

#[test]
fn missing_inputs_fail() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.jsonl");
    let out = ripplefeed(&[
        "run",
        "--detections",
        p(&missing),
        "--persistence",
        "--act-on",
        "1",
        "--act-off",
        "0",
        "--count-max",
        "5",
        "--out",
        p(dir.path()),
    ]);
    assert!(!out.status.success());
    let out = ripplefeed(&[
        "eval",
        "--detections",
        p(&missing),
        "--truth",
        p(&missing),
        "--models-dir",
        p(dir.path()),
    ]);
    assert!(!out.status.success());
    let out = ripplefeed(&[
        "run",
        "--detections",
        p(&missing),
        "--persistence",
        "--act-on",
        "0",
        "--act-off",
        "1",
        "--count-max",
        "5",
        "--out",
        p(dir.path()),
    ]);
    assert!(!out.status.success());
}
