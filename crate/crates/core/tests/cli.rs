use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use usmo::data::{two_blobs, write_libsvm, Label, LabeledData};
use usmo::Model;

fn usmo(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_usmo")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

struct T1 {
    dir: tempfile::TempDir,
    pos: PathBuf,
    unl: PathBuf,
}

fn t1_files() -> T1 {
    let dir = tempfile::tempdir().unwrap();
    let pos = write(dir.path(), "pos.svm", "1 1:1\n");
    let unl = write(dir.path(), "unl.svm", "0 1:1\n0 1:-1\n");
    T1 { dir, pos, unl }
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn train_t1(t: &T1, extra: &[&str]) -> (Output, PathBuf) {
    let model = t.dir.path().join("t1.model");
    let mut args = vec![
        "train",
        "--positive",
        s(&t.pos),
        "--unlabeled",
        s(&t.unl),
        "--kernel",
        "linear",
        "--pi",
        "0.5",
        "--lambda",
        "0.25",
        "--model",
        s(&model),
    ];
    args.extend_from_slice(extra);
    (usmo(&args), model)
}

#[test]
fn train_tiny_fixture() {
    let t = t1_files();
    let trace = t.dir.path().join("trace.csv");
    let (out, model_path) = train_t1(&t, &["--trace", s(&trace)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let line = stdout(&out);
    assert!(line.starts_with("objective=-1 iters="), "{line}");
    for key in ["full_scans=", "kernel_evals=", "time_ms="] {
        assert!(line.contains(key));
    }
    let model = Model::load(fs::read(&model_path).unwrap().as_slice()).unwrap();
    assert_eq!(model.bias, 0.0);
    let alpha: Vec<f64> = model.coefficients.iter().map(|c| c.alpha).collect();
    assert_eq!(alpha, vec![1.0, -0.5, -0.5]);
    let csv = fs::read_to_string(trace).unwrap();
    assert_eq!(csv.lines().next(), Some(usmo::solver::TRACE_HEADER));
}

#[test]
fn predict_outputs_label_and_score() {
    let t = t1_files();
    let (_, model) = train_t1(&t, &[]);
    let probe = write(t.dir.path(), "probe.svm", "0 1:1\n0 1:-1\n0\n");
    let out = usmo(&["predict", "--model", s(&model), "--data", s(&probe)]);
    assert!(out.status.success());
    assert_eq!(stdout(&out), "+1 1.0\n-1 -1.0\n+1 0.0\n");

    let empty = write(t.dir.path(), "empty.svm", "");
    let out = usmo(&["predict", "--model", s(&model), "--data", s(&empty)]);
    assert!(out.status.success());
    assert_eq!(stdout(&out), "");

    let wide = write(t.dir.path(), "wide.svm", "0 1:1 2:3\n");
    let out = usmo(&["predict", "--model", s(&model), "--data", s(&wide)]);
    assert_eq!(out.status.code(), Some(1));

    let dest = t.dir.path().join("pred.txt");
    let out = usmo(&[
        "predict",
        "--model",
        s(&model),
        "--data",
        s(&probe),
        "--output",
        s(&dest),
    ]);
    assert!(out.status.success());
    assert_eq!(fs::read_to_string(dest).unwrap().lines().count(), 3);
}

#[test]
fn exit_codes() {
    let t = t1_files();
    let (out, _) = train_t1(&t, &["--lambda", "0"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("lambda"));

    // no prior and no split to take it from
    let out = usmo(&["train", "--positive", s(&t.pos), "--unlabeled", s(&t.unl)]);
    assert_eq!(out.status.code(), Some(2));

    let bad = write(t.dir.path(), "bad.svm", "1 1:x\n");
    let out = usmo(&["train", "--positive", s(&bad), "--unlabeled", s(&t.unl), "--pi", "0.5"]);
    assert_eq!(out.status.code(), Some(1));

    let out = usmo(&[
        "train",
        "--positive",
        "/nonexistent/file",
        "--unlabeled",
        s(&t.unl),
        "--pi",
        "0.5",
    ]);
    assert_eq!(out.status.code(), Some(1));

    // all samples positive and fully labeled: nothing left unlabeled
    let only = write(t.dir.path(), "only.svm", "1 1:1\n1 1:2\n");
    let out = usmo(&["eval", "--data", s(&only), "--labeled-fraction", "1.0"]);
    assert_eq!(out.status.code(), Some(1));
}

fn blob_file(dir: &Path) -> PathBuf {
    let (samples, labels) = two_blobs(60, 60, 2, 6.0, 4);
    let data = LabeledData {
        dim: 2,
        samples,
        labels: labels
            .iter()
            .map(|&l| if l == Label::Positive { 1 } else { -1 })
            .collect(),
    };
    let mut buf = Vec::new();
    write_libsvm(&data, &mut buf).unwrap();
    let p = dir.join("blobs.svm");
    fs::write(&p, buf).unwrap();
    p
}

#[test]
fn eval_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let data = blob_file(dir.path());
    let run = |name: &str| {
        let m = dir.path().join(name);
        let out = usmo(&[
            "eval",
            "--data",
            s(&data),
            "--labeled-fraction",
            "0.3",
            "--seed",
            "5",
            "--model",
            s(&m),
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        (stdout(&out), fs::read(m).unwrap())
    };
    let (a, ma) = run("a.model");
    let (b, mb) = run("b.model");
    let strip = |t: &str| {
        t.lines()
            .map(|l| l.split(" time_ms=").next().unwrap().to_string())
            .collect::<Vec<_>>()
    };
    assert_eq!(strip(&a), strip(&b));
    assert_eq!(ma, mb);
    let f: f64 = a
        .lines()
        .last()
        .unwrap()
        .strip_prefix("f_measure=")
        .unwrap()
        .parse()
        .unwrap();
    assert!(f >= 0.95, "{f}");
}

#[test]
fn csv_input_with_target_class() {
    let dir = tempfile::tempdir().unwrap();
    let mut text = String::from("x,y,class\n");
    let (samples, labels) = two_blobs(40, 40, 2, 6.0, 9);
    for (x, l) in samples.iter().zip(&labels) {
        text.push_str(&format!(
            "{},{},{}\n",
            x[0],
            x[1],
            if *l == Label::Positive { 3 } else { 7 }
        ));
    }
    let p = write(dir.path(), "blobs.csv", &text);
    let out = usmo(&[
        "eval",
        "--data",
        s(&p),
        "--header",
        "--label-col",
        "2",
        "--target-class",
        "3",
        "--labeled-fraction",
        "0.3",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout(&out).contains("f_measure="));
}

#[test]
fn oracle_command() {
    let t = t1_files();
    let base = [
        "oracle",
        "--positive",
        s(&t.pos),
        "--unlabeled",
        s(&t.unl),
        "--kernel",
        "linear",
        "--pi",
        "0.5",
        "--lambda",
        "0.25",
    ];
    let mut args = base.to_vec();
    args.extend(["--enumerate", "--steps", "10001"]);
    let out = usmo(&args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    let value = |key: &str| -> f64 {
        let line = text.lines().find(|l| l.starts_with(key)).unwrap();
        line[key.len()..].split_whitespace().next().unwrap().parse().unwrap()
    };
    assert!((value("dense_objective=") + 1.0).abs() < 1e-6);
    assert!((value("enumerate_objective=") + 1.0).abs() < 1e-6);
    assert!(value("usmo_minus_oracle=").abs() < 1e-6);

    let five = write(t.dir.path(), "five.svm", "0 1:1\n0 1:-1\n0 1:2\n0 1:0.5\n0 1:-3\n");
    let out = usmo(&[
        "oracle",
        "--positive",
        s(&t.pos),
        "--unlabeled",
        s(&five),
        "--kernel",
        "linear",
        "--pi",
        "0.5",
        "--lambda",
        "0.25",
        "--enumerate",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout(&out).contains("dense_objective="));
    assert!(String::from_utf8_lossy(&out.stderr).contains("n <= 4"));
}
