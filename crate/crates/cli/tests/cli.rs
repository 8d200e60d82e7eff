use std::fs;
use std::process::{Command, Output};

fn sscag(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sscag"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn missing_input_exits_with_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let out = sscag(&[
        "cluster", "/no/such/cube.hsic", "--clusters", "2", "--anchors", "4", "--alpha", "0.5",
        "--out", out_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(3));
    let err = stderr(&out);
    assert_eq!(err.lines().count(), 1);
    assert!(err.starts_with("error: data: /no/such/cube.hsic"));
}

#[test]
fn usage_errors_exit_two_on_one_line() {
    let out = sscag(&["cluster"]);
    assert_eq!(out.status.code(), Some(2));
    let err = stderr(&out);
    assert_eq!(err.lines().count(), 1);
    assert!(err.starts_with("error: usage: "));
    assert!(err.contains("--clusters"));

    let out = sscag(&["--threads", "0", "eval", "a", "b"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn infeasible_scene_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = sscag(&[
        "synth", "--height", "2", "--width", "2", "--bands", "3", "--classes", "5",
        "--out", dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).starts_with("error: usage: infeasible scene"));
}

#[test]
fn rank_deficiency_is_a_numerical_error() {
    let dir = tempfile::tempdir().unwrap();
    let scene = dir.path().join("scene");
    let out = sscag(&[
        "synth", "--height", "6", "--width", "6", "--bands", "2", "--classes", "2", "--noise", "0",
        "--out", scene.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    // a noiseless two-class scene has rank two, so three clusters cannot be embedded
    let out = sscag(&[
        "cluster", scene.join("cube.hsic").to_str().unwrap(), "--clusters", "3", "--anchors", "12",
        "--alpha", "0.5", "--neighbors", "2", "--scales", "3", "--out",
        dir.path().join("run").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(4), "{}", stderr(&out));
    assert!(stderr(&out).starts_with("error: numerical: "));
}

#[test]
fn eval_prints_metrics_and_mapping() {
    let dir = tempfile::tempdir().unwrap();
    let gt = dir.path().join("gt.csv");
    let labels = dir.path().join("labels.csv");
    fs::write(&gt, "1,1,1,1\n2,2,2,2\n").unwrap();
    // clusters 7 and 9 swap the class roles; one pixel of each is wrong
    let pred = [9, 9, 9, 7, 7, 7, 7, 9];
    let csv: String = pred.iter().enumerate().map(|(i, l)| format!("{i},{l}\n")).collect();
    fs::write(&labels, csv).unwrap();
    let out = sscag(&["eval", labels.to_str().unwrap(), gt.to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert_eq!(
        String::from_utf8(out.stdout).unwrap(),
        "oa,0.75\naa,0.75\nkappa,0.5\nmap,7,2\nmap,9,1\n"
    );
}

#[test]
fn convert_and_cluster_with_thread_env() {
    let dir = tempfile::tempdir().unwrap();
    let raw = dir.path().join("cube.raw");
    let bytes: Vec<u8> = (0..8 * 8)
        .flat_map(|i| {
            let left = (i % 8) < 4;
            let v: [f32; 2] = if left { [0.1, 0.9] } else { [0.9, 0.1] };
            v.into_iter().flat_map(f32::to_le_bytes).collect::<Vec<u8>>()
        })
        .collect();
    fs::write(&raw, bytes).unwrap();
    let cube = dir.path().join("cube.hsic");
    let out = sscag(&[
        "convert", raw.to_str().unwrap(), "--height", "8", "--width", "8", "--bands", "2",
        "--sample", "f32le", "--out", cube.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));

    let run = dir.path().join("run");
    let out = Command::new(env!("CARGO_BIN_EXE_sscag"))
        .env("SSCAG_THREADS", "1")
        .args([
            "cluster", cube.to_str().unwrap(), "--clusters", "2", "--anchors", "10", "--alpha",
            "0.5", "--neighbors", "3", "--scales", "3,5", "--out", run.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr(&out));
    let labels = fs::read_to_string(run.join("labels.csv")).unwrap();
    assert_eq!(labels.lines().count(), 64);
    let meta = fs::read_to_string(run.join("run.csv")).unwrap();
    assert!(meta.contains("scales,3 5\n"));
    assert!(!meta.contains("\noa,"));
}
