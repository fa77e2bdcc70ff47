use std::process::Command;

fn mplsqr(args: &[&str]) -> (bool, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_mplsqr"))
        .args(args)
        .output()
        .unwrap();
    (
        out.status.success(),
        String::from_utf8_lossy(&out.stdout).into_owned(),
    )
}

#[test]
fn run_writes_files_and_prints_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let (ok, text) = mplsqr(&[
        "run",
        "--problem",
        "shaw",
        "--n",
        "100",
        "--eps",
        "1e-3",
        "--seed",
        "3",
        "--configs",
        "d,s+s",
        "--stop",
        "optimal,dp",
        "--out",
        out,
    ]);
    assert!(ok, "{text}");
    assert!(text.contains("seed = 3"));
    let files: Vec<_> = std::fs::read_dir(dir.path()).unwrap().collect();
    assert!(files.len() >= 4);
}

#[test]
fn advise_with_supplied_model() {
    let (ok, text) = mplsqr(&[
        "advise",
        "--eps",
        "1e-3",
        "--m",
        "1000",
        "--beta",
        "1",
        "--decay",
        "severe",
        "--decay-param",
        "2",
        "--safety",
        "1",
        "--json",
    ]);
    assert!(ok, "{text}");
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["recommended"], "f32");
}

#[test]
fn presets_listed_and_bad_input_rejected() {
    let (ok, text) = mplsqr(&["run", "--list-presets"]);
    assert!(ok && text.contains("paper-shaw"));
    let (ok, _) = mplsqr(&["run", "--problem", "shaw", "--n", "64", "--configs", "x+y"]);
    assert!(!ok);
    let (ok, csv) = mplsqr(&["diagnose", "--problem", "heat", "--n", "64"]);
    assert!(ok);
    assert!(csv.lines().count() > 10);
}
