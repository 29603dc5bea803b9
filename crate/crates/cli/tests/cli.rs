use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn vtools(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vtools")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn level_dir(dir: &Path, names: &[&str]) {
    for n in names {
        let src = format!("{}/../core/levels/{n}.json", env!("CARGO_MANIFEST_DIR"));
        fs::copy(src, dir.join(format!("{n}.json"))).unwrap();
    }
}

#[test]
fn run_then_compare_against_a_reference() {
    let tmp = tempfile::tempdir().unwrap();
    let levels = tmp.path().join("levels");
    fs::create_dir(&levels).unwrap();
    level_dir(&levels, &["easy_table", "shafts", "falling_a"]);
    let out = tmp.path().join("out");
    let args = ["run", "--levels", levels.to_str().unwrap(), "--variant", "full,guessing", "--runs", "3", "--seed", "5"];
    let text = stdout(&vtools(&[&args[..], &["--set", "max_attempts=5", "--out", out.to_str().unwrap()]].concat()));
    assert!(text.contains("easy_table"));
    let metrics = fs::read_to_string(out.join("metrics.csv")).unwrap();
    assert_eq!(metrics.lines().count(), 2 + 6);
    assert!(out.join("episodes/shafts.guessing.jsonl").is_file());
    assert!(out.join("plots/falling_a.svg").is_file());

    // Same seed, same bytes.
    let again = tmp.path().join("again");
    stdout(&vtools(&[&args[..], &["--set", "max_attempts=5", "--out", again.to_str().unwrap()]].concat()));
    assert_eq!(metrics, fs::read_to_string(again.join("metrics.csv")).unwrap());

    let reference = tmp.path().join("human.csv");
    fs::write(&reference, "level,human_solution_rate,human_mean_attempts\nALL,0.81,4.48\neasy_table,0.95,1.5\nshafts,0.9,2.5\nfalling_a,0.6,5\n").unwrap();
    let report = tmp.path().join("report.json");
    let text = stdout(&vtools(&[
        "compare", "--model", out.join("metrics.csv").to_str().unwrap(), "--reference", reference.to_str().unwrap(),
        "--out", report.to_str().unwrap(),
    ]));
    assert!(text.contains("mean_attempts: r = "), "{text}");
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(report).unwrap()).unwrap();
    assert_eq!(report["mean_attempts"]["levels"].as_array().unwrap().len(), 3);
    assert_eq!(report["reference_aggregate"]["mean_attempts"], 4.48);

    let template = format!("{}/../../data/human_reference_template.csv", env!("CARGO_MANIFEST_DIR"));
    let text = stdout(&vtools(&["compare", "--model", out.join("metrics.csv").to_str().unwrap(), "--reference", &template]));
    assert!(text.contains("aggregates only"));
    assert!(text.contains("mean attempts 4.48"));
}

#[test]
fn sweep_writes_one_row_per_point_and_variant() {
    let tmp = tempfile::tempdir().unwrap();
    let levels = tmp.path().join("levels");
    fs::create_dir(&levels).unwrap();
    level_dir(&levels, &["shafts"]);
    let out = tmp.path().join("sweep.csv");
    stdout(&vtools(&[
        "sweep", "--levels", levels.to_str().unwrap(), "--variant", "full,no-updating", "--runs", "2",
        "--set", "max_attempts=3", "--param", "epsilon=0.0:0.2:0.1", "--out", out.to_str().unwrap(),
    ]));
    let text = fs::read_to_string(out).unwrap();
    assert_eq!(text.lines().count(), 1 + 3 * 2);
    assert!(text.starts_with("epsilon,variant,"));
}

#[test]
fn attempt_prints_the_outcome() {
    let tmp = tempfile::tempdir().unwrap();
    let traj = tmp.path().join("t.json");
    let text = stdout(&vtools(&["attempt", "--level", "easy_table", "--tool", "0", "--x", "265", "--y", "265", "--trajectory", traj.to_str().unwrap()]));
    let v: serde_json::Value = serde_json::from_str(text.trim()).unwrap();
    assert_eq!(v["solved"], true);
    assert_eq!(v["reward"], 1.0);
    let doc: serde_json::Value = serde_json::from_str(&fs::read_to_string(traj).unwrap()).unwrap();
    assert_eq!(doc["frame_stride"], 3);

    let bad = vtools(&["attempt", "--level", "catapult", "--tool", "0", "--x", "350", "--y", "450"]);
    assert!(!bad.status.success());
    assert!(String::from_utf8_lossy(&bad.stderr).contains("prohibited-zone"));
}

#[test]
fn bad_arguments_fail_cleanly() {
    for args in [
        &["run", "--variant", "best", "--out", "x"][..],
        &["run", "--runs", "0", "--out", "x"],
        &["run", "--set", "epsilon=2", "--out", "x"],
        &["run", "--levels", "/nonexistent", "--out", "x"],
        &["sweep", "--param", "bogus=1", "--out", "x"],
        &["attempt", "--level", "nope", "--tool", "0", "--x", "1", "--y", "1"],
    ] {
        let o = vtools(args);
        assert!(!o.status.success(), "{args:?} succeeded");
        assert!(!o.stderr.is_empty());
    }
    assert!(stdout(&vtools(&["levels"])).contains("calibration_wall"));
}
