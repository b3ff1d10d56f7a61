use std::process::Command;

fn playground() -> Command {
    Command::new(env!("CARGO_BIN_EXE_playground"))
}

#[test]
fn single_box_stack_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("m.csv");
    let st = playground()
        .args(["run", "stack", "--steps", "100", "--param", "boxes=1", "--out"])
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(st.status.code(), Some(0), "{}", String::from_utf8_lossy(&st.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().count(), 101);
    assert!(text.starts_with("scenario,env,step,time,stability_error"));
    assert!(String::from_utf8_lossy(&st.stderr).contains("stack PASS"));
}

#[test]
fn failing_scenario_exits_one() {
    // μ far below tan 20°, so the predicted slide accel cannot be met in 2 steps
    let st = playground()
        .args(["run", "incline", "--steps", "2", "--param", "mu=0.1"])
        .output()
        .unwrap();
    assert_eq!(st.status.code(), Some(1));
}

#[test]
fn config_errors_exit_two() {
    for args in [
        vec!["run", "nope"],
        vec!["run", "stack", "--param", "bogus=1"],
        vec!["run", "stack", "--steps", "0"],
        vec!["run", "stack", "--h", "-1"],
        vec!["run", "stack", "--batch", "0"],
        vec!["run", "stack", "--param", "novalue"],
        vec!["run", "stack", "--format", "xml"],
        vec!["run", "stack", "--model", "/no/such/model.xml"],
        vec!["inspect", "/no/such/model.xml"],
    ] {
        let st = playground().args(&args).output().unwrap();
        assert_eq!(st.status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn unwritable_output_exits_two() {
    let st = playground()
        .args(["run", "stack", "--steps", "1", "--param", "boxes=1", "--out", "/no/such/dir/m.csv"])
        .output()
        .unwrap();
    assert_eq!(st.status.code(), Some(2));
}

#[test]
fn metrics_are_byte_identical_across_runs_and_workers() {
    let dir = tempfile::tempdir().unwrap();
    let mut files = Vec::new();
    for (i, w) in ["1", "1", "3"].iter().enumerate() {
        let p = dir.path().join(format!("m{i}.jsonl"));
        let st = playground()
            .args([
                "run",
                "shake",
                "--batch",
                "3",
                "--seed",
                "11",
                "--steps",
                "300",
                "--workers",
                w,
                "--out",
            ])
            .arg(&p)
            .output()
            .unwrap();
        assert!(st.status.code() == Some(0) || st.status.code() == Some(1));
        files.push(std::fs::read(&p).unwrap());
    }
    assert!(!files[0].is_empty());
    assert_eq!(files[0], files[1]);
    assert_eq!(files[0], files[2]);
    assert_eq!(String::from_utf8_lossy(&files[0]).lines().count(), 900);
}

#[test]
fn timing_column_only_on_request() {
    let st = playground()
        .args(["run", "stack", "--steps", "3", "--param", "boxes=1", "--out", "-", "--timing"])
        .output()
        .unwrap();
    let text = String::from_utf8(st.stdout).unwrap();
    assert!(text.lines().next().unwrap().ends_with(",steps_per_sec"));
    let st = playground()
        .args(["run", "stack", "--steps", "3", "--param", "boxes=1", "--out", "-"])
        .output()
        .unwrap();
    assert!(!String::from_utf8(st.stdout).unwrap().contains("steps_per_sec"));
}

#[test]
fn inspect_dumps_model() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("m.xml");
    std::fs::write(
        &p,
        r#"<mujoco><worldbody><body name="b"><joint type="hinge"/><geom size="0.1"/></body></worldbody></mujoco>"#,
    )
    .unwrap();
    let st = playground().arg("inspect").arg(&p).output().unwrap();
    assert_eq!(st.status.code(), Some(0));
    let text = String::from_utf8(st.stdout).unwrap();
    assert!(text.contains("nbody=2"), "{text}");
}

#[test]
fn external_model_for_drop() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("chain.xml");
    std::fs::write(&p, playground_core::scenario::scenes::chain(0.3, 0.01)).unwrap();
    let st = playground().args(["run", "drop10ms", "--model"]).arg(&p).output().unwrap();
    assert_eq!(st.status.code(), Some(0), "{}", String::from_utf8_lossy(&st.stderr));
}
