use super::*;

fn rec(step: u64) -> MetricsRecord {
    MetricsRecord {
        scenario: "stack".into(),
        step,
        time: step as f64 * 0.01,
        stability_error: Some(0.1),
        ..Default::default()
    }
}

fn csv(records: &[MetricsRecord], timing: bool) -> String {
    let mut buf = Vec::new();
    write_metrics(records, MetricsFormat::Csv, timing, &mut buf).unwrap();
    String::from_utf8(buf).unwrap()
}

#[test]
fn empty_csv_is_header_only() {
    let s = csv(&[], false);
    assert_eq!(s, format!("{}\n", COLUMNS.join(",")));
    assert!(csv(&[], true).trim_end().ends_with(",steps_per_sec"));
}

#[test]
fn three_records_four_lines() {
    let s = csv(&[rec(0), rec(1), rec(2)], false);
    let lines: Vec<&str> = s.lines().collect();
    assert_eq!(lines.len(), 4);
    assert_eq!(lines[2], "stack,0,1,1.0000000000000000e-2,1.0000000000000001e-1,,,,,,,,,,,,,");
    for l in &lines {
        assert_eq!(l.split(',').count(), COLUMNS.len());
    }
}

#[test]
fn reals_round_trip_exactly() {
    let x = 0.1 + 0.2;
    let mut r = rec(0);
    r.value = Some(x);
    let s = csv(&[r], false);
    let v: f64 = s.lines().nth(1).unwrap().rsplit(',').next().unwrap().parse().unwrap();
    assert_eq!(v.to_bits(), x.to_bits());
}

#[test]
fn jsonl_nulls_and_escapes() {
    let mut r = rec(3);
    r.value = Some(f64::NAN);
    r.label = Some("a\"b".into());
    r.retained = Some(true);
    r.momentum = Some(Vec3::new(1.0, 0.0, -1.0));
    let mut buf = Vec::new();
    write_metrics(&[r.clone(), r], MetricsFormat::Jsonl, false, &mut buf).unwrap();
    let s = String::from_utf8(buf).unwrap();
    assert_eq!(s.lines().count(), 2);
    let l = s.lines().next().unwrap();
    assert!(l.starts_with(r#"{"scenario":"stack","env":0,"step":3,"#));
    assert!(l.contains(r#""value":null"#));
    assert!(l.contains(r#""pos_drift":null"#));
    assert!(l.contains(r#""label":"a\"b""#));
    assert!(l.contains(r#""retained":true"#));
    assert!(l.contains(r#""momentum_z":-1.0000000000000000e0"#));
    assert!(!l.contains("steps_per_sec"));
}

#[test]
fn csv_non_finite_and_quoting() {
    let mut r = rec(0);
    r.value = Some(f64::NEG_INFINITY);
    r.label = Some("x,y".into());
    let s = csv(&[r], false);
    assert!(s.lines().nth(1).unwrap().ends_with(",\"x,y\",-inf"));
}

#[test]
fn stability_error_examples() {
    let a = vec![(Vec3::new(1.0, 2.0, 3.0), Quat::from_axis_angle(Vec3::Y, 0.2)); 3];
    assert_eq!(stability_error(&a, &a), 0.0);
    let r = vec![(Vec3::ZERO, Quat::IDENTITY); 2];
    // mean offsets 0.3 m and 0.4 rad
    let p = vec![
        (Vec3::new(0.6, 0.0, 0.0), Quat::from_axis_angle(Vec3::Z, 0.5)),
        (Vec3::ZERO, Quat::from_axis_angle(Vec3::X, 0.3)),
    ];
    assert!((stability_error(&p, &r) - 0.5).abs() < 1e-12);
    let (_, dp, dth) = drift(&p, &r);
    assert!((dp - 0.3).abs() < 1e-15 && (dth - 0.4).abs() < 1e-12);
}

#[test]
fn config_errors() {
    assert!(matches!(run_scenario(&ScenarioConfig::new("nope")), Err(ScenarioError::Unknown(_))));
    let mut c = ScenarioConfig::new("stack");
    c.steps = Some(0);
    assert!(matches!(run_scenario(&c), Err(ScenarioError::Config(_))));
    let mut c = ScenarioConfig::new("stack");
    c.h = Some(-0.1);
    assert!(matches!(run_scenario(&c), Err(ScenarioError::Config(_))));
    let mut c = ScenarioConfig::new("stack");
    c.batch = 0;
    assert!(matches!(run_scenario(&c), Err(ScenarioError::Config(_))));
    let c = ScenarioConfig::new("stack").param("bogus", 1);
    assert!(matches!(run_scenario(&c), Err(ScenarioError::Config(m)) if m.contains("bogus")));
    let c = ScenarioConfig::new("stack").param("boxes", "many");
    assert!(matches!(run_scenario(&c), Err(ScenarioError::Config(_))));
    let mut c = ScenarioConfig::new("stack");
    c.model = Some("/definitely/not/here.xml".into());
    assert!(run_scenario(&c).is_err());
}

#[test]
fn single_box_stack_is_still() {
    let mut c = ScenarioConfig::new("stack").param("boxes", 1);
    c.steps = Some(100);
    let o = run_scenario(&c).unwrap();
    assert!(o.pass);
    assert_eq!(o.records.len(), 100);
    assert!(o.records.iter().all(|r| r.stability_error.unwrap() < 1e-6));
}

#[test]
fn runs_are_byte_reproducible() {
    let mut c = ScenarioConfig::new("shake");
    c.batch = 2;
    c.seed = 7;
    c.steps = Some(300);
    let a = run_scenario(&c).unwrap();
    let b = run_scenario(&c).unwrap();
    let mut fa = Vec::new();
    let mut fb = Vec::new();
    write_metrics(&a.records, MetricsFormat::Jsonl, false, &mut fa).unwrap();
    write_metrics(&b.records, MetricsFormat::Jsonl, false, &mut fb).unwrap();
    assert_eq!(fa, fb);
    c.seed = 8;
    let d = run_scenario(&c).unwrap();
    assert_ne!(a.records, d.records);
}

#[test]
fn external_model_goes_through_parser() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("tower.xml");
    std::fs::write(&path, scenes::stack(2, 0, 0.01)).unwrap();
    let mut c = ScenarioConfig::new("stack");
    c.model = Some(path);
    c.steps = Some(50);
    let o = run_scenario(&c).unwrap();
    assert!(o.pass);
    assert_eq!(o.records.len(), 50);
}

#[test]
fn trend_of_line() {
    assert!((trend(&[1.0, 3.0, 5.0, 7.0]) - 2.0).abs() < 1e-15);
    assert_eq!(trend(&[4.0]), 0.0);
}
