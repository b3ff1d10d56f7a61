mod common;

use common::*;
use playground_core::mjcf::{compile, dump_model, load_model, parse_mjcf};
use proptest::prelude::*;

#[test]
fn compiled_models_match_expected_dumps() {
    let mut failed = Vec::new();
    for name in FIXTURES {
        let got = dump_model(&load_model(&fixture(name, "xml")).unwrap());
        let want = fixture(name, "dump");
        if got != want {
            for (g, w) in got.lines().zip(want.lines()).filter(|(g, w)| g != w) {
                eprintln!("{name}:\n  got  {g}\n  want {w}");
            }
            if got.lines().count() != want.lines().count() {
                eprintln!("{name}: {} lines, expected {}", got.lines().count(), want.lines().count());
            }
            failed.push(*name);
        }
    }
    assert!(failed.is_empty(), "mismatched dumps: {failed:?}");
}

#[test]
fn fixtures_round_trip_through_xml() {
    for name in FIXTURES {
        let a = parse_mjcf(&fixture(name, "xml")).unwrap();
        let b = parse_mjcf(&a.to_xml()).unwrap();
        assert_eq!(a, b, "{name}");
        assert_eq!(compile(&a).unwrap(), compile(&b).unwrap(), "{name}");
    }
}

#[test]
fn fixtures_compile_deterministically_without_warnings() {
    for name in FIXTURES {
        let spec = parse_mjcf(&fixture(name, "xml")).unwrap();
        let m = compile(&spec).unwrap();
        assert!(m.warnings.is_empty(), "{name}: {:?}", m.warnings);
        assert_eq!(m, compile(&spec).unwrap(), "{name}");
    }
}

#[test]
fn empty_model() {
    let m = load_model("<mujoco><worldbody/></mujoco>").unwrap();
    assert_eq!((m.nq, m.nv, m.bodies.len()), (0, 0, 1));
}

proptest! {
    #[test]
    fn limited_ranges_are_ordered(a in -180.0f64..180.0, b in -180.0f64..180.0, slide in any::<bool>()) {
        let kind = if slide { "slide" } else { "hinge" };
        let xml = format!(
            r#"<mujoco><worldbody><body><joint type="{kind}" range="{a} {b}"/><geom size="0.1"/></body></worldbody></mujoco>"#
        );
        match load_model(&xml) {
            Ok(m) => {
                let (lo, hi) = m.joints[0].range.unwrap();
                prop_assert!(a <= b && lo <= hi);
                let scale = if slide { 1.0 } else { std::f64::consts::PI / 180.0 };
                prop_assert!((lo - a * scale).abs() < 1e-12 && (hi - b * scale).abs() < 1e-12);
            }
            Err(_) => prop_assert!(a > b),
        }
    }
}
