use std::path::PathBuf;

use cprob::scenarios::{
    build_mach_zehnder, build_two_slit, build_which_path, parse_scenario, run, serialize, Slits,
    TwoSlitGeometry,
};
use cprob::Scenario64;

fn load(name: &str) -> Scenario64 {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name);
    parse_scenario(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn fixtures_match_builders() {
    assert_eq!(load("mach_zehnder.scn"), build_mach_zehnder());
    assert_eq!(load("which_path.scn"), build_which_path(1.0).unwrap());
    assert_eq!(
        load("two_slit.scn"),
        build_two_slit(&TwoSlitGeometry::default(), Slits::Both).unwrap()
    );
}

#[test]
fn broken_fixture_is_rejected() {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/broken.scn");
    let err = parse_scenario::<f64>(&std::fs::read_to_string(path).unwrap()).unwrap_err();
    let msg = err.to_string();
    assert!(msg.contains("m2") && msg.contains("S2"), "{msg}");
}

#[test]
fn serialization_is_idempotent() {
    for name in ["mach_zehnder.scn", "which_path.scn", "two_slit.scn"] {
        let s = load(name);
        let once = serialize(&s);
        let back: Scenario64 = parse_scenario(&once).unwrap();
        assert_eq!(back, s, "{name}");
        assert_eq!(serialize(&back), once, "{name}");
    }
}

#[test]
fn explicit_and_builder_forms_agree() {
    let mut s = load("which_path.scn");
    s.builder = None;
    let explicit: Scenario64 = parse_scenario(&serialize(&s)).unwrap();
    assert!(explicit.builder.is_none());
    assert_eq!(run(&explicit).unwrap().queries, run(&s).unwrap().queries);
}
