use std::path::Path;
use std::process::{Command, Output, Stdio};

use foliate_cli::{canonical_json, parse_scenario, run_scenario, Report, Stage};

const REFERENCE: &str = r#"{ "f": "y^2 - x^3 + 3x", "omega_dx": "y", "base_point": [0, 0] }"#;

fn foliate(dir: &Path, config: &str, args: &[&str]) -> Output {
    let path = dir.join("config.json");
    std::fs::write(&path, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_foliate"))
        .args(args)
        .arg("--config")
        .arg(&path)
        .stderr(Stdio::piped())
        .output()
        .unwrap()
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        (REFERENCE, 0),
        (r#"{ "f": "y^2 - x^3 + 3x", "omega_dx": "y", "cycles": [1, 1] }"#, 1),
        (r#"{ "f": "y^2 - x^3 + 3x", "omega_dx": "y", "base_point": [2, 0] }"#, 2),
        (r#"{ "f": "y^2 - x^3 + 3x", "omega_dx": "y", "cycles": [1, 7] }"#, 3),
    ];
    for (config, code) in cases {
        let out = foliate(dir.path(), config, &["verify"]);
        assert_eq!(out.status.code(), Some(code), "{config}: {}", String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn config_errors_name_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let out = foliate(dir.path(), "{\n  \"f\": \"y^2 - x^3 + 3x\",\n  \"omega_dx\": \"y\",\n  \"colour\": 1\n}", &["analyze"]);
    assert_eq!(out.status.code(), Some(3));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("line 4") && err.contains("colour"), "{err}");
}

#[test]
fn json_parses_back_to_the_same_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = foliate(dir.path(), REFERENCE, &["verify"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let parsed: Report = serde_json::from_str(&text).unwrap();
    assert_eq!(canonical_json(&parsed), text);
    assert_eq!(parsed, run_scenario(&parse_scenario(REFERENCE).unwrap()));
    assert_eq!(parsed.schema_version, 1);
}

#[test]
fn text_report_has_dynkin_dot() {
    let dir = tempfile::tempdir().unwrap();
    let out = foliate(dir.path(), REFERENCE, &["analyze", "--format", "text", "--stage", "homology"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("graph dynkin {") && text.contains("1 -- 2"), "{text}");
}

#[test]
fn csv_bundle_files() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("bundle");
    let out = foliate(dir.path(), REFERENCE, &["verify", "--format", "csv-bundle", "--out", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    for name in ["periods.csv", "melnikov.csv", "holonomy_d1.csv", "holonomy_d2.csv"] {
        let body = std::fs::read_to_string(out_dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert!(body.lines().count() > 1, "{name}");
    }
    let melnikov = std::fs::read_to_string(out_dir.join("melnikov.csv")).unwrap();
    assert!(melnikov.starts_with("t_re,t_im,M1_"));
    assert_eq!(melnikov.lines().count(), 1 + 8);
}

#[test]
fn disabling_holonomy_leaves_other_stages_unchanged() {
    let full = parse_scenario(REFERENCE).unwrap().with_stages(&Stage::ALL);
    let partial = parse_scenario(REFERENCE).unwrap().with_stages(&[Stage::Melnikov]);
    let (a, b) = (run_scenario(&full), run_scenario(&partial));
    assert!(b.holonomy.is_none() && b.theorem.is_none());
    assert_eq!(a.tameness, b.tameness);
    assert_eq!(a.homology, b.homology);
    assert_eq!(a.periods, b.periods);
    assert_eq!(a.melnikov, b.melnikov);
}

#[test]
fn tolerance_scale_is_echoed() {
    let base = run_scenario(&parse_scenario(REFERENCE).unwrap().with_stages(&[Stage::Tameness]));
    let scaled = run_scenario(&parse_scenario(REFERENCE).unwrap().with_stages(&[Stage::Tameness]).with_tolerance_scale(10.0));
    assert_ne!(base.tolerances, scaled.tolerances);
    assert_ne!(base.provenance.config_hash, scaled.provenance.config_hash);
}

#[test]
fn holonomy_only_loops_must_close() {
    let make = |x: &str| {
        format!(
            r#"{{ "f": "y^2 + x^2*y - x^3 + 3x", "omega_dx": "y", "backend": "holonomy-only",
                 "loops": [{{ "name": "l", "t": 0, "x": {x}, "y0": [0.5, 0.5] }}] }}"#
        )
    };
    let around_pair = run_scenario(&parse_scenario(&make("[[2.2, 0], [1.0, 1.2], [-0.2, 0], [1.0, -1.2]]")).unwrap());
    let run = &around_pair.holonomy.as_ref().unwrap().ok().unwrap().loops[0];
    assert!(run.fits[0].m1.norm() > 1.0);
    let around_one = run_scenario(&parse_scenario(&make("[[0.3, 0], [0, 0.3], [-0.3, 0], [0, -0.3]]")).unwrap());
    assert!(around_one.holonomy.as_ref().unwrap().is_error());
    assert_eq!(around_one.exit_code(), 2);
}
