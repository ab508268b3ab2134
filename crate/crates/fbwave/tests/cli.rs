//! End-to-end checks of the command-line front end: exit-code contract,
//! output layout, manifests, and byte determinism.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_fbwave");

const CUBIC_SCENARIO: &str = r#"
[velocity]
kind = "quadratic"
v_max = 1.0

[diffusivity]
kind = "hv_squared"
h = 1.0
sigma = 0.020833333333333332

[wave]
l_plus = 0.9045084971874737
"#;

const KLADEK_SCENARIO: &str = r#"
[velocity]
kind = "kladek"
v_max = 1.0
gamma = 1.0

[diffusivity]
kind = "delta_only"
delta = 1.0

[wave]
l_plus = 0.9
"#;

const REVERSED_SCENARIO: &str = r#"
[velocity]
kind = "exponential_a"
v_max = 1.0
gamma = 3.0
a = 0.5

[diffusivity]
kind = "nelson_delta_tau"
delta = 2.857142857142857
tau = 1.0

[wave]
l_minus = 0.52
"#;

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).env("FBWAVE_THREADS", "2").output().expect("binary runs")
}

fn write_scenario(dir: &Path, text: &str) -> String {
    let path = dir.join("scenario.toml");
    fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn signs_succeeds_and_writes_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_scenario(dir.path(), CUBIC_SCENARIO);
    let out = dir.path().join("out");
    let res = run(&["signs", "--config", &config, "--out", out.to_str().unwrap()]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));

    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "signs");
    let outputs = manifest["outputs"].as_array().unwrap();
    assert_eq!(outputs[0]["name"], "signs.json");
    // recorded checksum matches the bytes on disk
    let bytes = fs::read(out.join("signs.json")).unwrap();
    let digest = hex::encode(<sha2::Sha256 as sha2::Digest>::digest(&bytes));
    assert_eq!(outputs[0]["sha256"], serde_json::Value::String(digest));
    // report carries the classification
    let signs: serde_json::Value =
        serde_json::from_str(&String::from_utf8_lossy(&bytes)).unwrap();
    assert!(signs["pattern"]["classification"]["D1"]["alpha"].as_f64().is_some());
}

#[test]
fn malformed_scenario_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_scenario(dir.path(), "velocity = \"not a table\"\n");
    let out = dir.path().join("out");
    let res = run(&["signs", "--config", &config, "--out", out.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(2), "{}", String::from_utf8_lossy(&res.stderr));

    // missing file is a config error too
    let res = run(&["signs", "--config", "/nonexistent.toml", "--out", out.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(2));

    // conflicting wave selectors
    let config = write_scenario(
        dir.path(),
        &format!("{CUBIC_SCENARIO}l_minus = 0.2\n"),
    );
    let res = run(&["signs", "--config", &config, "--out", out.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(2));
}

#[test]
fn refused_existence_exits_3() {
    // strictly concave flux: the positive-interior pattern admits no front
    // crossing a sign change
    let dir = tempfile::tempdir().unwrap();
    let config = write_scenario(dir.path(), KLADEK_SCENARIO);
    let out = dir.path().join("out");
    let res = run(&["endstates", "--config", &config, "--out", out.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(3), "{}", String::from_utf8_lossy(&res.stderr));
    let res = run(&["existence", "--config", &config, "--out", out.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(3));
}

#[test]
fn viscosity_on_decreasing_front_exits_4() {
    // the reversed scenario is accepted as a decreasing front, but the
    // viscous family is only defined for increasing single-crossing fronts
    let dir = tempfile::tempdir().unwrap();
    let config = write_scenario(dir.path(), REVERSED_SCENARIO);
    let out = dir.path().join("out");
    let res = run(&["existence", "--config", &config, "--out", out.to_str().unwrap()]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let res = run(&["viscosity", "--config", &config, "--out", out.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(4), "{}", String::from_utf8_lossy(&res.stderr));
}

#[test]
fn decreasing_profile_runs_through_the_cli() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_scenario(dir.path(), REVERSED_SCENARIO);
    let out = dir.path().join("out");
    let res = run(&["profile", "--config", &config, "--out", out.to_str().unwrap()]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let meta: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("profile_meta.json")).unwrap()).unwrap();
    assert_eq!(meta["increasing"], false);
}

#[test]
fn identical_scenarios_reproduce_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_scenario(dir.path(), CUBIC_SCENARIO);
    let (out1, out2) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&out1, &out2] {
        let res = run(&["profile", "--config", &config, "--out", out.to_str().unwrap()]);
        assert!(res.status.success());
        let res = run(&["viscosity", "--config", &config, "--out", out.to_str().unwrap()]);
        assert!(res.status.success());
    }
    for name in ["profile.csv", "profile_meta.json", "viscosity_family.csv", "manifest.json"] {
        let a = fs::read(out1.join(name)).unwrap();
        let b = fs::read(out2.join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between runs");
    }
}

#[test]
fn profile_csv_has_full_precision_and_plateau_blanks() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_scenario(
        dir.path(),
        &format!("{CUBIC_SCENARIO}\n[plateau]\nxi1 = 2.0\n"),
    );
    let out = dir.path().join("out");
    let res = run(&["profile", "--config", &config, "--out", out.to_str().unwrap()]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let csv = fs::read_to_string(out.join("profile.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "xi,phi,dphi_dxi");
    let mut blank_dphi = 0;
    for line in lines {
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(fields.len(), 3);
        // 17 significant digits survive a parse round trip
        let xi: f64 = fields[0].parse().unwrap();
        assert_eq!(format!("{xi:.16e}"), fields[0]);
        if fields[2].is_empty() {
            blank_dphi += 1;
        }
    }
    // the plateau endpoints carry no derivative
    assert!(blank_dphi >= 2, "expected blank dphi on plateau nodes");
}

#[test]
fn reproduce_rejects_unknown_tag() {
    let dir = tempfile::tempdir().unwrap();
    let res = run(&["reproduce", "fig9", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(2));
}
