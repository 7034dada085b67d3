use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn inflap(action: &str, config: &str, dir: &Path, extra: &[&str]) -> Output {
    let cfg = dir.join("config.json");
    fs::write(&cfg, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_inflap"))
        .arg(action)
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(dir)
        .args(extra)
        .output()
        .unwrap()
}

fn report(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

fn num(v: &Value) -> f64 {
    v.as_f64().unwrap_or_else(|| panic!("not a number: {v}"))
}

fn ball(radius: f64, rhs: &str, extra: &str) -> String {
    format!(
        r#"{{
            "problem": {{
                "domain": {{"kind": "ball", "center": [0, 0], "radius": {radius}}},
                "rhs": "{rhs}",
                "boundary": {{"constant": 0}}
            }}{extra}
        }}"#
    )
}

#[test]
fn criteria_on_negative_exponential() {
    let dir = tempfile::tempdir().unwrap();
    let out = inflap("criteria", &ball(1.0, "(neg (exp t))", ""), dir.path(), &["--h", "0.125"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = report(dir.path());
    let crit = &r["criteria"];
    let want = (3.0 / (inflap::SIGMA * std::f64::consts::E)).powf(0.75);
    assert!((num(&crit["diam_threshold"]["value"]) - want).abs() < 1e-6 * want);
    assert!((want - 1.0151).abs() < 1e-4);
    assert!(crit["nonexistence"]["m_f"].is_number());
    assert!(crit["nonexistence"]["radius"].is_number());
    assert!(crit["verdicts"].as_array().unwrap().iter().any(|v| v["theorem"] == "nonexistence_large_inradius"));
}

#[test]
fn family_exports_profile_and_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ball(1.0, "0", r#", "family": {"gamma": 7, "k": 2}"#);
    let out = inflap("family", &cfg, dir.path(), &["--h", "0.0625"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = report(dir.path());
    let a = num(&r["family"]["a"]);
    assert!((num(&r["family"]["sup_norm"]) - 3.0 * a).abs() < 1e-10 * a);
    let field = fs::read_to_string(dir.path().join("field.csv")).unwrap();
    assert!(field.starts_with("x0,x1,value\n"));
    let profile = fs::read_to_string(dir.path().join("profile.csv")).unwrap();
    assert!(profile.lines().count() > 100);
}

#[test]
fn probe_on_large_ball_diverges() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ball(3.0, "(neg (exp t))", r#", "solve": {"alarm_bound": 50}"#);
    let out = inflap("probe", &cfg, dir.path(), &["--h", "0.25"]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(report(dir.path())["probe"]["status"], "diverged_past_alarm");
}

#[test]
fn probe_without_alarm_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = inflap("probe", &ball(3.0, "(neg (exp t))", ""), dir.path(), &["--h", "0.25"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn unknown_key_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let out = inflap("solve", &ball(1.0, "0", r#", "solve": {"tolrance": 1e-6}"#), dir.path(), &[]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("tolrance"), "{err}");
}

#[test]
fn action_mismatch_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = inflap("solve", &ball(1.0, "0", r#", "action": "probe""#), dir.path(), &[]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn solve_reports_are_reproducible() {
    let cfg = ball(1.0, "1", "");
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        let out = inflap("solve", &cfg, d.path(), &["--h", "0.125"]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let ra = fs::read(a.path().join("report.json")).unwrap();
    let rb = fs::read(b.path().join("report.json")).unwrap();
    assert_eq!(ra, rb);
    let text = String::from_utf8(ra).unwrap();
    assert!(text.contains("e-") || text.contains("e+"));
    assert_eq!(report(a.path())["solve"]["status"], "converged");
}

#[test]
fn radial_profile_for_exponential() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ball(1.0, "(exp t)", r#", "radial": {"a": 1, "prefactor": "inv_sqrt2"}"#);
    let out = inflap("radial", &cfg, dir.path(), &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = &report(dir.path())["radial"];
    assert!((num(&r["radius"]) - num(&r["zeta"])).abs() < 1e-8 * num(&r["zeta"]));
    assert!(num(&r["max_ode_residual"]) < 1e-4);
    assert_eq!(r["decreasing"], true);
}

#[test]
fn perron_and_verify_on_small_ball() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ball(0.5, "(neg (exp t))", "");
    let out = inflap("perron", &cfg, dir.path(), &["--h", "0.0625"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(report(dir.path())["solve"]["status"], "converged");

    let cfg = ball(1.0, "t", r#", "problem_note": 1"#);
    let out = inflap("verify", &cfg, dir.path(), &[]);
    assert_eq!(out.status.code(), Some(1));

    let cfg = ball(1.0, "(add t 1)", "");
    let out = inflap("verify", &cfg, dir.path(), &["--h", "0.125", "--seed", "7"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = report(dir.path());
    assert_eq!(r["all_passed"], true);
    assert!(!r["checks"].as_array().unwrap().is_empty());
}
