use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn warpcurv(args: &[&str], env_out: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_warpcurv"));
    cmd.args(args).env_remove("WARPCURV_OUT");
    if let Some(p) = env_out {
        cmd.env("WARPCURV_OUT", p);
    }
    cmd.output().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn summary(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const BUMP: &str = r#"
[ambient]
profile = "cosh"
chart = "sphere"
n = 2
[immersion]
family = "bump"
t0 = 1.0
amplitude = 0.1
resolution = 12
[[operations]]
op = "theorem"
theorem = "compact-h2"
"#;

#[test]
fn theorem_audit_config_exits_zero_with_reports() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("r");
    let cfg = config("theorem-audit.toml");
    let o = warpcurv(&["scenario", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let s = summary(&out);
    assert_eq!(s["exit_code"], 0);
    assert_eq!(s["command"], "scenario");
    for f in ["00-theorem.json", "00-theorem.csv", "01-theorem.json", "02-estimate.json", "02-estimate.csv"] {
        assert!(out.join(f).is_file(), "{f}");
    }
    let csv = fs::read_to_string(out.join("00-theorem.csv")).unwrap();
    assert!(csv.starts_with("scenario,section,check,pass,margin,verdict\n"));
    assert!(csv.contains("consistent"));
}

#[test]
fn violated_tolerance_exits_one() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config("slice-identities.toml");
    let o = warpcurv(
        &["verify", "--config", cfg.to_str().unwrap(), "--tol", "1e-300", "--out", tmp.path().to_str().unwrap()],
        None,
    );
    assert_eq!(o.status.code(), Some(1));
    let s = summary(tmp.path());
    assert_eq!(s["exit_code"], 1);
    assert!(s["violations"].as_u64().unwrap() >= 1);
    assert_eq!(s["operations"][0]["status"], "violation");
}

#[test]
fn unknown_profile_exits_two_naming_registry() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "bad.toml", "[ambient]\nprofile = \"nope\"\n[[operations]]\nop = \"curvature\"\n");
    let o = warpcurv(&["verify", "--config", cfg.to_str().unwrap(), "--out", tmp.path().to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(2));
    let e = stderr(&o);
    assert!(e.contains("unknown warping profile 'nope'"), "{e}");
    assert!(e.contains("exp") && e.contains("cosh"), "{e}");
    assert!(!tmp.path().join("summary.json").exists());
}

#[test]
fn unknown_growth_exits_two() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "bad.toml", "[[operations]]\nop = \"comparison\"\ngrowth = \"cubic\"\n");
    let o = warpcurv(&["comparison", "--config", cfg.to_str().unwrap(), "--out", tmp.path().to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("growth function 'cubic'"), "{}", stderr(&o));
}

#[test]
fn schema_errors_exit_two() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().to_str().unwrap();
    let cases = [
        ("field.toml", "[[operations]]\nop = \"comparison\"\nbogus = 1\n", "comparison"),
        ("mismatch.toml", "[[operations]]\nop = \"probe\"\n", "verify"),
        ("op.toml", "[[operations]]\nop = \"nonsense\"\n", "verify"),
        (
            "family.toml",
            "[ambient]\nprofile = \"exp\"\n[immersion]\nfamily = \"spiral\"\n[[operations]]\nop = \"signs\"\n",
            "scenario",
        ),
    ];
    for (name, text, cmd) in cases {
        let cfg = write(tmp.path(), name, text);
        let o = warpcurv(&[cmd, "--config", cfg.to_str().unwrap(), "--out", out], None);
        assert_eq!(o.status.code(), Some(2), "{name}: {}", stderr(&o));
        assert!(stderr(&o).starts_with("error: "), "{name}");
    }
}

#[test]
fn missing_config_exits_two() {
    let o = warpcurv(&["probe", "--config", "/nonexistent/warpcurv.toml"], None);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("/nonexistent/warpcurv.toml"));
}

#[test]
fn not_applicable_only_is_reported() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "bump.toml", BUMP);
    let out = tmp.path().join("r");
    let o = warpcurv(&["scenario", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stdout).contains("not applicable"));
    let s = summary(&out);
    assert_eq!(s["not_applicable_only"], true);
    assert_eq!(s["operations"][0]["status"], "not-applicable");
    let r: Value = serde_json::from_str(&fs::read_to_string(out.join("00-theorem.json")).unwrap()).unwrap();
    assert_eq!(r["verdict"], "hypothesis-violated");
}

#[test]
fn output_directory_precedence() {
    let tmp = tempfile::tempdir().unwrap();
    let env_dir = tmp.path().join("from-env");
    let cfg_dir = tmp.path().join("from-config");
    let flag_dir = tmp.path().join("from-flag");
    let plain = write(tmp.path(), "plain.toml", "[[operations]]\nop = \"cond-g\"\n");
    let with_dir = write(
        tmp.path(),
        "dir.toml",
        &format!("[output]\ndir = \"{}\"\n[[operations]]\nop = \"cond-g\"\n", cfg_dir.display()),
    );

    let o = warpcurv(&["comparison", "--config", plain.to_str().unwrap()], Some(&env_dir));
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(env_dir.join("summary.json").is_file());

    warpcurv(&["comparison", "--config", with_dir.to_str().unwrap()], Some(&env_dir));
    assert!(cfg_dir.join("summary.json").is_file());

    warpcurv(
        &["comparison", "--config", with_dir.to_str().unwrap(), "--out", flag_dir.to_str().unwrap()],
        Some(&env_dir),
    );
    assert!(flag_dir.join("summary.json").is_file());
}

#[test]
fn overrides_are_recorded_in_summary() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config("slice-identities.toml");
    let o = warpcurv(
        &[
            "verify",
            "--config",
            cfg.to_str().unwrap(),
            "--seed",
            "77",
            "--refine",
            "3",
            "--out",
            tmp.path().to_str().unwrap(),
        ],
        None,
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let s = summary(tmp.path());
    assert_eq!(s["seed"], 77);
    assert_eq!(s["config"]["operations"][1]["levels"], 3);
    let r: Value = serde_json::from_str(&fs::read_to_string(tmp.path().join("01-identities.json")).unwrap()).unwrap();
    assert_eq!(r["resolutions"], serde_json::json!([16, 32, 64]));
    assert_eq!(r["pass"], true);

    let o = warpcurv(&["verify", "--config", cfg.to_str().unwrap(), "--refine", "2"], None);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("levels"), "{}", stderr(&o));
}

#[test]
fn reruns_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config("probe.toml");
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for d in [&a, &b] {
        let o = warpcurv(&["probe", "--config", cfg.to_str().unwrap(), "--out", d.to_str().unwrap()], None);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    let mut names: Vec<_> = fs::read_dir(&a).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert!(!names.is_empty());
    for n in names {
        assert_eq!(fs::read(a.join(&n)).unwrap(), fs::read(b.join(&n)).unwrap(), "{n:?}");
    }
}

#[test]
fn defaults_run_without_config() {
    let tmp = tempfile::tempdir().unwrap();
    for cmd in ["probe", "comparison"] {
        let out = tmp.path().join(cmd);
        let o = warpcurv(&[cmd, "--out", out.to_str().unwrap()], None);
        assert_eq!(o.status.code(), Some(0), "{cmd}: {}", stderr(&o));
        assert_eq!(summary(&out)["command"], cmd);
    }
}
