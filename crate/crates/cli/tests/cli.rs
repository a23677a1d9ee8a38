use serde_json::Value;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_orlicz-moser"));
    c.env_remove("ORLICZ_MOSER_OUT");
    c
}

fn run(args: &[&str], out: &Path) -> Output {
    bin().args(args).arg("--out").arg(out).output().expect("binary runs")
}

fn summary(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).expect("stdout is JSON")
}

#[test]
fn young_check_m2() {
    let d = tempfile::tempdir().unwrap();
    let o = run(&["young", "check", "--m", "2"], d.path());
    assert_eq!(o.status.code(), Some(0));
    let s = summary(&o);
    assert_eq!(s["metrics"]["ln_e"], 4.0);
    assert_eq!(s["metrics"]["ln_f"], 9.0);
    for f in ["branch_continuous", "extension_condition", "submultiplicative"] {
        assert_eq!(s["flags"][f], true, "{f}");
    }
    let on_disk: Value = serde_json::from_str(&fs::read_to_string(d.path().join("young-check.json")).unwrap()).unwrap();
    assert_eq!(on_disk, s);
}

#[test]
fn recurrence_table() {
    let d = tempfile::tempdir().unwrap();
    let o = run(&["recurrence", "run", "--m", "3", "--K", "2.718", "--gamma", "4", "--b1-theta", "2", "--N", "10000"], d.path());
    assert_eq!(o.status.code(), Some(0));
    let s = summary(&o);
    let cm = s["metrics"]["minimal_cm"].as_f64().unwrap();
    assert!(cm > 0.0 && cm.is_finite());
    assert_eq!(s["flags"]["dominated"], true);
    let csv = fs::read_to_string(d.path().join("recurrence-run.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("n,beta,excess"));
    assert_eq!(lines.count(), 10_000);
}

#[test]
fn sobolev_failure_increasing() {
    let d = tempfile::tempdir().unwrap();
    let o = run(&["sobolev", "failure", "--m", "3", "--k", "1", "--sigma", "1.5", "--eps", "0.1,0.05,0.025,0.0125"], d.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let s = summary(&o);
    assert_eq!(s["flags"]["increasing"], true);
    assert_eq!(s["flags"]["diverges"], true);
    let csv = fs::read_to_string(d.path().join("sobolev-failure.csv")).unwrap();
    assert!(csv.starts_with("eps,ln_lhs,rhs,ln_ratio\n"));
    assert_eq!(csv.lines().count(), 5);
}

#[test]
fn ball_profile_columns_and_empty_set() {
    let d = tempfile::tempdir().unwrap();
    let o = run(&["metric", "profile", "--radii", "0.3,0.2,0.1"], d.path());
    assert_eq!(o.status.code(), Some(0));
    let csv = fs::read_to_string(d.path().join("metric-profile.csv")).unwrap();
    assert!(csv.starts_with("r,vol,delta0,nu0\n"));
    assert_eq!(csv.lines().count(), 4);

    let cfg = d.path().join("empty.json");
    fs::write(&cfg, r#"{"radii": []}"#).unwrap();
    let e = d.path().join("empty");
    let o = run(&["metric", "profile", "--config", cfg.to_str().unwrap()], &e);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(fs::read_to_string(e.join("metric-profile.csv")).unwrap(), "r,vol,delta0,nu0\n");
}

#[test]
fn solver_reports_empirical_and_comparator() {
    let d = tempfile::tempdir().unwrap();
    let o = run(&["solver", "run", "--n", "64", "--coef", "degenerate"], d.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let s = summary(&o);
    for k in ["max_principle.excess", "caccioppoli.constant", "local_bound.ratio", "local_bound.comparator_scale", "moser.k_min"] {
        assert!(s["metrics"][k].as_f64().is_some(), "{k}");
    }
    assert_eq!(s["flags"]["m_matrix"], true);
    assert_eq!(s["flags"]["max_principle"], true);
}

#[test]
fn reruns_are_byte_identical() {
    let d = tempfile::tempdir().unwrap();
    let (a, b) = (d.path().join("a"), d.path().join("b"));
    let args = ["sobolev", "ratio", "--n", "96"];
    assert_eq!(run(&args, &a).status.code(), Some(0));
    assert_eq!(run(&args, &b).status.code(), Some(0));
    for f in ["sobolev-ratio.csv", "sobolev-ratio.json"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn config_file_and_flag_precedence() {
    let d = tempfile::tempdir().unwrap();
    let cfg = d.path().join("c.json");
    fs::write(&cfg, r#"{"m": 3, "variant": "phi_tilde", "out": "ignored-by-flag"}"#).unwrap();
    let o = run(&["young", "check", "--config", cfg.to_str().unwrap(), "--m", "2.5"], d.path());
    assert_eq!(o.status.code(), Some(0));
    let s = summary(&o);
    assert_eq!(s["params"]["m"], 2.5);
    assert_eq!(s["params"]["variant"], "phi_tilde");
    assert!(d.path().join("young-check.csv").exists());
}

#[test]
fn env_overrides_config_out() {
    let d = tempfile::tempdir().unwrap();
    let cfg = d.path().join("c.json");
    let from_cfg = d.path().join("cfg");
    let from_env = d.path().join("env");
    fs::write(&cfg, format!(r#"{{"out": {:?}}}"#, from_cfg.to_str().unwrap())).unwrap();
    let o = bin()
        .args(["young", "check", "--config", cfg.to_str().unwrap()])
        .env("ORLICZ_MOSER_OUT", &from_env)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert!(from_env.join("young-check.json").exists());
    assert!(!from_cfg.exists());

    let o = bin().args(["young", "check", "--config", cfg.to_str().unwrap()]).output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert!(from_cfg.join("young-check.json").exists());
}

#[test]
fn unknown_config_key_rejected() {
    let d = tempfile::tempdir().unwrap();
    let cfg = d.path().join("c.json");
    fs::write(&cfg, r#"{"m": 2, "mm": 3}"#).unwrap();
    let o = run(&["young", "check", "--config", cfg.to_str().unwrap()], d.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("mm"));
}

#[test]
fn precondition_exit_code() {
    let d = tempfile::tempdir().unwrap();
    // m = 1 is outside the admissible range
    let o = run(&["young", "check", "--m", "1"], d.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(!o.stderr.is_empty());
    let o = run(&["recurrence", "run", "--m", "3", "--K", "0.5"], d.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn unwritable_output_is_io_error() {
    let d = tempfile::tempdir().unwrap();
    let blocker = d.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let o = run(&["young", "check"], &blocker.join("sub"));
    assert_eq!(o.status.code(), Some(4));
}
