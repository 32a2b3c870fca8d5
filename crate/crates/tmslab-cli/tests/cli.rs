//! End-to-end checks of the command-line front end: byte-identical
//! artifacts for identical configs, exact CSV headers, and the exit-code
//! contract (1 parse, 2 precondition, 3 numeric).

use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_tmslab")
}

fn run_in(dir: &std::path::Path, args: &[&str]) -> Output {
    Command::new(bin())
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn tmpdir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("tmslab-cli-{tag}-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn pressure_prints_log_two() {
    let dir = tmpdir("pressure");
    let out = run_in(&dir, &["pressure", "--graph", "builtin:full:2"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(
        text.starts_with("0.693147180559945"),
        "unexpected output {text:?}"
    );
}

#[test]
fn spr_reports_golden_entropy() {
    let dir = tmpdir("spr");
    let out = run_in(
        &dir,
        &["spr", "--graph", "loop:{f:{1:1,2:1}}", "--tol", "1e-12"],
    );
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("SPR = true"));
    assert!(text.contains("h = 0.4812118250"), "{text}");
}

#[test]
fn csv_headers_are_exact() {
    let dir = tmpdir("headers");
    let cases = [
        (
            vec!["curve", "--graph", "builtin:full:2", "--grid", "-1:1:5"],
            "curve.csv",
            "t,p,p1,p2_fd,p2_gk",
        ),
        (
            vec!["legendre", "--graph", "builtin:full:2", "--window", "0.02"],
            "legendre.csv",
            "a,t_of_a,q,q1,q2",
        ),
        (
            vec!["ekp-scan", "--graph", "builtin:full:2"],
            "ekp_scan.csv",
            "provenance,int_psi_mu,int_psi_m,P_mu,P_G,gap,ratio,sigma,holder_norm",
        ),
    ];
    for (args, file, header) in cases {
        let out = run_in(&dir, &args);
        assert!(out.status.success(), "{args:?}: {:?}", out.stderr);
        let content = std::fs::read_to_string(dir.join(file)).unwrap();
        assert_eq!(content.lines().next().unwrap(), header);
    }
}

#[test]
fn identical_config_gives_byte_identical_csv() {
    let d1 = tmpdir("det1");
    let d2 = tmpdir("det2");
    let args = [
        "ekp-scan",
        "--graph",
        "builtin:golden",
        "--seed",
        "11",
        "--json",
    ];
    let o1 = run_in(&d1, &args);
    let o2 = run_in(&d2, &args);
    assert!(o1.status.success() && o2.status.success());
    let c1 = std::fs::read(d1.join("ekp_scan.csv")).unwrap();
    let c2 = std::fs::read(d2.join("ekp_scan.csv")).unwrap();
    assert_eq!(c1, c2, "CSV must be byte-identical for identical configs");
    assert_eq!(o1.stdout, o2.stdout);
    let j1 = std::fs::read_to_string(d1.join("ekp_scan.json")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&j1).unwrap();
    for field in ["empirical_C", "sharp_limit", "battery_id"] {
        assert!(v.get(field).is_some(), "summary JSON needs {field}");
    }
}

#[test]
fn exit_codes_match_error_classes() {
    let dir = tmpdir("exit");
    // parse error -> 1
    let out = run_in(&dir, &["pressure", "--graph", "builtin:nope"]);
    assert_eq!(out.status.code(), Some(1));
    // precondition violation -> 2 (loop command fed a graph)
    let out = run_in(&dir, &["escape", "--graph", "builtin:full:2"]);
    assert_eq!(out.status.code(), Some(2));
    // degenerate direction -> 2
    let out = run_in(
        &dir,
        &[
            "sharpness",
            "--graph",
            "builtin:full:2",
            "--observable",
            "const:1",
        ],
    );
    assert_eq!(out.status.code(), Some(2));
    // non-transitive graph -> 2
    let disconnected = r#"{"type":"finite","states":["1","2"],"edges":[["1","1"],["2","2"]]}"#;
    let out = run_in(&dir, &["curve", "--graph", disconnected]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn zsplit_reports_exact_identities() {
    let dir = tmpdir("zsplit");
    let out = run_in(&dir, &["zsplit", "--graph", "builtin:golden", "--cap", "10"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("all identities exact: true"));
    let content = std::fs::read_to_string(dir.join("zsplit.csv")).unwrap();
    assert_eq!(content.lines().next().unwrap(), "n,total,e0,e1,core,sub0,sub1,ok");
}

#[test]
fn escape_bounds_non_spr_pressure() {
    let dir = tmpdir("escape");
    let out = run_in(
        &dir,
        &[
            "escape",
            "--graph",
            "loop:{f:{},tail:{c:0.05,rho:0.25,alpha:3.0,from:2}}",
            "--cap",
            "64",
        ],
    );
    assert!(out.status.success(), "{:?}", out.stderr);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("pressure-at-infinity lower bound"));
    assert!(text.contains("gurevich entropy = 1.38629436111989"));
}
