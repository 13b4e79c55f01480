//! End-to-end checks of the command-line runner: catalog size,
//! deterministic outputs, and the exit-code contract.

use std::path::PathBuf;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_parakac"))
}

fn tmp(name: &str) -> PathBuf {
    std::env::temp_dir().join(format!("parakac-cli-{}-{name}", std::process::id()))
}

#[test]
fn list_prints_full_catalog() {
    let out = bin().arg("list").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines.len() >= 7, "catalog too small:\n{text}");
    for name in [
        "heat_atom_1d",
        "drift_nonsym_1d",
        "frac_const_1d",
        "frac_variable_1d",
        "semilinear_cubic",
        "capacity_demo",
        "delta_weight_demo",
    ] {
        assert!(text.contains(name), "missing {name}");
    }
}

#[test]
fn reruns_are_byte_identical() {
    let (d1, d2) = (tmp("a"), tmp("b"));
    for d in [&d1, &d2] {
        let st = bin()
            .args(["run", "heat_atom_1d", "--paths", "300", "--seed", "1"])
            .arg("--out")
            .arg(d)
            .status()
            .unwrap();
        assert_eq!(st.code(), Some(0));
    }
    for f in ["u_direct.csv", "u_mc.csv", "residuals.csv", "estimates.csv", "structural.csv"] {
        let a = std::fs::read(d1.join(f)).unwrap();
        let b = std::fs::read(d2.join(f)).unwrap();
        assert_eq!(a, b, "{f} differs between identical runs");
    }
    let _ = std::fs::remove_dir_all(&d1);
    let _ = std::fs::remove_dir_all(&d2);
}

#[test]
fn missing_field_is_an_input_error_naming_the_field() {
    let cfg = tmp("noT.cfg");
    std::fs::write(
        &cfg,
        "name = broken\ngrid = interval\nsteps = 4\noperator = divergence_drift\nterminal = const 1\n",
    )
    .unwrap();
    let out = bin().arg("run").arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains('T'), "error should name the missing field: {err}");
    let _ = std::fs::remove_file(&cfg);
}

#[test]
fn bad_line_is_an_input_error_with_its_number() {
    let cfg = tmp("badline.cfg");
    std::fs::write(&cfg, "name = x\nwat\n").unwrap();
    let out = bin().arg("run").arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("line 2"), "error should carry the line number: {err}");
    let _ = std::fs::remove_file(&cfg);
}

#[test]
fn unknown_scenario_is_an_input_error() {
    let out = bin().args(["run", "no_such_scenario"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unknown_suite_is_an_input_error() {
    let out = bin().args(["check", "bogus"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn every_catalog_entry_exits_clean_with_reduced_sampling() {
    let out_root = tmp("catalog");
    let list = bin().arg("list").output().unwrap();
    let text = String::from_utf8(list.stdout).unwrap();
    for line in text.lines() {
        let name = line.split_whitespace().next().unwrap();
        let st = bin()
            .args(["run", name, "--paths", "400"])
            .arg("--out")
            .arg(out_root.join(name))
            .status()
            .unwrap();
        assert_eq!(st.code(), Some(0), "{name} failed");
        for f in ["u_direct.csv", "u_mc.csv", "residuals.csv", "estimates.csv", "structural.csv"] {
            assert!(out_root.join(name).join(f).exists(), "{name}/{f} missing");
        }
    }
    let _ = std::fs::remove_dir_all(&out_root);
}
