//! Running the `soa` binary against the fixtures.
#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::Command;

pub fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

pub struct Run {
    pub code: i32,
    pub report: Vec<u8>,
    pub stderr: String,
}

impl Run {
    pub fn json(&self) -> serde_json::Value {
        serde_json::from_slice(&self.report).expect("report is JSON")
    }
}

/// Runs `soa` with a clean environment apart from `env`, writing the report to `out`.
pub fn soa_env(args: &[&str], env: &[(&str, &str)], out: &Path) -> Run {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_soa"));
    for var in ["SOA_P", "SOA_BUDGET", "SOA_PROBES", "SOA_SEED", "SOA_OUT"] {
        cmd.env_remove(var);
    }
    cmd.envs(env.iter().copied()).args(args).arg("--out").arg(out);
    let output = cmd.output().expect("spawn soa");
    Run {
        code: output.status.code().expect("exit code"),
        report: std::fs::read(out).unwrap_or_default(),
        stderr: String::from_utf8_lossy(&output.stderr).into_owned(),
    }
}

pub fn soa(args: &[&str], out: &Path) -> Run {
    soa_env(args, &[], out)
}

/// Every fixture command that should succeed, as `(fixture, args after the workspace path)`.
pub fn fixture_invocations() -> Vec<(&'static str, Vec<&'static str>)> {
    let mut runs = vec![
        ("terminal.json", vec!["validate"]),
        ("terminal.json", vec!["colim", "--diagram", "three"]),
        ("walking_arrow.json", vec!["validate"]),
        ("walking_arrow.json", vec!["orbits", "--diagram", "collapse"]),
        ("walking_arrow.json", vec!["colim", "--diagram", "collapse"]),
        ("zero_to_sphere.json", vec!["factorize", "--map", "inclusion", "--class", "J"]),
        ("zero_to_sphere.json", vec!["factorize", "--map", "inclusion", "--class", "I"]),
        ("basics.json", vec!["validate"]),
        ("basics.json", vec!["orbits", "--diagram", "through_r"]),
        ("basics.json", vec!["pro-hom", "--source", "set_tower", "--target", "set_const"]),
        ("basics.json", vec!["pro-hom", "--source", "sphere_tower", "--target", "sphere_const"]),
        ("basics.json", vec!["pro-reindex", "--object", "set_span"]),
        ("basics.json", vec!["pro-reindex", "--object", "sphere_tower"]),
        ("basics.json", vec!["pro-levelwise", "--map", "set_collapse"]),
        ("basics.json", vec!["pro-levelwise", "--map", "disk_onto_sphere"]),
    ];
    for map in ["zero_to_sphere", "zero_to_disk", "arrow_inclusion", "disk_to_sphere"] {
        for class in ["I", "J"] {
            runs.push(("basics.json", vec!["factorize", "--map", map, "--class", class]));
        }
    }
    for map in ["disk_onto_sphere", "sphere_tower_to_const"] {
        for class in ["M", "N"] {
            runs.push(("basics.json", vec!["pro-factorize", "--map", map, "--class", class]));
        }
    }
    runs
}

pub fn args_for<'a>(path: &'a str, rest: &[&'a str]) -> Vec<&'a str> {
    let mut args = vec![rest[0], path];
    args.extend_from_slice(&rest[1..]);
    args
}

/// Runs every fixture twice, checks the reports match byte for byte, and
/// feeds each certificate back through `check-lift`. Returns the failures.
pub fn determinism_and_replay(dir: &Path) -> Vec<String> {
    let mut failures = Vec::new();
    for (i, (file, rest)) in fixture_invocations().into_iter().enumerate() {
        let path = fixture(file);
        let path = path.to_str().unwrap();
        let args = args_for(path, &rest);
        let (a, b) = (dir.join(format!("{i}a.json")), dir.join(format!("{i}b.json")));
        let (first, second) = (soa(&args, &a), soa(&args, &b));
        let label = format!("{file} {}", rest.join(" "));
        if first.code != 0 || second.code != 0 {
            failures.push(format!("{label}: exit {} / {}: {}", first.code, second.code, first.stderr.trim()));
            continue;
        }
        if first.report != second.report {
            failures.push(format!("{label}: reports differ"));
        }
        if matches!(rest[0], "factorize" | "pro-factorize") {
            let replay = soa(&["check-lift", a.to_str().unwrap()], &dir.join(format!("{i}c.json")));
            if replay.code != 0 {
                failures.push(format!("{label}: check-lift exit {}: {}", replay.code, replay.stderr.trim()));
            }
        }
    }
    failures
}
