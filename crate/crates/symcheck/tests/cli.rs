//! Exit-status and output-format contract of the command-line front end.

use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_symcheck"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn holding_property_exits_zero() {
    let out = run(&["--bench", "mutex:3", "--algo", "comp", "--oracle-check"]);
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let text = stdout(&out);
    assert!(text.contains("oracle_check"));
    assert!(text.contains("PASS"));
}

#[test]
fn algorithms_agree_on_representative_counts() {
    let mono = stdout(&run(&["--bench", "mutex:3", "--algo", "mono", "--format", "structured"]));
    let comp = stdout(&run(&["--bench", "mutex:3", "--algo", "comp", "--format", "structured"]));
    let count = |s: &str, key: &str| {
        s.lines()
            .find(|l| l.starts_with(key))
            .map(str::to_string)
            .unwrap_or_default()
            .split('=')
            .nth(1)
            .unwrap()
            .to_string()
    };
    assert_eq!(count(&mono, "mono.representatives"), count(&comp, "comp.representatives"));
}

#[test]
fn violation_exits_one_with_witness() {
    let model = "model broken\n\
                 type Proc count 2 locals N T C init N\n\
                 global tok idsensitive Proc init any\n\
                 command Proc try from N to T\n\
                 command Proc enter from T to C\n\
                 command Proc leave from C to N update tok := any\n\
                 property mutex_safe bad count(Proc, C) >= 2\n";
    let dir = std::env::temp_dir().join("symcheck-cli-test");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("broken.model");
    std::fs::write(&path, model).unwrap();
    let out = run(&[path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1), "{out:?}");
    let text = stdout(&out);
    assert!(text.contains("violated"));
    assert!(text.contains("witness"));
}

#[test]
fn resource_exhaustion_exits_two() {
    let out = run(&["--bench", "mutex:4", "--node-cap", "1"]);
    assert_eq!(out.status.code(), Some(2), "{out:?}");
}

#[test]
fn usage_errors_exit_three() {
    assert_eq!(run(&["/nonexistent/file.model"]).status.code(), Some(3));
    assert_eq!(run(&["--bench", "mutex:oops"]).status.code(), Some(3));
    assert_eq!(run(&["--bench", "mutex:3", "--algo", "warp"]).status.code(), Some(3));
    assert_eq!(run(&[]).status.code(), Some(3));
}

#[test]
fn structured_output_is_stable_modulo_times() {
    let strip = |s: String| {
        s.lines()
            .filter(|l| !l.contains("_ms="))
            .collect::<Vec<_>>()
            .join("\n")
    };
    let a = strip(stdout(&run(&["--bench", "rw:2,2", "--format", "structured"])));
    let b = strip(stdout(&run(&["--bench", "rw:2,2", "--format", "structured"])));
    assert_eq!(a, b);
    assert!(a.contains("verdict=holds"));
}

#[test]
fn emitted_model_reparses_to_the_same_run() {
    let dir = std::env::temp_dir().join("symcheck-cli-test");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("emitted.model");
    let direct =
        stdout(&run(&["--bench", "mutex:3", "--format", "structured", "--emit-model", path.to_str().unwrap()]));
    let reread = stdout(&run(&[path.to_str().unwrap(), "--format", "structured"]));
    let strip = |s: &str| {
        s.lines().filter(|l| !l.contains("_ms=")).collect::<Vec<_>>().join("\n")
    };
    assert_eq!(strip(&direct), strip(&reread));
}
