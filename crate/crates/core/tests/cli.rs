use std::path::Path;
use std::process::{Command, Output};

fn semenov(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_semenov")).args(args).output().unwrap()
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

const SAT: &str = "(declare-int x)(declare-int y)(assert (= x (exp2 y)))(assert (= (+ x (* -1 y)) 2))";

#[test]
fn sat_and_unsat_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "sat.smt", SAT);
    let o = semenov(&["solve", &f, "--model"]);
    assert_eq!(o.status.code(), Some(10));
    assert_eq!(stdout(&o), "sat\n(x 4)\n(y 2)\n");
    let f = write(dir.path(), "unsat.smt", "(declare-int x)(declare-int y)(assert (= x (exp2 y)))(assert (= x 3))");
    let o = semenov(&["solve", &f]);
    assert_eq!(o.status.code(), Some(20));
    assert_eq!(stdout(&o), "unsat\n");
}

#[test]
fn json_output() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "sat.smt", SAT);
    let o = semenov(&["solve", &f, "--model", "--json"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["status"], "sat");
    assert_eq!(v["model"][0]["name"], "x");
    assert_eq!(v["model"][0]["value"], "4");
    assert!(v["stats"]["disjunctsTried"].as_u64().unwrap() >= 1);
}

#[test]
fn usage_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "bad.smt", "(declare-int x)(assert (= x");
    assert_eq!(semenov(&["solve", &f]).status.code(), Some(1));
    assert_eq!(semenov(&["solve", "/nonexistent/file.smt"]).status.code(), Some(1));
}

#[test]
fn certificate_passes_and_tampering_fails() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "sat.smt", SAT);
    let prefix = dir.path().join("out");
    let o = semenov(&["solve", &f, "--fastpath-maxlen", "0", "--write-certificate", prefix.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(10));
    let (m, c) = (prefix.with_extension("lavass"), prefix.with_extension("cert"));
    let o = semenov(&["check", m.to_str().unwrap(), c.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "pass\n");

    let text = std::fs::read_to_string(&c).unwrap();
    let last = text.lines().rfind(|l| l.starts_with("(q")).unwrap().to_string();
    let tampered = text.replace(&last, &last.replacen(',', ",9", 1));
    assert_ne!(tampered, text);
    let bad = write(dir.path(), "bad.cert", &tampered);
    let o = semenov(&["check", m.to_str().unwrap(), &bad]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).starts_with("fail: "), "{}", stdout(&o));
}

#[test]
fn string_files_are_detected() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(
        dir.path(),
        "s.smt",
        "(declare-str s)(declare-int n)(assert (str.in-re s \"1(0|1)*\"))(assert (= (str.to-int s) n))(assert (= n 6))",
    );
    let o = semenov(&["solve", &f, "--model"]);
    assert_eq!(o.status.code(), Some(10));
    assert_eq!(stdout(&o), "sat\n(s \"110\")\n(n 6)\n");
}

#[test]
fn selftest_passes() {
    let o = semenov(&["selftest"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
}
