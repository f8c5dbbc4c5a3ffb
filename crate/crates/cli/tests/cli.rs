use std::path::PathBuf;
use std::process::{Command, Output};

fn six_node() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/six_node.lve")
}

fn lve(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lve")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn write(dir: &tempfile::TempDir, name: &str, text: &str) -> String {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

fn net() -> String {
    six_node().to_string_lossy().into_owned()
}

#[test]
fn check_reports_the_type() {
    let o = lve(&["check", &net()]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("type Bool * Bool"));
}

#[test]
fn denote_text_and_json() {
    let o = lve(&["denote", &net()]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert_eq!(text.lines().next(), Some("x3 x6 p"));
    assert_eq!(text.lines().count(), 5);

    let o = lve(&["denote", &net(), "--json"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(v.is_object());
}

#[test]
fn compare_reproduces_table_sizes() {
    for (order, table) in [("x1,x2,x4,x5", "16"), ("x5,x4,x2,x1", "32")] {
        let o = lve(&["compare", &net(), "--order", order]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        let text = stdout(&o);
        let vef = text.lines().find(|l| l.starts_with("vef ")).unwrap();
        assert_eq!(vef.split_whitespace().nth(1), Some(table));
        assert!(text.contains("factors of vel term match vef: yes"));
    }
}

#[test]
fn compare_output_is_stable() {
    let a = lve(&["compare", &net(), "--order", "x1,x2,x4,x5", "--json"]);
    let b = lve(&["compare", &net(), "--order", "x1,x2,x4,x5", "--json"]);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn unknown_variable_is_an_input_error() {
    let o = lve(&["vef", &net(), "--order", "zz"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error:"));
}

#[test]
fn parse_error_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(&dir, "bad.lve", "x = ;\nin x");
    assert_eq!(lve(&["check", &f]).status.code(), Some(2));
}

#[test]
fn stochastic_check_can_be_disabled() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(&dir, "loose.lve", "matrix C : -> Bool = [0.5, 0.7];\nv = C();\nin v");
    assert_eq!(lve(&["check", &f]).status.code(), Some(2));
    assert!(lve(&["--no-stochastic-check", "check", &f]).status.success());
}

#[test]
fn small_suite_passes() {
    let o = lve(&["suite", "--instances", "3", "--nodes", "5", "--quiet"]);
    assert!(o.status.success(), "{}", stdout(&o));
}

#[test]
fn generate_is_deterministic_and_loadable() {
    let a = lve(&["--seed", "7", "generate", "--nodes", "5"]);
    let b = lve(&["--seed", "7", "generate", "--nodes", "5"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let dir = tempfile::tempdir().unwrap();
    let f = write(&dir, "net.json", &stdout(&a));
    assert!(lve(&["check", &f]).status.success());
}

#[test]
fn orderings_are_labelled_as_heuristic() {
    let o = lve(&["orderings", &net(), "--heuristic", "min-degree"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert_eq!(text.lines().next(), Some("x1,x4,x2,x5"));
    assert!(text.contains("heuristic"));
}

#[test]
fn trace_is_json_lines() {
    let o = lve(&["vel", &net(), "--order", "x1,x2,x4,x5", "--trace", "--json"]);
    assert!(o.status.success());
    let lines: Vec<serde_json::Value> = stdout(&o).lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 15);
    assert_eq!(lines[0]["rule"], "start");
}

#[test]
fn emitted_term_can_be_checked_again() {
    let o = lve(&["vel", &net(), "--order", "x1,x2,x4,x5", "--emit-term"]);
    assert!(o.status.success());
    let dir = tempfile::tempdir().unwrap();
    let f = write(&dir, "out.lve", &stdout(&o));
    let c = lve(&["check", &f]);
    assert!(c.status.success(), "{}", String::from_utf8_lossy(&c.stderr));
    let before = stdout(&lve(&["denote", &net()]));
    let after = stdout(&lve(&["denote", &f]));
    assert_eq!(before, after);
}
