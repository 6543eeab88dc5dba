//! End-to-end CLI runs: output and exit codes.

use kmt::frontend::cli::run_with;
use std::io::Write;

fn run(args: &[&str]) -> (i32, String, String) {
    let args: Vec<String> = std::iter::once("kmt").chain(args.iter().copied()).map(String::from).collect();
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = run_with(args, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

#[test]
fn equivalent_terms_exit_zero() {
    let (code, out, _) = run(&["--theory", "incnat", "equiv", "inc(x); x>0", "inc(x)"]);
    assert_eq!(code, 0, "{out}");
    assert!(out.starts_with("equivalent"));
}

#[test]
fn repeated_action_is_distinguished() {
    let (code, out, _) = run(&["--theory", "bitvec", "equiv", "set(b); set(b)", "set(b)"]);
    assert_eq!(code, 1);
    assert!(out.contains("not equivalent") && out.contains("counterexample"), "{out}");
    assert!(out.contains("actions (2): set(b); set(b)") || out.contains("actions (1): set(b)"), "{out}");
}

#[test]
fn emptiness_codes() {
    let (code, out, _) = run(&["empty", "x>0; ~x>0"]);
    assert_eq!(code, 0, "{out}");
    let (code, out, _) = run(&["empty", "x:=5; x>3"]);
    assert_eq!(code, 1);
    assert!(out.contains("witness") && out.contains("x:=5"), "{out}");
}

#[test]
fn normalize_prints_a_normal_form() {
    let (code, out, _) = run(&["normalize", "inc(x)*; x>2"]);
    assert_eq!(code, 0);
    assert!(out.contains("x>2") && out.contains("inc(x)"), "{out}");
}

#[test]
fn oracle_equivalence() {
    let (code, out, _) = run(&["--states", "4", "--trace-len", "3", "oracle-equiv", "inc(x)*", "true + inc(x)*; inc(x)"]);
    assert_eq!(code, 0, "{out}");
    let (code, _, _) = run(&["oracle-equiv", "inc(x)", "inc(x); inc(x)"]);
    assert_eq!(code, 1);
}

#[test]
fn usage_errors_exit_two() {
    for args in [
        &["equiv", "inc(x", "inc(x)"][..],
        &["--theory", "nosuch", "empty", "true"][..],
        &["empty", "frob(x)"][..],
        &["empty", "~inc(x)"][..],
        &[][..],
        &["--bogus-flag"][..],
    ] {
        let (code, _, err) = run(args);
        assert_eq!(code, 2, "{args:?}: {err}");
        assert!(!err.is_empty());
    }
}

#[test]
fn fuel_exhaustion_exits_three() {
    let (code, _, err) = run(&["--fuel", "3", "normalize", "(inc(x); x>1)*; x>5"]);
    assert_eq!(code, 3, "{err}");
    assert!(err.contains("error"));
}

#[test]
fn help_and_version_exit_zero() {
    let (code, out, _) = run(&["--help"]);
    assert_eq!(code, 0);
    assert!(out.contains("equiv") && out.contains("validate-theory"));
    assert_eq!(run(&["--version"]).0, 0);
}

#[test]
fn validate_builtin_theory() {
    let (code, out, _) = run(&["--theory", "bitvec", "--trace-len", "3", "validate-theory"]);
    assert_eq!(code, 0, "{out}");
    assert!(out.contains("theory bitvec: pass"), "{out}");
}

#[test]
fn dot_output() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("aut.dot");
    let (code, out, err) = run(&["dot", "inc(x)*; x>2", "-o", path.to_str().unwrap()]);
    assert_eq!(code, 0, "{err}");
    assert!(out.contains("2 states"), "{out}");
    let dot = std::fs::read_to_string(&path).unwrap();
    assert!(dot.starts_with("digraph"));
}

#[test]
fn batch_reports_each_line_and_the_worst_code() {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    writeln!(f, "# comment").unwrap();
    writeln!(f, "equiv inc(x); x>0 <=> inc(x)").unwrap();
    writeln!(f).unwrap();
    writeln!(f, "empty x:=5; x>3").unwrap();
    writeln!(f, "normalize inc(x)*").unwrap();
    let (code, out, _) = run(&["--batch", f.path().to_str().unwrap()]);
    assert_eq!(code, 1, "{out}");
    assert!(out.contains("[line 2] exit 0\nequivalent"), "{out}");
    assert!(out.contains("[line 4] exit 1\nnonempty"), "{out}");
    assert!(out.contains("[line 5] exit 0"), "{out}");

    writeln!(f, "frobnicate x").unwrap();
    let (code, out, _) = run(&["--batch", f.path().to_str().unwrap()]);
    assert_eq!(code, 2, "{out}");
    assert!(out.contains("[line 6] exit 2\nerror: unknown batch command"), "{out}");
}

#[test]
fn batch_and_subcommand_conflict() {
    let (code, _, err) = run(&["--batch", "x", "empty", "true"]);
    assert_eq!(code, 2);
    assert!(err.contains("cannot be combined"));
    assert_eq!(run(&["--batch", "/nonexistent/queries"]).0, 2);
}
