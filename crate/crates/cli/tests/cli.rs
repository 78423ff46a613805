use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn corpus(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus").join(name)
}

fn tvlp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tvlp")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn merge_interpretation_is_a_model_but_not_strong() {
    let (p, m) = (corpus("merge.pl"), corpus("merge.interp"));
    let o = tvlp(&["check", "--program", path(&p), "--interp", path(&m)]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let text = stdout(&o);
    assert!(text.contains("model: yes"));
    assert!(text.contains("strong model: no"));
    assert!(text.contains("merge([],a,a)"), "{text}");
}

#[test]
fn requested_condition_decides_the_exit_code() {
    let (p, m) = (corpus("merge.pl"), corpus("merge.interp"));
    let o = tvlp(&["check", "--program", path(&p), "--interp", path(&m), "--condition", "strong", "--json"]);
    assert_eq!(o.status.code(), Some(1));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["reports"][0]["holds"], false);
    assert_eq!(v["reports"][0]["violations"][0]["kind"], "strong mismatch");
}

#[test]
fn fair_rule_finds_the_answer_that_strict_selection_misses() {
    let p = corpus("floundering.pl");
    let o = tvlp(&["solve", "--program", path(&p), "--goal", "p", "--rule", "fair", "--budget", "10000", "--all", "--json"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["answers"].as_array().unwrap().len(), 1);
    assert_eq!(v["exhaustive"], true);
    let strict = tvlp(&["solve", "--program", path(&p), "--goal", "p", "--rule", "strict_leftmost", "--budget", "10000"]);
    assert_eq!(strict.status.code(), Some(3));
}

#[test]
fn fitting_fixpoint_of_p_not_p_leaves_p_inadmissible() {
    let o = tvlp(&["fixpoint", "--op", "fitting", "--program", path(&corpus("pnotp.pl"))]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("pred p/0\ndefault I"), "{text}");
}

#[test]
fn enumerate_splits_even_numbers() {
    let o = tvlp(&[
        "enumerate",
        "--program",
        path(&corpus("even_odd/e1_o1.pl")),
        "--universe",
        "depth=2 functors=0/0,s/1",
        "--pred",
        "even/1",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("success set (2):\n  even(0)\n  even(s(s(0)))\n"), "{text}");
    assert!(text.contains("finite failure set (1):\n  even(s(0))\n"), "{text}");
}

#[test]
fn usage_and_parse_errors_exit_2() {
    assert_eq!(tvlp(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(tvlp(&["solve", "--program", path(&corpus("merge.pl"))]).status.code(), Some(2));
    assert_eq!(tvlp(&["solve", "--program", "/nonexistent.pl", "--goal", "p"]).status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.pl");
    std::fs::write(&bad, "p :- .\n").unwrap();
    let o = tvlp(&["normalize", "--program", path(&bad)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains(":1:"));
    assert_eq!(tvlp(&["--help"]).status.code(), Some(0));
}

#[test]
fn looping_goal_exhausts_the_budget() {
    let o = tvlp(&["solve", "--program", path(&corpus("pnotp.pl")), "--goal", "p", "--budget", "50"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stdout(&o).contains("budget exhausted"));
}

#[test]
fn debug_locates_the_mutated_clause_and_replays_its_transcript() {
    let dir = tempfile::tempdir().unwrap();
    let src = std::fs::read_to_string(corpus("merge.pl"))
        .unwrap()
        .replace("merge(A.As, B.Bs, B.Cs) :- A > B", "merge(A.As, B.Bs, A.Cs) :- A > B");
    let prog = dir.path().join("mutant.pl");
    std::fs::write(&prog, src).unwrap();
    let saved = dir.path().join("session.txt");
    let m = corpus("merge.interp");
    let goal = "merge([2],[1],X)";
    let first = tvlp(&[
        "debug", "--program", path(&prog), "--goal", goal, "--oracle", "interp", "--interp", path(&m),
        "--save-transcript", path(&saved), "--json",
    ]);
    assert_eq!(first.status.code(), Some(1), "{}", String::from_utf8_lossy(&first.stderr));
    let v: serde_json::Value = serde_json::from_slice(&first.stdout).unwrap();
    assert_eq!(v["diagnosis"]["kind"], "incorrect_clause_instance");
    assert_eq!(v["diagnosis"]["clause"]["number"], 4);
    let replay = tvlp(&[
        "debug", "--program", path(&prog), "--goal", goal, "--oracle", "transcript", "--transcript", path(&saved), "--json",
    ]);
    assert_eq!(replay.status.code(), Some(1));
    assert_eq!(first.stdout, replay.stdout);
}

#[test]
fn human_oracle_reads_verdicts_from_stdin() {
    use std::io::Write;
    use std::process::Stdio;
    let dir = tempfile::tempdir().unwrap();
    let src = std::fs::read_to_string(corpus("merge.pl"))
        .unwrap()
        .replace("merge(A.As, B.Bs, B.Cs) :- A > B", "merge(A.As, B.Bs, A.Cs) :- A > B");
    let prog = dir.path().join("mutant.pl");
    std::fs::write(&prog, src).unwrap();
    let mut child = Command::new(env!("CARGO_BIN_EXE_tvlp"))
        .args(["debug", "--program", path(&prog), "--goal", "merge([2],[1],X)"])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(b"maybe\nerroneous\nc\n").unwrap();
    let o = child.wait_with_output().unwrap();
    let text = stdout(&o);
    assert_eq!(o.status.code(), Some(1), "{text}");
    assert!(text.contains("please answer c, e or i"));
    assert!(text.contains("merge/3 clause 4"), "{text}");
}
