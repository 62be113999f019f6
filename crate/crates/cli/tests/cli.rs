use std::io::Write;
use std::path::Path;
use std::process::{Command, Output, Stdio};

fn selfnest(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_selfnest")).args(args).output().unwrap()
}

fn with_stdin(args: &[&str], input: &str) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_selfnest"))
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(input.as_bytes()).unwrap();
    child.wait_with_output().unwrap()
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_owned()
}

#[test]
fn single_vertex() {
    assert_eq!(stdout(&selfnest(&["gen", "--size", "1"])).trim(), "()");
}

#[test]
fn gen_is_deterministic() {
    let a = stdout(&selfnest(&["gen", "--size", "40", "--seed", "9"]));
    assert_eq!(a, stdout(&selfnest(&["gen", "--size", "40", "--seed", "9"])));
    assert_ne!(a, stdout(&selfnest(&["gen", "--size", "40", "--seed", "10"])));
    assert_eq!(a.matches('(').count(), 40);
}

#[test]
fn distance_methods_agree() {
    let dir = tempfile::tempdir().unwrap();
    for seed in 0..5 {
        let s = seed.to_string();
        let a = write(dir.path(), "a", &stdout(&selfnest(&["gen", "--size", "8", "--seed", &s])));
        let b = write(dir.path(), "b", &stdout(&selfnest(&["gen", "--size", "7", "--seed", &s])));
        let tree = stdout(&selfnest(&["distance", &a, &b]));
        for m in ["oracle", "dag"] {
            assert_eq!(stdout(&selfnest(&["distance", "--method", m, &a, &b])), tree);
        }
    }
}

#[test]
fn reduce_expand_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let t = stdout(&selfnest(&["gen", "--size", "50", "--seed", "3"]));
    let tf = write(dir.path(), "t", &t);
    let dag = write(dir.path(), "d", &stdout(&selfnest(&["reduce", &tf])));
    let back = write(dir.path(), "e", &stdout(&selfnest(&["expand", &dag])));
    assert_eq!(stdout(&selfnest(&["iso", &tf, &back])).trim(), "true");
}

#[test]
fn approximation_is_self_nested() {
    let t = stdout(&selfnest(&["gen", "--size", "60", "--seed", "2"]));
    let approx = stdout(&with_stdin(&["approximate", "-"], &t));
    assert_eq!(stdout(&with_stdin(&["selfnested", "-"], &approx)).trim(), "true");
}

#[test]
fn frequency_table_has_twelve_cells() {
    let out = stdout(&selfnest(&["freq", "--maxH", "5", "--maxD", "4"]));
    let mut lines = out.lines();
    assert_eq!(lines.next(), Some("H,d,numerator,denominator,value"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 12);
    assert!(rows.iter().any(|r| r.starts_with("3,3,201,8435,")));
}

#[test]
fn exit_codes() {
    assert_eq!(selfnest(&["gen", "--bogus"]).status.code(), Some(1));
    assert_eq!(selfnest(&["distance", "--method", "nope", "-", "-"]).status.code(), Some(1));
    assert_eq!(with_stdin(&["canon", "-"], "(()").status.code(), Some(2));
    assert_eq!(selfnest(&["canon", "/nonexistent/tree.txt"]).status.code(), Some(2));
    let refused = selfnest(&["worstcase", "--height", "3", "--degree", "4", "--verify"]);
    assert_eq!(refused.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&refused.stderr).contains("refused"));
}

#[test]
fn prediction_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let p = |name: &str| dir.path().join(name).to_str().unwrap().to_owned();
    let (train, test, model) = (p("train.csv"), p("test.csv"), p("model.txt"));
    for (out, seed) in [(&train, "1"), (&test, "2")] {
        let args = ["dataset", "--pairs", "60", "--min-size", "10", "--max-size", "30", "--seed", seed, "--out", out];
        stdout(&selfnest(&args));
    }
    stdout(&selfnest(&["train", &train, "--seed", "1", "--out", &model]));
    let again = p("model2.txt");
    stdout(&selfnest(&["train", &train, "--seed", "1", "--out", &again]));
    assert_eq!(std::fs::read(&model).unwrap(), std::fs::read(&again).unwrap());

    let a = write(dir.path(), "a", "((())())");
    let b = write(dir.path(), "b", "(()()())");
    let predicted: f64 = stdout(&selfnest(&["predict", "--model", &model, &a, &b])).trim().parse().unwrap();
    assert!(predicted.is_finite());

    let eval = stdout(&selfnest(&["eval", "--model", &model, &test]));
    for key in ["count", "excluded", "mean", "q1", "median", "q3"] {
        assert!(eval.lines().any(|l| l.starts_with(key)), "missing {key} in {eval}");
    }
    assert!(stdout(&selfnest(&["eval", "--raw", &test])).contains("median"));
}
